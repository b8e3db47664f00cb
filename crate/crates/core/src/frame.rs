//! Pointwise geometry of a curved element: position, Jacobian of the
//! parametric map, first fundamental form, discrete normal and conormal.

use nalgebra::{Matrix2, Matrix3x2, Vector2};

use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::reference::VERTICES;

#[derive(Debug, Clone, PartialEq)]
pub struct ElementFrame {
    pub x: Vec3,
    /// Columns are `∂F/∂ξ` and `∂F/∂η`.
    pub jacobian: Matrix3x2<f64>,
    pub metric: Matrix2<f64>,
    pub area_factor: f64,
    /// Unit normal of the discrete surface oriented along the exact normal.
    pub normal: Vec3,
    /// `J G⁻¹`, maps reference gradients to tangential gradients.
    pub jg_inv: Matrix3x2<f64>,
}

/// Frame at a point with the given basis values and reference gradients.
///
/// `exact_normal` is the normal of the exact surface at the closest point and
/// only fixes the orientation of `n_h`.
pub fn frame_from_basis(
    coords: &[Vec3],
    values: &[f64],
    grads: &[[f64; 2]],
    exact_normal: impl FnOnce(&Vec3) -> Result<Vec3>,
) -> Result<ElementFrame> {
    let mut x = Vec3::zeros();
    let mut d_xi = Vec3::zeros();
    let mut d_eta = Vec3::zeros();
    for ((c, v), g) in coords.iter().zip(values).zip(grads) {
        x += c * *v;
        d_xi += c * g[0];
        d_eta += c * g[1];
    }
    let jacobian = Matrix3x2::from_columns(&[d_xi, d_eta]);
    let metric = jacobian.transpose() * jacobian;
    let det = metric.determinant();
    if !(det > 0.0) {
        return Err(Error::SingularMetric(det));
    }
    let inv = Matrix2::new(metric[(1, 1)], -metric[(0, 1)], -metric[(1, 0)], metric[(0, 0)]) / det;
    let mut normal = d_xi.cross(&d_eta).normalize();
    if normal.dot(&exact_normal(&x)?) < 0.0 {
        normal = -normal;
    }
    Ok(ElementFrame { x, jacobian, metric, area_factor: det.sqrt(), normal, jg_inv: jacobian * inv })
}

impl ElementFrame {
    /// Tangential gradient `J G⁻¹ ∇̂v` of the function with the given nodal coefficients.
    pub fn tangent_gradient(&self, ref_grads: &[[f64; 2]], coeffs: &[f64]) -> Vec3 {
        let mut g = Vector2::zeros();
        for (rg, c) in ref_grads.iter().zip(coeffs) {
            g.x += rg[0] * c;
            g.y += rg[1] * c;
        }
        self.jg_inv * g
    }

    /// Tangential gradient of a single basis function.
    pub fn basis_gradient(&self, ref_grad: &[f64; 2]) -> Vec3 {
        self.jg_inv * Vector2::new(ref_grad[0], ref_grad[1])
    }

    /// Orientation-sensitive area factor: `(J₁ × J₂) · n_exact`.
    pub fn signed_area_factor(&self, exact_normal: &Vec3) -> f64 {
        self.jacobian.column(0).cross(&self.jacobian.column(1)).dot(exact_normal)
    }
}

/// Conormal data at a point of a boundary edge.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeFrame {
    pub frame: ElementFrame,
    /// Exterior unit conormal: tangent to the discrete surface, normal to the edge.
    pub conormal: Vec3,
    pub tangent: Vec3,
    /// `|dx/dt|` for the edge parameter `t ∈ [0, 1]`.
    pub line_factor: f64,
}

/// Conormal of local edge `edge` at reference point `xi` lying on that edge.
pub fn edge_frame(frame: ElementFrame, edge: usize, xi: [f64; 2]) -> Result<EdgeFrame> {
    let a = VERTICES[edge];
    let b = VERTICES[(edge + 1) % 3];
    let opp = VERTICES[(edge + 2) % 3];
    let dt = frame.jacobian * Vector2::new(b[0] - a[0], b[1] - a[1]);
    let line_factor = dt.norm();
    if !(line_factor > 0.0) {
        return Err(Error::DegenerateInput("zero-length edge tangent".into()));
    }
    let tangent = dt / line_factor;
    let mut conormal = tangent.cross(&frame.normal).normalize();
    let inward = frame.jacobian * Vector2::new(opp[0] - xi[0], opp[1] - xi[1]);
    if conormal.dot(&inward) > 0.0 {
        conormal = -conormal;
    }
    Ok(EdgeFrame { frame, conormal, tangent, line_factor })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reference::ReferenceElement;

    fn flat_normal(_: &Vec3) -> Result<Vec3> {
        Ok(Vec3::z())
    }

    fn linear_frame(coords: &[Vec3], p: [f64; 2]) -> ElementFrame {
        let r = ReferenceElement::new(1).unwrap();
        let (v, g) = r.eval(p);
        frame_from_basis(coords, &v, &g, flat_normal).unwrap()
    }

    #[test]
    fn reference_congruent_element() {
        let coords = [Vec3::zeros(), Vec3::x(), Vec3::y()];
        let f = linear_frame(&coords, [0.2, 0.3]);
        assert_eq!(f.jacobian, Matrix3x2::new(1.0, 0.0, 0.0, 1.0, 0.0, 0.0));
        assert!((f.area_factor - 1.0).abs() < 1e-15);
        assert_eq!(f.normal, Vec3::z());
    }

    #[test]
    fn stretched_element_area() {
        let coords = [Vec3::zeros(), Vec3::new(2.0, 0.0, 0.0), Vec3::y()];
        assert!((linear_frame(&coords, [0.1, 0.1]).area_factor - 2.0).abs() < 1e-15);
    }

    #[test]
    fn normal_follows_exact_orientation() {
        // clockwise vertex order still yields +z
        let coords = [Vec3::zeros(), Vec3::y(), Vec3::x()];
        assert_eq!(linear_frame(&coords, [0.3, 0.3]).normal, Vec3::z());
    }

    #[test]
    fn gradient_of_affine_function() {
        let coords = [Vec3::new(0.2, 0.1, 0.0), Vec3::new(1.0, 0.3, 0.0), Vec3::new(0.4, 0.9, 0.0)];
        let f = linear_frame(&coords, [0.3, 0.3]);
        let (_, g) = ReferenceElement::new(1).unwrap().eval([0.3, 0.3]);
        let coeffs: Vec<f64> = coords.iter().map(|c| c.x + 2.0 * c.y).collect();
        let grad = f.tangent_gradient(&g, &coeffs);
        assert!((grad - Vec3::new(1.0, 2.0, 0.0)).norm() < 1e-14);
        assert!(f.tangent_gradient(&g, &[4.0, 4.0, 4.0]).norm() < 1e-14);
    }

    #[test]
    fn hypotenuse_conormal() {
        let coords = [Vec3::zeros(), Vec3::x(), Vec3::y()];
        let xi = ReferenceElement::edge_point(1, 0.4);
        let ef = edge_frame(linear_frame(&coords, xi), 1, xi).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((ef.conormal - Vec3::new(s, s, 0.0)).norm() < 1e-15);
        assert!((ef.line_factor - 2f64.sqrt()).abs() < 1e-15);
        assert!(ef.conormal.dot(&ef.tangent).abs() < 1e-15);
        // the same edge seen from a clockwise element points the same way
        let cw = [Vec3::zeros(), Vec3::y(), Vec3::x()];
        let ef = edge_frame(linear_frame(&cw, xi), 1, xi).unwrap();
        assert!((ef.conormal - Vec3::new(s, s, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn singular_metric_reported() {
        let coords = [Vec3::zeros(), Vec3::x(), Vec3::new(2.0, 0.0, 0.0)];
        let r = ReferenceElement::new(1).unwrap();
        let (v, g) = r.eval([0.2, 0.2]);
        assert!(matches!(frame_from_basis(&coords, &v, &g, flat_normal), Err(Error::SingularMetric(_))));
    }
}
