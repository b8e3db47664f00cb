//! Gauss rules on the unit interval and collapsed (Duffy) Gauss rules on the
//! reference triangle `{(ξ, η) : ξ, η ≥ 0, ξ + η ≤ 1}`.

use crate::error::{Error, Result};

pub const MAX_DEGREE: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule<const D: usize> {
    pub points: Vec<[f64; D]>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

impl<const D: usize> QuadratureRule<D> {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(&[f64; D]) -> f64) -> f64 {
        self.points.iter().zip(&self.weights).map(|(p, w)| w * f(p)).sum()
    }
}

pub type EdgeRule = QuadratureRule<1>;
pub type TriangleRule = QuadratureRule<2>;

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // three-term recurrence for P_n and P_{n-1}
            let (mut p0, mut p1) = (1.0, z);
            for j in 2..=n {
                let jf = j as f64;
                let p2 = ((2.0 * jf - 1.0) * z * p1 - (jf - 1.0) * p0) / jf;
                p0 = p1;
                p1 = p2;
            }
            dp = nf * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Gauss rule on `[0, 1]` exact for polynomials of degree `degree`.
pub fn edge_rule(degree: usize) -> Result<EdgeRule> {
    if degree > MAX_DEGREE {
        return Err(Error::UnsupportedDegree(degree));
    }
    let n = degree / 2 + 1;
    let (x, w) = gauss_legendre(n);
    Ok(QuadratureRule {
        points: x.iter().map(|&t| [0.5 * (t + 1.0)]).collect(),
        weights: w.iter().map(|&v| 0.5 * v).collect(),
        degree,
    })
}

/// Rule on the reference triangle exact for polynomials of total degree `degree`.
///
/// Tensor Gauss rule on the unit square pushed through the collapse
/// `ξ = u, η = v (1 - u)`; the Jacobian `1 - u` raises the degree in `u` by one.
pub fn triangle_rule(degree: usize) -> Result<TriangleRule> {
    if degree > MAX_DEGREE {
        return Err(Error::UnsupportedDegree(degree));
    }
    let n = (degree + 2).div_ceil(2);
    let (x, w) = gauss_legendre(n);
    let mut points = Vec::with_capacity(n * n);
    let mut weights = Vec::with_capacity(n * n);
    for (xu, wu) in x.iter().zip(&w) {
        let u = 0.5 * (xu + 1.0);
        for (xv, wv) in x.iter().zip(&w) {
            let v = 0.5 * (xv + 1.0);
            points.push([u, v * (1.0 - u)]);
            weights.push(0.25 * wu * wv * (1.0 - u));
        }
    }
    Ok(QuadratureRule { points, weights, degree })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: u32) -> f64 {
        (1..=n).map(f64::from).product()
    }

    #[test]
    fn unit_area() {
        let r = triangle_rule(0).unwrap();
        assert!((r.weights.iter().sum::<f64>() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn cubic_on_interval() {
        let r = edge_rule(3).unwrap();
        assert_eq!(r.len(), 2);
        assert!((r.integrate(|p| p[0].powi(3)) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn monomials_on_triangle() {
        for degree in 0..=MAX_DEGREE {
            let r = triangle_rule(degree).unwrap();
            assert!(r.weights.iter().all(|&w| w > 0.0));
            for a in 0..=degree as u32 {
                for b in 0..=(degree as u32 - a) {
                    let exact = factorial(a) * factorial(b) / factorial(a + b + 2);
                    let got = r.integrate(|p| p[0].powi(a as i32) * p[1].powi(b as i32));
                    assert!((got - exact).abs() < 1e-14, "deg {degree}: x^{a} y^{b}: {got} vs {exact}");
                }
            }
        }
    }

    #[test]
    fn monomials_on_interval() {
        for degree in 0..=MAX_DEGREE {
            let r = edge_rule(degree).unwrap();
            for a in 0..=degree as i32 {
                let got = r.integrate(|p| p[0].powi(a));
                assert!((got - 1.0 / (a as f64 + 1.0)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn rejects_large_degree() {
        assert_eq!(triangle_rule(21), Err(Error::UnsupportedDegree(21)));
        assert_eq!(edge_rule(40), Err(Error::UnsupportedDegree(40)));
    }
}
