//! Nitsche system for the Laplace-Beltrami Dirichlet problem:
//!
//! ```text
//! a(v, w) = (∇v, ∇w)_Γh − (ν·∇v, w)_∂Γh − (v, ν·∇w)_∂Γh + β/h (v, w)_∂Γh
//! l(w)    = (f∘p, w)_Γh − (g∘p_∂Γ, ν·∇w)_∂Γh + β/h (g∘p_∂Γ, w)_∂Γh
//! ```
//!
//! The matrix is kept as `K + β P` where `P` is the penalty mass scaled by
//! `1/h`, so the coercivity probe can sweep `β` without re-assembling.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::frame::edge_frame;
use crate::geometry::Vec3;
use crate::mesh::ParametricMesh;
use crate::problem::Problem;
use crate::solver::EnvelopeCholesky;
use crate::sparse::CsrMatrix;

pub const DEFAULT_BETA: f64 = 1.0e4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssemblyOptions {
    pub beta: f64,
    /// Exactness degree of the triangle rule; `None` uses `2k + 2`.
    pub triangle_degree: Option<usize>,
    /// Exactness degree of the edge rule; `None` uses `2k + 2`.
    pub edge_degree: Option<usize>,
    /// Scale the penalty of each boundary edge by its own chord length
    /// instead of the global mesh size.
    pub local_h: bool,
    /// Include the Nitsche boundary terms; disabling leaves the pure stiffness matrix.
    pub boundary_terms: bool,
}

impl Default for AssemblyOptions {
    fn default() -> Self {
        AssemblyOptions {
            beta: DEFAULT_BETA,
            triangle_degree: None,
            edge_degree: None,
            local_h: false,
            boundary_terms: true,
        }
    }
}

impl AssemblyOptions {
    pub fn with_beta(beta: f64) -> Self {
        AssemblyOptions { beta, ..Self::default() }
    }

    fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0) || !self.beta.is_finite() {
            return Err(Error::InvalidBeta(self.beta));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SparseSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    pub beta: f64,
    /// Mesh size in the `β/h` penalty scaling.
    pub h_used: f64,
}

impl SparseSystem {
    pub fn dim(&self) -> usize {
        self.rhs.len()
    }

    /// Relative asymmetry `max |A − Aᵀ| / max |A|`.
    pub fn relative_asymmetry(&self) -> f64 {
        let scale = self.matrix.max_abs();
        if scale > 0.0 {
            self.matrix.asymmetry() / scale
        } else {
            0.0
        }
    }
}

/// The two `β`-independent matrices of the bilinear form.
#[derive(Debug, Clone, PartialEq)]
pub struct NitscheMatrices {
    /// Stiffness plus the two symmetric consistency terms.
    pub consistent: CsrMatrix,
    /// Boundary mass scaled by `1/h`.
    pub penalty: CsrMatrix,
    pub h_used: f64,
}

impl NitscheMatrices {
    /// `K + β P` on the union of both sparsity patterns.
    pub fn combine(&self, beta: f64) -> CsrMatrix {
        let mut triplets = Vec::with_capacity(self.consistent.nnz() + self.penalty.nnz());
        for (m, scale) in [(&self.consistent, 1.0), (&self.penalty, beta)] {
            for r in 0..m.nrows {
                triplets.extend(m.row(r).map(|(c, v)| (r, c, scale * v)));
            }
        }
        CsrMatrix::from_triplets(self.consistent.nrows, self.consistent.ncols, &triplets)
    }
}

type Local = (Vec<usize>, Vec<f64>);

fn element_degree(mesh: &ParametricMesh, o: &AssemblyOptions) -> usize {
    o.triangle_degree.unwrap_or_else(|| mesh.assembly_degree())
}

fn edge_degree(mesh: &ParametricMesh, o: &AssemblyOptions) -> usize {
    o.edge_degree.unwrap_or_else(|| mesh.assembly_degree())
}

fn edge_h(mesh: &ParametricMesh, edge: usize, o: &AssemblyOptions) -> f64 {
    if !o.local_h {
        return mesh.h;
    }
    let be = mesh.boundary_edges[edge];
    let conn = &mesh.elements[be.element];
    (mesh.nodes[conn[be.local_edge]] - mesh.nodes[conn[(be.local_edge + 1) % 3]]).norm()
}

fn dense_to_triplets(conn: &[usize], local: &[f64], out: &mut Vec<(usize, usize, f64)>) {
    let n = conn.len();
    for i in 0..n {
        for j in 0..n {
            out.push((conn[i], conn[j], local[i * n + j]));
        }
    }
}

/// Matrices of the bilinear form, without the load.
pub fn assemble_matrices(
    mesh: &ParametricMesh,
    problem: &Problem,
    options: &AssemblyOptions,
) -> Result<NitscheMatrices> {
    let n = mesh.reference.num_nodes();
    let tab = mesh.reference.tabulate_degree(element_degree(mesh, options))?;
    let elements: Vec<Local> = (0..mesh.num_elements())
        .into_par_iter()
        .map(|e| {
            let mut a = vec![0.0; n * n];
            for ((v, g), w) in tab.values.iter().zip(&tab.grads).zip(&tab.rule.weights) {
                let f = mesh.frame_with(problem, e, v, g)?;
                let dx = w * f.area_factor;
                let grads: Vec<Vec3> = g.iter().map(|gi| f.basis_gradient(gi)).collect();
                for i in 0..n {
                    for j in 0..n {
                        a[i * n + j] += dx * grads[i].dot(&grads[j]);
                    }
                }
            }
            Ok((mesh.elements[e].clone(), a))
        })
        .collect::<Result<_>>()?;

    let edges: Vec<(Vec<usize>, Vec<f64>, Vec<f64>)> = if options.boundary_terms {
        let etab = mesh.reference.tabulate_edges(edge_degree(mesh, options))?;
        (0..mesh.boundary_edges.len())
            .into_par_iter()
            .map(|b| {
                let be = mesh.boundary_edges[b];
                let t = &etab[be.local_edge];
                let inv_h = 1.0 / edge_h(mesh, b, options);
                let mut k = vec![0.0; n * n];
                let mut p = vec![0.0; n * n];
                for (q, w) in t.rule.weights.iter().enumerate() {
                    let (v, g) = (&t.values[q], &t.grads[q]);
                    let xi = t.rule.points[q];
                    let frame = mesh.frame_with(problem, be.element, v, g)?;
                    let ef = edge_frame(frame, be.local_edge, xi)
                        .map_err(|_| Error::DegenerateEdge { element: be.element, edge: be.local_edge })?;
                    let ds = w * ef.line_factor;
                    let dn: Vec<f64> = g.iter().map(|gi| ef.conormal.dot(&ef.frame.basis_gradient(gi))).collect();
                    for i in 0..n {
                        for j in 0..n {
                            k[i * n + j] -= ds * (dn[j] * v[i] + v[j] * dn[i]);
                            p[i * n + j] += ds * inv_h * v[i] * v[j];
                        }
                    }
                }
                Ok((mesh.elements[be.element].clone(), k, p))
            })
            .collect::<Result<_>>()?
    } else {
        Vec::new()
    };

    let dim = mesh.num_nodes();
    let mut kt = Vec::with_capacity((elements.len() + edges.len()) * n * n);
    for (conn, a) in &elements {
        dense_to_triplets(conn, a, &mut kt);
    }
    let mut pt = Vec::with_capacity(edges.len() * n * n);
    for (conn, k, p) in &edges {
        dense_to_triplets(conn, k, &mut kt);
        dense_to_triplets(conn, p, &mut pt);
    }
    Ok(NitscheMatrices {
        consistent: CsrMatrix::from_triplets(dim, dim, &kt),
        penalty: CsrMatrix::from_triplets(dim, dim, &pt),
        h_used: mesh.h,
    })
}

/// Load vector for the load `f` (evaluated at the quadrature point of `Γ_h`)
/// and the Dirichlet data `g` (evaluated at the boundary projection of the
/// edge quadrature point).
pub fn assemble_rhs_with<F, G>(
    mesh: &ParametricMesh,
    problem: &Problem,
    options: &AssemblyOptions,
    f: F,
    g: G,
) -> Result<Vec<f64>>
where
    F: Fn(&Vec3) -> Result<f64> + Sync,
    G: Fn(&Vec3) -> Result<f64> + Sync,
{
    options.validate()?;
    let n = mesh.reference.num_nodes();
    let tab = mesh.reference.tabulate_degree(element_degree(mesh, options))?;
    let elements: Vec<Local> = (0..mesh.num_elements())
        .into_par_iter()
        .map(|e| {
            let mut b = vec![0.0; n];
            for ((v, gr), w) in tab.values.iter().zip(&tab.grads).zip(&tab.rule.weights) {
                let fr = mesh.frame_with(problem, e, v, gr)?;
                let load = f(&fr.x)? * w * fr.area_factor;
                for i in 0..n {
                    b[i] += load * v[i];
                }
            }
            Ok((mesh.elements[e].clone(), b))
        })
        .collect::<Result<_>>()?;

    let edges: Vec<Local> = if options.boundary_terms {
        let etab = mesh.reference.tabulate_edges(edge_degree(mesh, options))?;
        (0..mesh.boundary_edges.len())
            .into_par_iter()
            .map(|b| {
                let be = mesh.boundary_edges[b];
                let t = &etab[be.local_edge];
                let penalty = options.beta / edge_h(mesh, b, options);
                let mut out = vec![0.0; n];
                for (q, w) in t.rule.weights.iter().enumerate() {
                    let (v, gr) = (&t.values[q], &t.grads[q]);
                    let xi = t.rule.points[q];
                    let frame = mesh.frame_with(problem, be.element, v, gr)?;
                    let ef = edge_frame(frame, be.local_edge, xi)
                        .map_err(|_| Error::DegenerateEdge { element: be.element, edge: be.local_edge })?;
                    let data = g(&problem.project_to_boundary(&ef.frame.x, be.tag)?)?;
                    let ds = w * ef.line_factor;
                    for i in 0..n {
                        let dn = ef.conormal.dot(&ef.frame.basis_gradient(&gr[i]));
                        out[i] += ds * data * (penalty * v[i] - dn);
                    }
                }
                Ok((mesh.elements[be.element].clone(), out))
            })
            .collect::<Result<_>>()?
    } else {
        Vec::new()
    };

    let mut rhs = vec![0.0; mesh.num_nodes()];
    for (conn, b) in elements.iter().chain(&edges) {
        for (g, v) in conn.iter().zip(b) {
            rhs[*g] += v;
        }
    }
    Ok(rhs)
}

/// Nitsche system with the problem's own load and Dirichlet data.
pub fn assemble_with(mesh: &ParametricMesh, problem: &Problem, options: &AssemblyOptions) -> Result<SparseSystem> {
    options.validate()?;
    let parts = assemble_matrices(mesh, problem, options)?;
    let rhs = assemble_rhs_with(mesh, problem, options, |x| problem.load(x), |x| problem.dirichlet(x))?;
    Ok(SparseSystem { matrix: parts.combine(options.beta), rhs, beta: options.beta, h_used: parts.h_used })
}

pub fn assemble(mesh: &ParametricMesh, beta: f64, problem: &Problem) -> Result<SparseSystem> {
    assemble_with(mesh, problem, &AssemblyOptions::with_beta(beta))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaProbe {
    pub beta: f64,
    pub positive_definite: bool,
}

/// Attempts a Cholesky factorization of `A(β)` for every `β` of the grid.
pub fn min_stable_beta_probe(mesh: &ParametricMesh, problem: &Problem, beta_grid: &[f64]) -> Result<Vec<BetaProbe>> {
    if beta_grid.is_empty() {
        return Err(Error::InvalidArgument("empty beta grid".into()));
    }
    if let Some(&bad) = beta_grid.iter().find(|b| !(**b > 0.0)) {
        return Err(Error::InvalidBeta(bad));
    }
    let parts = assemble_matrices(mesh, problem, &AssemblyOptions::default())?;
    Ok(beta_grid
        .par_iter()
        .map(|&beta| BetaProbe { beta, positive_definite: EnvelopeCholesky::factor(&parts.combine(beta)).is_ok() })
        .collect())
}

/// Whether the successful `β` values of a probe form an upper set of the grid.
pub fn is_upward_closed(probe: &[BetaProbe]) -> bool {
    let mut sorted = probe.to_vec();
    sorted.sort_by(|a, b| a.beta.total_cmp(&b.beta));
    sorted.windows(2).all(|w| !w[0].positive_definite || w[1].positive_definite)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_mesh;

    #[test]
    fn rejects_nonpositive_beta() {
        let p = Problem::flat_square(1);
        let m = build_mesh(2, 1, &p).unwrap();
        assert_eq!(assemble(&m, 0.0, &p), Err(Error::InvalidBeta(0.0)));
        assert_eq!(assemble(&m, -1.0, &p), Err(Error::InvalidBeta(-1.0)));
    }

    #[test]
    fn stiffness_kernel_contains_constants() {
        let p = Problem::torus();
        let m = build_mesh(4, 2, &p).unwrap();
        let o = AssemblyOptions { boundary_terms: false, ..AssemblyOptions::default() };
        let parts = assemble_matrices(&m, &p, &o).unwrap();
        let a = &parts.consistent;
        let r = a.mul_vec(&vec![1.0; m.num_nodes()]);
        assert!(r.iter().all(|v| v.abs() < 1e-10 * a.max_abs()));
        assert_eq!(parts.penalty.nnz(), 0);
    }

    #[test]
    fn zero_data_gives_zero_rhs() {
        let p = Problem::torus();
        let m = build_mesh(4, 1, &p).unwrap();
        let b = assemble_rhs_with(&m, &p, &AssemblyOptions::default(), |_| Ok(0.0), |_| Ok(0.0)).unwrap();
        assert!(b.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn symmetric_on_curved_mesh() {
        let p = Problem::torus();
        let m = build_mesh(4, 3, &p).unwrap();
        let s = assemble(&m, DEFAULT_BETA, &p).unwrap();
        assert_eq!(s.dim(), m.num_nodes());
        assert!(s.relative_asymmetry() <= 1e-12);
        assert_eq!(s.h_used, m.h);
    }

    #[test]
    fn flat_square_area_and_perimeter() {
        // 1ᵀ K 1 vanishes; 1ᵀ P 1 is perimeter / h
        let p = Problem::flat_square(1);
        let m = build_mesh(4, 2, &p).unwrap();
        let parts = assemble_matrices(&m, &p, &AssemblyOptions::default()).unwrap();
        let ones = vec![1.0; m.num_nodes()];
        let total = |a: &CsrMatrix| a.mul_vec(&ones).iter().sum::<f64>();
        assert!(total(&parts.consistent).abs() < 1e-12);
        assert!((total(&parts.penalty) - 4.0 / m.h).abs() < 1e-12);
    }

    #[test]
    fn probe_on_small_mesh() {
        let p = Problem::torus_simple();
        let m = build_mesh(4, 2, &p).unwrap();
        let probe = min_stable_beta_probe(&m, &p, &[1e-3, 1e-1, 10.0, 1e4]).unwrap();
        assert!(probe.last().unwrap().positive_definite);
        assert!(!probe[0].positive_definite);
        assert!(is_upward_closed(&probe));
    }
}
