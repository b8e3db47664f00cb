//! Solvers for the symmetric positive definite Nitsche system.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::assembly::SparseSystem;
use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

pub const DEFAULT_REL_TOL: f64 = 1.0e-12;
/// Largest dimension for which the dense Cholesky fallback is attempted.
pub const DENSE_LIMIT: usize = 2000;
const PARALLEL_ROWS: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMethod {
    Direct,
    Iterative,
}

impl SolveMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolveMethod::Direct => "direct",
            SolveMethod::Iterative => "iterative",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub solution: Vec<f64>,
    pub iterations: usize,
    /// `‖Ax − b‖ / ‖b‖`, recomputed from the returned solution.
    pub relative_residual: f64,
    pub method: SolveMethod,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Row-parallel `y = A x`; each row is still summed left to right.
fn matvec(a: &CsrMatrix, x: &[f64], y: &mut [f64]) {
    if a.nrows < PARALLEL_ROWS {
        return a.mul_vec_into(x, y);
    }
    y.par_iter_mut().enumerate().for_each(|(r, yr)| {
        let mut acc = 0.0;
        for k in a.row_ptr[r]..a.row_ptr[r + 1] {
            acc += a.values[k] * x[a.col_idx[k]];
        }
        *yr = acc;
    });
}

pub fn relative_residual(a: &CsrMatrix, x: &[f64], b: &[f64]) -> f64 {
    let mut ax = vec![0.0; b.len()];
    matvec(a, x, &mut ax);
    let r: Vec<f64> = b.iter().zip(&ax).map(|(b, ax)| b - ax).collect();
    let nb = norm(b);
    if nb > 0.0 {
        norm(&r) / nb
    } else {
        norm(&r)
    }
}

/// Jacobi-preconditioned conjugate gradients from `x = 0`.
///
/// Convergence is declared on the true residual; when the recursive residual
/// drops below the tolerance but the true one does not, the iteration is
/// restarted from the true residual.
pub fn pcg(a: &CsrMatrix, b: &[f64], rel_tol: f64, max_iter: usize) -> Result<(Vec<f64>, usize)> {
    let n = b.len();
    let diag = a.diagonal();
    if let Some(d) = diag.iter().find(|d| !(**d > 0.0)) {
        return Err(Error::NotPositiveDefinite(format!("nonpositive diagonal entry {d:e}")));
    }
    let inv_diag: Vec<f64> = diag.iter().map(|d| 1.0 / d).collect();
    let nb = norm(b);
    let mut x = vec![0.0; n];
    if nb == 0.0 {
        return Ok((x, 0));
    }
    let target = rel_tol * nb;
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    for it in 1..=max_iter {
        matvec(a, &p, &mut ap);
        let curvature = dot(&p, &ap);
        if !(curvature > 0.0) {
            return Err(Error::NotPositiveDefinite(format!(
                "conjugate gradient curvature {curvature:e} at iteration {it}"
            )));
        }
        let alpha = rz / curvature;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        if norm(&r) <= target {
            matvec(a, &x, &mut ap);
            for i in 0..n {
                r[i] = b[i] - ap[i];
            }
            if norm(&r) <= target {
                return Ok((x, it));
            }
            for i in 0..n {
                z[i] = r[i] * inv_diag[i];
                p[i] = z[i];
            }
            rz = dot(&r, &z);
            continue;
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::MaxIterationsExceeded { iterations: max_iter, residual: norm(&r) / nb })
}

/// Dense Cholesky solve, used as fallback and as test oracle.
pub fn dense_cholesky_solve(a: &CsrMatrix, b: &[f64]) -> Result<Vec<f64>> {
    let chol = a
        .to_dense()
        .cholesky()
        .ok_or_else(|| Error::NotPositiveDefinite("dense Cholesky factorization failed".into()))?;
    Ok(chol.solve(&DVector::from_column_slice(b)).iter().copied().collect())
}

pub fn dense_cholesky_solve_matrix(a: DMatrix<f64>, b: &[f64]) -> Result<Vec<f64>> {
    let chol = a.cholesky().ok_or_else(|| Error::NotPositiveDefinite("dense Cholesky factorization failed".into()))?;
    Ok(chol.solve(&DVector::from_column_slice(b)).iter().copied().collect())
}

/// CG with Jacobi preconditioning, falling back to a dense Cholesky solve for
/// systems of dimension at most [`DENSE_LIMIT`] when the iteration fails.
pub fn solve_spd(system: &SparseSystem, rel_tol: f64) -> Result<SolveReport> {
    if !(rel_tol > 0.0 && rel_tol < 1.0) {
        return Err(Error::InvalidArgument(format!("relative tolerance must lie in (0, 1), got {rel_tol}")));
    }
    let a = &system.matrix;
    let b = &system.rhs;
    let n = b.len();
    let (solution, iterations, method) = match pcg(a, b, rel_tol, 50 * n.max(1)) {
        Ok((x, it)) => (x, it, SolveMethod::Iterative),
        Err(e) if n <= DENSE_LIMIT => match dense_cholesky_solve(a, b) {
            Ok(x) => (x, 0, SolveMethod::Direct),
            Err(_) => return Err(e),
        },
        Err(e) => return Err(e),
    };
    let relative_residual = relative_residual(a, &solution, b);
    if !(relative_residual <= rel_tol) {
        return Err(Error::MaxIterationsExceeded { iterations, residual: relative_residual });
    }
    Ok(SolveReport { solution, iterations, relative_residual, method })
}

/// Reverse Cuthill-McKee ordering; `perm[new] = old`.
pub fn reverse_cuthill_mckee(a: &CsrMatrix) -> Vec<usize> {
    let n = a.nrows;
    let degree: Vec<usize> = (0..n).map(|r| a.row_ptr[r + 1] - a.row_ptr[r]).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by_key(|&i| (degree[i], i));
    for &start in &by_degree {
        if visited[start] {
            continue;
        }
        visited[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut next: Vec<usize> = a.row(v).map(|(c, _)| c).filter(|&c| !visited[c]).collect();
            next.sort_by_key(|&c| (degree[c], c));
            for c in next {
                visited[c] = true;
                queue.push_back(c);
            }
        }
    }
    order.reverse();
    order
}

/// Envelope (skyline) Cholesky factorization `P A Pᵀ = L Lᵀ` under a
/// reverse Cuthill-McKee ordering.
#[derive(Debug, Clone)]
pub struct EnvelopeCholesky {
    perm: Vec<usize>,
    first: Vec<usize>,
    /// Row `i` of `L` holds columns `first[i]..=i`.
    rows: Vec<Vec<f64>>,
}

impl EnvelopeCholesky {
    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        let n = a.nrows;
        let perm = reverse_cuthill_mckee(a);
        let mut inv = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut first: Vec<usize> = (0..n).collect();
        for (new, &old) in perm.iter().enumerate() {
            for (c, _) in a.row(old) {
                first[new] = first[new].min(inv[c]);
            }
        }
        let mut rows: Vec<Vec<f64>> = (0..n).map(|i| vec![0.0; i - first[i] + 1]).collect();
        for (new, &old) in perm.iter().enumerate() {
            for (c, v) in a.row(old) {
                let j = inv[c];
                if j <= new {
                    rows[new][j - first[new]] = v;
                }
            }
        }
        for i in 0..n {
            let fi = first[i];
            let (done, rest) = rows.split_at_mut(i);
            let row = &mut rest[0];
            for j in fi..i {
                let fj = first[j];
                let lo = fi.max(fj);
                let rj = &done[j];
                let mut s = row[j - fi];
                for k in lo..j {
                    s -= row[k - fi] * rj[k - fj];
                }
                row[j - fi] = s / rj[j - fj];
            }
            let mut d = row[i - fi];
            for k in fi..i {
                d -= row[k - fi] * row[k - fi];
            }
            if !(d > 0.0) {
                return Err(Error::NotPositiveDefinite(format!("pivot {d:e} at step {i}")));
            }
            row[i - fi] = d.sqrt();
        }
        Ok(EnvelopeCholesky { perm, first, rows })
    }

    /// Number of stored factor entries.
    pub fn envelope_size(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = b.len();
        let mut y: Vec<f64> = self.perm.iter().map(|&old| b[old]).collect();
        for i in 0..n {
            let fi = self.first[i];
            let row = &self.rows[i];
            let mut s = y[i];
            for k in fi..i {
                s -= row[k - fi] * y[k];
            }
            y[i] = s / row[i - fi];
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let row = &self.rows[i];
            y[i] /= row[i - fi];
            let yi = y[i];
            for k in fi..i {
                y[k] -= row[k - fi] * yi;
            }
        }
        let mut x = vec![0.0; n];
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn system(matrix: CsrMatrix, rhs: Vec<f64>) -> SparseSystem {
        SparseSystem { matrix, rhs, beta: 1.0, h_used: 1.0 }
    }

    fn laplace_1d(n: usize) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        CsrMatrix::from_triplets(n, n, &t)
    }

    #[test]
    fn identity_in_one_iteration() {
        let b = vec![1.0, -2.0, 3.5];
        let r = solve_spd(&system(CsrMatrix::identity(3), b.clone()), 1e-12).unwrap();
        assert_eq!(r.solution, b);
        assert!(r.iterations <= 1);
        assert_eq!(r.method, SolveMethod::Iterative);
    }

    #[test]
    fn two_by_two_hand_solve() {
        let a = CsrMatrix::from_triplets(2, 2, &[(0, 0, 2.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 2.0)]);
        let r = solve_spd(&system(a, vec![3.0, 3.0]), 1e-12).unwrap();
        assert!((r.solution[0] - 1.0).abs() < 1e-14 && (r.solution[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let r = solve_spd(&system(laplace_1d(5), vec![0.0; 5]), 1e-12).unwrap();
        assert_eq!(r.solution, vec![0.0; 5]);
    }

    #[test]
    fn indefinite_is_reported() {
        let a = CsrMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 1, 2.0), (1, 0, 2.0), (1, 1, 1.0)]);
        let err = solve_spd(&system(a.clone(), vec![1.0, -1.0]), 1e-12).unwrap_err();
        assert!(matches!(err, Error::NotPositiveDefinite(_)));
        assert!(EnvelopeCholesky::factor(&a).is_err());
    }

    #[test]
    fn invalid_tolerance() {
        assert!(solve_spd(&system(laplace_1d(2), vec![1.0, 1.0]), 0.0).is_err());
        assert!(solve_spd(&system(laplace_1d(2), vec![1.0, 1.0]), 1.0).is_err());
    }

    #[test]
    fn envelope_matches_dense() {
        let a = laplace_1d(40);
        let b: Vec<f64> = (0..40).map(|i| (i as f64).sin()).collect();
        let x = EnvelopeCholesky::factor(&a).unwrap().solve(&b);
        let y = dense_cholesky_solve(&a, &b).unwrap();
        for (p, q) in x.iter().zip(&y) {
            assert!((p - q).abs() < 1e-12);
        }
    }

    #[test]
    fn rcm_is_a_permutation() {
        let mut p = reverse_cuthill_mckee(&laplace_1d(17));
        p.sort();
        assert_eq!(p, (0..17).collect::<Vec<_>>());
    }
}
