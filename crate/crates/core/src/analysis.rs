//! Discrete error norms against the manufactured solution and refinement studies.

use std::io::Write;

use nalgebra::Vector2;
use rayon::prelude::*;

use crate::assembly::{assemble_with, AssemblyOptions};
use crate::error::{Error, Result};
use crate::frame::{edge_frame, ElementFrame};
use crate::geometry::Vec3;
use crate::mesh::{build_mesh, ParametricMesh, BASE_DIVISIONS};
use crate::problem::Problem;
use crate::solver::{solve_spd, DEFAULT_REL_TOL};

pub const CSV_HEADER: &str = "k,level,h,dof,energy_error,l2_error,eoc_energy,eoc_l2";
pub const FD_STEP: f64 = 1.0e-6;

/// Sum with Neumaier compensation.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorMeasures {
    pub l2_error: f64,
    pub energy_error: f64,
    /// `‖∇_Γh e‖²`.
    pub grad_part: f64,
    /// `h ‖ν·∇_Γh e‖²` on the boundary.
    pub flux_part: f64,
    /// `h⁻¹ ‖e‖²` on the boundary.
    pub jump_part: f64,
}

/// How the tangential gradient of `u^e = u∘p` is evaluated on `Γ_h`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtensionGradient {
    /// `J G⁻¹ Jᵀ Dpᵀ ∇_Γ u`.
    Analytic,
    /// Central differences of `ξ ↦ u(p(F(ξ)))` with step [`FD_STEP`].
    FiniteDifference,
}

fn element_map(coords: &[Vec3], mesh: &ParametricMesh, xi: [f64; 2]) -> Vec3 {
    let (v, _) = mesh.reference.eval(xi);
    coords.iter().zip(&v).map(|(c, w)| c * *w).sum()
}

/// Tangential gradient of `u^e` on element `element` at reference point `xi`.
pub fn extension_gradient(
    mesh: &ParametricMesh,
    problem: &Problem,
    element: usize,
    xi: [f64; 2],
    frame: &ElementFrame,
    mode: ExtensionGradient,
) -> Result<Vec3> {
    let reference_grad = match mode {
        ExtensionGradient::Analytic => {
            let dp = problem.closest_point_jacobian(&frame.x)?;
            let ambient = dp.transpose() * problem.solution_gradient(&problem.closest_point(&frame.x)?)?;
            frame.jacobian.transpose() * ambient
        }
        ExtensionGradient::FiniteDifference => {
            let coords = mesh.element_coords(element);
            let u = |p: [f64; 2]| problem.solution(&element_map(&coords, mesh, p));
            let d = FD_STEP;
            Vector2::new(
                (u([xi[0] + d, xi[1]])? - u([xi[0] - d, xi[1]])?) / (2.0 * d),
                (u([xi[0], xi[1] + d])? - u([xi[0], xi[1] - d])?) / (2.0 * d),
            )
        }
    };
    Ok(frame.jg_inv * reference_grad)
}

fn check_coeffs(mesh: &ParametricMesh, coeffs: &[f64]) -> Result<()> {
    if coeffs.len() != mesh.num_nodes() {
        return Err(Error::InvalidArgument(format!(
            "coefficient vector has {} entries, mesh has {} nodes",
            coeffs.len(),
            mesh.num_nodes()
        )));
    }
    Ok(())
}

/// Error norms of `u^e − u_h` with the default quadrature degree `2k + 4`.
pub fn error_measures(mesh: &ParametricMesh, coeffs: &[f64], problem: &Problem) -> Result<ErrorMeasures> {
    error_measures_with(mesh, coeffs, problem, 2 * mesh.order + 4, ExtensionGradient::Analytic)
}

pub fn error_measures_with(
    mesh: &ParametricMesh,
    coeffs: &[f64],
    problem: &Problem,
    degree: usize,
    mode: ExtensionGradient,
) -> Result<ErrorMeasures> {
    check_coeffs(mesh, coeffs)?;
    let tab = mesh.reference.tabulate_degree(degree)?;
    let per_element: Vec<(f64, f64)> = (0..mesh.num_elements())
        .into_par_iter()
        .map(|e| {
            let local: Vec<f64> = mesh.elements[e].iter().map(|&g| coeffs[g]).collect();
            let (mut l2, mut grad) = (0.0, 0.0);
            for (q, ((v, g), w)) in tab.values.iter().zip(&tab.grads).zip(&tab.rule.weights).enumerate() {
                let f = mesh.frame_with(problem, e, v, g)?;
                let uh: f64 = v.iter().zip(&local).map(|(a, b)| a * b).sum();
                let err = problem.solution(&f.x)? - uh;
                let derr =
                    extension_gradient(mesh, problem, e, tab.rule.points[q], &f, mode)? - f.tangent_gradient(g, &local);
                let dx = w * f.area_factor;
                l2 += dx * err * err;
                grad += dx * derr.norm_squared();
            }
            Ok((l2, grad))
        })
        .collect::<Result<_>>()?;

    let etab = mesh.reference.tabulate_edges(degree)?;
    let per_edge: Vec<(f64, f64)> = (0..mesh.boundary_edges.len())
        .into_par_iter()
        .map(|b| {
            let be = mesh.boundary_edges[b];
            let t = &etab[be.local_edge];
            let local: Vec<f64> = mesh.elements[be.element].iter().map(|&g| coeffs[g]).collect();
            let (mut flux, mut jump) = (0.0, 0.0);
            for (q, w) in t.rule.weights.iter().enumerate() {
                let (v, g) = (&t.values[q], &t.grads[q]);
                let xi = t.rule.points[q];
                let frame = mesh.frame_with(problem, be.element, v, g)?;
                let ef = edge_frame(frame, be.local_edge, xi)
                    .map_err(|_| Error::DegenerateEdge { element: be.element, edge: be.local_edge })?;
                let uh: f64 = v.iter().zip(&local).map(|(a, b)| a * b).sum();
                let err = problem.solution(&ef.frame.x)? - uh;
                let derr = extension_gradient(mesh, problem, be.element, xi, &ef.frame, mode)?
                    - ef.frame.tangent_gradient(g, &local);
                let ds = w * ef.line_factor;
                flux += ds * ef.conormal.dot(&derr).powi(2);
                jump += ds * err * err;
            }
            Ok((flux, jump))
        })
        .collect::<Result<_>>()?;

    let h = mesh.h;
    let l2 = compensated_sum(per_element.iter().map(|p| p.0));
    let grad_part = compensated_sum(per_element.iter().map(|p| p.1));
    let flux_part = h * compensated_sum(per_edge.iter().map(|p| p.0));
    let jump_part = compensated_sum(per_edge.iter().map(|p| p.1)) / h;
    Ok(ErrorMeasures {
        l2_error: l2.sqrt(),
        energy_error: (grad_part + flux_part + jump_part).sqrt(),
        grad_part,
        flux_part,
        jump_part,
    })
}

/// `h⁻¹ ‖u_h − g∘p_∂Γ‖²` over the discrete boundary.
pub fn boundary_mismatch(mesh: &ParametricMesh, coeffs: &[f64], problem: &Problem) -> Result<f64> {
    check_coeffs(mesh, coeffs)?;
    let etab = mesh.reference.tabulate_edges(2 * mesh.order + 4)?;
    let per_edge: Vec<f64> = (0..mesh.boundary_edges.len())
        .into_par_iter()
        .map(|b| {
            let be = mesh.boundary_edges[b];
            let t = &etab[be.local_edge];
            let local: Vec<f64> = mesh.elements[be.element].iter().map(|&g| coeffs[g]).collect();
            let mut acc = 0.0;
            for (q, w) in t.rule.weights.iter().enumerate() {
                let (v, g) = (&t.values[q], &t.grads[q]);
                let frame = mesh.frame_with(problem, be.element, v, g)?;
                let ef = edge_frame(frame, be.local_edge, t.rule.points[q])
                    .map_err(|_| Error::DegenerateEdge { element: be.element, edge: be.local_edge })?;
                let uh: f64 = v.iter().zip(&local).map(|(a, b)| a * b).sum();
                let data = problem.dirichlet(&problem.project_to_boundary(&ef.frame.x, be.tag)?)?;
                acc += w * ef.line_factor * (uh - data).powi(2);
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    Ok(compensated_sum(per_edge) / mesh.h)
}

/// Values of `u^e` at the mesh nodes.
pub fn nodal_interpolant(mesh: &ParametricMesh, problem: &Problem) -> Result<Vec<f64>> {
    mesh.nodes.par_iter().map(|x| problem.solution(x)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRecord {
    pub k: usize,
    pub level: usize,
    pub n_div: usize,
    pub h: f64,
    pub dof: usize,
    pub energy_error: f64,
    pub l2_error: f64,
    /// Observed orders against the previous level; absent on the first level.
    pub eoc_energy: Option<f64>,
    pub eoc_l2: Option<f64>,
    pub errors: ErrorMeasures,
    pub boundary_mismatch: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StudyOptions {
    pub k: usize,
    pub levels: usize,
    pub base_divisions: usize,
    pub assembly: AssemblyOptions,
    pub rel_tol: f64,
    /// Quadrature degree of the error norms; `None` uses `2k + 4`.
    pub error_degree: Option<usize>,
}

impl StudyOptions {
    pub fn new(k: usize, levels: usize) -> Self {
        StudyOptions {
            k,
            levels,
            base_divisions: BASE_DIVISIONS,
            assembly: AssemblyOptions::default(),
            rel_tol: DEFAULT_REL_TOL,
            error_degree: None,
        }
    }
}

pub fn eoc(coarse: f64, fine: f64) -> f64 {
    (coarse / fine).log2()
}

/// Solves on `n_div = n₀ 2^level` for `level = 0..levels` and records errors
/// and observed orders.
pub fn convergence_study(problem: &Problem, options: &StudyOptions) -> Result<Vec<ConvergenceRecord>> {
    if options.levels < 3 {
        return Err(Error::InvalidArgument(format!("a study needs at least 3 levels, got {}", options.levels)));
    }
    let mut records: Vec<ConvergenceRecord> = Vec::with_capacity(options.levels);
    for level in 0..options.levels {
        let n_div = options.base_divisions << level;
        let mesh = build_mesh(n_div, options.k, problem)?;
        let system = assemble_with(&mesh, problem, &options.assembly)?;
        let report = solve_spd(&system, options.rel_tol)?;
        let degree = options.error_degree.unwrap_or(2 * options.k + 4);
        let errors = error_measures_with(&mesh, &report.solution, problem, degree, ExtensionGradient::Analytic)?;
        let mismatch = boundary_mismatch(&mesh, &report.solution, problem)?;
        let previous = records.last();
        records.push(ConvergenceRecord {
            k: options.k,
            level,
            n_div,
            h: mesh.h,
            dof: mesh.num_nodes(),
            energy_error: errors.energy_error,
            l2_error: errors.l2_error,
            eoc_energy: previous.map(|p| eoc(p.energy_error, errors.energy_error)),
            eoc_l2: previous.map(|p| eoc(p.l2_error, errors.l2_error)),
            errors,
            boundary_mismatch: mismatch,
            iterations: report.iterations,
        });
    }
    Ok(records)
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.4}")).unwrap_or_default()
}

/// CSV with the header [`CSV_HEADER`]; the first level of each study has
/// empty order columns.
pub fn write_csv<W: Write>(w: &mut W, records: &[ConvergenceRecord]) -> Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in records {
        writeln!(
            w,
            "{},{},{:.6e},{},{:.6e},{:.6e},{},{}",
            r.k,
            r.level,
            r.h,
            r.dof,
            r.energy_error,
            r.l2_error,
            opt(r.eoc_energy),
            opt(r.eoc_l2)
        )?;
    }
    Ok(())
}

/// Fixed-width table of the same data.
pub fn write_table<W: Write>(w: &mut W, records: &[ConvergenceRecord]) -> Result<()> {
    writeln!(
        w,
        "{:>2} {:>5} {:>6} {:>11} {:>8} {:>12} {:>7} {:>12} {:>7}",
        "k", "level", "n_div", "h", "dof", "energy", "eoc", "l2", "eoc"
    )?;
    for r in records {
        writeln!(
            w,
            "{:>2} {:>5} {:>6} {:>11.4e} {:>8} {:>12.4e} {:>7} {:>12.4e} {:>7}",
            r.k,
            r.level,
            r.n_div,
            r.h,
            r.dof,
            r.energy_error,
            opt(r.eoc_energy),
            r.l2_error,
            opt(r.eoc_l2)
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_mesh;

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let v = [1.0, 1e-16, 1e-16, -1.0];
        assert_eq!(compensated_sum(v), 2e-16);
    }

    #[test]
    fn interpolant_of_flat_polynomial_is_exact() {
        for k in 1..=3 {
            let p = Problem::flat_square(k as u32);
            let m = build_mesh(2, k, &p).unwrap();
            let u = nodal_interpolant(&m, &p).unwrap();
            let e = error_measures(&m, &u, &p).unwrap();
            for part in [e.l2_error, e.grad_part, e.flux_part, e.jump_part] {
                assert!(part < 1e-10, "k={k}: {e:?}");
            }
        }
    }

    #[test]
    fn energy_squares_add_up() {
        let p = Problem::torus();
        let m = build_mesh(4, 1, &p).unwrap();
        let e = error_measures(&m, &vec![0.0; m.num_nodes()], &p).unwrap();
        assert!((e.energy_error.powi(2) - (e.grad_part + e.flux_part + e.jump_part)).abs() < 1e-12);
        assert!(e.energy_error.powi(2) >= e.jump_part);
    }

    #[test]
    fn coefficient_length_checked() {
        let p = Problem::flat_square(1);
        let m = build_mesh(2, 1, &p).unwrap();
        assert!(matches!(error_measures(&m, &[0.0], &p), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn study_needs_three_levels() {
        assert!(convergence_study(&Problem::flat_square(1), &StudyOptions::new(1, 2)).is_err());
    }

    #[test]
    fn csv_layout() {
        let e = ErrorMeasures { l2_error: 0.5, energy_error: 1.0, grad_part: 1.0, flux_part: 0.0, jump_part: 0.0 };
        let rec = |level, eoc: Option<f64>| ConvergenceRecord {
            k: 2,
            level,
            n_div: 8 << level,
            h: 0.25,
            dof: 10,
            energy_error: 1.0,
            l2_error: 0.5,
            eoc_energy: eoc,
            eoc_l2: eoc,
            errors: e,
            boundary_mismatch: 0.0,
            iterations: 1,
        };
        let mut out = Vec::new();
        write_csv(&mut out, &[rec(0, None), rec(1, Some(2.0))]).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines[1], "2,0,2.500000e-1,10,1.000000e0,5.000000e-1,,");
        assert_eq!(lines[2], "2,1,2.500000e-1,10,1.000000e0,5.000000e-1,2.0000,2.0000");
    }
}
