//! C ABI for the surfnitsche library.
//!
//! Meshes and solutions are opaque handles created by `sn_*_build` /
//! `sn_solve` and released with the matching `*_free`. Every fallible call
//! returns an [`SnStatus`]; on failure the message of the most recent error
//! on the calling thread is available from [`sn_last_error_message`].

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use surfnitsche::analysis::{error_measures, ErrorMeasures};
use surfnitsche::assembly::AssemblyOptions;
use surfnitsche::{assembly, geometric_report, mesh, solver, Error, GeometricReport, ParametricMesh, Problem};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SnStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    MeshInvalid = 3,
    DegenerateGeometry = 4,
    NotPositiveDefinite = 5,
    NoConvergence = 6,
    Io = 7,
    Panic = 8,
}

/// Model problem selector.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SnProblem {
    /// Torus band with wavy boundaries.
    Torus = 0,
    /// Torus band with straight boundaries.
    TorusSimple = 1,
    /// Unit square in z = 0 with a polynomial solution of degree k.
    FlatSquare = 2,
}

/// Geometric approximation quantities of a mesh.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SnGeometricReport {
    pub max_rho: f64,
    pub max_normal_dev: f64,
    pub max_boundary_dist: f64,
    pub max_boundary_node_dist: f64,
    pub max_conormal_dev: f64,
    pub min_scaled_jacobian: f64,
}

/// Error norms of a discrete solution against the exact solution.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SnErrorMeasures {
    pub l2_error: f64,
    pub energy_error: f64,
    pub grad_part: f64,
    pub flux_part: f64,
    pub jump_part: f64,
}

/// Opaque mesh handle.
pub struct SnMesh {
    mesh: ParametricMesh,
    problem: Problem,
}

/// Opaque solution handle.
pub struct SnSolution {
    values: Vec<f64>,
    iterations: usize,
    relative_residual: f64,
    errors: ErrorMeasures,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(message: &str) {
    let clean: String = message.chars().filter(|c| *c != '\0').collect();
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(clean).unwrap_or_default());
}

fn status_of(err: &Error) -> SnStatus {
    match err {
        Error::MeshInvalid(_) => SnStatus::MeshInvalid,
        Error::DegenerateInput(_)
        | Error::DegenerateElement { .. }
        | Error::DegenerateEdge { .. }
        | Error::SingularMetric(_)
        | Error::ProjectionNonConvergence(_) => SnStatus::DegenerateGeometry,
        Error::NotPositiveDefinite(_) => SnStatus::NotPositiveDefinite,
        Error::MaxIterationsExceeded { .. } => SnStatus::NoConvergence,
        Error::UnsupportedDegree(_) | Error::InvalidBeta(_) | Error::InvalidArgument(_) => SnStatus::InvalidArgument,
        Error::Io(_) => SnStatus::Io,
    }
}

/// Runs `f`, translating errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), (SnStatus, String)>) -> SnStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error("");
            SnStatus::Ok
        }
        Ok(Err((status, message))) => {
            set_last_error(&message);
            status
        }
        Err(_) => {
            set_last_error("panic inside surfnitsche");
            SnStatus::Panic
        }
    }
}

fn lib<T>(r: surfnitsche::Result<T>) -> Result<T, (SnStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(name: &str) -> (SnStatus, String) {
    (SnStatus::NullPointer, format!("{name} is null"))
}

fn invalid(message: String) -> (SnStatus, String) {
    (SnStatus::InvalidArgument, message)
}

/// Message of the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn sn_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Builds an order-`k` mesh with `n_div` divisions; `problem` is one of the
/// `SnProblem` values.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn sn_mesh_build(problem: u32, k: u32, n_div: u32, out: *mut *mut SnMesh) -> SnStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        if !(1..=3).contains(&k) {
            return Err(invalid(format!("order k must be 1, 2 or 3, got {k}")));
        }
        let problem = match problem {
            p if p == SnProblem::Torus as u32 => Problem::torus(),
            p if p == SnProblem::TorusSimple as u32 => Problem::torus_simple(),
            p if p == SnProblem::FlatSquare as u32 => Problem::flat_square(k),
            other => return Err(invalid(format!("unknown problem {other}"))),
        };
        let mesh = lib(mesh::build_mesh(n_div as usize, k as usize, &problem))?;
        *out = Box::into_raw(Box::new(SnMesh { mesh, problem }));
        Ok(())
    })
}

/// Releases a mesh handle; null is ignored.
///
/// # Safety
/// `mesh` must be null or a handle from [`sn_mesh_build`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sn_mesh_free(mesh: *mut SnMesh) {
    if !mesh.is_null() {
        drop(Box::from_raw(mesh));
    }
}

/// Number of nodes (degrees of freedom); 0 for a null handle.
///
/// # Safety
/// `mesh` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sn_mesh_num_nodes(mesh: *const SnMesh) -> usize {
    mesh.as_ref().map_or(0, |m| m.mesh.num_nodes())
}

/// Number of elements; 0 for a null handle.
///
/// # Safety
/// `mesh` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sn_mesh_num_elements(mesh: *const SnMesh) -> usize {
    mesh.as_ref().map_or(0, |m| m.mesh.num_elements())
}

/// Number of nodes per element, `(k + 1)(k + 2) / 2`; 0 for a null handle.
///
/// # Safety
/// `mesh` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sn_mesh_nodes_per_element(mesh: *const SnMesh) -> usize {
    mesh.as_ref().map_or(0, |m| m.mesh.reference.num_nodes())
}

/// Mesh size used in the penalty scaling; NaN for a null handle.
///
/// # Safety
/// `mesh` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sn_mesh_h(mesh: *const SnMesh) -> f64 {
    mesh.as_ref().map_or(f64::NAN, |m| m.mesh.h)
}

/// Copies node coordinates as `x0 y0 z0 x1 ...` into `xyz`, which must hold
/// `3 * sn_mesh_num_nodes` values.
///
/// # Safety
/// `mesh` must be a live handle and `xyz` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn sn_mesh_nodes(mesh: *const SnMesh, xyz: *mut f64, len: usize) -> SnStatus {
    guard(|| {
        let m = mesh.as_ref().ok_or_else(|| null("mesh"))?;
        if xyz.is_null() {
            return Err(null("xyz"));
        }
        let need = 3 * m.mesh.num_nodes();
        if len < need {
            return Err(invalid(format!("buffer holds {len} values, {need} needed")));
        }
        let out = std::slice::from_raw_parts_mut(xyz, need);
        for (chunk, x) in out.chunks_exact_mut(3).zip(&m.mesh.nodes) {
            chunk.copy_from_slice(&[x.x, x.y, x.z]);
        }
        Ok(())
    })
}

/// Copies element connectivity (VTK Lagrange triangle order) into `conn`,
/// which must hold `sn_mesh_num_elements * sn_mesh_nodes_per_element` values.
///
/// # Safety
/// `mesh` must be a live handle and `conn` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn sn_mesh_elements(mesh: *const SnMesh, conn: *mut u64, len: usize) -> SnStatus {
    guard(|| {
        let m = mesh.as_ref().ok_or_else(|| null("mesh"))?;
        if conn.is_null() {
            return Err(null("conn"));
        }
        let need = m.mesh.num_elements() * m.mesh.reference.num_nodes();
        if len < need {
            return Err(invalid(format!("buffer holds {len} values, {need} needed")));
        }
        let out = std::slice::from_raw_parts_mut(conn, need);
        for (o, g) in out.iter_mut().zip(m.mesh.elements.iter().flatten()) {
            *o = *g as u64;
        }
        Ok(())
    })
}

/// Geometric approximation report of the mesh.
///
/// # Safety
/// `mesh` must be a live handle and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn sn_mesh_report(mesh: *const SnMesh, out: *mut SnGeometricReport) -> SnStatus {
    guard(|| {
        let m = mesh.as_ref().ok_or_else(|| null("mesh"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let r: GeometricReport = lib(geometric_report(&m.mesh, &m.problem))?;
        *out = SnGeometricReport {
            max_rho: r.max_rho,
            max_normal_dev: r.max_normal_dev,
            max_boundary_dist: r.max_boundary_dist,
            max_boundary_node_dist: r.max_boundary_node_dist,
            max_conormal_dev: r.max_conormal_dev,
            min_scaled_jacobian: r.min_scaled_jacobian,
        };
        Ok(())
    })
}

/// Assembles and solves the Nitsche system with penalty `beta` to relative
/// residual `rel_tol`, and measures the error of the result.
///
/// # Safety
/// `mesh` must be a live handle and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn sn_solve(mesh: *const SnMesh, beta: f64, rel_tol: f64, out: *mut *mut SnSolution) -> SnStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let m = mesh.as_ref().ok_or_else(|| null("mesh"))?;
        let system = lib(assembly::assemble_with(&m.mesh, &m.problem, &AssemblyOptions::with_beta(beta)))?;
        let report = lib(solver::solve_spd(&system, rel_tol))?;
        let errors = lib(error_measures(&m.mesh, &report.solution, &m.problem))?;
        *out = Box::into_raw(Box::new(SnSolution {
            values: report.solution,
            iterations: report.iterations,
            relative_residual: report.relative_residual,
            errors,
        }));
        Ok(())
    })
}

/// Releases a solution handle; null is ignored.
///
/// # Safety
/// `solution` must be null or a handle from [`sn_solve`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sn_solution_free(solution: *mut SnSolution) {
    if !solution.is_null() {
        drop(Box::from_raw(solution));
    }
}

/// Number of solution coefficients; 0 for a null handle.
///
/// # Safety
/// `solution` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sn_solution_len(solution: *const SnSolution) -> usize {
    solution.as_ref().map_or(0, |s| s.values.len())
}

/// Solver iterations (0 for a direct solve); 0 for a null handle.
///
/// # Safety
/// `solution` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sn_solution_iterations(solution: *const SnSolution) -> usize {
    solution.as_ref().map_or(0, |s| s.iterations)
}

/// Recomputed relative residual of the solve; NaN for a null handle.
///
/// # Safety
/// `solution` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sn_solution_residual(solution: *const SnSolution) -> f64 {
    solution.as_ref().map_or(f64::NAN, |s| s.relative_residual)
}

/// Copies the nodal coefficients into `values`.
///
/// # Safety
/// `solution` must be a live handle and `values` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn sn_solution_values(solution: *const SnSolution, values: *mut f64, len: usize) -> SnStatus {
    guard(|| {
        let s = solution.as_ref().ok_or_else(|| null("solution"))?;
        if values.is_null() {
            return Err(null("values"));
        }
        if len < s.values.len() {
            return Err(invalid(format!("buffer holds {len} values, {} needed", s.values.len())));
        }
        std::slice::from_raw_parts_mut(values, s.values.len()).copy_from_slice(&s.values);
        Ok(())
    })
}

/// Error norms of the solution.
///
/// # Safety
/// `solution` must be a live handle and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn sn_solution_errors(solution: *const SnSolution, out: *mut SnErrorMeasures) -> SnStatus {
    guard(|| {
        let s = solution.as_ref().ok_or_else(|| null("solution"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let e = s.errors;
        *out = SnErrorMeasures {
            l2_error: e.l2_error,
            energy_error: e.energy_error,
            grad_part: e.grad_part,
            flux_part: e.flux_part,
            jump_part: e.jump_part,
        };
        Ok(())
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sn_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
