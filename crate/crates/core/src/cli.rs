//! Command-line front end: single solves, convergence studies and mesh reports.
//!
//! Every flag can also be set through an environment variable with the
//! `SURFNITSCHE_` prefix; explicit flags take precedence.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::analysis::{
    boundary_mismatch, convergence_study, error_measures_with, nodal_interpolant, write_csv, write_table,
    ExtensionGradient, StudyOptions,
};
use crate::assembly::{assemble_with, AssemblyOptions, DEFAULT_BETA};
use crate::error::{Error, Result};
use crate::mesh::{build_mesh, geometric_report, BASE_DIVISIONS};
use crate::problem::Problem;
use crate::solver::{solve_spd, DEFAULT_REL_TOL};
use crate::sparse::write_vector_market;
use crate::vtk::write_vtk;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProblemKind {
    /// Torus band with wavy boundaries (N1 = 4, N2 = 3).
    Torus,
    /// Torus band with straight boundaries (N1 = N2 = 0).
    TorusSimple,
    /// Unit square in the plane z = 0 with a polynomial solution.
    FlatSquare,
}

impl ProblemKind {
    /// The flat square uses a solution of degree `k`, so it lies in the discrete space.
    pub fn build(self, k: usize) -> Problem {
        match self {
            ProblemKind::Torus => Problem::torus(),
            ProblemKind::TorusSimple => Problem::torus_simple(),
            ProblemKind::FlatSquare => Problem::flat_square(k as u32),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "surfnitsche", version, about = "Nitsche surface finite elements on curved triangulations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one problem and optionally export the solution and the linear system.
    Solve(SolveArgs),
    /// Run a refinement study and write the error table.
    Convergence(ConvergenceArgs),
    /// Write the geometric approximation report of one mesh.
    MeshReport(MeshArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    #[arg(long, value_enum, default_value = "torus", env = "SURFNITSCHE_PROBLEM")]
    pub problem: ProblemKind,
    /// Polynomial order of geometry and solution.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..=3), env = "SURFNITSCHE_K")]
    pub k: u64,
}

#[derive(Debug, Clone, Args)]
pub struct DiscretizationArgs {
    /// Nitsche penalty parameter.
    #[arg(long, default_value_t = DEFAULT_BETA, env = "SURFNITSCHE_BETA")]
    pub beta: f64,
    /// Relative residual tolerance of the linear solver.
    #[arg(long, default_value_t = DEFAULT_REL_TOL, env = "SURFNITSCHE_REL_TOL")]
    pub rel_tol: f64,
    /// Exactness degree of the assembly triangle rule (default 2k+2).
    #[arg(long, env = "SURFNITSCHE_TRIANGLE_DEGREE")]
    pub triangle_degree: Option<usize>,
    /// Exactness degree of the assembly edge rule (default 2k+2).
    #[arg(long, env = "SURFNITSCHE_EDGE_DEGREE")]
    pub edge_degree: Option<usize>,
    /// Exactness degree of the error quadrature (default 2k+4).
    #[arg(long, env = "SURFNITSCHE_ERROR_DEGREE")]
    pub error_degree: Option<usize>,
    /// Scale the penalty of each boundary edge by its own length.
    #[arg(long, env = "SURFNITSCHE_LOCAL_H")]
    pub local_h: bool,
}

impl DiscretizationArgs {
    fn assembly(&self) -> AssemblyOptions {
        AssemblyOptions {
            beta: self.beta,
            triangle_degree: self.triangle_degree,
            edge_degree: self.edge_degree,
            local_h: self.local_h,
            boundary_terms: true,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, default_value_t = BASE_DIVISIONS, env = "SURFNITSCHE_N_DIV")]
    pub n_div: usize,
    #[command(flatten)]
    pub disc: DiscretizationArgs,
    /// VTK file receiving the solution and the nodal error.
    #[arg(long, env = "SURFNITSCHE_VTK")]
    pub vtk: Option<PathBuf>,
    /// Prefix for Matrix Market exports `<prefix>_A.mtx` and `<prefix>_b.mtx`.
    #[arg(long, env = "SURFNITSCHE_MATRIX_OUT")]
    pub matrix_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ConvergenceArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Number of meshes, `n_div = n0 2^level`.
    #[arg(long, default_value_t = 4, env = "SURFNITSCHE_LEVELS")]
    pub levels: usize,
    /// Divisions `n0` of the coarsest mesh.
    #[arg(long, default_value_t = BASE_DIVISIONS, env = "SURFNITSCHE_BASE_DIV")]
    pub base_div: usize,
    #[command(flatten)]
    pub disc: DiscretizationArgs,
    /// CSV output; printed to standard output when absent.
    #[arg(long, env = "SURFNITSCHE_CSV")]
    pub csv: Option<PathBuf>,
    /// Plain-text table output.
    #[arg(long, env = "SURFNITSCHE_TABLE")]
    pub table: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct MeshArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, default_value_t = BASE_DIVISIONS, env = "SURFNITSCHE_N_DIV")]
    pub n_div: usize,
    /// Report output; printed to standard output when absent.
    #[arg(long, env = "SURFNITSCHE_REPORT")]
    pub out: Option<PathBuf>,
    /// Also write the mesh as VTK.
    #[arg(long, env = "SURFNITSCHE_VTK")]
    pub vtk: Option<PathBuf>,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut name = prefix.as_os_str().to_owned();
    name.push(suffix);
    PathBuf::from(name)
}

fn check_positive(name: &str, v: usize) -> Result<()> {
    if v == 0 {
        return Err(Error::InvalidArgument(format!("{name} must be positive")));
    }
    Ok(())
}

/// Runs the command, writing human-readable output to `out`.
pub fn run<W: Write>(cli: &Cli, out: &mut W) -> Result<()> {
    match &cli.command {
        Command::Solve(a) => solve(a, out),
        Command::Convergence(a) => convergence(a, out),
        Command::MeshReport(a) => mesh_report(a, out),
    }
}

fn solve<W: Write>(a: &SolveArgs, out: &mut W) -> Result<()> {
    let k = a.common.k as usize;
    let problem = a.common.problem.build(k);
    let mesh = build_mesh(a.n_div, k, &problem)?;
    let system = assemble_with(&mesh, &problem, &a.disc.assembly())?;
    if let Some(prefix) = &a.matrix_out {
        let mut w = create(&with_suffix(prefix, "_A.mtx"))?;
        system.matrix.write_matrix_market(&mut w, true)?;
        w.flush()?;
        let mut w = create(&with_suffix(prefix, "_b.mtx"))?;
        write_vector_market(&mut w, &system.rhs)?;
        w.flush()?;
    }
    let report = solve_spd(&system, a.disc.rel_tol)?;
    let exact = nodal_interpolant(&mesh, &problem)?;
    let nodal_error: Vec<f64> = exact.iter().zip(&report.solution).map(|(e, u)| e - u).collect();
    let max_nodal = nodal_error.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let degree = a.disc.error_degree.unwrap_or(2 * k + 4);
    let errors = error_measures_with(&mesh, &report.solution, &problem, degree, ExtensionGradient::Analytic)?;
    let mismatch = boundary_mismatch(&mesh, &report.solution, &problem)?;
    if let Some(path) = &a.vtk {
        let mut w = create(path)?;
        let title = format!("{} k={} n_div={}", problem.name(), k, a.n_div);
        write_vtk(&mut w, &mesh, &title, &[("solution", &report.solution), ("error", &nodal_error)])?;
        w.flush()?;
    }
    writeln!(out, "problem = {}", problem.name())?;
    writeln!(out, "k = {k}")?;
    writeln!(out, "n_div = {}", a.n_div)?;
    writeln!(out, "h = {:.6e}", mesh.h)?;
    writeln!(out, "dof = {}", mesh.num_nodes())?;
    writeln!(out, "beta = {:e}", system.beta)?;
    writeln!(out, "solver = {}", report.method.as_str())?;
    writeln!(out, "iterations = {}", report.iterations)?;
    writeln!(out, "relative_residual = {:.6e}", report.relative_residual)?;
    writeln!(out, "max_nodal_error = {max_nodal:.6e}")?;
    writeln!(out, "l2_error = {:.6e}", errors.l2_error)?;
    writeln!(out, "energy_error = {:.6e}", errors.energy_error)?;
    writeln!(out, "grad_part = {:.6e}", errors.grad_part)?;
    writeln!(out, "flux_part = {:.6e}", errors.flux_part)?;
    writeln!(out, "jump_part = {:.6e}", errors.jump_part)?;
    writeln!(out, "boundary_mismatch = {mismatch:.6e}")?;
    Ok(())
}

fn convergence<W: Write>(a: &ConvergenceArgs, out: &mut W) -> Result<()> {
    check_positive("base-div", a.base_div)?;
    let k = a.common.k as usize;
    let problem = a.common.problem.build(k);
    let options = StudyOptions {
        k,
        levels: a.levels,
        base_divisions: a.base_div,
        assembly: a.disc.assembly(),
        rel_tol: a.disc.rel_tol,
        error_degree: a.disc.error_degree,
    };
    let records = convergence_study(&problem, &options)?;
    match &a.csv {
        Some(path) => {
            let mut w = create(path)?;
            write_csv(&mut w, &records)?;
            w.flush()?;
        }
        None => write_csv(out, &records)?,
    }
    if let Some(path) = &a.table {
        let mut w = create(path)?;
        writeln!(w, "# {} problem", problem.name())?;
        write_table(&mut w, &records)?;
        w.flush()?;
    }
    if a.csv.is_some() {
        write_table(out, &records)?;
    }
    Ok(())
}

fn mesh_report<W: Write>(a: &MeshArgs, out: &mut W) -> Result<()> {
    let k = a.common.k as usize;
    let problem = a.common.problem.build(k);
    let mesh = build_mesh(a.n_div, k, &problem)?;
    let report = geometric_report(&mesh, &problem)?;
    let text = format!(
        "problem = {}\nk = {}\nn_div = {}\nh = {:.6e}\nh_max = {:.6e}\nnodes = {}\nelements = {}\nboundary_edges = {}\n{}",
        problem.name(),
        k,
        a.n_div,
        mesh.h,
        mesh.h_max,
        mesh.num_nodes(),
        mesh.num_elements(),
        mesh.boundary_edges.len(),
        report.to_key_value()
    );
    match &a.out {
        Some(path) => {
            let mut w = create(path)?;
            w.write_all(text.as_bytes())?;
            w.flush()?;
        }
        None => out.write_all(text.as_bytes())?,
    }
    if let Some(path) = &a.vtk {
        let mut w = create(path)?;
        write_vtk(&mut w, &mesh, &format!("{} k={} n_div={}", problem.name(), k, a.n_div), &[])?;
        w.flush()?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("surfnitsche").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn defaults() {
        let cli = parse(&["solve"]);
        let Command::Solve(a) = cli.command else { panic!("expected solve") };
        assert_eq!(a.common.problem, ProblemKind::Torus);
        assert_eq!(a.disc.beta, 1e4);
        assert_eq!(a.disc.rel_tol, 1e-12);
        assert_eq!(a.n_div, 8);
    }

    #[test]
    fn order_range_is_checked() {
        assert!(Cli::try_parse_from(["surfnitsche", "solve", "--k", "4"]).is_err());
        assert!(Cli::try_parse_from(["surfnitsche", "solve", "--k", "0"]).is_err());
    }

    #[test]
    fn flat_patch_solve() {
        let cli = parse(&["solve", "--problem", "flat-square", "--k", "1", "--n-div", "4"]);
        let mut out = Vec::new();
        run(&cli, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let line = text.lines().find(|l| l.starts_with("max_nodal_error")).unwrap();
        let v: f64 = line.split('=').nth(1).unwrap().trim().parse().unwrap();
        assert!(v < 1e-10, "{text}");
    }

    #[test]
    fn suffix_paths() {
        assert_eq!(with_suffix(Path::new("/tmp/sys"), "_A.mtx"), PathBuf::from("/tmp/sys_A.mtx"));
    }
}
