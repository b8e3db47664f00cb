//! End-to-end runs of the `surfnitsche` binary.

use std::collections::HashMap;
use std::fs;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_surfnitsche");

/// Runs the binary with a clean `SURFNITSCHE_*` environment plus `env`.
fn run(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(BIN);
    for (key, _) in std::env::vars() {
        if key.starts_with("SURFNITSCHE_") {
            cmd.env_remove(key);
        }
    }
    cmd.args(args).envs(env.iter().copied()).output().unwrap()
}

fn key_values(out: &Output) -> HashMap<String, String> {
    String::from_utf8_lossy(&out.stdout)
        .lines()
        .filter_map(|l| l.split_once(" = "))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

fn value(kv: &HashMap<String, String>, key: &str) -> f64 {
    kv[key].parse().unwrap()
}

#[test]
fn solve_flat_patch_is_exact() {
    for k in ["1", "2", "3"] {
        let out = run(&["solve", "--problem", "flat-square", "--k", k, "--n-div", "4", "--rel-tol", "1e-15"], &[]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let kv = key_values(&out);
        assert_eq!(kv["problem"], "flat-square");
        for key in ["max_nodal_error", "l2_error", "energy_error"] {
            assert!(value(&kv, key) < 1e-10, "k={k} {key} = {}", kv[key]);
        }
    }
}

#[test]
fn mesh_report_places_boundary_nodes_on_the_boundary() {
    let out = run(&["mesh-report", "--problem", "torus", "--k", "3", "--n-div", "8"], &[]);
    assert!(out.status.success());
    let kv = key_values(&out);
    assert!(value(&kv, "max_boundary_node_dist") < 1e-10);
    assert!(value(&kv, "min_scaled_jacobian") > 0.05);
    assert_eq!(kv["elements"], (2 * 24 * 16).to_string());
}

#[test]
fn convergence_writes_csv_and_table() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("study.csv");
    let table = dir.path().join("study.txt");
    let out = run(
        &["convergence", "--problem", "torus-simple", "--k", "1", "--levels", "3", "--base-div", "4"],
        &[("SURFNITSCHE_CSV", csv.to_str().unwrap()), ("SURFNITSCHE_TABLE", table.to_str().unwrap())],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "k,level,h,dof,energy_error,l2_error,eoc_energy,eoc_l2");
    assert_eq!(lines.len(), 4);
    let last: Vec<&str> = lines[3].split(',').collect();
    let eoc_l2: f64 = last[7].parse().unwrap();
    assert!((1.5..2.5).contains(&eoc_l2), "{eoc_l2}");
    assert!(fs::read_to_string(&table).unwrap().starts_with("# torus-simple problem"));

    let stdout_run =
        run(&["convergence", "--problem", "torus-simple", "--k", "1", "--levels", "3", "--base-div", "4"], &[]);
    assert_eq!(String::from_utf8(stdout_run.stdout).unwrap(), text);
}

#[test]
fn flags_take_precedence_over_environment() {
    let out = run(
        &["mesh-report", "--k", "2", "--n-div", "4"],
        &[("SURFNITSCHE_K", "3"), ("SURFNITSCHE_PROBLEM", "flat-square")],
    );
    assert!(out.status.success());
    let kv = key_values(&out);
    assert_eq!(kv["k"], "2");
    assert_eq!(kv["problem"], "flat-square");
    assert_eq!(kv["n_div"], "4");
}

#[test]
fn failures_exit_nonzero() {
    for args in [
        &["solve", "--k", "4"][..],
        &["solve", "--beta", "-1"],
        &["solve", "--n-div", "0"],
        &["convergence", "--levels", "2"],
        &["solve", "--problem", "sphere"],
        &["solve", "--problem", "flat-square", "--vtk", "/nonexistent/dir/out.vtk"],
    ] {
        let out = run(args, &[]);
        assert!(!out.status.success(), "{args:?} succeeded");
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn solve_exports_vtk_and_matrix_market() {
    let dir = tempfile::tempdir().unwrap();
    let vtk = dir.path().join("u.vtk");
    let prefix = dir.path().join("system");
    let out = run(
        &[
            "solve",
            "--problem",
            "flat-square",
            "--k",
            "2",
            "--n-div",
            "2",
            "--vtk",
            vtk.to_str().unwrap(),
            "--matrix-out",
            prefix.to_str().unwrap(),
        ],
        &[],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let kv = key_values(&out);
    let dof: usize = kv["dof"].parse().unwrap();

    let text = fs::read_to_string(&vtk).unwrap();
    assert!(text.starts_with("# vtk DataFile Version 3.0\n"));
    assert!(text.contains(&format!("POINTS {dof} double\n")));
    assert!(text.contains("CELL_TYPES 8\n"));
    assert!(text.contains("SCALARS solution double 1\n"));

    let a = fs::read_to_string(dir.path().join("system_A.mtx")).unwrap();
    let mut lines = a.lines().filter(|l| !l.starts_with('%'));
    let header = a.lines().next().unwrap();
    assert_eq!(header, "%%MatrixMarket matrix coordinate real symmetric");
    let dims: Vec<usize> = lines.next().unwrap().split_whitespace().map(|t| t.parse().unwrap()).collect();
    assert_eq!(&dims[..2], [dof, dof]);
    assert_eq!(lines.count(), dims[2]);
    let b = fs::read_to_string(dir.path().join("system_b.mtx")).unwrap();
    assert!(b.starts_with("%%MatrixMarket matrix array real general"));
}
