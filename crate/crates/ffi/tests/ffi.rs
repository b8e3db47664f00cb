use std::ffi::CStr;
use std::ptr;

use surfnitsche_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(sn_last_error_message()) }.to_string_lossy().into_owned()
}

#[test]
fn flat_patch_round_trip() {
    unsafe {
        let mut mesh = ptr::null_mut();
        assert_eq!(sn_mesh_build(SnProblem::FlatSquare as u32, 2, 4, &mut mesh), SnStatus::Ok);
        assert!(!mesh.is_null());
        let n = sn_mesh_num_nodes(mesh);
        assert_eq!(n, 81);
        assert_eq!(sn_mesh_nodes_per_element(mesh), 6);

        let mut xyz = vec![0.0; 3 * n];
        assert_eq!(sn_mesh_nodes(mesh, xyz.as_mut_ptr(), xyz.len()), SnStatus::Ok);
        assert!(xyz.chunks(3).all(|p| p[2] == 0.0));
        let mut conn = vec![0u64; sn_mesh_num_elements(mesh) * 6];
        assert_eq!(sn_mesh_elements(mesh, conn.as_mut_ptr(), conn.len()), SnStatus::Ok);
        assert!(conn.iter().all(|&g| (g as usize) < n));

        let mut sol = ptr::null_mut();
        assert_eq!(sn_solve(mesh, 1e4, 1e-15, &mut sol), SnStatus::Ok);
        assert_eq!(sn_solution_len(sol), n);
        assert!(sn_solution_residual(sol) <= 1e-15);
        let mut e = SnErrorMeasures::default();
        assert_eq!(sn_solution_errors(sol, &mut e), SnStatus::Ok);
        assert!(e.l2_error < 1e-10 && e.energy_error < 1e-10, "{e:?}");

        let mut values = vec![0.0; n];
        assert_eq!(sn_solution_values(sol, values.as_mut_ptr(), n), SnStatus::Ok);
        for (v, p) in values.iter().zip(xyz.chunks(3)) {
            let (x, y) = (p[0], p[1]);
            let exact = x + y + 0.7 * x * x - 0.4 * x * y + 0.3 * y * y;
            assert!((v - exact).abs() < 1e-9);
        }
        sn_solution_free(sol);
        sn_mesh_free(mesh);
    }
}

#[test]
fn torus_report() {
    unsafe {
        let mut mesh = ptr::null_mut();
        assert_eq!(sn_mesh_build(SnProblem::Torus as u32, 3, 4, &mut mesh), SnStatus::Ok);
        let mut r = SnGeometricReport::default();
        assert_eq!(sn_mesh_report(mesh, &mut r), SnStatus::Ok);
        assert!(r.max_boundary_node_dist < 1e-10);
        assert!(r.min_scaled_jacobian > 0.05);
        assert!(sn_mesh_h(mesh) > 0.0);
        sn_mesh_free(mesh);
    }
}

#[test]
fn errors_are_reported() {
    unsafe {
        let mut mesh = ptr::null_mut();
        assert_eq!(sn_mesh_build(SnProblem::Torus as u32, 4, 8, &mut mesh), SnStatus::InvalidArgument);
        assert!(mesh.is_null());
        assert!(last_error().contains("order"));
        assert_eq!(sn_mesh_build(9, 1, 8, &mut mesh), SnStatus::InvalidArgument);
        assert_eq!(sn_mesh_build(SnProblem::Torus as u32, 1, 1, &mut mesh), SnStatus::InvalidArgument);
        assert_eq!(sn_mesh_build(SnProblem::Torus as u32, 1, 8, ptr::null_mut()), SnStatus::NullPointer);

        assert_eq!(sn_mesh_build(SnProblem::FlatSquare as u32, 1, 2, &mut mesh), SnStatus::Ok);
        assert_eq!(last_error(), "");
        let mut sol = ptr::null_mut();
        assert_eq!(sn_solve(mesh, -1.0, 1e-12, &mut sol), SnStatus::InvalidArgument);
        assert!(sol.is_null());
        let mut short = [0.0; 2];
        assert_eq!(sn_mesh_nodes(mesh, short.as_mut_ptr(), 2), SnStatus::InvalidArgument);
        assert_eq!(sn_mesh_nodes(ptr::null(), short.as_mut_ptr(), 2), SnStatus::NullPointer);
        assert_eq!(sn_mesh_num_nodes(ptr::null()), 0);
        assert!(sn_mesh_h(ptr::null()).is_nan());
        sn_mesh_free(mesh);
        sn_mesh_free(ptr::null_mut());
        sn_solution_free(ptr::null_mut());
    }
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(sn_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/surfnitsche.h")).unwrap();
    let source = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/src/lib.rs")).unwrap();
    let exports: Vec<&str> = source.split("extern \"C\" fn ").skip(1).map(|s| s.split('(').next().unwrap()).collect();
    assert!(exports.len() >= 15);
    for name in exports {
        assert!(header.contains(&format!("{name}(")), "{name} missing from header");
    }
    for ty in ["SnMesh", "SnSolution", "SnStatus", "SnGeometricReport", "SnErrorMeasures"] {
        assert!(header.contains(ty));
    }
}
