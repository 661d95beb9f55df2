use liegeo_ffi::*;
use std::ffi::{CStr, CString};
use std::ptr;

fn last_code() -> String {
    let p = lg_last_error_code();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_string()
}

fn take_string(p: *mut std::ffi::c_char) -> String {
    let s = unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_string();
    unsafe { lg_string_free(p) };
    s
}

#[test]
fn lifted_point_lies_on_the_plane_sphere() {
    let (p, n) = ([0.3, -0.2, 1.1], [0.0, 0.6, 0.8]);
    let (mut a, mut b, mut x) = ([0.0; 6], [0.0; 6], 1.0);
    unsafe {
        assert_eq!(lg_lift_point(p.as_ptr(), a.as_mut_ptr()), LgStatus::Ok);
        assert_eq!(lg_lift_plane(p.as_ptr(), n.as_ptr(), b.as_mut_ptr()), LgStatus::Ok);
        assert_eq!(lg_inner(a.as_ptr(), b.as_ptr(), &mut x), LgStatus::Ok);
    }
    assert!(x.abs() < 1e-14);
    assert!(lg_last_error_code().is_null());
}

#[test]
fn null_and_invalid_arguments_report_codes() {
    let mut out = [0.0; 6];
    unsafe {
        assert_eq!(lg_lift_point(ptr::null(), out.as_mut_ptr()), LgStatus::NullPointer);
        assert_eq!(last_code(), "ffi.NullPointer");
        let p = [0.0; 3];
        let n = [0.0, 0.0, 2.0];
        assert_eq!(lg_lift_plane(p.as_ptr(), n.as_ptr(), out.as_mut_ptr()), LgStatus::InvalidInput);
        assert_eq!(last_code(), "lie_core.NonUnitNormal");
        let mut s = ptr::null_mut();
        let bad = CString::new("{not json").unwrap();
        assert_eq!(lg_surface_from_json(bad.as_ptr(), &mut s), LgStatus::InvalidInput);
        assert!(s.is_null());
        assert_eq!(last_code(), "cli.InvalidInput");
        assert!(!lg_last_error_message().is_null());
        // freeing NULL is a no-op
        lg_surface_free(ptr::null_mut());
        lg_string_free(ptr::null_mut());
    }
}

#[test]
fn surface_pipeline_through_handles() {
    let json = CString::new(r#"{"surface": "ellipsoid", "axes": [1, 1.3, 1.7], "nu": 13, "nv": 13}"#).unwrap();
    unsafe {
        let mut s = ptr::null_mut();
        assert_eq!(lg_surface_from_json(json.as_ptr(), &mut s), LgStatus::Ok);
        let (mut nu, mut nv) = (0, 0);
        assert_eq!(lg_surface_grid(s, &mut nu, &mut nv), LgStatus::Ok);
        assert_eq!((nu, nv), (13, 13));
        let mut an = ptr::null_mut();
        assert_eq!(lg_surface_analyze(s, 4, &mut an), LgStatus::Ok);
        let n = nu * nv;
        let mut inv = vec![0.0; 6 * n];
        assert_eq!(lg_analysis_invariants(an, inv.as_mut_ptr(), inv.len()), LgStatus::Ok);
        assert!(inv.iter().all(|x| x.is_finite()));
        assert_eq!(lg_analysis_invariants(an, inv.as_mut_ptr(), 5), LgStatus::InvalidInput);
        let (mut a, mut b) = (vec![0.0; n], vec![0.0; n]);
        assert_eq!(lg_analysis_coframe(an, a.as_mut_ptr(), b.as_mut_ptr(), n), LgStatus::Ok);
        assert!(a.iter().zip(&b).all(|(x, y)| x * y != 0.0));
        let (mut r1, mut r2, mut minimal) = (0.0, 0.0, true);
        assert_eq!(lg_analysis_euler_lagrange(an, 1e-6, 4, &mut r1, &mut r2, &mut minimal), LgStatus::Ok);
        assert!(r1 > 1e-3 && !minimal, "ellipsoids are not Lie minimal");
        let mut js = ptr::null_mut();
        assert_eq!(lg_surface_to_json(s, &mut js), LgStatus::Ok);
        assert!(take_string(js).contains("phi0"));
        lg_analysis_free(an);
        lg_surface_free(s);
    }
}

#[test]
fn degenerate_surface_is_a_numerical_failure() {
    let json = CString::new(
        r#"{"surface": "torus", "big_radius": 2, "radius": 0.5, "window": [0.1, 0.6, 0.1, 0.6], "nu": 12, "nv": 12}"#,
    )
    .unwrap();
    unsafe {
        let mut s = ptr::null_mut();
        assert_eq!(lg_surface_from_json(json.as_ptr(), &mut s), LgStatus::Ok);
        let mut an = ptr::null_mut();
        assert_eq!(lg_surface_analyze(s, 2, &mut an), LgStatus::NumericalFailure);
        assert!(an.is_null());
        assert_eq!(last_code(), "surface_invariants.DegenerateSurface");
        lg_surface_free(s);
    }
}

#[test]
fn cauchy_solver_through_handles() {
    unsafe {
        let mut d = ptr::null_mut();
        assert_eq!(lg_cauchy_data_random(5, 6, &mut d), LgStatus::Ok);
        let mut sol = ptr::null_mut();
        assert_eq!(lg_cauchy_solve(d, &mut sol), LgStatus::Ok);
        let mut max = 1.0;
        assert_eq!(lg_jet_solution_verify(sol, &mut max), LgStatus::Ok);
        assert!(max < 1e-10, "{max}");
        let mut a = [0.0; 36];
        assert_eq!(lg_jet_solution_frame_at(sol, 0.0, 0.0, a.as_mut_ptr()), LgStatus::Ok);
        // columns keep the inner products of the standard basis
        let col = |m: &[f64; 36], j: usize| -> [f64; 6] { std::array::from_fn(|i| m[6 * i + j]) };
        let mut g = [0.0; 36];
        for j in 0..6 {
            g[6 * j + j] = 1.0;
        }
        for i in 0..6 {
            for j in 0..6 {
                let (mut x, mut y) = (0.0, 0.0);
                assert_eq!(lg_inner(col(&a, i).as_ptr(), col(&a, j).as_ptr(), &mut x), LgStatus::Ok);
                assert_eq!(lg_inner(col(&g, i).as_ptr(), col(&g, j).as_ptr(), &mut y), LgStatus::Ok);
                assert!((x - y).abs() < 1e-12, "({i}, {j}): {x} vs {y}");
            }
        }
        let mut x = [0.0; 8];
        assert_eq!(lg_jet_solution_scalars_at(sol, 0.01, -0.01, x.as_mut_ptr()), LgStatus::Ok);
        assert!((x[0] - x[1]).abs() < 1e-12, "a = b on the data curve");
        let w = [0.0, 0.04, -0.04, 0.0];
        let mut s = ptr::null_mut();
        assert_eq!(lg_jet_solution_surface(sol, w.as_ptr(), 6, 6, &mut s), LgStatus::Ok);
        lg_surface_free(s);
        let big = [0.0, 5.0, -5.0, 0.0];
        assert_eq!(lg_jet_solution_surface(sol, big.as_ptr(), 6, 6, &mut s), LgStatus::NumericalFailure);
        assert_eq!(last_code(), "cauchy_solver.WindowTooLarge");
        let mut js = ptr::null_mut();
        assert_eq!(lg_jet_solution_verify_json(sol, &mut js), LgStatus::Ok);
        assert!(take_string(js).contains("boundary_frame"));
        lg_jet_solution_free(sol);
        lg_cauchy_data_free(d);

        let ch = CString::new(r#"{"mu": [0.0, 1.0]}"#).unwrap();
        assert_eq!(lg_cauchy_data_from_json(ch.as_ptr(), &mut d), LgStatus::NumericalFailure);
        assert_eq!(last_code(), "cauchy_solver.CharacteristicData");
    }
}

#[test]
fn eds_report_json() {
    let mut js = ptr::null_mut();
    assert_eq!(unsafe { lg_eds_report_json(20, 7, &mut js) }, LgStatus::Ok);
    let v: serde_json::Value = serde_json::from_str(&take_string(js)).unwrap();
    assert_eq!(v["all_polar_two"], true);
    assert_eq!(v["seed"], 7);
}

#[test]
fn version_is_static() {
    let v = unsafe { CStr::from_ptr(lg_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}
