use serde_json::Value;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn liegeo(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_liegeo")).args(args).current_dir(dir).output().expect("spawn liegeo")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn status(o: &Output) -> i32 {
    o.status.code().unwrap()
}

#[test]
fn cauchy_zero_data_verifies_to_round_off() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "zero.json", "{}");
    let o = liegeo(&["cauchy", "--in", "zero.json", "--order", "4", "--out", "r.json"], dir.path());
    assert_eq!(status(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = json(&dir.path().join("r.json"));
    assert_eq!(r["order"], 4);
    assert_eq!(r["passed"], true);
    for c in r["verification"]["checks"].as_array().unwrap() {
        assert!(c["max"].as_f64().unwrap() <= 1e-14, "{c}");
    }
}

#[test]
fn eds_report_polar_spaces_are_planes() {
    let dir = tempfile::tempdir().unwrap();
    let o = liegeo(&["eds-report", "--samples", "100", "--seed", "7"], dir.path());
    assert_eq!(status(&o), 0);
    let r: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(r["seed"], 7);
    let polar = r["polar_dimensions"].as_array().unwrap();
    assert_eq!(polar.len(), 100);
    assert!(polar.iter().all(|d| d == 2));
    assert_eq!(r["all_fiber_six"], true);
}

#[test]
fn invariants_report_has_six_fields_and_residuals() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "ellipsoid.json", r#"{"surface": "ellipsoid", "axes": [1, 1.3, 1.7], "nu": 15, "nv": 15}"#);
    let o = liegeo(&["invariants", "--in", "ellipsoid.json", "--order", "4", "--out", "report.json"], dir.path());
    assert_eq!(status(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = json(&dir.path().join("report.json"));
    for name in ["q1", "q2", "p1", "p2", "r1", "r2"] {
        let f = r["invariants"][name].as_array().unwrap();
        assert_eq!(f.len(), 225);
        assert!(f.iter().all(|x| x.as_f64().unwrap().is_finite()));
    }
    assert_eq!(r["fd_order"], 4);
    assert!(r["residuals"]["pfaffian"]["interior_max"].as_f64().unwrap() < 1e-2);
    assert_eq!(r["residuals"]["structure"].as_array().unwrap().len(), 7);
    assert!(r["residuals"]["euler_lagrange"]["r1"]["max"].is_number());

    let o = liegeo(&["invariants", "--in", "ellipsoid.json", "--out", "fields.csv"], dir.path());
    assert_eq!(status(&o), 0);
    let csv = std::fs::read_to_string(dir.path().join("fields.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "u,v,q1,q2,p1,p2,r1,r2,a,b");
    assert_eq!(csv.lines().count(), 226);
}

#[test]
fn json_output_is_byte_identical_across_runs_and_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_liegeo"))
            .args(["cauchy", "--seed", "11", "--order", "5", "--window", "0,0.04,-0.04,0,7,7"])
            .env("LIEGEO_THREADS", threads)
            .current_dir(dir.path())
            .output()
            .unwrap()
    };
    let (a, b, c) = (run("1"), run("4"), run("1"));
    assert_eq!(status(&a), 0, "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stdout, c.stdout);
}

#[test]
fn synthesized_curve_returns_its_curvatures() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "k.json", r#"{"k": [[0.3], [0.2, 0.1], [-0.4], [0.5]], "mu": [1.0], "step": 0.01, "steps": 30}"#);
    assert_eq!(status(&liegeo(&["synth-curve", "--in", "k.json", "--out", "curve.json"], dir.path())), 0);
    let o = liegeo(&["frenet", "--in", "curve.json", "--out", "f.json"], dir.path());
    assert_eq!(status(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let f = json(&dir.path().join("f.json"));
    let ts = f["frenet"]["t"].as_array().unwrap();
    for (i, k) in f["frenet"]["k"].as_array().unwrap().iter().enumerate() {
        let t = ts[i].as_f64().unwrap();
        let want = [0.3, 0.2 + 0.1 * t, -0.4, 0.5];
        for (x, w) in k.as_array().unwrap().iter().zip(want) {
            assert!((x.as_f64().unwrap() - w).abs() < 1e-8, "sample {i}: {k}");
        }
    }
}

#[test]
fn lift_then_export_mesh() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "e.json", r#"{"surface": "ellipsoid", "axes": [1, 1.3, 1.7], "nu": 6, "nv": 5}"#);
    assert_eq!(status(&liegeo(&["lift", "--in", "e.json", "--out", "l.json"], dir.path())), 0);
    let o = liegeo(&["export-obj", "--in", "l.json", "--out", "m.obj"], dir.path());
    assert_eq!(status(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let obj = std::fs::read_to_string(dir.path().join("m.obj")).unwrap();
    assert_eq!(obj.lines().filter(|l| l.starts_with("v ")).count(), 30);
    assert_eq!(obj.lines().filter(|l| l.starts_with("f ")).count(), 2 * 5 * 4);
    // projected points lie on the ellipsoid
    for l in obj.lines().filter(|l| l.starts_with("v ")) {
        let p: Vec<f64> = l[2..].split(' ').map(|x| x.parse().unwrap()).collect();
        let q = p[0] * p[0] / 2.89 + p[1] * p[1] / 1.69 + p[2] * p[2];
        assert!((q - 1.0).abs() < 1e-9, "{l}");
    }
}

#[test]
fn cauchy_export_writes_mesh_and_fields() {
    let dir = tempfile::tempdir().unwrap();
    let w = "0,0.05,-0.05,0,6,6";
    let o = liegeo(&["cauchy", "--seed", "2", "--window", w, "--export", "s.obj", "--out", "r.json"], dir.path());
    assert_eq!(status(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(json(&dir.path().join("r.json"))["surface"]["truncation"].as_f64().unwrap() < 1e-3);
    assert!(dir.path().join("s.obj").is_file());
    let o = liegeo(&["cauchy", "--seed", "2", "--window", w, "--export", "s.csv"], dir.path());
    assert_eq!(status(&o), 0);
    assert_eq!(std::fs::read_to_string(dir.path().join("s.csv")).unwrap().lines().count(), 37);
}

#[test]
fn validation_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "zero.json", "{}");
    let cases: &[&[&str]] = &[
        &["invariants", "--in", "missing.json"],
        &["cauchy", "--in", "zero.json", "--order", "1"],
        &["cauchy", "--in", "zero.json", "--tol", "0"],
        &["cauchy", "--in", "zero.json", "--window", "1,0,0,1,5,5"],
        &["cauchy", "--in", "zero.json", "--export", "x.obj"],
        &["lift"],
    ];
    for args in cases {
        let o = liegeo(args, dir.path());
        assert_eq!(status(&o), 2, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let o = liegeo(&["invariants", "--in", "missing.json"], dir.path());
    assert!(String::from_utf8_lossy(&o.stderr).contains("cli.InvalidInput"));
}

#[test]
fn numerical_failures_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "char.json", r#"{"mu": [0.0, 1.0]}"#);
    let o = liegeo(&["cauchy", "--in", "char.json"], dir.path());
    assert_eq!(status(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("cauchy_solver.CharacteristicData"));

    let o = liegeo(&["cauchy", "--seed", "3", "--window", "0,5,-5,0,9,9"], dir.path());
    assert_eq!(status(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("cauchy_solver.WindowTooLarge"));

    write(
        dir.path(),
        "torus.json",
        r#"{"surface": "torus", "big_radius": 2, "radius": 0.5, "window": [0.1, 0.6, 0.1, 0.6], "nu": 12, "nv": 12}"#,
    );
    let o = liegeo(&["check-minimal", "--in", "torus.json"], dir.path());
    assert_eq!(status(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("DegenerateSurface"));
}

#[test]
fn csv_surface_input() {
    let dir = tempfile::tempdir().unwrap();
    let mut text = String::from("u,v,x,y,z,nx,ny,nz\n");
    let o = liegeo(&["lift", "--in", "none.csv"], dir.path());
    assert_eq!(status(&o), 2);
    for i in 0..4 {
        for j in 0..3 {
            let (u, v) = (i as f64 * 0.1, j as f64 * 0.2);
            text += &format!("{u},{v},{u},{v},0,0,0,1\n");
        }
    }
    write(dir.path(), "plane.csv", &text);
    let o = liegeo(&["export-obj", "--in", "plane.csv", "--out", "p.obj"], dir.path());
    assert_eq!(status(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let obj = std::fs::read_to_string(dir.path().join("p.obj")).unwrap();
    assert_eq!(obj.lines().filter(|l| l.starts_with("f ")).count(), 12);
}
