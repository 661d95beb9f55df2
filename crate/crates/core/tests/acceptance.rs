//! The nine acceptance criteria, one line each. Runs without the libtest
//! harness so the lines are printed on every `cargo test`.

use liegeo::cauchy_solver::{evaluate_surface, prolong, verify_solution, CauchyData};
use liegeo::eds_engine::involutivity_report;
use liegeo::legendre_curves::{
    curve_from_curvatures, frenet_frame, CurveOptions, CurvatureFunctions, PolarizationSection, SynthOptions,
};
use liegeo::lie_core::{
    inner, oriented_contact, random_group_element, sphere_to_quadric, LieGroupElement, OrientedSphereElement,
};
use liegeo::surface_invariants::{
    analyze, blaschke_coframe_closed_form, el_residuals, invariants_from_frames, lift_euclidean, pfaffian_residuals,
    reduce_to_normal_frame, shape_and_mean_curvature, Coframe, GridSpec, InvariantField, LiftOptions,
    LegendreSurfaceGrid, ReductionOptions, SurfaceAnalysis,
};
use liegeo::{surfaces, Error};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

type Outcome = Result<String, String>;

const AXES: [f64; 3] = [1.0, 1.3, 1.7];

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn ellipsoid_lift(n: usize) -> LegendreSurfaceGrid {
    let g = surfaces::ellipsoid(AXES, surfaces::ELLIPSOID_WINDOW, n, n);
    lift_euclidean(&g, &LiftOptions::default()).expect("ellipsoid lift")
}

fn max_abs(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(0.0, |m, x| m.max(x.abs()))
}

// ---------------------------------------------------------------------------
// 1. quadric algebra

fn random_element(rng: &mut ChaCha8Rng) -> OrientedSphereElement {
    let mut p = || std::array::from_fn(|_| rng.random_range(-5.0..5.0));
    let c: [f64; 3] = p();
    match rng.random_range(0..3) {
        0 => OrientedSphereElement::Sphere { center: c, radius: nonzero(rng, 3.0) },
        1 => OrientedSphereElement::Plane { point: c, normal: unit(rng) },
        _ => OrientedSphereElement::PointSphere { point: c },
    }
}

fn nonzero(rng: &mut ChaCha8Rng, s: f64) -> f64 {
    let r: f64 = rng.random_range(0.1..s);
    if rng.random_bool(0.5) {
        r
    } else {
        -r
    }
}

fn unit(rng: &mut ChaCha8Rng) -> [f64; 3] {
    loop {
        let v: [f64; 3] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if n > 0.1 && n <= 1.0 {
            return v.map(|x| x / n);
        }
    }
}

fn dist(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Signed Euclidean tangency gap and its scale.
fn tangency_gap(x: &OrientedSphereElement, y: &OrientedSphereElement) -> (f64, f64) {
    use OrientedSphereElement::*;
    let sphere = |e: &OrientedSphereElement| match *e {
        Sphere { center, radius } => Some((center, radius)),
        PointSphere { point } => Some((point, 0.0)),
        _ => None,
    };
    match (sphere(x), sphere(y), x, y) {
        (Some((c1, r1)), Some((c2, r2)), _, _) => {
            (dist(&c1, &c2) - (r1 - r2).abs(), 1.0 + dist(&c1, &c2) + r1.abs() + r2.abs())
        }
        (Some((c, r)), None, _, Plane { point, normal }) | (None, Some((c, r)), Plane { point, normal }, _) => {
            let d = [c[0] - point[0], c[1] - point[1], c[2] - point[2]];
            (dot(normal, &d) - r, 1.0 + dist(&c, point) + r.abs())
        }
        (None, None, Plane { normal: n, .. }, Plane { normal: m, .. }) => (1.0 - dot(n, m), 1.0),
        _ => unreachable!(),
    }
}

/// A random element in oriented contact with `x`.
fn tangent_to(rng: &mut ChaCha8Rng, x: &OrientedSphereElement) -> OrientedSphereElement {
    use OrientedSphereElement::*;
    let d = unit(rng);
    match *x {
        Sphere { center: c, .. } | PointSphere { point: c } if rng.random_bool(0.5) => {
            let r = if let Sphere { radius, .. } = *x { radius } else { 0.0 };
            let r2 = nonzero(rng, 3.0);
            let s = (r - r2).abs();
            let c2 = std::array::from_fn(|k| c[k] + s * d[k]);
            Sphere { center: c2, radius: r2 }
        }
        Sphere { center: c, radius: r } => {
            // plane through the contact point c − r·n
            let t: [f64; 3] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
            let tn = dot(&t, &d);
            let point = std::array::from_fn(|k| c[k] - r * d[k] + (t[k] - tn * d[k]));
            Plane { point, normal: d }
        }
        PointSphere { point: c } => Plane { point: c, normal: d },
        Plane { point, normal } => {
            let r = nonzero(rng, 3.0);
            let t: [f64; 3] = std::array::from_fn(|_| rng.random_range(-2.0..2.0));
            let tn = dot(&t, &normal);
            let center = std::array::from_fn(|k| point[k] + (t[k] - tn * normal[k]) + r * normal[k]);
            Sphere { center, radius: r }
        }
        Infinity => Infinity,
    }
}

fn ac1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        let q = sphere_to_quadric(&random_element(&mut rng));
        let n = q.rep.norm();
        worst = worst.max(inner(&q.rep, &q.rep).abs() / (n * n));
    }
    let (mut disagreements, mut contacts, mut pairs) = (0, 0, 0);
    while pairs < 10_000 {
        let x = random_element(&mut rng);
        let y = if pairs % 2 == 0 { tangent_to(&mut rng, &x) } else { random_element(&mut rng) };
        let (gap, scale) = tangency_gap(&x, &y);
        let euclid = gap.abs() <= 1e-9 * scale;
        if !euclid && gap.abs() <= 1e-6 * scale {
            continue;
        }
        pairs += 1;
        contacts += euclid as usize;
        if oriented_contact(&sphere_to_quadric(&x), &sphere_to_quadric(&y), 1e-9) != euclid {
            disagreements += 1;
        }
    }
    check(
        worst <= 1e-12 && disagreements == 0,
        format!("max |<V,V>|/|V|^2 = {worst:.1e}; {disagreements} disagreements on {pairs} pairs ({contacts} in contact)"),
    )
}

// ---------------------------------------------------------------------------
// 2. frame reduction convergence

fn ac2() -> Outcome {
    let mut rows = Vec::new();
    for n in [33, 65, 129] {
        let s = ellipsoid_lift(n);
        let (frame, _) = reduce_to_normal_frame(&s, &ReductionOptions::default()).map_err(|e| e.to_string())?;
        let rep = pfaffian_residuals(&frame, 2).map_err(|e| e.to_string())?;
        rows.push((s.grid.hu(), rep.max));
    }
    let orders: Vec<f64> = rows.windows(2).map(|w| (w[0].1 / w[1].1).ln() / (w[0].0 / w[1].0).ln()).collect();
    check(
        orders.iter().all(|p| (p - 2.0).abs() <= 0.3),
        format!("residuals {:.2e} {:.2e} {:.2e}; observed orders {:.2} {:.2}", rows[0].1, rows[1].1, rows[2].1, orders[0], orders[1]),
    )
}

// ---------------------------------------------------------------------------
// 3. Lie invariance

fn fields(inv: &InvariantField, cof: &Coframe) -> [Vec<f64>; 8] {
    [
        inv.q1.clone(),
        inv.q2.clone(),
        inv.p1.clone(),
        inv.p2.clone(),
        inv.r1.clone(),
        inv.r2.clone(),
        cof.a.clone(),
        cof.b.clone(),
    ]
}

fn ac3() -> Outcome {
    let opts = ReductionOptions::default();
    let run = |s: &LegendreSurfaceGrid| -> Result<SurfaceAnalysis, Error> { analyze(s, &opts) };
    let coarse = ellipsoid_lift(65);
    let fine = ellipsoid_lift(129);
    let base = run(&coarse).map_err(|e| e.to_string())?;
    let fine = run(&fine).map_err(|e| e.to_string())?;
    let g = coarse.grid;
    let fb = fields(&base.invariants, &base.coframe);
    let ff = fields(&fine.invariants, &fine.coframe);
    // discretization error estimate per field from the refined grid
    let est: Vec<f64> = (0..8)
        .map(|f| max_abs((0..g.len()).map(|k| {
            let (i, j) = g.node(k);
            fb[f][k] - ff[f][fine.invariants.grid.idx(2 * i, 2 * j)]
        })))
        .collect();
    let mut failures = 0;
    let mut worst = 0.0f64;
    for seed in 0..20 {
        let a = random_group_element(1000 + seed);
        let t = run(&coarse.transform(&a)).map_err(|e| e.to_string())?;
        let ft = fields(&t.invariants, &t.coframe);
        let mut ok = true;
        for f in 0..8 {
            for k in 0..g.len() {
                let d = (ft[f][k] - fb[f][k]).abs();
                worst = worst.max(d / est[f]);
                ok &= d <= 10.0 * est[f];
            }
        }
        failures += !ok as usize;
    }
    check(
        failures == 0,
        format!("{failures} failures in 20 transformations; worst nodewise deviation {worst:.1e} x error estimate"),
    )
}

// ---------------------------------------------------------------------------
// 4. coframe cross-oracle

fn ac4() -> Outcome {
    let w = surfaces::ELLIPSOID_WINDOW;
    let window = [w[0], w[0] + 44.0 / 128.0, w[2], w[2] + 76.0 / 128.0];
    let g = surfaces::ellipsoid(AXES, window, 45, 77);
    let s = lift_euclidean(&g, &LiftOptions::default()).map_err(|e| e.to_string())?;
    let (_, cof) = reduce_to_normal_frame(&s, &ReductionOptions::default()).map_err(|e| e.to_string())?;
    let cf = blaschke_coframe_closed_form(&g, 6, 1e-8).map_err(|e| e.to_string())?;
    // the reduction fixes a > 0 at the anchor node; compare up to that sign
    let sign = (cof.a[0] * cf.a[0]).signum();
    let rel = |x: &[f64], y: &[f64]| max_abs(x.iter().zip(y).map(|(p, q)| (p - sign * q) / q));
    let (ra, rb) = (rel(&cof.a, &cf.a), rel(&cof.b, &cf.b));
    check(
        ra <= 1e-3 && rb <= 1e-3,
        format!("relative deviation a {ra:.1e}, b {rb:.1e} at step 1/128 (overall sign {sign:+})"),
    )
}

// ---------------------------------------------------------------------------
// 5. degeneracy detection

fn ac5() -> Outcome {
    let opts = ReductionOptions::default();
    let torus = surfaces::torus(2.0, 0.5, [0.1, 0.6, 0.2, 0.8], 33, 33);
    let t = lift_euclidean(&torus, &LiftOptions::default()).map_err(|e| e.to_string())?;
    let sphere = surfaces::sphere(1.0, [0.3, 0.8, 0.2, 0.9], 33, 33);
    let s = lift_euclidean(&sphere, &LiftOptions::default()).map_err(|e| e.to_string())?;
    let te = analyze(&t, &opts).err();
    let se = analyze(&s, &opts).err();
    let ok = matches!(te, Some(Error::DegenerateSurface(..))) && matches!(se, Some(Error::StalkCollapse(..)));
    let name = |e: &Option<Error>| e.as_ref().map(|e| e.code()).unwrap_or("no error");
    check(ok, format!("torus: {}; sphere: {}", name(&te), name(&se)))
}

// ---------------------------------------------------------------------------
// 6. curve round trip

fn ac6() -> Outcome {
    let opts = SynthOptions { t0: 0.0, step: 1e-3, steps: 200, jet_order: 12 };
    let copts = CurveOptions::default();
    let mut worst = 0.0f64;
    let mut worst_inv = 0.0f64;
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(600 + seed);
        let mut series = |s: f64| (0..=6).map(|n| rng.random_range(-s..s) * 0.5f64.powi(n)).collect::<Vec<f64>>();
        let k: [Vec<f64>; 4] = std::array::from_fn(|_| series(1.0));
        let mut mu = series(0.2);
        mu[0] += 1.0;
        let kf = CurvatureFunctions { k, mu };
        let (c, _) = curve_from_curvatures(&kf, &LieGroupElement::identity(), &opts).map_err(|e| e.to_string())?;
        let p = PolarizationSection::first_vector(&c);
        let dev = |f: &liegeo::legendre_curves::FrenetData| {
            max_abs((0..c.len()).flat_map(|i| {
                let (ke, me) = kf.eval(c.t[i]);
                (0..4).map(move |q| f.k[i][q] - ke[q]).chain(std::iter::once(f.mu[i] - me))
            }))
        };
        let f = frenet_frame(&c, &p, &copts).map_err(|e| e.to_string())?;
        worst = worst.max(dev(&f));
        if seed < 10 {
            let a = random_group_element(6000 + seed);
            let g = frenet_frame(&c.transform(&a), &p.transform(&a), &copts).map_err(|e| e.to_string())?;
            worst_inv = worst_inv.max(dev(&g));
        }
    }
    check(
        worst <= 1e-6 && worst_inv <= 1e-6,
        format!("max curvature error {worst:.1e} over 20 sets; {worst_inv:.1e} after 10 group transformations"),
    )
}

// ---------------------------------------------------------------------------
// 7. EDS claims

fn ac7() -> Outcome {
    let rep = involutivity_report(1000, 7).map_err(|e| e.to_string())?;
    let fiber_bad = rep.fiber_dimensions.iter().filter(|&&d| d != 6).count();
    let polar_bad = rep.polar_dimensions.iter().filter(|&&d| d != 2).count();
    check(
        rep.all_fiber_six && rep.all_polar_two && fiber_bad == 0 && polar_bad == 0,
        format!(
            "{} polar dims, {} not equal to 2; {} fiber dims, {} not equal to 6",
            rep.polar_dimensions.len(),
            polar_bad,
            rep.fiber_dimensions.len(),
            fiber_bad
        ),
    )
}

// ---------------------------------------------------------------------------
// 8. Cauchy solver

fn slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>()
}

const RADII: [f64; 5] = [0.04, 0.055, 0.075, 0.1, 0.13];

fn ac8() -> Outcome {
    let order = 6;
    let (mut worst_eq, mut worst_bd, mut worst_time) = (0.0f64, 0.0f64, 0.0f64);
    let mut slopes = Vec::new();
    for seed in 0..10u64 {
        let t0 = Instant::now();
        let j = prolong(&CauchyData::random(800 + seed, order)).map_err(|e| format!("seed {seed}: {e}"))?;
        let rep = verify_solution(&j);
        worst_bd = worst_bd.max(rep.get("boundary_h").unwrap()).max(rep.get("boundary_w").unwrap());
        worst_eq = worst_eq.max(rep.max());
        let mut pts = Vec::new();
        for r in RADII {
            let grid = GridSpec::new(25, 25, [-r, r, -r, r]);
            let s = evaluate_surface(&j, grid).map_err(|e| format!("seed {seed}: {e}"))?;
            let (_, cof, inv) = invariants_from_frames(grid, s.frame.frames, 6).map_err(|e| e.to_string())?;
            let el = el_residuals(&inv, &cof, 1.0, 6).map_err(|e| e.to_string())?;
            pts.push((r.ln(), el.r1.interior_max(&grid, 4).max(el.r2.interior_max(&grid, 4)).ln()));
        }
        slopes.push(slope(&pts));
        worst_time = worst_time.max(t0.elapsed().as_secs_f64());
    }
    let target = (order - 1) as f64;
    let ok = worst_eq <= 1e-10
        && worst_bd <= 1e-12
        && slopes.iter().all(|s| (s - target).abs() <= 0.15 * target)
        && worst_time < 120.0;
    let (lo, hi) = slopes.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &s| (a.min(s), b.max(s)));
    check(
        ok,
        format!(
            "max equation coefficient {worst_eq:.1e}; boundary identities {worst_bd:.1e}; EL slopes {lo:.2}..{hi:.2} (target {target}); slowest set {worst_time:.2} s"
        ),
    )
}

// ---------------------------------------------------------------------------
// 9. mean-curvature equivalence

fn ac9() -> Outcome {
    let mut cases: Vec<(String, bool, bool, bool)> = Vec::new();
    let tol = 1e-4;
    let mut push = |name: String, inv: &InvariantField, cof: &Coframe, acc: usize, expect: bool| -> Result<(), String> {
        let el = el_residuals(inv, cof, tol, acc).map_err(|e| e.to_string())?;
        let sh = shape_and_mean_curvature(inv, cof, acc).map_err(|e| e.to_string())?;
        cases.push((name, el.is_minimal, sh.is_harmonic(tol), expect));
        Ok(())
    };
    let second = ([1.0, 1.5, 2.2], [1.15, 1.6, 2.6, 3.4]);
    for (k, (axes, window)) in [(AXES, surfaces::ELLIPSOID_WINDOW), second].into_iter().enumerate() {
        let g = surfaces::ellipsoid(axes, window, 33, 33);
        let s = lift_euclidean(&g, &LiftOptions::default()).map_err(|e| e.to_string())?;
        let an = analyze(&s, &ReductionOptions::default()).map_err(|e| e.to_string())?;
        push(format!("ellipsoid {k}"), &an.invariants, &an.coframe, 2, false)?;
        let t = analyze(&s.transform(&random_group_element(90 + k as u64)), &ReductionOptions::default())
            .map_err(|e| e.to_string())?;
        push(format!("transformed ellipsoid {k}"), &t.invariants, &t.coframe, 2, false)?;
    }
    for seed in 0..10u64 {
        let j = prolong(&CauchyData::random(800 + seed, 6)).map_err(|e| e.to_string())?;
        let grid = GridSpec::new(25, 25, [-0.04, 0.04, -0.04, 0.04]);
        let s = evaluate_surface(&j, grid).map_err(|e| e.to_string())?;
        push(format!("cauchy {seed} series"), &s.invariants, &s.coframe, 6, true)?;
        let (_, cof, inv) = invariants_from_frames(grid, s.frame.frames, 6).map_err(|e| e.to_string())?;
        push(format!("cauchy {seed} pipeline"), &inv, &cof, 6, true)?;
    }
    let disagree: Vec<&str> = cases.iter().filter(|c| c.1 != c.2).map(|c| c.0.as_str()).collect();
    let unexpected: Vec<&str> = cases.iter().filter(|c| c.1 != c.3).map(|c| c.0.as_str()).collect();
    let minimal = cases.iter().filter(|c| c.1).count();
    check(
        disagree.is_empty() && unexpected.is_empty(),
        format!(
            "{} surfaces, {minimal} minimal, {} non-minimal; disagreements {:?}; unexpected {:?}",
            cases.len(),
            cases.len() - minimal,
            disagree,
            unexpected
        ),
    )
}

fn main() {
    // runtime limits in seconds where the criterion states one
    let criteria: [(&str, fn() -> Outcome, Option<f64>); 9] = [
        ("quadric algebra", ac1, Some(5.0)),
        ("frame reduction convergence", ac2, Some(30.0)),
        ("Lie invariance", ac3, None),
        ("coframe cross-oracle", ac4, None),
        ("degeneracy detection", ac5, None),
        ("curve round trip", ac6, None),
        ("EDS claims", ac7, Some(10.0)),
        ("Cauchy solver", ac8, None),
        ("mean-curvature equivalence", ac9, None),
    ];
    let mut failed = 0;
    for (i, (name, f, limit)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let mut out = f();
        let secs = t.elapsed().as_secs_f64();
        if let (Some(l), Ok(d)) = (limit, &out) {
            if secs > *l {
                out = Err(format!("{d}; exceeded {l} s"));
            }
        }
        let (tag, detail) = match &out {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        println!("AC{} {tag} {name}: {detail} [{secs:.2} s]", i + 1);
        failed += out.is_err() as usize;
    }
    println!("acceptance: {} of 9 criteria passed", 9 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
