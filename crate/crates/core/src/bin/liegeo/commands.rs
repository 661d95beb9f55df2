use crate::Command;
use liegeo::cauchy_solver::{
    evaluate_surface, prolong, verify_solution, BaseFrame, CauchyData, EvaluatedSurface, JetSolution,
    VerificationReport, DEFAULT_TRUST,
};
use liegeo::eds_engine::involutivity_report;
use liegeo::io::{self, CurveFile, SurfaceInput};
use liegeo::legendre_curves::{
    curve_from_curvatures, frenet_frame, is_polarization, CurvatureFunctions, CurveOptions, FrenetData,
    LegendreCurveSamples, PolarizationReport, SynthOptions,
};
use liegeo::surface_invariants::{
    analyze, el_residuals, lie_area, lift_euclidean, pfaffian_residuals, shape_and_mean_curvature,
    structure_residuals, Coframe, ElReport, GridSpec, InvariantField, LegendreSurfaceGrid, LiftOptions,
    PfaffianReport, ReductionOptions, ResidualField,
};
use liegeo::{Error, Result};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

const DEFAULT_EL_TOL: f64 = 1e-4;
const DEFAULT_VERIFY_TOL: f64 = 1e-9;
const DEFAULT_FD_ORDER: usize = 2;
const DEFAULT_EDS_SAMPLES: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Window {
    pub u: [f64; 2],
    pub v: [f64; 2],
    pub nu: usize,
    pub nv: usize,
}

impl Window {
    pub fn grid(&self) -> GridSpec {
        GridSpec::new(self.nu, self.nv, [self.u[0], self.u[1], self.v[0], self.v[1]])
    }
}

pub fn parse_window(s: &str) -> std::result::Result<Window, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 6 {
        return Err(format!("expected u0,u1,v0,v1,nu,nv; got {} fields", parts.len()));
    }
    let f = |k: usize| parts[k].parse::<f64>().map_err(|e| format!("field {}: {e}", k + 1));
    let n = |k: usize| parts[k].parse::<usize>().map_err(|e| format!("field {}: {e}", k + 1));
    let w = Window { u: [f(0)?, f(1)?], v: [f(2)?, f(3)?], nu: n(4)?, nv: n(5)? };
    if !(w.u.iter().chain(&w.v).all(|x| x.is_finite()) && w.u[0] < w.u[1] && w.v[0] < w.v[1]) {
        return Err("window needs finite u0 < u1 and v0 < v1".into());
    }
    if w.nu < 2 || w.nv < 2 {
        return Err("window needs nu, nv >= 2".into());
    }
    Ok(w)
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub command: Command,
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub tol: Option<f64>,
    pub order: Option<usize>,
    pub window: Option<Window>,
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub export: Option<PathBuf>,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidInput(m));
        if let Some(p) = &self.input {
            if !p.is_file() {
                return bad(format!("--in {}: no such file", p.display()));
            }
        }
        let needs_input = !matches!(self.command, Command::EdsReport | Command::Cauchy);
        if needs_input && self.input.is_none() {
            return bad("--in is required".into());
        }
        if self.command == Command::Cauchy && self.input.is_none() && self.seed.is_none() {
            return bad("cauchy needs --in or --seed".into());
        }
        if let Some(o) = self.order {
            if o < 2 {
                return bad(format!("--order {o}: must be >= 2"));
            }
        }
        if let Some(t) = self.tol {
            if !(t > 0.0 && t.is_finite()) {
                return bad(format!("--tol {t}: must be positive"));
            }
        }
        if self.samples == Some(0) {
            return bad("--samples must be >= 1".into());
        }
        if self.export.is_some() && self.window.is_none() {
            return bad("--export needs --window".into());
        }
        if self.command == Command::ExportObj && self.output.is_none() {
            return bad("export-obj needs --out".into());
        }
        Ok(())
    }

    fn input(&self) -> &Path {
        self.input.as_deref().expect("validated")
    }

    fn out(&self) -> Option<&Path> {
        self.output.as_deref()
    }
}

/// Runs one command; returns the exit status for completed runs.
pub fn run(cfg: &RunConfig) -> Result<i32> {
    cfg.validate()?;
    match cfg.command {
        Command::Lift => lift(cfg),
        Command::Invariants => invariants(cfg),
        Command::CheckMinimal => check_minimal(cfg),
        Command::Frenet => frenet(cfg),
        Command::SynthCurve => synth_curve(cfg),
        Command::EdsReport => eds_report(cfg),
        Command::Cauchy => cauchy(cfg),
        Command::ExportObj => export_obj(cfg),
    }
}

fn is_ext(p: &Path, ext: &str) -> bool {
    p.extension().is_some_and(|e| e.eq_ignore_ascii_case(ext))
}

fn legendre_surface(s: SurfaceInput, opts: &LiftOptions) -> Result<LegendreSurfaceGrid> {
    match s {
        SurfaceInput::Analytic(a) => lift_euclidean(&a.sample(), opts),
        SurfaceInput::Euclidean(e) => lift_euclidean(&e, opts),
        SurfaceInput::Legendre(l) => {
            l.validate(1e-8)?;
            Ok(l)
        }
    }
}

fn fd_order(cfg: &RunConfig) -> usize {
    cfg.order.unwrap_or(DEFAULT_FD_ORDER)
}

fn lift(cfg: &RunConfig) -> Result<i32> {
    let mut opts = LiftOptions { fd_order: fd_order(cfg), ..LiftOptions::default() };
    if let Some(t) = cfg.tol {
        opts.curvature_line_tol = t;
    }
    let s = legendre_surface(io::read_surface(cfg.input())?, &opts)?;
    io::write_json(&s, cfg.out())?;
    Ok(0)
}

#[derive(Serialize)]
struct Residuals {
    pfaffian: PfaffianReport,
    structure: Vec<ResidualField>,
    euler_lagrange: ElReport,
}

#[derive(Serialize)]
struct InvariantsReport {
    grid: GridSpec,
    fd_order: usize,
    invariants: InvariantField,
    coframe: Coframe,
    residuals: Residuals,
    lie_area: f64,
    harmonic: bool,
}

fn analysis_opts(cfg: &RunConfig) -> (LiftOptions, ReductionOptions) {
    let acc = fd_order(cfg);
    (
        LiftOptions { fd_order: acc, ..LiftOptions::default() },
        ReductionOptions { fd_order: acc, ..ReductionOptions::default() },
    )
}

fn invariants(cfg: &RunConfig) -> Result<i32> {
    let (lo, ro) = analysis_opts(cfg);
    let acc = ro.fd_order;
    let tol = cfg.tol.unwrap_or(DEFAULT_EL_TOL);
    let s = legendre_surface(io::read_surface(cfg.input())?, &lo)?;
    let a = analyze(&s, &ro)?;
    if let Some(p) = cfg.out().filter(|p| is_ext(p, "csv")) {
        io::write_text(&io::fields_csv(&a.invariants, &a.coframe)?, Some(p))?;
        return Ok(0);
    }
    let shape = shape_and_mean_curvature(&a.invariants, &a.coframe, acc)?;
    let report = InvariantsReport {
        grid: s.grid,
        fd_order: acc,
        residuals: Residuals {
            pfaffian: pfaffian_residuals(&a.frame, acc)?,
            structure: structure_residuals(&a.invariants, &a.coframe, acc)?,
            euler_lagrange: el_residuals(&a.invariants, &a.coframe, tol, acc)?,
        },
        lie_area: lie_area(&a.coframe),
        harmonic: shape.is_harmonic(tol),
        invariants: a.invariants,
        coframe: a.coframe,
    };
    io::write_json(&report, cfg.out())?;
    Ok(0)
}

#[derive(Serialize)]
struct MinimalityReport {
    grid: GridSpec,
    fd_order: usize,
    euler_lagrange: ElReport,
    harmonic: bool,
    max_mean_curvature: f64,
    is_minimal: bool,
}

fn check_minimal(cfg: &RunConfig) -> Result<i32> {
    let (lo, ro) = analysis_opts(cfg);
    let acc = ro.fd_order;
    let tol = cfg.tol.unwrap_or(DEFAULT_EL_TOL);
    let s = legendre_surface(io::read_surface(cfg.input())?, &lo)?;
    let a = analyze(&s, &ro)?;
    let el = el_residuals(&a.invariants, &a.coframe, tol, acc)?;
    let shape = shape_and_mean_curvature(&a.invariants, &a.coframe, acc)?;
    let report = MinimalityReport {
        grid: s.grid,
        fd_order: acc,
        is_minimal: el.is_minimal,
        harmonic: shape.is_harmonic(tol),
        max_mean_curvature: shape.max_mean_curvature(),
        euler_lagrange: el,
    };
    io::write_json(&report, cfg.out())?;
    Ok(0)
}

#[derive(Serialize)]
struct FrenetReport {
    polarization: PolarizationReport,
    frenet: FrenetData,
}

fn curve_options(cfg: &RunConfig) -> CurveOptions {
    let d = CurveOptions::default();
    CurveOptions { tol: cfg.tol.unwrap_or(d.tol), fd_order: cfg.order.unwrap_or(d.fd_order) }
}

fn frenet(cfg: &RunConfig) -> Result<i32> {
    let file: CurveFile = io::read_json(cfg.input())?;
    let c = file.curve()?;
    c.check_shape()?;
    let p = file.polarization(&c)?;
    let opts = curve_options(cfg);
    let polarization = is_polarization(&c, &p, &opts)?;
    let frenet = frenet_frame(&c, &p, &opts)?;
    io::write_json(&FrenetReport { polarization, frenet }, cfg.out())?;
    Ok(0)
}

/// Input of `synth-curve`.
#[derive(Deserialize)]
struct SynthInput {
    #[serde(flatten)]
    curvatures: CurvatureFunctions,
    #[serde(rename = "R0", default)]
    r0: BaseFrame,
    #[serde(default)]
    t0: f64,
    #[serde(default)]
    step: Option<f64>,
    #[serde(default)]
    steps: Option<usize>,
    #[serde(default)]
    jet_order: Option<usize>,
}

#[derive(Serialize)]
struct SynthOutput {
    samples: LegendreCurveSamples,
    frenet: FrenetData,
}

fn synth_curve(cfg: &RunConfig) -> Result<i32> {
    let input: SynthInput = io::read_json(cfg.input())?;
    let d = SynthOptions::default();
    let opts = SynthOptions {
        t0: input.t0,
        step: input.step.unwrap_or(d.step),
        steps: cfg.samples.map(|n| n - 1).or(input.steps).unwrap_or(d.steps),
        jet_order: cfg.order.or(input.jet_order).unwrap_or(d.jet_order),
    };
    if !(opts.step > 0.0 && opts.step.is_finite()) || !opts.t0.is_finite() {
        return Err(Error::InvalidInput("synth-curve needs finite t0 and step > 0".into()));
    }
    let (samples, frenet) = curve_from_curvatures(&input.curvatures, &input.r0.element()?, &opts)?;
    io::write_json(&SynthOutput { samples, frenet }, cfg.out())?;
    Ok(0)
}

fn eds_report(cfg: &RunConfig) -> Result<i32> {
    let rep = involutivity_report(cfg.samples.unwrap_or(DEFAULT_EDS_SAMPLES), cfg.seed.unwrap_or(0))?;
    io::write_json(&rep, cfg.out())?;
    Ok(0)
}

#[derive(Serialize)]
struct SurfaceSummary {
    grid: GridSpec,
    truncation: f64,
    invariants: InvariantField,
    coframe: Coframe,
}

#[derive(Serialize)]
struct CauchyReport {
    order: usize,
    tol: f64,
    passed: bool,
    verification: VerificationReport,
    trust_radius: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    surface: Option<SurfaceSummary>,
    solution: JetSolution,
}

fn cauchy_data(cfg: &RunConfig) -> Result<CauchyData> {
    let mut data = match &cfg.input {
        Some(p) => io::read_json::<CauchyData>(p)?,
        None => CauchyData::random(cfg.seed.expect("validated"), cfg.order.unwrap_or(liegeo::cauchy_solver::DEFAULT_ORDER)),
    };
    if let Some(o) = cfg.order {
        data.order = o;
    }
    data.validate()?;
    Ok(data)
}

fn write_export(path: &Path, ev: &EvaluatedSurface) -> Result<()> {
    if is_ext(path, "csv") {
        io::write_text(&io::fields_csv(&ev.invariants, &ev.coframe)?, Some(path))
    } else if is_ext(path, "obj") {
        io::write_text(&io::obj_mesh(&ev.surface.grid, &io::projection(&ev.surface)?), Some(path))
    } else {
        Err(Error::InvalidInput(format!("--export {}: expected .obj or .csv", path.display())))
    }
}

fn cauchy(cfg: &RunConfig) -> Result<i32> {
    let data = cauchy_data(cfg)?;
    let tol = cfg.tol.unwrap_or(DEFAULT_VERIFY_TOL);
    let sol = prolong(&data)?;
    let verification = verify_solution(&sol);
    let passed = verification.passed(tol);
    let ev = match cfg.window {
        Some(w) => {
            let g = w.grid();
            g.validate()?;
            Some(evaluate_surface(&sol, g)?)
        }
        None => None,
    };
    if let (Some(p), Some(ev)) = (&cfg.export, &ev) {
        write_export(p, ev)?;
    }
    let report = CauchyReport {
        order: sol.order,
        tol,
        passed,
        trust_radius: sol.trust_radius(DEFAULT_TRUST),
        surface: ev.map(|e| SurfaceSummary {
            grid: e.surface.grid,
            truncation: e.truncation,
            invariants: e.invariants,
            coframe: e.coframe,
        }),
        verification,
        solution: sol,
    };
    io::write_json(&report, cfg.out())?;
    if !passed {
        let v = report.verification.violations(tol).join(", ");
        eprintln!("liegeo: verification above {tol:e}: {v}");
        return Ok(3);
    }
    Ok(0)
}

fn export_obj(cfg: &RunConfig) -> Result<i32> {
    let path = cfg.input();
    let surface = if is_ext(path, "csv") {
        io::read_surface(path)?
    } else {
        let value: serde_json::Value = io::read_json(path)?;
        let is_surface = value.get("grid").is_some() || value.get("surface").is_some();
        if is_surface {
            serde_json::from_value(value).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?
        } else {
            let window = cfg
                .window
                .ok_or_else(|| Error::InvalidInput("export-obj of Cauchy data needs --window".into()))?;
            let mut data: CauchyData =
                serde_json::from_value(value).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?;
            if let Some(o) = cfg.order {
                data.order = o;
            }
            data.validate()?;
            let g = window.grid();
            g.validate()?;
            let ev = evaluate_surface(&prolong(&data)?, g)?;
            SurfaceInput::Legendre(ev.surface)
        }
    };
    let (grid, points) = match surface {
        SurfaceInput::Analytic(a) => {
            let e = a.sample();
            (e.grid, e.f)
        }
        SurfaceInput::Euclidean(e) => {
            e.validate()?;
            (e.grid, e.f)
        }
        SurfaceInput::Legendre(l) => {
            l.validate(1e-8)?;
            (l.grid, io::projection(&l)?)
        }
    };
    io::write_text(&io::obj_mesh(&grid, &points), cfg.out())?;
    Ok(0)
}
