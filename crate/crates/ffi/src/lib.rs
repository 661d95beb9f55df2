//! C ABI for `liegeo`.
//!
//! Conventions:
//! - Every fallible call returns an [`LgStatus`]; on failure the message and
//!   the module-qualified error code are available from
//!   [`lg_last_error_message`] and [`lg_last_error_code`] on the same thread.
//! - Objects are opaque handles created by `lg_*_new`/`lg_*_from_*` style
//!   calls and released with the matching `lg_*_free`. Freeing NULL is a no-op.
//! - Strings returned through `char **` are owned by the caller and released
//!   with [`lg_string_free`].
//! - Grids are u-major: node (i, j) is at index `i * nv + j`.
//! - Matrices are 6x6 row-major.

use liegeo::cauchy_solver::{evaluate_surface, prolong, verify_solution, CauchyData, JetSolution};
use liegeo::eds_engine::involutivity_report;
use liegeo::io::SurfaceInput;
use liegeo::lie_core::{self, MinkVector};
use liegeo::surface_invariants::{
    analyze, el_residuals, lift_euclidean, EuclideanSurfaceGrid, GridSpec, LegendreSurfaceGrid, LiftOptions,
    ReductionOptions, SurfaceAnalysis,
};
use liegeo::Error;
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

/// Result of an API call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LgStatus {
    Ok = 0,
    /// A required pointer argument was NULL.
    NullPointer = 1,
    /// The input violates a precondition (bad JSON, invalid grid, ...).
    InvalidInput = 2,
    /// The computation failed numerically (degenerate surface, ...).
    NumericalFailure = 3,
    /// An internal panic was caught at the boundary.
    Panic = 4,
}

/// A Legendre surface on a grid.
pub struct LgSurface(LegendreSurfaceGrid);

/// Normal frame, coframe and invariants of a surface.
pub struct LgAnalysis(SurfaceAnalysis);

/// Cauchy data for the series solver.
pub struct LgCauchyData(CauchyData);

/// A series solution of the Cauchy problem.
pub struct LgJetSolution(JetSolution);

thread_local! {
    static LAST_ERROR: RefCell<Option<(CString, CString)>> = const { RefCell::new(None) };
}

fn set_error(code: &str, msg: &str) {
    let clean = |s: &str| CString::new(s.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some((clean(code), clean(msg))));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn fail(err: Error) -> LgStatus {
    set_error(err.code(), &err.to_string());
    if err.is_validation() {
        LgStatus::InvalidInput
    } else {
        LgStatus::NumericalFailure
    }
}

fn null(what: &str) -> LgStatus {
    set_error("ffi.NullPointer", &format!("{what} is NULL"));
    LgStatus::NullPointer
}

/// Runs `f` with panics converted to [`LgStatus::Panic`].
fn guard(f: impl FnOnce() -> Result<(), LgStatus>) -> LgStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => LgStatus::Ok,
        Ok(Err(s)) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error("ffi.Panic", &msg);
            LgStatus::Panic
        }
    }
}

fn lift<T>(r: liegeo::Result<T>) -> Result<T, LgStatus> {
    r.map_err(fail)
}

unsafe fn str_arg<'a>(s: *const c_char, what: &str) -> Result<&'a str, LgStatus> {
    if s.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|e| fail(Error::InvalidInput(format!("{what}: {e}"))))
}

unsafe fn ref_arg<'a, T>(p: *const T, what: &str) -> Result<&'a T, LgStatus> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, LgStatus> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn slice_arg<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], LgStatus> {
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_out<'a>(p: *mut f64, len: usize, what: &str) -> Result<&'a mut [f64], LgStatus> {
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

fn parse_json<T: serde::de::DeserializeOwned>(s: &str) -> Result<T, LgStatus> {
    serde_json::from_str(s).map_err(|e| fail(Error::InvalidInput(e.to_string())))
}

fn emit_json<T: serde::Serialize>(value: &T, out: &mut *mut c_char) -> Result<(), LgStatus> {
    let s = lift(liegeo::io::to_json(value))?;
    *out = CString::new(s).map_err(|e| fail(Error::Io(e.to_string())))?.into_raw();
    Ok(())
}

fn boxed<T>(v: T) -> *mut T {
    Box::into_raw(Box::new(v))
}

/// Message of the last failed call on this thread, or NULL. The pointer is
/// valid until the next API call on the same thread.
#[no_mangle]
pub extern "C" fn lg_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |(_, m)| m.as_ptr()))
}

/// Module-qualified code of the last failed call (e.g.
/// "surface_invariants.DegenerateSurface"), or NULL.
#[no_mangle]
pub extern "C" fn lg_last_error_code() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |(c, _)| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn lg_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `s` must be NULL or a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn lg_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// The Lie inner product of two vectors of R^(4,2).
///
/// # Safety
/// `v` and `w` must point to 6 doubles each.
#[no_mangle]
pub unsafe extern "C" fn lg_inner(v: *const f64, w: *const f64, out: *mut f64) -> LgStatus {
    guard(|| {
        let v = slice_arg(v, 6, "v")?;
        let w = slice_arg(w, 6, "w")?;
        let out = out_arg(out, "out")?;
        let mv = |s: &[f64]| MinkVector(std::array::from_fn(|k| s[k]));
        *out = lie_core::inner(&mv(v), &mv(w));
        Ok(())
    })
}

/// Point sphere of `p` (3 doubles) into `out` (6 doubles).
///
/// # Safety
/// Pointers must be valid for the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn lg_lift_point(p: *const f64, out: *mut f64) -> LgStatus {
    guard(|| {
        let p = slice_arg(p, 3, "p")?;
        let out = slice_out(out, 6, "out")?;
        out.copy_from_slice(&lie_core::lift_point(&[p[0], p[1], p[2]]).0);
        Ok(())
    })
}

/// Tangent plane through `p` with unit normal `n` into `out` (6 doubles).
///
/// # Safety
/// Pointers must be valid for the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn lg_lift_plane(p: *const f64, n: *const f64, out: *mut f64) -> LgStatus {
    guard(|| {
        let p = slice_arg(p, 3, "p")?;
        let n = slice_arg(n, 3, "n")?;
        let out = slice_out(out, 6, "out")?;
        let norm = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(fail(Error::NonUnitNormal(norm)));
        }
        out.copy_from_slice(&lie_core::lift_plane(&[p[0], p[1], p[2]], &[n[0], n[1], n[2]]).0);
        Ok(())
    })
}

/// Surface from JSON: a Euclidean grid, a Legendre grid or an analytic
/// description. Euclidean input is lifted.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lg_surface_from_json(json: *const c_char, out: *mut *mut LgSurface) -> LgStatus {
    guard(|| {
        let json = str_arg(json, "json")?;
        let out = out_arg(out, "out")?;
        let s = match parse_json::<SurfaceInput>(json)? {
            SurfaceInput::Analytic(a) => lift(lift_euclidean(&a.sample(), &LiftOptions::default()))?,
            SurfaceInput::Euclidean(e) => lift(lift_euclidean(&e, &LiftOptions::default()))?,
            SurfaceInput::Legendre(l) => {
                lift(l.validate(1e-8))?;
                l
            }
        };
        *out = boxed(LgSurface(s));
        Ok(())
    })
}

/// Surface from Euclidean samples in curvature-line coordinates. `window`
/// is (u0, u1, v0, v1); `f` and `n` hold 3·nu·nv doubles (points and unit
/// normals, u-major). Derivatives are taken by differences of order
/// `fd_order` (2, 4 or 6).
///
/// # Safety
/// Pointers must be valid for the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn lg_surface_from_euclidean(
    nu: usize,
    nv: usize,
    window: *const f64,
    f: *const f64,
    n: *const f64,
    fd_order: usize,
    out: *mut *mut LgSurface,
) -> LgStatus {
    guard(|| {
        let w = slice_arg(window, 4, "window")?;
        let out = out_arg(out, "out")?;
        let grid = GridSpec::new(nu, nv, [w[0], w[1], w[2], w[3]]);
        lift(grid.validate())?;
        let len = nu * nv;
        let f = slice_arg(f, 3 * len, "f")?;
        let n = slice_arg(n, 3 * len, "n")?;
        let triples = |s: &[f64]| s.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
        let e = EuclideanSurfaceGrid { grid, f: triples(f), n: triples(n), partials: None };
        lift(e.validate())?;
        let opts = LiftOptions { fd_order, ..LiftOptions::default() };
        *out = boxed(LgSurface(lift(lift_euclidean(&e, &opts))?));
        Ok(())
    })
}

/// # Safety
/// `s` must be NULL or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn lg_surface_free(s: *mut LgSurface) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Grid size of a surface.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn lg_surface_grid(s: *const LgSurface, nu: *mut usize, nv: *mut usize) -> LgStatus {
    guard(|| {
        let s = ref_arg(s, "surface")?;
        *out_arg(nu, "nu")? = s.0.grid.nu;
        *out_arg(nv, "nv")? = s.0.grid.nv;
        Ok(())
    })
}

/// The surface as Legendre grid JSON.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn lg_surface_to_json(s: *const LgSurface, out: *mut *mut c_char) -> LgStatus {
    guard(|| {
        let s = ref_arg(s, "surface")?;
        emit_json(&s.0, out_arg(out, "out")?)
    })
}

/// Reduction to the normal frame with differences of order `fd_order`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn lg_surface_analyze(
    s: *const LgSurface,
    fd_order: usize,
    out: *mut *mut LgAnalysis,
) -> LgStatus {
    guard(|| {
        let s = ref_arg(s, "surface")?;
        let out = out_arg(out, "out")?;
        let opts = ReductionOptions { fd_order, ..ReductionOptions::default() };
        *out = boxed(LgAnalysis(lift(analyze(&s.0, &opts))?));
        Ok(())
    })
}

/// # Safety
/// `a` must be NULL or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn lg_analysis_free(a: *mut LgAnalysis) {
    if !a.is_null() {
        drop(Box::from_raw(a));
    }
}

/// Invariants into `out`, 6·nu·nv doubles: node-major, each node holding
/// (q1, q2, p1, p2, r1, r2).
///
/// # Safety
/// `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn lg_analysis_invariants(a: *const LgAnalysis, out: *mut f64, len: usize) -> LgStatus {
    guard(|| {
        let inv = &ref_arg(a, "analysis")?.0.invariants;
        let n = inv.grid.len();
        if len != 6 * n {
            return Err(fail(Error::InvalidInput(format!("buffer of {len} doubles, need {}", 6 * n))));
        }
        let out = slice_out(out, len, "out")?;
        for k in 0..n {
            out[6 * k..6 * k + 6].copy_from_slice(&inv.at(k));
        }
        Ok(())
    })
}

/// Coframe coefficients a, b (each nu·nv doubles).
///
/// # Safety
/// `a_out` and `b_out` must each hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn lg_analysis_coframe(
    a: *const LgAnalysis,
    a_out: *mut f64,
    b_out: *mut f64,
    len: usize,
) -> LgStatus {
    guard(|| {
        let c = &ref_arg(a, "analysis")?.0.coframe;
        if len != c.a.len() {
            return Err(fail(Error::InvalidInput(format!("buffer of {len} doubles, need {}", c.a.len()))));
        }
        slice_out(a_out, len, "a_out")?.copy_from_slice(&c.a);
        slice_out(b_out, len, "b_out")?.copy_from_slice(&c.b);
        Ok(())
    })
}

/// Largest Euler-Lagrange residuals and whether both are within `tol`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn lg_analysis_euler_lagrange(
    a: *const LgAnalysis,
    tol: f64,
    fd_order: usize,
    r1_max: *mut f64,
    r2_max: *mut f64,
    is_minimal: *mut bool,
) -> LgStatus {
    guard(|| {
        let a = &ref_arg(a, "analysis")?.0;
        let rep = lift(el_residuals(&a.invariants, &a.coframe, tol, fd_order))?;
        *out_arg(r1_max, "r1_max")? = rep.r1.max;
        *out_arg(r2_max, "r2_max")? = rep.r2.max;
        *out_arg(is_minimal, "is_minimal")? = rep.is_minimal;
        Ok(())
    })
}

/// Cauchy data from JSON (coefficient lists k0..k3, h, w, mu, optional R0
/// and order).
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn lg_cauchy_data_from_json(json: *const c_char, out: *mut *mut LgCauchyData) -> LgStatus {
    guard(|| {
        let d: CauchyData = parse_json(str_arg(json, "json")?)?;
        lift(d.validate())?;
        *out_arg(out, "out")? = boxed(LgCauchyData(d));
        Ok(())
    })
}

/// Random polynomial data with μ ≡ 1 and R(0) = I.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn lg_cauchy_data_random(seed: u64, order: usize, out: *mut *mut LgCauchyData) -> LgStatus {
    guard(|| {
        let d = CauchyData::random(seed, order);
        lift(d.validate())?;
        *out_arg(out, "out")? = boxed(LgCauchyData(d));
        Ok(())
    })
}

/// # Safety
/// `d` must be NULL or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn lg_cauchy_data_free(d: *mut LgCauchyData) {
    if !d.is_null() {
        drop(Box::from_raw(d));
    }
}

/// Solves for the series of the data's order.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn lg_cauchy_solve(d: *const LgCauchyData, out: *mut *mut LgJetSolution) -> LgStatus {
    guard(|| {
        let d = ref_arg(d, "data")?;
        let out = out_arg(out, "out")?;
        *out = boxed(LgJetSolution(lift(prolong(&d.0))?));
        Ok(())
    })
}

/// # Safety
/// `s` must be NULL or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn lg_jet_solution_free(s: *mut LgJetSolution) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Frame A(u, v) into `out` (36 doubles, row-major).
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn lg_jet_solution_frame_at(s: *const LgJetSolution, u: f64, v: f64, out: *mut f64) -> LgStatus {
    guard(|| {
        let m = ref_arg(s, "solution")?.0.frame_at(u, v);
        let out = slice_out(out, 36, "out")?;
        out.copy_from_slice(&lie_core::mat_to_rows(&m));
        Ok(())
    })
}

/// (a, b, q1, q2, p1, p2, r1, r2) at (u, v) into `out` (8 doubles).
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn lg_jet_solution_scalars_at(
    s: *const LgJetSolution,
    u: f64,
    v: f64,
    out: *mut f64,
) -> LgStatus {
    guard(|| {
        let x = ref_arg(s, "solution")?.0.scalars_at(u, v);
        slice_out(out, 8, "out")?.copy_from_slice(&x);
        Ok(())
    })
}

/// Largest residual of the verification report.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn lg_jet_solution_verify(s: *const LgJetSolution, max_residual: *mut f64) -> LgStatus {
    guard(|| {
        let rep = verify_solution(&ref_arg(s, "solution")?.0);
        *out_arg(max_residual, "max_residual")? = rep.max();
        Ok(())
    })
}

/// The full verification report as JSON.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn lg_jet_solution_verify_json(s: *const LgJetSolution, out: *mut *mut c_char) -> LgStatus {
    guard(|| {
        let rep = verify_solution(&ref_arg(s, "solution")?.0);
        emit_json(&rep, out_arg(out, "out")?)
    })
}

/// Evaluates the series on a grid over `window` = (u0, u1, v0, v1).
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn lg_jet_solution_surface(
    s: *const LgJetSolution,
    window: *const f64,
    nu: usize,
    nv: usize,
    out: *mut *mut LgSurface,
) -> LgStatus {
    guard(|| {
        let s = ref_arg(s, "solution")?;
        let w = slice_arg(window, 4, "window")?;
        let out = out_arg(out, "out")?;
        let grid = GridSpec::new(nu, nv, [w[0], w[1], w[2], w[3]]);
        lift(grid.validate())?;
        *out = boxed(LgSurface(lift(evaluate_surface(&s.0, grid))?.surface));
        Ok(())
    })
}

/// Involutivity report of the minimal-surface system as JSON.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn lg_eds_report_json(samples: usize, seed: u64, out: *mut *mut c_char) -> LgStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        emit_json(&lift(involutivity_report(samples, seed))?, out)
    })
}
