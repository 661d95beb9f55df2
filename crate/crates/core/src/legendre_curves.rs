//! Polarized Legendre curves: fullness and fatness, the directrix, the
//! Frenet frame with its line element μ and curvatures k₀..k₃, and synthesis
//! of curves from prescribed curvatures.
//!
//! A curve is a family of null 2-planes ℓ(t) = [V₀∧V₁]. A polarization is a
//! section V of a line subbundle of ℓ. All differential quantities are
//! computed on univariate jets: either exact jets supplied with the samples
//! or jets estimated by finite differences on a uniform parameter grid.

use crate::error::{Error, Result};
use crate::fd::fornberg;
use crate::jet::{jet_inner, jvec_add, jvec_deriv, jvec_scale, jvec_value, Jet, JetMat};
use crate::lie_core::{
    dupin_metric_eval, frenet_matrix, gram, group_defect, inner, DupinElement, LieGroupElement, Mat6, MinkVector,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Jets of the two spanning vectors at one sample.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CurveJet {
    pub v0: [Jet; 6],
    pub v1: [Jet; 6],
}

/// A Legendre curve given on a uniform parameter grid, optionally with
/// exact Taylor jets at every sample.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LegendreCurveSamples {
    pub t: Vec<f64>,
    pub v0: Vec<MinkVector>,
    pub v1: Vec<MinkVector>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jets: Option<Vec<CurveJet>>,
}

/// Residuals of the Legendre conditions.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct LegendreCheck {
    /// max over samples of |⟨V₀,V₀⟩|, |⟨V₁,V₁⟩|, |⟨V₀,V₁⟩|
    pub null_max: f64,
    /// max |⟨V₀, V₁′⟩|
    pub v0_dv1: f64,
    /// max |⟨V₀′, V₁⟩|
    pub dv0_v1: f64,
}

impl LegendreCurveSamples {
    /// A curve known only through its jets at a single base point.
    pub fn from_series(t0: f64, jet: CurveJet) -> LegendreCurveSamples {
        LegendreCurveSamples {
            t: vec![t0],
            v0: vec![jvec_value(&jet.v0)],
            v1: vec![jvec_value(&jet.v1)],
            jets: Some(vec![jet]),
        }
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Shape checks: matching lengths, finite entries, uniform step.
    pub fn check_shape(&self) -> Result<()> {
        let n = self.t.len();
        if n == 0 || self.v0.len() != n || self.v1.len() != n {
            return Err(Error::InvalidCurve("sample arrays are empty or of different lengths".into()));
        }
        if let Some(j) = &self.jets {
            if j.len() != n {
                return Err(Error::InvalidCurve("jet count differs from sample count".into()));
            }
        }
        if self.v0.iter().chain(&self.v1).any(|v| !v.is_finite()) || self.t.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidCurve("non-finite entries".into()));
        }
        if n >= 2 {
            let h = self.t[1] - self.t[0];
            if h <= 0.0 {
                return Err(Error::InvalidCurve("parameter must increase".into()));
            }
            for k in 1..n {
                if ((self.t[k] - self.t[k - 1]) - h).abs() > 1e-9 * h.abs().max(1.0) {
                    return Err(Error::InvalidCurve(format!("non-uniform step at sample {k}")));
                }
            }
        }
        Ok(())
    }

    /// Evaluates the Legendre conditions; first derivatives from jets or
    /// finite differences.
    pub fn legendre_check(&self) -> Result<LegendreCheck> {
        self.check_shape()?;
        let jets = self.jets_of_order(1)?;
        let mut out = LegendreCheck { null_max: 0.0, v0_dv1: 0.0, dv0_v1: 0.0 };
        for (k, j) in jets.iter().enumerate() {
            let (a, b) = (self.v0[k], self.v1[k]);
            let s = a.norm() * b.norm().max(1e-300);
            let s = s.max(a.norm() * a.norm()).max(b.norm() * b.norm());
            for x in [inner(&a, &a), inner(&b, &b), inner(&a, &b)] {
                out.null_max = out.null_max.max(x.abs() / s);
            }
            let da = derivative_vector(&j.v0, 1);
            let db = derivative_vector(&j.v1, 1);
            out.v0_dv1 = out.v0_dv1.max(inner(&a, &db).abs() / s);
            out.dv0_v1 = out.dv0_v1.max(inner(&da, &b).abs() / s);
        }
        Ok(out)
    }

    /// Validates the Legendre conditions at relative tolerance `tol`.
    pub fn validate(&self, tol: f64) -> Result<LegendreCheck> {
        let c = self.legendre_check()?;
        if c.null_max > tol {
            return Err(Error::InvalidCurve(format!("spanning vectors not null/orthogonal: {:e}", c.null_max)));
        }
        if c.v0_dv1 > tol || c.dv0_v1 > tol {
            return Err(Error::InvalidCurve(format!(
                "contact condition fails: <V0,dV1> = {:e}, <dV0,V1> = {:e}",
                c.v0_dv1, c.dv0_v1
            )));
        }
        Ok(c)
    }

    /// A·c, applied to samples and jets.
    pub fn transform(&self, a: &LieGroupElement) -> LegendreCurveSamples {
        let m = &a.matrix;
        let mv = |v: &MinkVector| MinkVector::from_vector(&(m * v.to_vector()));
        LegendreCurveSamples {
            t: self.t.clone(),
            v0: self.v0.iter().map(mv).collect(),
            v1: self.v1.iter().map(mv).collect(),
            jets: self.jets.as_ref().map(|js| {
                js.iter().map(|j| CurveJet { v0: transform_jvec(m, &j.v0), v1: transform_jvec(m, &j.v1) }).collect()
            }),
        }
    }

    /// Jets of order at least `order` at every sample; exact ones when
    /// present, otherwise finite-difference estimates.
    fn jets_of_order(&self, order: usize) -> Result<Vec<CurveJet>> {
        if let Some(js) = &self.jets {
            let have = js.iter().map(|j| jvec_order(&j.v0).min(jvec_order(&j.v1))).min().unwrap_or(0);
            if have < order {
                return Err(Error::InsufficientOrder { need: order, have });
            }
            return Ok(js.clone());
        }
        let a = fd_jets(&self.t, &self.v0, order)?;
        let b = fd_jets(&self.t, &self.v1, order)?;
        Ok(a.into_iter().zip(b).map(|(v0, v1)| CurveJet { v0, v1 }).collect())
    }
}

/// A section V of the polarizing line bundle, per sample, with optional
/// exact jets.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PolarizationSection {
    pub v: Vec<MinkVector>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jets: Option<Vec<[Jet; 6]>>,
}

impl PolarizationSection {
    /// The section V = V₀ of the curve.
    pub fn first_vector(c: &LegendreCurveSamples) -> PolarizationSection {
        PolarizationSection { v: c.v0.clone(), jets: c.jets.as_ref().map(|js| js.iter().map(|j| j.v0.clone()).collect()) }
    }

    pub fn transform(&self, a: &LieGroupElement) -> PolarizationSection {
        let m = &a.matrix;
        PolarizationSection {
            v: self.v.iter().map(|v| MinkVector::from_vector(&(m * v.to_vector()))).collect(),
            jets: self.jets.as_ref().map(|js| js.iter().map(|j| transform_jvec(m, j)).collect()),
        }
    }

    fn jets_of_order(&self, t: &[f64], order: usize) -> Result<Vec<[Jet; 6]>> {
        if let Some(js) = &self.jets {
            let have = js.iter().map(jvec_order).min().unwrap_or(0);
            if have < order {
                return Err(Error::InsufficientOrder { need: order, have });
            }
            return Ok(js.clone());
        }
        fd_jets(t, &self.v, order)
    }
}

/// Output of the Frenet reduction.
#[derive(Clone, Debug, Serialize)]
pub struct FrenetData {
    pub t: Vec<f64>,
    pub frames: Vec<LieGroupElement>,
    /// μ = μ_coeff·dt
    pub mu: Vec<f64>,
    /// (k₀, k₁, k₂, k₃) per sample
    pub k: Vec<[f64; 4]>,
    /// max |R⁻¹R′ − μ·M(k)| per sample (zero when read off an exact frame)
    pub residual: Vec<f64>,
}

/// Pullback of the Dupin metric along the polarization, evaluated on the
/// second-order frame.
#[derive(Clone, Debug, Serialize)]
pub struct PolarizationReport {
    pub polarized: Vec<bool>,
    pub pullback: Vec<f64>,
    pub mu: Vec<f64>,
}

impl PolarizationReport {
    pub fn all(&self) -> bool {
        self.polarized.iter().all(|&b| b)
    }
}

/// Tolerances and jet orders for the curve operations.
#[derive(Clone, Copy, Debug)]
pub struct CurveOptions {
    /// relative threshold for fullness, fatness and polarization
    pub tol: f64,
    /// jet order requested from finite differences on plain samples
    pub fd_order: usize,
}

impl Default for CurveOptions {
    fn default() -> Self {
        CurveOptions { tol: 1e-8, fd_order: 8 }
    }
}

/// Jet order consumed by the full Frenet reduction.
pub const FRENET_MIN_ORDER: usize = 8;

fn jvec_order(v: &[Jet; 6]) -> usize {
    v.iter().map(|x| x.order()).min().unwrap_or(0)
}

fn transform_jvec(m: &Mat6, v: &[Jet; 6]) -> [Jet; 6] {
    let order = jvec_order(v);
    std::array::from_fn(|i| {
        let mut acc = Jet::zero(order);
        for k in 0..6 {
            if m[(i, k)] != 0.0 {
                acc = &acc + &v[k].scale(m[(i, k)]);
            }
        }
        acc
    })
}

fn derivative_vector(v: &[Jet; 6], k: usize) -> MinkVector {
    MinkVector(std::array::from_fn(|i| v[i].derivative_value(k)))
}

/// Finite-difference jets: derivatives of order 0..=order at each sample on
/// the nearest window of `order + 3` nodes.
pub fn fd_jets(t: &[f64], v: &[MinkVector], order: usize) -> Result<Vec<[Jet; 6]>> {
    let n = t.len();
    let width = order + 3;
    if n < width {
        return Err(Error::InsufficientOrder { need: order, have: n.saturating_sub(3) });
    }
    let h = t[1] - t[0];
    let xs: Vec<f64> = (0..width).map(|k| k as f64).collect();
    let mut fact = vec![1.0; order + 1];
    for m in 1..=order {
        fact[m] = fact[m - 1] * m as f64;
    }
    Ok((0..n)
        .map(|i| {
            let lo = i.saturating_sub(width / 2).min(n - width);
            let x0 = (i - lo) as f64;
            let w: Vec<Vec<f64>> = (0..=order).map(|m| fornberg(x0, &xs, m)).collect();
            std::array::from_fn(|c| Jet {
                c: (0..=order)
                    .map(|m| {
                        let d: f64 = w[m].iter().enumerate().map(|(k, wk)| wk * v[lo + k].0[c]).sum();
                        d / (h.powi(m as i32) * fact[m])
                    })
                    .collect(),
            })
        })
        .collect())
}

fn det6(cols: &[MinkVector; 6]) -> f64 {
    Mat6::from_fn(|i, j| cols[j].0[i]).determinant()
}

/// det[V₀,V₁,V₀′,V₁′,V₀″,V₁″] normalized by the product of column norms.
pub fn fullness_measure(c: &LegendreCurveSamples, opts: &CurveOptions) -> Result<Vec<f64>> {
    c.check_shape()?;
    let jets = if c.jets.is_some() { c.jets_of_order(2)? } else { c.jets_of_order(opts.fd_order.max(2))? };
    Ok(jets
        .iter()
        .map(|j| {
            let cols = [
                derivative_vector(&j.v0, 0),
                derivative_vector(&j.v1, 0),
                derivative_vector(&j.v0, 1),
                derivative_vector(&j.v1, 1),
                derivative_vector(&j.v0, 2),
                derivative_vector(&j.v1, 2),
            ];
            let scale: f64 = cols.iter().map(|v| v.norm()).product();
            if scale == 0.0 {
                0.0
            } else {
                det6(&cols) / scale
            }
        })
        .collect())
}

/// Linear fullness per sample.
pub fn is_linearly_full(c: &LegendreCurveSamples, opts: &CurveOptions) -> Result<Vec<bool>> {
    Ok(fullness_measure(c, opts)?.into_iter().map(|d| d.abs() > opts.tol).collect())
}

/// Rank of [V, V′, …, V⁽⁵⁾] per sample.
pub fn fatness_rank(t: &[f64], p: &PolarizationSection, opts: &CurveOptions) -> Result<Vec<usize>> {
    let jets = p.jets_of_order(t, if p.jets.is_some() { 5 } else { opts.fd_order.max(5) })?;
    Ok(jets
        .iter()
        .map(|j| {
            let vs: Vec<MinkVector> = (0..6).map(|k| derivative_vector(j, k)).collect();
            crate::lie_core::span_rank(&vs, opts.tol)
        })
        .collect())
}

/// The directrix δ = [V∧V′∧V″] per sample.
pub fn directrix(t: &[f64], p: &PolarizationSection, opts: &CurveOptions) -> Result<Vec<DupinElement>> {
    let jets = p.jets_of_order(t, if p.jets.is_some() { 2 } else { opts.fd_order.max(2) })?;
    jets.iter()
        .enumerate()
        .map(|(k, j)| {
            let b = [derivative_vector(j, 0), derivative_vector(j, 1), derivative_vector(j, 2)];
            if crate::lie_core::span_rank(&b, opts.tol) < 3 {
                return Err(Error::FatnessFailure(k));
            }
            let g = gram(&b);
            let s = b.iter().map(|v| v.norm() * v.norm()).fold(0.0, f64::max);
            let g = g.map(|r| r.map(|x| x / s));
            match crate::lie_core::signature3(&g, opts.tol) {
                (2, 1, 0) => Ok(DupinElement { basis: b }),
                sig => Err(Error::SignatureFailure(format!("sample {k}: (pos, neg, zero) = {sig:?}"))),
            }
        })
        .collect()
}

enum StageFail {
    Degenerate,
}

/// The other spanning vector W of ℓ paired with the section: V₁ unless V is
/// parallel to V₁.
fn choose_partner(c: &LegendreCurveSamples, p: &PolarizationSection) -> Result<bool> {
    let (a, b, v) = (c.v0[0].0, c.v1[0].0, p.v[0].0);
    let dot = |x: &[f64; 6], y: &[f64; 6]| x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>();
    let (aa, ab, bb, av, bv) = (dot(&a, &a), dot(&a, &b), dot(&b, &b), dot(&a, &v), dot(&b, &v));
    let det = aa * bb - ab * ab;
    if det.abs() <= 1e-14 * aa * bb {
        return Err(Error::InvalidCurve("V0 and V1 are dependent".into()));
    }
    let alpha = (av * bb - bv * ab) / det;
    let beta = (bv * aa - av * ab) / det;
    let res: f64 = (0..6).map(|i| (v[i] - alpha * a[i] - beta * b[i]).powi(2)).sum::<f64>().sqrt();
    if res > 1e-6 * dot(&v, &v).sqrt() {
        return Err(Error::InvalidCurve("polarization section is not in the curve's plane".into()));
    }
    Ok(alpha.abs() * aa.sqrt() >= beta.abs() * bb.sqrt())
}

/// proj(C) = C + ⟨C,B5⟩R0 + ⟨C,B4⟩R1 + ⟨C,R1⟩B4 + ⟨C,R0⟩B5.
fn project(c: &[Jet; 6], r0: &[Jet; 6], r1: &[Jet; 6], b4: &[Jet; 6], b5: &[Jet; 6]) -> [Jet; 6] {
    let mut out = c.clone();
    for (x, y) in [(b5, r0), (b4, r1), (r1, b4), (r0, b5)] {
        out = jvec_add(&out, &jvec_scale(y, &jet_inner(c, x)));
    }
    out
}

fn nonzero(x: &Jet, scale: f64) -> std::result::Result<(), StageFail> {
    if !x.value().is_finite() || x.value().abs() <= 1e-12 * scale {
        Err(StageFail::Degenerate)
    } else {
        Ok(())
    }
}

/// First-order frame [V, R₁, R₂, R₃, B₄, B₅] on jets.
fn first_order_jets(v: &[Jet; 6], w: &[Jet; 6]) -> std::result::Result<JetMat, StageFail> {
    let scale = jvec_value(v).norm().max(1e-300);
    let vp = jvec_deriv(v);
    let vv = jet_inner(&vp, &vp);
    nonzero(&vv, scale * scale)?;
    if vv.value() < 0.0 {
        return Err(StageFail::Degenerate);
    }
    let c = -(&jet_inner(&jvec_deriv(w), &vp) * &vv.recip());
    let order = jvec_order(&vp);
    let r1 = jvec_add(&w.clone().map(|x| x.truncate(order)), &jvec_scale(v, &c));
    let r1p = jvec_deriv(&r1);
    let ww = jet_inner(&r1p, &r1p);
    nonzero(&ww, jvec_value(&r1).norm().powi(2))?;
    if ww.value() < 0.0 {
        return Err(StageFail::Degenerate);
    }
    let kappa = (&vv.truncate(ww.order()) * &ww.recip()).sqrt();
    let r1 = jvec_scale(&r1, &kappa);
    let r1p = jvec_deriv(&r1);
    let r1pp = jvec_deriv(&r1p);
    let vpp = jvec_deriv(&vp);
    let p5 = jvec_scale(&vpp, &vv.recip());
    let p4 = jvec_scale(&r1pp, &jet_inner(&r1p, &r1p).recip());
    let b5 = jvec_add(&p5, &jvec_scale(v, &jet_inner(&p5, &p5).scale(0.5)));
    let b4 = jvec_add(&p4, &jvec_scale(&r1, &jet_inner(&p4, &p4).scale(0.5)));
    let b5 = jvec_add(&b5, &jvec_scale(&r1, &jet_inner(&b4, &b5)));
    let normalize = |x: [Jet; 6]| -> std::result::Result<[Jet; 6], StageFail> {
        let n = jet_inner(&x, &x);
        nonzero(&n, scale * scale * 1e-6)?;
        if n.value() < 0.0 {
            return Err(StageFail::Degenerate);
        }
        Ok(jvec_scale(&x, &n.sqrt().recip()))
    };
    let r3 = normalize(project(&vp, v, &r1, &b4, &b5))?;
    let r2 = normalize(project(&r1p, v, &r1, &b4, &b5))?.map(|e| -e);
    let ord = [v, &r1, &r2, &r3, &b4, &b5].iter().map(|x| jvec_order(x)).min().unwrap();
    let tr = |x: &[Jet; 6]| x.clone().map(|e| e.truncate(ord));
    let mut cols = [tr(v), tr(&r1), tr(&r2), tr(&r3), tr(&b4), tr(&b5)];
    let det = JetMat::from_columns(&cols).value().determinant();
    if det < 0.0 {
        for k in [1, 2, 4] {
            cols[k] = cols[k].clone().map(|e| -e);
        }
    }
    Ok(JetMat::from_columns(&cols))
}

/// X(I, I, Y, b) on jets.
pub(crate) fn unipotent_jet(y: &[[Jet; 2]; 2], b: &Jet, order: usize) -> JetMat {
    let one = Jet::constant(1.0, order);
    let zero = Jet::zero(order);
    let mut m = JetMat::zero(order);
    for k in 0..6 {
        m.set(k, k, one.clone());
    }
    // D·J·Yᵀ with D = I: [[y01, y11], [y00, y10]]
    m.set(0, 2, y[0][1].clone());
    m.set(0, 3, y[1][1].clone());
    m.set(1, 2, y[0][0].clone());
    m.set(1, 3, y[1][0].clone());
    let yty = |i: usize, j: usize| &(&y[0][i] * &y[0][j]) + &(&y[1][i] * &y[1][j]);
    let mm = [[yty(0, 0), &yty(0, 1) - b], [&yty(1, 0) + b, yty(1, 1)]];
    // ½·J·M
    m.set(0, 4, mm[1][0].scale(0.5));
    m.set(0, 5, mm[1][1].scale(0.5));
    m.set(1, 4, mm[0][0].scale(0.5));
    m.set(1, 5, mm[0][1].scale(0.5));
    for r in 0..2 {
        for c in 0..2 {
            m.set(r + 2, c + 4, y[r][c].clone());
        }
    }
    let _ = zero;
    m
}

/// X(rI, I, 0, 0) = diag(r, r, 1, 1, 1/r, 1/r).
fn scaling_jet(r: &Jet) -> JetMat {
    let order = r.order();
    let mut m = JetMat::zero(order);
    let ri = r.recip();
    for (k, x) in [r, r, &Jet::constant(1.0, order), &Jet::constant(1.0, order), &ri, &ri].into_iter().enumerate() {
        m.set(k, k, x.clone());
    }
    m
}

/// (R, ρ) ↦ (R·X, X⁻¹X′ + X⁻¹ρX).
fn gauge(frame: &JetMat, rho: &JetMat, x: &JetMat) -> (JetMat, JetMat) {
    let xi = x.group_inverse();
    let rho2 = xi.mul(&x.deriv()).add(&xi.mul(rho).mul(x).truncate(x.order() - 1));
    (frame.mul(x), rho2)
}

fn rho_of(frame: &JetMat) -> JetMat {
    frame.group_inverse().mul(&frame.deriv())
}

/// Frame and connection after stages 1 and 2.
fn second_order_jets(v: &[Jet; 6], w: &[Jet; 6]) -> std::result::Result<(JetMat, JetMat), StageFail> {
    let f1 = first_order_jets(v, w)?;
    let rho = rho_of(&f1);
    let r = |i, j| rho.get(i, j).clone();
    let r30 = r(3, 0);
    nonzero(&r30, 1e-300)?;
    let inv = r30.recip().scale(0.5);
    let y12 = -(&(&(&r(0, 1) + &r(1, 0)) + &r(3, 2)) * &inv);
    let y21 = &(&(&r(0, 1) + &r(1, 0)) - &r(3, 2)) * &inv;
    let order = rho.order();
    let z = Jet::zero(order);
    let x = unipotent_jet(&[[z.clone(), y12], [y21, z.clone()]], &z, order);
    Ok(gauge(&f1, &rho, &x))
}

/// Frame and connection after all five stages.
fn frenet_jets(v: &[Jet; 6], w: &[Jet; 6]) -> std::result::Result<(JetMat, JetMat), StageFail> {
    let (f, rho) = second_order_jets(v, w)?;
    let mu = rho.get(0, 1).clone();
    let r30 = rho.get(3, 0).clone();
    nonzero(&mu, 1e-300)?;
    let (f, rho) = gauge(&f, &rho, &scaling_jet(&(&mu * &r30.recip())));
    let mu = rho.get(0, 1).clone();
    let order = rho.order();
    let z = Jet::zero(order);
    let s = (rho.get(0, 0) + rho.get(1, 1)) * mu.recip().scale(0.5);
    let x = unipotent_jet(&[[-&s, z.clone()], [z.clone(), s]], &z, order);
    let (f, rho) = gauge(&f, &rho, &x);
    let mu = rho.get(0, 1).clone();
    let order = rho.order();
    let mi = mu.recip();
    let y = &(rho.get(1, 3) - rho.get(0, 2)) * &mi.scale(0.5);
    let b = -(&(rho.get(0, 2) + rho.get(1, 3)) * &mi);
    let z = Jet::zero(order);
    let x = unipotent_jet(&[[y.clone(), z.clone()], [z, y]], &b, order);
    Ok(gauge(&f, &rho, &x))
}

fn section_and_partner(
    c: &LegendreCurveSamples,
    p: &PolarizationSection,
    order: usize,
) -> Result<Vec<([Jet; 6], [Jet; 6])>> {
    c.check_shape()?;
    if p.v.len() != c.len() {
        return Err(Error::InvalidCurve("section and curve sample counts differ".into()));
    }
    let use_v1 = choose_partner(c, p)?;
    let cj = c.jets_of_order(if c.jets.is_some() { order } else { order.max(FRENET_MIN_ORDER) })?;
    let pj = p.jets_of_order(&c.t, if p.jets.is_some() { order } else { order.max(FRENET_MIN_ORDER) })?;
    Ok(pj.into_iter().zip(cj).map(|(v, j)| (v, if use_v1 { j.v1 } else { j.v0 })).collect())
}

/// Evaluates the Dupin metric on the second-order frame of the polarized
/// curve, which equals −μ².
pub fn is_polarization(
    c: &LegendreCurveSamples,
    p: &PolarizationSection,
    opts: &CurveOptions,
) -> Result<PolarizationReport> {
    let pairs = section_and_partner(c, p, 5)?;
    let vals: Vec<(f64, f64)> = pairs
        .par_iter()
        .map(|(v, w)| match second_order_jets(v, w) {
            Ok((_, rho)) => {
                let r = rho.value();
                (dupin_metric_eval(&r), r[(0, 1)])
            }
            Err(StageFail::Degenerate) => (0.0, 0.0),
        })
        .collect();
    Ok(PolarizationReport {
        polarized: vals.iter().map(|(g, _)| g.abs() > opts.tol).collect(),
        pullback: vals.iter().map(|x| x.0).collect(),
        mu: vals.iter().map(|x| x.1).collect(),
    })
}

/// Reduces to the Frenet frame and reads off μ and k₀..k₃.
pub fn frenet_frame(c: &LegendreCurveSamples, p: &PolarizationSection, opts: &CurveOptions) -> Result<FrenetData> {
    let full = fullness_measure(c, opts)?;
    if let Some(k) = full.iter().position(|d| d.abs() <= opts.tol) {
        return Err(Error::NotLinearlyFull(k));
    }
    let pairs = section_and_partner(c, p, FRENET_MIN_ORDER)?;
    let out: Vec<std::result::Result<(Mat6, Mat6), usize>> = pairs
        .par_iter()
        .enumerate()
        .map(|(k, (v, w))| match frenet_jets(v, w) {
            Ok((f, rho)) => Ok((f.value(), rho.value())),
            Err(StageFail::Degenerate) => Err(k),
        })
        .collect();
    let mut data = FrenetData { t: c.t.clone(), frames: vec![], mu: vec![], k: vec![], residual: vec![] };
    for r in out {
        let (f, rho) = r.map_err(Error::NotPolarized)?;
        let mu = rho[(0, 1)];
        if !mu.is_finite() || mu.abs() <= opts.tol {
            return Err(Error::NotPolarized(data.mu.len()));
        }
        let k = [rho[(0, 0)] / mu, rho[(0, 3)] / mu, rho[(1, 2)] / mu, rho[(0, 4)] / mu];
        data.residual.push((rho - frenet_matrix(k) * mu).abs().max());
        data.frames.push(LieGroupElement::unchecked(f));
        data.mu.push(mu);
        data.k.push(k);
    }
    Ok(data)
}

/// A t-dependent Lie-algebra valued coefficient for R′ = R·M(t).
pub trait FrameGenerator: Sync {
    /// Taylor jet of M at t.
    fn jet(&self, t: f64, order: usize) -> JetMat;
    fn value(&self, t: f64) -> Mat6 {
        self.jet(t, 0).value()
    }
}

/// Curvatures k₀..k₃ and μ_coeff as polynomials in t (Taylor coefficients
/// at t = 0).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CurvatureFunctions {
    pub k: [Vec<f64>; 4],
    pub mu: Vec<f64>,
}

impl CurvatureFunctions {
    pub fn constant(k: [f64; 4], mu: f64) -> CurvatureFunctions {
        CurvatureFunctions { k: k.map(|x| vec![x]), mu: vec![mu] }
    }

    pub fn eval(&self, t: f64) -> ([f64; 4], f64) {
        let p = |c: &[f64]| c.iter().rev().fold(0.0, |a, &x| a * t + x);
        (std::array::from_fn(|i| p(&self.k[i])), p(&self.mu))
    }
}

impl FrameGenerator for CurvatureFunctions {
    fn jet(&self, t: f64, order: usize) -> JetMat {
        let mu = Jet::from_polynomial(&self.mu, t, order);
        let base = frenet_matrix([0.0; 4]);
        let mut m = JetMat::constant(&base, order).scale_jet(&mu);
        for (i, kc) in self.k.iter().enumerate() {
            let mut e = [0.0; 4];
            e[i] = 1.0;
            let dir = frenet_matrix(e) - base;
            let km = &Jet::from_polynomial(kc, t, order) * &mu;
            m = m.add(&JetMat::constant(&dir, order).scale_jet(&km));
        }
        m
    }

    fn value(&self, t: f64) -> Mat6 {
        let (k, mu) = self.eval(t);
        frenet_matrix(k) * mu
    }
}

/// Integration grid and the order of the per-sample jets.
#[derive(Clone, Copy, Debug)]
pub struct SynthOptions {
    pub t0: f64,
    pub step: f64,
    pub steps: usize,
    pub jet_order: usize,
}

impl Default for SynthOptions {
    fn default() -> Self {
        SynthOptions { t0: 0.0, step: 1e-3, steps: 1000, jet_order: 12 }
    }
}

fn reproject(a: &Mat6) -> Mat6 {
    let e = crate::lie_core::group_inverse(a) * a - Mat6::identity();
    a * (Mat6::identity() - e * 0.5)
}

/// Integrates R′ = R·M(t) with classical RK4 and re-projection onto the
/// group after every step. Returns the frames at the grid points.
pub fn integrate_frames(gen: &dyn FrameGenerator, r0: &LieGroupElement, opts: &SynthOptions) -> Result<Vec<Mat6>> {
    if !(opts.step > 0.0) || opts.steps == 0 {
        return Err(Error::InvalidInput("step must be positive and steps nonzero".into()));
    }
    let h = opts.step;
    let mut a = r0.matrix;
    let mut out = Vec::with_capacity(opts.steps + 1);
    out.push(a);
    for n in 0..opts.steps {
        let t = opts.t0 + n as f64 * h;
        let m0 = gen.value(t);
        let mh = gen.value(t + 0.5 * h);
        let m1 = gen.value(t + h);
        let k1 = a * m0;
        let k2 = (a + k1 * (0.5 * h)) * mh;
        let k3 = (a + k2 * (0.5 * h)) * mh;
        let k4 = (a + k3 * h) * m1;
        a += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        a = reproject(&a);
        let d = group_defect(&a);
        if !d.is_finite() || d > 1e-6 {
            return Err(Error::StepFailure(t + h));
        }
        out.push(a);
    }
    Ok(out)
}

/// Taylor jet of the solution of R′ = R·M through R(t) = `r`.
pub fn frame_jet(gen: &dyn FrameGenerator, t: f64, r: &Mat6, order: usize) -> JetMat {
    let mj = gen.jet(t, order);
    let mc: Vec<Mat6> = (0..=order).map(|k| Mat6::from_fn(|i, j| mj.get(i, j).c[k])).collect();
    let mut rc = vec![*r];
    for n in 0..order {
        let mut s = Mat6::zeros();
        for j in 0..=n {
            s += rc[j] * mc[n - j];
        }
        rc.push(s / (n + 1) as f64);
    }
    JetMat::from_coeffs(&rc)
}

/// Integrates a frame ODE and returns the curve ℓ = [R₀∧R₁] with exact
/// jets derived from the ODE at every sample, together with the frames.
pub fn synthesize_curve(
    gen: &dyn FrameGenerator,
    r0: &LieGroupElement,
    opts: &SynthOptions,
) -> Result<(LegendreCurveSamples, Vec<Mat6>)> {
    let frames = integrate_frames(gen, r0, opts)?;
    let t: Vec<f64> = (0..frames.len()).map(|k| opts.t0 + k as f64 * opts.step).collect();
    let jets: Vec<CurveJet> = frames
        .par_iter()
        .zip(t.par_iter())
        .map(|(r, &tk)| {
            let j = frame_jet(gen, tk, r, opts.jet_order);
            CurveJet { v0: j.column(0), v1: j.column(1) }
        })
        .collect();
    let col = |r: &Mat6, k: usize| MinkVector(std::array::from_fn(|i| r[(i, k)]));
    let c = LegendreCurveSamples {
        t,
        v0: frames.iter().map(|r| col(r, 0)).collect(),
        v1: frames.iter().map(|r| col(r, 1)).collect(),
        jets: Some(jets),
    };
    Ok((c, frames))
}

/// Synthesizes the curve with prescribed curvatures and line element.
pub fn curve_from_curvatures(
    kf: &CurvatureFunctions,
    r0: &LieGroupElement,
    opts: &SynthOptions,
) -> Result<(LegendreCurveSamples, FrenetData)> {
    let (c, frames) = synthesize_curve(kf, r0, opts)?;
    let (k, mu): (Vec<[f64; 4]>, Vec<f64>) = c.t.iter().map(|&t| kf.eval(t)).unzip();
    let data = FrenetData {
        t: c.t.clone(),
        residual: vec![0.0; frames.len()],
        frames: frames.into_iter().map(LieGroupElement::unchecked).collect(),
        mu,
        k,
    };
    Ok((c, data))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie_core::{g0_element, random_group_element, LieAlgebraElement};
    use nalgebra::Matrix2;

    #[test]
    fn unipotent_jet_matches_group_element() {
        let y = [[0.3, -0.7], [1.1, 0.4]];
        let b = 0.9;
        let jy = y.map(|r| r.map(|x| Jet::constant(x, 0)));
        let m = unipotent_jet(&jy, &Jet::constant(b, 0), 0).value();
        let i = Matrix2::identity();
        let g = g0_element(&i, &i, &Matrix2::new(y[0][0], y[0][1], y[1][0], y[1][1]), b);
        assert!((m - g).abs().max() < 1e-15);
        assert!(group_defect(&m) < 1e-14);
    }

    #[test]
    fn zero_curvature_frame_is_exponential() {
        let kf = CurvatureFunctions::constant([0.0; 4], 1.0);
        let opts = SynthOptions { t0: 0.0, step: 1e-2, steps: 100, jet_order: 4 };
        let frames = integrate_frames(&kf, &LieGroupElement::identity(), &opts).unwrap();
        for (k, f) in frames.iter().enumerate().step_by(10) {
            let t = k as f64 * opts.step;
            let e = LieAlgebraElement { matrix: frenet_matrix([0.0; 4]) * t }.exp().matrix;
            assert!((f - e).abs().max() < 1e-8, "t={t}");
        }
    }

    #[test]
    fn rk4_error_drops_sixteenfold() {
        let kf = CurvatureFunctions::constant([0.0; 4], 1.0);
        let exact = LieAlgebraElement { matrix: frenet_matrix([0.0; 4]) }.exp().matrix;
        let err = |n: usize| {
            let o = SynthOptions { t0: 0.0, step: 1.0 / n as f64, steps: n, jet_order: 2 };
            let f = integrate_frames(&kf, &LieGroupElement::identity(), &o).unwrap();
            (f[n] - exact).abs().max()
        };
        let ratio = err(10) / err(20);
        assert!(ratio > 12.0 && ratio < 20.0, "ratio={ratio}");
    }

    #[test]
    fn round_trip_constant_curvatures() {
        let kf = CurvatureFunctions::constant([1.0, 2.0, -1.0, 0.5], 1.0);
        let opts = SynthOptions { t0: 0.0, step: 1e-2, steps: 20, jet_order: 12 };
        let (c, _) = curve_from_curvatures(&kf, &LieGroupElement::identity(), &opts).unwrap();
        let p = PolarizationSection::first_vector(&c);
        let f = frenet_frame(&c, &p, &CurveOptions::default()).unwrap();
        for (k, mu) in f.k.iter().zip(&f.mu) {
            for (a, b) in k.iter().zip([1.0, 2.0, -1.0, 0.5]) {
                assert!((a - b).abs() < 1e-6, "{k:?}");
            }
            assert!((mu - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn invariance_under_group() {
        let kf = CurvatureFunctions { k: [vec![0.2, 0.5], vec![-0.3], vec![0.1, 0.0, 0.4], vec![0.7]], mu: vec![1.2, 0.3] };
        let opts = SynthOptions { t0: 0.0, step: 1e-2, steps: 10, jet_order: 12 };
        let (c, _) = curve_from_curvatures(&kf, &LieGroupElement::identity(), &opts).unwrap();
        let a = random_group_element(7);
        let p = PolarizationSection::first_vector(&c);
        let f1 = frenet_frame(&c, &p, &CurveOptions::default()).unwrap();
        let f2 = frenet_frame(&c.transform(&a), &p.transform(&a), &CurveOptions::default()).unwrap();
        for i in 0..f1.k.len() {
            assert!((f1.mu[i] - f2.mu[i]).abs() < 1e-8);
            for j in 0..4 {
                assert!((f1.k[i][j] - f2.k[i][j]).abs() < 1e-7);
            }
            let ar = a.matrix * f1.frames[i].matrix;
            let d = (ar - f2.frames[i].matrix).abs().max().min((ar + f2.frames[i].matrix).abs().max());
            assert!(d < 1e-7, "frame mismatch {d}");
        }
    }

    #[test]
    fn directrix_has_split_signature() {
        let kf = CurvatureFunctions::constant([0.3, -0.2, 0.5, 0.1], 1.0);
        let opts = SynthOptions { t0: 0.0, step: 1e-2, steps: 5, jet_order: 6 };
        let (c, _) = curve_from_curvatures(&kf, &LieGroupElement::identity(), &opts).unwrap();
        let p = PolarizationSection::first_vector(&c);
        assert_eq!(directrix(&c.t, &p, &CurveOptions::default()).unwrap().len(), 6);
        assert!(fatness_rank(&c.t, &p, &CurveOptions::default()).unwrap().iter().all(|&r| r == 6));
        assert!(is_linearly_full(&c, &CurveOptions::default()).unwrap().iter().all(|&b| b));
    }

    #[test]
    fn fd_jets_recover_polynomial() {
        let t: Vec<f64> = (0..20).map(|k| 0.1 * k as f64).collect();
        let v: Vec<MinkVector> = t.iter().map(|&x| MinkVector([x * x * x, 1.0, x, 0.0, 0.0, 0.0])).collect();
        let j = fd_jets(&t, &v, 4).unwrap();
        assert!((j[5][0].c[3] - 1.0).abs() < 1e-8);
        assert!((j[0][0].c[2] - 3.0 * t[0]).abs() < 1e-8);
        assert!((j[19][2].c[1] - 1.0).abs() < 1e-8);
    }
}
