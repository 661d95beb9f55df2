//! Lie minimal surfaces from data along a curve: the hatted frame, the
//! initial invariants, order-by-order prolongation to a bivariate series
//! and evaluation on a grid.
//!
//! Coordinates are curvature-line coordinates (u, v) with Γ the
//! anti-diagonal u = t, v = −t, so α¹ = a du, α² = b dv restrict to μ dt and
//! −μ dt when a = b = μ on Γ.

use crate::eds_engine::{integral_line, noncharacteristic_test, one_forms, two_forms, ConfigPoint, TWO_FORM_NAMES};
use crate::error::{Error, Result};
use crate::jet::{Jet, JetMat, Ring, Series2};
use crate::legendre_curves::{frame_jet, unipotent_jet, CurvatureFunctions};
use crate::lie_core::{dual, mat_from_rows, metric_sign, LieAlgebraElement, LieGroupElement, Mat6, MinkVector, DEFAULT_TOL};
use crate::surface_invariants::{
    Coframe, FrameField, GridSpec, InvariantField, LegendrePartials, LegendreSurfaceGrid, ReductionState,
};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub const DEFAULT_ORDER: usize = 6;

/// Relative size of the top-degree terms tolerated by [`evaluate_surface`].
pub const DEFAULT_TRUST: f64 = 1e-3;

/// Smallest singular value, relative to the largest, accepted in an order solve.
const SOLVE_RCOND: f64 = 1e-11;

/// R(0) as 36 row-major entries or the string "identity".
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BaseFrame {
    Rows(Vec<f64>),
    Named(String),
}

impl Default for BaseFrame {
    fn default() -> Self {
        BaseFrame::Named("identity".into())
    }
}

impl BaseFrame {
    pub fn element(&self) -> Result<LieGroupElement> {
        match self {
            BaseFrame::Named(s) if s == "identity" => Ok(LieGroupElement::identity()),
            BaseFrame::Named(s) => Err(Error::InvalidInput(format!("unknown base frame {s:?}"))),
            BaseFrame::Rows(v) => LieGroupElement::new(mat_from_rows(v)?),
        }
    }

    pub fn from_matrix(m: &Mat6) -> BaseFrame {
        BaseFrame::Rows(crate::lie_core::mat_to_rows(m))
    }
}

fn default_mu() -> Vec<f64> {
    vec![1.0]
}

fn default_order() -> usize {
    DEFAULT_ORDER
}

/// Polynomial data at t = 0: coefficient lists in ascending powers of t.
/// Missing coefficients are zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CauchyData {
    #[serde(default)]
    pub k0: Vec<f64>,
    #[serde(default)]
    pub k1: Vec<f64>,
    #[serde(default)]
    pub k2: Vec<f64>,
    #[serde(default)]
    pub k3: Vec<f64>,
    #[serde(default)]
    pub h: Vec<f64>,
    #[serde(default)]
    pub w: Vec<f64>,
    #[serde(default = "default_mu")]
    pub mu: Vec<f64>,
    #[serde(rename = "R0", default)]
    pub r0: BaseFrame,
    #[serde(default = "default_order")]
    pub order: usize,
}

impl CauchyData {
    /// All series zero, μ ≡ 1, R(0) = I.
    pub fn zero(order: usize) -> CauchyData {
        CauchyData {
            k0: vec![],
            k1: vec![],
            k2: vec![],
            k3: vec![],
            h: vec![],
            w: vec![],
            mu: default_mu(),
            r0: BaseFrame::default(),
            order,
        }
    }

    /// Random polynomial data of degree `order` with coefficients in
    /// [−s, s]·2⁻ⁿ, s = 0.5, and μ ≡ 1.
    pub fn random(seed: u64, order: usize) -> CauchyData {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut series = || -> Vec<f64> {
            (0..=order).map(|n| rng.random_range(-0.5..0.5) * 0.5f64.powi(n as i32)).collect()
        };
        CauchyData {
            k0: series(),
            k1: series(),
            k2: series(),
            k3: series(),
            h: series(),
            w: series(),
            mu: default_mu(),
            r0: BaseFrame::default(),
            order,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.order == 0 {
            return Err(Error::InvalidInput("series order must be at least 1".into()));
        }
        for (name, s) in self.named_series() {
            if s.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidInput(format!("non-finite coefficient in {name}")));
            }
        }
        if self.mu.first().copied().unwrap_or(0.0).abs() <= DEFAULT_TOL {
            return Err(Error::CharacteristicData("mu vanishes at t = 0".into()));
        }
        self.r0.element()?;
        Ok(())
    }

    fn named_series(&self) -> [(&'static str, &Vec<f64>); 7] {
        [
            ("k0", &self.k0),
            ("k1", &self.k1),
            ("k2", &self.k2),
            ("k3", &self.k3),
            ("h", &self.h),
            ("w", &self.w),
            ("mu", &self.mu),
        ]
    }

    pub fn curvatures(&self) -> CurvatureFunctions {
        CurvatureFunctions { k: [self.k0.clone(), self.k1.clone(), self.k2.clone(), self.k3.clone()], mu: self.mu.clone() }
    }

    fn jet(p: &[f64], order: usize) -> Jet {
        Jet::from_polynomial(p, 0.0, order)
    }
}

/// R, X(h), R̂ = R·X(h) and k̂₁, k̂₂, k̂₃ as jets at t = 0.
#[derive(Clone, Debug)]
pub struct HatFrame {
    pub r: JetMat,
    pub x: JetMat,
    pub r_hat: JetMat,
    pub k_hat: [Jet; 3],
    /// max |R̂⁻¹R̂′ − μ·K̂| over the coefficients through order N − 1, K̂ the
    /// hatted Frenet matrix.
    pub deviation: f64,
}

/// The hatted Frenet matrix: entries (0,0) = k₀ + h/2, (1,1) = −k₀ + h/2,
/// (0,3) = k̂₁, (1,2) = k̂₂, (0,4) = k̂₃ and the unit entries of the Frenet
/// equations. `unit` scales the constant entries (1 for the value, 0 for
/// higher Taylor coefficients).
pub fn hatted_frenet_matrix(k0: f64, k_hat: [f64; 3], h: f64, unit: f64) -> Mat6 {
    LieAlgebraElement::from_entries(&[
        ((0, 0), k0 + h / 2.0),
        ((1, 1), -k0 + h / 2.0),
        ((0, 1), unit),
        ((1, 0), -unit),
        ((3, 0), unit),
        ((2, 1), -unit),
        ((0, 3), k_hat[0]),
        ((1, 2), k_hat[1]),
        ((0, 4), k_hat[2]),
    ])
    .matrix
}

pub fn hat_frame(data: &CauchyData) -> Result<HatFrame> {
    data.validate()?;
    let n = data.order;
    let r0 = data.r0.element()?;
    let r = frame_jet(&data.curvatures(), 0.0, &r0.matrix, n);
    let h_ext = CauchyData::jet(&data.h, n + 1);
    let mu = CauchyData::jet(&data.mu, n);
    let dh = &h_ext.deriv() * &mu.recip();
    let h = h_ext.truncate(n);
    let hh = &h * &h;
    let [k0, k1, k2, k3] = [&data.k0, &data.k1, &data.k2, &data.k3].map(|p| CauchyData::jet(p, n));
    let hk0 = &h * &k0;
    let k_hat = [
        &(&k1 - &dh.scale(0.5)) - &(&hk0 + &hh.scale(0.25)).scale(0.5),
        &(&k2 + &dh.scale(0.5)) - &(&hk0 - &hh.scale(0.25)).scale(0.5),
        &(&k3 - &dh.scale(0.5)) - &hh.scale(0.25),
    ];
    let half = h.scale(0.5);
    let zero = Jet::zero(n);
    let x = unipotent_jet(&[[half.clone(), zero.clone()], [zero, -&half]], &-&h, n);
    let r_hat = r.mul(&x);

    let deviation = if n == 0 {
        0.0
    } else {
        let lhs = r_hat.truncate(n - 1).group_inverse().mul(&r_hat.deriv());
        let coeffs: Vec<Mat6> = (0..n)
            .map(|c| hatted_frenet_matrix(k0.c[c], [k_hat[0].c[c], k_hat[1].c[c], k_hat[2].c[c]], h.c[c], (c == 0) as u8 as f64))
            .collect();
        let rhs = JetMat::from_coeffs(&coeffs).scale_jet(&mu.truncate(n - 1));
        let d = lhs.sub(&rhs);
        (0..6).flat_map(|i| (0..6).map(move |j| (i, j))).fold(0.0f64, |m, (i, j)| m.max(d.get(i, j).max_abs()))
    };
    Ok(HatFrame { r, x, r_hat, k_hat, deviation })
}

/// (q̄₁, q̄₂, p̄₁, p̄₂, r̄₁, r̄₂) along Γ, from the hatted curvatures.
pub fn initial_invariants(data: &CauchyData) -> Result<[Jet; 6]> {
    let hf = hat_frame(data)?;
    Ok(invariants_from_hats(data, &hf.k_hat))
}

fn invariants_from_hats(data: &CauchyData, k_hat: &[Jet; 3]) -> [Jet; 6] {
    let n = data.order;
    let k0 = CauchyData::jet(&data.k0, n);
    let h6 = CauchyData::jet(&data.h, n).scale(1.0 / 6.0);
    let w3 = CauchyData::jet(&data.w, n).scale(3.0);
    let [k1, k2, k3] = k_hat;
    let s = &(k1 - k2) + k3;
    let t = &(k1 + k2) - k3;
    let u = &(k1 + k2) + k3;
    [
        &(-&k0) - &h6,
        &k0 - &h6,
        (&s - &w3).scale(-0.5),
        (&s + &w3).scale(-0.5),
        (&t - &w3).scale(0.5),
        (&u - &w3).scale(-0.5),
    ]
}

/// The Maurer–Cartan coefficients of a normal frame: A⁻¹∂ᵤA = a·M₁ and
/// A⁻¹∂ᵥA = b·M₂, as row-major entries.
pub fn normal_frame_matrices<R: Ring>(inv: &[R; 6]) -> (Vec<R>, Vec<R>) {
    let [q1, q2, p1, p2, r1, r2] = inv;
    let z = q1.lift(0.0);
    let c = |x: f64| q1.lift(x);
    let m1 = vec![
        q1.scale(-2.0), c(1.0), z.clone(), r1.clone(), r2.scale(-1.0), z.clone(), //
        z.clone(), q1.scale(-1.0), p1.clone(), z.clone(), z.clone(), r2.clone(), //
        z.clone(), z.clone(), z.clone(), z.clone(), p1.clone(), z.clone(), //
        c(1.0), z.clone(), z.clone(), z.clone(), z.clone(), r1.clone(), //
        z.clone(), z.clone(), z.clone(), z.clone(), q1.clone(), c(-1.0), //
        z.clone(), z.clone(), z.clone(), c(1.0), z.clone(), q1.scale(2.0),
    ];
    let m2 = vec![
        q2.clone(), z.clone(), z.clone(), p2.clone(), r1.clone(), z.clone(), //
        c(1.0), q2.scale(2.0), r2.clone(), z.clone(), z.clone(), r1.scale(-1.0), //
        z.clone(), c(1.0), z.clone(), z.clone(), r2.clone(), z.clone(), //
        z.clone(), z.clone(), z.clone(), z.clone(), z.clone(), p2.clone(), //
        z.clone(), z.clone(), c(1.0), z.clone(), q2.scale(-2.0), z.clone(), //
        z.clone(), z.clone(), z.clone(), z.clone(), c(-1.0), q2.scale(-1.0),
    ];
    (m1, m2)
}

/// The truncated series solution. Scalars are a, b (α¹ = a du, α² = b dv)
/// and the invariants; `frame` holds the 36 entries of A row by row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JetSolution {
    pub order: usize,
    pub a: Series2,
    pub b: Series2,
    pub q1: Series2,
    pub q2: Series2,
    pub p1: Series2,
    pub p2: Series2,
    pub r1: Series2,
    pub r2: Series2,
    pub frame: Vec<Series2>,
    pub data: CauchyData,
}

impl JetSolution {
    pub fn scalars(&self) -> [&Series2; 8] {
        [&self.a, &self.b, &self.q1, &self.q2, &self.p1, &self.p2, &self.r1, &self.r2]
    }

    pub fn invariants(&self) -> [Series2; 6] {
        [&self.q1, &self.q2, &self.p1, &self.p2, &self.r1, &self.r2].map(|s| s.clone())
    }

    pub fn frame_at(&self, u: f64, v: f64) -> Mat6 {
        Mat6::from_fn(|i, j| self.frame[6 * i + j].eval(u, v))
    }

    pub fn scalars_at(&self, u: f64, v: f64) -> [f64; 8] {
        self.scalars().map(|s| s.eval(u, v))
    }

    /// Restriction of the frame to Γ.
    pub fn frame_on_curve(&self) -> JetMat {
        JetMat::from_fn(|i, j| self.frame[6 * i + j].restrict_antidiagonal())
    }

    /// Radius where the degree-N terms of the frame reach `rel` times the
    /// size of A(0, 0).
    pub fn trust_radius(&self, rel: f64) -> f64 {
        let n = self.order;
        let a00 = self.frame.iter().fold(0.0f64, |m, s| m.max(s.value().abs()));
        let top = self
            .frame
            .iter()
            .map(|s| (0..=n).map(|j| s.get(n - j, j).abs()).sum::<f64>())
            .fold(0.0f64, f64::max);
        if top == 0.0 || n == 0 {
            f64::INFINITY
        } else {
            (rel * a00 / top).powf(1.0 / n as f64)
        }
    }
}

/// The eight scalar equations, at series order one less than the input:
/// ∂ᵥa − q₂ab, ∂ᵤb + q₁ab, the four structure relations and the two
/// Euler–Lagrange equations.
fn pde_residuals(f: &[Series2; 8]) -> [Series2; 8] {
    let m = f[0].order.saturating_sub(1);
    let l: Vec<Series2> = f.iter().map(|s| s.with_order(m)).collect();
    let (a, b, q1, q2, p1, p2, r1, r2) = (&l[0], &l[1], &l[2], &l[3], &l[4], &l[5], &l[6], &l[7]);
    let ab = a.mul(b);
    let one = Series2::constant(1.0, m);
    let q1q2 = q1.mul(q2);
    let (q1v, q2u) = (f[2].dv(), f[3].du());
    let (p1v, p2u) = (f[4].dv(), f[5].du());
    let (r1u, r1v) = (f[6].du(), f[6].dv());
    let (r2u, r2v) = (f[7].du(), f[7].dv());
    [
        f[0].dv().sub(&q2.mul(&ab)),
        f[1].du().add(&q1.mul(&ab)),
        a.mul(&q1v).scale(2.0).add(&b.mul(&q2u)).sub(&p2.sub(&q1q2).sub(&one).mul(&ab)),
        a.mul(&q1v).add(&b.mul(&q2u).scale(2.0)).sub(&q1q2.sub(p1).add(&one).mul(&ab)),
        b.mul(&p2u).sub(&a.mul(&r1v)).sub(&q2.mul(r1).scale(2.0).add(&q1.mul(p2).scale(3.0)).mul(&ab)),
        b.mul(&r2u).sub(&a.mul(&p1v)).sub(&q1.mul(r2).scale(2.0).add(&q2.mul(p1).scale(3.0)).mul(&ab)),
        r1u.sub(&q1.mul(r1).mul(a).scale(4.0)),
        r2v.add(&q2.mul(r2).mul(b).scale(4.0)),
    ]
}

const PDE_NAMES: [&str; 8] =
    ["coframe_a", "coframe_b", "structure_1", "structure_2", "structure_3", "structure_4", "el_r1", "el_r2"];

/// Solves for the degree-n coefficients of the scalars: the degree n − 1
/// part of the equations and the degree-n part of the restriction to Γ.
/// The residual is affine in the unknowns, so its matrix is assembled from
/// evaluations at 0 and at the unit vectors.
fn solve_order(fields: &mut [Series2; 8], n: usize, boundary: &[Jet; 8]) -> Result<()> {
    let nu = 8 * (n + 1);
    let base: Vec<Series2> = fields.iter().map(|s| s.with_order(n)).collect();
    let residual = |x: &[f64]| -> Vec<f64> {
        let mut fl: [Series2; 8] = std::array::from_fn(|f| base[f].clone());
        for (f, s) in fl.iter_mut().enumerate() {
            for j in 0..=n {
                s.set(n - j, j, x[f * (n + 1) + j]);
            }
        }
        let mut out = Vec::with_capacity(nu);
        if n >= 1 {
            for e in pde_residuals(&fl) {
                out.extend((0..n).map(|j| e.get(n - 1 - j, j)));
            }
        }
        for f in 0..8 {
            let s: f64 = (0..=n).map(|j| if j % 2 == 0 { x[f * (n + 1) + j] } else { -x[f * (n + 1) + j] }).sum();
            out.push(s - boundary[f].c[n]);
        }
        out
    };
    let f0 = residual(&vec![0.0; nu]);
    let cols: Vec<Vec<f64>> = (0..nu)
        .into_par_iter()
        .map(|k| {
            let mut e = vec![0.0; nu];
            e[k] = 1.0;
            residual(&e).iter().zip(&f0).map(|(x, y)| x - y).collect()
        })
        .collect();
    let jac = DMatrix::from_fn(nu, nu, |r, c| cols[c][r]);
    let rhs = -DVector::from_vec(f0.clone());
    let svd = jac.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > SOLVE_RCOND * smax) {
        return Err(Error::OrderSolveFailure {
            order: n,
            reason: format!("singular system: singular values {smin:e} / {smax:e}"),
        });
    }
    let solve = |b: &DVector<f64>| {
        svd.solve(b, 0.0).map_err(|e| Error::OrderSolveFailure { order: n, reason: e.to_string() })
    };
    let mut x = solve(&rhs)?;
    // refinement against the residual evaluated directly
    for _ in 0..2 {
        let r = DVector::from_vec(residual(x.as_slice()));
        x -= solve(&r)?;
    }
    let res = DVector::from_vec(residual(x.as_slice())).amax();
    if !res.is_finite() || res > 1e-9 * (1.0 + rhs.amax()) {
        return Err(Error::OrderSolveFailure { order: n, reason: format!("inconsistent system: residual {res:e}") });
    }
    for (f, s) in fields.iter_mut().enumerate() {
        for j in 0..=n {
            s.set(n - j, j, x[f * (n + 1) + j]);
        }
    }
    Ok(())
}

/// Coefficient of uⁱvʲ in p·q.
fn product_coeff(p: &Series2, q: &Series2, i: usize, j: usize) -> f64 {
    let mut s = 0.0;
    for a in 0..=i {
        for b in 0..=j {
            s += p.get(a, b) * q.get(i - a, j - b);
        }
    }
    s
}

/// The curve tangent at t = 0 as an element of the Pfaffian system, with
/// dω = (μ, −μ) and the invariants' derivatives along Γ.
fn curve_tangent(r_hat0: &Mat6, inv: &[Jet; 6], mu0: f64) -> Result<(ConfigPoint, crate::eds_engine::TangentValue)> {
    let z = ConfigPoint::new(LieGroupElement::unchecked(*r_hat0), inv.clone().map(|j| j.value()))?;
    let d: [f64; 6] = std::array::from_fn(|k| inv[k].derivative_value(1));
    let e1 = integral_line(&z, [mu0, -mu0], [d[0], d[1]], [d[2], d[3]], [d[4], d[5]]);
    Ok((z, e1))
}

/// The unique series solution of order N = `data.order`.
pub fn prolong(data: &CauchyData) -> Result<JetSolution> {
    let n = data.order;
    let hf = hat_frame(data)?;
    let inv = invariants_from_hats(data, &hf.k_hat);
    let mu = CauchyData::jet(&data.mu, n);
    let (z, e1) = curve_tangent(&hf.r_hat.value(), &inv, mu.value())?;
    if !noncharacteristic_test(&z, &e1, DEFAULT_TOL) {
        return Err(Error::CharacteristicData("polar space of the curve tangent is not two-dimensional".into()));
    }

    let boundary: [Jet; 8] = [
        mu.clone(),
        mu.clone(),
        inv[0].clone(),
        inv[1].clone(),
        inv[2].clone(),
        inv[3].clone(),
        inv[4].clone(),
        inv[5].clone(),
    ];
    let mut fields: [Series2; 8] = std::array::from_fn(|_| Series2::zero(n));
    for d in 0..=n {
        solve_order(&mut fields, d, &boundary)?;
    }

    let inv_s: [Series2; 6] = std::array::from_fn(|k| fields[k + 2].clone());
    let (m1, _) = normal_frame_matrices(&inv_s);
    let am1: Vec<Series2> = m1.iter().map(|e| e.mul(&fields[0])).collect();
    let mut frame = vec![Series2::zero(n); 36];
    for d in 0..=n {
        for i in 1..=d {
            let j = d - i;
            for r in 0..6 {
                for c in 0..6 {
                    let s: f64 = (0..6).map(|k| product_coeff(&frame[6 * r + k], &am1[6 * k + c], i - 1, j)).sum();
                    frame[6 * r + c].set(i, j, s / i as f64);
                }
            }
        }
        for e in 0..36 {
            let mut s = hf.r_hat.get(e / 6, e % 6).c[d];
            for i in 1..=d {
                let x = frame[e].get(i, d - i);
                s -= if (d - i) % 2 == 0 { x } else { -x };
            }
            frame[e].set(0, d, if d % 2 == 0 { s } else { -s });
        }
    }

    let [a, b, q1, q2, p1, p2, r1, r2] = fields;
    Ok(JetSolution { order: n, a, b, q1, q2, p1, p2, r1, r2, frame, data: data.clone() })
}

/// One named check of [`verify_solution`] with its largest coefficient.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub max: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub order: usize,
    /// Equations are checked through this total degree, boundary identities
    /// through `order`.
    pub through: usize,
    pub checks: Vec<Check>,
}

impl VerificationReport {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.checks.iter().find(|c| c.name == name).map(|c| c.max)
    }

    pub fn max(&self) -> f64 {
        self.checks.iter().fold(0.0, |m, c| m.max(c.max))
    }

    pub fn violations(&self, tol: f64) -> Vec<&str> {
        self.checks.iter().filter(|c| !(c.max <= tol)).map(|c| c.name.as_str()).collect()
    }

    pub fn passed(&self, tol: f64) -> bool {
        self.violations(tol).is_empty()
    }
}

fn jet_max(j: &Jet) -> f64 {
    j.max_abs()
}

/// Substitutes the series into the coordinate equations, the Pfaffian
/// generators η¹..η¹³ on ∂ᵤ and ∂ᵥ, the two-forms Θ, Ω, the harmonicity
/// combination and the boundary identities along Γ.
pub fn verify_solution(j: &JetSolution) -> VerificationReport {
    let n = j.order;
    let m = n.saturating_sub(1);
    let mut checks = Vec::new();
    let mut push = |name: &str, max: f64| checks.push(Check { name: name.to_string(), max });
    let fields: [Series2; 8] = j.scalars().map(|s| s.clone());

    let pde = pde_residuals(&fields);
    for (name, e) in PDE_NAMES.iter().zip(&pde) {
        push(name, e.max_abs_through(m));
    }
    let l: Vec<Series2> = fields.iter().map(|s| s.with_order(m)).collect();
    let (a, b) = (&l[0], &l[1]);
    let ab = a.mul(b);
    let inv: [Series2; 6] = std::array::from_fn(|k| l[k + 2].clone());
    let s6 = a
        .mul(&fields[7].dv())
        .add(&b.mul(&fields[6].du()))
        .sub(&inv[0].mul(&inv[4]).sub(&inv[1].mul(&inv[5])).mul(&ab).scale(4.0));
    push("structure_5", s6.max_abs_through(m));

    // frame equations
    let fr: Vec<Series2> = j.frame.iter().map(|s| s.with_order(m)).collect();
    let fu: Vec<Series2> = j.frame.iter().map(|s| s.du()).collect();
    let fv: Vec<Series2> = j.frame.iter().map(|s| s.dv()).collect();
    let (m1, m2) = normal_frame_matrices(&inv);
    let matmul = |x: &[Series2], y: &[Series2]| -> Vec<Series2> {
        (0..36)
            .map(|e| {
                let (r, c) = (e / 6, e % 6);
                (1..6).fold(x[6 * r].mul(&y[c]), |acc, k| acc.add(&x[6 * r + k].mul(&y[6 * k + c])))
            })
            .collect()
    };
    let am1: Vec<Series2> = m1.iter().map(|e| e.mul(a)).collect();
    let bm2: Vec<Series2> = m2.iter().map(|e| e.mul(b)).collect();
    let max_of = |v: &[Series2]| v.iter().fold(0.0f64, |acc, s| acc.max(s.max_abs_through(m)));
    let du_res: Vec<Series2> = fu.iter().zip(matmul(&fr, &am1)).map(|(x, y)| x.sub(&y)).collect();
    let dv_res: Vec<Series2> = fv.iter().zip(matmul(&fr, &bm2)).map(|(x, y)| x.sub(&y)).collect();
    push("frame_u", max_of(&du_res));
    push("frame_v", max_of(&dv_res));

    // Pfaffian generators on the coordinate tangents
    let finv: Vec<Series2> =
        (0..36).map(|e| fr[6 * dual(e % 6) + dual(e / 6)].scale(metric_sign(e / 6) * metric_sign(e % 6))).collect();
    let wu = matmul(&finv, &fu);
    let wv = matmul(&finv, &fv);
    let eta_u = one_forms(&inv, |r, c| wu[6 * r + c].clone());
    let eta_v = one_forms(&inv, |r, c| wv[6 * r + c].clone());
    push("eta_u", max_of(&eta_u));
    push("eta_v", max_of(&eta_v));

    // two-forms on (∂ᵤ, ∂ᵥ) in coframe coordinates
    let zero = Series2::zero(m);
    let mut t1 = vec![zero.clone(); crate::eds_engine::TANGENT_DIM];
    let mut t2 = t1.clone();
    t1[crate::eds_engine::W1] = a.clone();
    t2[crate::eds_engine::W2] = b.clone();
    for k in 0..13 {
        t1[crate::eds_engine::ETA + k] = eta_u[k].clone();
        t2[crate::eds_engine::ETA + k] = eta_v[k].clone();
    }
    for k in 0..6 {
        t1[crate::eds_engine::PI + k] = fields[k + 2].du();
        t2[crate::eds_engine::PI + k] = fields[k + 2].dv();
    }
    let forms = two_forms(&inv, &t1, &t2);
    for (name, f) in TWO_FORM_NAMES.iter().zip(&forms) {
        push(name, f.max_abs_through(m));
    }

    // ab·H with H the mean curvature of the Gauss map
    let harmonic = b.mul(&pde[6]).sub(&a.mul(&pde[7]));
    push("harmonic", harmonic.max_abs_through(m));

    // boundary identities along Γ
    match hat_frame(&j.data) {
        Ok(hf) => {
            let data_inv = invariants_from_hats(&j.data, &hf.k_hat);
            let on_curve = j.frame_on_curve();
            let d = on_curve.sub(&hf.r_hat);
            let fmax = (0..36).fold(0.0f64, |acc, e| acc.max(jet_max(d.get(e / 6, e % 6))));
            push("boundary_frame", fmax);
            let mu = CauchyData::jet(&j.data.mu, n);
            let ra = j.a.restrict_antidiagonal();
            let rb = j.b.restrict_antidiagonal();
            push("boundary_coframe", jet_max(&(&ra - &mu)).max(jet_max(&(&rb - &mu))));
            let rinv: [Jet; 6] = std::array::from_fn(|k| fields[k + 2].restrict_antidiagonal());
            let imax = (0..6).fold(0.0f64, |acc, k| acc.max(jet_max(&(&rinv[k] - &data_inv[k]))));
            push("boundary_invariants", imax);
            let h = CauchyData::jet(&j.data.h, n);
            let w = CauchyData::jet(&j.data.w, n);
            push("boundary_h", jet_max(&(&(&rinv[0] + &rinv[1]).scale(-3.0) - &h)));
            push("boundary_w", jet_max(&(&(&rinv[2] - &rinv[3]).scale(1.0 / 3.0) - &w)));
            let l0 = on_curve.column(0);
            let r0 = hf.r.column(0);
            push("polarization", (0..6).fold(0.0f64, |acc, k| acc.max(jet_max(&(&l0[k] - &r0[k])))));
        }
        Err(_) => push("boundary_data", f64::INFINITY),
    }

    VerificationReport { order: n, through: m, checks }
}

/// A surface evaluated from a [`JetSolution`].
#[derive(Clone, Debug)]
pub struct EvaluatedSurface {
    pub surface: LegendreSurfaceGrid,
    pub frame: FrameField,
    pub coframe: Coframe,
    pub invariants: InvariantField,
    /// Largest relative size of the degree-N terms over the grid.
    pub truncation: f64,
}

pub fn evaluate_surface(j: &JetSolution, grid: GridSpec) -> Result<EvaluatedSurface> {
    evaluate_surface_with_trust(j, grid, DEFAULT_TRUST)
}

/// Evaluates every series at the grid nodes. Fails with `WindowTooLarge` at
/// the first node where the degree-N terms of the frame exceed `trust`
/// times the frame's size.
pub fn evaluate_surface_with_trust(j: &JetSolution, grid: GridSpec, trust: f64) -> Result<EvaluatedSurface> {
    if grid.nu < 2 || grid.nv < 2 {
        return Err(Error::InvalidGrid("evaluation grid needs at least 2×2 nodes".into()));
    }
    let n = j.order;
    let du: Vec<Series2> = j.frame.iter().map(|s| s.du()).collect();
    let dv: Vec<Series2> = j.frame.iter().map(|s| s.dv()).collect();
    struct Node {
        frame: Mat6,
        fu: Mat6,
        fv: Mat6,
        s: [f64; 8],
        rel: f64,
    }
    let nodes: Vec<Node> = (0..grid.len())
        .into_par_iter()
        .map(|k| {
            let (i, jj) = grid.node(k);
            let (u, v) = (grid.u(i), grid.v(jj));
            let frame = j.frame_at(u, v);
            let top = j.frame.iter().fold(0.0f64, |m, s| m.max(s.eval_degree(n, u, v).abs()));
            let size = frame.amax().max(f64::MIN_POSITIVE);
            Node {
                frame,
                fu: Mat6::from_fn(|r, c| du[6 * r + c].eval(u, v)),
                fv: Mat6::from_fn(|r, c| dv[6 * r + c].eval(u, v)),
                s: j.scalars_at(u, v),
                rel: top / size,
            }
        })
        .collect();
    let mut truncation = 0.0f64;
    for (k, nd) in nodes.iter().enumerate() {
        if !(nd.rel < trust) {
            let (i, jj) = grid.node(k);
            return Err(Error::WindowTooLarge(grid.u(i), grid.v(jj)));
        }
        truncation = truncation.max(nd.rel);
    }
    let col = |m: &Mat6, c: usize| MinkVector(std::array::from_fn(|r| m[(r, c)]));
    let surface = LegendreSurfaceGrid {
        grid,
        phi0: nodes.iter().map(|nd| col(&nd.frame, 0)).collect(),
        phi1: nodes.iter().map(|nd| col(&nd.frame, 1)).collect(),
        partials: Some(LegendrePartials {
            phi0_u: nodes.iter().map(|nd| col(&nd.fu, 0)).collect(),
            phi0_v: nodes.iter().map(|nd| col(&nd.fv, 0)).collect(),
            phi1_u: nodes.iter().map(|nd| col(&nd.fu, 1)).collect(),
            phi1_v: nodes.iter().map(|nd| col(&nd.fv, 1)).collect(),
        }),
    };
    let pick = |f: usize| nodes.iter().map(|nd| nd.s[f]).collect::<Vec<f64>>();
    let coframe = Coframe::new(grid, pick(0), pick(1), DEFAULT_TOL)?;
    let invariants = InvariantField {
        grid,
        q1: pick(2),
        q2: pick(3),
        p1: pick(4),
        p2: pick(5),
        r1: pick(6),
        r2: pick(7),
        residual: vec![0.0; grid.len()],
        alpha04_residual: 0.0,
    };
    let (alpha_u, alpha_v) = nodes
        .iter()
        .map(|nd| {
            let inv: [f64; 6] = std::array::from_fn(|k| nd.s[k + 2]);
            let (m1, m2) = normal_frame_matrices(&inv);
            (Mat6::from_row_slice(&m1) * nd.s[0], Mat6::from_row_slice(&m2) * nd.s[1])
        })
        .unzip();
    let frame = FrameField {
        grid,
        order: 5,
        frames: nodes.iter().map(|nd| nd.frame).collect(),
        alpha_u,
        alpha_v,
        state: ReductionState::default(),
    };
    Ok(EvaluatedSurface { surface, frame, coframe, invariants, truncation })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie_core::{group_defect, random_group_element, x_of_h};

    fn data_with(f: impl FnOnce(&mut CauchyData)) -> CauchyData {
        let mut d = CauchyData::zero(4);
        f(&mut d);
        d
    }

    #[test]
    fn zero_h_gives_identity_and_unhatted_curvatures() {
        let d = data_with(|d| {
            d.k1 = vec![0.3, 0.2];
            d.k2 = vec![-0.1];
            d.k3 = vec![0.7, 0.0, 0.1];
        });
        let hf = hat_frame(&d).unwrap();
        assert!((hf.x.value() - Mat6::identity()).amax() == 0.0);
        for (kh, k) in hf.k_hat.iter().zip([&d.k1, &d.k2, &d.k3]) {
            assert!((kh - &CauchyData::jet(k, 4)).max_abs() < 1e-15);
        }
    }

    #[test]
    fn constant_h_two_shifts_k3_by_one() {
        let d = data_with(|d| {
            d.h = vec![2.0];
            d.k3 = vec![0.4];
        });
        let hf = hat_frame(&d).unwrap();
        assert!((hf.k_hat[2].value() - (0.4 - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn x_of_h_is_in_the_group_and_matches_jet() {
        for h in [-1.3, 0.0, 0.4, 2.0] {
            assert!(group_defect(&x_of_h(h)) < 1e-14);
            let d = data_with(|d| d.h = vec![h]);
            assert!((hat_frame(&d).unwrap().x.value() - x_of_h(h)).amax() < 1e-15);
        }
    }

    #[test]
    fn hatted_frame_satisfies_hatted_frenet_equations() {
        for seed in 0..5 {
            let mut d = CauchyData::random(seed, 6);
            d.mu = vec![1.2, -0.3, 0.1];
            let hf = hat_frame(&d).unwrap();
            assert!(hf.deviation < 1e-13, "seed {seed}: {:e}", hf.deviation);
        }
    }

    #[test]
    fn initial_invariant_examples() {
        let zero = initial_invariants(&CauchyData::zero(3)).unwrap();
        assert!(zero.iter().all(|j| j.max_abs() == 0.0));
        let d = data_with(|d| d.k0 = vec![1.0]);
        let v = initial_invariants(&d).unwrap().map(|j| j.value());
        assert_eq!(v, [-1.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
        let d = CauchyData::random(3, 5);
        let inv = initial_invariants(&d).unwrap();
        let h = CauchyData::jet(&d.h, 5);
        let w = CauchyData::jet(&d.w, 5);
        assert!((&(&inv[0] + &inv[1]).scale(-3.0) - &h).max_abs() < 1e-15);
        assert!((&(&inv[2] - &inv[3]).scale(1.0 / 3.0) - &w).max_abs() < 1e-15);
    }

    #[test]
    fn frame_equations_restrict_to_hatted_frenet_matrix() {
        let d = CauchyData::random(11, 3);
        let hf = hat_frame(&d).unwrap();
        let inv = invariants_from_hats(&d, &hf.k_hat).map(|j| j.value());
        let (m1, m2) = normal_frame_matrices(&inv);
        let lhs = Mat6::from_row_slice(&m1) - Mat6::from_row_slice(&m2);
        let k0 = d.k0[0];
        let rhs = hatted_frenet_matrix(k0, hf.k_hat.clone().map(|j| j.value()), d.h[0], 1.0);
        assert!((lhs - rhs).amax() < 1e-15);
    }

    #[test]
    fn zero_data_solution_verifies_exactly() {
        let j = prolong(&CauchyData::zero(4)).unwrap();
        let rep = verify_solution(&j);
        assert!(rep.max() < 1e-14, "{rep:?}");
    }

    #[test]
    fn random_data_verifies() {
        for seed in 0..3 {
            let j = prolong(&CauchyData::random(seed, 5)).unwrap();
            let rep = verify_solution(&j);
            assert!(rep.passed(1e-10), "seed {seed}: {:?}", rep.violations(1e-10));
        }
    }

    #[test]
    fn corruption_is_flagged() {
        let mut j = prolong(&CauchyData::random(2, 4)).unwrap();
        let c = j.r1.get(1, 1);
        j.r1.set(1, 1, c + 1e-3);
        let rep = verify_solution(&j);
        let v = rep.violations(1e-10);
        assert!(v.contains(&"el_r1") && v.contains(&"Theta1"), "{v:?}");
        assert!(!v.contains(&"coframe_a"));
    }

    #[test]
    fn solutions_are_deterministic() {
        let d = CauchyData::random(5, 5);
        assert_eq!(prolong(&d).unwrap(), prolong(&d).unwrap());
    }

    #[test]
    fn base_frame_change_transforms_frame_only() {
        let d = CauchyData::random(8, 4);
        let g = random_group_element(17).matrix;
        let mut e = d.clone();
        e.r0 = BaseFrame::from_matrix(&g);
        let (j, k) = (prolong(&d).unwrap(), prolong(&e).unwrap());
        for (x, y) in j.scalars().iter().zip(k.scalars()) {
            assert!(x.c.iter().zip(&y.c).all(|(p, q)| (p - q).abs() < 1e-12));
        }
        for (u, v) in [(0.1, 0.05), (-0.07, 0.12)] {
            assert!((g * j.frame_at(u, v) - k.frame_at(u, v)).amax() < 1e-12);
        }
    }

    #[test]
    fn evaluation_on_the_curve_reproduces_hatted_frame() {
        let d = CauchyData::random(4, 6);
        let j = prolong(&d).unwrap();
        let hf = hat_frame(&d).unwrap();
        for t in [0.0, 0.01, -0.02] {
            let r = Mat6::from_fn(|r, c| hf.r_hat.get(r, c).eval(t));
            assert!((j.frame_at(t, -t) - r).amax() < 1e-14);
        }
        let grid = GridSpec::new(5, 5, [-0.02, 0.02, -0.02, 0.02]);
        let s = evaluate_surface(&j, grid).unwrap();
        assert!(s.surface.validate(1e-9).is_ok());
        let big = GridSpec::new(5, 5, [-50.0, 50.0, -50.0, 50.0]);
        assert!(matches!(evaluate_surface(&j, big), Err(Error::WindowTooLarge(..))));
    }

    #[test]
    fn vanishing_mu_is_characteristic() {
        let d = data_with(|d| d.mu = vec![0.0, 1.0]);
        assert!(matches!(prolong(&d), Err(Error::CharacteristicData(_))));
    }
}
