//! The Pfaffian system of Lie minimal surfaces on P = G × R⁶: evaluation of
//! the generators, integral elements, polar equations and the
//! non-characteristic test.
//!
//! Tangent vectors are handled in the coframe
//! (ω¹, ω², η¹..η¹³, π¹, π², υ¹, υ², ζ¹, ζ²) with ω¹ = ω³₀, ω² = ω²₁,
//! π = dq, υ = dp, ζ = dr. The form formulas are generic over [`Ring`] so the
//! Cauchy solver can evaluate them on power series.

use crate::error::{Error, Result};
use crate::jet::Ring;
use crate::lie_core::{random_group_element, LieAlgebraElement, LieGroupElement};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// Dimension of the tangent space of P.
pub const TANGENT_DIM: usize = 21;
/// Number of plane coordinates (Xᵃⱼ, Yⁱⱼ, Uⁱⱼ, Vⁱⱼ).
pub const PLANE_DIM: usize = 38;

pub const W1: usize = 0;
pub const W2: usize = 1;
/// index of η¹; ηᵃ sits at `ETA + a − 1`
pub const ETA: usize = 2;
pub const PI: usize = 15;
pub const UPS: usize = 17;
pub const ZETA: usize = 19;

pub const TWO_FORM_NAMES: [&str; 6] = ["Theta1", "Theta2", "Omega1", "Omega2", "Omega3", "Omega4"];

/// Rank threshold relative to the largest singular value.
pub const RANK_TOL: f64 = 1e-9;

/// A point (A, q₁, q₂, p₁, p₂, r₁, r₂) of the configuration space.
#[derive(Clone, Debug, Serialize)]
pub struct ConfigPoint {
    pub frame: LieGroupElement,
    /// (q₁, q₂, p₁, p₂, r₁, r₂)
    pub inv: [f64; 6],
}

impl ConfigPoint {
    pub fn new(frame: LieGroupElement, inv: [f64; 6]) -> Result<Self> {
        if inv.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("non-finite invariants".into()));
        }
        let frame = LieGroupElement::new(frame.matrix)?;
        Ok(ConfigPoint { frame, inv })
    }

    /// Random frame and invariants uniform in [−1, 1].
    pub fn random(seed: u64) -> ConfigPoint {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inv = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
        ConfigPoint { frame: random_group_element(seed.wrapping_mul(0x9e37_79b9).wrapping_add(1)), inv }
    }
}

/// A tangent vector of P: the values of the Maurer–Cartan form A⁻¹dA and of
/// (dq₁, dq₂, dp₁, dp₂, dr₁, dr₂).
#[derive(Clone, Debug, Serialize)]
pub struct TangentValue {
    pub omega: LieAlgebraElement,
    pub dinv: [f64; 6],
}

impl TangentValue {
    pub fn zero() -> TangentValue {
        TangentValue { omega: LieAlgebraElement::zero(), dinv: [0.0; 6] }
    }

    /// Coframe coordinates at `z`.
    pub fn coframe(&self, z: &ConfigPoint) -> [f64; TANGENT_DIM] {
        let m = &self.omega.matrix;
        let eta = one_forms(&z.inv, |i, j| m[(i, j)]);
        let mut c = [0.0; TANGENT_DIM];
        c[W1] = m[(3, 0)];
        c[W2] = m[(2, 1)];
        c[ETA..ETA + 13].copy_from_slice(&eta);
        c[PI..].copy_from_slice(&self.dinv);
        c
    }

    /// The tangent vector with prescribed coframe coordinates at `z`.
    pub fn from_coframe(z: &ConfigPoint, c: &[f64; TANGENT_DIM]) -> TangentValue {
        let [q1, q2, p1, p2, r1, r2] = z.inv;
        let (w1, w2) = (c[W1], c[W2]);
        let e = |a: usize| c[ETA + a - 1];
        let entries = [
            ((3, 0), w1),
            ((2, 1), w2),
            ((4, 0), e(1)),
            ((2, 0), e(2)),
            ((3, 1), e(3)),
            ((3, 2), e(4)),
            ((1, 0), e(5) + w2),
            ((0, 1), e(6) + w1),
            ((0, 2), e(7)),
            ((1, 3), e(8)),
            ((0, 0), e(9) - 2.0 * q1 * w1 + q2 * w2),
            ((1, 1), e(10) - q1 * w1 + 2.0 * q2 * w2),
            ((0, 3), e(11) + r1 * w1 + p2 * w2),
            ((1, 2), e(12) + p1 * w1 + r2 * w2),
            ((0, 4), e(13) - r2 * w1 + r1 * w2),
        ];
        let mut dinv = [0.0; 6];
        dinv.copy_from_slice(&c[PI..]);
        TangentValue { omega: LieAlgebraElement::from_entries(&entries), dinv }
    }
}

/// η¹..η¹³ from the Maurer–Cartan entries `w(I, J)` = ωᴵ_J and the
/// invariants.
pub fn one_forms<R: Ring>(inv: &[R; 6], w: impl Fn(usize, usize) -> R) -> [R; 13] {
    let [q1, q2, p1, p2, r1, r2] = inv;
    let o1 = w(3, 0);
    let o2 = w(2, 1);
    let lin = |base: R, c1: &R, s1: f64, c2: &R, s2: f64| base.add(&c1.mul(&o1).scale(s1)).add(&c2.mul(&o2).scale(s2));
    [
        w(4, 0),
        w(2, 0),
        w(3, 1),
        w(3, 2),
        w(1, 0).sub(&o2),
        w(0, 1).sub(&o1),
        w(0, 2),
        w(1, 3),
        lin(w(0, 0), q1, 2.0, q2, -1.0),
        lin(w(1, 1), q1, 1.0, q2, -2.0),
        lin(w(0, 3), r1, -1.0, p2, -1.0),
        lin(w(1, 2), p1, -1.0, r2, -1.0),
        lin(w(0, 4), r2, 1.0, r1, -1.0),
    ]
}

/// Θ¹, Θ², Ω¹..Ω⁴ on the pair (T₁, T₂) given in coframe coordinates.
pub fn two_forms<R: Ring>(inv: &[R; 6], t1: &[R], t2: &[R]) -> [R; 6] {
    let [q1, q2, p1, p2, r1, r2] = inv;
    let wedge = |i: usize, j: usize| t1[i].mul(&t2[j]).sub(&t1[j].mul(&t2[i]));
    let w12 = wedge(W1, W2);
    let c = |x: &R| x.mul(&w12);
    let q1q2 = q1.mul(q2);
    [
        wedge(ZETA, W2).sub(&c(&q1.mul(r1).scale(4.0))),
        wedge(ZETA + 1, W1).sub(&c(&q2.mul(r2).scale(4.0))),
        wedge(PI, W1).scale(2.0).sub(&wedge(PI + 1, W2)).add(&c(&p2.sub(&q1q2).add(&q1.lift(-1.0)))),
        wedge(PI, W1).sub(&wedge(PI + 1, W2).scale(2.0)).add(&c(&q1q2.sub(p1).add(&q1.lift(1.0)))),
        wedge(ZETA, W1)
            .add(&wedge(UPS + 1, W2))
            .sub(&c(&r1.mul(q2).scale(2.0).add(&q1.mul(p2).scale(3.0)))),
        wedge(UPS, W1)
            .add(&wedge(ZETA + 1, W2))
            .sub(&c(&p1.mul(q2).scale(3.0).add(&r2.mul(q1).scale(2.0)))),
    ]
}

/// η¹..η¹³ on a tangent vector.
pub fn eval_one_forms(z: &ConfigPoint, t: &TangentValue) -> [f64; 13] {
    let m = &t.omega.matrix;
    one_forms(&z.inv, |i, j| m[(i, j)])
}

/// Θ¹, Θ², Ω¹..Ω⁴ on the plane spanned by (T₁, T₂).
pub fn eval_two_forms(z: &ConfigPoint, t1: &TangentValue, t2: &TangentValue) -> [f64; 6] {
    two_forms(&z.inv, &t1.coframe(z), &t2.coframe(z))
}

/// A candidate 2-plane T₁ = ∂/∂ω¹ + …, T₂ = ∂/∂ω² + … given by its 38 plane
/// coordinates: Xᵃⱼ at `2(a−1) + (j−1)`, then Yⁱⱼ, Uⁱⱼ, Vⁱⱼ at
/// `26 + 4k + 2(i−1) + (j−1)` for k = 0, 1, 2.
#[derive(Clone, Debug, Serialize)]
pub struct IntegralElement2 {
    pub t1: TangentValue,
    pub t2: TangentValue,
}

fn plane_tangents(zc: &[f64; PLANE_DIM]) -> ([f64; TANGENT_DIM], [f64; TANGENT_DIM]) {
    let mut t = [[0.0; TANGENT_DIM]; 2];
    for j in 0..2 {
        t[j][W1 + j] = 1.0;
        for a in 0..13 {
            t[j][ETA + a] = zc[2 * a + j];
        }
        for k in 0..3 {
            for i in 0..2 {
                t[j][PI + 2 * k + i] = zc[26 + 4 * k + 2 * i + j];
            }
        }
    }
    (t[0], t[1])
}

impl IntegralElement2 {
    pub fn from_plane_coords(z: &ConfigPoint, zc: &[f64; PLANE_DIM]) -> IntegralElement2 {
        let (a, b) = plane_tangents(zc);
        IntegralElement2 { t1: TangentValue::from_coframe(z, &a), t2: TangentValue::from_coframe(z, &b) }
    }

    /// A random point of the fiber of integral elements over `z`: the six
    /// free coordinates Y¹₁, Y²₂, U¹₁, U²₂, V¹₂, V²₁ are uniform in [−1, 1].
    pub fn random(z: &ConfigPoint, seed: u64) -> IntegralElement2 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut f = || rng.random_range(-1.0..1.0);
        let [q1, q2, p1, p2, r1, r2] = z.inv;
        let (y11, y22, u11, u22, v12, v21) = (f(), f(), f(), f(), f(), f());
        // 2Y¹₂ + Y²₁ = −(1 − p₂ + q₁q₂), Y¹₂ + 2Y²₁ = 1 − p₁ + q₁q₂
        let (c1, c2) = (-(1.0 - p2 + q1 * q2), 1.0 - p1 + q1 * q2);
        let y12 = (2.0 * c1 - c2) / 3.0;
        let y21 = (2.0 * c2 - c1) / 3.0;
        let u21 = v12 + 2.0 * r1 * q2 + 3.0 * q1 * p2;
        let u12 = v21 - (3.0 * p1 * q2 + 2.0 * r2 * q1);
        let v11 = 4.0 * q1 * r1;
        let v22 = -4.0 * q2 * r2;
        let mut zc = [0.0; PLANE_DIM];
        let put = |zc: &mut [f64; PLANE_DIM], k: usize, i: usize, j: usize, x: f64| zc[26 + 4 * k + 2 * i + j] = x;
        put(&mut zc, 0, 0, 0, y11);
        put(&mut zc, 0, 0, 1, y12);
        put(&mut zc, 0, 1, 0, y21);
        put(&mut zc, 0, 1, 1, y22);
        put(&mut zc, 1, 0, 0, u11);
        put(&mut zc, 1, 0, 1, u12);
        put(&mut zc, 1, 1, 0, u21);
        put(&mut zc, 1, 1, 1, u22);
        put(&mut zc, 2, 0, 0, v11);
        put(&mut zc, 2, 0, 1, v12);
        put(&mut zc, 2, 1, 0, v21);
        put(&mut zc, 2, 1, 1, v22);
        IntegralElement2::from_plane_coords(z, &zc)
    }

    /// Largest |ηᵃ(Tⱼ)| and |two-form| value on the plane.
    pub fn defect(&self, z: &ConfigPoint) -> f64 {
        let e = eval_one_forms(z, &self.t1).into_iter().chain(eval_one_forms(z, &self.t2));
        let f = eval_two_forms(z, &self.t1, &self.t2);
        e.chain(f).fold(0.0, |a, x| a.max(x.abs()))
    }
}

fn rank(m: &DMatrix<f64>) -> usize {
    let sv = m.clone().singular_values();
    let smax = sv.max();
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > RANK_TOL * smax).count()
}

/// The affine equations cutting out the integral 2-planes over `z` in plane
/// coordinates: rows are the 26 ηᵃ(Tⱼ) and the six two-forms.
pub fn v2_system(z: &ConfigPoint) -> (DMatrix<f64>, Vec<f64>) {
    let eval = |zc: &[f64; PLANE_DIM]| -> Vec<f64> {
        let (a, b) = plane_tangents(zc);
        let mut out: Vec<f64> = Vec::with_capacity(32);
        for a_ in 0..13 {
            out.push(a[ETA + a_]);
            out.push(b[ETA + a_]);
        }
        out.extend(two_forms(&z.inv, &a, &b));
        out
    };
    let base = eval(&[0.0; PLANE_DIM]);
    let mut m = DMatrix::zeros(base.len(), PLANE_DIM);
    for k in 0..PLANE_DIM {
        let mut e = [0.0; PLANE_DIM];
        e[k] = 1.0;
        let col = eval(&e);
        for r in 0..base.len() {
            m[(r, k)] = col[r] - base[r];
        }
    }
    (m, base.into_iter().map(|x| -x).collect())
}

/// Dimension of the fiber of integral 2-planes over `z`.
pub fn v2_fiber_dimension(z: &ConfigPoint) -> usize {
    PLANE_DIM - rank(&v2_system(z).0)
}

/// The polar equations of a one-dimensional integral element.
#[derive(Clone, Debug, Serialize)]
pub struct PolarSystem {
    /// 19 × 21: the ηᵃ rows followed by the contractions of the six
    /// two-forms with E₁
    pub matrix: Vec<Vec<f64>>,
    pub rank: usize,
    pub polar_dim: usize,
}

/// Assembles the polar equations of E₁ by contracting the generators with
/// E₁. Errors when E₁ is not annihilated by the ηᵃ.
pub fn polar_system(z: &ConfigPoint, e1: &TangentValue) -> Result<PolarSystem> {
    let c = e1.coframe(z);
    let scale = c.iter().fold(0.0f64, |a, x| a.max(x.abs())).max(1.0);
    let eta = c[ETA..ETA + 13].iter().fold(0.0f64, |a, x| a.max(x.abs()));
    if eta > 1e-9 * scale {
        return Err(Error::NotIntegralElement(eta));
    }
    let mut m = DMatrix::zeros(19, TANGENT_DIM);
    for a in 0..13 {
        m[(a, ETA + a)] = 1.0;
    }
    for k in 0..TANGENT_DIM {
        let mut e = [0.0; TANGENT_DIM];
        e[k] = 1.0;
        let f = two_forms(&z.inv, &c, &e);
        for (r, x) in f.iter().enumerate() {
            m[(13 + r, k)] = *x;
        }
    }
    let rk = rank(&m);
    Ok(PolarSystem {
        matrix: (0..19).map(|r| (0..TANGENT_DIM).map(|k| m[(r, k)]).collect()).collect(),
        rank: rk,
        polar_dim: TANGENT_DIM - rk,
    })
}

/// The integral line a¹∂/∂ω¹ + a²∂/∂ω² + yⁱ∂/∂πⁱ + uⁱ∂/∂υⁱ + vⁱ∂/∂ζⁱ.
pub fn integral_line(z: &ConfigPoint, a: [f64; 2], y: [f64; 2], u: [f64; 2], v: [f64; 2]) -> TangentValue {
    let mut c = [0.0; TANGENT_DIM];
    c[W1] = a[0];
    c[W2] = a[1];
    c[PI..PI + 2].copy_from_slice(&y);
    c[UPS..UPS + 2].copy_from_slice(&u);
    c[ZETA..ZETA + 2].copy_from_slice(&v);
    TangentValue::from_coframe(z, &c)
}

/// True iff a¹a² ≠ 0 within `tol` and the polar space is two-dimensional.
pub fn noncharacteristic_test(z: &ConfigPoint, e1: &TangentValue, tol: f64) -> bool {
    let c = e1.coframe(z);
    if (c[W1] * c[W2]).abs() <= tol {
        return false;
    }
    matches!(polar_system(z, e1), Ok(p) if p.polar_dim == 2)
}

/// Summary of a randomized involutivity check.
#[derive(Clone, Debug, Serialize)]
pub struct InvolutivityReport {
    pub seed: u64,
    pub samples: usize,
    pub fiber_dimensions: Vec<usize>,
    pub polar_dimensions: Vec<usize>,
    pub characteristic_polar_dimensions: Vec<usize>,
    pub max_integral_defect: f64,
    pub all_fiber_six: bool,
    pub all_polar_two: bool,
}

/// Samples random points, random non-characteristic integral lines (with
/// |aⁱ| ≥ 0.1) and random integral planes.
pub fn involutivity_report(samples: usize, seed: u64) -> Result<InvolutivityReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rep = InvolutivityReport {
        seed,
        samples,
        fiber_dimensions: Vec::with_capacity(samples),
        polar_dimensions: Vec::with_capacity(samples),
        characteristic_polar_dimensions: Vec::with_capacity(samples),
        max_integral_defect: 0.0,
        all_fiber_six: true,
        all_polar_two: true,
    };
    for _ in 0..samples {
        let z = ConfigPoint::random(rng.random());
        let mut f = || rng.random_range(-1.0..1.0);
        let nz = |r: &mut ChaCha8Rng| {
            let s: f64 = if r.random::<bool>() { 1.0 } else { -1.0 };
            s * r.random_range(0.1..1.0)
        };
        let (y, u, v) = ([f(), f()], [f(), f()], [f(), f()]);
        let a = [nz(&mut rng), nz(&mut rng)];
        let e1 = integral_line(&z, a, y, u, v);
        rep.polar_dimensions.push(polar_system(&z, &e1)?.polar_dim);
        let ec = integral_line(&z, [1.0, 0.0], y, u, v);
        rep.characteristic_polar_dimensions.push(polar_system(&z, &ec)?.polar_dim);
        rep.fiber_dimensions.push(v2_fiber_dimension(&z));
        let e2 = IntegralElement2::random(&z, rng.random());
        rep.max_integral_defect = rep.max_integral_defect.max(e2.defect(&z));
    }
    rep.all_fiber_six = rep.fiber_dimensions.iter().all(|&d| d == 6);
    rep.all_polar_two = rep.polar_dimensions.iter().all(|&d| d == 2);
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z_with(inv: [f64; 6]) -> ConfigPoint {
        ConfigPoint { frame: LieGroupElement::identity(), inv }
    }

    #[test]
    fn one_forms_on_first_coframe_vector() {
        let z = z_with([1.0, 0.4, 0.3, -0.2, 0.7, -0.9]);
        let t = TangentValue { omega: LieAlgebraElement::from_entries(&[((3, 0), 1.0)]), dinv: [0.0; 6] };
        let e = eval_one_forms(&z, &t);
        assert_eq!(e[8], 2.0);
        assert_eq!(e[9], 1.0);
        assert_eq!(e[10], -0.7);
        assert_eq!(e[12], -0.9);
        assert_eq!(e[5], -1.0);
        assert!(eval_one_forms(&z, &TangentValue::zero()).iter().all(|&x| x == 0.0));
    }

    #[test]
    fn coframe_round_trip() {
        let z = ConfigPoint::random(3);
        let c: [f64; TANGENT_DIM] = std::array::from_fn(|k| (k as f64 * 0.37).sin());
        let back = TangentValue::from_coframe(&z, &c).coframe(&z);
        for k in 0..TANGENT_DIM {
            assert!((back[k] - c[k]).abs() < 1e-14);
        }
    }

    #[test]
    fn random_integral_plane_is_integral() {
        for s in 0..20 {
            let z = ConfigPoint::random(s);
            let e = IntegralElement2::random(&z, s + 100);
            assert!(e.defect(&z) < 1e-13);
        }
    }

    #[test]
    fn theta1_is_linear_in_v11() {
        let z = ConfigPoint::random(5);
        let e = IntegralElement2::random(&z, 9);
        let mut c1 = e.t1.coframe(&z);
        c1[ZETA] += 1.0;
        let t1 = TangentValue::from_coframe(&z, &c1);
        let f = eval_two_forms(&z, &t1, &e.t2);
        assert!((f[0] - 1.0).abs() < 1e-13);
        assert!(f[1..].iter().all(|x| x.abs() < 1e-13));
        let d = eval_two_forms(&z, &e.t1, &e.t1);
        assert!(d.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn fiber_dimension_is_six() {
        for s in 0..10 {
            assert_eq!(v2_fiber_dimension(&ConfigPoint::random(s)), 6);
        }
    }

    #[test]
    fn polar_dims() {
        let z = ConfigPoint::random(11);
        let e = integral_line(&z, [0.8, -0.3], [0.1, 0.2], [0.3, -0.4], [0.5, 0.6]);
        assert_eq!(polar_system(&z, &e).unwrap().polar_dim, 2);
        assert!(noncharacteristic_test(&z, &e, 1e-12));
        let ec = integral_line(&z, [1.0, 0.0], [0.1, 0.2], [0.3, -0.4], [0.5, 0.6]);
        assert!(polar_system(&z, &ec).unwrap().polar_dim > 2);
        assert!(!noncharacteristic_test(&z, &ec, 1e-12));
        let scaled = integral_line(&z, [2.4, -0.9], [0.3, 0.6], [0.9, -1.2], [1.5, 1.8]);
        assert_eq!(polar_system(&z, &scaled).unwrap().polar_dim, 2);
        let mut c = e.coframe(&z);
        c[ETA + 3] = 0.5;
        assert!(matches!(polar_system(&z, &TangentValue::from_coframe(&z, &c)), Err(Error::NotIntegralElement(_))));
    }
}
