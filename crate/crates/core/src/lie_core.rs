//! Linear algebra of R^(4,2): the inner product, the Lie quadric, oriented
//! spheres, contact elements, the Lie sphere group and its Lie algebra.
//!
//! Matrices act on column vectors. For a frame `A` the columns `A_0..A_5` are
//! the frame vectors and the Maurer–Cartan coefficient `ω^I_J` is the entry in
//! row `I`, column `J` of `A⁻¹dA`, so that `dA_J = Σ_I A_I ω^I_J`.

use crate::error::{Error, Result};
use nalgebra::{Matrix2, Matrix3, Matrix6, SymmetricEigen, Vector6};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::f64::consts::SQRT_2;
use std::ops::{Add, Mul, Neg, Sub};

pub type Mat6 = Matrix6<f64>;

/// Default relative tolerance for invariant checks.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Index paired with `i` by the metric (0↔5, 1↔4, 2↔2, 3↔3).
pub const fn dual(i: usize) -> usize {
    match i {
        0 => 5,
        1 => 4,
        4 => 1,
        5 => 0,
        k => k,
    }
}

/// Sign of the metric on the pair `(i, dual(i))`.
pub const fn metric_sign(i: usize) -> f64 {
    match i {
        2 | 3 => 1.0,
        _ => -1.0,
    }
}

/// Gram matrix g of the (4,2) form in the basis ε₀..ε₅.
pub fn metric() -> Mat6 {
    let mut g = Mat6::zeros();
    for i in 0..6 {
        g[(i, dual(i))] = metric_sign(i);
    }
    g
}

/// A vector of R^(4,2).
#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MinkVector(pub [f64; 6]);

impl MinkVector {
    pub const ZERO: MinkVector = MinkVector([0.0; 6]);

    pub fn new(v: [f64; 6]) -> Self {
        MinkVector(v)
    }

    pub fn basis(i: usize) -> Self {
        let mut v = [0.0; 6];
        v[i] = 1.0;
        MinkVector(v)
    }

    pub fn to_vector(&self) -> Vector6<f64> {
        Vector6::from_column_slice(&self.0)
    }

    pub fn from_vector(v: &Vector6<f64>) -> Self {
        let mut a = [0.0; 6];
        a.copy_from_slice(v.as_slice());
        MinkVector(a)
    }

    /// Euclidean norm of the coordinate vector.
    pub fn norm(&self) -> f64 {
        self.0.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }

    pub fn inner(&self, w: &MinkVector) -> f64 {
        inner(self, w)
    }
}

impl Add for MinkVector {
    type Output = MinkVector;
    fn add(self, o: MinkVector) -> MinkVector {
        let mut r = self.0;
        for i in 0..6 {
            r[i] += o.0[i];
        }
        MinkVector(r)
    }
}

impl Sub for MinkVector {
    type Output = MinkVector;
    fn sub(self, o: MinkVector) -> MinkVector {
        let mut r = self.0;
        for i in 0..6 {
            r[i] -= o.0[i];
        }
        MinkVector(r)
    }
}

impl Mul<f64> for MinkVector {
    type Output = MinkVector;
    fn mul(self, s: f64) -> MinkVector {
        MinkVector(self.0.map(|x| x * s))
    }
}

impl Neg for MinkVector {
    type Output = MinkVector;
    fn neg(self) -> MinkVector {
        self * -1.0
    }
}

/// ⟨V,W⟩ = −(v⁰w⁵+v⁵w⁰) − (v¹w⁴+v⁴w¹) + v²w² + v³w³.
pub fn inner(v: &MinkVector, w: &MinkVector) -> f64 {
    let (v, w) = (&v.0, &w.0);
    -(v[0] * w[5] + v[5] * w[0]) - (v[1] * w[4] + v[4] * w[1]) + v[2] * w[2] + v[3] * w[3]
}

/// A point of the Lie quadric, stored as a normalized representative whose
/// first nonzero coordinate is +1.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct QuadricPoint {
    pub rep: MinkVector,
}

impl QuadricPoint {
    pub fn new(rep: MinkVector) -> Result<Self> {
        Self::with_tol(rep, DEFAULT_TOL)
    }

    pub fn with_tol(rep: MinkVector, tol: f64) -> Result<Self> {
        let n = rep.norm();
        if !rep.is_finite() || n == 0.0 {
            return Err(Error::InvalidQuadricPoint("zero or non-finite representative".into()));
        }
        if inner(&rep, &rep).abs() > tol * n * n {
            return Err(Error::InvalidQuadricPoint(format!(
                "not isotropic: <V,V> = {:e}",
                inner(&rep, &rep)
            )));
        }
        Ok(Self::normalized(rep))
    }

    /// Normalizes without the isotropy check.
    pub fn normalized(rep: MinkVector) -> Self {
        let n = rep.norm();
        let lead = rep.0.iter().copied().find(|x| x.abs() > 1e-12 * n).unwrap_or(1.0);
        QuadricPoint { rep: rep * (1.0 / lead) }
    }

    /// Projective equality: the representatives are proportional.
    pub fn same_point(&self, other: &QuadricPoint, tol: f64) -> bool {
        let a = self.rep.to_vector().normalize();
        let b = other.rep.to_vector().normalize();
        (a - b).norm() <= tol.max(1e-12) * 10.0 || (a + b).norm() <= tol.max(1e-12) * 10.0
    }
}

/// Oriented spheres, oriented planes, point spheres and the point at infinity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum OrientedSphereElement {
    Sphere { center: [f64; 3], radius: f64 },
    Plane { point: [f64; 3], normal: [f64; 3] },
    PointSphere { point: [f64; 3] },
    Infinity,
}

fn dot3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// σ(p,r) = (1, (r+p₁)/√2, p₂, p₃, (r−p₁)/√2, (|p|²−r²)/2), π(p,n) and ∞ ↦ ε₅.
pub fn sphere_to_quadric(s: &OrientedSphereElement) -> QuadricPoint {
    let rep = match *s {
        OrientedSphereElement::Sphere { center: p, radius: r } => sphere_vector(&p, r),
        OrientedSphereElement::PointSphere { point: p } => sphere_vector(&p, 0.0),
        OrientedSphereElement::Plane { point: p, normal: n } => plane_vector(&p, &n),
        OrientedSphereElement::Infinity => MinkVector::basis(5),
    };
    QuadricPoint::normalized(rep)
}

pub(crate) fn sphere_vector(p: &[f64; 3], r: f64) -> MinkVector {
    MinkVector([
        1.0,
        (r + p[0]) / SQRT_2,
        p[1],
        p[2],
        (r - p[0]) / SQRT_2,
        (dot3(p, p) - r * r) / 2.0,
    ])
}

pub(crate) fn plane_vector(p: &[f64; 3], n: &[f64; 3]) -> MinkVector {
    MinkVector([
        0.0,
        (1.0 + n[0]) / 2.0,
        n[1] / SQRT_2,
        n[2] / SQRT_2,
        (1.0 - n[0]) / 2.0,
        dot3(n, p) / SQRT_2,
    ])
}

/// Inverse of [`sphere_to_quadric`] on the standard chart.
pub fn quadric_to_sphere(q: &QuadricPoint) -> Result<OrientedSphereElement> {
    quadric_to_sphere_tol(q, DEFAULT_TOL)
}

pub fn quadric_to_sphere_tol(q: &QuadricPoint, tol: f64) -> Result<OrientedSphereElement> {
    let v = q.rep.0;
    let n = q.rep.norm();
    if v[0].abs() > tol * n {
        let s = 1.0 / v[0];
        let w = v.map(|x| x * s);
        let r = (w[1] + w[4]) / SQRT_2;
        let p = [(w[1] - w[4]) / SQRT_2, w[2], w[3]];
        let scale = 1.0 + dot3(&p, &p).sqrt();
        if r.abs() <= tol * scale {
            Ok(OrientedSphereElement::PointSphere { point: p })
        } else {
            Ok(OrientedSphereElement::Sphere { center: p, radius: r })
        }
    } else if (v[1] + v[4]).abs() > tol * n {
        let s = 1.0 / (v[1] + v[4]);
        let w = v.map(|x| x * s);
        let normal = [w[1] - w[4], SQRT_2 * w[2], SQRT_2 * w[3]];
        let np = SQRT_2 * w[5];
        let point = normal.map(|x| x * np);
        Ok(OrientedSphereElement::Plane { point, normal })
    } else if v[..5].iter().all(|x| x.abs() <= tol * n) {
        Ok(OrientedSphereElement::Infinity)
    } else {
        Err(Error::NondecodableQuadricPoint(format!("{:?}", v)))
    }
}

/// True iff the two quadric points are in oriented contact.
pub fn oriented_contact(q1: &QuadricPoint, q2: &QuadricPoint, tol: f64) -> bool {
    inner(&q1.rep, &q2.rep).abs() <= tol * q1.rep.norm() * q2.rep.norm()
}

/// A null 2-plane of R^(4,2), given by a basis.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ContactElement {
    pub basis: (MinkVector, MinkVector),
}

impl ContactElement {
    pub fn new(v: MinkVector, w: MinkVector, tol: f64) -> Result<Self> {
        let s = v.norm().max(w.norm());
        let s2 = s * s;
        for (name, x) in [("<V,V>", inner(&v, &v)), ("<W,W>", inner(&w, &w)), ("<V,W>", inner(&v, &w))] {
            if x.abs() > tol * s2 {
                return Err(Error::InvalidContactElement(format!("{name} = {x:e}")));
            }
        }
        if span_rank(&[v, w], tol) < 2 {
            return Err(Error::InvalidContactElement("basis is not of rank 2".into()));
        }
        Ok(ContactElement { basis: (v, w) })
    }

    /// Equality of spans.
    pub fn same_plane(&self, other: &ContactElement, tol: f64) -> bool {
        span_rank(&[self.basis.0, self.basis.1, other.basis.0, other.basis.1], tol) == 2
    }
}

/// Numerical rank of a family of vectors (singular values above tol·σ_max).
pub fn span_rank(vs: &[MinkVector], tol: f64) -> usize {
    let m = nalgebra::DMatrix::from_fn(6, vs.len(), |i, j| vs[j].0[i]);
    let sv = m.singular_values();
    let smax = sv.max();
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > tol.max(1e-12) * smax).count()
}

/// Gram matrix of a family of vectors under the (4,2) form.
pub fn gram<const N: usize>(vs: &[MinkVector; N]) -> [[f64; N]; N] {
    let mut m = [[0.0; N]; N];
    for i in 0..N {
        for j in 0..N {
            m[i][j] = inner(&vs[i], &vs[j]);
        }
    }
    m
}

/// Counts (positive, negative, zero) eigenvalues of a symmetric 3×3 matrix.
pub fn signature3(m: &[[f64; 3]; 3], tol: f64) -> (usize, usize, usize) {
    let mat = Matrix3::from_fn(|i, j| m[i][j]);
    let ev = SymmetricEigen::new(mat).eigenvalues;
    let scale = ev.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
    let thr = tol * scale.max(f64::MIN_POSITIVE);
    let pos = ev.iter().filter(|&&x| x > thr).count();
    let neg = ev.iter().filter(|&&x| x < -thr).count();
    (pos, neg, 3 - pos - neg)
}

/// A 3-plane of signature (2,1): a point of the Dupin manifold.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct DupinElement {
    pub basis: [MinkVector; 3],
}

impl DupinElement {
    pub fn new(basis: [MinkVector; 3], tol: f64) -> Result<Self> {
        let g = gram(&basis);
        match signature3(&g, tol) {
            (2, 1, 0) => Ok(DupinElement { basis }),
            s => Err(Error::SignatureFailure(format!("(pos, neg, zero) = {:?}", s))),
        }
    }

    pub fn same_plane(&self, other: &DupinElement, tol: f64) -> bool {
        let mut v = self.basis.to_vec();
        v.extend_from_slice(&other.basis);
        span_rank(&v, tol) == 3
    }
}

mod mat_serde {
    use super::Mat6;
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(m: &Mat6, s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<f64> = (0..36).map(|k| m[(k / 6, k % 6)]).collect();
        serde::Serialize::serialize(&rows, s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Mat6, D::Error> {
        let v: Vec<f64> = Vec::deserialize(d)?;
        if v.len() != 36 {
            return Err(D::Error::custom(format!("expected 36 entries, got {}", v.len())));
        }
        Ok(Mat6::from_row_slice(&v))
    }
}

/// Row-major 36-array serialization for bare matrices.
pub fn mat_to_rows(m: &Mat6) -> Vec<f64> {
    (0..36).map(|k| m[(k / 6, k % 6)]).collect()
}

pub fn mat_from_rows(v: &[f64]) -> Result<Mat6> {
    if v.len() != 36 {
        return Err(Error::InvalidInput(format!("expected 36 matrix entries, got {}", v.len())));
    }
    Ok(Mat6::from_row_slice(v))
}

/// An element of the Lie sphere group, up to the identification A ~ −A.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LieGroupElement {
    #[serde(with = "mat_serde")]
    pub matrix: Mat6,
}

impl LieGroupElement {
    pub fn identity() -> Self {
        LieGroupElement { matrix: Mat6::identity() }
    }

    pub fn new(matrix: Mat6) -> Result<Self> {
        Self::with_tol(matrix, DEFAULT_TOL)
    }

    pub fn with_tol(matrix: Mat6, tol: f64) -> Result<Self> {
        let e = group_defect(&matrix);
        let scale = matrix.norm().powi(2).max(1.0);
        if !(e <= tol * scale) {
            return Err(Error::InvalidGroupElement(format!("|A^T g A - g| = {e:e}")));
        }
        let d = matrix.determinant();
        if (d - 1.0).abs() > tol * scale.powi(3) {
            return Err(Error::InvalidGroupElement(format!("det = {d}")));
        }
        Ok(LieGroupElement { matrix })
    }

    /// Wraps a matrix without validation.
    pub fn unchecked(matrix: Mat6) -> Self {
        LieGroupElement { matrix }
    }

    /// A⁻¹ = g Aᵀ g.
    pub fn inverse(&self) -> Self {
        LieGroupElement { matrix: group_inverse(&self.matrix) }
    }

    pub fn compose(&self, other: &LieGroupElement) -> Self {
        LieGroupElement { matrix: self.matrix * other.matrix }
    }

    pub fn column(&self, j: usize) -> MinkVector {
        MinkVector::from_vector(&self.matrix.column(j).into_owned())
    }

    /// Equality in G/±I.
    pub fn same_class(&self, other: &LieGroupElement, tol: f64) -> bool {
        let s = self.matrix.norm().max(1.0);
        (self.matrix - other.matrix).norm() <= tol * s || (self.matrix + other.matrix).norm() <= tol * s
    }
}

/// Max-norm of AᵀgA − g.
pub fn group_defect(a: &Mat6) -> f64 {
    let g = metric();
    (a.transpose() * g * a - g).amax()
}

/// g Aᵀ g, the inverse of a group element.
pub fn group_inverse(a: &Mat6) -> Mat6 {
    let g = metric();
    g * a.transpose() * g
}

/// An element of the Lie algebra: Xᵀg + gX = 0.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LieAlgebraElement {
    #[serde(with = "mat_serde")]
    pub matrix: Mat6,
}

/// Row/column positions of the fifteen independent algebra coefficients.
pub const INDEPENDENT_ENTRIES: [(usize, usize); 15] = [
    (0, 0),
    (1, 1),
    (0, 1),
    (1, 0),
    (2, 0),
    (3, 0),
    (2, 1),
    (3, 1),
    (0, 2),
    (0, 3),
    (1, 2),
    (1, 3),
    (3, 2),
    (0, 4),
    (4, 0),
];

impl LieAlgebraElement {
    pub fn zero() -> Self {
        LieAlgebraElement { matrix: Mat6::zeros() }
    }

    pub fn new(matrix: Mat6, tol: f64) -> Result<Self> {
        let d = algebra_defect(&matrix);
        if d > tol * matrix.norm().max(1.0) {
            return Err(Error::InvalidInput(format!("not in the Lie algebra: |X^T g + g X| = {d:e}")));
        }
        Ok(LieAlgebraElement { matrix })
    }

    /// Builds the element with prescribed entries; each entry also fixes its
    /// partner `X[j*][i*] = −(g_j/g_i) X[i][j]`. Entries on the anti-diagonal
    /// pairs (i, i*) are forced to zero.
    pub fn from_entries(entries: &[((usize, usize), f64)]) -> Self {
        let mut m = Mat6::zeros();
        for &((i, j), x) in entries {
            set_algebra_entry(&mut m, i, j, x);
        }
        LieAlgebraElement { matrix: m }
    }

    /// The fifteen independent coefficients in [`INDEPENDENT_ENTRIES`] order.
    pub fn independent(&self) -> [f64; 15] {
        let mut out = [0.0; 15];
        for (k, &(i, j)) in INDEPENDENT_ENTRIES.iter().enumerate() {
            out[k] = self.matrix[(i, j)];
        }
        out
    }

    pub fn from_independent(c: &[f64; 15]) -> Self {
        let e: Vec<_> = INDEPENDENT_ENTRIES.iter().copied().zip(c.iter().copied()).collect();
        Self::from_entries(&e)
    }

    /// Projects an arbitrary matrix onto the algebra (orthogonally in the
    /// entrywise sense, pair by pair).
    pub fn project(m: &Mat6) -> Self {
        let mut out = Mat6::zeros();
        for &(i, j) in INDEPENDENT_ENTRIES.iter() {
            let (pi, pj) = (dual(j), dual(i));
            let f = -metric_sign(j) / metric_sign(i);
            let x = 0.5 * (m[(i, j)] + f * m[(pi, pj)]);
            set_algebra_entry(&mut out, i, j, x);
        }
        LieAlgebraElement { matrix: out }
    }

    pub fn exp(&self) -> LieGroupElement {
        LieGroupElement { matrix: self.matrix.exp() }
    }
}

fn set_algebra_entry(m: &mut Mat6, i: usize, j: usize, x: f64) {
    let (pi, pj) = (dual(j), dual(i));
    if (pi, pj) == (i, j) {
        m[(i, j)] = 0.0;
        return;
    }
    m[(i, j)] = x;
    m[(pi, pj)] = -metric_sign(j) / metric_sign(i) * x;
}

/// Max-norm of Xᵀg + gX.
pub fn algebra_defect(x: &Mat6) -> f64 {
    let g = metric();
    (x.transpose() * g + g * x).amax()
}

/// Objects on which the group acts by acting on representatives.
pub trait GroupAction: Sized {
    fn act(&self, a: &Mat6) -> Self;
}

impl GroupAction for MinkVector {
    fn act(&self, a: &Mat6) -> Self {
        MinkVector::from_vector(&(a * self.to_vector()))
    }
}

impl GroupAction for QuadricPoint {
    fn act(&self, a: &Mat6) -> Self {
        QuadricPoint::normalized(self.rep.act(a))
    }
}

impl GroupAction for ContactElement {
    fn act(&self, a: &Mat6) -> Self {
        ContactElement { basis: (self.basis.0.act(a), self.basis.1.act(a)) }
    }
}

impl GroupAction for DupinElement {
    fn act(&self, a: &Mat6) -> Self {
        DupinElement { basis: self.basis.map(|v| v.act(a)) }
    }
}

/// Applies a group element after validating it.
pub fn group_action<T: GroupAction>(a: &LieGroupElement, x: &T) -> Result<T> {
    let a = LieGroupElement::new(a.matrix)?;
    Ok(x.act(&a.matrix))
}

/// F₀(p) = (1, p₁/√2, p₂, p₃, −p₁/√2, |p|²/2).
pub fn lift_point(p: &[f64; 3]) -> MinkVector {
    sphere_vector(p, 0.0)
}

/// F₁(p,n) = (0, (1+n₁)/2, n₂/√2, n₃/√2, (1−n₁)/2, n·p/√2).
pub fn lift_plane(p: &[f64; 3], n: &[f64; 3]) -> MinkVector {
    plane_vector(p, n)
}

/// The contact element [F₀(p) ∧ F₁(p,n)].
pub fn contact_lift(p: &[f64; 3], n: &[f64; 3]) -> Result<ContactElement> {
    let nn = dot3(n, n).sqrt();
    if (nn - 1.0).abs() > 1e-9 {
        return Err(Error::NonUnitNormal(nn));
    }
    ContactElement::new(lift_point(p), lift_plane(p, n), DEFAULT_TOL)
}

/// Central-difference Maurer–Cartan coefficients A⁻¹dA/dt along uniformly
/// sampled frames. Samples are first sign-aligned to their predecessor.
pub fn maurer_cartan(samples: &[LieGroupElement], step: f64) -> Result<Vec<LieAlgebraElement>> {
    let n = samples.len();
    if n < 3 {
        return Err(Error::InvalidInput("maurer_cartan needs at least 3 samples".into()));
    }
    let mut a: Vec<Mat6> = Vec::with_capacity(n);
    a.push(samples[0].matrix);
    let mut jumps = Vec::with_capacity(n);
    for (i, s) in samples.iter().enumerate().skip(1) {
        let prev = a[i - 1];
        let (dp, dm) = ((s.matrix - prev).norm(), (s.matrix + prev).norm());
        let m = if dm < dp { -s.matrix } else { s.matrix };
        jumps.push(dp.min(dm));
        a.push(m);
    }
    // a jump much larger than the typical increment signals a broken path
    let mut sorted = jumps.clone();
    sorted.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let typical = sorted[sorted.len() / 2];
    for (k, &j) in jumps.iter().enumerate() {
        let scale = a[k].norm().max(1.0);
        if j > 0.5 * scale && j > 50.0 * typical {
            return Err(Error::SignAlignmentFailure(k + 1));
        }
    }
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let d = if i == 0 {
            (-3.0 * a[0] + 4.0 * a[1] - a[2]) / (2.0 * step)
        } else if i == n - 1 {
            (3.0 * a[n - 1] - 4.0 * a[n - 2] + a[n - 3]) / (2.0 * step)
        } else {
            (a[i + 1] - a[i - 1]) / (2.0 * step)
        };
        let inv = a[i].try_inverse().unwrap_or_else(|| group_inverse(&a[i]));
        out.push(LieAlgebraElement { matrix: inv * d });
    }
    Ok(out)
}

/// The Dupin form ω¹₀ω⁰₁ + ω⁰₄ω⁴₀ + ω²₀ω⁰₂ + ω¹₃ω³₁ − ½(ω³₂)² on one tangent value.
pub fn dupin_metric_eval(w: &Mat6) -> f64 {
    dupin_metric_polar(w, w)
}

/// Polarization of the Dupin form.
pub fn dupin_metric_polar(x: &Mat6, y: &Mat6) -> f64 {
    let pair = |a: (usize, usize), b: (usize, usize)| 0.5 * (x[a] * y[b] + x[b] * y[a]);
    pair((1, 0), (0, 1)) + pair((0, 4), (4, 0)) + pair((2, 0), (0, 2)) + pair((1, 3), (3, 1))
        - 0.5 * x[(3, 2)] * y[(3, 2)]
}

/// Default entry bound used by [`random_group_element`].
pub const RANDOM_ALGEBRA_SCALE: f64 = 0.5;

/// exp(X) for a pseudo-random algebra element with entries bounded by 0.5.
pub fn random_group_element(seed: u64) -> LieGroupElement {
    random_group_element_scaled(seed, RANDOM_ALGEBRA_SCALE)
}

pub fn random_group_element_scaled(seed: u64, scale: f64) -> LieGroupElement {
    random_algebra_element(seed, scale).exp()
}

pub fn random_algebra_element(seed: u64, scale: f64) -> LieAlgebraElement {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c = [0.0; 15];
    for x in c.iter_mut() {
        *x = if scale > 0.0 { rng.random_range(-scale..scale) } else { 0.0 };
    }
    LieAlgebraElement::from_independent(&c)
}

/// The G₀ element X(D,B,Y,b): blocks D, D·J·Yᵀ·B, ½·D·J·(YᵀY + [[0,−b],[b,0]])
/// on the first block row, B and Y on the second, J·D⁻ᵀ·J on the third.
pub fn g0_element(d: &Matrix2<f64>, b: &Matrix2<f64>, y: &Matrix2<f64>, bb: f64) -> Mat6 {
    let j = Matrix2::new(0.0, 1.0, 1.0, 0.0);
    let skew = Matrix2::new(0.0, -bb, bb, 0.0);
    let z = 0.5 * d * j * (y.transpose() * y + skew);
    let top_mid = d * j * y.transpose() * b;
    let dinv_t = d.try_inverse().expect("singular D block").transpose();
    let br = j * dinv_t * j;
    let mut m = Mat6::zeros();
    for r in 0..2 {
        for c in 0..2 {
            m[(r, c)] = d[(r, c)];
            m[(r, c + 2)] = top_mid[(r, c)];
            m[(r, c + 4)] = z[(r, c)];
            m[(r + 2, c + 2)] = b[(r, c)];
            m[(r + 2, c + 4)] = y[(r, c)];
            m[(r + 4, c + 4)] = br[(r, c)];
        }
    }
    m
}

/// X(h) = X(I, I, diag(h/2, −h/2), −h).
pub fn x_of_h(h: f64) -> Mat6 {
    let i = Matrix2::identity();
    g0_element(&i, &i, &Matrix2::new(h / 2.0, 0.0, 0.0, -h / 2.0), -h)
}

/// The coefficient matrix of the Frenet equations at curvatures k₀..k₃.
pub fn frenet_matrix(k: [f64; 4]) -> Mat6 {
    let [k0, k1, k2, k3] = k;
    Mat6::from_row_slice(&[
        k0, 1.0, 0.0, k1, k3, 0.0, //
        -1.0, -k0, k2, 0.0, 0.0, -k3, //
        0.0, -1.0, 0.0, 0.0, k2, 0.0, //
        1.0, 0.0, 0.0, 0.0, 0.0, k1, //
        0.0, 0.0, -1.0, 0.0, k0, -1.0, //
        0.0, 0.0, 0.0, 1.0, 1.0, -k0,
    ])
}

/// Serde adapter for a bare 6×6 matrix (row-major 36-array).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat6Wrapper(pub Mat6);

impl Serialize for Mat6Wrapper {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        mat_serde::serialize(&self.0, s)
    }
}

impl<'de> Deserialize<'de> for Mat6Wrapper {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        mat_serde::deserialize(d).map(Mat6Wrapper)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn inner_examples() {
        let e = MinkVector::basis;
        assert_eq!(inner(&e(2), &e(2)), 1.0);
        assert_eq!(inner(&e(0), &e(5)), -1.0);
        let ones = MinkVector([1.0; 6]);
        assert_eq!(inner(&ones, &e(0)), -1.0);
    }

    #[test]
    fn metric_matches_inner() {
        let g = metric();
        let v = MinkVector([0.3, -1.2, 0.7, 2.0, 0.1, -0.4]);
        let w = MinkVector([1.1, 0.5, -0.2, 0.9, 1.3, 0.6]);
        let via_g = (v.to_vector().transpose() * g * w.to_vector())[0];
        assert!(close(via_g, inner(&v, &w), 1e-14));
    }

    #[test]
    fn sphere_examples() {
        let q = sphere_to_quadric(&OrientedSphereElement::Sphere { center: [0.0; 3], radius: 1.0 });
        let h = 1.0 / SQRT_2;
        let want = [1.0, h, 0.0, 0.0, h, -0.5];
        for i in 0..6 {
            assert!(close(q.rep.0[i], want[i], 1e-15));
        }
        let inf = sphere_to_quadric(&OrientedSphereElement::Infinity);
        assert_eq!(inf.rep, MinkVector::basis(5));
        let p = sphere_to_quadric(&OrientedSphereElement::PointSphere { point: [1.0, 0.0, 0.0] });
        let want = [1.0, h, 0.0, 0.0, -h, 0.5];
        for i in 0..6 {
            assert!(close(p.rep.0[i], want[i], 1e-15));
        }
    }

    #[test]
    fn decode_plane_and_infinity() {
        let q = QuadricPoint::new(MinkVector([0.0, 1.0, 0.0, 0.0, 0.0, 1.0 / SQRT_2])).unwrap();
        match quadric_to_sphere(&q).unwrap() {
            OrientedSphereElement::Plane { point, normal } => {
                assert!(close(normal[0], 1.0, 1e-14) && close(normal[1], 0.0, 1e-14));
                assert!(close(dot3(&point, &normal), 1.0, 1e-14));
            }
            other => panic!("unexpected {other:?}"),
        }
        let inf = QuadricPoint::new(MinkVector::basis(5)).unwrap();
        assert_eq!(quadric_to_sphere(&inf).unwrap(), OrientedSphereElement::Infinity);
    }

    #[test]
    fn undecodable_point() {
        // on the exact quadric v0 = v1 + v4 = 0 forces a multiple of e5, so
        // only an off-quadric representative reaches this branch
        let q = QuadricPoint::normalized(MinkVector([0.0, 0.0, 1.0, 0.0, 0.0, 0.3]));
        assert!(matches!(quadric_to_sphere(&q), Err(Error::NondecodableQuadricPoint(_))));
    }

    #[test]
    fn contact_examples() {
        let tol = 1e-9;
        let s1 = sphere_to_quadric(&OrientedSphereElement::Sphere { center: [0.0; 3], radius: 1.0 });
        let pl = sphere_to_quadric(&OrientedSphereElement::Plane { point: [1.0, 0.0, 0.0], normal: [-1.0, 0.0, 0.0] });
        assert!(oriented_contact(&s1, &pl, tol));
        let s2 = sphere_to_quadric(&OrientedSphereElement::Sphere { center: [0.0; 3], radius: 2.0 });
        assert!(!oriented_contact(&s1, &s2, tol));
        assert!(close(inner(&s1.rep, &s2.rep), 0.5, 1e-14));
        assert!(oriented_contact(&s1, &s1, tol));
    }

    #[test]
    fn contact_lift_examples() {
        let c = contact_lift(&[0.0; 3], &[1.0, 0.0, 0.0]).unwrap();
        let e01 = ContactElement::new(MinkVector::basis(0), MinkVector::basis(1), 1e-9).unwrap();
        assert!(c.same_plane(&e01, 1e-9));
        let c = contact_lift(&[0.0; 3], &[-1.0, 0.0, 0.0]).unwrap();
        let e04 = ContactElement::new(MinkVector::basis(0), MinkVector::basis(4), 1e-9).unwrap();
        assert!(c.same_plane(&e04, 1e-9));
        assert!(matches!(contact_lift(&[0.0; 3], &[2.0, 0.0, 0.0]), Err(Error::NonUnitNormal(_))));
    }

    #[test]
    fn random_elements_are_in_group() {
        for seed in 0..20 {
            let a = random_group_element(seed);
            assert!(group_defect(&a.matrix) < 1e-10);
            assert!((a.matrix.determinant() - 1.0).abs() < 1e-10);
        }
        assert_eq!(random_group_element(7), random_group_element(7));
        let id = random_group_element_scaled(3, 0.0);
        assert_eq!(id.matrix, Mat6::identity());
    }

    #[test]
    fn from_entries_gives_algebra_elements() {
        let x = random_algebra_element(11, 1.0);
        assert!(algebra_defect(&x.matrix) < 1e-14);
        let y = LieAlgebraElement::from_independent(&x.independent());
        assert_eq!(x, y);
        let p = LieAlgebraElement::project(&(x.matrix + Mat6::identity() * 0.0));
        assert!((p.matrix - x.matrix).amax() < 1e-14);
    }

    #[test]
    fn g0_elements_and_x_of_h_are_in_group() {
        let d = Matrix2::new(1.3, 0.2, -0.4, 0.9);
        let b = Matrix2::new(0.8, -0.6, 0.6, 0.8);
        let y = Matrix2::new(0.3, -1.1, 0.7, 0.2);
        let x = g0_element(&d, &b, &y, 0.45);
        assert!(group_defect(&x) < 1e-13);
        assert_eq!(x_of_h(0.0), Mat6::identity());
        let h = 0.7;
        let xh = x_of_h(h);
        assert!(group_defect(&xh) < 1e-15);
        assert!(close(xh[(0, 3)], -h / 2.0, 1e-15) && close(xh[(0, 5)], h * h / 8.0, 1e-15));
    }

    #[test]
    fn dupin_examples() {
        assert_eq!(dupin_metric_eval(&Mat6::zeros()), 0.0);
        for k in [[0.0; 4], [1.0, 2.0, -1.0, 0.5], [-0.3, 0.1, 4.0, 2.0]] {
            assert!(close(dupin_metric_eval(&frenet_matrix(k)), -1.0, 1e-15));
        }
        let w = LieAlgebraElement::from_entries(&[((3, 2), 2.0)]);
        assert!(close(dupin_metric_eval(&w.matrix), -2.0, 1e-15));
        assert!(algebra_defect(&frenet_matrix([0.4, -0.2, 0.3, 1.0])) < 1e-15);
    }

    #[test]
    fn maurer_cartan_of_exp_curve() {
        let x = random_algebra_element(5, 0.8);
        let errs: Vec<f64> = [0.02, 0.01]
            .iter()
            .map(|&h| {
                let samples: Vec<_> = (0..41).map(|i| LieAlgebraElement { matrix: x.matrix * (i as f64 * h) }.exp()).collect();
                let mc = maurer_cartan(&samples, h).unwrap();
                mc.iter().map(|w| (w.matrix - x.matrix).amax()).fold(0.0, f64::max)
            })
            .collect();
        assert!(errs[1] < 1e-3);
        let ratio = errs[0] / errs[1];
        assert!(ratio > 3.5 && ratio < 4.5, "ratio {ratio}");
        let constant = vec![LieGroupElement::identity(); 5];
        for w in maurer_cartan(&constant, 0.1).unwrap() {
            assert_eq!(w.matrix, Mat6::zeros());
        }
    }

    #[test]
    fn maurer_cartan_aligns_signs() {
        let x = random_algebra_element(9, 0.5);
        let h = 0.01;
        let samples: Vec<_> = (0..11)
            .map(|i| {
                let m = (x.matrix * (i as f64 * h)).exp();
                LieGroupElement::unchecked(if i % 2 == 1 { -m } else { m })
            })
            .collect();
        let mc = maurer_cartan(&samples, h).unwrap();
        assert!((mc[5].matrix - x.matrix).amax() < 1e-3);
    }
}
