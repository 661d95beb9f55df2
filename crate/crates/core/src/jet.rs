//! Truncated power series: univariate Taylor jets and bivariate series of
//! bounded total degree.

use serde::{Deserialize, Serialize};
use std::ops::{Add, Mul, Neg, Sub};

/// Univariate truncated Taylor series `Σ c_k s^k`, `c_k = f^(k)(t₀)/k!`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Jet {
    pub c: Vec<f64>,
}

impl Jet {
    pub fn constant(x: f64, order: usize) -> Jet {
        let mut c = vec![0.0; order + 1];
        c[0] = x;
        Jet { c }
    }

    pub fn zero(order: usize) -> Jet {
        Jet { c: vec![0.0; order + 1] }
    }

    /// The jet of the identity `t ↦ t` at `t0`.
    pub fn variable(t0: f64, order: usize) -> Jet {
        let mut j = Jet::constant(t0, order);
        if order >= 1 {
            j.c[1] = 1.0;
        }
        j
    }

    /// Jet of a polynomial with coefficients `p` (in t) at `t0`, truncated.
    pub fn from_polynomial(p: &[f64], t0: f64, order: usize) -> Jet {
        let mut c = vec![0.0; order + 1];
        // Taylor shift: coefficient k of p(t0 + s) is Σ_n p_n C(n,k) t0^(n-k)
        for (n, &pn) in p.iter().enumerate() {
            if pn == 0.0 {
                continue;
            }
            let mut binom = 1.0;
            for k in 0..=n.min(order) {
                if k > 0 {
                    binom *= (n - k + 1) as f64 / k as f64;
                }
                c[k] += pn * binom * t0.powi((n - k) as i32);
            }
        }
        Jet { c }
    }

    pub fn order(&self) -> usize {
        self.c.len() - 1
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    /// k-th derivative at the base point.
    pub fn derivative_value(&self, k: usize) -> f64 {
        if k > self.order() {
            return 0.0;
        }
        let mut f = 1.0;
        for i in 2..=k {
            f *= i as f64;
        }
        self.c[k] * f
    }

    pub fn truncate(&self, order: usize) -> Jet {
        let mut c = self.c.clone();
        c.resize(order + 1, 0.0);
        Jet { c }
    }

    /// d/ds; the result has one order less.
    pub fn deriv(&self) -> Jet {
        if self.c.len() == 1 {
            return Jet::zero(0);
        }
        Jet { c: (1..self.c.len()).map(|k| k as f64 * self.c[k]).collect() }
    }

    /// Antiderivative with value `c0` at the base point.
    pub fn integrate(&self, c0: f64) -> Jet {
        let mut c = Vec::with_capacity(self.c.len() + 1);
        c.push(c0);
        for (k, &x) in self.c.iter().enumerate() {
            c.push(x / (k + 1) as f64);
        }
        Jet { c }
    }

    pub fn scale(&self, s: f64) -> Jet {
        Jet { c: self.c.iter().map(|x| x * s).collect() }
    }

    pub fn add_const(&self, s: f64) -> Jet {
        let mut j = self.clone();
        j.c[0] += s;
        j
    }

    pub fn recip(&self) -> Jet {
        let n = self.c.len();
        let a0 = self.c[0];
        let mut r = vec![0.0; n];
        r[0] = 1.0 / a0;
        for k in 1..n {
            let s: f64 = (1..=k).map(|j| self.c[j] * r[k - j]).sum();
            r[k] = -s / a0;
        }
        Jet { c: r }
    }

    pub fn sqrt(&self) -> Jet {
        let n = self.c.len();
        let mut r = vec![0.0; n];
        r[0] = self.c[0].sqrt();
        for k in 1..n {
            let s: f64 = (1..k).map(|j| r[j] * r[k - j]).sum();
            r[k] = (self.c[k] - s) / (2.0 * r[0]);
        }
        Jet { c: r }
    }

    pub fn cbrt(&self) -> Jet {
        // y = x^(1/3): y' x = y x' / 3, solved order by order
        let n = self.c.len();
        let mut y = vec![0.0; n];
        y[0] = self.c[0].cbrt();
        for k in 1..n {
            // Σ_{j} (j) y_j x_{k-j} = (1/3) Σ_j (k-j) y_j x_{k-j}, isolate y_k
            let mut s = 0.0;
            for j in 0..k {
                s += ((k - j) as f64 / 3.0 - j as f64) * y[j] * self.c[k - j];
            }
            y[k] = s / (k as f64 * self.c[0]);
        }
        Jet { c: y }
    }

    /// Evaluates the truncated series at offset `s` from the base point.
    pub fn eval(&self, s: f64) -> f64 {
        self.c.iter().rev().fold(0.0, |acc, &x| acc * s + x)
    }

    pub fn max_abs(&self) -> f64 {
        self.c.iter().fold(0.0, |a, &x| a.max(x.abs()))
    }
}

impl Add for &Jet {
    type Output = Jet;
    fn add(self, o: &Jet) -> Jet {
        let n = self.c.len().min(o.c.len());
        Jet { c: (0..n).map(|k| self.c[k] + o.c[k]).collect() }
    }
}

impl Sub for &Jet {
    type Output = Jet;
    fn sub(self, o: &Jet) -> Jet {
        let n = self.c.len().min(o.c.len());
        Jet { c: (0..n).map(|k| self.c[k] - o.c[k]).collect() }
    }
}

impl Mul for &Jet {
    type Output = Jet;
    fn mul(self, o: &Jet) -> Jet {
        let n = self.c.len().min(o.c.len());
        let mut c = vec![0.0; n];
        for i in 0..n {
            if self.c[i] == 0.0 {
                continue;
            }
            for j in 0..n - i {
                c[i + j] += self.c[i] * o.c[j];
            }
        }
        Jet { c }
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        &self + &o
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        &self - &o
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        &self * &o
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

/// A 6×6 matrix of jets.
#[derive(Clone, Debug)]
pub struct JetMat {
    pub e: Vec<Jet>,
}

impl JetMat {
    pub fn zero(order: usize) -> JetMat {
        JetMat { e: vec![Jet::zero(order); 36] }
    }

    pub fn constant(m: &crate::lie_core::Mat6, order: usize) -> JetMat {
        JetMat { e: (0..36).map(|k| Jet::constant(m[(k / 6, k % 6)], order)).collect() }
    }

    pub fn from_fn(f: impl Fn(usize, usize) -> Jet) -> JetMat {
        JetMat { e: (0..36).map(|k| f(k / 6, k % 6)).collect() }
    }

    /// Jet with matrix coefficients `coeffs[k]` of s^k.
    pub fn from_coeffs(coeffs: &[crate::lie_core::Mat6]) -> JetMat {
        JetMat::from_fn(|i, j| Jet { c: coeffs.iter().map(|m| m[(i, j)]).collect() })
    }

    pub fn get(&self, i: usize, j: usize) -> &Jet {
        &self.e[i * 6 + j]
    }

    pub fn truncate(&self, order: usize) -> JetMat {
        JetMat { e: self.e.iter().map(|x| x.truncate(order)).collect() }
    }

    /// Left multiplication by a constant matrix.
    pub fn left_mul_const(&self, a: &crate::lie_core::Mat6) -> JetMat {
        let order = self.order();
        JetMat::from_fn(|i, j| {
            let mut acc = Jet::zero(order);
            for k in 0..6 {
                if a[(i, k)] != 0.0 {
                    acc = &acc + &self.get(k, j).scale(a[(i, k)]);
                }
            }
            acc
        })
    }

    pub fn set(&mut self, i: usize, j: usize, x: Jet) {
        self.e[i * 6 + j] = x;
    }

    pub fn order(&self) -> usize {
        self.e.iter().map(|x| x.order()).min().unwrap_or(0)
    }

    pub fn value(&self) -> crate::lie_core::Mat6 {
        crate::lie_core::Mat6::from_fn(|i, j| self.get(i, j).value())
    }

    pub fn mul(&self, o: &JetMat) -> JetMat {
        let order = self.order().min(o.order());
        let mut out = JetMat::zero(order);
        for i in 0..6 {
            for j in 0..6 {
                let mut acc = Jet::zero(order);
                for k in 0..6 {
                    let a = self.get(i, k);
                    let b = o.get(k, j);
                    if a.max_abs() == 0.0 || b.max_abs() == 0.0 {
                        continue;
                    }
                    acc = &acc + &(a * b);
                }
                out.set(i, j, acc);
            }
        }
        out
    }

    pub fn add(&self, o: &JetMat) -> JetMat {
        JetMat { e: self.e.iter().zip(&o.e).map(|(a, b)| a + b).collect() }
    }

    pub fn sub(&self, o: &JetMat) -> JetMat {
        JetMat { e: self.e.iter().zip(&o.e).map(|(a, b)| a - b).collect() }
    }

    pub fn scale_jet(&self, s: &Jet) -> JetMat {
        JetMat { e: self.e.iter().map(|a| a * s).collect() }
    }

    pub fn deriv(&self) -> JetMat {
        JetMat { e: self.e.iter().map(|a| a.deriv()).collect() }
    }

    pub fn transpose(&self) -> JetMat {
        let mut e = self.e.clone();
        for i in 0..6 {
            for j in 0..6 {
                e[i * 6 + j] = self.e[j * 6 + i].clone();
            }
        }
        JetMat { e }
    }

    /// g·Xᵀ·g, the inverse when X is a group-valued jet.
    pub fn group_inverse(&self) -> JetMat {
        let mut e = Vec::with_capacity(36);
        for i in 0..6 {
            for j in 0..6 {
                let (a, b) = (crate::lie_core::dual(i), crate::lie_core::dual(j));
                let s = crate::lie_core::metric_sign(i) * crate::lie_core::metric_sign(j);
                e.push(self.get(b, a).scale(s));
            }
        }
        JetMat { e }
    }

    /// Column `j` as a 6-vector of jets.
    pub fn column(&self, j: usize) -> [Jet; 6] {
        std::array::from_fn(|i| self.get(i, j).clone())
    }

    pub fn from_columns(cols: &[[Jet; 6]; 6]) -> JetMat {
        let mut e = Vec::with_capacity(36);
        for i in 0..6 {
            for c in cols.iter() {
                e.push(c[i].clone());
            }
        }
        JetMat { e }
    }
}

/// ⟨V,W⟩ for jet-valued vectors.
pub fn jet_inner(v: &[Jet; 6], w: &[Jet; 6]) -> Jet {
    let t = |a: &Jet, b: &Jet| a * b;
    let s = &(&t(&v[2], &w[2]) + &t(&v[3], &w[3]))
        - &(&(&t(&v[0], &w[5]) + &t(&v[5], &w[0])) + &(&t(&v[1], &w[4]) + &t(&v[4], &w[1])));
    s
}

pub fn jvec_lin(a: &[Jet; 6], sa: &Jet, b: &[Jet; 6], sb: &Jet) -> [Jet; 6] {
    std::array::from_fn(|i| &(&a[i] * sa) + &(&b[i] * sb))
}

pub fn jvec_scale(a: &[Jet; 6], s: &Jet) -> [Jet; 6] {
    std::array::from_fn(|i| &a[i] * s)
}

pub fn jvec_add(a: &[Jet; 6], b: &[Jet; 6]) -> [Jet; 6] {
    std::array::from_fn(|i| &a[i] + &b[i])
}

pub fn jvec_deriv(a: &[Jet; 6]) -> [Jet; 6] {
    std::array::from_fn(|i| a[i].deriv())
}

pub fn jvec_value(a: &[Jet; 6]) -> crate::lie_core::MinkVector {
    crate::lie_core::MinkVector(std::array::from_fn(|i| a[i].value()))
}

/// Bivariate series `Σ c_{ij} u^i v^j` with `i + j ≤ order`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Series2 {
    pub order: usize,
    pub c: Vec<f64>,
}

/// Position of `u^i v^j` in the coefficient vector (graded by total degree).
#[inline]
pub fn idx2(i: usize, j: usize) -> usize {
    let d = i + j;
    d * (d + 1) / 2 + j
}

pub fn len2(order: usize) -> usize {
    (order + 1) * (order + 2) / 2
}

impl Series2 {
    pub fn zero(order: usize) -> Series2 {
        Series2 { order, c: vec![0.0; len2(order)] }
    }

    pub fn constant(x: f64, order: usize) -> Series2 {
        let mut s = Series2::zero(order);
        s.c[0] = x;
        s
    }

    pub fn u(order: usize) -> Series2 {
        let mut s = Series2::zero(order);
        if order >= 1 {
            s.c[idx2(1, 0)] = 1.0;
        }
        s
    }

    pub fn v(order: usize) -> Series2 {
        let mut s = Series2::zero(order);
        if order >= 1 {
            s.c[idx2(0, 1)] = 1.0;
        }
        s
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i + j > self.order {
            0.0
        } else {
            self.c[idx2(i, j)]
        }
    }

    pub fn set(&mut self, i: usize, j: usize, x: f64) {
        self.c[idx2(i, j)] = x;
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    pub fn with_order(&self, order: usize) -> Series2 {
        let mut s = Series2::zero(order);
        for d in 0..=order.min(self.order) {
            for j in 0..=d {
                s.c[idx2(d - j, j)] = self.c[idx2(d - j, j)];
            }
        }
        s
    }

    pub fn scale(&self, s: f64) -> Series2 {
        Series2 { order: self.order, c: self.c.iter().map(|x| x * s).collect() }
    }

    pub fn du(&self) -> Series2 {
        let mut s = Series2::zero(self.order.saturating_sub(1));
        if self.order == 0 {
            return s;
        }
        for d in 1..=self.order {
            for j in 0..d {
                let i = d - j;
                s.c[idx2(i - 1, j)] = i as f64 * self.c[idx2(i, j)];
            }
        }
        s
    }

    pub fn dv(&self) -> Series2 {
        let mut s = Series2::zero(self.order.saturating_sub(1));
        if self.order == 0 {
            return s;
        }
        for d in 1..=self.order {
            for j in 1..=d {
                let i = d - j;
                s.c[idx2(i, j - 1)] = j as f64 * self.c[idx2(i, j)];
            }
        }
        s
    }

    pub fn eval(&self, u: f64, v: f64) -> f64 {
        // Horner in total degree
        let mut acc = 0.0;
        for d in (0..=self.order).rev() {
            let mut h = 0.0;
            let mut vp = 1.0;
            let mut up = u.powi(d as i32);
            let uinv = if u != 0.0 { 1.0 / u } else { 0.0 };
            for j in 0..=d {
                let term = if u != 0.0 { up * vp } else if j == d { vp } else { 0.0 };
                h += self.c[idx2(d - j, j)] * term;
                vp *= v;
                up *= uinv;
            }
            acc += h;
        }
        acc
    }

    /// Value of the homogeneous part of degree `d` at (u, v).
    pub fn eval_degree(&self, d: usize, u: f64, v: f64) -> f64 {
        if d > self.order {
            return 0.0;
        }
        (0..=d).map(|j| self.c[idx2(d - j, j)] * u.powi((d - j) as i32) * v.powi(j as i32)).sum()
    }

    /// Restriction to the anti-diagonal u = t, v = −t.
    pub fn restrict_antidiagonal(&self) -> Jet {
        let mut c = vec![0.0; self.order + 1];
        for (d, cd) in c.iter_mut().enumerate() {
            for j in 0..=d {
                let s = if j % 2 == 0 { 1.0 } else { -1.0 };
                *cd += s * self.c[idx2(d - j, j)];
            }
        }
        Jet { c }
    }

    /// Max |coefficient| over total degrees `0..=d`.
    pub fn max_abs_through(&self, d: usize) -> f64 {
        let n = len2(d.min(self.order));
        self.c[..n].iter().fold(0.0, |a, &x| a.max(x.abs()))
    }

    /// Re-expansion about (u0, v0), keeping total degree ≤ order.
    pub fn shift(&self, u0: f64, v0: f64) -> Series2 {
        let n = self.order;
        let mut out = Series2::zero(n);
        let binom = |n: usize, k: usize| -> f64 {
            let mut b = 1.0;
            for i in 0..k {
                b = b * (n - i) as f64 / (i + 1) as f64;
            }
            b
        };
        for d in 0..=n {
            for j in 0..=d {
                let i = d - j;
                let cij = self.c[idx2(i, j)];
                if cij == 0.0 {
                    continue;
                }
                for a in 0..=i {
                    for b in 0..=j {
                        let w = binom(i, a) * binom(j, b) * u0.powi((i - a) as i32) * v0.powi((j - b) as i32);
                        out.c[idx2(a, b)] += cij * w;
                    }
                }
            }
        }
        out
    }
}

impl Add for &Series2 {
    type Output = Series2;
    fn add(self, o: &Series2) -> Series2 {
        let order = self.order.min(o.order);
        let n = len2(order);
        Series2 { order, c: (0..n).map(|k| self.c[k] + o.c[k]).collect() }
    }
}

impl Sub for &Series2 {
    type Output = Series2;
    fn sub(self, o: &Series2) -> Series2 {
        let order = self.order.min(o.order);
        let n = len2(order);
        Series2 { order, c: (0..n).map(|k| self.c[k] - o.c[k]).collect() }
    }
}

impl Mul for &Series2 {
    type Output = Series2;
    fn mul(self, o: &Series2) -> Series2 {
        let order = self.order.min(o.order);
        let mut out = Series2::zero(order);
        for d1 in 0..=order {
            for j1 in 0..=d1 {
                let a = self.c[idx2(d1 - j1, j1)];
                if a == 0.0 {
                    continue;
                }
                for d2 in 0..=(order - d1) {
                    for j2 in 0..=d2 {
                        let b = o.c[idx2(d2 - j2, j2)];
                        if b != 0.0 {
                            out.c[idx2(d1 - j1 + d2 - j2, j1 + j2)] += a * b;
                        }
                    }
                }
            }
        }
        out
    }
}

impl Neg for &Series2 {
    type Output = Series2;
    fn neg(self) -> Series2 {
        self.scale(-1.0)
    }
}

impl Add for Series2 {
    type Output = Series2;
    fn add(self, o: Series2) -> Series2 {
        &self + &o
    }
}

impl Sub for Series2 {
    type Output = Series2;
    fn sub(self, o: Series2) -> Series2 {
        &self - &o
    }
}

impl Mul for Series2 {
    type Output = Series2;
    fn mul(self, o: Series2) -> Series2 {
        &self * &o
    }
}

impl Neg for Series2 {
    type Output = Series2;
    fn neg(self) -> Series2 {
        self.scale(-1.0)
    }
}

/// Minimal commutative-ring interface shared by `f64` and the series types,
/// used where one formula is evaluated on numbers and on series alike.
pub trait Ring: Clone {
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn scale(&self, s: f64) -> Self;
    /// The constant `x` in the same shape as `self`.
    fn lift(&self, x: f64) -> Self;
}

impl Ring for f64 {
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn scale(&self, s: f64) -> Self {
        self * s
    }
    fn lift(&self, x: f64) -> Self {
        x
    }
}

impl Ring for Series2 {
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn scale(&self, s: f64) -> Self {
        Series2::scale(self, s)
    }
    fn lift(&self, x: f64) -> Self {
        Series2::constant(x, self.order)
    }
}

impl Ring for Jet {
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn scale(&self, s: f64) -> Self {
        Jet::scale(self, s)
    }
    fn lift(&self, x: f64) -> Self {
        Jet::constant(x, self.order())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jet_arithmetic_matches_closed_forms() {
        // f(t) = 1/(1 - t) at 0 has all coefficients 1
        let t = Jet::variable(0.0, 6);
        let one_minus = (-&t).add_const(1.0);
        let r = one_minus.recip();
        assert!(r.c.iter().all(|&x| (x - 1.0).abs() < 1e-14));
        // sqrt(1 + t)^2 = 1 + t
        let s = t.add_const(1.0).sqrt();
        let sq = &s * &s;
        assert!((sq.c[0] - 1.0).abs() < 1e-15 && (sq.c[1] - 1.0).abs() < 1e-15);
        assert!(sq.c[2..].iter().all(|x| x.abs() < 1e-15));
        let cb = t.add_const(8.0).cbrt();
        let cube = &(&cb * &cb) * &cb;
        assert!((cube.c[0] - 8.0).abs() < 1e-13 && (cube.c[1] - 1.0).abs() < 1e-13);
        assert!(cube.c[2..].iter().all(|x| x.abs() < 1e-13));
    }

    #[test]
    fn polynomial_shift() {
        let p = [1.0, -2.0, 0.5, 3.0];
        let j = Jet::from_polynomial(&p, 0.7, 5);
        let direct = |t: f64| p.iter().rev().fold(0.0, |a, &c| a * t + c);
        for s in [-0.2, 0.1, 0.3] {
            assert!((j.eval(s) - direct(0.7 + s)).abs() < 1e-13);
        }
        assert!((j.derivative_value(3) - 18.0).abs() < 1e-12);
    }

    #[test]
    fn series2_product_and_derivatives() {
        let u = Series2::u(5);
        let v = Series2::v(5);
        let f = &(&u * &v) + &(&u * &u);
        assert_eq!(f.get(1, 1), 1.0);
        assert_eq!(f.get(2, 0), 1.0);
        assert_eq!(f.du().get(0, 1), 1.0);
        assert_eq!(f.du().get(1, 0), 2.0);
        assert_eq!(f.dv().get(1, 0), 1.0);
        assert!((f.eval(0.3, -0.2) - (0.3 * -0.2 + 0.09)).abs() < 1e-15);
        let r = f.restrict_antidiagonal();
        assert!(r.c.iter().all(|x| x.abs() < 1e-15));
        let g = f.shift(0.5, 0.25);
        assert!((g.eval(0.1, 0.2) - f.eval(0.6, 0.45)).abs() < 1e-14);
    }
}
