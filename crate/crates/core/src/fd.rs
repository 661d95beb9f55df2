//! Finite-difference operators on uniform grids.
//!
//! Interior rows use centered stencils. Boundary rows use wider one-sided
//! stencils whose leading error term matches the interior one, so that
//! nested differences (derivatives of derived quantities) keep the interior
//! convergence order up to the edge.

use crate::lie_core::{Mat6, MinkVector};

/// Fornberg weights for the `m`-th derivative at `x0` on nodes `xs`.
pub fn fornberg(x0: f64, xs: &[f64], m: usize) -> Vec<f64> {
    let n = xs.len();
    let mut c = vec![vec![0.0; m + 1]; n];
    let mut c1 = 1.0;
    let mut c4 = xs[0] - x0;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] *= c4 / c3;
        }
        c1 = c2;
    }
    c.iter().map(|r| r[m]).collect()
}

/// Sparse differentiation matrix for the `m`-th derivative (m = 1 or 2) on
/// `n` uniform nodes with spacing `h`, interior accuracy `acc` (2, 4 or 6).
#[derive(Clone, Debug)]
pub struct Stencil {
    pub n: usize,
    pub rows: Vec<(usize, Vec<f64>)>,
}

impl Stencil {
    pub fn new(n: usize, h: f64, m: usize, acc: usize) -> Stencil {
        assert!(m == 1 || m == 2);
        assert!(matches!(acc, 2 | 4 | 6));
        let half = acc / 2;
        let width = acc + 6 + m - 1;
        assert!(n >= width.max(2 * half + 1), "grid too small for stencil");
        let hm = h.powi(m as i32);
        // interior weights with their leading error coefficient
        let ctr: Vec<f64> = (0..=2 * half).map(|k| k as f64 - half as f64).collect();
        let wi = fornberg(0.0, &ctr, m);
        let lead = leading_error(&ctr, &wi, m, acc);
        let mut rows = Vec::with_capacity(n);
        for i in 0..n {
            if i >= half && i + half < n {
                let w: Vec<f64> = wi.iter().map(|x| x / hm).collect();
                rows.push((i - half, w));
            } else {
                let lo = if i < n / 2 { 0 } else { n - width };
                let xs: Vec<f64> = (lo..lo + width).map(|k| k as f64).collect();
                let wm = fornberg(i as f64, &xs, m);
                let wc = fornberg(i as f64, &xs, m + acc);
                let w: Vec<f64> = wm.iter().zip(&wc).map(|(a, b)| (a + lead * b) / hm).collect();
                rows.push((lo, w));
            }
        }
        Stencil { n, rows }
    }

    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        self.rows.iter().map(|(lo, w)| w.iter().enumerate().map(|(k, x)| x * f[lo + k]).sum()).collect()
    }

    /// Applies the stencil to a generic linear field given `get(k)` and a
    /// zero and axpy.
    pub fn apply_with<T: Clone>(&self, get: impl Fn(usize) -> T, zero: T, axpy: impl Fn(&mut T, f64, &T)) -> Vec<T> {
        self.rows
            .iter()
            .map(|(lo, w)| {
                let mut acc = zero.clone();
                for (k, x) in w.iter().enumerate() {
                    axpy(&mut acc, *x, &get(lo + k));
                }
                acc
            })
            .collect()
    }
}

/// Coefficient c with `D_h f = f^(m) + c h^acc f^(m+acc) + …` for a centered
/// stencil on integer offsets.
fn leading_error(xs: &[f64], w: &[f64], m: usize, acc: usize) -> f64 {
    let p = m + acc;
    let mut fact = 1.0;
    for i in 2..=p {
        fact *= i as f64;
    }
    let s: f64 = xs.iter().zip(w).map(|(x, wk)| wk * x.powi(p as i32)).sum();
    s / fact
}

/// A scalar field on an `nu × nv` grid stored row-major in u.
pub fn idx(i: usize, j: usize, nv: usize) -> usize {
    i * nv + j
}

/// Differences along the first (u) axis of a grid field.
pub fn diff_u<T: Clone + Send + Sync>(
    st: &Stencil,
    f: &[T],
    nu: usize,
    nv: usize,
    zero: T,
    axpy: impl Fn(&mut T, f64, &T) + Copy,
) -> Vec<T> {
    assert_eq!(st.n, nu);
    let mut out = vec![zero.clone(); nu * nv];
    for j in 0..nv {
        let col = st.apply_with(|k| f[idx(k, j, nv)].clone(), zero.clone(), axpy);
        for (i, x) in col.into_iter().enumerate() {
            out[idx(i, j, nv)] = x;
        }
    }
    out
}

/// Differences along the second (v) axis of a grid field.
pub fn diff_v<T: Clone + Send + Sync>(
    st: &Stencil,
    f: &[T],
    nu: usize,
    nv: usize,
    zero: T,
    axpy: impl Fn(&mut T, f64, &T) + Copy,
) -> Vec<T> {
    assert_eq!(st.n, nv);
    let mut out = Vec::with_capacity(nu * nv);
    for i in 0..nu {
        out.extend(st.apply_with(|k| f[idx(i, k, nv)].clone(), zero.clone(), axpy));
    }
    out
}

pub fn axpy_f64(a: &mut f64, x: f64, b: &f64) {
    *a += x * b;
}

pub fn axpy_vec(a: &mut MinkVector, x: f64, b: &MinkVector) {
    for k in 0..6 {
        a.0[k] += x * b.0[k];
    }
}

pub fn axpy_mat(a: &mut Mat6, x: f64, b: &Mat6) {
    *a += b * x;
}

pub fn du_f64(st: &Stencil, f: &[f64], nu: usize, nv: usize) -> Vec<f64> {
    diff_u(st, f, nu, nv, 0.0, axpy_f64)
}

pub fn dv_f64(st: &Stencil, f: &[f64], nu: usize, nv: usize) -> Vec<f64> {
    diff_v(st, f, nu, nv, 0.0, axpy_f64)
}

pub fn du_vec(st: &Stencil, f: &[MinkVector], nu: usize, nv: usize) -> Vec<MinkVector> {
    diff_u(st, f, nu, nv, MinkVector([0.0; 6]), axpy_vec)
}

pub fn dv_vec(st: &Stencil, f: &[MinkVector], nu: usize, nv: usize) -> Vec<MinkVector> {
    diff_v(st, f, nu, nv, MinkVector([0.0; 6]), axpy_vec)
}

pub fn du_mat(st: &Stencil, f: &[Mat6], nu: usize, nv: usize) -> Vec<Mat6> {
    diff_u(st, f, nu, nv, Mat6::zeros(), axpy_mat)
}

pub fn dv_mat(st: &Stencil, f: &[Mat6], nu: usize, nv: usize) -> Vec<Mat6> {
    diff_v(st, f, nu, nv, Mat6::zeros(), axpy_mat)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fornberg_central_weights() {
        let w = fornberg(0.0, &[-1.0, 0.0, 1.0], 1);
        assert!((w[0] + 0.5).abs() < 1e-15 && w[1].abs() < 1e-15 && (w[2] - 0.5).abs() < 1e-15);
        let w = fornberg(0.0, &[-1.0, 0.0, 1.0], 2);
        assert!((w[0] - 1.0).abs() < 1e-15 && (w[1] + 2.0).abs() < 1e-15);
    }

    fn max_err(n: usize, m: usize, acc: usize) -> f64 {
        let h = 1.0 / (n - 1) as f64;
        let xs: Vec<f64> = (0..n).map(|k| k as f64 * h).collect();
        let f: Vec<f64> = xs.iter().map(|x| (2.0 * x).sin()).collect();
        let exact: Vec<f64> =
            xs.iter().map(|x| if m == 1 { 2.0 * (2.0 * x).cos() } else { -4.0 * (2.0 * x).sin() }).collect();
        let d = Stencil::new(n, h, m, acc).apply(&f);
        d.iter().zip(&exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn convergence_orders() {
        for m in [1, 2] {
            for acc in [2, 4, 6] {
                // wide one-sided second-derivative rows reach round-off early
                let (n1, n2) = if acc == 6 { (16, 24) } else { (21, 41) };
                let e1 = max_err(n1, m, acc);
                let e2 = max_err(n2, m, acc);
                let rate = (e1 / e2).ln() / ((n2 - 1) as f64 / (n1 - 1) as f64).ln();
                assert!(rate > acc as f64 - 0.6, "m={m} acc={acc} rate={rate}");
            }
        }
    }

    #[test]
    fn nested_first_derivative_keeps_order() {
        let run = |n: usize| {
            let h = 1.0 / (n - 1) as f64;
            let xs: Vec<f64> = (0..n).map(|k| k as f64 * h).collect();
            let f: Vec<f64> = xs.iter().map(|x| x.exp()).collect();
            let st = Stencil::new(n, h, 1, 2);
            let dd = st.apply(&st.apply(&f));
            dd.iter().zip(&f).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
        };
        let rate = (run(21) / run(41)).log2();
        assert!(rate > 1.6, "rate={rate}");
    }
}
