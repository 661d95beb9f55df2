//! Moving-frame reduction of Legendre surfaces given on curvature-line grids,
//! the Blaschke coframe, the invariant functions q₁,q₂,p₁,p₂,r₁,r₂ and the
//! residual reports built on them.
//!
//! Grids are stored row-major with u along the first index: node (i, j) sits
//! at position `i * nv + j`.

use crate::error::{Error, Result};
use crate::fd::{self, Stencil};
use crate::lie_core::{
    dupin_metric_eval, g0_element, group_inverse, inner, lift_point, lift_plane, DupinElement, LieGroupElement,
    Mat6, MinkVector, DEFAULT_TOL,
};
use nalgebra::{Matrix2, SMatrix, SVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

type V3 = [f64; 3];

fn dot3(a: &V3, b: &V3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// A uniform rectangular parameter grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub nu: usize,
    pub nv: usize,
    pub u0: f64,
    pub u1: f64,
    pub v0: f64,
    pub v1: f64,
}

impl GridSpec {
    pub fn new(nu: usize, nv: usize, window: [f64; 4]) -> GridSpec {
        GridSpec { nu, nv, u0: window[0], u1: window[1], v0: window[2], v1: window[3] }
    }

    pub fn len(&self) -> usize {
        self.nu * self.nv
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn hu(&self) -> f64 {
        (self.u1 - self.u0) / (self.nu - 1) as f64
    }

    pub fn hv(&self) -> f64 {
        (self.v1 - self.v0) / (self.nv - 1) as f64
    }

    pub fn u(&self, i: usize) -> f64 {
        self.u0 + i as f64 * self.hu()
    }

    pub fn v(&self, j: usize) -> f64 {
        self.v0 + j as f64 * self.hv()
    }

    pub fn idx(&self, i: usize, j: usize) -> usize {
        i * self.nv + j
    }

    pub fn node(&self, k: usize) -> (usize, usize) {
        (k / self.nv, k % self.nv)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nu < 3 || self.nv < 3 {
            return Err(Error::InvalidGrid(format!("grid {}x{} is smaller than 3x3", self.nu, self.nv)));
        }
        if !(self.u1 > self.u0 && self.v1 > self.v0) || ![self.u0, self.u1, self.v0, self.v1].iter().all(|x| x.is_finite())
        {
            return Err(Error::InvalidGrid("window must satisfy u0 < u1 and v0 < v1".into()));
        }
        Ok(())
    }

    /// Smallest grid side that supports difference stencils of accuracy `acc`.
    pub fn min_side(acc: usize) -> usize {
        acc + 7
    }

    fn check_side(&self, acc: usize) -> Result<()> {
        self.validate()?;
        if !matches!(acc, 2 | 4 | 6) {
            return Err(Error::InvalidInput(format!("difference order must be 2, 4 or 6 (got {acc})")));
        }
        let m = GridSpec::min_side(acc);
        if self.nu < m || self.nv < m {
            return Err(Error::InvalidGrid(format!(
                "grid {}x{} too small for difference order {acc} (need at least {m} per side)",
                self.nu, self.nv
            )));
        }
        Ok(())
    }
}

/// First and second difference operators along both axes.
#[derive(Clone, Debug)]
pub struct Diff {
    pub grid: GridSpec,
    pub du1: Stencil,
    pub dv1: Stencil,
    pub du2: Stencil,
    pub dv2: Stencil,
}

impl Diff {
    pub fn new(grid: &GridSpec, acc: usize) -> Result<Diff> {
        grid.check_side(acc)?;
        Ok(Diff {
            grid: *grid,
            du1: Stencil::new(grid.nu, grid.hu(), 1, acc),
            dv1: Stencil::new(grid.nv, grid.hv(), 1, acc),
            du2: Stencil::new(grid.nu, grid.hu(), 2, acc),
            dv2: Stencil::new(grid.nv, grid.hv(), 2, acc),
        })
    }

    pub fn u(&self, f: &[f64]) -> Vec<f64> {
        fd::du_f64(&self.du1, f, self.grid.nu, self.grid.nv)
    }

    pub fn v(&self, f: &[f64]) -> Vec<f64> {
        fd::dv_f64(&self.dv1, f, self.grid.nu, self.grid.nv)
    }

    pub fn u_vec(&self, f: &[MinkVector]) -> Vec<MinkVector> {
        fd::du_vec(&self.du1, f, self.grid.nu, self.grid.nv)
    }

    pub fn v_vec(&self, f: &[MinkVector]) -> Vec<MinkVector> {
        fd::dv_vec(&self.dv1, f, self.grid.nu, self.grid.nv)
    }

    pub fn uu_vec(&self, f: &[MinkVector]) -> Vec<MinkVector> {
        fd::du_vec(&self.du2, f, self.grid.nu, self.grid.nv)
    }

    pub fn vv_vec(&self, f: &[MinkVector]) -> Vec<MinkVector> {
        fd::dv_vec(&self.dv2, f, self.grid.nu, self.grid.nv)
    }

    pub fn u_mat(&self, f: &[Mat6]) -> Vec<Mat6> {
        fd::du_mat(&self.du1, f, self.grid.nu, self.grid.nv)
    }

    pub fn v_mat(&self, f: &[Mat6]) -> Vec<Mat6> {
        fd::dv_mat(&self.dv1, f, self.grid.nu, self.grid.nv)
    }

    fn u_v3(&self, f: &[V3]) -> Vec<V3> {
        fd::diff_u(&self.du1, f, self.grid.nu, self.grid.nv, [0.0; 3], axpy3)
    }

    fn v_v3(&self, f: &[V3]) -> Vec<V3> {
        fd::diff_v(&self.dv1, f, self.grid.nu, self.grid.nv, [0.0; 3], axpy3)
    }
}

fn axpy3(a: &mut V3, x: f64, b: &V3) {
    for k in 0..3 {
        a[k] += x * b[k];
    }
}

/// Exact partial derivatives of the position map.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EuclideanPartials {
    pub fu: Vec<V3>,
    pub fv: Vec<V3>,
    pub fuu: Vec<V3>,
    pub fuv: Vec<V3>,
    pub fvv: Vec<V3>,
}

/// A surface in R³ sampled on a grid, with unit normals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EuclideanSurfaceGrid {
    pub grid: GridSpec,
    pub f: Vec<V3>,
    pub n: Vec<V3>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub partials: Option<EuclideanPartials>,
}

impl EuclideanSurfaceGrid {
    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        let len = self.grid.len();
        if self.f.len() != len || self.n.len() != len {
            return Err(Error::InvalidGrid(format!("expected {len} nodes, got f:{} n:{}", self.f.len(), self.n.len())));
        }
        if let Some(p) = &self.partials {
            for (name, v) in [("fu", &p.fu), ("fv", &p.fv), ("fuu", &p.fuu), ("fuv", &p.fuv), ("fvv", &p.fvv)] {
                if v.len() != len {
                    return Err(Error::InvalidGrid(format!("partial {name} has {} nodes, expected {len}", v.len())));
                }
            }
        }
        for (k, (f, n)) in self.f.iter().zip(&self.n).enumerate() {
            if !f.iter().chain(n.iter()).all(|x| x.is_finite()) {
                let (i, j) = self.grid.node(k);
                return Err(Error::InvalidGrid(format!("non-finite value at node ({i}, {j})")));
            }
            let nn = dot3(n, n).sqrt();
            if (nn - 1.0).abs() > 1e-9 {
                return Err(Error::NonUnitNormal(nn));
            }
        }
        Ok(())
    }

    /// The surface scaled by λ about the origin.
    pub fn scaled(&self, lambda: f64) -> EuclideanSurfaceGrid {
        let s = |v: &Vec<V3>| v.iter().map(|x| x.map(|c| c * lambda)).collect::<Vec<_>>();
        EuclideanSurfaceGrid {
            grid: self.grid,
            f: s(&self.f),
            n: self.n.clone(),
            partials: self.partials.as_ref().map(|p| EuclideanPartials {
                fu: s(&p.fu),
                fv: s(&p.fv),
                fuu: s(&p.fuu),
                fuv: s(&p.fuv),
                fvv: s(&p.fvv),
            }),
        }
    }
}

/// First and second fundamental forms and the derivatives of the normal.
#[derive(Clone, Debug)]
pub struct FundamentalForms {
    pub fu: Vec<V3>,
    pub fv: Vec<V3>,
    pub nu: Vec<V3>,
    pub nv: Vec<V3>,
    pub e: Vec<f64>,
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    pub l: Vec<f64>,
    pub m: Vec<f64>,
    pub n: Vec<f64>,
}

impl FundamentalForms {
    /// Uses exact partials when present (normal derivatives from the
    /// Weingarten equations), differences of order `acc` otherwise.
    pub fn compute(s: &EuclideanSurfaceGrid, acc: usize) -> Result<FundamentalForms> {
        let len = s.grid.len();
        let mut out = FundamentalForms {
            fu: vec![],
            fv: vec![],
            nu: vec![],
            nv: vec![],
            e: vec![0.0; len],
            f: vec![0.0; len],
            g: vec![0.0; len],
            l: vec![0.0; len],
            m: vec![0.0; len],
            n: vec![0.0; len],
        };
        match &s.partials {
            Some(p) => {
                out.fu = p.fu.clone();
                out.fv = p.fv.clone();
                out.nu = vec![[0.0; 3]; len];
                out.nv = vec![[0.0; 3]; len];
                for k in 0..len {
                    let (fu, fv, n) = (&p.fu[k], &p.fv[k], &s.n[k]);
                    let (e, f, g) = (dot3(fu, fu), dot3(fu, fv), dot3(fv, fv));
                    let (l, m, nn) = (dot3(&p.fuu[k], n), dot3(&p.fuv[k], n), dot3(&p.fvv[k], n));
                    let det = e * g - f * f;
                    let wu = [(l * g - m * f) / det, (m * e - l * f) / det];
                    let wv = [(m * g - nn * f) / det, (nn * e - m * f) / det];
                    out.nu[k] = std::array::from_fn(|c| -wu[0] * fu[c] - wu[1] * fv[c]);
                    out.nv[k] = std::array::from_fn(|c| -wv[0] * fu[c] - wv[1] * fv[c]);
                    (out.e[k], out.f[k], out.g[k], out.l[k], out.m[k], out.n[k]) = (e, f, g, l, m, nn);
                }
            }
            None => {
                let d = Diff::new(&s.grid, acc)?;
                out.fu = d.u_v3(&s.f);
                out.fv = d.v_v3(&s.f);
                out.nu = d.u_v3(&s.n);
                out.nv = d.v_v3(&s.n);
                for k in 0..len {
                    let (fu, fv, nu, nv) = (&out.fu[k], &out.fv[k], &out.nu[k], &out.nv[k]);
                    out.e[k] = dot3(fu, fu);
                    out.f[k] = dot3(fu, fv);
                    out.g[k] = dot3(fv, fv);
                    out.l[k] = -dot3(nu, fu);
                    out.m[k] = -0.5 * (dot3(nu, fv) + dot3(nv, fu));
                    out.n[k] = -dot3(nv, fv);
                }
            }
        }
        Ok(out)
    }

    /// Principal curvatures along the coordinate directions, k₁ = L/E, k₂ = N/G.
    pub fn principal(&self) -> (Vec<f64>, Vec<f64>) {
        let k1 = self.l.iter().zip(&self.e).map(|(l, e)| l / e).collect();
        let k2 = self.n.iter().zip(&self.g).map(|(n, g)| n / g).collect();
        (k1, k2)
    }

    /// Largest relative off-diagonal entry of the first and second
    /// fundamental forms, with its node.
    pub fn off_diagonal(&self) -> (usize, f64) {
        let mut worst = (0, 0.0);
        for k in 0..self.e.len() {
            let s = (self.e[k] * self.g[k]).sqrt();
            let kscale = (self.l[k] / self.e[k]).abs().max((self.n[k] / self.g[k]).abs()).max(1e-300);
            let rel = (self.f[k].abs() / s).max(self.m[k].abs() / s / kscale);
            if rel > worst.1 {
                worst = (k, rel);
            }
        }
        worst
    }
}

/// Options for [`lift_euclidean`].
#[derive(Clone, Copy, Debug)]
pub struct LiftOptions {
    /// Relative bound on the off-diagonal fundamental-form entries.
    pub curvature_line_tol: f64,
    /// Difference order used when no exact partials are supplied.
    pub fd_order: usize,
}

impl Default for LiftOptions {
    fn default() -> Self {
        LiftOptions { curvature_line_tol: 5e-3, fd_order: 2 }
    }
}

/// Exact partial derivatives of the lifted maps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LegendrePartials {
    pub phi0_u: Vec<MinkVector>,
    pub phi0_v: Vec<MinkVector>,
    pub phi1_u: Vec<MinkVector>,
    pub phi1_v: Vec<MinkVector>,
}

/// A Legendre surface [φ₀ ∧ φ₁] sampled on a grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LegendreSurfaceGrid {
    pub grid: GridSpec,
    pub phi0: Vec<MinkVector>,
    pub phi1: Vec<MinkVector>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub partials: Option<LegendrePartials>,
}

impl LegendreSurfaceGrid {
    /// Validates the pointwise isotropy conditions at relative tolerance `tol`.
    pub fn new(grid: GridSpec, phi0: Vec<MinkVector>, phi1: Vec<MinkVector>, tol: f64) -> Result<Self> {
        let s = LegendreSurfaceGrid { grid, phi0, phi1, partials: None };
        s.validate(tol)?;
        Ok(s)
    }

    pub fn validate(&self, tol: f64) -> Result<()> {
        self.grid.validate()?;
        let len = self.grid.len();
        if self.phi0.len() != len || self.phi1.len() != len {
            return Err(Error::InvalidGrid(format!(
                "expected {len} nodes, got phi0:{} phi1:{}",
                self.phi0.len(),
                self.phi1.len()
            )));
        }
        for k in 0..len {
            let (a, b) = (&self.phi0[k], &self.phi1[k]);
            let (i, j) = self.grid.node(k);
            if !a.is_finite() || !b.is_finite() {
                return Err(Error::InvalidGrid(format!("non-finite value at node ({i}, {j})")));
            }
            let (na, nb) = (a.norm(), b.norm());
            let worst = (inner(a, a).abs() / (na * na))
                .max(inner(b, b).abs() / (nb * nb))
                .max(inner(a, b).abs() / (na * nb));
            if !(worst <= tol) {
                return Err(Error::InvalidContactElement(format!(
                    "node ({i}, {j}): isotropy defect {worst:e} exceeds {tol:e}"
                )));
            }
        }
        Ok(())
    }

    /// The grid transformed by a group element.
    pub fn transform(&self, a: &LieGroupElement) -> LegendreSurfaceGrid {
        let m = a.matrix;
        let act = |v: &Vec<MinkVector>| v.iter().map(|x| MinkVector::from_vector(&(m * x.to_vector()))).collect();
        LegendreSurfaceGrid {
            grid: self.grid,
            phi0: act(&self.phi0),
            phi1: act(&self.phi1),
            partials: self.partials.as_ref().map(|p| LegendrePartials {
                phi0_u: act(&p.phi0_u),
                phi0_v: act(&p.phi0_v),
                phi1_u: act(&p.phi1_u),
                phi1_v: act(&p.phi1_v),
            }),
        }
    }

    /// Discrete Legendre condition: max over nodes and directions of
    /// |⟨dφ₀, φ₁⟩| and |⟨φ₀, dφ₁⟩|, relative to the representative norms.
    pub fn legendre_residual(&self, acc: usize) -> Result<f64> {
        let d = Diff::new(&self.grid, acc)?;
        let mut worst: f64 = 0.0;
        for (dphi, other) in [
            (d.u_vec(&self.phi0), &self.phi1),
            (d.v_vec(&self.phi0), &self.phi1),
            (d.u_vec(&self.phi1), &self.phi0),
            (d.v_vec(&self.phi1), &self.phi0),
        ] {
            for k in 0..dphi.len() {
                worst = worst.max(inner(&dphi[k], &other[k]).abs() / (self.phi0[k].norm() * self.phi1[k].norm()));
            }
        }
        Ok(worst)
    }

    fn first_derivatives(&self, d: &Diff) -> [Vec<MinkVector>; 4] {
        match &self.partials {
            Some(p) => [p.phi0_u.clone(), p.phi0_v.clone(), p.phi1_u.clone(), p.phi1_v.clone()],
            None => [d.u_vec(&self.phi0), d.v_vec(&self.phi0), d.u_vec(&self.phi1), d.v_vec(&self.phi1)],
        }
    }
}

fn dlift_point(f: &V3, df: &V3) -> MinkVector {
    let s2 = std::f64::consts::SQRT_2;
    MinkVector([0.0, df[0] / s2, df[1], df[2], -df[0] / s2, dot3(f, df)])
}

fn dlift_plane(f: &V3, n: &V3, df: &V3, dn: &V3) -> MinkVector {
    let s2 = std::f64::consts::SQRT_2;
    MinkVector([0.0, dn[0] / 2.0, dn[1] / s2, dn[2] / s2, -dn[0] / 2.0, (dot3(dn, f) + dot3(n, df)) / s2])
}

/// The contact lift φ₀ = F₀(f), φ₁ = F₁(f, n) of a Euclidean surface.
pub fn lift_euclidean(g: &EuclideanSurfaceGrid, opts: &LiftOptions) -> Result<LegendreSurfaceGrid> {
    g.validate()?;
    let ff = FundamentalForms::compute(g, opts.fd_order)?;
    let (k, rel) = ff.off_diagonal();
    if rel > opts.curvature_line_tol {
        let (i, j) = g.grid.node(k);
        return Err(Error::NotCurvatureLineCoordinates(i, j, rel));
    }
    let phi0: Vec<MinkVector> = g.f.iter().map(lift_point).collect();
    let phi1: Vec<MinkVector> = g.f.iter().zip(&g.n).map(|(f, n)| lift_plane(f, n)).collect();
    let partials = g.partials.as_ref().map(|_| {
        let len = g.grid.len();
        let mut p = LegendrePartials {
            phi0_u: Vec::with_capacity(len),
            phi0_v: Vec::with_capacity(len),
            phi1_u: Vec::with_capacity(len),
            phi1_v: Vec::with_capacity(len),
        };
        for k in 0..len {
            p.phi0_u.push(dlift_point(&g.f[k], &ff.fu[k]));
            p.phi0_v.push(dlift_point(&g.f[k], &ff.fv[k]));
            p.phi1_u.push(dlift_plane(&g.f[k], &g.n[k], &ff.fu[k], &ff.nu[k]));
            p.phi1_v.push(dlift_plane(&g.f[k], &g.n[k], &ff.fv[k], &ff.nv[k]));
        }
        p
    });
    Ok(LegendreSurfaceGrid { grid: g.grid, phi0, phi1, partials })
}

/// Options for the frame reduction.
#[derive(Clone, Copy, Debug)]
pub struct ReductionOptions {
    /// Accuracy order of the difference stencils (2, 4 or 6).
    pub fd_order: usize,
    /// Threshold on |P¹₀₂|, |P⁰₁₁| below which the surface is degenerate.
    pub degeneracy_tol: f64,
    /// Threshold on the sine of the angle between the quadratic forms
    /// ⟨dφ₀,dφ₀⟩ and ⟨dφ₁,dφ₁⟩.
    pub stalk_tol: f64,
    /// Threshold on |a|, |b|.
    pub coframe_tol: f64,
}

impl Default for ReductionOptions {
    fn default() -> Self {
        ReductionOptions { fd_order: 2, degeneracy_tol: 1e-6, stalk_tol: 1e-8, coframe_tol: 1e-10 }
    }
}

/// Fiber parameters used at each reduction stage.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FiberParams {
    /// −1 when stage 1 flipped columns 1, 2, 4 to reach det = +1.
    pub eps: f64,
    pub y21: f64,
    pub y12: f64,
    pub b: f64,
    pub r: f64,
    pub s: f64,
    pub p: f64,
    pub q: f64,
}

/// Coefficients P₁, P₂ of α = P₁α¹ + P₂α² after the last stage, and the
/// fiber parameters of every stage.
#[derive(Clone, Debug, Default)]
pub struct ReductionState {
    pub p1: Vec<Mat6>,
    pub p2: Vec<Mat6>,
    pub params: Vec<FiberParams>,
}

/// A frame field with its Maurer–Cartan coefficients along ∂ᵤ and ∂ᵥ.
#[derive(Clone, Debug)]
pub struct FrameField {
    pub grid: GridSpec,
    pub order: u8,
    pub frames: Vec<Mat6>,
    pub alpha_u: Vec<Mat6>,
    pub alpha_v: Vec<Mat6>,
    pub state: ReductionState,
}

impl FrameField {
    pub fn frame(&self, i: usize, j: usize) -> LieGroupElement {
        LieGroupElement::unchecked(self.frames[self.grid.idx(i, j)])
    }

    /// Builds an order-5 field from frames known to be normal frames, with
    /// Maurer–Cartan coefficients from differences of order `acc`.
    pub fn from_normal_frames(grid: GridSpec, frames: Vec<Mat6>, acc: usize) -> Result<FrameField> {
        if frames.len() != grid.len() {
            return Err(Error::InvalidGrid(format!("expected {} frames, got {}", grid.len(), frames.len())));
        }
        let d = Diff::new(&grid, acc)?;
        let (alpha_u, alpha_v) = maurer_cartan_grid(&d, &frames);
        Ok(FrameField { grid, order: 5, frames, alpha_u, alpha_v, state: ReductionState::default() })
    }

    /// The field transformed by a group element.
    pub fn transform(&self, a: &LieGroupElement) -> FrameField {
        let mut out = self.clone();
        for f in out.frames.iter_mut() {
            *f = a.matrix * *f;
        }
        out
    }
}

/// The coframe α¹ = a du, α² = b dv. `orientation` is the common sign of ab.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Coframe {
    pub grid: GridSpec,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub orientation: f64,
}

impl Coframe {
    pub fn new(grid: GridSpec, a: Vec<f64>, b: Vec<f64>, tol: f64) -> Result<Coframe> {
        let mut orientation = 0.0;
        for k in 0..grid.len() {
            let (i, j) = grid.node(k);
            if !(a[k].abs() > tol && b[k].abs() > tol) {
                return Err(Error::IllConditionedCoframe(i, j));
            }
            let s = (a[k] * b[k]).signum();
            if orientation == 0.0 {
                orientation = s;
            } else if s != orientation {
                return Err(Error::IllConditionedCoframe(i, j));
            }
        }
        Ok(Coframe { grid, a, b, orientation })
    }
}

/// The six invariant functions with the nodewise least-squares residuals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvariantField {
    pub grid: GridSpec,
    pub q1: Vec<f64>,
    pub q2: Vec<f64>,
    pub p1: Vec<f64>,
    pub p2: Vec<f64>,
    pub r1: Vec<f64>,
    pub r2: Vec<f64>,
    /// Euclidean norm of the residual of the ten-equation system per node.
    pub residual: Vec<f64>,
    /// Largest residual of the two α⁰₄ equations over the grid.
    pub alpha04_residual: f64,
}

impl InvariantField {
    pub fn at(&self, k: usize) -> [f64; 6] {
        [self.q1[k], self.q2[k], self.p1[k], self.p2[k], self.r1[k], self.r2[k]]
    }

    pub fn fields(&self) -> [(&'static str, &Vec<f64>); 6] {
        [("q1", &self.q1), ("q2", &self.q2), ("p1", &self.p1), ("p2", &self.p2), ("r1", &self.r1), ("r2", &self.r2)]
    }

    /// Constant invariants on a grid.
    pub fn constant(grid: GridSpec, v: [f64; 6]) -> InvariantField {
        let c = |x: f64| vec![x; grid.len()];
        InvariantField {
            grid,
            q1: c(v[0]),
            q2: c(v[1]),
            p1: c(v[2]),
            p2: c(v[3]),
            r1: c(v[4]),
            r2: c(v[5]),
            residual: c(0.0),
            alpha04_residual: 0.0,
        }
    }
}

/// A⁻¹∂ᵤA and A⁻¹∂ᵥA on a grid.
pub fn maurer_cartan_grid(d: &Diff, frames: &[Mat6]) -> (Vec<Mat6>, Vec<Mat6>) {
    let fu = d.u_mat(frames);
    let fv = d.v_mat(frames);
    let au = frames.par_iter().zip(&fu).map(|(a, da)| group_inverse(a) * da).collect();
    let av = frames.par_iter().zip(&fv).map(|(a, da)| group_inverse(a) * da).collect();
    (au, av)
}

/// Verifies that the quadratic forms ⟨dφ₀,dφ₀⟩ and ⟨dφ₁,dφ₁⟩ are linearly
/// independent at every node.
pub fn stalk_test(s: &LegendreSurfaceGrid, opts: &ReductionOptions) -> Result<()> {
    let d = Diff::new(&s.grid, opts.fd_order)?;
    let [p0u, p0v, p1u, p1v] = s.first_derivatives(&d);
    for k in 0..s.grid.len() {
        let x = [inner(&p0u[k], &p0u[k]), inner(&p0u[k], &p0v[k]), inner(&p0v[k], &p0v[k])];
        let y = [inner(&p1u[k], &p1u[k]), inner(&p1u[k], &p1v[k]), inner(&p1v[k], &p1v[k])];
        let c = [x[1] * y[2] - x[2] * y[1], x[2] * y[0] - x[0] * y[2], x[0] * y[1] - x[1] * y[0]];
        let denom = dot3(&x, &x).sqrt() * dot3(&y, &y).sqrt();
        let sine = if denom > 0.0 { dot3(&c, &c).sqrt() / denom } else { 0.0 };
        if !(sine > opts.stalk_tol) {
            let (i, j) = s.grid.node(k);
            return Err(Error::StalkCollapse(i, j));
        }
    }
    Ok(())
}

/// Unit eigenvector of the eigenvalue of smaller modulus.
fn small_kernel(g: Matrix2<f64>) -> [f64; 2] {
    let e = g.symmetric_eigen();
    let k = if e.eigenvalues[0].abs() <= e.eigenvalues[1].abs() { 0 } else { 1 };
    [e.eigenvectors[(0, k)], e.eigenvectors[(1, k)]]
}

/// Anchor: largest component of node 0 positive; then each node agrees in
/// sign with its left neighbour (or the node above at the start of a row).
fn align_signs(grid: &GridSpec, vecs: &mut [[f64; 2]]) {
    let a = vecs[0];
    if (if a[0].abs() >= a[1].abs() { a[0] } else { a[1] }) < 0.0 {
        vecs[0] = [-a[0], -a[1]];
    }
    for i in 0..grid.nu {
        for j in 0..grid.nv {
            if i == 0 && j == 0 {
                continue;
            }
            let k = grid.idx(i, j);
            let r = if j > 0 { vecs[k - 1] } else { vecs[grid.idx(i - 1, j)] };
            let c = vecs[k];
            if c[0] * r[0] + c[1] * r[1] < 0.0 {
                vecs[k] = [-c[0], -c[1]];
            }
        }
    }
}

fn quad_gram(a: &MinkVector, b: &MinkVector) -> Matrix2<f64> {
    let ab = inner(a, b);
    Matrix2::new(inner(a, a), ab, ab, inner(b, b))
}

fn combine(c: [f64; 2], a: &MinkVector, b: &MinkVector) -> MinkVector {
    *a * c[0] + *b * c[1]
}

/// Coefficients (P₁, P₂) with α = P₁α¹ + P₂α², α¹ = α³₀ and α² = α²₁.
fn p_fields(grid: &GridSpec, au: &[Mat6], av: &[Mat6]) -> Result<(Vec<Mat6>, Vec<Mat6>)> {
    let out: Vec<Result<(Mat6, Mat6)>> = au
        .par_iter()
        .zip(av)
        .enumerate()
        .map(|(k, (u, v))| {
            let (a11, a21, a12, a22) = (u[(3, 0)], u[(2, 1)], v[(3, 0)], v[(2, 1)]);
            let det = a11 * a22 - a12 * a21;
            if !(det.abs() > 1e-300) || !det.is_finite() {
                let (i, j) = grid.node(k);
                return Err(Error::IllConditionedCoframe(i, j));
            }
            Ok(((u * a22 - v * a21) / det, (v * a11 - u * a12) / det))
        })
        .collect();
    let mut p1 = Vec::with_capacity(out.len());
    let mut p2 = Vec::with_capacity(out.len());
    for r in out {
        let (a, b) = r?;
        p1.push(a);
        p2.push(b);
    }
    Ok((p1, p2))
}

/// Right-multiplies frames by X and updates the coefficients:
/// α̃ = X⁻¹dX + X⁻¹αX.
fn gauge(d: &Diff, frames: &mut [Mat6], au: &mut [Mat6], av: &mut [Mat6], x: &[Mat6]) {
    let xu = d.u_mat(x);
    let xv = d.v_mat(x);
    frames.par_iter_mut().zip(au.par_iter_mut()).zip(av.par_iter_mut()).enumerate().for_each(
        |(k, ((f, u), v))| {
            let xi = group_inverse(&x[k]);
            *f *= x[k];
            *u = xi * xu[k] + xi * *u * x[k];
            *v = xi * xv[k] + xi * *v * x[k];
        },
    );
}

/// Stage-1 frame from the lifted surface: curvature spheres A₀, A₁ from the
/// kernels of the directional Gram matrices, then the completion
/// (A₂, A₃, A₄, A₅) in the normalization of a first-order frame.
fn first_order_frames(s: &LegendreSurfaceGrid, d: &Diff) -> Result<(Vec<Mat6>, Vec<f64>)> {
    let grid = s.grid;
    let [p0u, p0v, p1u, p1v] = s.first_derivatives(d);
    let mut cv: Vec<[f64; 2]> = (0..grid.len()).map(|k| small_kernel(quad_gram(&p0v[k], &p1v[k]))).collect();
    let mut cu: Vec<[f64; 2]> = (0..grid.len()).map(|k| small_kernel(quad_gram(&p0u[k], &p1u[k]))).collect();
    align_signs(&grid, &mut cv);
    align_signs(&grid, &mut cu);
    let a0: Vec<MinkVector> = (0..grid.len()).map(|k| combine(cv[k], &s.phi0[k], &s.phi1[k])).collect();
    let a1: Vec<MinkVector> = (0..grid.len()).map(|k| combine(cu[k], &s.phi0[k], &s.phi1[k])).collect();
    let c3 = d.u_vec(&a0);
    let c2 = d.v_vec(&a1);
    let c5 = d.uu_vec(&a0);
    let c4 = d.vv_vec(&a1);
    let res: Vec<Result<(Mat6, f64)>> = (0..grid.len())
        .into_par_iter()
        .map(|k| {
            let (i, j) = grid.node(k);
            let degenerate = |why: &str| Error::DegenerateSurface(i, j, why.to_string());
            let (a0, a1) = (a0[k], a1[k]);
            let m = Matrix2::new(inner(&c5[k], &a0), inner(&c4[k], &a0), inner(&c5[k], &a1), inner(&c4[k], &a1));
            let mi = m.try_inverse().ok_or_else(|| degenerate("second derivatives of the curvature spheres are dependent"))?;
            let w5 = mi * nalgebra::Vector2::new(-1.0, 0.0);
            let w4 = mi * nalgebra::Vector2::new(0.0, -1.0);
            let p5 = c5[k] * w5[0] + c4[k] * w5[1];
            let p4 = c5[k] * w4[0] + c4[k] * w4[1];
            let b5 = p5 + a0 * (inner(&p5, &p5) / 2.0);
            let b4 = p4 + a1 * (inner(&p4, &p4) / 2.0);
            let b5 = b5 + a1 * inner(&b4, &b5);
            let proj = |c: &MinkVector| {
                *c + a0 * inner(c, &b5) + a1 * inner(c, &b4) + b4 * inner(c, &a1) + b5 * inner(c, &a0)
            };
            let h3 = proj(&c3[k]);
            let n3 = inner(&h3, &h3);
            if !(n3 > 0.0) {
                return Err(degenerate("σ₀ is not immersed along u"));
            }
            let a3 = h3 * (1.0 / n3.sqrt());
            let h2 = proj(&c2[k]);
            let h2 = h2 - a3 * inner(&h2, &a3);
            let n2 = inner(&h2, &h2);
            if !(n2 > 0.0) {
                return Err(degenerate("σ₁ is not immersed along v"));
            }
            let a2 = h2 * (1.0 / n2.sqrt());
            let cols = [a0, a1, a2, a3, b4, b5];
            let mut f = Mat6::from_fn(|r, c| cols[c].0[r]);
            let mut eps = 1.0;
            if f.determinant() < 0.0 {
                for c in [1, 2, 4] {
                    for r in 0..6 {
                        f[(r, c)] = -f[(r, c)];
                    }
                }
                eps = -1.0;
            }
            if !f.iter().all(|x| x.is_finite()) {
                return Err(degenerate("non-finite first-order frame"));
            }
            Ok((f, eps))
        })
        .collect();
    let mut frames = Vec::with_capacity(grid.len());
    let mut eps = Vec::with_capacity(grid.len());
    for r in res {
        let (f, e) = r?;
        frames.push(f);
        eps.push(e);
    }
    Ok((frames, eps))
}

/// Reduces a Legendre surface to its normal frame and returns the frame
/// field (order 5) and the canonical coframe.
pub fn reduce_to_normal_frame(s: &LegendreSurfaceGrid, opts: &ReductionOptions) -> Result<(FrameField, Coframe)> {
    s.validate(1e-8)?;
    let grid = s.grid;
    let d = Diff::new(&grid, opts.fd_order)?;
    stalk_test(s, opts)?;
    let (mut frames, eps) = first_order_frames(s, &d)?;
    let (mut au, mut av) = maurer_cartan_grid(&d, &frames);
    let i2 = Matrix2::identity();
    let z2 = Matrix2::zeros();
    let mut params: Vec<FiberParams> = eps.iter().map(|&e| FiberParams { eps: e, ..Default::default() }).collect();

    // stage 2: kill P¹₀₁ and P⁰₁₂
    let (p1, p2) = p_fields(&grid, &au, &av)?;
    let x: Vec<Mat6> = (0..grid.len())
        .map(|k| {
            params[k].y21 = p1[k][(1, 0)];
            params[k].y12 = p2[k][(0, 1)];
            g0_element(&i2, &i2, &Matrix2::new(0.0, params[k].y12, params[k].y21, 0.0), 0.0)
        })
        .collect();
    gauge(&d, &mut frames, &mut au, &mut av, &x);

    // stage 3: kill P⁰₂₂ = −P¹₃₁ with the skew parameter
    let (p1, p2) = p_fields(&grid, &au, &av)?;
    let x: Vec<Mat6> = (0..grid.len())
        .map(|k| {
            params[k].b = p2[k][(0, 2)] - p1[k][(1, 3)];
            g0_element(&i2, &i2, &z2, params[k].b)
        })
        .collect();
    gauge(&d, &mut frames, &mut au, &mut av, &x);

    // stage 4: scale so that P⁰₁₁ = P¹₀₂ = 1
    let (p1, p2) = p_fields(&grid, &au, &av)?;
    let mut x = Vec::with_capacity(grid.len());
    for k in 0..grid.len() {
        let (p102, p011) = (p2[k][(1, 0)], p1[k][(0, 1)]);
        if !(p102.abs() > opts.degeneracy_tol) || !(p011.abs() > opts.degeneracy_tol) {
            let (i, j) = grid.node(k);
            return Err(Error::DegenerateSurface(
                i,
                j,
                format!("curvature sphere map not immersed (P¹₀₂ = {p102:e}, P⁰₁₁ = {p011:e})"),
            ));
        }
        let (xx, yy) = (1.0 / p102, 1.0 / p011);
        let sc = (1.0 / (xx * xx * yy)).cbrt();
        let rc = (1.0 / (xx * yy * yy)).cbrt();
        params[k].r = rc;
        params[k].s = sc;
        x.push(g0_element(&Matrix2::new(rc, 0.0, 0.0, sc), &i2, &z2, 0.0));
    }
    gauge(&d, &mut frames, &mut au, &mut av, &x);

    // stage 5: kill α⁰₂ and α¹₃
    let (p1, p2) = p_fields(&grid, &au, &av)?;
    let mut x = Vec::with_capacity(grid.len());
    for k in 0..grid.len() {
        let m = Matrix2::new(p1[k][(0, 1)], -p1[k][(3, 2)], p2[k][(3, 2)], p2[k][(1, 0)]);
        let rhs = -nalgebra::Vector2::new(p1[k][(0, 2)], p2[k][(1, 3)]);
        let pq = m.lu().solve(&rhs).ok_or_else(|| {
            let (i, j) = grid.node(k);
            Error::DegenerateSurface(i, j, "singular fifth-stage system".into())
        })?;
        params[k].p = pq[0];
        params[k].q = pq[1];
        x.push(g0_element(&i2, &i2, &Matrix2::new(pq[0], 0.0, 0.0, pq[1]), 0.0));
    }
    gauge(&d, &mut frames, &mut au, &mut av, &x);

    let (p1, p2) = p_fields(&grid, &au, &av)?;
    let a: Vec<f64> = au.iter().map(|m| m[(3, 0)]).collect();
    let b: Vec<f64> = av.iter().map(|m| m[(2, 1)]).collect();
    let cof = Coframe::new(grid, a, b, opts.coframe_tol)?;
    let frame = FrameField { grid, order: 5, frames, alpha_u: au, alpha_v: av, state: ReductionState { p1, p2, params } };
    Ok((frame, cof))
}

/// Names of the Pfaffian conditions of a normal frame, in report order.
pub const PFAFFIAN_NAMES: [&str; 8] =
    ["a40", "a20", "a31", "a32", "a10-a21", "a01-a30", "a02", "a13"];

fn pfaffian_values(m: &Mat6) -> [f64; 8] {
    [
        m[(4, 0)],
        m[(2, 0)],
        m[(3, 1)],
        m[(3, 2)],
        m[(1, 0)] - m[(2, 1)],
        m[(0, 1)] - m[(3, 0)],
        m[(0, 2)],
        m[(1, 3)],
    ]
}

/// Residuals of the normal-frame Pfaffian conditions.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PfaffianReport {
    /// Max over nodes and both directions, per condition.
    pub per_condition: Vec<(String, f64)>,
    pub max: f64,
    /// Max over nodes at least `margin` away from the boundary.
    pub interior_max: f64,
    pub margin: usize,
    /// α³₀ ∧ α²₁ has the sign of the coframe orientation everywhere.
    pub orientation_consistent: bool,
}

/// Evaluates the Pfaffian conditions on Maurer–Cartan coefficients
/// recomputed from the frames by differences of order `acc`.
pub fn pfaffian_residuals(frame: &FrameField, acc: usize) -> Result<PfaffianReport> {
    let d = Diff::new(&frame.grid, acc)?;
    let (au, av) = maurer_cartan_grid(&d, &frame.frames);
    let grid = frame.grid;
    let margin = (acc + 4).min(grid.nu.min(grid.nv) / 4);
    let mut per = [0.0f64; 8];
    let mut interior: f64 = 0.0;
    let mut orient = 0.0;
    let mut consistent = true;
    for k in 0..grid.len() {
        let (i, j) = grid.node(k);
        let inside = i >= margin && j >= margin && i + margin < grid.nu && j + margin < grid.nv;
        for m in [&au[k], &av[k]] {
            for (c, v) in pfaffian_values(m).iter().enumerate() {
                per[c] = per[c].max(v.abs());
                if inside {
                    interior = interior.max(v.abs());
                }
            }
        }
        let w = au[k][(3, 0)] * av[k][(2, 1)] - av[k][(3, 0)] * au[k][(2, 1)];
        if orient == 0.0 {
            orient = w.signum();
        } else if w.signum() != orient {
            consistent = false;
        }
    }
    Ok(PfaffianReport {
        per_condition: PFAFFIAN_NAMES.iter().zip(per).map(|(n, v)| (n.to_string(), v)).collect(),
        max: per.iter().cloned().fold(0.0, f64::max),
        interior_max: interior,
        margin,
        orientation_consistent: consistent,
    })
}

/// Rows of the invariant relations along one direction with coframe values
/// c₁ = α¹(∂), c₂ = α²(∂), unknowns ordered (q₁, q₂, p₁, p₂, r₁, r₂).
fn invariant_rows(al: &Mat6, c1: f64, c2: f64) -> ([[f64; 6]; 5], [f64; 5]) {
    (
        [
            [-2.0 * c1, c2, 0.0, 0.0, 0.0, 0.0],
            [-c1, 2.0 * c2, 0.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, c2, c1, 0.0],
            [0.0, 0.0, c1, 0.0, 0.0, c2],
            [0.0, 0.0, 0.0, 0.0, c2, -c1],
        ],
        [al[(0, 0)], al[(1, 1)], al[(0, 3)], al[(1, 2)], al[(0, 4)]],
    )
}

/// Solves the invariant relations by least squares over both directions.
pub fn extract_invariants(frame: &FrameField, cof: &Coframe) -> Result<InvariantField> {
    if frame.order != 5 {
        return Err(Error::InvalidInput(format!("frame of order {} is not a normal frame", frame.order)));
    }
    let grid = frame.grid;
    for k in 0..grid.len() {
        if !(cof.a[k].abs() > DEFAULT_TOL && cof.b[k].abs() > DEFAULT_TOL) {
            let (i, j) = grid.node(k);
            return Err(Error::IllConditionedCoframe(i, j));
        }
    }
    let sols: Vec<([f64; 6], f64, f64)> = (0..grid.len())
        .into_par_iter()
        .map(|k| {
            let (u, v) = (&frame.alpha_u[k], &frame.alpha_v[k]);
            let (ru, bu) = invariant_rows(u, cof.a[k], 0.0);
            let (rv, bv) = invariant_rows(v, 0.0, cof.b[k]);
            let mut m = SMatrix::<f64, 10, 6>::zeros();
            let mut rhs = SVector::<f64, 10>::zeros();
            for r in 0..5 {
                for c in 0..6 {
                    m[(r, c)] = ru[r][c];
                    m[(r + 5, c)] = rv[r][c];
                }
                rhs[r] = bu[r];
                rhs[r + 5] = bv[r];
            }
            let svd = m.svd(true, true);
            let x = svd.solve(&rhs, 1e-14).expect("svd with vectors");
            let res = m * x - rhs;
            let sol = [x[0], x[1], x[2], x[3], x[4], x[5]];
            (sol, res.norm(), res[4].abs().max(res[9].abs()))
        })
        .collect();
    let pick = |c: usize| sols.iter().map(|s| s.0[c]).collect::<Vec<f64>>();
    Ok(InvariantField {
        grid,
        q1: pick(0),
        q2: pick(1),
        p1: pick(2),
        p2: pick(3),
        r1: pick(4),
        r2: pick(5),
        residual: sols.iter().map(|s| s.1).collect(),
        alpha04_residual: sols.iter().map(|s| s.2).fold(0.0, f64::max),
    })
}

/// The coframe read off an order-5 frame field.
pub fn coframe_of(frame: &FrameField, tol: f64) -> Result<Coframe> {
    let a = frame.alpha_u.iter().map(|m| m[(3, 0)]).collect();
    let b = frame.alpha_v.iter().map(|m| m[(2, 1)]).collect();
    Coframe::new(frame.grid, a, b, tol)
}

/// Coframe and invariants of frames already in normal form (for example a
/// series solution evaluated on a grid).
pub fn invariants_from_frames(grid: GridSpec, frames: Vec<Mat6>, acc: usize) -> Result<(FrameField, Coframe, InvariantField)> {
    let frame = FrameField::from_normal_frames(grid, frames, acc)?;
    let cof = coframe_of(&frame, DEFAULT_TOL)?;
    let inv = extract_invariants(&frame, &cof)?;
    Ok((frame, cof, inv))
}

/// Closed-form Blaschke coframe from principal curvatures and metric:
/// a = (k₁−k₂)⁻¹ ∛(√(g₁₁/g₂₂)(∂₁k₁)²∂₂k₂), b = −(k₁−k₂)⁻¹ ∛(√(g₂₂/g₁₁)∂₁k₁(∂₂k₂)²).
/// Curvature derivatives are differences of order `acc`.
pub fn blaschke_coframe_closed_form(g: &EuclideanSurfaceGrid, acc: usize, tol: f64) -> Result<Coframe> {
    g.validate()?;
    let d = Diff::new(&g.grid, acc)?;
    let ff = FundamentalForms::compute(g, acc)?;
    let (k1, k2) = ff.principal();
    let k1u = d.u(&k1);
    let k2v = d.v(&k2);
    let len = g.grid.len();
    let mut a = Vec::with_capacity(len);
    let mut b = Vec::with_capacity(len);
    for k in 0..len {
        let (i, j) = g.grid.node(k);
        let scale = k1[k].abs().max(k2[k].abs());
        if !((k1[k] - k2[k]).abs() > tol * scale) {
            return Err(Error::UmbilicPoint(i, j));
        }
        // curvature derivatives compared against curvature per unit length
        let (su, sv) = (scale * ff.e[k].sqrt(), scale * ff.g[k].sqrt());
        if !(k1u[k].abs() > tol * su) || !(k2v[k].abs() > tol * sv) {
            return Err(Error::DegenerateSurface(i, j, format!("∂₁k₁ = {:e}, ∂₂k₂ = {:e}", k1u[k], k2v[k])));
        }
        let dk = k1[k] - k2[k];
        let r = (ff.e[k] / ff.g[k]).sqrt();
        a.push((r * k1u[k] * k1u[k] * k2v[k]).cbrt() / dk);
        b.push(-(k1u[k] * k2v[k] * k2v[k] / r).cbrt() / dk);
    }
    Coframe::new(g.grid, a, b, 0.0)
}

/// One residual field with its norms.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ResidualField {
    pub name: String,
    pub max: f64,
    /// Discrete L² norm √(Σ r² Δu Δv).
    pub l2: f64,
    #[serde(skip)]
    pub values: Vec<f64>,
}

impl ResidualField {
    pub fn new(name: &str, grid: &GridSpec, values: Vec<f64>) -> ResidualField {
        let max = values.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let l2 = (values.iter().map(|x| x * x).sum::<f64>() * grid.hu() * grid.hv()).sqrt();
        ResidualField { name: name.to_string(), max, l2, values }
    }

    /// Max over nodes at least `margin` away from the boundary.
    pub fn interior_max(&self, grid: &GridSpec, margin: usize) -> f64 {
        let mut m: f64 = 0.0;
        for i in margin..grid.nu.saturating_sub(margin) {
            for j in margin..grid.nv.saturating_sub(margin) {
                m = m.max(self.values[grid.idx(i, j)].abs());
            }
        }
        m
    }
}

fn check_aligned(inv: &InvariantField, cof: &Coframe) -> Result<()> {
    if inv.grid != cof.grid || inv.q1.len() != inv.grid.len() || cof.a.len() != cof.grid.len() {
        return Err(Error::InvalidGrid("invariant and coframe fields are not on the same grid".into()));
    }
    Ok(())
}

/// The structure relations as du∧dv coefficients:
/// dα¹ + q₂α¹∧α², dα² + q₁α¹∧α², the two relations for dq, and the
/// three relations for dp, dr.
pub fn structure_residuals(inv: &InvariantField, cof: &Coframe, acc: usize) -> Result<Vec<ResidualField>> {
    check_aligned(inv, cof)?;
    let grid = inv.grid;
    let d = Diff::new(&grid, acc)?;
    let (av, bu) = (d.v(&cof.a), d.u(&cof.b));
    let (q1v, q2u) = (d.v(&inv.q1), d.u(&inv.q2));
    let (r1v, p2u) = (d.v(&inv.r1), d.u(&inv.p2));
    let (p1v, r2u) = (d.v(&inv.p1), d.u(&inv.r2));
    let (r2v, r1u) = (d.v(&inv.r2), d.u(&inv.r1));
    let n = grid.len();
    let mut s: [Vec<f64>; 7] = Default::default();
    for k in 0..n {
        let (a, b) = (cof.a[k], cof.b[k]);
        let ab = a * b;
        let [q1, q2, p1, p2, r1, r2] = inv.at(k);
        s[0].push(-av[k] + q2 * ab);
        s[1].push(bu[k] + q1 * ab);
        s[2].push(2.0 * a * q1v[k] + b * q2u[k] - (p2 - q1 * q2 - 1.0) * ab);
        s[3].push(a * q1v[k] + 2.0 * b * q2u[k] - (-p1 + q1 * q2 + 1.0) * ab);
        s[4].push(-a * r1v[k] + b * p2u[k] - (2.0 * q2 * r1 + 3.0 * q1 * p2) * ab);
        s[5].push(-a * p1v[k] + b * r2u[k] - (2.0 * q1 * r2 + 3.0 * q2 * p1) * ab);
        s[6].push(a * r2v[k] + b * r1u[k] - 4.0 * (q1 * r1 - q2 * r2) * ab);
    }
    let names = ["d_alpha1", "d_alpha2", "dq_first", "dq_second", "dpr_first", "dpr_second", "dpr_third"];
    Ok(names.iter().zip(s).map(|(nm, v)| ResidualField::new(nm, &grid, v)).collect())
}

/// Euler–Lagrange residuals per unit α¹∧α².
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ElReport {
    pub r1: ResidualField,
    pub r2: ResidualField,
    pub tol: f64,
    pub is_minimal: bool,
}

/// R₁ = ∂ᵤr₁/a − 4q₁r₁ and R₂ = −∂ᵥr₂/b − 4q₂r₂, the coefficients of
/// dr₁∧α² − 4q₁r₁α¹∧α² and dr₂∧α¹ − 4q₂r₂α¹∧α² against α¹∧α².
pub fn el_residuals(inv: &InvariantField, cof: &Coframe, tol: f64, acc: usize) -> Result<ElReport> {
    check_aligned(inv, cof)?;
    let grid = inv.grid;
    let d = Diff::new(&grid, acc)?;
    let (r1u, r2v) = (d.u(&inv.r1), d.v(&inv.r2));
    let n = grid.len();
    let r1: Vec<f64> = (0..n).map(|k| r1u[k] / cof.a[k] - 4.0 * inv.q1[k] * inv.r1[k]).collect();
    let r2: Vec<f64> = (0..n).map(|k| -r2v[k] / cof.b[k] - 4.0 * inv.q2[k] * inv.r2[k]).collect();
    let r1 = ResidualField::new("R1", &grid, r1);
    let r2 = ResidualField::new("R2", &grid, r2);
    let is_minimal = r1.max <= tol && r2.max <= tol;
    Ok(ElReport { r1, r2, tol, is_minimal })
}

/// Trapezoidal integral of α¹∧α², oriented so that the result is positive.
pub fn lie_area(cof: &Coframe) -> f64 {
    let g = &cof.grid;
    let mut s = 0.0;
    for i in 0..g.nu {
        let wi = if i == 0 || i == g.nu - 1 { 0.5 } else { 1.0 };
        for j in 0..g.nv {
            let wj = if j == 0 || j == g.nv - 1 { 0.5 } else { 1.0 };
            let k = g.idx(i, j);
            s += wi * wj * cof.a[k] * cof.b[k];
        }
    }
    cof.orientation * s * g.hu() * g.hv()
}

/// Gauss map and the isometry comparison with Φ = α¹α².
#[derive(Clone, Debug)]
pub struct GaussMap {
    pub elements: Vec<DupinElement>,
    /// max |g_D(X,X) − α¹(X)α²(X)| over nodes and X ∈ {∂ᵤ, ∂ᵥ, ∂ᵤ+∂ᵥ}.
    pub isometry_deviation: f64,
    pub interior_deviation: f64,
}

/// D = [A₀∧A₃∧A₅] at every node; the pullback of the Dupin metric is
/// computed from Maurer–Cartan coefficients recomputed by differences.
pub fn gauss_map(frame: &FrameField, cof: &Coframe, acc: usize) -> Result<GaussMap> {
    let grid = frame.grid;
    let d = Diff::new(&grid, acc)?;
    let (au, av) = maurer_cartan_grid(&d, &frame.frames);
    let margin = (acc + 4).min(grid.nu.min(grid.nv) / 4);
    let mut elements = Vec::with_capacity(grid.len());
    let (mut dev, mut idev) = (0.0f64, 0.0f64);
    for k in 0..grid.len() {
        let f = &frame.frames[k];
        let col = |c: usize| MinkVector(std::array::from_fn(|r| f[(r, c)]));
        elements.push(DupinElement::new([col(0), col(3), col(5)], 1e-6)?);
        let (a, b) = (cof.a[k], cof.b[k]);
        let dd = [
            (dupin_metric_eval(&au[k]), 0.0),
            (dupin_metric_eval(&av[k]), 0.0),
            (dupin_metric_eval(&(au[k] + av[k])), a * b),
        ];
        let e = dd.iter().map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        dev = dev.max(e);
        let (i, j) = grid.node(k);
        if i >= margin && j >= margin && i + margin < grid.nu && j + margin < grid.nv {
            idev = idev.max(e);
        }
    }
    Ok(GaussMap { elements, isometry_deviation: dev, interior_deviation: idev })
}

/// Shape operator of the Gauss map in the normal basis B̄₃..B̄₉ and the
/// mean-curvature coefficient along B̄₃.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ShapeData {
    pub grid: GridSpec,
    /// S(Xᵢ)(Xⱼ) as coefficient vectors on (B̄₃, …, B̄₉).
    pub s11: Vec<[f64; 7]>,
    pub s12: Vec<[f64; 7]>,
    pub s21: Vec<[f64; 7]>,
    pub s22: Vec<[f64; 7]>,
    /// −dr₂(X₂) − 4r₂q₂ + dr₁(X₁) − 4r₁q₁.
    pub mean_curvature: Vec<f64>,
    /// Largest change of the mean curvature when r₁ in the −4r₁q₁ term is
    /// replaced by p₁.
    pub p1_variant_deviation: f64,
}

impl ShapeData {
    pub fn max_mean_curvature(&self) -> f64 {
        self.mean_curvature.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// The Gauss map is harmonic when the mean curvature vanishes. The EL
    /// residuals satisfy R₁ = R₂ on a surface and H = R₁ + R₂, so the
    /// tolerance is doubled to match [`ElReport::is_minimal`].
    pub fn is_harmonic(&self, el_tol: f64) -> bool {
        self.max_mean_curvature() <= 2.0 * el_tol
    }
}

pub fn shape_and_mean_curvature(inv: &InvariantField, cof: &Coframe, acc: usize) -> Result<ShapeData> {
    check_aligned(inv, cof)?;
    let grid = inv.grid;
    let d = Diff::new(&grid, acc)?;
    let (r1u, r1v, r2u, r2v) = (d.u(&inv.r1), d.v(&inv.r1), d.u(&inv.r2), d.v(&inv.r2));
    let n = grid.len();
    let mut out = ShapeData {
        grid,
        s11: Vec::with_capacity(n),
        s12: Vec::with_capacity(n),
        s21: Vec::with_capacity(n),
        s22: Vec::with_capacity(n),
        mean_curvature: Vec::with_capacity(n),
        p1_variant_deviation: 0.0,
    };
    for k in 0..n {
        let (a, b) = (cof.a[k], cof.b[k]);
        let [q1, q2, p1, p2, r1, r2] = inv.at(k);
        // dual frame X₁ = ∂ᵤ/a, X₂ = ∂ᵥ/b
        let (dr1x1, dr1x2) = (r1u[k] / a, r1v[k] / b);
        let (dr2x1, dr2x2) = (r2u[k] / a, r2v[k] / b);
        let s12 = -(dr2x2 + 4.0 * r2 * q2);
        let s21 = dr1x1 - 4.0 * r1 * q1;
        out.s11.push([-(dr2x1 - 2.0 * r2 * q1), 0.0, 0.0, -p1, -r2, 1.0, 0.0]);
        out.s12.push([s12, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        out.s21.push([s21, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        out.s22.push([dr1x2 + 2.0 * r1 * q2, 0.0, 1.0, -r1, -p2, 0.0, 0.0]);
        out.mean_curvature.push(s12 + s21);
        out.p1_variant_deviation = out.p1_variant_deviation.max((4.0 * (p1 - r1) * q1).abs());
    }
    Ok(out)
}

/// Everything the pipeline computes for one surface.
#[derive(Clone, Debug)]
pub struct SurfaceAnalysis {
    pub frame: FrameField,
    pub coframe: Coframe,
    pub invariants: InvariantField,
}

/// Reduction followed by invariant extraction.
pub fn analyze(s: &LegendreSurfaceGrid, opts: &ReductionOptions) -> Result<SurfaceAnalysis> {
    let (frame, coframe) = reduce_to_normal_frame(s, opts)?;
    let invariants = extract_invariants(&frame, &coframe)?;
    Ok(SurfaceAnalysis { frame, coframe, invariants })
}
