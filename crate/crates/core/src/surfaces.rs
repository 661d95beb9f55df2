//! Analytic Euclidean surfaces in curvature-line coordinates, with exact
//! first and second partials. Used as fixtures and by the CLI.

use crate::surface_invariants::{EuclideanPartials, EuclideanSurfaceGrid, GridSpec};

type V3 = [f64; 3];

fn scale3(a: &V3, s: f64) -> V3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

struct Sampled {
    f: V3,
    n: V3,
    fu: V3,
    fv: V3,
    fuu: V3,
    fuv: V3,
    fvv: V3,
}

fn build(grid: GridSpec, eval: impl Fn(f64, f64) -> Sampled) -> EuclideanSurfaceGrid {
    let mut out = EuclideanSurfaceGrid {
        grid,
        f: Vec::with_capacity(grid.len()),
        n: Vec::with_capacity(grid.len()),
        partials: Some(EuclideanPartials::default()),
    };
    for i in 0..grid.nu {
        for j in 0..grid.nv {
            let s = eval(grid.u(i), grid.v(j));
            out.f.push(s.f);
            out.n.push(s.n);
            let p = out.partials.as_mut().unwrap();
            p.fu.push(s.fu);
            p.fv.push(s.fv);
            p.fuu.push(s.fuu);
            p.fuv.push(s.fuv);
            p.fvv.push(s.fvv);
        }
    }
    out
}

/// Default window (u₀,u₁,v₀,v₁) in ellipsoidal coordinates for the
/// triaxial fixture with semi-axes (1, 1.3, 1.7).
pub const ELLIPSOID_WINDOW: [f64; 4] = [1.15, 1.5, 1.9, 2.5];

/// Triaxial ellipsoid x²/A + y²/B + z²/C = 1 in ellipsoidal (confocal)
/// coordinates C < u < B < v < A, which are curvature-line coordinates.
/// `axes` are the semi-axes in any order; the first-octant sheet is used.
pub fn ellipsoid(axes: [f64; 3], window: [f64; 4], nu: usize, nv: usize) -> EuclideanSurfaceGrid {
    let k = squared_axes(axes);
    build(GridSpec::new(nu, nv, window), move |u, v| ellipsoid_point(k, u, v))
}

fn squared_axes(axes: [f64; 3]) -> [f64; 3] {
    let mut ax = axes.map(|x| x * x);
    ax.sort_by(|a, b| b.partial_cmp(a).unwrap());
    ax
}

fn ellipsoid_point([a, b, c]: [f64; 3], u: f64, v: f64) -> Sampled {
    // each coordinate is κ·√((K−u)(K−v)) for K ∈ {A, B, C}
    let coord = |k: f64, o1: f64, o2: f64| {
        let x = (k * (k - u) * (k - v) / ((k - o1) * (k - o2))).sqrt();
        let xu = -x / (2.0 * (k - u));
        let xv = -x / (2.0 * (k - v));
        let xuu = -x / (4.0 * (k - u) * (k - u));
        let xvv = -x / (4.0 * (k - v) * (k - v));
        let xuv = x / (4.0 * (k - u) * (k - v));
        [x, xu, xv, xuu, xuv, xvv]
    };
    let cx = coord(a, b, c);
    let cy = coord(b, a, c);
    let cz = coord(c, a, b);
    let pick = |k: usize| [cx[k], cy[k], cz[k]];
    let f = pick(0);
    let nn = [f[0] / a, f[1] / b, f[2] / c];
    let len = (nn[0] * nn[0] + nn[1] * nn[1] + nn[2] * nn[2]).sqrt();
    Sampled { f, n: scale3(&nn, 1.0 / len), fu: pick(1), fv: pick(2), fuu: pick(3), fuv: pick(4), fvv: pick(5) }
}

/// Torus of revolution with tube radius `r` around a core circle of radius
/// `big_r`; u is the meridian angle, v the longitude.
pub fn torus(big_r: f64, r: f64, window: [f64; 4], nu: usize, nv: usize) -> EuclideanSurfaceGrid {
    let grid = GridSpec::new(nu, nv, window);
    build(grid, move |th, ph| {
        let (st, ct) = th.sin_cos();
        let (sp, cp) = ph.sin_cos();
        let rho = big_r + r * ct;
        Sampled {
            f: [rho * cp, rho * sp, r * st],
            n: [ct * cp, ct * sp, st],
            fu: [-r * st * cp, -r * st * sp, r * ct],
            fv: [-rho * sp, rho * cp, 0.0],
            fuu: [-r * ct * cp, -r * ct * sp, -r * st],
            fuv: [r * st * sp, -r * st * cp, 0.0],
            fvv: [-rho * cp, -rho * sp, 0.0],
        }
    })
}

/// Round sphere of radius `rho` in polar/azimuthal angles.
pub fn sphere(rho: f64, window: [f64; 4], nu: usize, nv: usize) -> EuclideanSurfaceGrid {
    let grid = GridSpec::new(nu, nv, window);
    build(grid, move |th, ph| {
        let (st, ct) = th.sin_cos();
        let (sp, cp) = ph.sin_cos();
        let n = [st * cp, st * sp, ct];
        Sampled {
            f: scale3(&n, rho),
            n,
            fu: scale3(&[ct * cp, ct * sp, -st], rho),
            fv: scale3(&[-st * sp, st * cp, 0.0], rho),
            fuu: scale3(&[-st * cp, -st * sp, -ct], rho),
            fuv: scale3(&[-ct * sp, ct * cp, 0.0], rho),
            fvv: scale3(&[-st * cp, -st * sp, 0.0], rho),
        }
    })
}

/// The plane z = 0 with f(u,v) = (u, v, 0).
pub fn plane(window: [f64; 4], nu: usize, nv: usize) -> EuclideanSurfaceGrid {
    let grid = GridSpec::new(nu, nv, window);
    build(grid, |u, v| Sampled {
        f: [u, v, 0.0],
        n: [0.0, 0.0, 1.0],
        fu: [1.0, 0.0, 0.0],
        fv: [0.0, 1.0, 0.0],
        fuu: [0.0; 3],
        fuv: [0.0; 3],
        fvv: [0.0; 3],
    })
}

/// The triaxial fixture in the rotated coordinates (s+t, s−t) about the
/// center of [`ELLIPSOID_WINDOW`]; these are not curvature-line coordinates.
pub fn ellipsoid_skewed(nu: usize, nv: usize) -> EuclideanSurfaceGrid {
    let k = squared_axes([1.0, 1.3, 1.7]);
    let [u0, u1, v0, v1] = ELLIPSOID_WINDOW;
    let (cu, cv) = (0.5 * (u0 + u1), 0.5 * (v0 + v1));
    let half = 0.08;
    build(GridSpec::new(nu, nv, [-half, half, -half, half]), move |s, t| {
        let p = ellipsoid_point(k, cu + s + t, cv + s - t);
        let add = |a: &V3, b: &V3, sb: f64| [a[0] + sb * b[0], a[1] + sb * b[1], a[2] + sb * b[2]];
        Sampled {
            f: p.f,
            n: p.n,
            fu: add(&p.fu, &p.fv, 1.0),
            fv: add(&p.fu, &p.fv, -1.0),
            fuu: add(&add(&p.fuu, &p.fuv, 2.0), &p.fvv, 1.0),
            fuv: add(&p.fuu, &p.fvv, -1.0),
            fvv: add(&add(&p.fuu, &p.fuv, -2.0), &p.fvv, 1.0),
        }
    })
}
