//! File formats: JSON and CSV surface grids, curve files, field CSV and OBJ
//! meshes of the Euclidean projection.
//!
//! CSV grids have a header row and one row per node in u-major order
//! (all v for the first u, then the next u). Columns:
//! - Euclidean: `u, v, x, y, z, nx, ny, nz`, optionally followed by the 15
//!   derivative columns `fu_x..fu_z, fv_*, fuu_*, fuv_*, fvv_*`.
//! - Legendre: `u, v, phi0_0..phi0_5, phi1_0..phi1_5`, optionally followed
//!   by the 24 columns `phi0_u_*, phi0_v_*, phi1_u_*, phi1_v_*`.

use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::legendre_curves::{CurveJet, LegendreCurveSamples, PolarizationSection};
use crate::lie_core::{quadric_to_sphere, MinkVector, OrientedSphereElement, QuadricPoint};
use crate::surface_invariants::{
    Coframe, EuclideanPartials, EuclideanSurfaceGrid, GridSpec, InvariantField, LegendrePartials,
    LegendreSurfaceGrid,
};
use crate::surfaces;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

/// An analytic fixture surface in curvature-line coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "surface", rename_all = "lowercase")]
pub enum AnalyticSurface {
    Ellipsoid {
        axes: [f64; 3],
        #[serde(default = "default_window")]
        window: [f64; 4],
        nu: usize,
        nv: usize,
    },
    Torus {
        big_radius: f64,
        radius: f64,
        window: [f64; 4],
        nu: usize,
        nv: usize,
    },
    Sphere {
        radius: f64,
        window: [f64; 4],
        nu: usize,
        nv: usize,
    },
    Plane {
        window: [f64; 4],
        nu: usize,
        nv: usize,
    },
}

fn default_window() -> [f64; 4] {
    surfaces::ELLIPSOID_WINDOW
}

impl AnalyticSurface {
    pub fn sample(&self) -> EuclideanSurfaceGrid {
        match *self {
            AnalyticSurface::Ellipsoid { axes, window, nu, nv } => surfaces::ellipsoid(axes, window, nu, nv),
            AnalyticSurface::Torus { big_radius, radius, window, nu, nv } => {
                surfaces::torus(big_radius, radius, window, nu, nv)
            }
            AnalyticSurface::Sphere { radius, window, nu, nv } => surfaces::sphere(radius, window, nu, nv),
            AnalyticSurface::Plane { window, nu, nv } => surfaces::plane(window, nu, nv),
        }
    }
}

/// Any surface the pipeline accepts.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SurfaceInput {
    Analytic(AnalyticSurface),
    Euclidean(EuclideanSurfaceGrid),
    Legendre(LegendreSurfaceGrid),
}

impl SurfaceInput {
    pub fn grid(&self) -> GridSpec {
        match self {
            SurfaceInput::Analytic(a) => a.sample().grid,
            SurfaceInput::Euclidean(e) => e.grid,
            SurfaceInput::Legendre(l) => l.grid,
        }
    }
}

fn is_csv(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))
}

/// Writes JSON to `path`, or to stdout when `path` is None.
pub fn write_json<T: Serialize>(value: &T, path: Option<&Path>) -> Result<()> {
    let mut text = to_json(value)?;
    text.push('\n');
    write_text(&text, path)
}

pub fn write_text(text: &str, path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::Io(format!("{}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

/// Reads a surface from JSON (grid, analytic description) or CSV.
pub fn read_surface(path: &Path) -> Result<SurfaceInput> {
    if is_csv(path) {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        return parse_surface_csv(&text);
    }
    read_json(path)
}

/// The distinct values of a coordinate column in order of first appearance.
fn distinct(values: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::new();
    for x in values {
        if !out.contains(&x) {
            out.push(x);
        }
    }
    out
}

pub fn parse_surface_csv(text: &str) -> Result<SurfaceInput> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::InvalidInput(format!("csv: {e}")))?;
        let row = rec
            .iter()
            .map(|s| s.parse::<f64>())
            .collect::<std::result::Result<Vec<f64>, _>>()
            .map_err(|e| Error::InvalidInput(format!("csv row {}: {e}", line + 2)))?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::InvalidInput("csv: no rows".into()));
    }
    let width = rows[0].len();
    if rows.iter().any(|r| r.len() != width) {
        return Err(Error::InvalidInput("csv: rows of different widths".into()));
    }
    let us = distinct(rows.iter().map(|r| r[0]));
    let vs = distinct(rows.iter().map(|r| r[1]));
    let (nu, nv) = (us.len(), vs.len());
    if nu * nv != rows.len() || nu < 2 || nv < 2 {
        return Err(Error::InvalidGrid(format!("{} rows do not form a {nu}x{nv} grid", rows.len())));
    }
    let grid = GridSpec::new(nu, nv, [us[0], us[nu - 1], vs[0], vs[nv - 1]]);
    for (k, r) in rows.iter().enumerate() {
        let (i, j) = grid.node(k);
        let (du, dv) = (grid.u(i) - r[0], grid.v(j) - r[1]);
        if du.abs() > 1e-9 * (1.0 + r[0].abs()) || dv.abs() > 1e-9 * (1.0 + r[1].abs()) {
            return Err(Error::InvalidGrid(format!("row {} is not at node ({i}, {j}) of a uniform u-major grid", k + 2)));
        }
    }
    let v3 = |r: &Vec<f64>, c: usize| [r[c], r[c + 1], r[c + 2]];
    let v6 = |r: &Vec<f64>, c: usize| MinkVector(std::array::from_fn(|k| r[c + k]));
    match width {
        8 | 23 => {
            let partials = (width == 23).then(|| EuclideanPartials {
                fu: rows.iter().map(|r| v3(r, 8)).collect(),
                fv: rows.iter().map(|r| v3(r, 11)).collect(),
                fuu: rows.iter().map(|r| v3(r, 14)).collect(),
                fuv: rows.iter().map(|r| v3(r, 17)).collect(),
                fvv: rows.iter().map(|r| v3(r, 20)).collect(),
            });
            Ok(SurfaceInput::Euclidean(EuclideanSurfaceGrid {
                grid,
                f: rows.iter().map(|r| v3(r, 2)).collect(),
                n: rows.iter().map(|r| v3(r, 5)).collect(),
                partials,
            }))
        }
        14 | 38 => {
            let partials = (width == 38).then(|| LegendrePartials {
                phi0_u: rows.iter().map(|r| v6(r, 14)).collect(),
                phi0_v: rows.iter().map(|r| v6(r, 20)).collect(),
                phi1_u: rows.iter().map(|r| v6(r, 26)).collect(),
                phi1_v: rows.iter().map(|r| v6(r, 32)).collect(),
            });
            Ok(SurfaceInput::Legendre(LegendreSurfaceGrid {
                grid,
                phi0: rows.iter().map(|r| v6(r, 2)).collect(),
                phi1: rows.iter().map(|r| v6(r, 8)).collect(),
                partials,
            }))
        }
        w => Err(Error::InvalidInput(format!("csv: {w} columns; expected 8, 23, 14 or 38"))),
    }
}

/// CSV of the invariants and coframe: `u, v, q1, q2, p1, p2, r1, r2, a, b`.
pub fn fields_csv(inv: &InvariantField, cof: &Coframe) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(["u", "v", "q1", "q2", "p1", "p2", "r1", "r2", "a", "b"]).map_err(err)?;
    let g = inv.grid;
    for k in 0..g.len() {
        let (i, j) = g.node(k);
        let mut row = vec![g.u(i), g.v(j)];
        row.extend(inv.at(k));
        row.extend([cof.a[k], cof.b[k]]);
        w.write_record(row.iter().map(|x| format!("{x:.17e}"))).map_err(err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
}

/// The point sphere of the contact element [φ₀∧φ₁].
pub fn euclidean_point(phi0: &MinkVector, phi1: &MinkVector) -> Result<[f64; 3]> {
    // the combination with vanishing radius coordinate (v₁ + v₄)
    let (s0, s1) = (phi0.0[1] + phi0.0[4], phi1.0[1] + phi1.0[4]);
    let v = MinkVector(std::array::from_fn(|k| s1 * phi0.0[k] - s0 * phi1.0[k]));
    if v.norm() <= 1e-12 * (phi0.norm() * phi1.norm()).max(f64::MIN_POSITIVE) {
        return Err(Error::NondecodableQuadricPoint("contact element has no finite point".into()));
    }
    match quadric_to_sphere(&QuadricPoint::normalized(v))? {
        OrientedSphereElement::PointSphere { point } => Ok(point),
        OrientedSphereElement::Sphere { center, .. } => Ok(center),
        other => Err(Error::NondecodableQuadricPoint(format!("projection is {other:?}"))),
    }
}

/// Triangulated mesh of a grid of points, u-major, two triangles per cell.
pub fn obj_mesh(grid: &GridSpec, points: &[[f64; 3]]) -> String {
    let mut s = String::with_capacity(points.len() * 48);
    for p in points {
        s.push_str(&format!("v {:.12e} {:.12e} {:.12e}\n", p[0], p[1], p[2]));
    }
    let id = |i: usize, j: usize| grid.idx(i, j) + 1;
    for i in 0..grid.nu - 1 {
        for j in 0..grid.nv - 1 {
            s.push_str(&format!("f {} {} {}\n", id(i, j), id(i + 1, j), id(i + 1, j + 1)));
            s.push_str(&format!("f {} {} {}\n", id(i, j), id(i + 1, j + 1), id(i, j + 1)));
        }
    }
    s
}

/// Euclidean points of a Legendre surface.
pub fn projection(s: &LegendreSurfaceGrid) -> Result<Vec<[f64; 3]>> {
    s.phi0.iter().zip(&s.phi1).map(|(a, b)| euclidean_point(a, b)).collect()
}

/// Taylor coefficient arrays at `t0` for V₀ and V₁, evaluated at `samples`
/// points spaced by `step`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CurveSeries {
    #[serde(default)]
    pub t0: f64,
    pub v0: [Vec<f64>; 6],
    pub v1: [Vec<f64>; 6],
    #[serde(default = "one")]
    pub samples: usize,
    #[serde(default = "default_step")]
    pub step: f64,
}

fn one() -> usize {
    1
}

fn default_step() -> f64 {
    1e-2
}

impl CurveSeries {
    pub fn to_samples(&self) -> Result<LegendreCurveSamples> {
        if self.samples == 0 || !(self.step > 0.0) {
            return Err(Error::InvalidCurve("series needs samples >= 1 and step > 0".into()));
        }
        let order = self.v0.iter().chain(&self.v1).map(|c| c.len()).max().unwrap_or(1).max(1) - 1;
        let at = |c: &[Vec<f64>; 6], s: f64| -> [Jet; 6] { std::array::from_fn(|k| Jet::from_polynomial(&c[k], s, order)) };
        let t: Vec<f64> = (0..self.samples).map(|k| self.t0 + k as f64 * self.step).collect();
        let jets: Vec<CurveJet> =
            t.iter().map(|&tk| CurveJet { v0: at(&self.v0, tk - self.t0), v1: at(&self.v1, tk - self.t0) }).collect();
        let value = |j: &[Jet; 6]| MinkVector(std::array::from_fn(|k| j[k].value()));
        Ok(LegendreCurveSamples {
            v0: jets.iter().map(|j| value(&j.v0)).collect(),
            v1: jets.iter().map(|j| value(&j.v1)).collect(),
            t,
            jets: Some(jets),
        })
    }
}

/// A curve file: `{"samples": {...}}` or `{"series": {...}}`, with an
/// optional polarization section (one vector per sample).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CurveFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<LegendreCurveSamples>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub series: Option<CurveSeries>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub polarization: Option<Vec<MinkVector>>,
}

impl CurveFile {
    pub fn curve(&self) -> Result<LegendreCurveSamples> {
        match (&self.samples, &self.series) {
            (Some(s), None) => Ok(s.clone()),
            (None, Some(s)) => s.to_samples(),
            _ => Err(Error::InvalidInput("curve file needs exactly one of \"samples\" and \"series\"".into())),
        }
    }

    /// The given polarization, or the first-vector section.
    pub fn polarization(&self, c: &LegendreCurveSamples) -> Result<PolarizationSection> {
        match &self.polarization {
            Some(v) if v.len() == c.len() => Ok(PolarizationSection { v: v.clone(), jets: None }),
            Some(v) => Err(Error::InvalidCurve(format!("{} polarization vectors for {} samples", v.len(), c.len()))),
            None => Ok(PolarizationSection::first_vector(c)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie_core::{lift_plane, lift_point};

    #[test]
    fn projection_recovers_the_point() {
        let p = [0.3, -1.2, 2.5];
        let n = [0.0, 0.6, 0.8];
        let (a, b) = (lift_point(&p), lift_plane(&p, &n));
        // any basis of the contact element
        let phi0 = MinkVector(std::array::from_fn(|k| 2.0 * a.0[k] + 0.7 * b.0[k]));
        let phi1 = MinkVector(std::array::from_fn(|k| -a.0[k] + 1.3 * b.0[k]));
        let q = euclidean_point(&phi0, &phi1).unwrap();
        assert!(q.iter().zip(p).all(|(x, y)| (x - y).abs() < 1e-12), "{q:?}");
    }

    #[test]
    fn csv_round_trip_of_a_euclidean_grid() {
        let g = surfaces::plane([0.0, 1.0, 0.0, 2.0], 3, 4);
        let mut text = String::from("u,v,x,y,z,nx,ny,nz\n");
        for k in 0..g.grid.len() {
            let (i, j) = g.grid.node(k);
            let (f, n) = (g.f[k], g.n[k]);
            text += &format!("{},{},{},{},{},{},{},{}\n", g.grid.u(i), g.grid.v(j), f[0], f[1], f[2], n[0], n[1], n[2]);
        }
        match parse_surface_csv(&text).unwrap() {
            SurfaceInput::Euclidean(e) => {
                assert_eq!(e.grid, g.grid);
                assert_eq!(e.f, g.f);
                assert!(e.partials.is_none());
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn csv_rejects_ragged_grids() {
        let text = "u,v,x,y,z,nx,ny,nz\n0,0,0,0,0,0,0,1\n0,1,0,0,0,0,0,1\n1,0,0,0,0,0,0,1\n";
        assert!(matches!(parse_surface_csv(text), Err(Error::InvalidGrid(_))));
    }

    #[test]
    fn analytic_description_parses() {
        let s: SurfaceInput = serde_json::from_str(r#"{"surface": "ellipsoid", "axes": [1, 1.3, 1.7], "nu": 9, "nv": 9}"#).unwrap();
        assert!(matches!(s, SurfaceInput::Analytic(AnalyticSurface::Ellipsoid { .. })));
        assert_eq!(s.grid().len(), 81);
    }

    #[test]
    fn obj_has_two_triangles_per_cell() {
        let g = GridSpec::new(3, 4, [0.0, 1.0, 0.0, 1.0]);
        let pts = vec![[0.0; 3]; g.len()];
        let s = obj_mesh(&g, &pts);
        assert_eq!(s.lines().filter(|l| l.starts_with("v ")).count(), 12);
        assert_eq!(s.lines().filter(|l| l.starts_with("f ")).count(), 12);
    }
}
