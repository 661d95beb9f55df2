//! Lie sphere geometry of Legendre surfaces and curves in 3-space.
//!
//! Modules:
//! - [`lie_core`]: the Lie quadric, the contact manifold, the group `O(4,2)`
//!   and its Lie algebra, the Maurer–Cartan form.
//! - [`surface_invariants`]: moving-frame reduction of Legendre surfaces in
//!   curvature-line coordinates and the local invariants.
//! - [`legendre_curves`]: polarized Legendre curves, their Frenet frames and
//!   the curvatures `k0..k3`.
//! - [`eds_engine`]: the exterior differential system of Lie minimal
//!   surfaces and its Cartan tests.
//! - [`cauchy_solver`]: formal power series solutions of the Cauchy problem
//!   for Lie minimal surfaces.

pub mod cauchy_solver;
pub mod eds_engine;
pub mod error;
pub mod fd;
pub mod io;
pub mod jet;
pub mod legendre_curves;
pub mod lie_core;
pub mod surface_invariants;
pub mod surfaces;

pub use error::{Error, Result};
