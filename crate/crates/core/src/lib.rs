//! Almost Anosov diffeomorphisms of the 2-torus.
//!
//! The crate builds a diffeomorphism that equals a hyperbolic toral
//! automorphism away from the origin and has an indifferent fixed point at
//! the origin, then measures its dynamics:
//!
//! - [`map_core`]: construction, inverse, differential and pointwise certificates
//! - [`homotopy`]: the Anosov approximants `H_eps` and their hyperbolicity margins
//! - [`cone_dynamics`]: the `E^u`/`E^s` splitting, geometric potential, Lyapunov
//!   exponents, local manifolds and the local product bracket
//! - [`tower_stats`]: first-return statistics of a rectangle far from the origin
//! - [`thermo`]: Ulam transfer operators, pressure curve, SRB density, entropy
//! - [`stats_lab`]: correlation decay and central limit experiments
//! - [`cli`]: batch driver used by the `almost-anosov` binary
//! - [`acceptance`]: the acceptance criteria as reusable checks

pub mod acceptance;
pub mod cli;
pub mod cone_dynamics;
pub mod geometry;
pub mod homotopy;
pub mod map_core;
pub mod seed;
pub mod stats_lab;
pub mod thermo;
pub mod tower_stats;

pub use geometry::{Mat2, TorusPoint, Vec2};
pub use map_core::{AlmostAnosovMap, BumpProfile, ChartKind, MapError, MapSpec};
