//! Spectral analysis and layout optimisation for simply supported rectangular
//! plates stiffened by orthogonal beams.
//!
//! Coordinates: `xi` runs along the edge of length `b`, `eta` along the edge of
//! length `a`. An eta-aligned stiffener runs parallel to the `eta` axis at
//! `xi = position`; a xi-aligned stiffener runs parallel to `xi` at
//! `eta = position`. All edges are simply supported, and every field is a
//! double sine series `w = sum W_ns sin(n pi xi / b) sin(s pi eta / a)`.

pub mod asymptotics;
pub mod cli;
pub mod kernels;
pub mod linalg;
pub mod model;
pub mod optimizer;
pub mod solver_bi;
pub mod solver_torsion;
pub mod solver_uni;
pub mod verify;

mod series;
