//! Numerical laboratory for the λ-perturbed Trudinger–Moser functional
//!
//! ```text
//! J(u) = ∫_Ω (e^{4πu²} [− 1] − λ|u|^p) dx,   ‖∇u‖_{L²(Ω)} = 1
//! ```
//!
//! on bounded planar domains discretized by piecewise-linear finite elements.
//!
//! The crate is organised bottom-up:
//!
//! - [`fem`]: meshes, P1 assembly, Dirichlet solves, quadrature and norms.
//! - [`potential`]: Green and Robin functions, harmonic radius and center,
//!   and the concentration level `|Ω| + πe·sup r_Ω²`.
//! - [`functional`]: the functional, its first variation, the Euler–Lagrange
//!   residual and the energy split.
//! - [`maximizer`]: projected Sobolev-gradient ascent on the unit sphere of
//!   H¹₀, multi-start orchestration and blow-up diagnostics.
//! - [`moser`]: the explicit concentrating test functions and the lower
//!   bound they predict.
//! - [`radial`]: the bubble `−log(1+|x|²)`, the correction profile `S₀`, and
//!   a shooting solver for the radial Euler–Lagrange equation.
//! - [`threshold`]: attainment verdicts, bisection for the existence
//!   threshold, deficit predictions and λ-monotonicity scans.
//!
//! Data-parallel loops (per-vertex Robin solves, multi-start seeds, λ-scans)
//! run on rayon when the `parallel` feature is enabled and fall back to plain
//! iterators otherwise.

pub mod error;
pub mod fem;
pub mod functional;
pub mod maximizer;
pub mod moser;
pub mod par;
pub mod potential;
pub mod radial;
pub mod threshold;

pub use error::{Error, Result};
pub use fem::{Field, Mesh, Point};
