//! C¹-conforming finite elements for the stream-function form of the
//! single-layer quasi-geostrophic equation on a rectangle with clamped
//! boundary conditions `ψ = ∂ₙψ = 0`.
//!
//! The solved weak form is
//!
//! ```text
//! (∂t∇ψ, ∇χ) + ν(Δψ, Δχ) + b(ψ; ψ, χ) + μ b₀(ψ, χ) = μ(F, χ),
//! b(ψ; v, w) = (Δψ, v_y w_x − v_x w_y),   b₀(v, w) = −(v_x, w),
//! ```
//!
//! discretized with the bicubic Hermite (Bogner-Fox-Schmit) rectangle in
//! space and backward Euler in time, each step solved by Newton's method.

pub mod assembly;
pub mod cli;
pub mod diagnostics;
pub mod element;
pub mod error;
pub mod field;
pub mod linsolve;
pub mod mesh;
pub mod problems;
pub mod sparse;
pub mod timestepper;

pub use assembly::{Discretization, Operators, Params};
pub use error::{QgError, Result};
pub use mesh::{DofMap, RectMesh};
pub use timestepper::{SolverConfig, State, TimeStepper};
