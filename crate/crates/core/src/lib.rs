//! Numerical laboratory for collapse in the scalar Zakharov system
//!
//! ```text
//! i ψ_t + Δψ = n ψ,        n_tt - Δn = Δ|ψ|²
//! ```
//!
//! in dimensions 1 to 3: grids and operators, self-similar profiles, a
//! splitting integrator, and conservation / rate diagnostics.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod config;
pub mod diagnostics;
pub mod error;
pub mod evolve;
pub mod fit;
pub mod grid;
pub mod linalg;
pub mod ode;
pub mod profiles;
pub mod spectral;

pub use config::SimConfig;
pub use error::{Error, Result};
pub use evolve::{Propagator, WaveState};
pub use grid::{ComplexField, Field, Grid, GridKind, Parity, RealField, Scalar};
pub use num_complex::Complex64;
