//! Time integration of the scalar Zakharov system
//!
//! ```text
//! i ψ_t + Δψ = n ψ,    n_tt - Δn = Δ|ψ|²
//! ```
//!
//! by Strang splitting: half a potential substep (phase rotation of `ψ` by the
//! time integral of `n`, together with the wave flow of `m = n + |ψ|²` at frozen
//! `|ψ|²`), a full free Schrödinger substep, and a second potential half step.

mod init;
mod run;
mod step;
mod tstar;

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{ComplexField, Grid, GridKind, RealField};
use crate::spectral::{periodic_multiplier, RadialPower, MEAN_TOLERANCE};

pub use init::{initial_state, moving_gaussian, radial_gaussian, self_similar_state_2d, self_similar_state_3d};
pub use run::{run, run_from, RunOutput, StopReason};
pub use step::{step, Stepper};
pub use tstar::{estimate_tstar, estimate_tstar_for_dim, estimate_tstar_power_law, fit_exponent, fit_power_law, growth_window, BlowupFit};

/// The field triple `(ψ, n, n_t)` at time `t`.
#[derive(Debug, Clone)]
pub struct WaveState {
    pub t: f64,
    pub psi: ComplexField,
    pub n: RealField,
    pub nt: RealField,
}

impl WaveState {
    pub fn new(t: f64, psi: ComplexField, n: RealField, nt: RealField) -> Result<Self> {
        if !psi.grid().same_as(n.grid()) || !psi.grid().same_as(nt.grid()) {
            return Err(Error::InvalidGrid("state fields live on different grids".into()));
        }
        Ok(WaveState { t, psi, n, nt })
    }

    pub fn zeros(grid: Arc<Grid>) -> Self {
        WaveState {
            t: 0.0,
            psi: ComplexField::zeros(grid.clone()),
            n: RealField::zeros(grid.clone()),
            nt: RealField::zeros(grid),
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.psi.grid()
    }

    pub fn is_finite(&self) -> bool {
        self.psi.is_finite() && self.n.is_finite() && self.nt.is_finite()
    }

    /// `w± = n ± i ω⁻¹ n_t`.
    pub fn first_order(&self, prop: Propagator) -> Result<(ComplexField, ComplexField)> {
        to_first_order(&self.n, &self.nt, prop)
    }
}

/// Choice of `ω` in the first-order reduction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Propagator {
    /// `ω₁ = (1 - Δ)^{1/2}`.
    #[default]
    Regularized,
    /// `ω = (-Δ)^{1/2}`; fails on a nonzero mean mode of `n_t` on periodic
    /// grids.
    Exact,
}

/// `ω^p f`.
fn omega_power(f: &RealField, p: f64, prop: Propagator) -> Result<RealField> {
    let grid = f.grid();
    match grid.kind() {
        GridKind::Radial => {
            let geo = grid.radial_or_err()?;
            let shift = match prop {
                Propagator::Regularized => 1.0,
                Propagator::Exact => 0.0,
            };
            let out = RadialPower::new(geo, shift).apply(f.values(), 0.5 * p);
            RealField::new(grid.clone(), out)
        }
        GridKind::Periodic => {
            let geo = grid.periodic_or_err()?;
            if prop == Propagator::Exact && p < 0.0 {
                let n = f.values().len() as f64;
                let mean = f.values().iter().sum::<f64>() / n;
                let scale = f.values().iter().fold(0.0f64, |a, v| a.max(v.abs()));
                if mean.abs() > MEAN_TOLERANCE * scale.max(f64::MIN_POSITIVE) {
                    return Err(Error::ZeroWavenumber);
                }
            }
            let mut data: Vec<Complex64> = f.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
            periodic_multiplier(grid, geo, &mut data, |k2| {
                let w2 = match prop {
                    Propagator::Regularized => 1.0 + k2,
                    Propagator::Exact => k2,
                };
                if w2 == 0.0 {
                    Complex64::default()
                } else {
                    Complex64::new(w2.powf(0.5 * p), 0.0)
                }
            });
            RealField::new(grid.clone(), data.into_iter().map(|c| c.re).collect())
        }
    }
}

/// `(w+, w-) = (n + i ω⁻¹ n_t, n - i ω⁻¹ n_t)`.
pub fn to_first_order(
    n: &RealField,
    nt: &RealField,
    prop: Propagator,
) -> Result<(ComplexField, ComplexField)> {
    if !n.grid().same_as(nt.grid()) {
        return Err(Error::InvalidGrid("n and n_t live on different grids".into()));
    }
    let q = omega_power(nt, -1.0, prop)?;
    let plus = n
        .values()
        .iter()
        .zip(q.values())
        .map(|(&a, &b)| Complex64::new(a, b))
        .collect();
    let minus = n
        .values()
        .iter()
        .zip(q.values())
        .map(|(&a, &b)| Complex64::new(a, -b))
        .collect();
    Ok((
        ComplexField::new(n.grid().clone(), plus)?,
        ComplexField::new(n.grid().clone(), minus)?,
    ))
}

/// Inverse of [`to_first_order`]: `n = Re(w+ + w-)/2`,
/// `n_t = ω Im(w+ - w-)/2`.
pub fn from_first_order(
    wp: &ComplexField,
    wm: &ComplexField,
    prop: Propagator,
) -> Result<(RealField, RealField)> {
    if !wp.grid().same_as(wm.grid()) {
        return Err(Error::InvalidGrid("w+ and w- live on different grids".into()));
    }
    let grid = wp.grid().clone();
    let n: Vec<f64> = wp
        .values()
        .iter()
        .zip(wm.values())
        .map(|(a, b)| 0.5 * (a + b).re)
        .collect();
    let q: Vec<f64> = wp
        .values()
        .iter()
        .zip(wm.values())
        .map(|(a, b)| 0.5 * (a - b).im)
        .collect();
    let nt = omega_power(&RealField::new(grid.clone(), q)?, 1.0, prop)?;
    Ok((RealField::new(grid, n)?, nt))
}
