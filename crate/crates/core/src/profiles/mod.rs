//! Self-similar collapse profiles.
//!
//! * the 2D ground state `R`, `ΔR - R + R³ = 0`;
//! * the exact 2D family `(P_a, N_a)`,
//!   `ΔP - P = NP`, `a²(η²N'' + 6ηN' + 6N) - ΔN = ΔP²`;
//! * the 3D ladder `(P_k, N_k)`,
//!   `ΔP - P - NP = 0`, `(2/9)(2η²N'' + 13ηN' + 14N) = ΔP²`.
//!
//! All profiles are radial functions of the similarity variable `η`.

mod family2d;
mod ladder;
mod shooting;

use std::fmt;
use std::io::Write;

use crate::error::{Error, Result};
use crate::fit::linear_fit;

pub use family2d::{
    find_profile_2d, find_profile_2d_with, ground_state_2d, BvpOptions, DEFAULT_A_STEP,
};
pub use ladder::{find_profile_3d, series_seed_3d, shoot_3d, SeriesSeed, Shot};
pub use shooting::ShotClass;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Ground2d,
    Family2d,
    Ladder3d,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Ground2d => "ground2d",
            Family::Family2d => "family2d",
            Family::Ladder3d => "ladder3d",
        }
    }

    pub fn dim(self) -> usize {
        match self {
            Family::Ladder3d => 3,
            _ => 2,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Tail fits: `|P| ≈ C e^{-δη}` and `|N| ≈ C η^{exponent}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    pub p_rate: f64,
    pub n_exponent: f64,
    pub window: (f64, f64),
}

/// A computed profile pair on an `η` grid that starts at `η = 0`.
#[derive(Debug, Clone)]
pub struct ProfileSolution {
    pub family: Family,
    /// `a` for 2D families, `k` for the 3D ladder.
    pub parameter: f64,
    pub eta: Vec<f64>,
    pub p: Vec<f64>,
    pub n: Vec<f64>,
    pub dp: Vec<f64>,
    pub dn: Vec<f64>,
    pub p0: f64,
    pub n0: f64,
    pub decay: DecayFit,
    /// Max-norm residual of the defining equations on the interior.
    pub residual: f64,
}

/// `α_k = (1/3)√(2k(4k+3))`.
pub fn alpha_k(k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::ZeroModeIndex);
    }
    let k = k as f64;
    Ok((2.0 * k * (4.0 * k + 3.0)).sqrt() / 3.0)
}

/// `N(0) = 9 P(0)² / (14 - 9 P(0)²)`.
pub fn n0_from_p0(p0: f64) -> Result<f64> {
    let den = 14.0 - 9.0 * p0 * p0;
    if den.abs() < 1e-12 {
        return Err(Error::SingularRelation(p0));
    }
    Ok(9.0 * p0 * p0 / den)
}

/// Fits the tails of `P` and `N` over `[lo, hi]`, skipping points where the
/// field is not representable in logarithms.
pub(crate) fn decay_fit(eta: &[f64], p: &[f64], n: &[f64], lo: f64, hi: f64) -> DecayFit {
    let pick = |f: &[f64], log_x: bool| {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for (&e, &v) in eta.iter().zip(f) {
            if e >= lo && e <= hi && v.abs() > 1e-300 {
                xs.push(if log_x { e.ln() } else { e });
                ys.push(v.abs().ln());
            }
        }
        linear_fit(&xs, &ys).map(|f| f.slope).unwrap_or(f64::NAN)
    };
    DecayFit {
        p_rate: -pick(p, false),
        n_exponent: pick(n, true),
        window: (lo, hi),
    }
}

/// Finite-difference slopes for Hermite interpolation on a nonuniform grid.
pub(crate) fn fd_slopes(x: &[f64], f: &[f64]) -> Vec<f64> {
    let n = x.len();
    (0..n)
        .map(|i| {
            if i == 0 {
                (f[1] - f[0]) / (x[1] - x[0])
            } else if i + 1 == n {
                (f[i] - f[i - 1]) / (x[i] - x[i - 1])
            } else {
                let (h0, h1) = (x[i] - x[i - 1], x[i + 1] - x[i]);
                let d0 = (f[i] - f[i - 1]) / h0;
                let d1 = (f[i + 1] - f[i]) / h1;
                (h1 * d0 + h0 * d1) / (h0 + h1)
            }
        })
        .collect()
}

impl ProfileSolution {
    pub fn dim(&self) -> usize {
        self.family.dim()
    }

    pub fn eta_max(&self) -> f64 {
        *self.eta.last().expect("nonempty profile")
    }

    /// `(P, P', N, N')` at `η ≥ 0`: cubic Hermite inside the grid, fitted
    /// tails beyond it.
    pub fn eval(&self, eta: f64) -> [f64; 4] {
        let eta = eta.abs();
        let last = self.eta.len() - 1;
        let e_end = self.eta[last];
        if eta >= e_end {
            let d = eta - e_end;
            let rate = if self.decay.p_rate.is_finite() && self.decay.p_rate > 0.0 {
                self.decay.p_rate
            } else {
                1.0
            };
            let pe = self.p[last] * (-rate * d).exp();
            let q = if self.decay.n_exponent.is_finite() && self.decay.n_exponent < 0.0 {
                self.decay.n_exponent
            } else {
                -2.0
            };
            let ne = self.n[last] * (eta / e_end).powf(q);
            return [pe, -rate * pe, ne, q * ne / eta];
        }
        let i = match self
            .eta
            .binary_search_by(|v| v.partial_cmp(&eta).expect("finite grid"))
        {
            Ok(i) => i.min(last - 1),
            Err(i) => i.saturating_sub(1).min(last - 1),
        };
        let (x0, x1) = (self.eta[i], self.eta[i + 1]);
        let h = x1 - x0;
        let t = (eta - x0) / h;
        let herm = |f: &[f64], df: &[f64]| {
            let (f0, f1, d0, d1) = (f[i], f[i + 1], df[i] * h, df[i + 1] * h);
            let t2 = t * t;
            let t3 = t2 * t;
            let v = (2.0 * t3 - 3.0 * t2 + 1.0) * f0
                + (t3 - 2.0 * t2 + t) * d0
                + (-2.0 * t3 + 3.0 * t2) * f1
                + (t3 - t2) * d1;
            let dv = ((6.0 * t2 - 6.0 * t) * f0
                + (3.0 * t2 - 4.0 * t + 1.0) * d0
                + (-6.0 * t2 + 6.0 * t) * f1
                + (3.0 * t2 - 2.0 * t) * d1)
                / h;
            (v, dv)
        };
        let (p, dp) = herm(&self.p, &self.dp);
        let (n, dn) = herm(&self.n, &self.dn);
        [p, dp, n, dn]
    }

    /// `∫ P² dx` over `R^d` (trapezoid in `η`).
    pub fn mass(&self) -> f64 {
        let d = self.dim() as i32;
        let area = crate::grid::sphere_area(self.dim());
        let mut s = 0.0;
        for i in 0..self.eta.len() - 1 {
            let (e0, e1) = (self.eta[i], self.eta[i + 1]);
            let f0 = self.p[i] * self.p[i] * e0.powi(d - 1);
            let f1 = self.p[i + 1] * self.p[i + 1] * e1.powi(d - 1);
            s += 0.5 * (f0 + f1) * (e1 - e0);
        }
        s * area
    }

    pub fn is_positive(&self) -> bool {
        self.p.iter().all(|&v| v > 0.0)
    }

    pub fn is_monotone_decreasing(&self) -> bool {
        self.p.windows(2).all(|w| w[1] < w[0])
    }

    /// One-line description used as the CSV header comment.
    pub fn header(&self) -> String {
        format!(
            "# family={} parameter={} P0={:.12e} N0={:.12e} delta={:.6} n_exponent={:.6} window={}..{} residual={:.3e}",
            self.family,
            self.parameter,
            self.p0,
            self.n0,
            self.decay.p_rate,
            self.decay.n_exponent,
            self.decay.window.0,
            self.decay.window.1,
            self.residual
        )
    }

    /// Two-column `(eta, value)` CSV of `P` (`field = 'P'`) or `N`.
    pub fn write_csv<W: Write>(&self, mut w: W, field: char) -> Result<()> {
        let values = match field {
            'P' => &self.p,
            'N' => &self.n,
            other => return Err(Error::Unsupported(format!("unknown profile field {other}"))),
        };
        writeln!(w, "{}", self.header())?;
        writeln!(w, "eta,{field}")?;
        for (e, v) in self.eta.iter().zip(values) {
            writeln!(w, "{e:.10e},{v:.16e}")?;
        }
        Ok(())
    }
}
