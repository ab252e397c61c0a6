//! Simulation configuration (TOML, unknown keys rejected).
//!
//! ```toml
//! [grid]
//! kind = "radial"        # or "periodic"
//! dim = 2
//! extent = 12.0          # r_max, or the periodic box length
//! points = 4000
//!
//! [time]
//! dt = 2e-4
//! t_end = 1.0
//! output_every = 0.005   # or output_steps = 20
//! snapshot_every = 0.1   # optional
//! adaptive = true        # dt = dt0 * min(1, (G0 / G)^2), G = |grad psi|
//!
//! [initial]
//! family = "self-similar-2d"
//! a = 0.3
//! t_star = 1.0
//!
//! [stop]
//! growth = 1000.0        # stop when |grad psi| exceeds growth * initial
//! resolved_ratio = 0.5   # stop when max|psi_{j+1} - psi_j| / max|psi| exceeds this
//!
//! [diagnostics]
//! ell = [0.0]
//! variance = true
//! modified_variance = [4.0, 8.0, 16.0]   # m as multiples of the initial width
//! ```

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::grid::{Grid, GridKind, MIN_POINTS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub kind: GridKind,
    pub dim: usize,
    pub extent: f64,
    pub points: usize,
}

impl GridSpec {
    pub fn build(&self) -> Result<std::sync::Arc<Grid>> {
        match self.kind {
            GridKind::Radial => Grid::radial(self.dim, self.extent, self.points),
            GridKind::Periodic => Grid::periodic(self.dim, self.extent, self.points),
        }
    }
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSpec {
    pub dt: f64,
    /// Absolute end time.
    pub t_end: f64,
    /// Sample cadence in time units; exclusive with `output_steps`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_every: Option<f64>,
    /// Sample every this many steps; suited to adaptive collapse runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_steps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshot_every: Option<f64>,
    #[serde(default = "yes")]
    pub adaptive: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_steps: Option<usize>,
}

/// Initial-condition families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialSpec {
    Zero,
    /// `ψ = A exp(-|x|²/(2w²))`, `n = -c|ψ|²`, `n_t = 0`.
    Gaussian {
        amplitude: f64,
        width: f64,
        #[serde(default)]
        n_coupling: f64,
    },
    /// `ψ = A exp(-|x - x0|²/(2w²) + i k·x)` on a periodic box.
    MovingGaussian {
        amplitude: f64,
        width: f64,
        wavevector: Vec<f64>,
        #[serde(default)]
        center: Vec<f64>,
        #[serde(default)]
        n_coupling: f64,
    },
    /// Exact 2D self-similar solution sampled at `t0`.
    #[serde(rename = "self-similar-2d")]
    SelfSimilar2d {
        a: f64,
        t_star: f64,
        #[serde(default)]
        theta: f64,
        #[serde(default)]
        t0: f64,
    },
    /// Leading-order 3D self-similar form of the `k`-th ladder profile at
    /// `t0`.
    #[serde(rename = "self-similar-3d")]
    SelfSimilar3d {
        k: usize,
        t_star: f64,
        #[serde(default)]
        t0: f64,
    },
}

impl InitialSpec {
    pub fn name(&self) -> &'static str {
        match self {
            InitialSpec::Zero => "zero",
            InitialSpec::Gaussian { .. } => "gaussian",
            InitialSpec::MovingGaussian { .. } => "moving-gaussian",
            InitialSpec::SelfSimilar2d { .. } => "self-similar-2d",
            InitialSpec::SelfSimilar3d { .. } => "self-similar-3d",
        }
    }

    /// Singular time of the self-similar families.
    pub fn t_star(&self) -> Option<f64> {
        match self {
            InitialSpec::SelfSimilar2d { t_star, .. } | InitialSpec::SelfSimilar3d { t_star, .. } => Some(*t_star),
            _ => None,
        }
    }
}

fn default_growth() -> f64 {
    1e3
}

fn default_resolved() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StopSpec {
    #[serde(default = "default_growth")]
    pub growth: f64,
    #[serde(default = "default_resolved")]
    pub resolved_ratio: f64,
}

impl Default for StopSpec {
    fn default() -> Self {
        StopSpec {
            growth: default_growth(),
            resolved_ratio: default_resolved(),
        }
    }
}

fn default_ell() -> Vec<f64> {
    vec![0.0]
}

fn default_m() -> Vec<f64> {
    vec![4.0, 8.0, 16.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticSpec {
    /// Orders `ℓ` of the norm triple `H^{ℓ+1/2} × H^ℓ × H^{ℓ-1}`.
    #[serde(default = "default_ell")]
    pub ell: Vec<f64>,
    #[serde(default = "yes")]
    pub variance: bool,
    /// Modified-variance scales `m` as multiples of the initial width
    /// (radial grids only).
    #[serde(default = "default_m")]
    pub modified_variance: Vec<f64>,
}

impl Default for DiagnosticSpec {
    fn default() -> Self {
        DiagnosticSpec {
            ell: default_ell(),
            variance: true,
            modified_variance: default_m(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub grid: GridSpec,
    pub time: TimeSpec,
    pub initial: InitialSpec,
    #[serde(default)]
    pub stop: StopSpec,
    #[serde(default)]
    pub diagnostics: DiagnosticSpec,
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(bad(format!("{name} must be positive and finite, got {v}")))
    }
}

impl SimConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: SimConfig = toml::from_str(s).map_err(|e| bad(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config is serializable")
    }

    /// Hex SHA-256 of the canonical serialization.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_toml_string().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let g = &self.grid;
        if !(1..=3).contains(&g.dim) {
            return Err(bad(format!("grid.dim must be 1, 2 or 3, got {}", g.dim)));
        }
        if g.points < MIN_POINTS {
            return Err(bad(format!("grid.points must be at least {MIN_POINTS}")));
        }
        if g.kind == GridKind::Periodic && !g.points.is_multiple_of(2) {
            return Err(bad("grid.points must be even on periodic grids"));
        }
        positive("grid.extent", g.extent)?;
        let t = &self.time;
        positive("time.dt", t.dt)?;
        positive("time.t_end", t.t_end)?;
        match (t.output_every, t.output_steps) {
            (Some(e), None) => {
                positive("time.output_every", e)?;
                if e < t.dt {
                    return Err(bad("time.output_every must be at least time.dt"));
                }
            }
            (None, Some(k)) => {
                if k == 0 {
                    return Err(bad("time.output_steps must be at least 1"));
                }
            }
            _ => return Err(bad("exactly one of time.output_every and time.output_steps is required")),
        }
        if let Some(s) = t.snapshot_every {
            positive("time.snapshot_every", s)?;
        }
        if !(self.stop.growth > 1.0) {
            return Err(bad("stop.growth must exceed 1"));
        }
        positive("stop.resolved_ratio", self.stop.resolved_ratio)?;
        for &l in &self.diagnostics.ell {
            if !(l.is_finite() && l >= -1.0) {
                return Err(bad(format!("diagnostics.ell entries must be >= -1, got {l}")));
            }
        }
        for &m in &self.diagnostics.modified_variance {
            positive("diagnostics.modified_variance entries", m)?;
        }
        match &self.initial {
            InitialSpec::Zero => {}
            InitialSpec::Gaussian { amplitude, width, n_coupling } => {
                positive("initial.width", *width)?;
                if !amplitude.is_finite() || !n_coupling.is_finite() {
                    return Err(bad("initial amplitude and n_coupling must be finite"));
                }
            }
            InitialSpec::MovingGaussian {
                amplitude,
                width,
                wavevector,
                center,
                n_coupling,
            } => {
                positive("initial.width", *width)?;
                if g.kind != GridKind::Periodic {
                    return Err(bad("moving-gaussian requires a periodic grid"));
                }
                if wavevector.len() != g.dim || !(center.is_empty() || center.len() == g.dim) {
                    return Err(bad("initial.wavevector and initial.center must have grid.dim entries"));
                }
                if !amplitude.is_finite() || !n_coupling.is_finite() {
                    return Err(bad("initial amplitude and n_coupling must be finite"));
                }
            }
            InitialSpec::SelfSimilar2d { a, t_star, theta, t0 } => {
                if g.dim != 2 {
                    return Err(bad("self-similar-2d requires grid.dim = 2"));
                }
                positive("initial.a", *a)?;
                if !theta.is_finite() || !(t0 < t_star) {
                    return Err(bad("initial.t0 must be before initial.t_star"));
                }
            }
            InitialSpec::SelfSimilar3d { k, t_star, t0 } => {
                if g.dim != 3 {
                    return Err(bad("self-similar-3d requires grid.dim = 3"));
                }
                if *k == 0 {
                    return Err(bad("initial.k must be at least 1"));
                }
                if !(t0 < t_star) {
                    return Err(bad("initial.t0 must be before initial.t_star"));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOOD: &str = r#"
[grid]
kind = "radial"
dim = 2
extent = 12.0
points = 400

[time]
dt = 1e-3
t_end = 0.5
output_every = 0.01

[initial]
family = "gaussian"
amplitude = 1.0
width = 1.0
"#;

    #[test]
    fn parses_and_hashes_stably() {
        let c = SimConfig::from_toml_str(GOOD).unwrap();
        assert!(c.time.adaptive);
        assert_eq!(c.stop.growth, 1e3);
        assert_eq!(c.diagnostics.modified_variance, vec![4.0, 8.0, 16.0]);
        let again = SimConfig::from_toml_str(&c.to_toml_string()).unwrap();
        assert_eq!(c, again);
        assert_eq!(c.hash(), again.hash());
        assert_eq!(c.hash().len(), 64);
    }

    #[test]
    fn family_names_round_trip() {
        let two = GOOD.replace("family = \"gaussian\"\namplitude = 1.0\nwidth = 1.0", "family = \"self-similar-2d\"\na = 0.3\nt_star = 1.0");
        let c = SimConfig::from_toml_str(&two).unwrap();
        assert_eq!(c.initial.name(), "self-similar-2d");
        assert_eq!(c.initial.t_star(), Some(1.0));
        assert!(c.to_toml_string().contains("family = \"self-similar-2d\""));
        let three = GOOD.replace("dim = 2", "dim = 3").replace("family = \"gaussian\"\namplitude = 1.0\nwidth = 1.0", "family = \"self-similar-3d\"\nk = 1\nt_star = 1.0");
        assert_eq!(SimConfig::from_toml_str(&three).unwrap().initial.name(), "self-similar-3d");
    }

    #[test]
    fn rejects_unknown_keys() {
        let s = GOOD.replace("points = 400", "points = 400\nspacing = 0.1");
        assert!(matches!(SimConfig::from_toml_str(&s), Err(Error::Config(_))));
        let s = GOOD.replace("width = 1.0", "width = 1.0\ncolour = 3");
        assert!(SimConfig::from_toml_str(&s).is_err());
    }

    #[test]
    fn rejects_bad_values() {
        for (from, to) in [
            ("dt = 1e-3", "dt = -1e-3"),
            ("points = 400", "points = 8"),
            ("dim = 2", "dim = 4"),
            ("width = 1.0", "width = 0.0"),
            ("output_every = 0.01", "output_every = 0.01\noutput_steps = 3"),
            ("output_every = 0.01", "output_steps = 0"),
        ] {
            let s = GOOD.replace(from, to);
            assert!(SimConfig::from_toml_str(&s).is_err(), "{to}");
        }
    }
}
