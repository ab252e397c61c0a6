use serde::Serialize;

use super::{initial_state, Stepper, WaveState};
use crate::config::SimConfig;
use crate::diagnostics::{boundary_ratio, resolution_ratio, rms_width, DiagnosticSeries, SeriesLayout};
use crate::error::Result;
use crate::grid::GridKind;
use crate::spectral::dirichlet_energy;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    EndTime,
    /// `‖∇ψ‖` exceeded the configured multiple of its initial value.
    GrowthThreshold,
    /// Neighbouring nodes of `ψ` differ by more than the configured fraction
    /// of `max|ψ|`.
    Underresolved,
    /// A step produced NaN or Inf; the last finite state is kept.
    NonFinite,
    MaxSteps,
}

impl StopReason {
    pub fn name(self) -> &'static str {
        match self {
            StopReason::EndTime => "end-time",
            StopReason::GrowthThreshold => "growth-threshold",
            StopReason::Underresolved => "underresolved",
            StopReason::NonFinite => "non-finite",
            StopReason::MaxSteps => "max-steps",
        }
    }

    /// Stops that signal a collapse rather than the end of the run.
    pub fn is_blowup(self) -> bool {
        matches!(
            self,
            StopReason::GrowthThreshold | StopReason::Underresolved | StopReason::NonFinite
        )
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub series: DiagnosticSeries,
    pub layout: SeriesLayout,
    /// States at the snapshot times, in order.
    pub snapshots: Vec<WaveState>,
    pub final_state: WaveState,
    pub stop: StopReason,
    pub steps: usize,
    pub warnings: Vec<String>,
}

const DEFAULT_MAX_STEPS: usize = 100_000_000;
/// `|ψ|` at the boundary above this fraction of `max|ψ|` triggers a warning.
const BOUNDARY_WARNING: f64 = 1e-3;

/// Runs the configuration from its initial condition.
pub fn run(config: &SimConfig) -> Result<RunOutput> {
    let state = initial_state(config)?;
    run_from(config, state)
}

fn layout_for(config: &SimConfig, state: &WaveState) -> SeriesLayout {
    let grid = state.grid();
    let width = rms_width(&state.psi);
    let modified_variance = if grid.kind() == GridKind::Radial && width > 0.0 {
        config
            .diagnostics
            .modified_variance
            .iter()
            .map(|&k| (k, k * width))
            .collect()
    } else {
        Vec::new()
    };
    SeriesLayout {
        kind: grid.kind(),
        dim: grid.dim(),
        ell: config.diagnostics.ell.clone(),
        variance: config.diagnostics.variance,
        modified_variance,
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

/// Runs the configuration from a given state.
pub fn run_from(config: &SimConfig, initial: WaveState) -> Result<RunOutput> {
    config.validate()?;
    let layout = layout_for(config, &initial);
    let mut series = DiagnosticSeries::new(layout.columns());
    let stepper = Stepper::new(initial.grid().clone());
    let time = &config.time;
    let max_steps = time.max_steps.unwrap_or(DEFAULT_MAX_STEPS);
    let t0 = initial.t;
    let g0 = dirichlet_energy(&initial.psi).max(0.0).sqrt();
    let threshold = if g0 > 0.0 {
        config.stop.growth * g0
    } else {
        f64::INFINITY
    };
    let mut warnings = Vec::new();
    let mut snapshots = Vec::new();
    let mut state = initial;
    let record = |s: &WaveState, series: &mut DiagnosticSeries, warnings: &mut Vec<String>| -> Result<()> {
        series.push(layout.sample(s)?)?;
        if warnings.is_empty() && boundary_ratio(&s.psi) > BOUNDARY_WARNING {
            warnings.push(format!("field has not decayed at the boundary at t = {}", s.t));
        }
        Ok(())
    };
    record(&state, &mut series, &mut warnings)?;
    let mut out_index = 1usize;
    let mut snap_index = 1usize;
    if time.snapshot_every.is_some() {
        snapshots.push(state.clone());
    }
    let mut steps = 0usize;
    let mut g = g0;
    let stop = loop {
        if state.t >= time.t_end || close(state.t, time.t_end) {
            break StopReason::EndTime;
        }
        if steps >= max_steps {
            break StopReason::MaxSteps;
        }
        let mut dt = time.dt;
        if time.adaptive && g0 > 0.0 && g > g0 {
            dt *= (g0 / g) * (g0 / g);
        }
        let next_out = time.output_every.map(|e| t0 + out_index as f64 * e);
        let next_snap = time.snapshot_every.map(|e| t0 + snap_index as f64 * e);
        let mut targets = vec![time.t_end];
        targets.extend(next_out);
        targets.extend(next_snap);
        let target = targets.iter().cloned().fold(f64::INFINITY, f64::min);
        if state.t + dt >= target || close(state.t + dt, target) {
            dt = target - state.t;
        }
        let previous = state.clone();
        stepper.advance(&mut state, dt);
        steps += 1;
        if close(state.t, target) {
            state.t = target;
        }
        if !state.is_finite() {
            state = previous;
            break StopReason::NonFinite;
        }
        g = dirichlet_energy(&state.psi).max(0.0).sqrt();
        let sample = match (next_out, time.output_steps) {
            (Some(t_out), _) => state.t == t_out,
            (None, Some(k)) => steps.is_multiple_of(k),
            _ => false,
        };
        if sample {
            record(&state, &mut series, &mut warnings)?;
            out_index += 1;
        }
        if next_snap == Some(state.t) {
            snapshots.push(state.clone());
            snap_index += 1;
        }
        if g > threshold {
            break StopReason::GrowthThreshold;
        }
        if resolution_ratio(&state.psi) > config.stop.resolved_ratio {
            break StopReason::Underresolved;
        }
    };
    Ok(RunOutput {
        series,
        layout,
        snapshots,
        final_state: state,
        stop,
        steps,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(extra: &str, initial: &str) -> SimConfig {
        let s = format!(
            r#"
[grid]
kind = "radial"
dim = 2
extent = 12.0
points = 240

[time]
dt = 0.01
t_end = 0.2
{extra}

[initial]
{initial}
"#
        );
        SimConfig::from_toml_str(&s).unwrap()
    }

    #[test]
    fn zero_data_gives_zero_diagnostics() {
        let out = run(&config("output_every = 0.05", "family = \"zero\"")).unwrap();
        assert_eq!(out.stop, StopReason::EndTime);
        assert_eq!(out.series.len(), 5);
        for row in out.series.rows() {
            assert!(row[1..].iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn samples_land_on_cadence() {
        let out = run(&config(
            "output_every = 0.03\nsnapshot_every = 0.1",
            "family = \"gaussian\"\namplitude = 0.5\nwidth = 1.0",
        ))
        .unwrap();
        let t = out.series.column("t").unwrap();
        assert_eq!(t.len(), 7);
        for (i, ti) in t.iter().enumerate() {
            assert_eq!(*ti, i as f64 * 0.03);
        }
        assert_eq!(out.final_state.t, 0.2);
        assert_eq!(out.snapshots.len(), 3);
        assert_eq!(out.snapshots[2].t, 0.2);
    }

    #[test]
    fn step_cadence_counts_steps() {
        let out = run(&config(
            "output_steps = 4",
            "family = \"gaussian\"\namplitude = 0.5\nwidth = 1.0",
        ))
        .unwrap();
        assert_eq!(out.steps, 20);
        assert_eq!(out.series.len(), 6);
    }

    #[test]
    fn identical_runs_are_bitwise_equal() {
        let c = config("output_every = 0.05", "family = \"gaussian\"\namplitude = 1.0\nwidth = 1.0\nn_coupling = 1.0");
        let a = run(&c).unwrap();
        let b = run(&c).unwrap();
        assert_eq!(a.series, b.series);
    }
}
