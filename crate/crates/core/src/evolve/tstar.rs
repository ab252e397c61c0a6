//! Singular-time and blowup-rate fits.

use serde::Serialize;

use crate::diagnostics::DiagnosticSeries;
use crate::error::{Error, Result};
use crate::fit::{golden_min, linear_fit};

/// Result of a blowup fit `y ≈ C (t* - t)^{-exponent}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlowupFit {
    pub t_star: f64,
    pub exponent: f64,
    pub amplitude: f64,
    /// RMS of the log-log residuals.
    pub residual: f64,
    pub window: (f64, f64),
}

const MIN_SAMPLES: usize = 4;

/// Smallest growth of `‖∇ψ‖` over the fit window accepted as blowup.
const MIN_GROWTH: f64 = 2.0;

/// Index range `[start, len)` of the final decade of growth of `y`: the
/// longest tail on which `y` stays above `y_last / factor`.
pub fn growth_window(y: &[f64], factor: f64) -> usize {
    let last = *y.last().unwrap_or(&0.0);
    let floor = last / factor;
    let mut start = y.len();
    while start > 0 && y[start - 1] >= floor {
        start -= 1;
    }
    start
}

/// `-slope` of `ln y` against `ln(t* - t)`, with the log-log fit.
pub fn fit_exponent(t: &[f64], y: &[f64], t_star: f64) -> Result<BlowupFit> {
    let mut lx = Vec::with_capacity(t.len());
    let mut ly = Vec::with_capacity(t.len());
    for (&ti, &yi) in t.iter().zip(y) {
        if ti < t_star && yi > 0.0 {
            lx.push((t_star - ti).ln());
            ly.push(yi.ln());
        }
    }
    if lx.len() < MIN_SAMPLES {
        return Err(Error::TooFewSamples {
            needed: MIN_SAMPLES,
            have: lx.len(),
        });
    }
    let f = linear_fit(&lx, &ly)?;
    Ok(BlowupFit {
        t_star,
        exponent: -f.slope,
        amplitude: f.intercept.exp(),
        residual: f.rms,
        window: (t[0], *t.last().expect("nonempty")),
    })
}

/// Fits `y ≈ C (t* - t)^{-p}` with `t*` chosen to make the log-log relation
/// most nearly linear. Uses the whole input; callers pick the window.
pub fn fit_power_law(t: &[f64], y: &[f64]) -> Result<BlowupFit> {
    if t.len() < MIN_SAMPLES {
        return Err(Error::TooFewSamples {
            needed: MIN_SAMPLES,
            have: t.len(),
        });
    }
    let last = *t.last().expect("nonempty");
    let span = last - t[0];
    if !(span > 0.0) {
        return Err(Error::FitRefused("window has zero length".into()));
    }
    let rss = |ts: f64| fit_exponent(t, y, ts).map(|f| f.residual).unwrap_or(f64::INFINITY);
    let lo = last + 1e-9 * span;
    let hi = last + 2.0 * span;
    let ts = golden_min(rss, lo, hi, 1e-13 * span.max(last.abs()));
    fit_exponent(t, y, ts)
}

fn check_monotone(t: &[f64], g: &[f64]) -> Result<()> {
    if let Some(i) = (1..g.len()).find(|&i| !(g[i] > g[i - 1])) {
        return Err(Error::FitRefused(format!(
            "grad-psi-L2 is not increasing at t = {}",
            t[i]
        )));
    }
    Ok(())
}

/// Last decade of growth of `‖∇ψ‖`, checked to be increasing and to at
/// least double.
fn growth_tail(series: &DiagnosticSeries) -> Result<(Vec<f64>, Vec<f64>)> {
    let t = series.column("t")?;
    let g = series.column("grad-psi-L2")?;
    let start = growth_window(&g, 10.0);
    let (tw, gw) = (t[start..].to_vec(), g[start..].to_vec());
    if tw.len() < MIN_SAMPLES {
        return Err(Error::TooFewSamples {
            needed: MIN_SAMPLES,
            have: tw.len(),
        });
    }
    check_monotone(&tw, &gw)?;
    if gw[gw.len() - 1] < MIN_GROWTH * gw[0] {
        return Err(Error::NoBlowup);
    }
    Ok((tw, gw))
}

/// Singular time from the last decade of growth of `‖∇ψ‖`: `1/‖∇ψ‖` is fitted
/// linearly in `t` and `t*` is its zero; the exponent is the log-log slope of
/// `‖∇ψ‖` against `t* - t`. The window must at least double.
pub fn estimate_tstar(series: &DiagnosticSeries) -> Result<BlowupFit> {
    let (tw, gw) = growth_tail(series)?;
    let inv: Vec<f64> = gw.iter().map(|v| 1.0 / v).collect();
    let f = linear_fit(&tw, &inv)?;
    if !(f.slope < 0.0) {
        return Err(Error::NoBlowup);
    }
    let t_star = -f.intercept / f.slope;
    let last = *tw.last().expect("nonempty");
    if !(t_star > last) {
        return Err(Error::FitRefused(format!(
            "fitted t* = {t_star} does not lie after the window"
        )));
    }
    fit_exponent(&tw, &gw, t_star)
}

/// As [`estimate_tstar`] but with a free exponent: `t*` and the exponent come
/// from [`fit_power_law`] on the same window. Used where `‖∇ψ‖` does not grow
/// like `(t* - t)^{-1}`, as for the 3D profiles (`-2/3`).
pub fn estimate_tstar_power_law(series: &DiagnosticSeries) -> Result<BlowupFit> {
    let (tw, gw) = growth_tail(series)?;
    fit_power_law(&tw, &gw)
}

/// [`estimate_tstar`] in 2D, [`estimate_tstar_power_law`] otherwise.
pub fn estimate_tstar_for_dim(series: &DiagnosticSeries, dim: usize) -> Result<BlowupFit> {
    if dim == 2 {
        estimate_tstar(series)
    } else {
        estimate_tstar_power_law(series)
    }
}
