//! Variance identity and modified variance on radial grids.
//!
//! ```text
//! V  = ¼∫|x|²|ψ|² + ∫₀ᵗ∫(x·v) n
//! V'' = dH - (d-2)‖∇ψ‖² - (d-1)‖v‖²
//! ```
//!
//! `V''` is formed from samples as `W'' + g'` with `W = ¼∫|x|²|ψ|²` and
//! `g = ∫(x·v) n`, which is the second difference of `V` when the time
//! integral is taken by the trapezoid rule.

use num_complex::Complex64;

use super::{face_radii, face_sum, hamiltonian, radial_flow, velocity_energy, DiagnosticSeries};
use crate::error::{Error, Result};
use crate::evolve::WaveState;
use crate::spectral::dirichlet_energy;

/// Per-sample ingredients of the variance identity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarianceTerms {
    pub w: f64,
    pub g: f64,
    pub rhs: f64,
}

/// `(f_j + f_{j+1})/2` at the outer face of each cell, with the Dirichlet
/// ghost at `r_max`.
fn face_average(f: &[f64]) -> Vec<f64> {
    let m = f.len();
    (0..m)
        .map(|j| if j + 1 < m { 0.5 * (f[j] + f[j + 1]) } else { 0.0 })
        .collect()
}

/// `Im(ψ_j* ψ_{j+1}) / h`, the radial current at each outer face.
fn face_current(psi: &[Complex64], h: f64) -> Vec<f64> {
    let m = psi.len();
    (0..m)
        .map(|j| if j + 1 < m { (psi[j].conj() * psi[j + 1]).im / h } else { 0.0 })
        .collect()
}

pub fn variance_terms(state: &WaveState) -> Result<VarianceTerms> {
    let grid = state.grid();
    let geo = grid.radial_or_err()?;
    let d = grid.dim() as f64;
    let h = grid.spacing();
    let w: f64 = state
        .psi
        .values()
        .iter()
        .zip(&geo.nodes)
        .zip(&geo.volume)
        .map(|((z, r), v)| 0.25 * r * r * z.norm_sqr() * v)
        .sum::<f64>()
        * geo.sphere_area;
    let flow = radial_flow(&state.nt)?;
    let nf = face_average(state.n.values());
    let rf = face_radii(grid);
    let g = face_sum(geo, h, |j| rf[j] * flow.v_face[j] * nf[j]);
    let grad2 = dirichlet_energy(&state.psi);
    let v2 = velocity_energy(&state.nt)?;
    let rhs = d * hamiltonian(state)? - (d - 2.0) * grad2 - (d - 1.0) * v2;
    Ok(VarianceTerms { w, g, rhs })
}

/// `y_m = -∫∇p_m·Im(ψ*∇ψ) - ∫(∇p_m·v) n` with
/// `p_m(r) = 2m²(√(1 + r²/m²) - 1)`, so that `y_m = -U'` for
/// `U = ½∫p_m|ψ|² + ∫₀ᵗ∫(∇p_m·v) n`.
pub fn modified_variance_rate(state: &WaveState, m: f64) -> Result<f64> {
    let grid = state.grid();
    let geo = grid.radial_or_err()?;
    if !(m > 0.0 && m.is_finite()) {
        return Err(Error::Unsupported(format!("scale m must be positive, got {m}")));
    }
    let h = grid.spacing();
    let rf = face_radii(grid);
    let dp: Vec<f64> = rf
        .iter()
        .map(|&r| 2.0 * r / (1.0 + (r / m) * (r / m)).sqrt())
        .collect();
    let current = face_current(state.psi.values(), h);
    let flow = radial_flow(&state.nt)?;
    let nf = face_average(state.n.values());
    let a = face_sum(geo, h, |j| dp[j] * current[j]);
    let b = face_sum(geo, h, |j| dp[j] * flow.v_face[j] * nf[j]);
    Ok(-a - b)
}

/// Outcome of the variance-identity comparison on interior samples.
#[derive(Debug, Clone, PartialEq)]
pub struct VarianceCheck {
    /// `max|V'' - RHS| / max|RHS|`.
    pub residual: f64,
    pub times: Vec<f64>,
    pub d2v: Vec<f64>,
    pub rhs: Vec<f64>,
}

fn check(t: &[f64], terms: &[VarianceTerms]) -> Result<VarianceCheck> {
    const NEEDED: usize = 5;
    if t.len() < NEEDED {
        return Err(Error::TooFewSamples {
            needed: NEEDED,
            have: t.len(),
        });
    }
    let mut times = Vec::new();
    let mut d2v = Vec::new();
    let mut rhs = Vec::new();
    for i in 1..t.len() - 1 {
        let (dm, dp) = (t[i] - t[i - 1], t[i + 1] - t[i]);
        let (w0, w1, w2) = (terms[i - 1].w, terms[i].w, terms[i + 1].w);
        let wpp = 2.0 * ((w2 - w1) / dp - (w1 - w0) / dm) / (dp + dm);
        let gp = (terms[i + 1].g - terms[i - 1].g) / (dp + dm);
        times.push(t[i]);
        d2v.push(wpp + gp);
        rhs.push(terms[i].rhs);
    }
    let scale = rhs.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let err = d2v
        .iter()
        .zip(&rhs)
        .fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
    let residual = if scale > 0.0 {
        err / scale
    } else if err == 0.0 {
        0.0
    } else {
        return Err(Error::VanishingDenominator);
    };
    Ok(VarianceCheck {
        residual,
        times,
        d2v,
        rhs,
    })
}

/// Variance-identity residual from the `variance-*` columns of a series.
pub fn variance_identity_residual(series: &DiagnosticSeries) -> Result<VarianceCheck> {
    let t = series.column("t")?;
    let w = series.column("variance-w")?;
    let g = series.column("variance-g")?;
    let r = series.column("variance-rhs")?;
    let terms: Vec<VarianceTerms> = (0..t.len())
        .map(|i| VarianceTerms {
            w: w[i],
            g: g[i],
            rhs: r[i],
        })
        .collect();
    check(&t, &terms)
}

/// Variance-identity residual from stored states (consecutive samples).
pub fn variance_check_from_states(states: &[WaveState]) -> Result<VarianceCheck> {
    let t: Vec<f64> = states.iter().map(|s| s.t).collect();
    let terms = states.iter().map(variance_terms).collect::<Result<Vec<_>>>()?;
    check(&t, &terms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolve::{radial_gaussian, Stepper};
    use crate::grid::{ComplexField, Grid, RealField};

    #[test]
    fn zero_state_gives_zero_on_both_sides() {
        let g = Grid::radial(2, 8.0, 64).unwrap();
        let states: Vec<WaveState> = (0..6)
            .map(|i| {
                let mut s = WaveState::zeros(g.clone());
                s.t = i as f64 * 0.1;
                s
            })
            .collect();
        let c = variance_check_from_states(&states).unwrap();
        assert_eq!(c.residual, 0.0);
        assert!(c.d2v.iter().all(|&v| v == 0.0));
        assert!(matches!(
            variance_check_from_states(&states[..3]),
            Err(Error::TooFewSamples { .. })
        ));
    }

    #[test]
    fn free_gaussian_has_quadratic_variance() {
        // free 2D Gaussian e^{-r²/2}: W = ¼∫r²|ψ|² = (π/4)(1 + 4t²), so
        // W'' = 2π = dH with H = π
        let g = Grid::radial(2, 30.0, 6000).unwrap();
        let exact = |r: f64, t: f64| {
            let s = Complex64::new(1.0, 2.0 * t);
            (-r * r / (2.0 * s)).exp() / s
        };
        let states: Vec<WaveState> = (0..7)
            .map(|i| {
                let t = 0.1 * i as f64;
                let psi = ComplexField::from_radial_fn(g.clone(), |r| exact(r, t));
                let mut s = WaveState::new(t, psi, RealField::zeros(g.clone()), RealField::zeros(g.clone())).unwrap();
                s.t = t;
                s
            })
            .collect();
        let c = variance_check_from_states(&states).unwrap();
        assert!(c.residual < 1e-3, "{}", c.residual);
        let pi = std::f64::consts::PI;
        assert!((c.rhs[0] - 2.0 * pi).abs() < 1e-3);
    }

    #[test]
    fn real_field_without_flow_has_zero_rate() {
        let g = Grid::radial(3, 10.0, 400).unwrap();
        let s = radial_gaussian(g, 1.0, 1.0, 1.0);
        assert_eq!(modified_variance_rate(&s, 4.0).unwrap(), 0.0);
    }

    #[test]
    fn large_m_rate_matches_minus_twice_variance_derivative() {
        let g = Grid::radial(2, 15.0, 1500).unwrap();
        let mut s = radial_gaussian(g.clone(), 1.5, 1.0, 0.5);
        let st = Stepper::new(g);
        for _ in 0..20 {
            st.advance(&mut s, 0.005);
        }
        let dt = 1e-4;
        let mut a = s.clone();
        let mut b = s.clone();
        st.advance(&mut b, dt);
        let w0 = variance_terms(&a).unwrap();
        let w1 = variance_terms(&b).unwrap();
        let dv = (w1.w - w0.w) / dt + 0.5 * (w0.g + w1.g);
        st.advance(&mut a, 0.5 * dt);
        let y = modified_variance_rate(&a, 1e8).unwrap();
        assert!((y + 2.0 * dv).abs() < 1e-4 * y.abs().max(1.0), "{y} {dv}");
    }
}
