use std::sync::Arc;

use num_complex::Complex64;

use super::WaveState;
use crate::config::{InitialSpec, SimConfig};
use crate::error::{Error, Result};
use crate::grid::{ComplexField, Grid, RealField};
use crate::profiles::{find_profile_2d, find_profile_3d, Family, ProfileSolution};

/// Tolerance used when an initial condition needs a profile.
const PROFILE_TOL: f64 = 1e-10;

/// `ψ = A exp(-|x|²/(2w²))`, `n = -c|ψ|²`, `n_t = 0`.
pub fn radial_gaussian(grid: Arc<Grid>, amplitude: f64, width: f64, n_coupling: f64) -> WaveState {
    let w2 = width * width;
    let psi = ComplexField::from_radial_fn(grid.clone(), |r| {
        Complex64::new(amplitude * (-r * r / (2.0 * w2)).exp(), 0.0)
    });
    let n = psi.map(|z| -n_coupling * z.norm_sqr());
    WaveState {
        t: 0.0,
        psi,
        n,
        nt: RealField::zeros(grid),
    }
}

/// `ψ = A exp(-|x - x0|²/(2w²) + i k·x)` on a periodic grid.
pub fn moving_gaussian(
    grid: Arc<Grid>,
    amplitude: f64,
    width: f64,
    wavevector: &[f64],
    center: &[f64],
    n_coupling: f64,
) -> Result<WaveState> {
    let geo = grid.periodic_or_err()?;
    let d = grid.dim();
    if wavevector.len() != d || !(center.is_empty() || center.len() == d) {
        return Err(Error::DimensionMismatch {
            field: wavevector.len(),
            requested: d,
        });
    }
    let w2 = width * width;
    let values = (0..grid.len())
        .map(|idx| {
            let x = grid.position(idx, geo);
            let mut r2 = 0.0;
            let mut phase = 0.0;
            for a in 0..d {
                let c = center.get(a).copied().unwrap_or(0.0);
                r2 += (x[a] - c) * (x[a] - c);
                phase += wavevector[a] * x[a];
            }
            Complex64::from_polar(amplitude * (-r2 / (2.0 * w2)).exp(), phase)
        })
        .collect();
    let psi = ComplexField::new(grid.clone(), values)?;
    let n = psi.map(|z| -n_coupling * z.norm_sqr());
    Ok(WaveState {
        t: 0.0,
        psi,
        n,
        nt: RealField::zeros(grid),
    })
}

fn check_profile(profile: &ProfileSolution, family: Family, grid: &Grid) -> Result<()> {
    if profile.family != family {
        return Err(Error::Unsupported(format!(
            "expected a {family} profile, got {}",
            profile.family
        )));
    }
    if grid.dim() != family.dim() {
        return Err(Error::DimensionMismatch {
            field: grid.dim(),
            requested: family.dim(),
        });
    }
    Ok(())
}

/// Samples the exact 2D self-similar solution at time `t`:
///
/// ```text
/// ψ = (aτ)⁻¹ P(r/(aτ)) exp(i(θ + 1/(a²τ) - r²/(4τ))),  n = N(r/(aτ))/(a²τ²)
/// ```
///
/// with `τ = t* - t`, and `n_t = (ηN'(η) + 2N(η))/(a²τ³)`.
pub fn self_similar_state_2d(
    grid: Arc<Grid>,
    profile: &ProfileSolution,
    a: f64,
    t: f64,
    t_star: f64,
    theta: f64,
) -> Result<WaveState> {
    check_profile(profile, Family::Family2d, &grid)?;
    if (profile.parameter - a).abs() > 1e-12 * a.abs().max(1.0) {
        return Err(Error::Unsupported(format!(
            "profile was computed for a = {}, not a = {a}",
            profile.parameter
        )));
    }
    if !(a > 0.0) {
        return Err(Error::Unsupported("the 2D self-similar solution needs a > 0".into()));
    }
    let tau = t_star - t;
    if !(tau > 0.0) {
        return Err(Error::PastSingularTime { t, t_star });
    }
    let l = a * tau;
    let radii = grid.radii();
    let mut psi = Vec::with_capacity(radii.len());
    let mut n = Vec::with_capacity(radii.len());
    let mut nt = Vec::with_capacity(radii.len());
    for &r in &radii {
        let eta = r / l;
        let [p, _, nn, dn] = profile.eval(eta);
        let phase = theta + 1.0 / (a * a * tau) - r * r / (4.0 * tau);
        psi.push(Complex64::from_polar(p / l, phase));
        n.push(nn / (l * l));
        nt.push((eta * dn + 2.0 * nn) / (l * l * tau));
    }
    WaveState::new(
        t,
        ComplexField::new(grid.clone(), psi)?,
        RealField::new(grid.clone(), n)?,
        RealField::new(grid, nt)?,
    )
}

/// Samples the leading-order 3D self-similar form at time `t`:
///
/// ```text
/// ψ = τ⁻¹ P(η) exp(i τ^{-1/3}),  n = N(η)/(3τ^{4/3}),  η = r/(√3 τ^{2/3})
/// ```
///
/// with `n_t = τ^{-7/3}(4N + 2ηN')/9`.
pub fn self_similar_state_3d(
    grid: Arc<Grid>,
    profile: &ProfileSolution,
    t: f64,
    t_star: f64,
) -> Result<WaveState> {
    check_profile(profile, Family::Ladder3d, &grid)?;
    let tau = t_star - t;
    if !(tau > 0.0) {
        return Err(Error::PastSingularTime { t, t_star });
    }
    let l = 3f64.sqrt() * tau.powf(2.0 / 3.0);
    let amp = 1.0 / tau;
    let phase = tau.powf(-1.0 / 3.0);
    let n_scale = 1.0 / (3.0 * tau.powf(4.0 / 3.0));
    let nt_scale = tau.powf(-7.0 / 3.0) / 9.0;
    let radii = grid.radii();
    let mut psi = Vec::with_capacity(radii.len());
    let mut n = Vec::with_capacity(radii.len());
    let mut nt = Vec::with_capacity(radii.len());
    for &r in &radii {
        let eta = r / l;
        let [p, _, nn, dn] = profile.eval(eta);
        psi.push(Complex64::from_polar(amp * p, phase));
        n.push(n_scale * nn);
        nt.push(nt_scale * (4.0 * nn + 2.0 * eta * dn));
    }
    WaveState::new(
        t,
        ComplexField::new(grid.clone(), psi)?,
        RealField::new(grid.clone(), n)?,
        RealField::new(grid, nt)?,
    )
}

/// Builds the grid and initial state described by a configuration.
pub fn initial_state(config: &SimConfig) -> Result<WaveState> {
    config.validate()?;
    let grid = config.grid.build()?;
    match &config.initial {
        InitialSpec::Zero => Ok(WaveState::zeros(grid)),
        InitialSpec::Gaussian {
            amplitude,
            width,
            n_coupling,
        } => Ok(radial_gaussian(grid, *amplitude, *width, *n_coupling)),
        InitialSpec::MovingGaussian {
            amplitude,
            width,
            wavevector,
            center,
            n_coupling,
        } => moving_gaussian(grid, *amplitude, *width, wavevector, center, *n_coupling),
        InitialSpec::SelfSimilar2d { a, t_star, theta, t0 } => {
            let profile = find_profile_2d(*a, PROFILE_TOL)?;
            self_similar_state_2d(grid, &profile, *a, *t0, *t_star, *theta)
        }
        InitialSpec::SelfSimilar3d { k, t_star, t0 } => {
            let profile = find_profile_3d(*k, PROFILE_TOL)?;
            self_similar_state_3d(grid, &profile, *t0, *t_star)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn self_similar_2d_center_values_and_scaling() {
        let a = 0.3;
        let prof = find_profile_2d(a, 1e-10).unwrap();
        let g = Grid::radial(2, 12.0, 2400).unwrap();
        let s1 = self_similar_state_2d(g.clone(), &prof, a, 0.0, 1.0, 0.0).unwrap();
        let s2 = self_similar_state_2d(g.clone(), &prof, a, 0.5, 1.0, 0.0).unwrap();
        // first node sits at h/2, so compare with the profile there
        let r0 = g.radii()[0];
        let p1 = prof.eval(r0 / a)[0] / a;
        assert!((s1.psi.values()[0].norm() - p1).abs() < 1e-12);
        let n1 = prof.eval(r0 / a)[2] / (a * a);
        assert!((s1.n.values()[0] - n1).abs() < 1e-10);
        // |ψ(0,t)| → P(0)/(a(t*-t)) as the node approaches the origin
        assert!((s1.psi.values()[0].norm() / (prof.p0 / a) - 1.0).abs() < 1e-4);
        let ratio = s2.psi.values()[0].norm() / s1.psi.values()[0].norm();
        assert!((ratio - 2.0).abs() < 1e-3);
        assert!(matches!(
            self_similar_state_2d(g, &prof, a, 1.0, 1.0, 0.0),
            Err(Error::PastSingularTime { .. })
        ));
    }

    #[test]
    fn self_similar_2d_time_derivative_matches_difference() {
        let a = 0.3;
        let prof = find_profile_2d(a, 1e-10).unwrap();
        let g = Grid::radial(2, 10.0, 500).unwrap();
        let h = 1e-5;
        let s = self_similar_state_2d(g.clone(), &prof, a, 0.2, 1.0, 0.0).unwrap();
        let sp = self_similar_state_2d(g.clone(), &prof, a, 0.2 + h, 1.0, 0.0).unwrap();
        let sm = self_similar_state_2d(g.clone(), &prof, a, 0.2 - h, 1.0, 0.0).unwrap();
        let scale = s.nt.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for i in 0..g.len() {
            let fd = (sp.n.values()[i] - sm.n.values()[i]) / (2.0 * h);
            assert!((fd - s.nt.values()[i]).abs() < 1e-4 * scale, "node {i}");
        }
    }

    #[test]
    fn self_similar_3d_time_derivative_matches_difference() {
        let prof = find_profile_3d(1, 1e-12).unwrap();
        let g = Grid::radial(3, 3.0, 600).unwrap();
        let h = 1e-6;
        let s = self_similar_state_3d(g.clone(), &prof, 0.0, 0.5).unwrap();
        let sp = self_similar_state_3d(g.clone(), &prof, h, 0.5).unwrap();
        let sm = self_similar_state_3d(g.clone(), &prof, -h, 0.5).unwrap();
        let scale = s.nt.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for i in 0..g.len() {
            let fd = (sp.n.values()[i] - sm.n.values()[i]) / (2.0 * h);
            assert!((fd - s.nt.values()[i]).abs() < 1e-4 * scale, "node {i}");
        }
        assert!(self_similar_state_3d(g, &prof, 0.5, 0.5).is_err());
    }

    #[test]
    fn moving_gaussian_needs_periodic_grid() {
        let g = Grid::radial(2, 5.0, 32).unwrap();
        assert!(moving_gaussian(g, 1.0, 1.0, &[1.0, 0.0], &[], 0.0).is_err());
        let g = Grid::periodic(2, 10.0, 32).unwrap();
        let s = moving_gaussian(g, 1.0, 1.0, &[1.0, 0.0], &[], 0.0).unwrap();
        assert!((s.psi.values().iter().map(|z| z.norm()).fold(0.0, f64::max) - 1.0).abs() < 0.05);
    }
}
