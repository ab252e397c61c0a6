//! Conserved quantities, variance identities and inequality checks.
//!
//! On radial grids the velocity lives on cell faces: with `ΔU = n_t`,
//! `v_j = -(U_{j+1} - U_j)/h` at `r = (j + 1)h`, so that the discrete
//! divergence of `v` is exactly `-n_t` and `‖v‖² = -⟨U, ΔU⟩`.

mod checks;
mod report;
mod series;
mod variance;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::evolve::WaveState;
use crate::grid::{ComplexField, Grid, GridKind, PeriodicGeometry, RadialGeometry, RealField, Scalar};
use crate::spectral::{dirichlet_energy, gradient, invert_laplacian, mass, sobolev_seminorm, MEAN_TOLERANCE};

pub use checks::{rate_bound_check, RATE_MARGIN, strauss_ratio, theta_bound, vector_symbol_check, RateReport, SymbolCheck};
pub use report::{conservation_drifts, Drift, RunReport};
pub use series::{DiagnosticSeries, SeriesLayout};
pub use variance::{
    modified_variance_rate, variance_check_from_states, variance_identity_residual, variance_terms,
    VarianceCheck, VarianceTerms,
};

/// Radial velocity `v_r` at the outer face of each cell.
pub(crate) struct RadialFlow {
    pub v_face: Vec<f64>,
}

/// Differences across the outer face of each cell with the Dirichlet ghost
/// `f_M = -f_{M-1}`.
pub(crate) fn face_differences<T: Scalar>(f: &[T], h: f64) -> Vec<T> {
    let m = f.len();
    (0..m)
        .map(|j| {
            let next = if j + 1 < m { f[j + 1] } else { f[j] * -1.0 };
            (next - f[j]) * (1.0 / h)
        })
        .collect()
}

pub(crate) fn radial_flow(nt: &RealField) -> Result<RadialFlow> {
    let d = nt.dim();
    let u = invert_laplacian(nt, d)?;
    let h = nt.grid().spacing();
    let v_face = face_differences(u.values(), h).into_iter().map(|x| -x).collect();
    Ok(RadialFlow { v_face })
}

/// `r` at the outer face of each cell.
pub(crate) fn face_radii(grid: &Grid) -> Vec<f64> {
    let h = grid.spacing();
    (0..grid.points()).map(|j| (j + 1) as f64 * h).collect()
}

/// `S_d Σ_j A_j h w_j`, the face quadrature.
pub(crate) fn face_sum(geo: &RadialGeometry, h: f64, w: impl Fn(usize) -> f64) -> f64 {
    let s: f64 = geo.face_area.iter().enumerate().map(|(j, a)| a * h * w(j)).sum();
    s * geo.sphere_area
}

fn check_zero_mean(f: &RealField) -> Result<()> {
    let n = f.values().len() as f64;
    let mean = f.values().iter().sum::<f64>() / n;
    let scale = f.values().iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if mean.abs() > MEAN_TOLERANCE * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::NonzeroMean { mean: mean.abs() });
    }
    Ok(())
}

/// `v = -∇(Δ⁻¹ n_t)`. Periodic grids give the Cartesian components; radial
/// grids give the single component `v_r` at the nodes (averaged from the
/// faces, zero flux through the origin).
pub fn recover_velocity(nt: &RealField) -> Result<Vec<RealField>> {
    let grid = nt.grid();
    match grid.kind() {
        GridKind::Radial => {
            let flow = radial_flow(nt)?;
            let vr = (0..flow.v_face.len())
                .map(|j| {
                    let inner = if j == 0 { 0.0 } else { flow.v_face[j - 1] };
                    0.5 * (inner + flow.v_face[j])
                })
                .collect();
            Ok(vec![RealField::new(grid.clone(), vr)?])
        }
        GridKind::Periodic => {
            check_zero_mean(nt)?;
            let u = invert_laplacian(nt, grid.dim())?;
            Ok(gradient(&u)?
                .into_iter()
                .map(|c| c.map(|x: f64| -x))
                .collect())
        }
    }
}

/// `‖v‖²_{L²}`.
pub fn velocity_energy(nt: &RealField) -> Result<f64> {
    match nt.grid().kind() {
        GridKind::Radial => {
            let u = invert_laplacian(nt, nt.dim())?;
            Ok(dirichlet_energy(&u))
        }
        GridKind::Periodic => {
            check_zero_mean(nt)?;
            let s = sobolev_seminorm(nt, -1.0)?;
            Ok(s * s)
        }
    }
}

/// `H = ∫ |∇ψ|² + n|ψ|² + ½|v|² + ½n²`.
pub fn hamiltonian(state: &WaveState) -> Result<f64> {
    let kinetic = dirichlet_energy(&state.psi);
    let w = state.grid().weights();
    let coupling: f64 = state
        .psi
        .values()
        .iter()
        .zip(state.n.values())
        .zip(&w)
        .map(|((z, n), w)| n * z.norm_sqr() * w)
        .sum();
    let v2 = velocity_energy(&state.nt)?;
    Ok(kinetic + coupling + 0.5 * v2 + 0.5 * mass(&state.n))
}

/// Linear momentum `P` and angular momentum `M = ∫ x × P`.
#[derive(Debug, Clone, Copy, PartialEq, Default, serde::Serialize)]
pub struct Momenta {
    pub linear: [f64; 3],
    /// In 2D only the third component is used.
    pub angular: [f64; 3],
}

fn complex_gradient(grid: &Grid, geo: &PeriodicGeometry, f: &ComplexField) -> Vec<Vec<Complex64>> {
    let d = grid.dim();
    let m = grid.points();
    let mut hat = f.values().to_vec();
    geo.forward(&mut hat, d);
    (0..d)
        .map(|axis| {
            let stride = m.pow((d - 1 - axis) as u32);
            let mut comp: Vec<Complex64> = hat
                .iter()
                .enumerate()
                .map(|(idx, v)| {
                    let i = (idx / stride) % m;
                    if i == m / 2 {
                        Complex64::default()
                    } else {
                        v * Complex64::new(0.0, geo.wavenumbers[i])
                    }
                })
                .collect();
            geo.inverse(&mut comp, d);
            comp
        })
        .collect()
}

/// `P = ∫ Im(ψ*∇ψ) + n v` and `M = ∫ x × P`; identically zero on radial
/// grids.
pub fn momenta(state: &WaveState) -> Result<Momenta> {
    let grid = state.grid();
    if grid.kind() == GridKind::Radial {
        return Ok(Momenta::default());
    }
    let geo = grid.periodic_or_err()?;
    let d = grid.dim();
    let dpsi = complex_gradient(grid, geo, &state.psi);
    let v = recover_velocity(&state.nt)?;
    let cell = grid.spacing().powi(d as i32);
    let mut out = Momenta::default();
    for idx in 0..grid.len() {
        let z = state.psi.values()[idx];
        let n = state.n.values()[idx];
        let mut p = [0.0; 3];
        for a in 0..d {
            p[a] = (z.conj() * dpsi[a][idx]).im + n * v[a].values()[idx];
            out.linear[a] += p[a] * cell;
        }
        let x = grid.position(idx, geo);
        let cross = [
            x[1] * p[2] - x[2] * p[1],
            x[2] * p[0] - x[0] * p[2],
            x[0] * p[1] - x[1] * p[0],
        ];
        for a in 0..3 {
            out.angular[a] += cross[a] * cell;
        }
    }
    Ok(out)
}

/// `max |ψ|`.
pub fn sup_norm(f: &ComplexField) -> f64 {
    f.values().iter().fold(0.0f64, |a, z| a.max(z.norm_sqr())).sqrt()
}

/// Root-mean-square radius `(∫|x|²|ψ|² / ∫|ψ|²)^{1/2}`.
pub fn rms_width(f: &ComplexField) -> f64 {
    let grid = f.grid();
    let w = grid.weights();
    let r = grid.radii();
    let (mut num, mut den) = (0.0, 0.0);
    for ((z, w), r) in f.values().iter().zip(&w).zip(&r) {
        let a = z.norm_sqr() * w;
        num += a * r * r;
        den += a;
    }
    if den == 0.0 {
        0.0
    } else {
        (num / den).sqrt()
    }
}

/// Largest jump of `ψ` between neighbouring nodes relative to `max|ψ|`; a
/// resolution indicator (`|∇ψ|·h / |ψ|`).
pub fn resolution_ratio(f: &ComplexField) -> f64 {
    let grid = f.grid();
    let sup = sup_norm(f);
    if sup == 0.0 {
        return 0.0;
    }
    let v = f.values();
    let jump = match grid.kind() {
        GridKind::Radial => v.windows(2).map(|w| (w[1] - w[0]).norm_sqr()).fold(0.0, f64::max).sqrt(),
        GridKind::Periodic => {
            let m = grid.points();
            let d = grid.dim();
            let mut best = 0.0f64;
            for axis in 0..d {
                let stride = m.pow((d - 1 - axis) as u32);
                for idx in 0..v.len() {
                    let i = (idx / stride) % m;
                    let next = if i + 1 == m { idx + stride - m * stride } else { idx + stride };
                    best = best.max((v[next] - v[idx]).norm_sqr());
                }
            }
            best.sqrt()
        }
    };
    jump / sup
}

/// `|ψ|` on the outer boundary relative to `max|ψ|`.
pub fn boundary_ratio(f: &ComplexField) -> f64 {
    let grid = f.grid();
    let sup = sup_norm(f);
    if sup == 0.0 {
        return 0.0;
    }
    let edge = match grid.kind() {
        GridKind::Radial => f.values().last().map(|z| z.norm()).unwrap_or(0.0),
        GridKind::Periodic => {
            let m = grid.points();
            let d = grid.dim();
            let mut best = 0.0f64;
            for (idx, z) in f.values().iter().enumerate() {
                let on_edge = (0..d).any(|axis| {
                    let stride = m.pow((d - 1 - axis) as u32);
                    (idx / stride).is_multiple_of(m)
                });
                if on_edge {
                    best = best.max(z.norm());
                }
            }
            best
        }
    };
    edge / sup
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolve::{moving_gaussian, radial_gaussian};
    use crate::spectral::laplacian;

    #[test]
    fn zero_state_has_zero_energy() {
        let g = Grid::radial(2, 8.0, 64).unwrap();
        let s = WaveState::zeros(g);
        assert_eq!(hamiltonian(&s).unwrap(), 0.0);
        assert_eq!(momenta(&s).unwrap(), Momenta::default());
    }

    #[test]
    fn hamiltonian_matches_substituted_quadrature() {
        // n = -|ψ|², v = 0: H = ∫|∇ψ|² - ½∫|ψ|⁴; for ψ = A e^{-r²/2} in 2D,
        // ∫|∇ψ|² = πA², ∫|ψ|⁴ = πA⁴/2
        let g = Grid::radial(2, 12.0, 6000).unwrap();
        let a = 1.3f64;
        let s = radial_gaussian(g, a, 1.0, 1.0);
        let pi = std::f64::consts::PI;
        let oracle = pi * a * a - 0.25 * pi * a.powi(4);
        let h = hamiltonian(&s).unwrap();
        assert!((h - oracle).abs() < 1e-5 * oracle.abs(), "{h} {oracle}");
    }

    #[test]
    fn velocity_of_known_potential() {
        let g = Grid::periodic(2, 16.0, 64).unwrap();
        let u = RealField::from_radial_fn(g.clone(), |r| (-r * r).exp());
        let nt = laplacian(&u, 2).unwrap();
        let v = recover_velocity(&nt).unwrap();
        let du = gradient(&u).unwrap();
        for (vc, gc) in v.iter().zip(&du) {
            for (a, b) in vc.values().iter().zip(gc.values()) {
                assert!((a + b).abs() < 1e-10);
            }
        }
        let z = recover_velocity(&RealField::zeros(g.clone())).unwrap();
        assert!(z.iter().all(|c| c.values().iter().all(|&x| x == 0.0)));
        let bad = RealField::from_radial_fn(g, |_| 1.0);
        assert!(matches!(recover_velocity(&bad), Err(Error::NonzeroMean { .. })));
    }

    #[test]
    fn radial_face_velocity_has_exact_divergence() {
        let g = Grid::radial(3, 10.0, 500).unwrap();
        let geo = g.radial_geometry().unwrap();
        let nt = RealField::from_radial_fn(g.clone(), |r| (3.0 - 2.0 * r * r) * (-r * r).exp());
        let flow = radial_flow(&nt).unwrap();
        let h = g.spacing();
        for j in 0..g.points() {
            let inner = if j == 0 { 0.0 } else { geo.face_area[j - 1] * flow.v_face[j - 1] };
            let div = (geo.face_area[j] * flow.v_face[j] - inner) / geo.volume[j];
            assert!((div + nt.values()[j]).abs() < 10.0 * h * h, "{j}");
        }
    }

    #[test]
    fn plane_wave_momentum_is_k_times_mass() {
        let g = Grid::periodic(2, 20.0, 64).unwrap();
        let k = [1.5, -0.5];
        let s = moving_gaussian(g, 1.0, 1.2, &k, &[], 0.0).unwrap();
        let p = momenta(&s).unwrap();
        let m = mass(&s.psi);
        assert!((p.linear[0] - k[0] * m).abs() < 1e-8 * m);
        assert!((p.linear[1] - k[1] * m).abs() < 1e-8 * m);
        assert!(p.angular[2].abs() < 1e-8);
        let real = radial_gaussian(s.grid().clone(), 1.0, 1.0, 0.0);
        let p0 = momenta(&real).unwrap();
        assert!(p0.linear.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn width_and_resolution_indicators() {
        let g = Grid::radial(2, 12.0, 1200).unwrap();
        let s = radial_gaussian(g.clone(), 1.0, 1.0, 0.0);
        // ∫r² e^{-r²} / ∫e^{-r²} = 1 in 2D
        assert!((rms_width(&s.psi) - 1.0).abs() < 1e-4);
        assert!(resolution_ratio(&s.psi) < 0.01);
        assert!(boundary_ratio(&s.psi) < 1e-20);
    }
}
