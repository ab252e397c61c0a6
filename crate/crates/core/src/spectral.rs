//! Differential operators, quadrature and Sobolev norms on [`Grid`]s.
//!
//! On radial grids the Laplacian is the conservative second-order stencil
//!
//! ```text
//! (Lf)_j = [A_j (f_{j+1} - f_j) - A_{j-1} (f_j - f_{j-1})] / (h V_j)
//! ```
//!
//! with face areas `A_j`, cell volumes `V_j`, zero flux through the origin and
//! a Dirichlet ghost at `r_max`. Fractional powers of `1 - L` (or `-L`) are
//! evaluated with a resolvent quadrature, so Sobolev norms of any order are
//! consistent with the operator that drives the evolution.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{Field, Grid, GridKind, PeriodicGeometry, RadialGeometry, RealField, Scalar};
use crate::linalg::RealTridiagonal;

/// Lowest supported Sobolev order.
pub const MIN_SOBOLEV_ORDER: f64 = -2.0;

/// Relative size of the mean mode tolerated by [`invert_laplacian`] on
/// periodic grids.
pub const MEAN_TOLERANCE: f64 = 1e-10;

fn check_dim<T: Scalar>(f: &Field<T>, d: usize) -> Result<()> {
    if f.dim() != d {
        return Err(Error::DimensionMismatch {
            field: f.dim(),
            requested: d,
        });
    }
    Ok(())
}

pub(crate) fn radial_apply<T: Scalar>(geo: &RadialGeometry, f: &[T]) -> Vec<T> {
    let lap = &geo.lap;
    let n = f.len();
    (0..n)
        .map(|j| {
            let mut v = f[j] * lap.diag[j];
            if j > 0 {
                v += f[j - 1] * lap.lower[j];
            }
            if j + 1 < n {
                v += f[j + 1] * lap.upper[j];
            }
            v
        })
        .collect()
}

/// Factor of `shift·I + scale·L` on a radial grid.
pub(crate) fn radial_shifted(geo: &RadialGeometry, shift: f64, scale: f64) -> RealTridiagonal {
    let lap = &geo.lap;
    let lower: Vec<f64> = lap.lower.iter().map(|v| scale * v).collect();
    let upper: Vec<f64> = lap.upper.iter().map(|v| scale * v).collect();
    let diag: Vec<f64> = lap.diag.iter().map(|v| shift + scale * v).collect();
    RealTridiagonal::new(&lower, &diag, &upper)
}

/// Applies a Fourier multiplier `m(|k|^2)` to a complex array.
pub(crate) fn periodic_multiplier(
    grid: &Grid,
    geo: &PeriodicGeometry,
    data: &mut [Complex64],
    m: impl Fn(f64) -> Complex64,
) {
    geo.forward(data, grid.dim());
    for (v, &k2) in data.iter_mut().zip(&geo.k2) {
        *v *= m(k2);
    }
    geo.inverse(data, grid.dim());
}

fn periodic_map<T: Scalar>(f: &Field<T>, m: impl Fn(f64) -> Complex64) -> Result<Field<T>> {
    let grid = f.grid();
    let geo = grid.periodic_or_err()?;
    let mut data: Vec<Complex64> = f.values().iter().map(|v| v.to_complex()).collect();
    periodic_multiplier(grid, geo, &mut data, m);
    Ok(f.with_values(data.into_iter().map(T::from_complex).collect()))
}

/// `Δf`, with `f'(0) = 0` on radial grids and spectrally on periodic grids.
pub fn laplacian<T: Scalar>(f: &Field<T>, d: usize) -> Result<Field<T>> {
    check_dim(f, d)?;
    match f.grid().kind() {
        GridKind::Radial => {
            let geo = f.grid().radial_or_err()?;
            Ok(f.with_values(radial_apply(geo, f.values())))
        }
        GridKind::Periodic => periodic_map(f, |k2| Complex64::new(-k2, 0.0)),
    }
}

/// Solves `Δg = f` with `g(r_max) = 0` (radial) or zero mean (periodic).
pub fn invert_laplacian<T: Scalar>(f: &Field<T>, d: usize) -> Result<Field<T>> {
    check_dim(f, d)?;
    match f.grid().kind() {
        GridKind::Radial => {
            let geo = f.grid().radial_or_err()?;
            let mut g = f.values().to_vec();
            radial_shifted(geo, 0.0, 1.0).solve_in_place(&mut g);
            Ok(f.with_values(g))
        }
        GridKind::Periodic => {
            let n = f.values().len() as f64;
            let mean = f.values().iter().fold(Complex64::default(), |a, v| a + v.to_complex()) / n;
            let scale = f.values().iter().map(|v| v.abs2()).fold(0.0, f64::max).sqrt();
            if mean.norm() > MEAN_TOLERANCE * scale.max(f64::MIN_POSITIVE) {
                return Err(Error::NonzeroMean { mean: mean.norm() });
            }
            periodic_map(f, |k2| {
                if k2 == 0.0 {
                    Complex64::default()
                } else {
                    Complex64::new(-1.0 / k2, 0.0)
                }
            })
        }
    }
}

/// `∫ f(x) |x|^p dx` (`weight = Some(p)`), or `∫ f dx`.
pub fn quadrature(f: &RealField, weight: Option<f64>) -> f64 {
    let grid = f.grid();
    let w = grid.weights();
    match weight {
        None => f.values().iter().zip(&w).map(|(v, w)| v * w).sum(),
        Some(p) => {
            let r = grid.radii();
            f.values()
                .iter()
                .zip(&w)
                .zip(&r)
                .map(|((v, w), r)| v * w * r.powf(p))
                .sum()
        }
    }
}

/// `∫ |f|^2 dx`.
pub fn mass<T: Scalar>(f: &Field<T>) -> f64 {
    let w = f.grid().weights();
    f.values().iter().zip(&w).map(|(v, w)| v.abs2() * w).sum()
}

/// `∫ |∇f|^2 dx`, evaluated as `-⟨f, Δf⟩` so that it matches the operator.
pub fn dirichlet_energy<T: Scalar>(f: &Field<T>) -> f64 {
    let grid = f.grid();
    match grid.kind() {
        GridKind::Radial => {
            let geo = grid.radial_geometry().expect("radial");
            let lf = radial_apply(geo, f.values());
            let s: f64 = f
                .values()
                .iter()
                .zip(&lf)
                .zip(&geo.volume)
                .map(|((a, b), v)| (a.to_complex().conj() * b.to_complex()).re * v)
                .sum();
            -s * geo.sphere_area
        }
        GridKind::Periodic => spectral_sum(f, |k2| k2),
    }
}

/// `(L^d / M^{2d}) Σ_k w(|k|^2) |f̂_k|^2`.
fn spectral_sum<T: Scalar>(f: &Field<T>, w: impl Fn(f64) -> f64) -> f64 {
    let grid = f.grid();
    let geo = grid.periodic_geometry().expect("periodic");
    let mut data: Vec<Complex64> = f.values().iter().map(|v| v.to_complex()).collect();
    geo.forward(&mut data, grid.dim());
    let n = data.len() as f64;
    let cell = grid.spacing().powi(grid.dim() as i32);
    let s: f64 = data
        .iter()
        .zip(&geo.k2)
        .map(|(v, &k2)| w(k2) * v.norm_sqr())
        .sum();
    s * cell / n
}

/// Gradient components on a periodic grid (spectral, Nyquist mode dropped).
pub fn gradient(f: &RealField) -> Result<Vec<RealField>> {
    let grid = f.grid();
    let geo = grid.periodic_or_err()?;
    let d = grid.dim();
    let m = grid.points();
    let mut hat: Vec<Complex64> = f.values().iter().map(|v| v.to_complex()).collect();
    geo.forward(&mut hat, d);
    let mut out = Vec::with_capacity(d);
    for axis in 0..d {
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
        out.push(f.with_values(comp.into_iter().map(|c| c.re).collect()));
    }
    Ok(out)
}

/// Which operator defines the Sobolev scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Scale {
    /// `1 - Δ`
    Inhomogeneous,
    /// `-Δ`
    Homogeneous,
}

/// `‖f‖_{H^s}` with symbol `(1 + |ξ|^2)^{s/2}`.
pub fn sobolev_norm<T: Scalar>(f: &Field<T>, s: f64) -> Result<f64> {
    sobolev(f, s, Scale::Inhomogeneous)
}

/// `‖f‖_{Ḣ^s}` with symbol `|ξ|^s`. On periodic grids the mean mode is
/// dropped.
pub fn sobolev_seminorm<T: Scalar>(f: &Field<T>, s: f64) -> Result<f64> {
    sobolev(f, s, Scale::Homogeneous)
}

fn sobolev<T: Scalar>(f: &Field<T>, s: f64, scale: Scale) -> Result<f64> {
    if !(s >= MIN_SOBOLEV_ORDER) {
        return Err(Error::SobolevOrder(s));
    }
    let grid = f.grid();
    let sq = match grid.kind() {
        GridKind::Periodic => match scale {
            Scale::Inhomogeneous => spectral_sum(f, |k2| (1.0 + k2).powf(s)),
            Scale::Homogeneous => spectral_sum(f, |k2| if k2 == 0.0 { 0.0 } else { k2.powf(s) }),
        },
        GridKind::Radial => {
            let geo = grid.radial_or_err()?;
            if s == 0.0 {
                mass(f)
            } else {
                let shift = match scale {
                    Scale::Inhomogeneous => 1.0,
                    Scale::Homogeneous => 0.0,
                };
                let op = RadialPower::new(geo, shift);
                let af = op.apply(f.values(), s);
                let inner: f64 = f
                    .values()
                    .iter()
                    .zip(&af)
                    .zip(&geo.volume)
                    .map(|((a, b), v)| (a.to_complex().conj() * b.to_complex()).re * v)
                    .sum();
                inner * geo.sphere_area
            }
        }
    };
    Ok(sq.max(0.0).sqrt())
}

/// Real powers of the positive operator `A = shift·I - L` on a radial grid.
pub(crate) struct RadialPower<'a> {
    geo: &'a RadialGeometry,
    shift: f64,
    lambda_max: f64,
    factor: Option<RealTridiagonal>,
}

/// Resolvent quadrature step in `u = ln λ`; the integrand is analytic in a
/// strip of half-width π, so the trapezoid error is about `exp(-2π²/step)`.
const RESOLVENT_STEP: f64 = 0.5;
const RESOLVENT_TOL: f64 = 1e-14;

impl<'a> RadialPower<'a> {
    pub(crate) fn new(geo: &'a RadialGeometry, shift: f64) -> Self {
        let lap = &geo.lap;
        let lambda_max = (0..lap.diag.len())
            .map(|j| shift - lap.diag[j] + lap.lower[j].abs() + lap.upper[j].abs())
            .fold(0.0, f64::max);
        RadialPower {
            geo,
            shift,
            lambda_max,
            factor: None,
        }
    }

    fn a_apply<T: Scalar>(&self, f: &[T]) -> Vec<T> {
        let lf = radial_apply(self.geo, f);
        f.iter().zip(lf).map(|(&a, b)| a * self.shift - b).collect()
    }

    fn a_solve<T: Scalar>(&mut self, f: &mut [T]) {
        let (geo, shift) = (self.geo, self.shift);
        self.factor
            .get_or_insert_with(|| radial_shifted(geo, shift, -1.0))
            .solve_in_place(f);
    }

    /// `A^s f`.
    pub(crate) fn apply<T: Scalar>(mut self, f: &[T], s: f64) -> Vec<T> {
        let m = s.floor();
        let sigma = s - m;
        let mut g = f.to_vec();
        if m > 0.0 {
            for _ in 0..m as i64 {
                g = self.a_apply(&g);
            }
        } else {
            for _ in 0..(-m) as i64 {
                self.a_solve(&mut g);
            }
        }
        if sigma > 0.0 {
            g = self.fractional(&g, sigma);
        }
        g
    }

    /// `A^σ g` for `0 < σ < 1` from
    /// `A^σ = (sin πσ / π) ∫ e^{σu} (e^u + A)^{-1} A du`.
    fn fractional<T: Scalar>(&self, g: &[T], sigma: f64) -> Vec<T> {
        let ag = self.a_apply(g);
        let norm = |v: &[T]| v.iter().map(|x| x.abs2()).sum::<f64>().sqrt();
        let (ng, nag) = (norm(g), norm(&ag));
        if ng == 0.0 {
            return vec![T::default(); g.len()];
        }
        // integrand ~ e^{σu} g below, ~ e^{(σ-1)u} A g above
        let rho = (nag / ng).max(1.0).min(self.lambda_max.max(1.0));
        let u_lo = (sigma * RESOLVENT_TOL).ln() / sigma;
        let u_hi = (rho / ((1.0 - sigma) * RESOLVENT_TOL)).ln() / (1.0 - sigma);
        let count = ((u_hi - u_lo) / RESOLVENT_STEP).ceil() as usize;
        let mut acc = vec![T::default(); g.len()];
        let mut work = vec![T::default(); g.len()];
        for i in 0..=count {
            let u = u_lo + i as f64 * RESOLVENT_STEP;
            // (λ + A) = (λ + shift) I - L
            let fac = radial_shifted(self.geo, u.exp() + self.shift, -1.0);
            work.copy_from_slice(&ag);
            fac.solve_in_place(&mut work);
            let w = (sigma * u).exp();
            for (a, &ri) in acc.iter_mut().zip(&work) {
                *a += ri * w;
            }
        }
        let c = (std::f64::consts::PI * sigma).sin() / std::f64::consts::PI * RESOLVENT_STEP;
        acc.into_iter().map(|v| v * c).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn gauss(r: f64) -> f64 {
        (-r * r).exp()
    }

    #[test]
    fn laplacian_of_constant_vanishes_in_interior() {
        let g = Grid::radial(2, 5.0, 64).unwrap();
        let f = RealField::from_radial_fn(g, |_| 1.0);
        let lf = laplacian(&f, 2).unwrap();
        for v in &lf.values()[..63] {
            assert!(v.abs() < 1e-10);
        }
    }

    #[test]
    fn laplacian_of_r_squared_is_2d() {
        for d in 1..=3 {
            let g = Grid::radial(d, 4.0, 40).unwrap();
            let f = RealField::from_radial_fn(g, |r| r * r);
            let lf = laplacian(&f, d).unwrap();
            for v in &lf.values()[..39] {
                assert!((v - 2.0 * d as f64).abs() < 1e-9, "d={d}: {v}");
            }
        }
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let g = Grid::radial(2, 5.0, 64).unwrap();
        let f = RealField::zeros(g);
        assert!(matches!(
            laplacian(&f, 3),
            Err(Error::DimensionMismatch { field: 2, requested: 3 })
        ));
    }

    #[test]
    fn laplacian_second_order_against_analytic() {
        let exact = |r: f64| (4.0 * r * r - 4.0) * gauss(r);
        let err = |m: usize| {
            let g = Grid::radial(2, 8.0, m).unwrap();
            let f = RealField::from_radial_fn(g.clone(), gauss);
            let lf = laplacian(&f, 2).unwrap();
            g.radii()
                .iter()
                .zip(lf.values())
                .map(|(&r, v)| (v - exact(r)).abs())
                .fold(0.0, f64::max)
        };
        let ratio = err(200) / err(400);
        assert!((ratio - 4.0).abs() < 0.3, "ratio {ratio}");
    }

    #[test]
    fn periodic_laplacian_is_spectral() {
        let g = Grid::periodic(2, 2.0 * PI, 32).unwrap();
        let p = g.periodic_geometry().unwrap();
        let vals: Vec<f64> = (0..g.len())
            .map(|i| {
                let x = g.position(i, p);
                (2.0 * x[0]).sin() * (3.0 * x[1]).cos()
            })
            .collect();
        let f = RealField::new(g.clone(), vals.clone()).unwrap();
        let lf = laplacian(&f, 2).unwrap();
        for (a, b) in lf.values().iter().zip(&vals) {
            assert!((a + 13.0 * b).abs() < 1e-10);
        }
        let back = invert_laplacian(&lf, 2).unwrap();
        for (a, b) in back.values().iter().zip(&vals) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn periodic_inverse_rejects_mean() {
        let g = Grid::periodic(1, 10.0, 32).unwrap();
        let f = RealField::from_radial_fn(g, |_| 1.0);
        assert!(matches!(invert_laplacian(&f, 1), Err(Error::NonzeroMean { .. })));
    }

    #[test]
    fn invert_constant_source_3d() {
        let r_max = 3.0;
        let m = 300;
        let g = Grid::radial(3, r_max, m).unwrap();
        let f = RealField::from_radial_fn(g.clone(), |_| 6.0);
        let u = invert_laplacian(&f, 3).unwrap();
        let h = g.spacing();
        for (&r, v) in g.radii().iter().zip(u.values()) {
            assert!((v - (r * r - r_max * r_max)).abs() < 10.0 * h * h);
        }
    }

    #[test]
    fn invert_round_trip_gaussian() {
        let g = Grid::radial(2, 8.0, 400).unwrap();
        let f = RealField::from_radial_fn(g.clone(), gauss);
        let back = invert_laplacian(&laplacian(&f, 2).unwrap(), 2).unwrap();
        let h = g.spacing();
        for (a, b) in back.values().iter().zip(f.values()) {
            assert!((a - b).abs() <= 10.0 * h * h);
        }
        let zero = invert_laplacian(&RealField::zeros(g), 2).unwrap();
        assert!(zero.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn quadrature_gaussian_oracles() {
        let g3 = Grid::radial(3, 8.0, 150_000).unwrap();
        let q3 = quadrature(&RealField::from_radial_fn(g3, gauss), None);
        assert!((q3 - PI.powf(1.5)).abs() < 1e-8, "{}", q3 - PI.powf(1.5));
        let g2 = Grid::radial(2, 8.0, 150_000).unwrap();
        let q2 = quadrature(&RealField::from_radial_fn(g2.clone(), gauss), None);
        assert!((q2 - PI).abs() < 1e-8, "{}", q2 - PI);
        assert_eq!(quadrature(&RealField::zeros(g2), None), 0.0);
    }

    #[test]
    fn quadrature_radial_weight() {
        // ∫ |x|^2 e^{-r^2} dx in 2D = π
        let g = Grid::radial(2, 8.0, 20_000).unwrap();
        let q = quadrature(&RealField::from_radial_fn(g, gauss), Some(2.0));
        assert!((q - PI).abs() < 1e-7);
    }

    #[test]
    fn sobolev_zero_order_is_l2() {
        let g = Grid::radial(3, 6.0, 200).unwrap();
        let f = RealField::from_radial_fn(g, |r| gauss(r) * (1.0 + r));
        let l2 = mass(&f).sqrt();
        assert!((sobolev_norm(&f, 0.0).unwrap() - l2).abs() < 1e-14);
        assert!(sobolev_norm(&f, -2.5).is_err());
        let z = RealField::zeros(f.grid().clone());
        assert_eq!(sobolev_norm(&z, 0.7).unwrap(), 0.0);
    }

    #[test]
    fn sobolev_h1_matches_quadrature_oracle() {
        // ∫ e^{-2r^2} + 4r^2 e^{-2r^2} over R^2 = π/2 + π
        let oracle = (PI / 2.0 + PI).sqrt();
        let g = Grid::radial(2, 8.0, 20_000).unwrap();
        let f = RealField::from_radial_fn(g, gauss);
        let n = sobolev_norm(&f, 1.0).unwrap();
        assert!(((n - oracle) / oracle).abs() < 1e-6, "{n} vs {oracle}");
    }

    #[test]
    fn fractional_power_composes() {
        let g = Grid::radial(2, 8.0, 400).unwrap();
        let f = RealField::from_radial_fn(g, gauss);
        // ‖f‖_{H^{1/2}}^2 = ⟨A^{1/4} f, A^{1/4} f⟩ = ⟨f, A^{1/2} f⟩
        let geo = f.grid().radial_geometry().unwrap();
        let half = RadialPower::new(geo, 1.0).apply(f.values(), 0.5);
        let twice = RadialPower::new(geo, 1.0).apply(&half, 0.5);
        let full = RadialPower::new(geo, 1.0).apply(f.values(), 1.0);
        for (a, b) in twice.iter().zip(&full) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn radial_sobolev_matches_fourier_oracle() {
        // Gaussian in 3D: f̂ ∝ e^{-k^2/4}; compare s = 1/2 and s = -1 with a
        // radial Fourier quadrature.
        let oracle = |s: f64| {
            let n = 200_000;
            let kmax = 40.0;
            let dk = kmax / n as f64;
            let c = PI.powf(1.5);
            let mut acc = 0.0;
            for i in 0..n {
                let k = (i as f64 + 0.5) * dk;
                let fh = c * (-k * k / 4.0).exp();
                acc += 4.0 * PI * k * k * (1.0 + k * k).powf(s) * fh * fh * dk;
            }
            (acc / (2.0 * PI).powi(3)).sqrt()
        };
        let g = Grid::radial(3, 10.0, 4000).unwrap();
        let f = RealField::from_radial_fn(g, gauss);
        for s in [0.5, -1.0, 1.5] {
            let n = sobolev_norm(&f, s).unwrap();
            let o = oracle(s);
            assert!(((n - o) / o).abs() < 1e-4, "s={s}: {n} vs {o}");
        }
    }

    #[test]
    fn periodic_sobolev_monotone_in_order() {
        let g = Grid::periodic(2, 20.0, 64).unwrap();
        let f = RealField::from_radial_fn(g, |r| gauss(r) * (1.0 + r.cos()));
        let mut prev = 0.0;
        for s in [-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0] {
            let n = sobolev_norm(&f, s).unwrap();
            assert!(n >= prev);
            prev = n;
        }
        assert!((sobolev_norm(&f, 0.0).unwrap() - mass(&f).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn dirichlet_energy_matches_gradient() {
        let g = Grid::periodic(2, 20.0, 64).unwrap();
        let f = RealField::from_radial_fn(g, gauss);
        let grads = gradient(&f).unwrap();
        let direct: f64 = grads.iter().map(mass).sum();
        let e = dirichlet_energy(&f);
        assert!((direct - e).abs() < 1e-10);
        assert!((e - PI).abs() < 1e-8);
    }
}
