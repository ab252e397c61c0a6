use std::cell::RefCell;
use std::sync::Arc;

use num_complex::Complex64;

use super::WaveState;
use crate::error::{Error, Result};
use crate::grid::{Grid, GridKind, PeriodicGeometry, RadialGeometry, Scalar, Tridiagonal};

/// Strang-split integrator bound to one grid.
///
/// Both substeps are unconditionally stable. Accuracy needs `dt` small
/// against the local Schrödinger time `L²` of the narrowest structure and
/// against `1/max|n|`; [`super::run`] shrinks `dt` with `‖∇ψ‖⁻²` for that
/// reason.
#[derive(Debug, Clone)]
pub struct Stepper {
    grid: Arc<Grid>,
    scratch: RefCell<Scratch>,
}

impl Stepper {
    pub fn new(grid: Arc<Grid>) -> Self {
        let mut scratch = Scratch::default();
        if grid.kind() == GridKind::Radial {
            scratch.fit(grid.len());
        }
        Stepper {
            grid,
            scratch: RefCell::new(scratch),
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    /// Advances `state` by `dt` in place. Non-finite values are not checked.
    pub fn advance(&self, state: &mut WaveState, dt: f64) {
        let half = 0.5 * dt;
        match self.grid.kind() {
            GridKind::Radial => {
                let geo = self.grid.radial_geometry().expect("radial");
                let sc = &mut *self.scratch.borrow_mut();
                potential_radial(geo, state, half, sc);
                schrodinger_radial(geo, state, dt, sc);
                potential_radial(geo, state, half, sc);
            }
            GridKind::Periodic => {
                let geo = self.grid.periodic_geometry().expect("periodic");
                let d = self.grid.dim();
                potential_periodic(geo, d, state, half);
                schrodinger_periodic(geo, d, state, dt);
                potential_periodic(geo, d, state, half);
            }
        }
        state.t += dt;
    }
}

/// One step of size `dt`; fails with [`Error::NonFinite`] instead of
/// returning a corrupted state.
pub fn step(state: &WaveState, dt: f64) -> Result<WaveState> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Config(format!("step size must be positive, got {dt}")));
    }
    let mut next = state.clone();
    Stepper::new(state.grid().clone()).advance(&mut next, dt);
    if !next.is_finite() {
        return Err(Error::NonFinite { t: next.t });
    }
    Ok(next)
}

/// Reusable buffers for the radial substeps.
#[derive(Debug, Clone, Default)]
struct Scratch {
    dens: Vec<f64>,
    m0: Vec<f64>,
    m1: Vec<f64>,
    work: Vec<f64>,
    rhs: Vec<Complex64>,
    cwork: Vec<Complex64>,
}

impl Scratch {
    fn fit(&mut self, n: usize) {
        for v in [&mut self.dens, &mut self.m0, &mut self.m1, &mut self.work] {
            v.resize(n, 0.0);
        }
        self.rhs.resize(n, Complex64::default());
        self.cwork.resize(n, Complex64::default());
    }
}

/// `(L f)_j` from the three-point radial stencil.
#[inline]
fn lap_at<T: Scalar>(lap: &Tridiagonal, f: &[T], j: usize) -> T {
    let mut v = f[j] * lap.diag[j];
    if j > 0 {
        v += f[j - 1] * lap.lower[j];
    }
    if j + 1 < f.len() {
        v += f[j + 1] * lap.upper[j];
    }
    v
}

/// Solves `(I + c L) x = rhs` in place (Thomas algorithm).
fn solve_real(lap: &Tridiagonal, c: f64, rhs: &mut [f64], work: &mut [f64]) {
    let n = rhs.len();
    let (mut u, mut x) = (0.0, 0.0);
    for i in 0..n {
        let l = c * lap.lower[i];
        let inv = 1.0 / (1.0 + c * lap.diag[i] - l * u);
        x = (rhs[i] - l * x) * inv;
        u = c * lap.upper[i] * inv;
        work[i] = u;
        rhs[i] = x;
    }
    for i in (0..n.saturating_sub(1)).rev() {
        rhs[i] -= rhs[i + 1] * work[i];
    }
}

/// Complex counterpart of [`solve_real`].
fn solve_complex(lap: &Tridiagonal, c: Complex64, rhs: &mut [Complex64], work: &mut [Complex64]) {
    let n = rhs.len();
    let zero = Complex64::default();
    let (mut u, mut x) = (zero, zero);
    for i in 0..n {
        let l = c * lap.lower[i];
        let inv = (1.0 + c * lap.diag[i] - l * u).inv();
        x = (rhs[i] - l * x) * inv;
        u = c * lap.upper[i] * inv;
        work[i] = u;
        rhs[i] = x;
    }
    for i in (0..n.saturating_sub(1)).rev() {
        let next = rhs[i + 1];
        rhs[i] -= next * work[i];
    }
}

/// Wave flow of `m = n + |ψ|²` at frozen `|ψ|²` by the implicit midpoint
/// rule, and the matching phase rotation of `ψ`.
fn potential_radial(geo: &RadialGeometry, s: &mut WaveState, tau: f64, sc: &mut Scratch) {
    let lap = &geo.lap;
    let q = 0.25 * tau * tau;
    let Scratch {
        dens, m0, m1, work, ..
    } = sc;
    for (j, (z, n)) in s.psi.values().iter().zip(s.n.values()).enumerate() {
        dens[j] = z.norm_sqr();
        m0[j] = n + dens[j];
    }
    for (j, v) in s.nt.values().iter().enumerate() {
        m1[j] = m0[j] + q * lap_at(lap, m0, j) + tau * v;
    }
    solve_real(lap, -q, m1, work);
    // m0 becomes m0 + m1
    for (a, b) in m0.iter_mut().zip(m1.iter()) {
        *a += b;
    }
    for (j, v) in s.nt.values_mut().iter_mut().enumerate() {
        *v += 0.5 * tau * lap_at(lap, m0, j);
    }
    for (((z, n), m), d) in s
        .psi
        .values_mut()
        .iter_mut()
        .zip(s.n.values_mut())
        .zip(m0.iter())
        .zip(dens.iter())
    {
        let phase = tau * (0.5 * m - d);
        *z *= Complex64::from_polar(1.0, -phase);
        *n = *m - *n - 2.0 * d;
    }
}

/// Crank–Nicolson for `ψ_t = iΔψ`; unitary in the grid inner product.
fn schrodinger_radial(geo: &RadialGeometry, s: &mut WaveState, dt: f64, sc: &mut Scratch) {
    let lap = &geo.lap;
    let c = Complex64::new(0.0, 0.5 * dt);
    let psi = s.psi.values_mut();
    for (j, r) in sc.rhs.iter_mut().enumerate() {
        *r = psi[j] + c * lap_at(lap, psi, j);
    }
    solve_complex(lap, -c, &mut sc.rhs, &mut sc.cwork);
    psi.copy_from_slice(&sc.rhs);
}

/// Exact frozen-source wave flow in Fourier space.
fn potential_periodic(geo: &PeriodicGeometry, d: usize, s: &mut WaveState, tau: f64) {
    let dens: Vec<f64> = s.psi.values().iter().map(|z| z.norm_sqr()).collect();
    let mut m: Vec<Complex64> = s
        .n
        .values()
        .iter()
        .zip(&dens)
        .map(|(n, d)| Complex64::new(n + d, 0.0))
        .collect();
    let mut v: Vec<Complex64> = s.nt.values().iter().map(|&x| Complex64::new(x, 0.0)).collect();
    geo.forward(&mut m, d);
    geo.forward(&mut v, d);
    let mut integral = vec![Complex64::default(); m.len()];
    for (((mk, vk), ik), &k2) in m.iter_mut().zip(v.iter_mut()).zip(integral.iter_mut()).zip(&geo.k2) {
        let (m0, v0) = (*mk, *vk);
        if k2 == 0.0 {
            *mk = m0 + v0 * tau;
            *ik = m0 * tau + v0 * (0.5 * tau * tau);
        } else {
            let k = k2.sqrt();
            let (sn, cs) = (k * tau).sin_cos();
            let h = (0.5 * k * tau).sin();
            *mk = m0 * cs + v0 * (sn / k);
            *vk = v0 * cs - m0 * (k * sn);
            *ik = m0 * (sn / k) + v0 * (2.0 * h * h / k2);
        }
    }
    geo.inverse(&mut m, d);
    geo.inverse(&mut v, d);
    geo.inverse(&mut integral, d);
    for (i, z) in s.psi.values_mut().iter_mut().enumerate() {
        let phase = integral[i].re - tau * dens[i];
        *z *= Complex64::from_polar(1.0, -phase);
    }
    for ((n, mk), dn) in s.n.values_mut().iter_mut().zip(&m).zip(&dens) {
        *n = mk.re - dn;
    }
    for (x, vk) in s.nt.values_mut().iter_mut().zip(&v) {
        *x = vk.re;
    }
}

fn schrodinger_periodic(geo: &PeriodicGeometry, d: usize, s: &mut WaveState, dt: f64) {
    let psi = s.psi.values_mut();
    geo.forward(psi, d);
    for (z, &k2) in psi.iter_mut().zip(&geo.k2) {
        *z *= Complex64::from_polar(1.0, -k2 * dt);
    }
    geo.inverse(psi, d);
}
