//! The 2D ground state and the exact self-similar family `(P_a, N_a)`.
//!
//! Multiplying the `N` equation by `η` and integrating once gives
//!
//! ```text
//! (a²η² - 1) N' + 3a²η N = (P²)'
//! ```
//!
//! which is singular at the sonic radius `η_s = 1/a`; regularity there fixes
//! the solution, so no far-field condition on `N` is imposed. At `a = 0` the
//! relation integrates to `N = -P²`. The discretization uses one-sided
//! second-order differences pointing toward the sonic radius for both `N'`
//! and `(P²)'`, so `N = -P²` also holds exactly for the discrete system.

use super::shooting::{refine_tail, run, ShootingSystem, Trajectory};
use super::{decay_fit, fd_slopes, Family, ProfileSolution};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::linalg::BandMatrix;

const GROUND_BRACKET: (f64, f64) = (2.0, 2.5);
const GROUND_ETA0: f64 = 1e-3;
const GROUND_STEP: f64 = 0.02;
const GROUND_ETA_MAX: f64 = 25.0;

/// Continuation step in `a`.
pub const DEFAULT_A_STEP: f64 = 0.02;

struct Townes;

impl ShootingSystem for Townes {
    fn rhs(&self, e: f64, y: &[f64], dy: &mut [f64]) {
        dy[0] = y[1];
        dy[1] = y[0] - y[0] * y[0] * y[0] - y[1] / e;
    }

    fn pn(&self, y: &[f64]) -> (f64, f64, f64) {
        (y[0], y[1], -y[0] * y[0])
    }
}

fn townes_seed(r0: f64) -> [f64; 2] {
    let c1 = (r0 - r0 * r0 * r0) / 4.0;
    let c2 = c1 * (1.0 - 3.0 * r0 * r0) / 16.0;
    let e = GROUND_ETA0;
    [
        r0 + c1 * e * e + c2 * e.powi(4),
        2.0 * c1 * e + 4.0 * c2 * e.powi(3),
    ]
}

fn ground_grid() -> Vec<f64> {
    let mut g = vec![GROUND_ETA0];
    let count = (GROUND_ETA_MAX / GROUND_STEP).round() as usize;
    g.extend((1..=count).map(|j| j as f64 * GROUND_STEP));
    g
}

/// The positive radial ground state of `ΔR - R + R³ = 0` in 2D by shooting on
/// `R(0)`, bisected to `tol`.
pub fn ground_state_2d(tol: f64) -> Result<ProfileSolution> {
    let grid = ground_grid();
    let scale = 10.0;
    let shoot = |r0: f64| run(&Townes, &grid, &townes_seed(r0), scale, false);
    let (mut lo, mut hi) = GROUND_BRACKET;
    let mut tr_lo = shoot(lo)?;
    let mut tr_hi = shoot(hi)?;
    let s_lo = tr_lo.class.side();
    if s_lo.is_none() || s_lo == tr_hi.class.side() {
        return Err(Error::BracketFailure { lo, hi });
    }
    let tol = tol.max(4.0 * f64::EPSILON * hi);
    let mut exact = None;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let tr = shoot(mid)?;
        match tr.class.side() {
            None => {
                exact = Some((mid, tr));
                break;
            }
            s if s == s_lo => {
                lo = mid;
                tr_lo = tr;
            }
            _ => {
                hi = mid;
                tr_hi = tr;
            }
        }
    }
    let (r0, tail) = match exact {
        Some(v) => v,
        None => (lo, refine_tail(&Townes, &grid, tr_lo, tr_hi, scale)?),
    };
    Ok(assemble_ground(r0, &tail))
}

fn assemble_ground(r0: f64, tail: &Trajectory) -> ProfileSolution {
    let mut eta = vec![0.0];
    let mut p = vec![r0];
    let mut dp = vec![0.0];
    for (e, y) in tail.eta.iter().zip(&tail.y) {
        eta.push(*e);
        p.push(y[0]);
        dp.push(y[1]);
    }
    let n: Vec<f64> = p.iter().map(|v| -v * v).collect();
    let dn: Vec<f64> = p.iter().zip(&dp).map(|(v, d)| -2.0 * v * d).collect();
    let hi = 20.0f64.min(*eta.last().unwrap());
    let decay = decay_fit(&eta, &p, &n, 10.0, hi);
    // residual from the stored derivative on the uniform part
    let mut residual = 0.0f64;
    // uniform nodes start at index 2; 8th-order stencil, four nodes on each side
    const W: [f64; 4] = [4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0];
    for i in 6..eta.len().saturating_sub(4) {
        let h = GROUND_STEP;
        let ddp = (1..=4).map(|k| W[k - 1] * (dp[i + k] - dp[i - k])).sum::<f64>() / h;
        let r = ddp + dp[i] / eta[i] - p[i] + p[i].powi(3);
        residual = residual.max(r.abs());
    }
    ProfileSolution {
        family: Family::Ground2d,
        parameter: 0.0,
        p0: r0,
        n0: -r0 * r0,
        eta,
        p,
        n,
        dp,
        dn,
        decay,
        residual,
    }
}

/// Discretization and solver settings for the 2D family.
#[derive(Debug, Clone, Copy)]
pub struct BvpOptions {
    pub eta_max: f64,
    pub points: usize,
    /// Newton convergence threshold on the max-norm residual.
    pub newton_tol: f64,
    pub max_iterations: usize,
    pub max_halvings: usize,
    pub a_step: f64,
    pub min_a_step: f64,
}

impl Default for BvpOptions {
    fn default() -> Self {
        BvpOptions {
            eta_max: 30.0,
            points: 1500,
            newton_tol: 1e-10,
            max_iterations: 30,
            max_halvings: 40,
            a_step: DEFAULT_A_STEP,
            min_a_step: 1e-4,
        }
    }
}

/// Row type of the `N` equation at node `j`.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Row {
    Forward,
    Backward,
    Sonic,
    Closure,
}

struct Bvp {
    a: f64,
    r: Vec<f64>,
    h: f64,
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
    rows: Vec<Row>,
}

impl Bvp {
    fn new(a: f64, opts: &BvpOptions) -> Result<Self> {
        let grid = Grid::radial(2, opts.eta_max, opts.points)?;
        let geo = grid.radial_geometry().expect("radial");
        let m = opts.points;
        let h = grid.spacing();
        let r = geo.nodes.clone();
        let es = if a > 0.0 { 1.0 / a } else { f64::INFINITY };
        let rows = (0..m)
            .map(|j| {
                if r[j] < es && j + 2 < m && r[j + 1] < es {
                    Row::Forward
                } else if r[j] > es && j >= 2 && r[j - 1] > es {
                    Row::Backward
                } else if es.is_finite() && (r[j] - es).abs() < 2.0 * h && j > 0 && j + 1 < m {
                    Row::Sonic
                } else {
                    Row::Closure
                }
            })
            .collect();
        Ok(Bvp {
            a,
            r,
            h,
            lower: geo.lap.lower.clone(),
            diag: geo.lap.diag.clone(),
            upper: geo.lap.upper.clone(),
            rows,
        })
    }

    fn m(&self) -> usize {
        self.r.len()
    }

    /// Derivative stencil `(offsets, weights)` of row `j`.
    fn stencil(&self, j: usize) -> Option<([isize; 3], [f64; 3])> {
        let h = self.h;
        match self.rows[j] {
            Row::Forward => Some(([0, 1, 2], [-1.5 / h, 2.0 / h, -0.5 / h])),
            Row::Backward => Some(([0, -1, -2], [1.5 / h, -2.0 / h, 0.5 / h])),
            Row::Sonic => Some(([-1, 0, 1], [-0.5 / h, 0.0, 0.5 / h])),
            Row::Closure => None,
        }
    }

    fn residual(&self, p: &[f64], n: &[f64]) -> Vec<f64> {
        let m = self.m();
        let a2 = self.a * self.a;
        let mut f = vec![0.0; 2 * m];
        for j in 0..m {
            let mut lap = self.diag[j] * p[j];
            if j > 0 {
                lap += self.lower[j] * p[j - 1];
            }
            if j + 1 < m {
                lap += self.upper[j] * p[j + 1];
            }
            f[2 * j] = lap - p[j] - n[j] * p[j];
            f[2 * j + 1] = match self.stencil(j) {
                Some((off, w)) => {
                    let mut dn = 0.0;
                    let mut ds = 0.0;
                    for (o, wk) in off.iter().zip(w) {
                        let c = (j as isize + o) as usize;
                        dn += wk * n[c];
                        ds += wk * p[c] * p[c];
                    }
                    let rj = self.r[j];
                    (a2 * rj * rj - 1.0) * dn + 3.0 * a2 * rj * n[j] - ds
                }
                None => n[j] + p[j] * p[j],
            };
        }
        f
    }

    fn jacobian(&self, p: &[f64], n: &[f64]) -> BandMatrix {
        let m = self.m();
        let a2 = self.a * self.a;
        let mut jac = BandMatrix::zeros(2 * m, 5, 5);
        for j in 0..m {
            let row = 2 * j;
            jac.add(row, 2 * j, self.diag[j] - 1.0 - n[j]);
            jac.add(row, 2 * j + 1, -p[j]);
            if j > 0 {
                jac.add(row, 2 * (j - 1), self.lower[j]);
            }
            if j + 1 < m {
                jac.add(row, 2 * (j + 1), self.upper[j]);
            }
            let row = 2 * j + 1;
            match self.stencil(j) {
                Some((off, w)) => {
                    let rj = self.r[j];
                    let c = a2 * rj * rj - 1.0;
                    jac.add(row, 2 * j + 1, 3.0 * a2 * rj);
                    for (o, wk) in off.iter().zip(w) {
                        if wk == 0.0 {
                            continue;
                        }
                        let col = (j as isize + o) as usize;
                        jac.add(row, 2 * col + 1, c * wk);
                        jac.add(row, 2 * col, -2.0 * wk * p[col]);
                    }
                }
                None => {
                    jac.add(row, 2 * j + 1, 1.0);
                    jac.add(row, 2 * j, 2.0 * p[j]);
                }
            }
        }
        jac
    }

    /// Damped Newton from `(p, n)`. Returns the final max-norm residual.
    fn solve(&self, p: &mut Vec<f64>, n: &mut Vec<f64>, opts: &BvpOptions) -> Result<f64> {
        let m = self.m();
        let norm = |f: &[f64]| f.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        let mut f = self.residual(p, n);
        let mut res = norm(&f);
        for _ in 0..opts.max_iterations {
            if res < opts.newton_tol {
                return Ok(res);
            }
            let lu = self.jacobian(p, n).factor().ok_or(Error::NewtonDivergence {
                a: self.a,
                reached: f64::NAN,
            })?;
            let mut dx: Vec<f64> = f.iter().map(|v| -v).collect();
            lu.solve(&mut dx);
            let mut lam = 1.0;
            let mut accepted = false;
            for _ in 0..=opts.max_halvings {
                let pn: Vec<f64> = (0..m).map(|j| p[j] + lam * dx[2 * j]).collect();
                let nn: Vec<f64> = (0..m).map(|j| n[j] + lam * dx[2 * j + 1]).collect();
                let fnew = self.residual(&pn, &nn);
                let rnew = norm(&fnew);
                if rnew.is_finite() && rnew < res {
                    *p = pn;
                    *n = nn;
                    f = fnew;
                    res = rnew;
                    accepted = true;
                    break;
                }
                lam *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        if res < opts.newton_tol {
            Ok(res)
        } else {
            Err(Error::NewtonDivergence {
                a: self.a,
                reached: f64::NAN,
            })
        }
    }
}

/// `(P_a, N_a)` with default discretization; see [`find_profile_2d_with`].
/// At `a = 0` the member is `(R, -R²)` and the shooting ground state is
/// returned as it is.
pub fn find_profile_2d(a: f64, tol: f64) -> Result<ProfileSolution> {
    if a == 0.0 {
        let mut g = ground_state_2d(tol)?;
        g.family = Family::Family2d;
        return Ok(g);
    }
    find_profile_2d_with(
        a,
        &BvpOptions {
            newton_tol: tol.min(1e-8),
            ..BvpOptions::default()
        },
    )
}

/// Solves the discretized 2D family by damped Newton iteration, continued in
/// `a` from the ground state `(R, -R²)`. On failure the error reports the
/// largest `a` that converged.
pub fn find_profile_2d_with(a: f64, opts: &BvpOptions) -> Result<ProfileSolution> {
    if !(a >= 0.0) || !a.is_finite() {
        return Err(Error::Unsupported(format!("a = {a} must be nonnegative")));
    }
    let ground = ground_state_2d(1e-14)?;
    let bvp0 = Bvp::new(0.0, opts)?;
    let mut p: Vec<f64> = bvp0.r.iter().map(|&r| ground.eval(r)[0]).collect();
    let mut n: Vec<f64> = p.iter().map(|v| -v * v).collect();
    let mut res = bvp0.solve(&mut p, &mut n, opts).map_err(|_| Error::NewtonDivergence {
        a: 0.0,
        reached: f64::NAN,
    })?;
    let mut reached = 0.0f64;
    let mut step = opts.a_step;
    while reached < a {
        let next = (reached + step).min(a);
        let bvp = Bvp::new(next, opts)?;
        let (mut pt, mut nt) = (p.clone(), n.clone());
        match bvp.solve(&mut pt, &mut nt, opts) {
            Ok(r) => {
                p = pt;
                n = nt;
                res = r;
                reached = next;
            }
            Err(_) => {
                step *= 0.5;
                if step < opts.min_a_step {
                    return Err(Error::NewtonDivergence { a: next, reached });
                }
            }
        }
    }
    Ok(assemble_family(a, &bvp0.r, &p, &n, res))
}

fn assemble_family(a: f64, r: &[f64], p: &[f64], n: &[f64], residual: f64) -> ProfileSolution {
    // even extrapolation to the origin from the first two nodes
    let p0 = (9.0 * p[0] - p[1]) / 8.0;
    let n0 = (9.0 * n[0] - n[1]) / 8.0;
    let mut eta = vec![0.0];
    eta.extend_from_slice(r);
    let mut pv = vec![p0];
    pv.extend_from_slice(p);
    let mut nv = vec![n0];
    nv.extend_from_slice(n);
    let mut dp = fd_slopes(&eta, &pv);
    let mut dn = fd_slopes(&eta, &nv);
    dp[0] = 0.0;
    dn[0] = 0.0;
    let end = *eta.last().unwrap();
    let decay = decay_fit(&eta, &pv, &nv, 0.5 * end, 0.93 * end);
    ProfileSolution {
        family: Family::Family2d,
        parameter: a,
        p0,
        n0,
        eta,
        p: pv,
        n: nv,
        dp,
        dn,
        decay,
        residual,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ground_state_oracle() {
        let g = ground_state_2d(1e-14).unwrap();
        assert!((g.p0 - 2.2062).abs() < 1e-3, "{}", g.p0);
        assert!(g.is_positive());
        assert!(g.is_monotone_decreasing());
        assert!(g.decay.p_rate > 0.5);
        assert!((g.mass() - 11.70).abs() < 0.01, "mass {}", g.mass());
        assert!(g.eta_max() > 24.0);
    }

    #[test]
    fn family_at_zero_is_ground_state() {
        let s = find_profile_2d(0.0, 1e-10).unwrap();
        assert_eq!(s.family, Family::Family2d);
        assert!(s.residual < 1e-8, "{:e}", s.residual);
        for (p, n) in s.p.iter().zip(&s.n) {
            assert!((n + p * p).abs() < 1e-12);
        }
        assert!((s.p0 - 2.2062).abs() < 1e-3, "{}", s.p0);
    }

    #[test]
    fn discrete_family_at_zero_keeps_the_identity_on_nodes() {
        let s = find_profile_2d_with(0.0, &BvpOptions::default()).unwrap();
        for (p, n) in s.p.iter().zip(&s.n).skip(1) {
            assert!((n + p * p).abs() < 1e-12);
        }
        assert!((s.p0 - 2.2062).abs() < 1e-3, "{}", s.p0);
    }

    #[test]
    fn small_a_tail_is_cubic() {
        let s = find_profile_2d(0.3, 1e-10).unwrap();
        assert!(s.is_positive());
        assert!((s.decay.n_exponent + 3.0).abs() < 0.15, "{}", s.decay.n_exponent);
    }

    #[test]
    fn continuation_failure_reports_reach() {
        let opts = BvpOptions {
            max_iterations: 0,
            ..BvpOptions::default()
        };
        match find_profile_2d_with(0.1, &opts) {
            Err(Error::NewtonDivergence { .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }
}
