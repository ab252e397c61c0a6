//! The 3D ladder `(P_k, N_k)`.

use super::shooting::{refine_tail, run, ShootingSystem, ShotClass, Trajectory};
use super::{alpha_k, decay_fit, Family, ProfileSolution};
use crate::error::{Error, Result};

/// Distance from a resonance value below which a seed is refused.
pub const RESONANCE_GAP: f64 = 1e-6;
/// Default series order.
pub const SERIES_ORDER: usize = 12;
/// Output spacing of stored profiles.
pub const ETA_STEP: f64 = 0.02;
pub const ETA_MAX: f64 = 25.0;
const SEED_TOL: f64 = 1e-14;
const SCAN_POINTS: usize = 48;
const DECAY_WINDOW: (f64, f64) = (10.0, 25.0);

/// Truncated even power series `P = Σ a_i η^{2i}`, `N = Σ b_i η^{2i}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesSeed {
    pub order: usize,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub eta0: f64,
}

impl SeriesSeed {
    /// `(P, P', N, N')` at `eta`.
    pub fn eval(&self, eta: f64) -> [f64; 4] {
        let mut out = [0.0; 4];
        let e2 = eta * eta;
        let mut pw = 1.0;
        for i in 0..=self.order {
            let dpw = if i == 0 { 0.0 } else { 2.0 * i as f64 * pw / eta };
            out[0] += self.a[i] * pw;
            out[1] += self.a[i] * dpw;
            out[2] += self.b[i] * pw;
            out[3] += self.b[i] * dpw;
            pw *= e2;
        }
        out
    }

    /// Size of the last retained terms at `eta`, used as the remainder estimate.
    pub fn remainder(&self, eta: f64) -> f64 {
        let i = self.order;
        (self.a[i].abs() + self.b[i].abs()) * eta.powi(2 * i as i32)
    }
}

fn check_resonance(p0: f64, order: usize) -> Result<()> {
    for i in 1..=order + 1 {
        let alpha = alpha_k(i)?;
        if (p0 - alpha).abs() < RESONANCE_GAP {
            return Err(Error::Resonance {
                p0,
                index: i,
                alpha,
            });
        }
    }
    Ok(())
}

/// Coefficients from matching powers of `η²`. With `K = (2i+2)(2i+3)`,
/// `S_i = a_i + Σ_{m<i} b_m a_{i-m}` and `Q = Σ_{m=1}^{i} a_m a_{i+1-m}`:
///
/// ```text
/// b_i ((4/9)(4i+7)(i+1) - 2a_0²) = 2a_0 S_i + K Q
/// a_{i+1} = (S_i + b_i a_0) / K
/// ```
fn coefficients(p0: f64, order: usize) -> (Vec<f64>, Vec<f64>) {
    let mut a = vec![p0];
    let mut b: Vec<f64> = Vec::with_capacity(order + 1);
    for i in 0..=order {
        let s: f64 = a[i] + (0..i).map(|m| b[m] * a[i - m]).sum::<f64>();
        let q: f64 = (1..=i).map(|m| a[m] * a[i + 1 - m]).sum();
        let k = ((2 * i + 2) * (2 * i + 3)) as f64;
        let fi = i as f64;
        let bi = (2.0 * p0 * s + k * q) / (4.0 / 9.0 * (4.0 * fi + 7.0) * (fi + 1.0) - 2.0 * p0 * p0);
        b.push(bi);
        a.push((s + bi * p0) / k);
    }
    a.truncate(order + 1);
    (a, b)
}

/// Series seed with `η_0 ∈ [1e-3, 1e-1]` chosen so the remainder is below
/// `tol`.
pub fn series_seed_3d(p0: f64, order: usize, tol: f64) -> Result<SeriesSeed> {
    if order == 0 {
        return Err(Error::Unsupported("series order must be at least 1".into()));
    }
    check_resonance(p0, order)?;
    let (a, b) = coefficients(p0, order);
    let mut seed = SeriesSeed {
        order,
        a,
        b,
        eta0: 0.1,
    };
    let last = seed.remainder(1.0);
    if last > 0.0 {
        seed.eta0 = (tol / last).powf(1.0 / (2.0 * order as f64)).clamp(1e-3, 0.1);
    }
    Ok(seed)
}

fn seed_with_eta0(p0: f64, order: usize, eta0: f64) -> Result<SeriesSeed> {
    check_resonance(p0, order)?;
    let (a, b) = coefficients(p0, order);
    Ok(SeriesSeed { order, a, b, eta0 })
}

struct Ladder;

impl ShootingSystem for Ladder {
    fn rhs(&self, e: f64, y: &[f64], dy: &mut [f64]) {
        let (p, dp, n, dn) = (y[0], y[1], y[2], y[3]);
        let ddp = p + n * p - 2.0 * dp / e;
        let lap_p2 = 2.0 * p * ddp + 2.0 * dp * dp + 4.0 * p * dp / e;
        dy[0] = dp;
        dy[1] = ddp;
        dy[2] = dn;
        dy[3] = (4.5 * lap_p2 - 13.0 * e * dn - 14.0 * n) / (2.0 * e * e);
    }

    fn pn(&self, y: &[f64]) -> (f64, f64, f64) {
        (y[0], y[1], y[2])
    }
}

fn output_grid(eta0: f64, eta_max: f64) -> Vec<f64> {
    let mut g = vec![eta0];
    let mut j = (eta0 / ETA_STEP).floor() as usize + 1;
    loop {
        let e = j as f64 * ETA_STEP;
        if e > eta_max + 1e-9 {
            break;
        }
        if e > eta0 * (1.0 + 1e-12) {
            g.push(e);
        }
        j += 1;
    }
    g
}

fn p_scale(p0: f64) -> f64 {
    10.0 * p0.max(1.0)
}

fn shoot_from(seed: &SeriesSeed, grid: &[f64], decay_stop: bool) -> Result<Trajectory> {
    let y0 = seed.eval(seed.eta0);
    run(&Ladder, grid, &y0, p_scale(seed.a[0]), decay_stop)
}

/// Result of a single 3D shot.
#[derive(Debug, Clone)]
pub struct Shot {
    pub eta: Vec<f64>,
    pub p: Vec<f64>,
    pub n: Vec<f64>,
    pub class: ShotClass,
}

/// Integrates the 3D profile equations outward from the series seed of `p0`
/// and classifies the behavior of `P`. An undetermined outcome is retried
/// once on a horizon 1.5× longer.
pub fn shoot_3d(p0: f64, eta_max: f64) -> Result<Shot> {
    if !(p0 > 0.0) {
        return Err(Error::Unsupported(format!("p0 = {p0} must be positive")));
    }
    let seed = series_seed_3d(p0, SERIES_ORDER, SEED_TOL)?;
    let mut tr = shoot_from(&seed, &output_grid(seed.eta0, eta_max), true)?;
    if tr.class == ShotClass::Undetermined {
        tr = shoot_from(&seed, &output_grid(seed.eta0, 1.5 * eta_max), true)?;
    }
    Ok(Shot {
        p: tr.y.iter().map(|y| y[0]).collect(),
        n: tr.y.iter().map(|y| y[2]).collect(),
        eta: tr.eta,
        class: tr.class,
    })
}

/// Locates the `k`-th decaying 3D profile: scan of `(α_k, α_{k+1})`,
/// bisection on `P(0)` to `tol`, then tail continuation to `η = 25`.
pub fn find_profile_3d(k: usize, tol: f64) -> Result<ProfileSolution> {
    let lo_end = alpha_k(k)? + 1e-4;
    let hi_end = alpha_k(k + 1)? - 1e-4;
    let tol = tol.max(4.0 * f64::EPSILON * hi_end);

    let ps: Vec<f64> = (0..SCAN_POINTS)
        .map(|i| lo_end + (hi_end - lo_end) * i as f64 / (SCAN_POINTS - 1) as f64)
        .collect();
    let eta0 = ps
        .iter()
        .filter_map(|&p| series_seed_3d(p, SERIES_ORDER, SEED_TOL).ok())
        .map(|s| s.eta0)
        .fold(0.1f64, f64::min);
    let grid = output_grid(eta0, ETA_MAX);
    let side_of = |p: f64| -> Result<(Option<i8>, Trajectory)> {
        let seed = seed_with_eta0(p, SERIES_ORDER, eta0)?;
        let mut tr = shoot_from(&seed, &grid, false)?;
        if tr.class == ShotClass::Undetermined {
            let longer = output_grid(eta0, 1.5 * ETA_MAX);
            tr = shoot_from(&seed, &longer, false)?;
            tr.eta.truncate(grid.len());
            tr.y.truncate(grid.len());
        }
        Ok((tr.class.side(), tr))
    };

    let mut sides = Vec::with_capacity(ps.len());
    for &p in &ps {
        sides.push(side_of(p)?.0);
    }
    let change = sides
        .windows(2)
        .position(|w| matches!((w[0], w[1]), (Some(a), Some(b)) if a != b))
        .ok_or(Error::BracketFailure {
            lo: lo_end,
            hi: hi_end,
        })?;
    let (mut p_lo, mut p_hi) = (ps[change], ps[change + 1]);
    let s_lo = sides[change];
    let (_, mut tr_lo) = side_of(p_lo)?;
    let (_, mut tr_hi) = side_of(p_hi)?;
    let mut exact: Option<(f64, Trajectory)> = None;
    while p_hi - p_lo > tol {
        let mid = 0.5 * (p_lo + p_hi);
        if mid <= p_lo || mid >= p_hi {
            break;
        }
        let (s, tr) = side_of(mid)?;
        match s {
            None => {
                exact = Some((mid, tr));
                break;
            }
            s if s == s_lo => {
                p_lo = mid;
                tr_lo = tr;
            }
            _ => {
                p_hi = mid;
                tr_hi = tr;
            }
        }
    }
    let (p0, tail) = match exact {
        Some((p, tr)) => (p, tr),
        None => (p_lo, refine_tail(&Ladder, &grid, tr_lo, tr_hi, p_scale(p_lo))?),
    };
    let seed = seed_with_eta0(p0, SERIES_ORDER, eta0)?;
    Ok(assemble(k, &seed, &tail))
}

fn assemble(k: usize, seed: &SeriesSeed, tail: &Trajectory) -> ProfileSolution {
    let mut eta = Vec::new();
    let mut vals: Vec<[f64; 4]> = Vec::new();
    let mut j = 0usize;
    while (j as f64) * ETA_STEP < seed.eta0 * (1.0 - 1e-12) {
        let e = j as f64 * ETA_STEP;
        eta.push(e);
        vals.push(if j == 0 {
            [seed.a[0], 0.0, seed.b[0], 0.0]
        } else {
            seed.eval(e)
        });
        j += 1;
    }
    if eta.is_empty() {
        eta.push(0.0);
        vals.push([seed.a[0], 0.0, seed.b[0], 0.0]);
    }
    for (e, y) in tail.eta.iter().zip(&tail.y) {
        eta.push(*e);
        vals.push([y[0], y[1], y[2], y[3]]);
    }
    let p: Vec<f64> = vals.iter().map(|v| v[0]).collect();
    let dp: Vec<f64> = vals.iter().map(|v| v[1]).collect();
    let n: Vec<f64> = vals.iter().map(|v| v[2]).collect();
    let dn: Vec<f64> = vals.iter().map(|v| v[3]).collect();
    let hi = DECAY_WINDOW.1.min(*eta.last().unwrap());
    let decay = decay_fit(&eta, &p, &n, DECAY_WINDOW.0, hi);
    let residual = ladder_residual(&eta, &p, &dp, &n, &dn);
    ProfileSolution {
        family: Family::Ladder3d,
        parameter: k as f64,
        p0: seed.a[0],
        n0: seed.b[0],
        eta,
        p,
        n,
        dp,
        dn,
        decay,
        residual,
    }
}

/// Max residual of both profile equations, with second derivatives from a
/// sixth-order difference of the stored first derivatives on the uniform
/// part of the grid.
pub(crate) fn ladder_residual(eta: &[f64], p: &[f64], dp: &[f64], n: &[f64], dn: &[f64]) -> f64 {
    let mut worst = 0.0f64;
    for i in 3..eta.len().saturating_sub(3) {
        let h = eta[i + 1] - eta[i];
        let uniform = (eta[i - 3..=i + 3]
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(0.0f64, |m, d| m.max((d - h).abs())))
            < 1e-9;
        if !uniform || eta[i] < 0.5 {
            continue;
        }
        let d6 = |f: &[f64]| {
            (-f[i - 3] + 9.0 * f[i - 2] - 45.0 * f[i - 1] + 45.0 * f[i + 1] - 9.0 * f[i + 2]
                + f[i + 3])
                / (60.0 * h)
        };
        let ddp = d6(dp);
        let ddn = d6(dn);
        let e = eta[i];
        let r1 = ddp + 2.0 * dp[i] / e - p[i] - n[i] * p[i];
        let lap_p2 = 2.0 * p[i] * ddp + 2.0 * dp[i] * dp[i] + 4.0 * p[i] * dp[i] / e;
        let r2 = (2.0 / 9.0) * (2.0 * e * e * ddn + 13.0 * e * dn[i] + 14.0 * n[i]) - lap_p2;
        worst = worst.max(r1.abs()).max(r2.abs());
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::n0_from_p0;

    /// Coefficients of a product of even series in powers of `η²`.
    fn mul(x: &[f64], y: &[f64], len: usize) -> Vec<f64> {
        let mut out = vec![0.0; len];
        for (i, a) in x.iter().enumerate() {
            for (j, b) in y.iter().enumerate() {
                if i + j < len {
                    out[i + j] += a * b;
                }
            }
        }
        out
    }

    /// 3D Laplacian of `Σ c_i η^{2i}` as a series in `η²`.
    fn lap3(c: &[f64]) -> Vec<f64> {
        (0..c.len() - 1)
            .map(|j| {
                let m = (2 * j + 2) as f64;
                m * (m + 1.0) * c[j + 1]
            })
            .collect()
    }

    #[test]
    fn series_matches_power_substitution() {
        let seed = series_seed_3d(1.38, 4, 1e-12).unwrap();
        let (a, b) = (&seed.a, &seed.b);
        let len = 4;
        // ΔP - P - NP = 0 through η^{2(len-1)}
        let lp = lap3(a);
        let np = mul(b, a, len);
        for j in 0..len {
            let r = lp[j] - a[j] - np[j];
            assert!(r.abs() < 1e-10 * (1.0 + a[j].abs()), "P eq order {j}: {r}");
        }
        // (2/9)(2η²N'' + 13ηN' + 14N) = Δ(P²)
        let p2 = mul(a, a, len + 1);
        let lp2 = lap3(&p2);
        for j in 0..len {
            let m = 2.0 * j as f64;
            let lhs = 2.0 / 9.0 * (2.0 * m * (m - 1.0) + 13.0 * m + 14.0) * b[j];
            assert!((lhs - lp2[j]).abs() < 1e-10 * (1.0 + lhs.abs()), "N eq order {j}");
        }
        assert_eq!(a[0], 1.38);
        assert!((b[0] - n0_from_p0(1.38).unwrap()).abs() < 1e-14);
    }

    #[test]
    fn seed_consistent_with_integrator() {
        let tol = 1e-12;
        let seed = series_seed_3d(2.0, SERIES_ORDER, tol).unwrap();
        assert!((1e-3..=0.1).contains(&seed.eta0));
        assert!(seed.remainder(seed.eta0) <= tol * 1.0001);
        let y0 = seed.eval(seed.eta0);
        let target = 1.5 * seed.eta0;
        let mut end = y0.to_vec();
        crate::ode::integrate(
            |e, y, dy| Ladder.rhs(e, y, dy),
            seed.eta0,
            &y0,
            &[target],
            &super::super::shooting::ode_options(),
            |_, y| {
                end = y.to_vec();
                crate::ode::Control::Continue
            },
        )
        .unwrap();
        let direct = seed.eval(target);
        for c in [0, 2] {
            assert!((end[c] - direct[c]).abs() < 1e-9, "{c}: {} vs {}", end[c], direct[c]);
        }
    }

    #[test]
    fn resonant_seed_rejected() {
        let a1 = alpha_k(1).unwrap();
        assert!(matches!(shoot_3d(a1, 25.0), Err(Error::Resonance { index: 1, .. })));
        let a3 = alpha_k(3).unwrap();
        assert!(matches!(
            series_seed_3d(a3 + 1e-8, 4, 1e-12),
            Err(Error::Resonance { index: 3, .. })
        ));
    }

    #[test]
    fn shots_bracket_first_profile() {
        let below = shoot_3d(1.37, 25.0).unwrap();
        let above = shoot_3d(1.39, 25.0).unwrap();
        assert!(below.class.side().is_some());
        assert!(above.class.side().is_some());
        assert_ne!(below.class.side(), above.class.side());
    }

    #[test]
    fn first_profile() {
        let sol = find_profile_3d(1, 1e-13).unwrap();
        assert!((sol.p0 - 1.38).abs() < 0.02, "{}", sol.p0);
        assert!((sol.n0 - n0_from_p0(sol.p0).unwrap()).abs() < 1e-12);
        assert!(sol.eta_max() >= 24.99, "tail reached {}", sol.eta_max());
        assert!(sol.is_positive());
        assert!(sol.n.iter().all(|&v| v < 0.0));
        assert!(sol.decay.p_rate > 0.0);
        assert!(sol.decay.n_exponent <= -2.0, "{}", sol.decay.n_exponent);
        assert!(sol.residual < 1e-6, "residual {}", sol.residual);
    }
}
