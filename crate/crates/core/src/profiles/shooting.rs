//! Shooting on radial profile ODEs whose decaying solution separates two
//! families of diverging ones.
//!
//! Bisection on a scalar parameter only pins the decaying trajectory up to the
//! point where rounding in the parameter is amplified past the solution
//! itself. Past that point the tail is continued by bisecting along the
//! segment between the two bracketing *states* at the last radius where they
//! still agree, which restarts the amplification from rounding level.

use crate::error::Result;
use crate::ode::{integrate, Control, OdeOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShotClass {
    /// `|P|` fell below the decay threshold before any divergence.
    Decays,
    /// `P` turned upward and grows exponentially.
    DivergesPlus,
    /// `P` became large and negative.
    DivergesMinus,
    /// `P` changed sign.
    CrossesZero,
    /// None of the above by the end of the horizon.
    Undetermined,
}

impl ShotClass {
    /// Side of the decaying solution this shot lies on.
    pub fn side(self) -> Option<i8> {
        match self {
            ShotClass::DivergesPlus => Some(1),
            ShotClass::DivergesMinus | ShotClass::CrossesZero => Some(-1),
            ShotClass::Decays | ShotClass::Undetermined => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ShotClass::Decays => "decays",
            ShotClass::DivergesPlus => "diverges+",
            ShotClass::DivergesMinus => "diverges-",
            ShotClass::CrossesZero => "crosses-zero",
            ShotClass::Undetermined => "undetermined",
        }
    }
}

pub(crate) trait ShootingSystem {
    fn rhs(&self, eta: f64, y: &[f64], dy: &mut [f64]);

    /// `(P, P', N)` from a state vector.
    fn pn(&self, y: &[f64]) -> (f64, f64, f64);

    /// Classification of the state at `eta`; `decay_stop` enables the
    /// [`ShotClass::Decays`] outcome.
    fn classify(&self, eta: f64, y: &[f64], p_scale: f64, decay_stop: bool) -> Option<ShotClass> {
        let (p, dp, n) = self.pn(y);
        if !p.is_finite() {
            return Some(ShotClass::DivergesMinus);
        }
        if p < 0.0 {
            return Some(if p < -p_scale {
                ShotClass::DivergesMinus
            } else {
                ShotClass::CrossesZero
            });
        }
        if decay_stop && p < 1e-8 && dp <= 0.0 {
            return Some(ShotClass::Decays);
        }
        if eta > 1.0 && dp > 0.0 && 1.0 + n > 0.0 {
            // P'' > 0 as well: the growing exponential has taken over
            let mut dy = vec![0.0; y.len()];
            self.rhs(eta, y, &mut dy);
            let ddp = self.second_derivative(y, &dy);
            if ddp > 0.0 {
                return Some(ShotClass::DivergesPlus);
            }
        }
        if p > p_scale {
            return Some(ShotClass::DivergesPlus);
        }
        None
    }

    /// `P''` given the state and its derivative.
    fn second_derivative(&self, _y: &[f64], dy: &[f64]) -> f64 {
        dy[1]
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Trajectory {
    pub eta: Vec<f64>,
    pub y: Vec<Vec<f64>>,
    pub class: ShotClass,
}

impl Trajectory {
    fn truncate(&mut self, len: usize) {
        self.eta.truncate(len);
        self.y.truncate(len);
    }
}

pub(crate) fn ode_options() -> OdeOptions {
    OdeOptions {
        rtol: 1e-10,
        atol: 1e-14,
        ..OdeOptions::default()
    }
}

/// Integrates from `grid[0]` with state `y0` through the remaining grid points
/// and stops at the first classification.
pub(crate) fn run<S: ShootingSystem>(
    sys: &S,
    grid: &[f64],
    y0: &[f64],
    p_scale: f64,
    decay_stop: bool,
) -> Result<Trajectory> {
    let mut eta = vec![grid[0]];
    let mut ys = vec![y0.to_vec()];
    let mut class = ShotClass::Undetermined;
    integrate(
        |t, y, dy| sys.rhs(t, y, dy),
        grid[0],
        y0,
        &grid[1..],
        &ode_options(),
        |t, y| {
            eta.push(t);
            ys.push(y.to_vec());
            match sys.classify(t, y, p_scale, decay_stop) {
                Some(c) => {
                    class = c;
                    Control::Stop
                }
                None => Control::Continue,
            }
        },
    )?;
    Ok(Trajectory { eta, y: ys, class })
}

fn agree(a: &[f64], b: &[f64]) -> bool {
    a.iter()
        .zip(b)
        .all(|(x, y)| (x - y).abs() <= 1e-8 * x.abs().max(y.abs()) + 1e-300)
}

/// First index at which the two trajectories disagree.
fn split_index(lo: &Trajectory, hi: &Trajectory) -> usize {
    let n = lo.y.len().min(hi.y.len());
    (0..n).find(|&i| !agree(&lo.y[i], &hi.y[i])).unwrap_or(n)
}

/// Extends the decaying solution bracketed by `lo` and `hi` (opposite sides,
/// common grid) toward the end of `grid`. Returns the trajectory restricted to
/// the range where it is trustworthy.
pub(crate) fn refine_tail<S: ShootingSystem>(
    sys: &S,
    grid: &[f64],
    mut lo: Trajectory,
    mut hi: Trajectory,
    p_scale: f64,
) -> Result<Trajectory> {
    let full = grid.len();
    let mut prev_split = 0usize;
    loop {
        if lo.class.side().is_none() && lo.y.len() == full {
            return Ok(lo);
        }
        if hi.class.side().is_none() && hi.y.len() == full {
            return Ok(hi);
        }
        let split = split_index(&lo, &hi);
        let start = split.saturating_sub(1);
        if split >= full || start <= prev_split && prev_split > 0 {
            lo.truncate(split.max(1));
            lo.class = ShotClass::Undetermined;
            return Ok(lo);
        }
        prev_split = start;
        let side_lo = lo.class.side();
        let (ya, yb) = (lo.y[start].clone(), hi.y[start].clone());
        let mut t_lo = 0.0f64;
        let mut t_hi = 1.0f64;
        let mut seg_lo: Option<Trajectory> = None;
        let mut seg_hi: Option<Trajectory> = None;
        let mut done: Option<Trajectory> = None;
        for _ in 0..80 {
            let t = 0.5 * (t_lo + t_hi);
            if t <= t_lo || t >= t_hi {
                break;
            }
            let y: Vec<f64> = ya.iter().zip(&yb).map(|(a, b)| a + t * (b - a)).collect();
            let tr = run(sys, &grid[start..], &y, p_scale, false)?;
            match tr.class.side() {
                None => {
                    done = Some(tr);
                    break;
                }
                s if s == side_lo => {
                    t_lo = t;
                    seg_lo = Some(tr);
                }
                _ => {
                    t_hi = t;
                    seg_hi = Some(tr);
                }
            }
        }
        let splice = |base: &Trajectory, seg: Trajectory| {
            let mut eta = base.eta[..start].to_vec();
            let mut y = base.y[..start].to_vec();
            eta.extend(seg.eta);
            y.extend(seg.y);
            Trajectory {
                eta,
                y,
                class: seg.class,
            }
        };
        if let Some(tr) = done {
            return Ok(splice(&lo, tr));
        }
        match (seg_lo, seg_hi) {
            (Some(a), Some(b)) => {
                let new_lo = splice(&lo, a);
                let new_hi = splice(&hi, b);
                lo = new_lo;
                hi = new_hi;
            }
            (Some(a), None) => lo = splice(&lo, a),
            (None, Some(b)) => hi = splice(&hi, b),
            (None, None) => {
                lo.truncate(split.max(1));
                return Ok(lo);
            }
        }
    }
}
