use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use zakharov::diagnostics::{strauss_ratio, vector_symbol_check, RunReport};
use zakharov::profiles::{alpha_k, find_profile_3d, n0_from_p0};
use zakharov::{Grid, RealField};

use crate::output::{say, unix_millis, RunDir, RunManifest};
use crate::{CmdResult, EXIT_CHECK, EXIT_OK};

/// Published central values of `P_k(0)`, k = 1..4.
pub const LADDER_P0: [f64; 4] = [1.38, 2.43, 3.42, 4.40];
const LADDER_P0_TOL: f64 = 0.02;
const LADDER_TOL: f64 = 1e-10;
const N0_TOL: f64 = 1e-8;
const SYMBOL_TOL: f64 = 1e-10;
/// Uniform constant asserted for the Strauss ratio over the test family.
pub const STRAUSS_BOUND: f64 = 4.0;

fn ladder_rows(rep: &mut RunReport) {
    for k in 1..=4 {
        let sol = match find_profile_3d(k, LADDER_TOL) {
            Ok(s) => s,
            Err(e) => {
                rep.push(format!("ladder k={k} converged"), f64::NAN, "", Some(false));
                rep.notes.push(format!("ladder k={k}: {e}"));
                continue;
            }
        };
        let p0 = sol.p0;
        let reference = LADDER_P0[k - 1];
        rep.push(
            format!("P_{k}(0) vs {reference}"),
            p0,
            format!("+- {LADDER_P0_TOL}"),
            Some((p0 - reference).abs() <= LADDER_P0_TOL),
        );
        let (lo, hi) = (alpha_k(k).expect("k >= 1"), alpha_k(k + 1).expect("k >= 1"));
        rep.push(
            format!("alpha_{k} < P_{k}(0) < alpha_{}", k + 1),
            p0,
            format!("({lo:.6}, {hi:.6})"),
            Some(lo < p0 && p0 < hi),
        );
        let rel = n0_from_p0(p0).map(|n0| (sol.n[0] - n0).abs()).unwrap_or(f64::INFINITY);
        rep.push(format!("N0 relation k={k}"), rel, format!("< {N0_TOL:.0e}"), Some(rel < N0_TOL));
        rep.push(
            format!("P decay rate k={k}"),
            sol.decay.p_rate,
            "> 0",
            Some(sol.decay.p_rate > 0.0),
        );
        rep.push(
            format!("N tail exponent k={k}"),
            sol.decay.n_exponent,
            "<= -2",
            Some(sol.decay.n_exponent <= -2.0),
        );
    }
}

fn symbol_rows(rep: &mut RunReport, seed: u64, samples: usize) {
    for (xi, alpha) in [(vec![1.0, 0.0], 2.0), (vec![1.0, 1.0, 1.0], 4.0)] {
        if let Ok(c) = vector_symbol_check(&xi, alpha) {
            rep.notes.push(format!(
                "symbol xi = {xi:?}, alpha = {alpha}: eigenvalues {:?}, expected {{|xi|^2, alpha|xi|^2}} = {:?}",
                c.eigenvalues, c.expected
            ));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for d in 2..=3 {
        let mut worst = 0.0f64;
        let mut bounds = true;
        for _ in 0..samples {
            let xi: Vec<f64> = (0..d).map(|_| rng.random_range(-10.0..10.0)).collect();
            let alpha = rng.random_range(1.0..50.0);
            match vector_symbol_check(&xi, alpha) {
                Ok(c) => {
                    worst = worst.max(c.max_error);
                    bounds &= c.bounds_ok;
                }
                // a draw of exactly zero is not a valid sample
                Err(_) => continue,
            }
        }
        rep.push(
            format!("symbol d={d}: {samples} samples, max error"),
            worst,
            format!("< {SYMBOL_TOL:.0e}"),
            Some(worst < SYMBOL_TOL),
        );
        rep.push(format!("symbol d={d}: |xi|^2 <= M <= alpha|xi|^2"), 0.0, "", Some(bounds));
    }
}

type Radial = (&'static str, fn(f64) -> f64);

fn strauss_family() -> [Radial; 5] {
    [
        ("exp(-r)", |r| (-r).exp()),
        ("exp(-r^2)", |r| (-r * r).exp()),
        ("(1+r^2)^-2", |r| (1.0 + r * r).powi(-2)),
        ("r^2 exp(-r)", |r| r * r * (-r).exp()),
        ("sech(r)", |r| 1.0 / r.cosh()),
    ]
}

fn strauss_rows(rep: &mut RunReport) {
    let extent = 40.0;
    let points = 8000;
    for d in 2..=3 {
        let grid = Grid::radial(d, extent, points).expect("valid grid");
        let wide = Grid::radial(d, 2.0 * extent, points).expect("valid grid");
        let mut worst = 0.0f64;
        let mut scale_err = 0.0f64;
        let mut dilation_err = 0.0f64;
        let mut failed = None;
        for (name, f) in strauss_family() {
            let field = RealField::from_radial_fn(grid.clone(), f);
            let dilated = RealField::from_radial_fn(wide.clone(), |r| f(r / 2.0));
            let scaled = field.map(|x| 7.5 * x);
            for r_cut in [0.5, 1.0, 2.0, 4.0] {
                let q = strauss_ratio(&field, r_cut);
                let qs = strauss_ratio(&scaled, r_cut);
                let qd = strauss_ratio(&dilated, 2.0 * r_cut);
                match (q, qs, qd) {
                    (Ok(q), Ok(qs), Ok(qd)) => {
                        worst = worst.max(q);
                        scale_err = scale_err.max((qs / q - 1.0).abs());
                        dilation_err = dilation_err.max((qd / q - 1.0).abs());
                    }
                    (Err(e), _, _) | (_, Err(e), _) | (_, _, Err(e)) => {
                        failed = Some(format!("strauss d={d} {name} R={r_cut}: {e}"));
                    }
                }
            }
        }
        if let Some(msg) = failed {
            rep.notes.push(msg);
            rep.push(format!("strauss d={d} evaluated"), 0.0, "", Some(false));
        }
        rep.push(
            format!("strauss d={d}: max ratio over test family"),
            worst,
            format!("<= {STRAUSS_BOUND}"),
            Some(worst <= STRAUSS_BOUND),
        );
        rep.push(format!("strauss d={d}: f -> 7.5 f invariance"), scale_err, "< 1e-12", Some(scale_err < 1e-12));
        rep.push(
            format!("strauss d={d}: dilation x2 invariance"),
            dilation_err,
            "< 1e-10",
            Some(dilation_err < 1e-10),
        );
    }
}

/// The full check table.
pub fn report(seed: u64, samples: usize) -> RunReport {
    let mut rep = RunReport::default();
    ladder_rows(&mut rep);
    symbol_rows(&mut rep, seed, samples);
    strauss_rows(&mut rep);
    rep
}

pub fn run(root: &Path, seed: u64, samples: usize) -> CmdResult {
    let started = unix_millis();
    let rep = report(seed, samples);
    let code = if rep.all_pass() { EXIT_OK } else { EXIT_CHECK };
    let text = rep.to_text();
    let mut dir = RunDir::create(root, "check")?;
    dir.write_text("check.txt", &text)?;
    {
        let mut w = dir.file("check.csv")?;
        rep.write_csv(&mut w)?;
        std::io::Write::flush(&mut w)?;
    }
    let path = dir.commit(RunManifest {
        command: format!("check --seed {seed} --samples {samples}"),
        config_hash: None,
        started_unix_ms: started,
        finished_unix_ms: 0,
        outputs: Vec::new(),
        stop_reason: None,
        exit_code: code,
    })?;
    say(&format!("{text}outputs in {}\n", path.display()));
    Ok(code)
}
