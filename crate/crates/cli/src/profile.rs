use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use zakharov::profiles::{alpha_k, find_profile_2d, find_profile_3d, ground_state_2d, n0_from_p0, Family, ProfileSolution};

use crate::output::{say, tag, unix_millis, RunDir, RunManifest};
use crate::{CmdResult, Failure, EXIT_OK};

fn verdict(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "fail"
    }
}

fn summary(sol: &ProfileSolution, tol: f64) -> Result<String, Failure> {
    let mut s = String::new();
    let _ = writeln!(s, "family = {}", sol.family);
    let _ = writeln!(s, "parameter = {}", sol.parameter);
    let _ = writeln!(s, "P0 = {:.10}", sol.p0);
    let _ = writeln!(s, "N0 = {:.10}", sol.n0);
    let _ = writeln!(s, "eta_max = {}", sol.eta_max());
    let _ = writeln!(s, "ode residual = {:.3e}", sol.residual);
    let _ = writeln!(
        s,
        "decay: delta = {:.6}, N tail exponent = {:.6} on [{}, {}]",
        sol.decay.p_rate, sol.decay.n_exponent, sol.decay.window.0, sol.decay.window.1
    );
    let _ = writeln!(s, "mass = {:.10}", sol.mass());
    match sol.family {
        Family::Ladder3d => {
            let k = sol.parameter as usize;
            let (lo, hi) = (alpha_k(k)?, alpha_k(k + 1)?);
            let _ = writeln!(
                s,
                "alpha bracket: {lo:.10} < {:.10} < {hi:.10} = {}",
                sol.p0,
                verdict(lo < sol.p0 && sol.p0 < hi)
            );
            let rel = (sol.n[0] - n0_from_p0(sol.p0)?).abs();
            let _ = writeln!(s, "N0 relation residual = {rel:.3e} ({})", verdict(rel < 1e-8));
            let _ = writeln!(
                s,
                "decay check (delta > 0, N exponent <= -2) = {}",
                verdict(sol.decay.p_rate > 0.0 && sol.decay.n_exponent <= -2.0)
            );
        }
        Family::Ground2d => {
            let ok = sol.is_positive() && sol.is_monotone_decreasing();
            let _ = writeln!(s, "monotone-positive check = {}", verdict(ok));
        }
        Family::Family2d => {
            if sol.parameter == 0.0 {
                let res = sol
                    .p
                    .iter()
                    .zip(&sol.n)
                    .fold(0.0f64, |m, (p, n)| m.max((n + p * p).abs()));
                let _ = writeln!(s, "N = -P^2 identity residual = {res:.3e} ({})", verdict(res < tol));
            }
        }
    }
    Ok(s)
}

pub fn run(root: &Path, family: Family, k: usize, a: f64, tol: f64) -> CmdResult {
    let started = unix_millis();
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Failure::config(anyhow::anyhow!("--tol must lie in (0, 1), got {tol}")));
    }
    let (sol, name) = match family {
        Family::Ladder3d => (find_profile_3d(k, tol)?, format!("profile-ladder3d-k{k}")),
        Family::Family2d => (find_profile_2d(a, tol)?, format!("profile-family2d-a{}", tag(a))),
        Family::Ground2d => (ground_state_2d(tol)?, "profile-ground2d".to_string()),
    };
    let text = summary(&sol, tol)?;
    let mut dir = RunDir::create(root, &name)?;
    {
        let mut w = dir.file("profile.csv")?;
        writeln!(w, "eta,P,dP,N,dN")?;
        for i in 0..sol.eta.len() {
            writeln!(
                w,
                "{:.10e},{:.16e},{:.16e},{:.16e},{:.16e}",
                sol.eta[i], sol.p[i], sol.dp[i], sol.n[i], sol.dn[i]
            )?;
        }
        w.flush()?;
    }
    dir.write_text("summary.txt", &text)?;
    let path = dir.commit(RunManifest {
        command: format!("profile --family {family} --k {k} --a {a} --tol {tol}"),
        config_hash: None,
        started_unix_ms: started,
        finished_unix_ms: 0,
        outputs: Vec::new(),
        stop_reason: None,
        exit_code: EXIT_OK,
    })?;
    say(&format!("{text}outputs in {}\n", path.display()));
    Ok(EXIT_OK)
}
