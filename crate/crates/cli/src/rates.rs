use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use anyhow::{anyhow, Context};

use zakharov::diagnostics::{rate_bound_check, DiagnosticSeries, RunReport};
use zakharov::evolve::estimate_tstar_for_dim;

use crate::output::{say, tag, unix_millis, RunDir, RunManifest};
use crate::{CmdResult, Failure, EXIT_CHECK, EXIT_OK};

pub fn run(root: &Path, series_path: &Path, dim: usize, ell: &[f64]) -> CmdResult {
    let started = unix_millis();
    if !(1..=3).contains(&dim) {
        return Err(Failure::config(anyhow!("--dim must be 1, 2 or 3, got {dim}")));
    }
    let file = File::open(series_path)
        .with_context(|| format!("opening {}", series_path.display()))
        .map_err(Failure::config)?;
    let series = DiagnosticSeries::read_csv(BufReader::new(file))?;
    let mut rep = RunReport::default();
    match estimate_tstar_for_dim(&series, dim) {
        Ok(f) => {
            rep.push("t*", f.t_star, "", None);
            rep.push("exponent grad-psi-L2", f.exponent, "", None);
            rep.push("fit residual", f.residual, "", None);
        }
        Err(e) => rep.notes.push(format!("t* fit: {e}")),
    }
    for &l in ell {
        match rate_bound_check(&series, dim, l) {
            Ok(r) => {
                rep.push(
                    format!("theta triple l={l}"),
                    r.theta_fit,
                    format!(">= {:.3}", r.theta_bound - zakharov::diagnostics::RATE_MARGIN),
                    Some(r.pass),
                );
                for (name, e) in &r.components {
                    rep.push(format!("exponent {name}"), *e, "", None);
                }
            }
            Err(e) => {
                rep.push(format!("theta triple l={l}"), f64::NAN, "fit", Some(false));
                rep.notes.push(format!("rate fit l={l}: {e}"));
            }
        }
    }
    let code = if rep.all_pass() { EXIT_OK } else { EXIT_CHECK };
    let stem = series_path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("series");
    let parent = series_path
        .parent()
        .and_then(|p| p.file_name())
        .and_then(|s| s.to_str())
        .map(|s| format!("{s}-"))
        .unwrap_or_default();
    let text = rep.to_text();
    let mut dir = RunDir::create(root, &format!("rates-{parent}{stem}-d{dim}"))?;
    dir.write_text("rates.txt", &text)?;
    {
        let mut w = dir.file("rates.csv")?;
        rep.write_csv(&mut w)?;
        std::io::Write::flush(&mut w)?;
    }
    let ells: Vec<String> = ell.iter().map(|&l| tag(l)).collect();
    let path = dir.commit(RunManifest {
        command: format!(
            "rates --series {} --dim {dim} --ell {}",
            series_path.display(),
            ells.join(" ")
        ),
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
