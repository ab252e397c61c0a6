use std::fmt::Write as _;
use std::io::Write;

use serde::Serialize;

use super::{rate_bound_check, variance_identity_residual, DiagnosticSeries};
use crate::error::Result;
use crate::evolve::estimate_tstar_for_dim;

/// Largest relative deviation of a conserved column from its initial value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Drift {
    pub quantity: String,
    pub initial: f64,
    pub max_relative: f64,
}

/// Drifts of mass, Hamiltonian and (when present) momenta. Momenta are
/// measured against `‖ψ‖_{L²} ‖∇ψ‖_{L²}` at the first sample.
pub fn conservation_drifts(series: &DiagnosticSeries) -> Result<Vec<Drift>> {
    let mut out = Vec::new();
    if series.is_empty() {
        return Ok(out);
    }
    let mass = series.column("mass")?;
    let grad = series.column("grad-psi-L2")?;
    let p_scale = mass[0].sqrt() * grad[0];
    let mut names = vec!["mass", "hamiltonian"];
    for c in ["momentum-x", "momentum-y", "momentum-z", "angular-momentum"] {
        if series.has_column(c) {
            names.push(c);
        }
    }
    for name in names {
        let col = series.column(name)?;
        let x0 = col[0];
        let scale = if name.contains("momentum") {
            x0.abs().max(p_scale)
        } else {
            x0.abs()
        };
        let dev = col.iter().fold(0.0f64, |a, v| a.max((v - x0).abs()));
        let max_relative = if scale > 0.0 {
            dev / scale
        } else if dev == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        out.push(Drift {
            quantity: name.to_string(),
            initial: x0,
            max_relative,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportEntry {
    pub name: String,
    pub value: f64,
    pub target: String,
    pub pass: Option<bool>,
}

/// Plain-text and CSV summary of one run.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RunReport {
    pub entries: Vec<ReportEntry>,
    pub notes: Vec<String>,
}

/// Mass drift tolerated per unit time on resolved runs.
pub const MASS_DRIFT_RATE: f64 = 1e-10;
/// Relative Hamiltonian drift tolerated on resolved runs.
pub const HAMILTONIAN_DRIFT: f64 = 1e-6;
/// Relative variance-identity residual tolerated.
pub const VARIANCE_RESIDUAL: f64 = 1e-2;

impl RunReport {
    pub fn push(&mut self, name: impl Into<String>, value: f64, target: impl Into<String>, pass: Option<bool>) {
        self.entries.push(ReportEntry {
            name: name.into(),
            value,
            target: target.into(),
            pass,
        });
    }

    pub fn all_pass(&self) -> bool {
        self.entries.iter().all(|e| e.pass != Some(false))
    }

    /// Conservation, blowup-fit, rate, variance and modified-variance entries
    /// for a series from a `dim`-dimensional run. `blowup` selects the fits
    /// that only make sense for a collapsing run; conservation entries are
    /// graded only for runs that are not.
    pub fn analyze(series: &DiagnosticSeries, dim: usize, ell: &[f64], blowup: bool) -> Result<RunReport> {
        let mut rep = RunReport::default();
        if series.is_empty() {
            rep.notes.push("empty series".into());
            return Ok(rep);
        }
        let t = series.column("t")?;
        let span = (t[t.len() - 1] - t[0]).max(0.0);
        for d in conservation_drifts(series)? {
            let (target, pass) = match d.quantity.as_str() {
                "mass" => (
                    format!("< {:.1e}", MASS_DRIFT_RATE * span.max(1.0)),
                    d.max_relative < MASS_DRIFT_RATE * span.max(1.0),
                ),
                _ => (format!("< {HAMILTONIAN_DRIFT:.0e}"), d.max_relative < HAMILTONIAN_DRIFT),
            };
            let pass = if blowup { None } else { Some(pass) };
            rep.push(format!("drift {}", d.quantity), d.max_relative, target, pass);
        }
        if blowup {
            match estimate_tstar_for_dim(series, dim) {
                Ok(f) => {
                    rep.push("t*", f.t_star, "", None);
                    rep.push("exponent |grad psi|", f.exponent, "", None);
                }
                Err(e) => rep.notes.push(format!("t* fit: {e}")),
            }
            for &l in ell {
                match rate_bound_check(series, dim, l) {
                    Ok(r) => {
                        rep.push(
                            format!("theta triple l={l}"),
                            r.theta_fit,
                            format!(">= {:.3}", r.theta_bound - super::checks::RATE_MARGIN),
                            Some(r.pass),
                        );
                        for (name, e) in &r.components {
                            rep.push(format!("exponent {name}"), *e, "", None);
                        }
                    }
                    Err(e) => rep.notes.push(format!("rate fit l={l}: {e}")),
                }
            }
        }
        if series.has_column("variance-w") {
            match variance_identity_residual(series) {
                Ok(v) => {
                    let pass = if blowup { None } else { Some(v.residual < VARIANCE_RESIDUAL) };
                    rep.push("variance identity residual", v.residual, format!("< {VARIANCE_RESIDUAL:.0e}"), pass);
                    let concave = v.d2v.iter().all(|&x| x < 0.0);
                    rep.push("max d2V/dt2", v.d2v.iter().cloned().fold(f64::MIN, f64::max), "", None);
                    if concave {
                        rep.notes.push("d2V/dt2 < 0 at every interior sample".into());
                    }
                }
                Err(e) => rep.notes.push(format!("variance identity: {e}")),
            }
        }
        let h = series.column("hamiltonian")?[0];
        let ym: Vec<String> = series
            .columns()
            .iter()
            .filter(|c| c.starts_with("ym-"))
            .cloned()
            .collect();
        if h < 0.0 {
            let rate = 0.5 * dim as f64 * h.abs();
            for c in ym {
                let y = series.column(&c)?;
                let ratio = t
                    .iter()
                    .zip(&y)
                    .filter(|(ti, _)| **ti > t[0])
                    .map(|(ti, yi)| yi / (rate * (ti - t[0])))
                    .fold(f64::INFINITY, f64::min);
                rep.push(format!("min {c} / ((d/2)|H| t)"), ratio, ">= 0.9", Some(ratio >= 0.9));
            }
        }
        Ok(rep)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for e in &self.entries {
            let status = match e.pass {
                Some(true) => "pass",
                Some(false) => "FAIL",
                None => "-",
            };
            let _ = writeln!(s, "{:<40} {:>16.8e}  {:<12} {}", e.name, e.value, e.target, status);
        }
        for n in &self.notes {
            let _ = writeln!(s, "note: {n}");
        }
        s
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "name,value,target,pass")?;
        for e in &self.entries {
            let pass = match e.pass {
                Some(true) => "pass",
                Some(false) => "fail",
                None => "",
            };
            writeln!(w, "{},{:.16e},{},{}", csv_field(&e.name), e.value, csv_field(&e.target), pass)?;
        }
        Ok(())
    }
}

/// Quotes a field that holds a comma, quote or newline.
fn csv_field(s: &str) -> std::borrow::Cow<'_, str> {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\"")).into()
    } else {
        s.into()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_quotes_fields_with_commas() {
        let mut r = RunReport::default();
        r.push("bracket", 1.5, "(1, 2)", Some(true));
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().nth(1).unwrap(), "bracket,1.5000000000000000e0,\"(1, 2)\",pass");
    }

    #[test]
    fn drifts_of_constant_columns_are_zero() {
        let mut s = DiagnosticSeries::new(vec!["t".into(), "mass".into(), "hamiltonian".into(), "grad-psi-L2".into()]);
        for i in 0..5 {
            s.push(vec![i as f64, 2.0, -1.0, 1.0]).unwrap();
        }
        let d = conservation_drifts(&s).unwrap();
        assert!(d.iter().all(|x| x.max_relative == 0.0));
        let rep = RunReport::analyze(&s, 2, &[0.0], false).unwrap();
        assert!(rep.all_pass());
        assert!(rep.to_text().contains("drift mass"));
        let mut buf = Vec::new();
        rep.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("name,value,target,pass\n"));
    }
}
