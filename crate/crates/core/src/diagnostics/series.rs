use std::io::{BufRead, Write};

use super::{hamiltonian, momenta, modified_variance_rate, sup_norm, variance_terms, velocity_energy};
use crate::error::{Error, Result};
use crate::evolve::WaveState;
use crate::grid::GridKind;
use crate::spectral::{dirichlet_energy, mass, sobolev_norm, sobolev_seminorm};

/// Time series of diagnostics, one row per sample; column `t` comes first.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticSeries {
    columns: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl DiagnosticSeries {
    pub fn new(columns: Vec<String>) -> Self {
        DiagnosticSeries {
            columns,
            rows: Vec::new(),
        }
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn has_column(&self, name: &str) -> bool {
        self.columns.iter().any(|c| c == name)
    }

    /// Appends a row; times must increase strictly.
    pub fn push(&mut self, row: Vec<f64>) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(Error::LengthMismatch {
                len: row.len(),
                expected: self.columns.len(),
            });
        }
        if let Some(last) = self.rows.last() {
            if !(row[0] > last[0]) {
                return Err(Error::Unsupported(format!(
                    "sample times must increase: {} after {}",
                    row[0], last[0]
                )));
            }
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        let i = self
            .columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))?;
        Ok(self.rows.iter().map(|r| r[i]).collect())
    }

    /// Rows with index in `range`.
    pub fn slice(&self, range: std::ops::Range<usize>) -> DiagnosticSeries {
        DiagnosticSeries {
            columns: self.columns.clone(),
            rows: self.rows[range].to_vec(),
        }
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{}", self.columns.join(","))?;
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
            writeln!(w, "{}", line.join(","))?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = loop {
            match lines.next() {
                Some(line) => {
                    let line = line?;
                    if !line.trim().is_empty() && !line.starts_with('#') {
                        break line;
                    }
                }
                None => return Err(Error::MissingColumn("t".into())),
            }
        };
        let columns: Vec<String> = header.split(',').map(|s| s.trim().to_string()).collect();
        if columns.first().map(String::as_str) != Some("t") {
            return Err(Error::MissingColumn("t".into()));
        }
        let mut series = DiagnosticSeries::new(columns);
        for (k, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let row = line
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<f64>, _>>()
                .map_err(|e| Error::Unsupported(format!("line {}: {e}", k + 2)))?;
            series.push(row)?;
        }
        Ok(series)
    }
}

fn order_label(s: f64) -> String {
    format!("{s}")
}

/// Which quantities are sampled, and the column names they produce.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesLayout {
    pub kind: GridKind,
    pub dim: usize,
    /// Orders `ℓ` of the norm triple.
    pub ell: Vec<f64>,
    pub variance: bool,
    /// `(label, m)` pairs for the modified variance.
    pub modified_variance: Vec<(f64, f64)>,
}

impl SeriesLayout {
    pub fn columns(&self) -> Vec<String> {
        let mut c: Vec<String> = [
            "t",
            "mass",
            "hamiltonian",
            "grad-psi-L2",
            "n-L2",
            "v-L2",
            "sup-psi",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        if self.kind == GridKind::Periodic {
            for axis in ["x", "y", "z"].iter().take(self.dim) {
                c.push(format!("momentum-{axis}"));
            }
            if self.dim >= 2 {
                c.push("angular-momentum".into());
            }
        }
        for &l in &self.ell {
            let (a, b, e) = (order_label(l + 0.5), order_label(l), order_label(l - 1.0));
            c.push(format!("psi-H{a}"));
            c.push(format!("n-H{b}"));
            c.push(format!("nt-H{e}"));
            c.push(format!("psi-Hdot{a}"));
            c.push(format!("n-Hdot{b}"));
            c.push(format!("nt-Hdot{e}"));
        }
        if self.variance && self.kind == GridKind::Radial {
            for s in ["variance-w", "variance-g", "variance-rhs"] {
                c.push(s.into());
            }
        }
        if self.kind == GridKind::Radial {
            for (label, _) in &self.modified_variance {
                c.push(format!("ym-{}", order_label(*label)));
            }
        }
        c
    }

    /// One row of values for `state`, in the order of [`SeriesLayout::columns`].
    pub fn sample(&self, state: &WaveState) -> Result<Vec<f64>> {
        let grad2 = dirichlet_energy(&state.psi);
        let mut row = vec![
            state.t,
            mass(&state.psi),
            hamiltonian(state)?,
            grad2.max(0.0).sqrt(),
            mass(&state.n).sqrt(),
            velocity_energy(&state.nt)?.max(0.0).sqrt(),
            sup_norm(&state.psi),
        ];
        if self.kind == GridKind::Periodic {
            let p = momenta(state)?;
            row.extend_from_slice(&p.linear[..self.dim]);
            if self.dim >= 2 {
                row.push(p.angular[2]);
            }
        }
        for &l in &self.ell {
            row.push(sobolev_norm(&state.psi, l + 0.5)?);
            row.push(sobolev_norm(&state.n, l)?);
            row.push(sobolev_norm(&state.nt, l - 1.0)?);
            row.push(sobolev_seminorm(&state.psi, l + 0.5)?);
            row.push(sobolev_seminorm(&state.n, l)?);
            row.push(sobolev_seminorm(&state.nt, l - 1.0)?);
        }
        if self.variance && self.kind == GridKind::Radial {
            let v = variance_terms(state)?;
            row.extend_from_slice(&[v.w, v.g, v.rhs]);
        }
        if self.kind == GridKind::Radial {
            for (_, m) in &self.modified_variance {
                row.push(modified_variance_rate(state, *m)?);
            }
        }
        Ok(row)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolve::radial_gaussian;
    use crate::grid::Grid;

    #[test]
    fn csv_round_trip_is_exact() {
        let mut s = DiagnosticSeries::new(vec!["t".into(), "mass".into()]);
        s.push(vec![0.0, 1.0 / 3.0]).unwrap();
        s.push(vec![0.1, std::f64::consts::PI]).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("t,mass\n"));
        assert!(!text.contains('\r'));
        let back = DiagnosticSeries::read_csv(&buf[..]).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn times_must_increase() {
        let mut s = DiagnosticSeries::new(vec!["t".into()]);
        s.push(vec![1.0]).unwrap();
        assert!(s.push(vec![1.0]).is_err());
        assert!(s.push(vec![2.0, 3.0]).is_err());
        assert!(matches!(s.column("mass"), Err(Error::MissingColumn(_))));
    }

    #[test]
    fn zero_state_samples_are_zero() {
        let g = Grid::radial(2, 8.0, 64).unwrap();
        let layout = SeriesLayout {
            kind: GridKind::Radial,
            dim: 2,
            ell: vec![0.0, 1.0],
            variance: true,
            modified_variance: vec![(4.0, 4.0)],
        };
        let row = layout.sample(&WaveState::zeros(g)).unwrap();
        assert_eq!(row.len(), layout.columns().len());
        assert!(row.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn periodic_layout_has_momenta() {
        let g = Grid::periodic(2, 20.0, 32).unwrap();
        let layout = SeriesLayout {
            kind: GridKind::Periodic,
            dim: 2,
            ell: vec![0.0],
            variance: true,
            modified_variance: vec![],
        };
        let cols = layout.columns();
        assert!(cols.contains(&"momentum-y".to_string()));
        assert!(cols.contains(&"psi-H0.5".to_string()));
        assert!(cols.contains(&"nt-Hdot-1".to_string()));
        assert!(!cols.iter().any(|c| c.starts_with("variance")));
        let row = layout.sample(&radial_gaussian(g, 1.0, 1.0, 0.5)).unwrap();
        assert_eq!(row.len(), cols.len());
    }
}
