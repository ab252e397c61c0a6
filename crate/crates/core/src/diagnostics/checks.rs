use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use super::{face_differences, DiagnosticSeries};
use crate::error::{Error, Result};
use crate::evolve::{fit_exponent, fit_power_law, growth_window};
use crate::grid::{Field, Scalar};

/// `sup_{r>R}|f|² / (R^{1-d} ‖∇f‖_{L²(r>R)} ‖f‖_{L²(r>R)})` for a radial
/// field; zero when `f` vanishes outside `R`.
pub fn strauss_ratio<T: Scalar>(f: &Field<T>, r_cut: f64) -> Result<f64> {
    let grid = f.grid();
    let geo = grid.radial_or_err()?;
    let d = grid.dim();
    if d < 2 {
        return Err(Error::Unsupported("the Strauss inequality needs d >= 2".into()));
    }
    let h = grid.spacing();
    let v = f.values();
    let mut sup2 = 0.0f64;
    let mut l2 = 0.0;
    for ((x, r), vol) in v.iter().zip(&geo.nodes).zip(&geo.volume) {
        if *r > r_cut {
            sup2 = sup2.max(x.abs2());
            l2 += x.abs2() * vol;
        }
    }
    if sup2 == 0.0 {
        return Ok(0.0);
    }
    let df = face_differences(v, h);
    let mut grad = 0.0;
    // interior faces only: the outer ghost face belongs to the boundary condition
    for j in 0..v.len() - 1 {
        if (j + 1) as f64 * h > r_cut {
            grad += df[j].abs2() * geo.face_area[j] * h;
        }
    }
    let den = r_cut.powi(1 - d as i32) * (grad * geo.sphere_area).sqrt() * (l2 * geo.sphere_area).sqrt();
    if !(den > 0.0) {
        return Err(Error::VanishingDenominator);
    }
    Ok(sup2 / den)
}

/// Eigenvalues of `M_d = (1 - α) ξξᵀ + α|ξ|² I`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SymbolCheck {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// `{|ξ|², α|ξ|² (×(d-1))}`, ascending.
    pub expected: Vec<f64>,
    /// Largest deviation from `expected`, relative to `max(1, α|ξ|²)`.
    pub max_error: f64,
    /// `|ξ|²(1 - 1e-12) ≤ λ ≤ α|ξ|²(1 + 1e-12)` for every eigenvalue.
    pub bounds_ok: bool,
}

pub fn vector_symbol_check(xi: &[f64], alpha: f64) -> Result<SymbolCheck> {
    let d = xi.len();
    if !(1..=3).contains(&d) {
        return Err(Error::DimensionMismatch {
            field: d,
            requested: 3,
        });
    }
    if !(alpha >= 1.0 && alpha.is_finite()) {
        return Err(Error::Unsupported(format!("alpha must be >= 1, got {alpha}")));
    }
    let k2: f64 = xi.iter().map(|x| x * x).sum();
    if !(k2 > 0.0) {
        return Err(Error::ZeroWavevector);
    }
    let m = DMatrix::from_fn(d, d, |i, j| {
        let diag = if i == j { alpha * k2 } else { 0.0 };
        (1.0 - alpha) * xi[i] * xi[j] + diag
    });
    let mut eigenvalues: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    eigenvalues.sort_by(|a, b| a.partial_cmp(b).expect("finite eigenvalues"));
    let mut expected = vec![k2];
    expected.extend(std::iter::repeat_n(alpha * k2, d - 1));
    let scale = (alpha * k2).max(1.0);
    let max_error = eigenvalues
        .iter()
        .zip(&expected)
        .fold(0.0f64, |a, (x, y)| a.max((x - y).abs() / scale));
    let tol = 1e-12 * scale;
    let bounds_ok = eigenvalues
        .iter()
        .all(|&l| l >= k2 - tol && l <= alpha * k2 + tol);
    Ok(SymbolCheck {
        eigenvalues,
        expected,
        max_error,
        bounds_ok,
    })
}

/// `θ_ℓ = (4 - d + 2ℓ)/4`.
pub fn theta_bound(d: usize, ell: f64) -> f64 {
    (4.0 - d as f64 + 2.0 * ell) / 4.0
}

/// Rate fit of the norm triple against the lower bound `θ_ℓ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateReport {
    pub dim: usize,
    pub ell: f64,
    pub t_star: f64,
    pub theta_bound: f64,
    /// Exponent of `‖ψ‖_{H^{ℓ+1/2}} + ‖n‖_{H^ℓ} + ‖n_t‖_{H^{ℓ-1}}`.
    pub theta_fit: f64,
    /// Exponents of the individual columns, inhomogeneous then homogeneous.
    pub components: Vec<(String, f64)>,
    pub window: (f64, f64),
    /// `theta_fit >= theta_bound - 0.05`.
    pub pass: bool,
}

/// Tolerance below the bound accepted by [`rate_bound_check`].
pub const RATE_MARGIN: f64 = 0.05;

/// Fits the blowup exponent of the order-`ℓ` norm triple over the last
/// decade of growth of `‖∇ψ‖`, with `t*` from a power-law fit of `‖∇ψ‖`.
pub fn rate_bound_check(series: &DiagnosticSeries, d: usize, ell: f64) -> Result<RateReport> {
    let t = series.column("t")?;
    let g = series.column("grad-psi-L2")?;
    let start = growth_window(&g, 10.0);
    if g.len() - start < 4 || g[g.len() - 1] < 2.0 * g[start] {
        return Err(Error::NoBlowup);
    }
    let tw = &t[start..];
    let gfit = fit_power_law(tw, &g[start..])?;
    let t_star = gfit.t_star;
    let label = |s: f64| format!("{s}");
    let names = [
        format!("psi-H{}", label(ell + 0.5)),
        format!("n-H{}", label(ell)),
        format!("nt-H{}", label(ell - 1.0)),
        format!("psi-Hdot{}", label(ell + 0.5)),
        format!("n-Hdot{}", label(ell)),
        format!("nt-Hdot{}", label(ell - 1.0)),
    ];
    let cols = names
        .iter()
        .map(|n| series.column(n))
        .collect::<Result<Vec<_>>>()?;
    let triple: Vec<f64> = (start..t.len()).map(|i| cols[0][i] + cols[1][i] + cols[2][i]).collect();
    let fit = fit_exponent(tw, &triple, t_star)?;
    let mut components = vec![("grad-psi-L2".to_string(), gfit.exponent)];
    for (name, col) in names.iter().zip(&cols) {
        components.push((name.clone(), fit_exponent(tw, &col[start..], t_star)?.exponent));
    }
    let bound = theta_bound(d, ell);
    Ok(RateReport {
        dim: d,
        ell,
        t_star,
        theta_bound: bound,
        theta_fit: fit.exponent,
        components,
        window: fit.window,
        pass: fit.exponent >= bound - RATE_MARGIN,
    })
}

impl RateReport {
    pub fn component(&self, name: &str) -> Option<f64> {
        self.components.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Grid, RealField};

    #[test]
    fn symbol_examples() {
        let c = vector_symbol_check(&[1.0, 0.0], 2.0).unwrap();
        assert!((c.eigenvalues[0] - 1.0).abs() < 1e-14 && (c.eigenvalues[1] - 2.0).abs() < 1e-14);
        let c = vector_symbol_check(&[1.0, 1.0, 1.0], 4.0).unwrap();
        for (l, e) in c.eigenvalues.iter().zip([3.0, 12.0, 12.0]) {
            assert!((l - e).abs() < 1e-12);
        }
        assert!(c.bounds_ok);
        assert!(matches!(vector_symbol_check(&[0.0, 0.0], 2.0), Err(Error::ZeroWavevector)));
        assert!(vector_symbol_check(&[1.0, 0.0], 0.5).is_err());
    }

    #[test]
    fn strauss_examples() {
        let g = Grid::radial(3, 40.0, 8000).unwrap();
        let f = RealField::from_radial_fn(g.clone(), |r| (-r).exp());
        let q = strauss_ratio(&f, 1.0).unwrap();
        assert!(q > 0.0 && q <= 4.0, "{q}");
        let scaled = f.map(|x| 7.5 * x);
        assert!((strauss_ratio(&scaled, 1.0).unwrap() / q - 1.0).abs() < 1e-12);
        let inside = RealField::from_radial_fn(g, |r| if r < 2.0 { 1.0 - r / 2.0 } else { 0.0 });
        assert_eq!(strauss_ratio(&inside, 2.5).unwrap(), 0.0);
    }

    #[test]
    fn theta_values() {
        assert_eq!(theta_bound(2, 0.0), 0.5);
        assert_eq!(theta_bound(3, 0.0), 0.25);
        assert_eq!(theta_bound(3, 1.0), 0.75);
    }
}
