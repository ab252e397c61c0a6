use zakharov::diagnostics::{DiagnosticSeries, RunReport};
use zakharov::evolve::{estimate_tstar, run, run_from, StopReason};
use zakharov::spectral::dirichlet_energy;
use zakharov::SimConfig;

const COLLAPSE: &str = r#"
[grid]
kind = "radial"
dim = 2
extent = 10.0
points = 800

[time]
dt = 2e-3
t_end = 3.0
output_steps = 10

[initial]
family = "gaussian"
amplitude = 2.5
width = 1.0
n_coupling = 1.0

[stop]
growth = 6.0
"#;

#[test]
fn negative_energy_gaussian_collapses_and_reports() {
    let c = SimConfig::from_toml_str(COLLAPSE).unwrap();
    let out = run(&c).unwrap();
    assert_eq!(out.stop, StopReason::GrowthThreshold);
    assert!(out.stop.is_blowup());
    let t = out.series.column("t").unwrap();
    let g = out.series.column("grad-psi-L2").unwrap();
    // the series keeps its cadence; the stopping state itself is past the threshold
    assert!(dirichlet_energy(&out.final_state.psi).sqrt() > 6.0 * g[0]);
    assert!(g[g.len() - 1] > 3.0 * g[0]);
    let fit = estimate_tstar(&out.series).unwrap();
    assert!(fit.t_star > t[t.len() - 1]);
    assert!(fit.t_star < t[t.len() - 1] + 0.5);

    let rep = RunReport::analyze(&out.series, 2, &c.diagnostics.ell, true).unwrap();
    assert!(rep.all_pass(), "{}", rep.to_text());
    assert!(rep.entries.iter().any(|e| e.name == "theta triple l=0"));

    // the stored series reproduces the same analysis
    let mut buf = Vec::new();
    out.series.write_csv(&mut buf).unwrap();
    let back = DiagnosticSeries::read_csv(&buf[..]).unwrap();
    assert_eq!(RunReport::analyze(&back, 2, &c.diagnostics.ell, true).unwrap().to_text(), rep.to_text());
}

#[test]
fn restarting_from_a_final_state_continues_the_clock() {
    let mut c = SimConfig::from_toml_str(COLLAPSE).unwrap();
    c.time.t_end = 0.2;
    c.time.adaptive = false;
    let first = run(&c).unwrap();
    assert_eq!(first.stop, StopReason::EndTime);
    assert!((first.final_state.t - 0.2).abs() < 1e-12);

    c.time.t_end = 0.4;
    let resumed = run_from(&c, first.final_state.clone()).unwrap();
    let straight = run(&c).unwrap();
    assert!((resumed.final_state.t - 0.4).abs() < 1e-12);
    let diff = resumed
        .final_state
        .psi
        .values()
        .iter()
        .zip(straight.final_state.psi.values())
        .fold(0.0f64, |m, (a, b)| m.max((a - b).norm()));
    assert!(diff < 1e-10, "{diff:e}");
}
