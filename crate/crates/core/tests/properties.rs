use proptest::prelude::*;

use zakharov::diagnostics::{hamiltonian, strauss_ratio, theta_bound, vector_symbol_check, DiagnosticSeries};
use zakharov::evolve::{moving_gaussian, radial_gaussian, Stepper};
use zakharov::spectral::mass;
use zakharov::{Grid, RealField, SimConfig, WaveState};

fn max_diff(a: &WaveState, b: &WaveState) -> f64 {
    let psi = a
        .psi
        .values()
        .iter()
        .zip(b.psi.values())
        .fold(0.0f64, |m, (x, y)| m.max((x - y).norm()));
    let n = a.n.values().iter().zip(b.n.values()).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    let nt = a.nt.values().iter().zip(b.nt.values()).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    psi.max(n).max(nt)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn symbol_eigenvalues_match_closed_form(
        xi in prop::collection::vec(-20.0f64..20.0, 1..=3),
        alpha in 1.0f64..100.0,
    ) {
        let k2: f64 = xi.iter().map(|x| x * x).sum();
        prop_assume!(k2 > 1e-6);
        let c = vector_symbol_check(&xi, alpha).unwrap();
        let scale = (alpha * k2).max(1.0);
        prop_assert!((c.eigenvalues[0] - k2).abs() / scale < 1e-10);
        for l in &c.eigenvalues[1..] {
            prop_assert!((l - alpha * k2).abs() / scale < 1e-10);
        }
        prop_assert!(c.bounds_ok);
    }

    #[test]
    fn strauss_ratio_is_scale_and_dilation_invariant(
        width in 0.5f64..2.0,
        amp in 0.1f64..10.0,
        r_cut in 0.5f64..3.0,
        d in 2usize..=3,
    ) {
        let g = Grid::radial(d, 30.0, 6000).unwrap();
        let wide = Grid::radial(d, 60.0, 6000).unwrap();
        let f = RealField::from_radial_fn(g, |r| (-r * r / (2.0 * width * width)).exp());
        let scaled = f.map(|x| amp * x);
        let dilated = RealField::from_radial_fn(wide, |r| (-r * r / (8.0 * width * width)).exp());
        let q = strauss_ratio(&f, r_cut).unwrap();
        prop_assert!((strauss_ratio(&scaled, r_cut).unwrap() / q - 1.0).abs() < 1e-12);
        prop_assert!((strauss_ratio(&dilated, 2.0 * r_cut).unwrap() / q - 1.0).abs() < 1e-10);
        prop_assert!(q > 0.0 && q < 4.0);
    }

    #[test]
    fn theta_bound_is_affine(d in 1usize..=3, ell in -1.0f64..3.0) {
        let t = theta_bound(d, ell);
        prop_assert!((t - (1.0 - d as f64 / 4.0 + ell / 2.0)).abs() < 1e-15);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn config_round_trips_through_toml(
        dt in 1e-5f64..1e-1,
        points in 64usize..5000,
        extent in 1.0f64..50.0,
        amplitude in 0.01f64..5.0,
        width in 0.1f64..3.0,
        every_steps in 1.0f64..50.0,
    ) {
        let every = dt * every_steps;
        let text = format!(
            "[grid]\nkind = \"radial\"\ndim = 2\nextent = {extent:?}\npoints = {points}\n\
             [time]\ndt = {dt:?}\nt_end = 1.0\noutput_every = {every:?}\n\
             [initial]\nfamily = \"gaussian\"\namplitude = {amplitude:?}\nwidth = {width:?}\n"
        );
        let c = SimConfig::from_toml_str(&text).unwrap();
        let again = SimConfig::from_toml_str(&c.to_toml_string()).unwrap();
        prop_assert_eq!(&c, &again);
        prop_assert_eq!(c.hash(), again.hash());
        prop_assert_eq!(c.time.dt, dt);
    }

    #[test]
    fn periodic_steps_keep_mass_and_reverse(
        amplitude in 0.2f64..1.2,
        width in 0.8f64..2.0,
        k in -1.0f64..1.0,
        dt in 1e-3f64..2e-2,
    ) {
        let g = Grid::periodic(2, 20.0, 32).unwrap();
        let s0 = moving_gaussian(g.clone(), amplitude, width, &[k, 0.5 * k], &[], 1.0).unwrap();
        let stepper = Stepper::new(g);
        let mut s = s0.clone();
        for _ in 0..10 {
            stepper.advance(&mut s, dt);
        }
        let m0 = mass(&s0.psi);
        prop_assert!((mass(&s.psi) - m0).abs() / m0 < 1e-12);
        for _ in 0..10 {
            stepper.advance(&mut s, -dt);
        }
        prop_assert!(max_diff(&s, &s0) < 1e-10 * amplitude.max(1.0));
    }

    #[test]
    fn radial_steps_keep_mass_and_reverse(
        amplitude in 0.2f64..2.0,
        width in 0.6f64..1.5,
        dt in 1e-3f64..1e-2,
        d in 2usize..=3,
    ) {
        let g = Grid::radial(d, 12.0, 400).unwrap();
        let s0 = radial_gaussian(g.clone(), amplitude, width, 1.0);
        let stepper = Stepper::new(g);
        let mut s = s0.clone();
        for _ in 0..10 {
            stepper.advance(&mut s, dt);
        }
        let m0 = mass(&s0.psi);
        prop_assert!((mass(&s.psi) - m0).abs() / m0 < 1e-12);
        for _ in 0..10 {
            stepper.advance(&mut s, -dt);
        }
        prop_assert!(max_diff(&s, &s0) < 1e-9 * amplitude.max(1.0), "{}", max_diff(&s, &s0));
    }
}

#[test]
fn hamiltonian_error_is_second_order_in_dt() {
    let g = Grid::radial(2, 12.0, 600).unwrap();
    let s0 = radial_gaussian(g.clone(), 1.0, 1.0, 1.0);
    let h0 = hamiltonian(&s0).unwrap();
    let drift = |dt: f64| {
        let stepper = Stepper::new(g.clone());
        let mut s = s0.clone();
        let steps = (0.5 / dt).round() as usize;
        for _ in 0..steps {
            stepper.advance(&mut s, dt);
        }
        (hamiltonian(&s).unwrap() - h0).abs()
    };
    let (e1, e2) = (drift(0.02), drift(0.01));
    let ratio = e1 / e2;
    assert!((3.3..=4.7).contains(&ratio), "{e1:e} {e2:e} {ratio}");
}

#[test]
fn series_csv_round_trip_is_exact() {
    let mut s = DiagnosticSeries::new(vec!["t".into(), "mass".into(), "x".into()]);
    for i in 0..20 {
        let t = i as f64 / 7.0;
        s.push(vec![t, (t * 1.3).sin() * 1e-300, std::f64::consts::PI.powi(i)]).unwrap();
    }
    let mut buf = Vec::new();
    s.write_csv(&mut buf).unwrap();
    let back = DiagnosticSeries::read_csv(&buf[..]).unwrap();
    assert_eq!(back.columns(), s.columns());
    assert_eq!(back.rows(), s.rows());
}
