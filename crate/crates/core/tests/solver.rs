use divfund_core::hjb::hypothesis_report;
use divfund_core::params::classify_regime;
use divfund_core::sim::{estimate_value, SimConfig, StrategySpec};
use divfund_core::{solve, ModelParams, Regime};
use proptest::prelude::*;

fn reference() -> ModelParams {
    ModelParams::new(1.5, 1.0, 1.5, 2.0, 0.02, 1.5).unwrap()
}

#[test]
fn reference_solution_is_verified() {
    let p = reference();
    let s = solve(&p).unwrap();
    assert!((s.a_star - 3.174568).abs() < 1e-5);
    assert!((s.b_star - 6.852554).abs() < 1e-5);
    assert_eq!(s.sign_changes, 1);
    let report = hypothesis_report(s.value_function(), &p);
    assert!(report.passes(p.tol_residual()), "{report:?}");
}

#[test]
fn levels_move_with_funding_cost() {
    let p = reference();
    let mut prev = solve(&p.with_phi(1.0).unwrap()).unwrap();
    for i in 1..=40 {
        let phi = 1.0 + 0.35 * i as f64;
        let s = solve(&p.with_phi(phi).unwrap()).unwrap();
        assert!(s.a_star <= prev.a_star + 1e-12 && s.b_star >= prev.b_star - 1e-12, "phi = {phi}");
        prev = s;
    }
    assert_eq!(prev.regime.name(), "ClassicalBarrier");
}

#[test]
fn short_simulation_agrees_with_closed_form() {
    let p = reference();
    let s = solve(&p).unwrap();
    let strategy = StrategySpec::new(s.a_star, s.b_star).unwrap();
    let cfg = SimConfig { x0: s.b_star, n_paths: 4000, horizon: 400.0, seed: 99 };
    let e = estimate_value(&strategy, &cfg, &p).unwrap();
    let exact = s.value_function().value(s.b_star);
    assert!((e.mean - exact).abs() <= 4.0 * e.stderr + e.bias_bound, "{} vs {exact}", e.mean);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn band_solutions_pass_verification(
        c in 0.5f64..3.0, lambda in 0.5f64..2.0, alpha in 0.5f64..3.0,
        beta in 0.2f64..4.0, delta in 0.01f64..0.1, u in 0.05f64..0.95,
    ) {
        let base = ModelParams::new(c, lambda, alpha, beta, delta, 1.0).unwrap();
        if let Some(t) = classify_regime(&base).thresholds() {
            let p = base.with_phi(1.0 + u * (t.phi_max - 1.0)).unwrap();
            prop_assume!(matches!(classify_regime(&p), Regime::Band(_)));
            let s = solve(&p).unwrap();
            prop_assert!(s.a_star > 0.0 && s.a_star < s.b_star && s.b_star < t.b_tilde);
            let report = hypothesis_report(s.value_function(), &p);
            prop_assert!(report.passes(p.tol_residual()), "{:?}", report);
        }
    }
}
