//! Acceptance criteria, one PASS/FAIL line each. Exits non-zero on any failure.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand_core::RngCore;

use divfund::commands;
use divfund_core::band::{gap_function, merged_curvature, smooth_fit_upper_coefficients};
use divfund_core::classical::ClassicalSolution;
use divfund_core::hjb::hjb_residual;
use divfund_core::params::classify_regime;
use divfund_core::quad::adaptive_simpson;
use divfund_core::sim::{path_rng, SimConfig, SimEstimate, StrategySpec};
use divfund_core::value::Side;
use divfund_core::{solve, BandCoefficients, ModelParams, Regime};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn reference() -> ModelParams {
    ModelParams::new(1.5, 1.0, 1.5, 2.0, 0.02, 1.5).unwrap()
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn uniform(rng: &mut impl RngCore, lo: f64, hi: f64) -> f64 {
    let u = (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
    lo + (hi - lo) * u
}

fn grid(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
}

fn reference_solution() -> Outcome {
    let start = Instant::now();
    let out = commands::solve(&reference()).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let s = &out.solution;
    ensure((s.a_star - 3.1746).abs() <= 2e-3, || format!("a* = {}", s.a_star))?;
    ensure((s.b_star - 6.8526).abs() <= 2e-3, || format!("b* = {}", s.b_star))?;
    ensure(elapsed < Duration::from_secs(1), || format!("took {elapsed:?}"))?;
    Ok(format!("a* = {:.6}, b* = {:.6} in {elapsed:.1?}", s.a_star, s.b_star))
}

fn gap_consistency() -> Outcome {
    let p = reference();
    let s = solve(&p).map_err(|e| e.to_string())?;
    let h = gap_function(s.b_star - s.a_star, p.phi(), &s.roots());
    ensure(h.abs() <= 1e-8, || format!("H = {h:e}"))?;
    Ok(format!("|H(b* - a*)| = {:.1e}", h.abs()))
}

/// Worst smooth-fit errors `(slope, curvature)` of a band solution.
fn smooth_fit(p: &ModelParams) -> Result<(f64, f64), String> {
    let s = solve(p).map_err(|e| format!("{p:?}: {e}"))?;
    ensure(matches!(s.regime, Regime::Band(_)), || format!("{p:?}: regime {}", s.regime.name()))?;
    let v = s.value_function();
    let (a, b) = (s.a_star, s.b_star);
    let slope = (v.eval_side(a, 1, Side::Left) - p.phi()).abs().max((v.derivative(b) - 1.0).abs());
    let curvature = v.second_derivative(b).abs().max((v.eval_side(a, 2, Side::Left) - v.eval_side(a, 2, Side::Right)).abs());
    Ok((slope, curvature))
}

fn random_band_params(rng: &mut impl RngCore) -> ModelParams {
    loop {
        let base = ModelParams::new(
            uniform(rng, 0.5, 3.0),
            uniform(rng, 0.5, 2.0),
            uniform(rng, 0.5, 3.0),
            uniform(rng, 0.2, 4.0),
            uniform(rng, 0.01, 0.1),
            1.0,
        )
        .unwrap();
        let Some(t) = classify_regime(&base).thresholds() else { continue };
        let phi = 1.0 + uniform(rng, 0.05, 0.95) * (t.phi_max - 1.0);
        let p = base.with_phi(phi).unwrap();
        if matches!(classify_regime(&p), Regime::Band(_)) {
            return p;
        }
    }
}

fn smooth_fit_suite() -> Outcome {
    let mut rng = path_rng(20_240_601, 0);
    let mut sets = vec![reference()];
    sets.extend((0..20).map(|_| random_band_params(&mut rng)));
    let (mut slope, mut curvature) = (0.0_f64, 0.0_f64);
    for p in &sets {
        let (s, c) = smooth_fit(p)?;
        ensure(s <= 1e-8 && c <= 1e-6, || format!("{p:?}: slope {s:e}, curvature {c:e}"))?;
        slope = slope.max(s);
        curvature = curvature.max(c);
    }
    Ok(format!("{} sets, max slope error {slope:.1e}, max curvature error {curvature:.1e}", sets.len()))
}

fn hjb_residual_check() -> Outcome {
    let p = reference();
    let s = solve(&p).map_err(|e| e.to_string())?;
    let v = s.value_function();
    let b = s.b_star;
    let (mut worst, mut inactive, mut slope_err) = (0.0_f64, 0.0_f64, 0.0_f64);
    let mut prev_part1 = f64::INFINITY;
    for x in grid(0.0, 2.0 * b, 4096) {
        let r = hjb_residual(v, &p, x).map_err(|e| e.to_string())?;
        worst = worst.max(r.part1.max(r.part2));
        if x <= b {
            inactive = inactive.max(r.part1.abs());
        } else {
            inactive = inactive.max(r.part2.abs());
            ensure(r.part1 < prev_part1, || format!("part1 not decreasing at x = {x}"))?;
            prev_part1 = r.part1;
            let h = 1e-5;
            let lo = hjb_residual(v, &p, x - h).map_err(|e| e.to_string())?.part1;
            let hi = hjb_residual(v, &p, x + h).map_err(|e| e.to_string())?.part1;
            let expected = (((b - x) * p.alpha()).exp() - 1.0) * p.delta();
            slope_err = slope_err.max(((hi - lo) / (2.0 * h) - expected).abs());
        }
    }
    ensure(worst <= 1e-6, || format!("HJB violation {worst:e}"))?;
    ensure(inactive <= 1e-6, || format!("active branch off zero by {inactive:e}"))?;
    ensure(slope_err <= 1e-6, || format!("q' mismatch {slope_err:e}"))?;
    Ok(format!("violation {worst:.1e}, active branch {inactive:.1e}, q' error {slope_err:.1e}"))
}

fn regime_limits() -> Outcome {
    let p = reference();
    let merged = solve(&p.with_phi(1.0).unwrap()).map_err(|e| e.to_string())?;
    ensure(merged.a_star == merged.b_star, || format!("phi = 1: a* = {}, b* = {}", merged.a_star, merged.b_star))?;
    let m = merged_curvature(merged.a_star, &merged.params, &merged.roots()).map_err(|e| e.to_string())?;
    ensure(m.abs() <= 1e-8, || format!("M(a*) = {m:e}"))?;

    let cl = ClassicalSolution::new(&p).map_err(|e| e.to_string())?;
    let mut classical_err = 0.0_f64;
    for phi in [cl.phi_max(), 14.0, 20.0] {
        let s = solve(&p.with_phi(phi).unwrap()).map_err(|e| e.to_string())?;
        ensure(s.a_star == 0.0 && s.b_star == cl.b_tilde, || format!("phi = {phi}: ({}, {})", s.a_star, s.b_star))?;
        for x in grid(0.0, 3.0 * cl.b_tilde, 1000) {
            let d = (s.value_function().value(x) - cl.value(x)).abs();
            classical_err = classical_err.max(d);
        }
    }
    ensure(classical_err <= 1e-9, || format!("classical mismatch {classical_err:e}"))?;

    let payout = ModelParams::new(1.0, 1.0, 1.0, 1.0, 0.5, 1.5).unwrap();
    let s = solve(&payout).map_err(|e| e.to_string())?;
    ensure(s.regime == Regime::PayoutAll, || s.regime.name().into())?;
    let floor = payout.c() / (payout.lambda() + payout.delta());
    for x in grid(0.0, 20.0, 201) {
        ensure(s.value_function().value(x) == x + floor, || format!("payout-all V({x}) off"))?;
    }
    Ok(format!("M(a*) = {:.1e} at phi = 1, classical error {classical_err:.1e}, payout-all exact", m.abs()))
}

fn phi_sweep() -> Outcome {
    let p = reference();
    let phi_max = ClassicalSolution::new(&p).map_err(|e| e.to_string())?.phi_max();
    let start = Instant::now();
    let out = commands::sweep(&p, 1.0, phi_max + 2.0, 50).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    ensure(out.failures() == 0, || format!("{} failed rows", out.failures()))?;
    let rows: Vec<(f64, f64, f64)> =
        out.rows.iter().map(|(phi, r)| (*phi, r.as_ref().unwrap().a_star, r.as_ref().unwrap().b_star)).collect();
    ensure(rows[0].1 == rows[0].2, || "a*(1) != b*(1)".into())?;
    let (inside, beyond): (Vec<&(f64, f64, f64)>, Vec<_>) = rows.iter().partition(|r| r.0 <= phi_max);
    for w in inside.windows(2) {
        ensure(w[1].1 <= w[0].1 && w[1].2 >= w[0].2, || format!("not monotone at phi = {}", w[1].0))?;
    }
    let last = inside.last().unwrap();
    for r in &beyond {
        ensure(r.1 == 0.0 && r.2 == beyond[0].2 && r.2 >= last.2, || format!("not constant at phi = {}", r.0))?;
    }
    ensure(elapsed < Duration::from_secs(30), || format!("took {elapsed:?}"))?;
    Ok(format!("{} rows, {} beyond phi_max, in {elapsed:.1?}", rows.len(), beyond.len()))
}

fn monte_carlo() -> Outcome {
    let p = reference();
    let s = solve(&p).map_err(|e| e.to_string())?;
    let (a, b) = (s.a_star, s.b_star);
    let start = Instant::now();
    let run = |a: f64, b: f64, x0: f64| -> Result<SimEstimate, String> {
        let strategy = StrategySpec::new(a, b).map_err(|e| e.to_string())?;
        let cfg = SimConfig { x0, n_paths: 100_000, horizon: 400.0, seed: 2024 };
        commands::estimate_parallel(&strategy, &cfg, &p).map_err(|e| e.to_string())
    };
    let mut notes = Vec::new();
    let mut at_a = None;
    for x0 in [0.0, a, b] {
        let e = run(a, b, x0)?;
        let exact = s.value_function().value(x0);
        let err = (e.mean - exact).abs();
        ensure(err <= (3.0 * e.stderr).max(0.01 * exact), || format!("x0 = {x0}: {} vs {exact}", e.mean))?;
        notes.push(format!("{:.2}sd", err / e.stderr));
        if x0 == a {
            at_a = Some(e);
        }
    }
    let opt = at_a.unwrap();
    for (pa, pb) in [(a - 0.5, b), (a + 0.5, b), (a, b - 0.5), (a, b + 0.5)] {
        let e = run(pa, pb, a)?;
        ensure(e.mean <= opt.mean + 3.0 * e.stderr, || format!("({pa}, {pb}) beats optimum: {} > {}", e.mean, opt.mean))?;
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(60), || format!("took {elapsed:?}"))?;
    Ok(format!("errors {} at x0 = 0, a*, b*; perturbations dominated; {elapsed:.1?}", notes.join(", ")))
}

fn policy_iteration() -> Outcome {
    let p = reference();
    let step = 0.02;
    let out = commands::iterate(&p, 10, step).map_err(|e| e.to_string())?;
    let exact0 = out.solution.value_function().value(0.0);
    let v0: Vec<f64> = out.iterates.iter().map(|it| it.sweep.value.value_at(0.0)).collect();
    for w in v0.windows(2) {
        ensure(w[1] >= w[0], || format!("V_n(0) decreased: {} -> {}", w[0], w[1]))?;
    }
    ensure(v0.iter().all(|v| *v <= 1.01 * exact0), || format!("V_n(0) above ceiling {exact0}"))?;
    let cl = ClassicalSolution::new(&p).map_err(|e| e.to_string())?;
    let first = &out.iterates[0].sweep;
    let mut rel = 0.0_f64;
    for x in [0.0, 0.5 * cl.b_tilde, cl.b_tilde] {
        rel = rel.max((first.value.value_at(x) - cl.value(x)).abs() / cl.value(x));
    }
    ensure(rel <= 0.005, || format!("V_0 off by {rel:e}"))?;
    ensure((first.best_b - cl.b_tilde).abs() <= 2.0 * step, || format!("best_b = {}", first.best_b))?;
    Ok(format!(
        "V_n(0) {:.4} -> {:.4} (ceiling {exact0:.4}), V_0 error {:.2}%, best_b {}",
        v0[0],
        v0[v0.len() - 1],
        100.0 * rel,
        first.best_b
    ))
}

fn oracle_equivalence() -> Outcome {
    let p = reference();
    let roots = divfund_core::params::char_roots(&p);
    let mut rng = path_rng(7, 9);
    let mut ide = 0.0_f64;
    for _ in 0..1000 {
        let b = uniform(&mut rng, 0.5, 15.0);
        let a = uniform(&mut rng, 0.0, b);
        let x = uniform(&mut rng, 0.0, b);
        let co = divfund_core::band::assemble_coefficients(a, b, &p, &roots).map_err(|e| e.to_string())?;
        ide = ide.max(co.ide_residual(&p, x).map_err(|e| e.to_string())?.max_abs());
    }
    ensure(ide <= 1e-9, || format!("IDE residual {ide:e}"))?;

    let s = solve(&p).map_err(|e| e.to_string())?;
    let co: &BandCoefficients = s.coeffs.as_ref().unwrap();
    let (b1, b2) = smooth_fit_upper_coefficients(s.a_star, s.b_star, p.phi(), &roots);
    let rel = ((b1 - co.b1()) / co.b1()).abs().max(((b2 - co.b2()) / co.b2()).abs());
    ensure(rel <= 1e-8, || format!("B1/B2 mismatch {rel:e}"))?;

    let v = s.value_function();
    let joints: Vec<f64> = v.joints().collect();
    let mut conv = 0.0_f64;
    for _ in 0..100 {
        let x = uniform(&mut rng, 0.0, 2.0 * s.b_star);
        let mut cuts = vec![0.0];
        cuts.extend(joints.iter().map(|j| x - j).filter(|y| *y > 0.0 && *y < x));
        cuts.push(x);
        cuts.sort_by(f64::total_cmp);
        let quad: f64 = cuts
            .windows(2)
            .map(|w| adaptive_simpson(|y| v.value(x - y) * p.alpha() * (-p.alpha() * y).exp(), w[0], w[1], 1e-13))
            .sum();
        conv = conv.max((quad - v.exp_convolution(p.alpha(), x)).abs());
    }
    ensure(conv <= 1e-8, || format!("convolution mismatch {conv:e}"))?;
    Ok(format!("IDE residual {ide:.1e}, B1/B2 rel {rel:.1e}, convolution {conv:.1e}"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("reference solution", reference_solution),
        ("gap-equation consistency", gap_consistency),
        ("smooth-fit suite", smooth_fit_suite),
        ("HJB residual", hjb_residual_check),
        ("regime limits", regime_limits),
        ("phi sweep", phi_sweep),
        ("Monte Carlo cross-validation", monte_carlo),
        ("policy iteration", policy_iteration),
        ("oracle equivalence", oracle_equivalence),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("PASS {}. {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {}. {name}: {why}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
