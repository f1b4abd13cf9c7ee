//! The four sub-commands as functions from parameters to CSV text.

use rayon::prelude::*;

use divfund_core::hjb::{default_range, hypothesis_report, verification_table, HypothesisReport};
use divfund_core::iteration::{iterate as run_iteration, ExponentialClaims, GridSpec, Iterate};
use divfund_core::sim::{simulate_indexed, truncation_bias_bound, validate, SimConfig, SimEstimate, StrategySpec};
use divfund_core::{solve as solve_band, BandSolution, ModelParams};

use crate::csv::{num, opt, Table};
use crate::error::CliError;

pub const SOLUTION_HEADER: [&str; 15] =
    ["regime", "a_star", "b_star", "b_tilde", "phi_max", "S1", "S2", "R1", "R2", "A1", "A2", "A3", "A4", "B1", "B2"];
pub const VALUE_HEADER: [&str; 6] = ["x", "V", "dV", "d2V", "hjb_part1", "hjb_part2"];
pub const SWEEP_HEADER: [&str; 4] = ["phi", "regime", "a_star", "b_star"];
pub const SIMULATE_HEADER: [&str; 14] = [
    "strategy_a",
    "strategy_b",
    "x0",
    "n_paths",
    "horizon",
    "seed",
    "mean",
    "stderr",
    "ruin_fraction",
    "mean_ruin_time",
    "bias_bound",
    "mean_dividends",
    "mean_funding",
    "closed_form_v",
];
pub const ITERATE_HEADER: [&str; 6] = ["n", "best_b", "funding_level", "v_0", "v_a_star", "v_b_star"];

/// Rows in the value table.
pub const VALUE_TABLE_POINTS: usize = 1001;
pub const DEFAULT_GRID_STEP: f64 = 0.02;
pub const DEFAULT_PATHS: u64 = 100_000;
pub const DEFAULT_SEED: u64 = 0;

pub struct SolveOutput {
    pub solution: BandSolution,
    pub report: HypothesisReport,
    pub verified: bool,
    pub solution_csv: String,
    pub value_csv: String,
}

pub fn solution_row(s: &BandSolution) -> Vec<String> {
    let r = s.roots();
    let co = s.coeffs.as_ref();
    let coef = |f: fn(&divfund_core::BandCoefficients) -> f64| opt(co.map(f));
    vec![
        s.regime.name().to_string(),
        num(s.a_star),
        num(s.b_star),
        opt(s.b_tilde),
        opt(s.phi_max),
        num(r.s1),
        num(r.s2),
        num(r.r1),
        num(r.r2),
        coef(|c| c.a1()),
        coef(|c| c.a2()),
        coef(|c| c.a3()),
        coef(|c| c.a4()),
        coef(|c| c.b1()),
        coef(|c| c.b2()),
    ]
}

/// Solves, tabulates the value function on `[0, 2 b*]` and runs the HJB checks.
pub fn solve(params: &ModelParams) -> Result<SolveOutput, CliError> {
    let solution = solve_band(params).map_err(CliError::Solver)?;
    let v = solution.value_function();
    let rows = verification_table(v, params, default_range(v, params), VALUE_TABLE_POINTS).map_err(CliError::Solver)?;
    let report = hypothesis_report(v, params);
    let tol = params.tol_residual();
    let verified = report.passes(tol) && rows.iter().all(|r| r.part1.max(r.part2).abs() <= tol);

    let mut sol = Table::new(&SOLUTION_HEADER);
    sol.row(&solution_row(&solution));
    let mut table = Table::new(&VALUE_HEADER);
    for r in &rows {
        table.numbers(&[r.x, r.value, r.d1, r.d2, r.part1, r.part2]);
    }
    Ok(SolveOutput { solution, report, verified, solution_csv: sol.into_string(), value_csv: table.into_string() })
}

pub struct SweepOutput {
    pub rows: Vec<(f64, Result<BandSolution, divfund_core::Error>)>,
    pub csv: String,
}

impl SweepOutput {
    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| r.1.is_err()).count()
    }
}

/// `points` equally spaced values of `phi` on `[phi_min, phi_max]`, inclusive.
pub fn phi_grid(phi_min: f64, phi_max: f64, points: usize) -> Result<Vec<f64>, CliError> {
    if !(phi_min >= 1.0 && phi_min < phi_max && phi_max.is_finite()) {
        return Err(CliError::Usage(format!("need 1 <= phi-min < phi-max, got {phi_min} and {phi_max}")));
    }
    if points < 2 {
        return Err(CliError::Usage("need at least 2 points".into()));
    }
    let step = (phi_max - phi_min) / (points - 1) as f64;
    Ok((0..points).map(|i| if i + 1 == points { phi_max } else { phi_min + step * i as f64 }).collect())
}

/// Solves once per `phi`; failed rows get regime `error` and empty levels.
pub fn sweep(params: &ModelParams, phi_min: f64, phi_max: f64, points: usize) -> Result<SweepOutput, CliError> {
    let phis = phi_grid(phi_min, phi_max, points)?;
    let rows: Vec<_> = phis
        .par_iter()
        .map(|&phi| (phi, params.with_phi(phi).and_then(|p| solve_band(&p))))
        .collect();
    let mut t = Table::new(&SWEEP_HEADER);
    for (phi, r) in &rows {
        match r {
            Ok(s) => t.row(&[num(*phi), s.regime.name().into(), num(s.a_star), num(s.b_star)]),
            Err(_) => t.row(&[num(*phi), "error".into(), String::new(), String::new()]),
        };
    }
    Ok(SweepOutput { rows, csv: t.into_string() })
}

/// Same result as [`divfund_core::sim::estimate_value`], with paths spread over threads.
pub fn estimate_parallel(strategy: &StrategySpec, config: &SimConfig, params: &ModelParams) -> divfund_core::Result<SimEstimate> {
    validate(strategy, config)?;
    let records: Vec<_> = (0..config.n_paths)
        .into_par_iter()
        .map(|i| simulate_indexed(strategy, config, params, i))
        .collect();
    Ok(SimEstimate::from_records(&records, truncation_bias_bound(strategy, config, params)))
}

pub struct SimulateOutput {
    pub estimate: SimEstimate,
    /// `V(x0)` when the strategy is the optimal one.
    pub closed_form: Option<f64>,
    pub csv: String,
}

pub fn simulate(params: &ModelParams, strategy: StrategySpec, config: SimConfig) -> Result<SimulateOutput, CliError> {
    let estimate = estimate_parallel(&strategy, &config, params).map_err(CliError::Invalid)?;
    let closed_form = match solve_band(params) {
        Ok(s) if same(s.a_star, strategy.a) && same(s.b_star, strategy.b) => Some(s.value_function().value(config.x0)),
        _ => None,
    };
    let mut t = Table::new(&SIMULATE_HEADER);
    t.row(&[
        num(strategy.a),
        num(strategy.b),
        num(config.x0),
        config.n_paths.to_string(),
        num(config.horizon),
        config.seed.to_string(),
        num(estimate.mean),
        num(estimate.stderr),
        num(estimate.ruin_fraction),
        opt(estimate.mean_ruin_time),
        num(estimate.bias_bound),
        num(estimate.mean_dividends),
        num(estimate.mean_funding),
        opt(closed_form),
    ]);
    Ok(SimulateOutput { estimate, closed_form, csv: t.into_string() })
}

/// Equal up to the precision the CSV carries.
fn same(x: f64, y: f64) -> bool {
    (x - y).abs() <= 1e-9 * (1.0 + x.abs())
}

pub struct IterateOutput {
    pub iterates: Vec<Iterate>,
    pub solution: BandSolution,
    pub csv: String,
}

/// Grid reaching 20 mean claims and at least twice the optimal barriers.
pub fn iteration_grid(params: &ModelParams, solution: &BandSolution, step: f64) -> Result<GridSpec, CliError> {
    let reach = 2.0 * solution.b_star.max(solution.b_tilde.unwrap_or(0.0));
    GridSpec::new(step, (20.0 / params.alpha()).max(reach)).map_err(CliError::Invalid)
}

pub fn iterate(params: &ModelParams, n: usize, step: f64) -> Result<IterateOutput, CliError> {
    let solution = solve_band(params).map_err(CliError::Solver)?;
    let dist = ExponentialClaims::from_params(params);
    let grid = iteration_grid(params, &solution, step)?;
    let iterates = run_iteration(&dist, params, n, grid).map_err(CliError::Solver)?;
    let (a, b) = (solution.a_star, solution.b_star);
    let mut t = Table::new(&ITERATE_HEADER);
    for (k, it) in iterates.iter().enumerate() {
        let v = &it.sweep.value;
        t.row(&[
            k.to_string(),
            num(it.sweep.best_b),
            num(it.plan.level),
            num(v.value_at(0.0)),
            num(v.value_at(a)),
            num(v.value_at(b)),
        ]);
    }
    let exact = solution.value_function();
    t.row(&["closed_form".into(), num(b), num(a), num(exact.value(0.0)), num(exact.value(a)), num(exact.value(b))]);
    Ok(IterateOutput { iterates, solution, csv: t.into_string() })
}
