//! Event-exact Monte Carlo of the controlled surplus under a band strategy.
//!
//! Between events the surplus grows at rate `c` until it reaches the barrier,
//! where the whole premium flow is paid out; discounted barrier dividends are
//! integrated in closed form, so there is no time-stepping bias. Claims and
//! investor arrivals are drawn from the merged Poisson stream of rate
//! `lambda + beta` and split by thinning.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::params::ModelParams;
use crate::{Error, Result};

/// Fund up to `a` at investor arrivals below it, pay out everything above `b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrategySpec {
    pub a: f64,
    pub b: f64,
}

impl StrategySpec {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a >= 0.0 && a <= b && b.is_finite()) {
            return Err(Error::InvalidStrategy { a, b });
        }
        Ok(StrategySpec { a, b })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub x0: f64,
    pub n_paths: u64,
    pub horizon: f64,
    pub seed: u64,
}

impl SimConfig {
    pub const DEFAULT_HORIZON: f64 = 400.0;

    fn validate(&self) -> Result<()> {
        if !(self.x0 >= 0.0) {
            return Err(Error::NegativeX(self.x0));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::NonPositiveHorizon(self.horizon));
        }
        if self.n_paths == 0 {
            return Err(Error::NoPaths);
        }
        Ok(())
    }
}

/// Outcome of one simulated path.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PathRecord {
    /// Discounted dividends, including the initial lump.
    pub dividends: f64,
    /// Discounted funding weighted by `phi`.
    pub funding_cost: f64,
    /// `None` when the path survived to the horizon.
    pub ruin_time: Option<f64>,
    pub claims: u64,
    /// Investor arrivals while below `a`, i.e. fundings.
    pub investor_arrivals: u64,
    /// Time simulated: the ruin time or the horizon.
    pub elapsed: f64,
}

impl PathRecord {
    pub fn payoff(&self) -> f64 {
        self.dividends - self.funding_cost
    }
}

/// Uniform on `[0, 1)` with 53 random bits.
fn uniform<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Exponential variate by inversion.
fn exponential<R: RngCore + ?Sized>(rng: &mut R, rate: f64) -> f64 {
    -libm::log1p(-uniform(rng)) / rate
}

/// `int_t1^t2 c e^{-delta s} ds`.
fn barrier_flow(c: f64, delta: f64, t1: f64, t2: f64) -> f64 {
    if t2 <= t1 {
        return 0.0;
    }
    -c / delta * libm::exp(-delta * t1) * libm::expm1(-delta * (t2 - t1))
}

/// Premium drift from `t` to `t_end`, paying out at the barrier.
fn drift(x: &mut f64, t: f64, t_end: f64, b: f64, c: f64, delta: f64, dividends: &mut f64) {
    if *x < b {
        let hit = t + (b - *x) / c;
        if hit < t_end {
            *dividends += barrier_flow(c, delta, hit, t_end);
            *x = b;
        } else {
            *x = (*x + c * (t_end - t)).min(b);
        }
    } else {
        *dividends += barrier_flow(c, delta, t, t_end);
    }
}

/// Simulates one path from `x0` up to ruin or `horizon`.
///
/// Investor arrivals only act below `a`, so above `a` only claims are drawn
/// (rate `lambda`); below `a` the merged stream of rate `lambda + beta` is
/// thinned, and the clock restarts when the premium carries the surplus up to
/// `a`. Both restarts are exact by memorylessness.
pub fn simulate_path<R: RngCore + ?Sized>(
    strategy: &StrategySpec,
    params: &ModelParams,
    x0: f64,
    horizon: f64,
    rng: &mut R,
) -> PathRecord {
    let (c, delta, phi) = (params.c(), params.delta(), params.phi());
    let (lambda, beta) = (params.lambda(), params.beta());
    let merged = lambda + beta;
    let claim_share = lambda / merged;
    let StrategySpec { a, b } = *strategy;

    let mut rec = PathRecord::default();
    let mut x = x0;
    if x > b {
        rec.dividends += x - b;
        x = b;
    }
    let mut t = 0.0;
    loop {
        let funding = x < a && beta > 0.0;
        let t_next = t + exponential(rng, if funding { merged } else { lambda });
        if funding {
            let reach = t + (a - x) / c;
            if reach < t_next && reach < horizon {
                drift(&mut x, t, reach, b, c, delta, &mut rec.dividends);
                x = x.max(a);
                t = reach;
                continue;
            }
        }
        drift(&mut x, t, t_next.min(horizon), b, c, delta, &mut rec.dividends);
        if t_next > horizon {
            rec.elapsed = horizon;
            return rec;
        }
        t = t_next;
        if !funding || uniform(rng) < claim_share {
            rec.claims += 1;
            x -= exponential(rng, params.alpha());
            if x < 0.0 {
                rec.ruin_time = Some(t);
                rec.elapsed = t;
                return rec;
            }
        } else {
            rec.investor_arrivals += 1;
            rec.funding_cost += phi * (a - x) * libm::exp(-delta * t);
            x = a;
        }
    }
}

/// Generator for path `index`: ChaCha8 keyed by `seed`, stream `index`.
///
/// Any path can be regenerated on its own, independent of how paths are scheduled.
pub fn path_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Path `index` of the experiment described by `config`.
pub fn simulate_indexed(strategy: &StrategySpec, config: &SimConfig, params: &ModelParams, index: u64) -> PathRecord {
    let mut rng = path_rng(config.seed, index);
    simulate_path(strategy, params, config.x0, config.horizon, &mut rng)
}

/// `e^{-delta T} (b + c/delta + phi a beta/delta)`: bound on what is lost by stopping at `T`.
pub fn truncation_bias_bound(strategy: &StrategySpec, config: &SimConfig, params: &ModelParams) -> f64 {
    let d = params.delta();
    libm::exp(-d * config.horizon) * (strategy.b + params.c() / d + params.phi() * strategy.a * params.beta() / d)
}

/// Sample statistics of the discounted payoff.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimEstimate {
    pub n_paths: u64,
    pub mean: f64,
    pub stderr: f64,
    pub mean_dividends: f64,
    pub mean_funding: f64,
    pub ruin_fraction: f64,
    /// Mean ruin time over ruined paths.
    pub mean_ruin_time: Option<f64>,
    pub bias_bound: f64,
}

impl SimEstimate {
    /// Aggregates records in slice order, so the result only depends on the records.
    pub fn from_records(records: &[PathRecord], bias_bound: f64) -> Self {
        let n = records.len() as f64;
        let (mut sum, mut div, mut fund, mut ruined, mut ruin_t) = (0.0, 0.0, 0.0, 0u64, 0.0);
        for r in records {
            sum += r.payoff();
            div += r.dividends;
            fund += r.funding_cost;
            if let Some(t) = r.ruin_time {
                ruined += 1;
                ruin_t += t;
            }
        }
        let mean = sum / n;
        let ss: f64 = records.iter().map(|r| (r.payoff() - mean) * (r.payoff() - mean)).sum();
        let stderr = if records.len() > 1 { libm::sqrt(ss / (n - 1.0)) / libm::sqrt(n) } else { 0.0 };
        SimEstimate {
            n_paths: records.len() as u64,
            mean,
            stderr,
            mean_dividends: div / n,
            mean_funding: fund / n,
            ruin_fraction: ruined as f64 / n,
            mean_ruin_time: (ruined > 0).then(|| ruin_t / ruined as f64),
            bias_bound,
        }
    }
}

/// Runs `config.n_paths` paths sequentially and aggregates them.
pub fn estimate_value(strategy: &StrategySpec, config: &SimConfig, params: &ModelParams) -> Result<SimEstimate> {
    config.validate()?;
    StrategySpec::new(strategy.a, strategy.b)?;
    let records: alloc::vec::Vec<PathRecord> =
        (0..config.n_paths).map(|i| simulate_indexed(strategy, config, params, i)).collect();
    Ok(SimEstimate::from_records(&records, truncation_bias_bound(strategy, config, params)))
}

/// Checks inputs the way [`estimate_value`] does, for callers that schedule paths themselves.
pub fn validate(strategy: &StrategySpec, config: &SimConfig) -> Result<()> {
    config.validate()?;
    StrategySpec::new(strategy.a, strategy.b).map(|_| ())
}
