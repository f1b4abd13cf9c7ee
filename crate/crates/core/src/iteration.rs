//! Grid scheme for the problem with at most `n` fundings.
//!
//! `V_0` solves the classical equation
//! `0 = c g' - (delta+lambda) g + lambda int_0^x g(x-y) dF(y)` below a barrier
//! `b` with `g' = 1` above it, maximized over `b`. Given `V_{k-1}`, the optimal
//! injection lifts the surplus to `a_k = argmax (V_{k-1}(y) - phi y)`, and `V_k`
//! solves the equation with an extra linear term built from `V_{k-1}`, again
//! with a barrier sweep. See [`Recursion`] for the two forms of that term.
//!
//! The equation is a linear Volterra integro-differential equation, so the
//! solution on `[0, b]` does not depend on `b`. One forward pass with
//! `g(0) = 1` and no forcing and one with `g(0) = 0` and the forcing are
//! combined as `g = g_p + k g_h`, `k = (1 - g_p'(b))/g_h'(b)`, for every
//! candidate barrier at once. The forward pass is implicit trapezoidal in `x`
//! with a trapezoidal convolution.

use alloc::vec::Vec;

use crate::params::ModelParams;
use crate::quad::adaptive_simpson;
use crate::{Error, Result};

/// Claim size law; only its density is used by the scheme.
pub trait ClaimDistribution {
    fn density(&self, y: f64) -> f64;
    fn cdf(&self, y: f64) -> f64;
    fn mean(&self) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentialClaims {
    pub rate: f64,
}

impl ExponentialClaims {
    pub fn from_params(p: &ModelParams) -> Self {
        ExponentialClaims { rate: p.alpha() }
    }
}

impl ClaimDistribution for ExponentialClaims {
    fn density(&self, y: f64) -> f64 {
        if y < 0.0 {
            0.0
        } else {
            self.rate * libm::exp(-self.rate * y)
        }
    }
    fn cdf(&self, y: f64) -> f64 {
        if y <= 0.0 {
            0.0
        } else {
            -libm::expm1(-self.rate * y)
        }
    }
    fn mean(&self) -> f64 {
        1.0 / self.rate
    }
}

/// Checks `F(0) = 0`, total mass one and the mean, by quadrature up to 200 means.
pub fn check_distribution<D: ClaimDistribution + ?Sized>(dist: &D) -> Result<()> {
    let mean = dist.mean();
    if !(mean > 0.0 && mean.is_finite()) {
        return Err(Error::InvalidDistribution("mean must be positive and finite"));
    }
    if dist.cdf(0.0) != 0.0 {
        return Err(Error::InvalidDistribution("F(0) must be 0"));
    }
    let upper = 200.0 * mean;
    let pieces = 400;
    let w = upper / pieces as f64;
    let (mut mass, mut first) = (0.0, 0.0);
    for i in 0..pieces {
        let (lo, hi) = (i as f64 * w, (i + 1) as f64 * w);
        mass += adaptive_simpson(|y| dist.density(y), lo, hi, 1e-12);
        first += adaptive_simpson(|y| y * dist.density(y), lo, hi, 1e-12);
    }
    if libm::fabs(mass - 1.0) > 1e-6 {
        return Err(Error::InvalidDistribution("density does not integrate to 1"));
    }
    if libm::fabs(first - mean) > 1e-6 * (1.0 + mean) {
        return Err(Error::InvalidDistribution("mean does not match density"));
    }
    Ok(())
}

/// Uniform grid `0, step, ..., x_max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub step: f64,
    /// Number of intervals.
    pub intervals: usize,
}

impl GridSpec {
    pub fn new(step: f64, x_max: f64) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::NonPositiveStep(step));
        }
        if !(x_max >= step) {
            return Err(Error::EmptyRange);
        }
        Ok(GridSpec { step, intervals: libm::round(x_max / step) as usize })
    }

    /// Grid reaching 20 mean claim sizes.
    pub fn for_distribution<D: ClaimDistribution + ?Sized>(dist: &D, step: f64) -> Result<Self> {
        Self::new(step, 20.0 * dist.mean())
    }

    pub fn x(&self, j: usize) -> f64 {
        j as f64 * self.step
    }

    pub fn x_max(&self) -> f64 {
        self.x(self.intervals)
    }

    pub fn len(&self) -> usize {
        self.intervals + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Nearest grid index, clamped to the grid.
    pub fn index_of(&self, x: f64) -> usize {
        (libm::round(x / self.step).max(0.0) as usize).min(self.intervals)
    }
}

/// Grid values of an approximate value function with a dividend barrier.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFn {
    pub grid: GridSpec,
    /// `g(x_j)`, with slope one past the barrier.
    pub values: Vec<f64>,
    /// `g'(x_j)` from the equation (one past the barrier).
    pub slopes: Vec<f64>,
    pub barrier_index: usize,
}

impl GridFn {
    pub fn barrier(&self) -> f64 {
        self.grid.x(self.barrier_index)
    }

    /// Linear interpolation, continued with slope one beyond the grid.
    pub fn value_at(&self, x: f64) -> f64 {
        let last = self.values.len() - 1;
        let x_end = self.grid.x(last);
        if x >= x_end {
            return self.values[last] + (x - x_end);
        }
        let x = x.max(0.0);
        let pos = x / self.grid.step;
        let j = (libm::floor(pos) as usize).min(last - 1);
        let t = pos - j as f64;
        self.values[j] * (1.0 - t) + self.values[j + 1] * t
    }
}

/// Extra terms `0 = ... - killing(x) g(x) + forcing(x)` on the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Inhomogeneity {
    pub killing: Vec<f64>,
    pub forcing: Vec<f64>,
}

/// How `V_{k-1}` enters the equation for `V_k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Recursion {
    /// Below `a_{k-1}` the first investor arrival lifts the surplus to
    /// `a_{k-1}` and the process restarts with `V_{k-1}`:
    /// killing `beta`, forcing `beta (V_{k-1}(a) - phi (a - x))`.
    /// `V_k` is then the value of a feasible strategy with at most `k` fundings.
    #[default]
    Restart,
    /// Forcing `beta [V_{k-1}(x+f) - V_{k-1}(x) - phi f]` and no killing.
    /// Same fixed point, but the iterates need not be monotone and may oscillate.
    Frozen,
}

struct Forward {
    values: Vec<f64>,
    slopes: Vec<f64>,
}

/// Forward pass of `c g' = (delta+lambda+killing) g - lambda conv - forcing` on `0..=upto`.
fn forward<D: ClaimDistribution + ?Sized>(
    dist: &D,
    params: &ModelParams,
    grid: &GridSpec,
    g0: f64,
    inh: Option<&Inhomogeneity>,
    with_forcing: bool,
    upto: usize,
) -> Result<Forward> {
    let (c, lambda) = (params.c(), params.lambda());
    let base = params.delta() + lambda;
    let h = grid.step;
    let dens: Vec<f64> = (0..=upto).map(|i| dist.density(grid.x(i))).collect();
    let kill = |j: usize| base + inh.map_or(0.0, |s| s.killing[j]);
    let force = |j: usize| if with_forcing { inh.map_or(0.0, |s| s.forcing[j]) } else { 0.0 };
    let mut g = Vec::with_capacity(upto + 1);
    let mut slope = Vec::with_capacity(upto + 1);
    g.push(g0);
    slope.push((kill(0) * g0 - force(0)) / c);
    for j in 0..upto {
        let n = j + 1;
        let coef = (kill(n) - 0.5 * lambda * h * dens[0]) / c;
        // trapezoid terms of lambda * conv(x_n) that do not involve g_n
        let mut tail = 0.5 * dens[n] * g[0];
        for i in 1..n {
            tail += dens[i] * g[n - i];
        }
        let known = lambda * h * tail + force(n);
        let next = (g[j] + 0.5 * h * slope[j] - 0.5 * h * known / c) / (1.0 - 0.5 * h * coef);
        if !next.is_finite() {
            return Err(Error::UnstableIntegration { x: grid.x(n) });
        }
        g.push(next);
        slope.push(coef * next - known / c);
    }
    Ok(Forward { values: g, slopes: slope })
}

fn combine(grid: GridSpec, hom: &Forward, part: Option<&Forward>, m: usize, k: f64) -> GridFn {
    let n = grid.len();
    let mut values = Vec::with_capacity(n);
    let mut slopes = Vec::with_capacity(n);
    for j in 0..n.min(m + 1) {
        let (pv, ps) = part.map_or((0.0, 0.0), |p| (p.values[j], p.slopes[j]));
        values.push(pv + k * hom.values[j]);
        slopes.push(ps + k * hom.slopes[j]);
    }
    let top = values[m];
    for j in m + 1..n {
        values.push(top + grid.x(j) - grid.x(m));
        slopes.push(1.0);
    }
    GridFn { grid, values, slopes, barrier_index: m }
}

/// Solution of the classical equation with barrier `b` (snapped to the grid).
///
/// The grid ends at the barrier; [`GridFn::value_at`] extends it linearly.
pub fn solve_classical_grid<D: ClaimDistribution + ?Sized>(
    dist: &D,
    params: &ModelParams,
    b: f64,
    step: f64,
) -> Result<GridFn> {
    let grid = GridSpec::new(step, b)?;
    let m = grid.intervals;
    let hom = forward(dist, params, &grid, 1.0, None, false, m)?;
    let k = 1.0 / hom.slopes[m];
    Ok(combine(grid, &hom, None, m, k))
}

/// Result of a barrier sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub best_b: f64,
    pub value: GridFn,
    /// `(b, g(0))` for every candidate barrier, in the order given.
    pub objective: Vec<(f64, f64)>,
}

impl Sweep {
    /// Number of strict local maxima of the objective along the candidates.
    pub fn local_maxima(&self) -> usize {
        let o: Vec<f64> = self.objective.iter().map(|p| p.1).collect();
        (0..o.len())
            .filter(|&i| {
                let left = i == 0 || o[i - 1] < o[i];
                let right = i + 1 == o.len() || o[i + 1] < o[i];
                left && right
            })
            .count()
    }
}

/// Picks the barrier maximizing `g(0)` among `candidates` (snapped to `grid`).
///
/// `inh`, when given, must cover `grid`.
pub fn barrier_sweep<D: ClaimDistribution + ?Sized>(
    dist: &D,
    params: &ModelParams,
    inh: Option<&Inhomogeneity>,
    grid: GridSpec,
    candidates: &[f64],
) -> Result<Sweep> {
    let idx: Vec<usize> = candidates.iter().map(|b| grid.index_of(*b)).filter(|&m| m >= 1).collect();
    let Some(&top) = idx.iter().max() else {
        return Err(Error::EmptyRange);
    };
    if let Some(s) = inh {
        assert!(s.killing.len() > top && s.forcing.len() > top, "inhomogeneity shorter than the grid");
    }
    let hom = forward(dist, params, &grid, 1.0, inh, false, top)?;
    let part = match inh {
        Some(_) => Some(forward(dist, params, &grid, 0.0, inh, true, top)?),
        None => None,
    };
    let mut objective = Vec::with_capacity(idx.len());
    let mut best: Option<(usize, f64)> = None;
    for &m in &idx {
        let ps = part.as_ref().map_or(0.0, |p| p.slopes[m]);
        let k = (1.0 - ps) / hom.slopes[m];
        let g0 = if hom.slopes[m] > 0.0 { k } else { f64::NEG_INFINITY };
        objective.push((grid.x(m), g0));
        if best.is_none_or(|(_, v)| g0 > v) {
            best = Some((m, g0));
        }
    }
    let (m, g0) = best.ok_or(Error::EmptyRange)?;
    if !g0.is_finite() {
        return Err(Error::UnstableIntegration { x: grid.x(m) });
    }
    let value = combine(grid, &hom, part.as_ref(), m, g0);
    Ok(Sweep { best_b: grid.x(m), value, objective })
}

/// Optimal injection against a previous iterate.
#[derive(Debug, Clone, PartialEq)]
pub struct FundingPlan {
    /// Target level `a_n`; injections lift the surplus here.
    pub level: f64,
    pub level_index: usize,
    /// `f_n(x_j) = (a_n - x_j)^+`.
    pub injection: Vec<f64>,
    /// `prev(x_j + f) - prev(x_j) - phi f >= 0`.
    pub gain: Vec<f64>,
}

impl FundingPlan {
    /// Extra terms for the next iterate.
    pub fn inhomogeneity(&self, prev: &GridFn, params: &ModelParams, recursion: Recursion) -> Inhomogeneity {
        let beta = params.beta();
        let n = self.gain.len();
        match recursion {
            Recursion::Frozen => Inhomogeneity {
                killing: alloc::vec![0.0; n],
                forcing: self.gain.iter().map(|g| beta * g).collect(),
            },
            Recursion::Restart => {
                let below = |j: usize| j < self.level_index;
                let top = prev.values[self.level_index];
                Inhomogeneity {
                    killing: (0..n).map(|j| if below(j) { beta } else { 0.0 }).collect(),
                    forcing: (0..n)
                        .map(|j| if below(j) { beta * (top - params.phi() * self.injection[j]) } else { 0.0 })
                        .collect(),
                }
            }
        }
    }
}

/// Discrete maximizer of `prev(y) - phi y` and the resulting gains.
pub fn funding_argmax(prev: &GridFn, params: &ModelParams) -> FundingPlan {
    let phi = params.phi();
    let grid = prev.grid;
    let score = |j: usize| prev.values[j] - phi * grid.x(j);
    let mut best = 0;
    for j in 1..prev.values.len() {
        let s = score(j);
        if s > score(best) + 1e-12 * (1.0 + libm::fabs(s)) {
            best = j;
        }
    }
    let level = grid.x(best);
    let top = score(best);
    let injection = (0..prev.values.len()).map(|j| (level - grid.x(j)).max(0.0)).collect();
    let gain = (0..prev.values.len()).map(|j| if j < best { (top - score(j)).max(0.0) } else { 0.0 }).collect();
    FundingPlan { level, level_index: best, injection, gain }
}

/// One iteration step: the sweep that produced `V_k` and the plan built from it.
#[derive(Debug, Clone, PartialEq)]
pub struct Iterate {
    pub sweep: Sweep,
    pub plan: FundingPlan,
    /// Terms used to solve for `V_k`; `None` for `V_0`.
    pub inhomogeneity: Option<Inhomogeneity>,
}

/// `V_0, ..., V_n` on `grid` with the [`Recursion::Restart`] recursion.
pub fn iterate<D: ClaimDistribution + ?Sized>(
    dist: &D,
    params: &ModelParams,
    n: usize,
    grid: GridSpec,
) -> Result<Vec<Iterate>> {
    iterate_with(dist, params, n, grid, Recursion::Restart)
}

/// `V_0, ..., V_n` on `grid`, each with its own barrier sweep over all grid points.
pub fn iterate_with<D: ClaimDistribution + ?Sized>(
    dist: &D,
    params: &ModelParams,
    n: usize,
    grid: GridSpec,
    recursion: Recursion,
) -> Result<Vec<Iterate>> {
    let candidates: Vec<f64> = (1..grid.len()).map(|j| grid.x(j)).collect();
    let mut out: Vec<Iterate> = Vec::with_capacity(n + 1);
    for _ in 0..=n {
        let inh = out.last().map(|it| it.plan.inhomogeneity(&it.sweep.value, params, recursion));
        let sweep = barrier_sweep(dist, params, inh.as_ref(), grid, &candidates)?;
        let plan = funding_argmax(&sweep.value, params);
        out.push(Iterate { sweep, plan, inhomogeneity: inh });
    }
    Ok(out)
}

/// Discrete residual of the equation at interior grid points below the barrier.
///
/// Central differences for `g'`, trapezoid for the convolution.
pub fn grid_residual<D: ClaimDistribution + ?Sized>(
    dist: &D,
    params: &ModelParams,
    g: &GridFn,
    inh: Option<&Inhomogeneity>,
) -> Vec<f64> {
    let h = g.grid.step;
    let (c, lambda) = (params.c(), params.lambda());
    let kill = params.delta() + lambda;
    (1..g.barrier_index)
        .map(|j| {
            let d = (g.values[j + 1] - g.values[j - 1]) / (2.0 * h);
            let mut conv = 0.5 * (dist.density(0.0) * g.values[j] + dist.density(g.grid.x(j)) * g.values[0]);
            for i in 1..j {
                conv += dist.density(g.grid.x(i)) * g.values[j - i];
            }
            conv *= h;
            let (k, f) = inh.map_or((0.0, 0.0), |s| (s.killing[j], s.forcing[j]));
            c * d - (kill + k) * g.values[j] + lambda * conv + f
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical::ClassicalSolution;
    use crate::params::reference_params;

    #[test]
    fn exponential_distribution_is_valid() {
        check_distribution(&ExponentialClaims { rate: 1.5 }).unwrap();
        struct Broken;
        impl ClaimDistribution for Broken {
            fn density(&self, y: f64) -> f64 {
                if y < 1.0 { 0.5 } else { 0.0 }
            }
            fn cdf(&self, y: f64) -> f64 {
                0.5 * y.clamp(0.0, 1.0)
            }
            fn mean(&self) -> f64 {
                0.5
            }
        }
        assert!(check_distribution(&Broken).is_err());
    }

    #[test]
    fn classical_grid_matches_closed_form() {
        let p = reference_params();
        let cl = ClassicalSolution::new(&p).unwrap();
        let g = solve_classical_grid(&ExponentialClaims::from_params(&p), &p, cl.b_tilde, 0.02).unwrap();
        assert!((g.slopes[g.barrier_index] - 1.0).abs() < 1e-14);
        for (j, v) in g.values.iter().enumerate() {
            let exact = cl.value(g.grid.x(j));
            assert!((v - exact).abs() <= 5e-3 * exact, "x={}", g.grid.x(j));
        }
        // concave up to O(step) second differences
        for j in 1..g.barrier_index {
            let d2 = (g.values[j + 1] - 2.0 * g.values[j] + g.values[j - 1]) / (0.02 * 0.02);
            assert!(d2 <= 10.0 * 0.02);
        }
        assert!(solve_classical_grid(&ExponentialClaims::from_params(&p), &p, 1.0, 0.0).is_err());
    }

    #[test]
    fn first_sweep_finds_classical_barrier() {
        let p = reference_params();
        let dist = ExponentialClaims::from_params(&p);
        let grid = GridSpec::for_distribution(&dist, 0.02).unwrap();
        let candidates: Vec<f64> = (1..grid.len()).map(|j| grid.x(j)).collect();
        let s = barrier_sweep(&dist, &p, None, grid, &candidates).unwrap();
        let b_tilde = ClassicalSolution::new(&p).unwrap().b_tilde;
        assert!((s.best_b - b_tilde).abs() <= 2.0 * 0.02, "{}", s.best_b);
        assert_eq!(s.local_maxima(), 1);
        assert!(barrier_sweep(&dist, &p, None, grid, &[]).is_err());
    }

    #[test]
    fn argmax_tracks_slope_phi() {
        let p = reference_params();
        let dist = ExponentialClaims::from_params(&p);
        let grid = GridSpec::for_distribution(&dist, 0.02).unwrap();
        let it = iterate(&dist, &p, 0, grid).unwrap();
        let v0 = &it[0].sweep.value;
        let plan = &it[0].plan;
        let j = plan.level_index;
        assert!(v0.slopes[j - 1] >= p.phi() - 0.05 && v0.slopes[j + 1] <= p.phi() + 0.05);
        for w in plan.gain[..j].windows(2) {
            assert!(w[1] <= w[0]);
        }
        assert!(plan.gain[j..].iter().all(|g| *g == 0.0));
        let expensive = funding_argmax(v0, &p.with_phi(1e3).unwrap());
        assert_eq!(expensive.level_index, 0);
        assert!(expensive.gain.iter().all(|g| *g == 0.0));
    }

    #[test]
    fn no_investors_means_no_improvement() {
        let p = reference_params().with_beta(0.0).unwrap();
        let dist = ExponentialClaims::from_params(&p);
        let grid = GridSpec::for_distribution(&dist, 0.04).unwrap();
        let it = iterate(&dist, &p, 3, grid).unwrap();
        for step in &it[1..] {
            assert_eq!(step.sweep.value.values, it[0].sweep.value.values);
        }
    }

    #[test]
    fn discrete_residual_is_small() {
        let p = reference_params();
        let dist = ExponentialClaims::from_params(&p);
        let grid = GridSpec::for_distribution(&dist, 0.02).unwrap();
        let it = iterate(&dist, &p, 2, grid).unwrap();
        for (k, step) in it.iter().enumerate() {
            let r = grid_residual(&dist, &p, &step.sweep.value, step.inhomogeneity.as_ref());
            let worst = r.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            assert!(worst <= 10.0 * 0.02, "k={k}: {worst}");
        }
    }
}
