//! HJB residuals and the hypotheses of the verification theorem.
//!
//! The equation checked is
//! `max{ c V' - (lambda+delta) V + lambda int_0^x V(x-y) dF(y) + beta sup_f [V(x+f) - V(x) - phi f], 1 - V' } = 0`
//! for exponential claims. A candidate passing these checks on a dense grid,
//! being C^2, concave, positive and with `V' >= 1`, dominates every admissible
//! strategy.

use alloc::vec::Vec;

use crate::params::ModelParams;
use crate::roots::bisect;
use crate::value::PiecewiseValue;
use crate::{Error, Result};

/// Grid size for [`hypothesis_report`].
pub const VERIFY_GRID_POINTS: usize = 4096;
/// Tolerance on the sign-type hypotheses (concavity, slope, bounds).
pub const HYPOTHESIS_TOL: f64 = 1e-9;
/// Allowed mismatch of `V`, `V'`, `V''` across joints.
pub const JOINT_TOL: f64 = 1e-6;

/// `lambda int_0^x V(x-y) alpha e^{-alpha y} dy`.
pub fn convolution_term(v: &PiecewiseValue, params: &ModelParams, x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(Error::NegativeX(x));
    }
    Ok(params.lambda() * v.exp_convolution(params.alpha(), x))
}

/// Supremum of `V(x+f) - V(x) - phi f` over `f >= 0` and its maximizer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FundingSup {
    pub value: f64,
    pub injection: f64,
}

/// Uses concavity: the maximizer lifts the surplus to where `V' = phi`.
pub fn funding_sup(v: &PiecewiseValue, params: &ModelParams, x: f64) -> Result<FundingSup> {
    if !(x >= 0.0) {
        return Err(Error::NegativeX(x));
    }
    if !v.is_concave() {
        let (at, d2) = v.max_second_derivative();
        return Err(Error::NonConcave { x: at, second_derivative: d2 });
    }
    let phi = params.phi();
    if v.derivative(x) <= phi {
        return Ok(FundingSup { value: 0.0, injection: 0.0 });
    }
    // V' is non-increasing and equals 1 <= phi from the last joint on
    let end = v.last_joint().max(x);
    let target = bisect(|y| v.derivative(y) - phi, x, end, 0.0, "V'(y) = phi")?;
    let value = v.value(target) - v.value(x) - phi * (target - x);
    Ok(FundingSup { value: value.max(0.0), injection: target - x })
}

/// Golden-section maximization of `V(x+f) - V(x) - phi f` over `[0, f_max]`.
///
/// A generic check on [`funding_sup`]; it does not rely on concavity beyond unimodality.
pub fn funding_sup_golden(v: &PiecewiseValue, params: &ModelParams, x: f64, f_max: f64, tol: f64) -> FundingSup {
    let phi = params.phi();
    let base = v.value(x);
    let gain = |f: f64| v.value(x + f) - base - phi * f;
    let ratio = 0.5 * (libm::sqrt(5.0) - 1.0);
    let (mut lo, mut hi) = (0.0, f_max);
    let mut m1 = hi - ratio * (hi - lo);
    let mut m2 = lo + ratio * (hi - lo);
    let (mut g1, mut g2) = (gain(m1), gain(m2));
    while hi - lo > tol {
        if g1 < g2 {
            lo = m1;
            m1 = m2;
            g1 = g2;
            m2 = lo + ratio * (hi - lo);
            g2 = gain(m2);
        } else {
            hi = m2;
            m2 = m1;
            g2 = g1;
            m1 = hi - ratio * (hi - lo);
            g1 = gain(m1);
        }
    }
    let f = 0.5 * (lo + hi);
    let g = gain(f);
    if g > 0.0 {
        FundingSup { value: g, injection: f }
    } else {
        FundingSup { value: 0.0, injection: 0.0 }
    }
}

/// The two members of the HJB maximum at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HjbResidual {
    /// `c V' - (lambda+delta) V + lambda conv + beta sup`.
    pub part1: f64,
    /// `1 - V'`.
    pub part2: f64,
}

impl HjbResidual {
    /// `max(part1, part2)`, zero for an exact solution.
    pub fn hjb(&self) -> f64 {
        self.part1.max(self.part2)
    }
}

pub fn hjb_residual(v: &PiecewiseValue, params: &ModelParams, x: f64) -> Result<HjbResidual> {
    let conv = convolution_term(v, params, x)?;
    let sup = funding_sup(v, params, x)?;
    let d1 = v.derivative(x);
    let part1 = params.c() * d1 - (params.lambda() + params.delta()) * v.value(x) + conv + params.beta() * sup.value;
    Ok(HjbResidual { part1, part2: 1.0 - d1 })
}

/// One line of the verification table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerificationRow {
    pub x: f64,
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
    pub part1: f64,
    pub part2: f64,
}

/// Default verification range: `[0, 2 b*]`, or `[0, 10/alpha]` when the barrier is at zero.
pub fn default_range(v: &PiecewiseValue, params: &ModelParams) -> f64 {
    let b = v.last_joint();
    if b > 0.0 {
        2.0 * b
    } else {
        10.0 / params.alpha()
    }
}

/// `points` equally spaced rows on `[0, x_max]`.
pub fn verification_table(v: &PiecewiseValue, params: &ModelParams, x_max: f64, points: usize) -> Result<Vec<VerificationRow>> {
    let n = points.max(2);
    (0..n)
        .map(|i| {
            let x = x_max * i as f64 / (n - 1) as f64;
            let r = hjb_residual(v, params, x)?;
            Ok(VerificationRow {
                x,
                value: v.value(x),
                d1: v.derivative(x),
                d2: v.second_derivative(x),
                part1: r.part1,
                part2: r.part2,
            })
        })
        .collect()
}

/// Numerical evidence for the verification-theorem hypotheses.
///
/// Every `min_*` field must be `>= -HYPOTHESIS_TOL`; see [`HypothesisReport::passes`].
#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisReport {
    /// Largest jump of `V`, `V'`, `V''` across joints.
    pub joint_gaps: [f64; 3],
    /// Minimum of `-V''` on grid points inside `(0, b*)`.
    pub min_concavity: f64,
    /// Minimum of `V' - 1`.
    pub min_slope_excess: f64,
    /// Minimum of `V(x) - x - c/(lambda+delta)`.
    pub min_lower_bound_excess: f64,
    /// Minimum of `V(x) - c/(lambda+delta)`.
    pub min_positivity: f64,
    /// Maximum of `|max(part1, part2)|` on the grid.
    pub max_hjb_violation: f64,
    /// Grid point where `max_hjb_violation` occurred.
    pub worst_x: f64,
    pub concave: bool,
    pub grid_points: usize,
    pub x_max: f64,
}

impl HypothesisReport {
    pub fn passes(&self, tol_residual: f64) -> bool {
        self.concave
            && self.joint_gaps.iter().all(|g| *g <= JOINT_TOL)
            && self.min_concavity >= -HYPOTHESIS_TOL
            && self.min_slope_excess >= -HYPOTHESIS_TOL
            && self.min_lower_bound_excess >= -HYPOTHESIS_TOL
            && self.min_positivity >= -HYPOTHESIS_TOL
            && self.max_hjb_violation <= tol_residual
    }
}

/// Sweeps [`VERIFY_GRID_POINTS`] points of [`default_range`].
pub fn hypothesis_report(v: &PiecewiseValue, params: &ModelParams) -> HypothesisReport {
    let x_max = default_range(v, params);
    let n = VERIFY_GRID_POINTS;
    let b = v.last_joint();
    let floor = params.payout_constant();
    let mut report = HypothesisReport {
        joint_gaps: v.joint_gaps(),
        min_concavity: f64::INFINITY,
        min_slope_excess: f64::INFINITY,
        min_lower_bound_excess: f64::INFINITY,
        min_positivity: f64::INFINITY,
        max_hjb_violation: 0.0,
        worst_x: 0.0,
        concave: v.is_concave(),
        grid_points: n,
        x_max,
    };
    for i in 0..n {
        let x = x_max * i as f64 / (n - 1) as f64;
        let val = v.value(x);
        if x > 0.0 && x < b {
            report.min_concavity = report.min_concavity.min(-v.second_derivative(x));
        }
        report.min_slope_excess = report.min_slope_excess.min(v.derivative(x) - 1.0);
        report.min_lower_bound_excess = report.min_lower_bound_excess.min(val - x - floor);
        report.min_positivity = report.min_positivity.min(val - floor);
        let violation = match hjb_residual(v, params, x) {
            Ok(r) => libm::fabs(r.hjb()),
            Err(_) => f64::INFINITY,
        };
        if violation > report.max_hjb_violation || violation.is_nan() {
            report.max_hjb_violation = violation;
            report.worst_x = x;
        }
    }
    if !report.min_concavity.is_finite() {
        report.min_concavity = 0.0;
    }
    report
}
