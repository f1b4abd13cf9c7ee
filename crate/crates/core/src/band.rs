//! Band strategies `(a, b)`: fund up to `a` when an investor arrives below it,
//! pay dividends above `b`.
//!
//! On `[0, a]` the value is `V_l(x) = A1 e^{R1 x} + A2 e^{R2 x} + A3 x + A4`,
//! on `[a, b]` it is `V_u(x) = B1 e^{S1 x} + B2 e^{S2 x}`, and above `b` it
//! grows with slope one. Substituting this ansatz into the two
//! integro-differential equations and matching basis functions leaves `A3`
//! explicit and a 5x5 linear system for `(A1, A2, A4, B1, B2)`:
//!
//! 1. `e^{-alpha x}` terms of the lower equation,
//! 2. constant terms of the lower equation,
//! 3. `e^{-alpha x}` terms of the upper equation,
//! 4. `V_l(a) = V_u(a)`,
//! 5. `V_u'(b) = 1`.
//!
//! Internally `A2`, `B1` and `B2` are stored relative to `e^{R2 a}`,
//! `e^{S1 a}` and `e^{S2 b}` so the system stays well scaled for large levels.

use crate::classical::ClassicalSolution;
use crate::linalg::solve_checked;
use crate::params::{char_roots, classify_regime, CharRoots, ModelParams, Regime, Thresholds};
use crate::roots::{bisect, first_sign_change};
use crate::value::{ExpPoly, ExpTerm, PiecewiseValue};
use crate::{Error, Result};

/// Condition number above which the coefficient system counts as singular.
pub const MAX_CONDITION: f64 = 1e14;
/// Scan step for the free-boundary search, as a fraction of `b~`.
pub const SCAN_STEP_FRACTION: f64 = 0.01;
/// The search window never extends beyond this multiple of `b~`.
pub const SCAN_MAX_MULTIPLE: f64 = 50.0;

/// Coefficients of `V_l` and `V_u` for a given pair of levels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandCoefficients {
    pub a: f64,
    pub b: f64,
    a1: f64,
    /// `A2 e^{R2 a}`
    a2_scaled: f64,
    a3: f64,
    a4: f64,
    /// `B1 e^{S1 a}`
    b1_scaled: f64,
    /// `B2 e^{S2 b}`
    b2_scaled: f64,
    roots: CharRoots,
}

impl BandCoefficients {
    pub fn a1(&self) -> f64 {
        self.a1
    }
    pub fn a2(&self) -> f64 {
        self.a2_scaled * libm::exp(-self.roots.r2 * self.a)
    }
    pub fn a3(&self) -> f64 {
        self.a3
    }
    pub fn a4(&self) -> f64 {
        self.a4
    }
    pub fn b1(&self) -> f64 {
        self.b1_scaled * libm::exp(-self.roots.s1 * self.a)
    }
    pub fn b2(&self) -> f64 {
        self.b2_scaled * libm::exp(-self.roots.s2 * self.b)
    }
    pub fn roots(&self) -> &CharRoots {
        &self.roots
    }

    /// `V_l` as an exponential polynomial.
    pub fn lower(&self) -> ExpPoly {
        ExpPoly {
            terms: [ExpTerm::new(self.a1, self.roots.r1, 0.0), ExpTerm::new(self.a2_scaled, self.roots.r2, self.a)],
            slope: self.a3,
            intercept: self.a4,
        }
    }

    /// `V_u` as an exponential polynomial.
    pub fn upper(&self) -> ExpPoly {
        ExpPoly {
            terms: [ExpTerm::new(self.b1_scaled, self.roots.s1, self.a), ExpTerm::new(self.b2_scaled, self.roots.s2, self.b)],
            slope: 0.0,
            intercept: 0.0,
        }
    }

    /// `V(b; a, b)`, the value where the linear dividend piece starts.
    pub fn barrier_value(&self) -> f64 {
        if self.b > self.a {
            self.upper().eval(self.b, 0)
        } else {
            self.lower().eval(self.a, 0)
        }
    }

    /// The full three-piece function `V(x; a, b)`.
    pub fn value_function(&self) -> PiecewiseValue {
        let tail = ExpPoly::affine(1.0, self.barrier_value() - self.b);
        PiecewiseValue::from_joints(&[self.a, self.b], &[self.lower(), self.upper(), tail])
    }

    /// Left-hand sides of the lower and upper integro-differential equations at `x`.
    ///
    /// Convolutions are evaluated in closed form from the assembled pieces, not
    /// from the linear system, so this is an independent check of it. At
    /// `x = a` both residuals are defined.
    pub fn ide_residual(&self, params: &ModelParams, x: f64) -> Result<IdeResidual> {
        if !(x >= 0.0 && x <= self.b) {
            return Err(Error::OutOfDomain { x, lo: 0.0, hi: self.b });
        }
        let (c, lambda, alpha) = (params.c(), params.lambda(), params.alpha());
        let (beta, delta, phi) = (params.beta(), params.delta(), params.phi());
        let lo = self.lower();
        let up = self.upper();
        let lower = (x <= self.a).then(|| {
            c * lo.eval(x, 1) - (delta + lambda) * lo.eval(x, 0)
                + lambda * lo.kernel_integral(alpha, x, 0.0, x)
                + beta * (lo.eval(self.a, 0) - lo.eval(x, 0) - phi * (self.a - x))
        });
        let upper = (x >= self.a).then(|| {
            c * up.eval(x, 1) - (delta + lambda) * up.eval(x, 0)
                + lambda * (up.kernel_integral(alpha, x, self.a, x) + lo.kernel_integral(alpha, x, 0.0, self.a))
        });
        Ok(IdeResidual { lower, upper })
    }
}

/// Residuals of the lower (`x <= a`) and upper (`a <= x <= b`) equations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdeResidual {
    pub lower: Option<f64>,
    pub upper: Option<f64>,
}

impl IdeResidual {
    pub fn max_abs(&self) -> f64 {
        let l = self.lower.map_or(0.0, libm::fabs);
        let u = self.upper.map_or(0.0, libm::fabs);
        l.max(u)
    }
}

/// Solves the coefficient system for levels `0 <= a <= b`.
pub fn assemble_coefficients(a: f64, b: f64, params: &ModelParams, roots: &CharRoots) -> Result<BandCoefficients> {
    if !(a >= 0.0) {
        return Err(Error::NegativeX(a));
    }
    if !(a <= b) || !b.is_finite() {
        return Err(Error::NegativeGap { a, b });
    }
    debug_assert!(roots.max_residual(params) < 1e-8, "e^{{Rx}}, e^{{Sx}} terms must cancel");
    let (c, lambda, alpha) = (params.c(), params.lambda(), params.alpha());
    let (beta, delta, phi) = (params.beta(), params.delta(), params.phi());
    let CharRoots { s1, s2, r1, r2 } = *roots;
    let a3 = beta * phi / (delta + beta);
    let exp = libm::exp;
    let e_r1a = exp(r1 * a);
    let e_m_r2a = exp(-r2 * a);
    let e_s2ab = exp(s2 * (a - b));
    let e_s1ba = exp(s1 * (b - a));
    let e_m_aa = exp(-alpha * a);
    // int_0^a V_l(u) e^{alpha (u - a)} du, basis by basis
    let i_r1 = (e_r1a - e_m_aa) / (alpha + r1);
    let i_r2 = (1.0 - exp(-(alpha + r2) * a)) / (alpha + r2);
    let i_one = (1.0 - e_m_aa) / alpha;
    let i_lin = a / alpha - (1.0 - e_m_aa) / (alpha * alpha);

    // unknowns: A1, A2 e^{R2 a}, A4, B1 e^{S1 a}, B2 e^{S2 b}
    let m = [
        [alpha / (alpha + r1), alpha * e_m_r2a / (alpha + r2), 1.0, 0.0, 0.0],
        [beta * e_r1a, beta, -delta, 0.0, 0.0],
        [i_r1, i_r2, i_one, -1.0 / (alpha + s1), -e_s2ab / (alpha + s2)],
        [e_r1a, 1.0, 1.0, -1.0, -e_s2ab],
        [0.0, 0.0, 0.0, s1 * e_s1ba, s2],
    ];
    let rhs = [
        a3 / alpha,
        -(c - lambda / alpha) * a3 + beta * phi * delta * a / (delta + beta),
        -a3 * i_lin,
        -a3 * a,
        1.0,
    ];
    let x = solve_checked(&m, &rhs, MAX_CONDITION)?;
    Ok(BandCoefficients {
        a,
        b,
        a1: x[0],
        a2_scaled: x[1],
        a3,
        a4: x[2],
        b1_scaled: x[3],
        b2_scaled: x[4],
        roots: *roots,
    })
}

/// `H(h) = phi (S2 - S1) + S1 e^{-S2 h} - S2 e^{-S1 h}`; its root is the band width `b* - a*`.
pub fn gap_function(h: f64, phi: f64, roots: &CharRoots) -> f64 {
    let CharRoots { s1, s2, .. } = *roots;
    phi * (s2 - s1) + s1 * libm::exp(-s2 * h) - s2 * libm::exp(-s1 * h)
}

/// Root of [`gap_function`] on `[0, b~]` for `1 <= phi <= phi_max`.
///
/// Returns `0` at `phi = 1` and `b~` at `phi >= phi_max`.
pub fn solve_gap(phi: f64, roots: &CharRoots, thresholds: &Thresholds) -> Result<f64> {
    if phi <= 1.0 {
        return Ok(0.0);
    }
    if phi >= thresholds.phi_max {
        return Ok(thresholds.b_tilde);
    }
    let h = |x| gap_function(x, phi, roots);
    if !(h(0.0) > 0.0 && h(thresholds.b_tilde) < 0.0) {
        return Err(Error::BracketFailure("gap equation"));
    }
    bisect(h, 0.0, thresholds.b_tilde, 0.0, "gap equation")
}

/// Band width `h~ = b* - a*` in the two-level regime.
pub fn gap_root(params: &ModelParams) -> Result<f64> {
    match classify_regime(params) {
        Regime::Band(t) => solve_gap(params.phi(), &char_roots(params), &t),
        _ => Err(Error::RegimeMismatch { expected: "Band" }),
    }
}

/// A free boundary found by scanning for the first sign change.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelSearch {
    pub level: f64,
    /// Sign changes on the scanned window; more than one means the smallest root was taken.
    pub sign_changes: usize,
}

fn scan_for_level<F>(mut f: F, b_tilde: f64, tol: f64, what: &'static str) -> Result<LevelSearch>
where
    F: FnMut(f64) -> Result<f64>,
{
    let f0 = f(0.0)?;
    if !(f0 < 0.0) {
        return Err(Error::BracketFailure(what));
    }
    let step = SCAN_STEP_FRACTION * b_tilde;
    let bracket = first_sign_change(&mut f, 0.0, step, b_tilde, SCAN_MAX_MULTIPLE * b_tilde, what)?;
    let mut failure = None;
    let level = bisect(
        |x| match f(x) {
            Ok(v) => v,
            Err(e) => {
                failure = Some(e);
                f64::NAN
            }
        },
        bracket.lo,
        bracket.hi,
        tol,
        what,
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(LevelSearch { level, sign_changes: bracket.sign_changes })
}

/// `V_u''(a + h; a, a + h)`, whose smallest positive root is `a*`.
pub fn upper_curvature_at_barrier(a: f64, h_bar: f64, params: &ModelParams, roots: &CharRoots) -> Result<f64> {
    let co = assemble_coefficients(a, a + h_bar, params, roots)?;
    Ok(co.upper().eval(a + h_bar, 2))
}

/// `M(a) = V_l''(a; a, a)` for the merged case `phi = 1`.
pub fn merged_curvature(a: f64, params: &ModelParams, roots: &CharRoots) -> Result<f64> {
    let co = assemble_coefficients(a, a, params, roots)?;
    Ok(co.lower().eval(a, 2))
}

/// Lower level `a*` for a given band width.
pub fn lower_level(h_bar: f64, params: &ModelParams) -> Result<LevelSearch> {
    let Regime::Band(t) = classify_regime(params) else {
        return Err(Error::RegimeMismatch { expected: "Band" });
    };
    let roots = char_roots(params);
    scan_for_level(
        |a| upper_curvature_at_barrier(a, h_bar, params, &roots),
        t.b_tilde,
        params.tol_root(),
        "V_u''(a + h) in a",
    )
}

/// Common level `a* = b*` when funding costs nothing extra (`phi = 1`).
pub fn merged_level(params: &ModelParams) -> Result<LevelSearch> {
    let Regime::MergedBand(t) = classify_regime(params) else {
        return Err(Error::RegimeMismatch { expected: "MergedBand" });
    };
    let roots = char_roots(params);
    scan_for_level(|a| merged_curvature(a, params, &roots), t.b_tilde, params.tol_root(), "M(a)")
}

/// `(B1, B2)` at a band satisfying both smooth-fit conditions, in closed form.
pub fn smooth_fit_upper_coefficients(a: f64, b: f64, phi: f64, roots: &CharRoots) -> (f64, f64) {
    let CharRoots { s1, s2, .. } = *roots;
    let e = libm::exp;
    let b1 = s2 * phi * e(b * s2) / (s1 * s2 * e(a * s1 + b * s2) - s1 * s1 * e(a * s2 + b * s1));
    let b2 = s1 * phi * e(b * s1) / (s1 * s2 * e(a * s2 + b * s1) - s2 * s2 * e(a * s1 + b * s2));
    (b1, b2)
}

/// Optimal strategy and its value function.
#[derive(Debug, Clone, PartialEq)]
pub struct BandSolution {
    pub regime: Regime,
    pub a_star: f64,
    pub b_star: f64,
    /// `None` only in the payout-all regime.
    pub coeffs: Option<BandCoefficients>,
    pub b_tilde: Option<f64>,
    pub phi_max: Option<f64>,
    /// `b* - a*`.
    pub h_bar: f64,
    /// Sign changes seen while locating `a*` (0 when no search was needed).
    pub sign_changes: usize,
    pub params: ModelParams,
    value: PiecewiseValue,
}

impl BandSolution {
    pub fn value_function(&self) -> &PiecewiseValue {
        &self.value
    }

    pub fn roots(&self) -> CharRoots {
        char_roots(&self.params)
    }

    /// `V`, `V'` or `V''` at `x >= 0`.
    pub fn eval(&self, x: f64, order: u8) -> Result<f64> {
        self.value.eval(x, order)
    }

    pub fn ide_residual(&self, x: f64) -> Result<IdeResidual> {
        match &self.coeffs {
            Some(co) => co.ide_residual(&self.params, x),
            None => Err(Error::RegimeMismatch { expected: "a non-degenerate" }),
        }
    }
}

/// `V`, `V'` or `V''` of a solution at `x >= 0`.
pub fn eval(solution: &BandSolution, x: f64, order: u8) -> Result<f64> {
    solution.eval(x, order)
}

const SMOOTH_FIT_SLOPE_TOL: f64 = 1e-8;
const SMOOTH_FIT_CURVATURE_TOL: f64 = 1e-6;

fn check(what: &'static str, error: f64, tol: f64) -> Result<()> {
    if libm::fabs(error) <= tol {
        Ok(())
    } else {
        Err(Error::SmoothFit { what, error })
    }
}

/// Optimal band strategy for `params`, dispatched on the regime.
pub fn solve(params: &ModelParams) -> Result<BandSolution> {
    let regime = classify_regime(params);
    let roots = char_roots(params);
    let Some(t) = regime.thresholds() else {
        return Ok(BandSolution {
            regime,
            a_star: 0.0,
            b_star: 0.0,
            coeffs: None,
            b_tilde: None,
            phi_max: None,
            h_bar: 0.0,
            sign_changes: 0,
            params: *params,
            value: PiecewiseValue::linear(params.payout_constant()),
        });
    };
    let (a_star, b_star, sign_changes) = match regime {
        Regime::ClassicalBarrier(_) => (0.0, t.b_tilde, 0),
        Regime::MergedBand(_) => {
            let s = merged_level(params)?;
            (s.level, s.level, s.sign_changes)
        }
        Regime::Band(_) => {
            let h_bar = solve_gap(params.phi(), &roots, &t)?;
            let s = lower_level(h_bar, params)?;
            (s.level, s.level + h_bar, s.sign_changes)
        }
        Regime::PayoutAll => unreachable!(),
    };
    let coeffs = assemble_coefficients(a_star, b_star, params, &roots)?;
    let value = coeffs.value_function();

    check("V'(b*) - 1", value.derivative(b_star) - 1.0, SMOOTH_FIT_SLOPE_TOL)?;
    check("V''(b*)", value.second_derivative(b_star), SMOOTH_FIT_CURVATURE_TOL)?;
    if let Regime::Band(_) = regime {
        check("V'(a*) - phi", coeffs.lower().eval(a_star, 1) - params.phi(), SMOOTH_FIT_SLOPE_TOL)?;
        check(
            "V_l''(a*) - V_u''(a*)",
            coeffs.lower().eval(a_star, 2) - coeffs.upper().eval(a_star, 2),
            SMOOTH_FIT_CURVATURE_TOL,
        )?;
    }
    Ok(BandSolution {
        regime,
        a_star,
        b_star,
        coeffs: Some(coeffs),
        b_tilde: Some(t.b_tilde),
        phi_max: Some(t.phi_max),
        h_bar: b_star - a_star,
        sign_changes,
        params: *params,
        value,
    })
}

/// Classical solution at `b~` expressed through the band machinery, `V(x; 0, b~)`.
pub fn classical_as_band(params: &ModelParams) -> Result<(BandCoefficients, ClassicalSolution)> {
    let cl = ClassicalSolution::new(params)?;
    let co = assemble_coefficients(0.0, cl.b_tilde, params, &char_roots(params))?;
    Ok((co, cl))
}
