//! The classical dividend problem without funding: barrier strategy at `b~`.
//!
//! With `h(x) = (S1+alpha) e^{S1 x} - (S2+alpha) e^{S2 x}` the value of the
//! barrier strategy at level `b` is `h(x)/h'(b)` below the barrier and linear
//! with slope one above it.

use crate::params::{char_roots, CharRoots, ModelParams};
use crate::{Error, Result};

/// `h`, `h'` or `h''` at `x` (no domain check).
pub(crate) fn h_raw(roots: &CharRoots, alpha: f64, x: f64, order: u8) -> f64 {
    let (s1, s2) = (roots.s1, roots.s2);
    let (k1, k2) = match order {
        0 => (1.0, 1.0),
        1 => (s1, s2),
        _ => (s1 * s1, s2 * s2),
    };
    k1 * (s1 + alpha) * libm::exp(s1 * x) - k2 * (s2 + alpha) * libm::exp(s2 * x)
}

/// The derivative of order `order` (0, 1 or 2) of `h` at `x >= 0`.
pub fn h_eval(params: &ModelParams, x: f64, order: u8) -> Result<f64> {
    if order > 2 {
        return Err(Error::InvalidOrder(order));
    }
    if !(x >= 0.0) {
        return Err(Error::NegativeX(x));
    }
    Ok(h_raw(&char_roots(params), params.alpha(), x, order))
}

pub(crate) fn barrier_from_roots(p: &ModelParams, r: &CharRoots) -> f64 {
    let a = p.alpha();
    let ratio = (r.s2 * r.s2 * (r.s2 + a)) / (r.s1 * r.s1 * (r.s1 + a));
    libm::log(ratio) / (r.s1 - r.s2)
}

/// `h'(0)/h'(b~)`.
pub(crate) fn phi_threshold_from_roots(p: &ModelParams, r: &CharRoots, b_tilde: f64) -> f64 {
    h_raw(r, p.alpha(), 0.0, 1) / h_raw(r, p.alpha(), b_tilde, 1)
}

/// Optimal classical barrier `b~`, where `h''` vanishes.
pub fn optimal_barrier(params: &ModelParams) -> Result<f64> {
    if params.is_payout_all() {
        return Err(Error::DegenerateRegime);
    }
    Ok(barrier_from_roots(params, &char_roots(params)))
}

/// `phi_max = V~'(0; b~)`: above this funding cost the plain barrier is optimal.
pub fn phi_threshold(params: &ModelParams) -> Result<f64> {
    let b = optimal_barrier(params)?;
    let r = char_roots(params);
    let v = phi_threshold_from_roots(params, &r, b);
    debug_assert!(libm::fabs(v - phi_threshold_closed_form(params)?) <= 1e-8 * v);
    Ok(v)
}

/// The same threshold written purely in terms of the exponents, without `b~`.
///
/// Kept as a cross-check on [`phi_threshold`]; the powers here lose a few
/// digits when `S2` is tiny.
pub fn phi_threshold_closed_form(params: &ModelParams) -> Result<f64> {
    if params.is_payout_all() {
        return Err(Error::DegenerateRegime);
    }
    let CharRoots { s1, s2, .. } = char_roots(params);
    let a = params.alpha();
    let k = (s2 * s2 * (a + s2)) / (s1 * s1 * (a + s1));
    let num = (s1 - s2) * (a + s1 + s2);
    let den = s1 * (a + s1) * libm::pow(k, s1 / (s1 - s2)) - s2 * (a + s2) * libm::pow(k, s2 / (s1 - s2));
    Ok(num / den)
}

/// Value, slope and curvature of the barrier strategy at level `b`, `V~(x; b)`.
pub fn classical_value(x: f64, b: f64, params: &ModelParams) -> Result<(f64, f64, f64)> {
    if !(x >= 0.0) {
        return Err(Error::NegativeX(x));
    }
    if !(b >= 0.0) {
        return Err(Error::NegativeX(b));
    }
    let r = char_roots(params);
    let a = params.alpha();
    let norm = h_raw(&r, a, b, 1);
    if x <= b {
        Ok((h_raw(&r, a, x, 0) / norm, h_raw(&r, a, x, 1) / norm, h_raw(&r, a, x, 2) / norm))
    } else {
        Ok((x - b + h_raw(&r, a, b, 0) / norm, 1.0, 0.0))
    }
}

/// Closed-form solution of the classical problem at its optimal barrier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassicalSolution {
    pub b_tilde: f64,
    /// `h'(b~)`.
    pub normalizer: f64,
    roots: CharRoots,
    alpha: f64,
}

impl ClassicalSolution {
    pub fn new(params: &ModelParams) -> Result<Self> {
        let b_tilde = optimal_barrier(params)?;
        let roots = char_roots(params);
        let normalizer = h_raw(&roots, params.alpha(), b_tilde, 1);
        Ok(ClassicalSolution { b_tilde, normalizer, roots, alpha: params.alpha() })
    }

    pub fn roots(&self) -> &CharRoots {
        &self.roots
    }

    /// Coefficients `(k1, k2)` with `V~ = k1 e^{S1 x} + k2 e^{S2 x}` below the barrier.
    pub fn coefficients(&self) -> (f64, f64) {
        ((self.roots.s1 + self.alpha) / self.normalizer, -(self.roots.s2 + self.alpha) / self.normalizer)
    }

    pub fn value(&self, x: f64) -> f64 {
        if x <= self.b_tilde {
            h_raw(&self.roots, self.alpha, x, 0) / self.normalizer
        } else {
            x - self.b_tilde + h_raw(&self.roots, self.alpha, self.b_tilde, 0) / self.normalizer
        }
    }

    pub fn derivative(&self, x: f64) -> f64 {
        if x <= self.b_tilde {
            h_raw(&self.roots, self.alpha, x, 1) / self.normalizer
        } else {
            1.0
        }
    }

    pub fn second_derivative(&self, x: f64) -> f64 {
        if x <= self.b_tilde {
            h_raw(&self.roots, self.alpha, x, 2) / self.normalizer
        } else {
            0.0
        }
    }

    pub fn phi_max(&self) -> f64 {
        self.derivative(0.0)
    }
}
