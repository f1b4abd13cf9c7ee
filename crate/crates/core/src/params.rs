//! Model constants, characteristic exponents and the regime that decides which
//! solver branch applies.

use crate::classical;
use crate::{Error, Result};

pub const DEFAULT_TOL_ROOT: f64 = 1e-12;
pub const DEFAULT_TOL_RESIDUAL: f64 = 1e-6;

/// The keys [`ModelParams::from_pairs`] requires, in canonical order.
pub const MODEL_KEYS: [&str; 6] = ["c", "lambda", "alpha", "beta", "delta", "phi"];

/// Validated model constants.
///
/// * `c` premium rate, `lambda` claim intensity, `alpha` exponential claim rate
///   (mean claim `1/alpha`), `delta` discount rate: all strictly positive.
/// * `beta` investor arrival intensity, non-negative.
/// * `phi` proportional funding cost, at least one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    c: f64,
    lambda: f64,
    alpha: f64,
    beta: f64,
    delta: f64,
    phi: f64,
    tol_root: f64,
    tol_residual: f64,
}

impl ModelParams {
    pub fn new(c: f64, lambda: f64, alpha: f64, beta: f64, delta: f64, phi: f64) -> Result<Self> {
        let p = ModelParams {
            c,
            lambda,
            alpha,
            beta,
            delta,
            phi,
            tol_root: DEFAULT_TOL_ROOT,
            tol_residual: DEFAULT_TOL_RESIDUAL,
        };
        p.validate()?;
        Ok(p)
    }

    /// Builds parameters from named values, e.g. the pairs of a config file.
    ///
    /// Recognized keys are [`MODEL_KEYS`] plus the optional `tol_root` and
    /// `tol_residual`; anything else is ignored here. Later duplicates win.
    pub fn from_pairs<'a, I>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a str, f64)>,
    {
        let mut slots = [None; 6];
        let mut tol_root = DEFAULT_TOL_ROOT;
        let mut tol_residual = DEFAULT_TOL_RESIDUAL;
        for (k, v) in pairs {
            if let Some(i) = MODEL_KEYS.iter().position(|m| *m == k) {
                slots[i] = Some(v);
            } else if k == "tol_root" {
                tol_root = v;
            } else if k == "tol_residual" {
                tol_residual = v;
            }
        }
        let mut vals = [0.0; 6];
        for (i, s) in slots.iter().enumerate() {
            vals[i] = s.ok_or(Error::MissingKey(MODEL_KEYS[i]))?;
        }
        let [c, lambda, alpha, beta, delta, phi] = vals;
        Self::new(c, lambda, alpha, beta, delta, phi)?.with_tolerances(tol_root, tol_residual)
    }

    fn validate(&self) -> Result<()> {
        let named = [
            ("c", self.c),
            ("lambda", self.lambda),
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("delta", self.delta),
            ("phi", self.phi),
        ];
        for (name, v) in named {
            if !v.is_finite() {
                return Err(Error::NotFinite(name));
            }
        }
        for (name, v) in [("c", self.c), ("lambda", self.lambda), ("alpha", self.alpha), ("delta", self.delta)] {
            if v <= 0.0 {
                return Err(Error::NonPositiveRate { name, value: v });
            }
        }
        if self.beta < 0.0 {
            return Err(Error::NegativeBeta(self.beta));
        }
        if self.phi < 1.0 {
            return Err(Error::PhiBelowOne(self.phi));
        }
        for (name, v) in [("tol_root", self.tol_root), ("tol_residual", self.tol_residual)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::NonPositiveRate { name, value: v });
            }
        }
        Ok(())
    }

    pub fn with_tolerances(mut self, tol_root: f64, tol_residual: f64) -> Result<Self> {
        self.tol_root = tol_root;
        self.tol_residual = tol_residual;
        self.validate()?;
        Ok(self)
    }

    /// Same model with a different funding cost.
    pub fn with_phi(mut self, phi: f64) -> Result<Self> {
        self.phi = phi;
        self.validate()?;
        Ok(self)
    }

    pub fn with_beta(mut self, beta: f64) -> Result<Self> {
        self.beta = beta;
        self.validate()?;
        Ok(self)
    }

    pub fn c(&self) -> f64 {
        self.c
    }
    pub fn lambda(&self) -> f64 {
        self.lambda
    }
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }
    pub fn delta(&self) -> f64 {
        self.delta
    }
    pub fn phi(&self) -> f64 {
        self.phi
    }
    pub fn tol_root(&self) -> f64 {
        self.tol_root
    }
    pub fn tol_residual(&self) -> f64 {
        self.tol_residual
    }

    /// Mean claim size `1/alpha`.
    pub fn mean_claim(&self) -> f64 {
        1.0 / self.alpha
    }

    /// `(delta+lambda)^2 >= c alpha lambda`: paying out the whole surplus is optimal.
    pub fn is_payout_all(&self) -> bool {
        let s = self.delta + self.lambda;
        s * s >= self.c * self.alpha * self.lambda
    }

    /// Value of paying out everything immediately and then the premium flow, `c/(lambda+delta)`.
    pub fn payout_constant(&self) -> f64 {
        self.c / (self.lambda + self.delta)
    }
}

/// Exponents of the exponential ansatz.
///
/// `s1 < 0 < s2` solve `c S - (delta+lambda) + alpha lambda/(alpha+S) = 0`,
/// `r1 < 0 < r2` the same equation with `delta+lambda+beta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CharRoots {
    pub s1: f64,
    pub s2: f64,
    pub r1: f64,
    pub r2: f64,
}

/// Roots of `c z^2 + (c alpha - k) z - alpha (k - lambda) = 0` with `k = delta + lambda + extra`.
fn quadratic_roots(p: &ModelParams, extra: f64) -> (f64, f64) {
    let a = p.c;
    let b = p.c * p.alpha - p.delta - p.lambda - extra;
    let c = -p.alpha * (p.delta + extra);
    // c < 0 so the discriminant is positive and the roots straddle zero.
    let disc = libm::sqrt(b * b - 4.0 * a * c);
    // avoid cancellation: q shares the sign of -b
    let q = if b >= 0.0 { -0.5 * (b + disc) } else { -0.5 * (b - disc) };
    let (x, y) = (q / a, c / q);
    if x < y {
        (x, y)
    } else {
        (y, x)
    }
}

/// Closed-form characteristic exponents.
pub fn char_roots(p: &ModelParams) -> CharRoots {
    let (s1, s2) = quadratic_roots(p, 0.0);
    let (r1, r2) = if p.beta == 0.0 { (s1, s2) } else { quadratic_roots(p, p.beta) };
    CharRoots { s1, s2, r1, r2 }
}

impl CharRoots {
    pub fn new(p: &ModelParams) -> Self {
        char_roots(p)
    }

    /// `c z - k + alpha lambda/(alpha + z)` with `k = delta+lambda+extra`.
    pub fn characteristic(p: &ModelParams, extra: f64, z: f64) -> f64 {
        p.c * z - (p.delta + p.lambda + extra) + p.alpha * p.lambda / (p.alpha + z)
    }

    /// Largest absolute residual of the four roots in the rational characteristic equations.
    pub fn max_residual(&self, p: &ModelParams) -> f64 {
        [
            Self::characteristic(p, 0.0, self.s1),
            Self::characteristic(p, 0.0, self.s2),
            Self::characteristic(p, p.beta, self.r1),
            Self::characteristic(p, p.beta, self.r2),
        ]
        .iter()
        .fold(0.0, |m, r| m.max(libm::fabs(*r)))
    }
}

/// Classical barrier `b~` and the funding-cost threshold `phi_max = V~'(0; b~)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    pub b_tilde: f64,
    pub phi_max: f64,
}

/// Shape of the optimal strategy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Regime {
    /// Pay out the whole surplus, then the premium flow; value `x + c/(lambda+delta)`.
    PayoutAll,
    /// `phi >= phi_max`: funding is never worth it, barrier at `b~`.
    ClassicalBarrier(Thresholds),
    /// `phi = 1`: fund straight up to the dividend barrier, `a* = b*`.
    MergedBand(Thresholds),
    /// `1 < phi < phi_max`: two distinct levels `0 < a* < b*`.
    Band(Thresholds),
}

impl Regime {
    pub fn name(&self) -> &'static str {
        match self {
            Regime::PayoutAll => "PayoutAll",
            Regime::ClassicalBarrier(_) => "ClassicalBarrier",
            Regime::MergedBand(_) => "MergedBand",
            Regime::Band(_) => "Band",
        }
    }

    pub fn thresholds(&self) -> Option<Thresholds> {
        match *self {
            Regime::PayoutAll => None,
            Regime::ClassicalBarrier(t) | Regime::MergedBand(t) | Regime::Band(t) => Some(t),
        }
    }
}

/// Picks the regime. Ties `phi == phi_max` go to the classical barrier and the
/// boundary `(delta+lambda)^2 == c alpha lambda` to payout-all.
pub fn classify_regime(p: &ModelParams) -> Regime {
    if p.is_payout_all() {
        return Regime::PayoutAll;
    }
    debug_assert!(p.c * p.alpha > p.delta + p.lambda);
    let roots = char_roots(p);
    let b_tilde = classical::barrier_from_roots(p, &roots);
    let phi_max = classical::phi_threshold_from_roots(p, &roots, b_tilde);
    let t = Thresholds { b_tilde, phi_max };
    if p.phi >= phi_max {
        Regime::ClassicalBarrier(t)
    } else if p.phi == 1.0 {
        Regime::MergedBand(t)
    } else {
        Regime::Band(t)
    }
}

#[cfg(test)]
pub(crate) fn reference_params() -> ModelParams {
    ModelParams::new(1.5, 1.0, 1.5, 2.0, 0.02, 1.5).unwrap()
}
