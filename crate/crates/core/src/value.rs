//! Piecewise exponential-polynomial functions on `[0, inf)`.
//!
//! Every value function in this crate is a chain of pieces of the form
//! `k1 e^{r1 (x-s1)} + k2 e^{r2 (x-s2)} + p x + q`. Keeping that structure
//! makes derivatives and convolutions against the exponential claim density
//! exact.

use alloc::vec::Vec;

use crate::{Error, Result};

/// `coef * e^{rate (x - shift)}`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ExpTerm {
    pub coef: f64,
    pub rate: f64,
    pub shift: f64,
}

impl ExpTerm {
    pub const ZERO: ExpTerm = ExpTerm { coef: 0.0, rate: 0.0, shift: 0.0 };

    pub fn new(coef: f64, rate: f64, shift: f64) -> Self {
        ExpTerm { coef, rate, shift }
    }

    fn eval(&self, x: f64, order: u8) -> f64 {
        if self.coef == 0.0 {
            return 0.0;
        }
        let k = match order {
            0 => 1.0,
            1 => self.rate,
            _ => self.rate * self.rate,
        };
        self.coef * k * libm::exp(self.rate * (x - self.shift))
    }

    /// `int_lo^hi coef e^{rate(u-shift)} alpha e^{-alpha(x-u)} du`.
    fn kernel_integral(&self, alpha: f64, x: f64, lo: f64, hi: f64) -> f64 {
        if self.coef == 0.0 || hi <= lo {
            return 0.0;
        }
        let at = |u: f64| self.rate * (u - self.shift) - alpha * (x - u);
        let k = alpha + self.rate;
        if k == 0.0 {
            return self.coef * alpha * libm::exp(at(lo)) * (hi - lo);
        }
        self.coef * alpha / k * (libm::exp(at(hi)) - libm::exp(at(lo)))
    }
}

/// Two exponential terms plus an affine part.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ExpPoly {
    pub terms: [ExpTerm; 2],
    pub slope: f64,
    pub intercept: f64,
}

impl ExpPoly {
    pub fn affine(slope: f64, intercept: f64) -> Self {
        ExpPoly { terms: [ExpTerm::ZERO; 2], slope, intercept }
    }

    pub fn eval(&self, x: f64, order: u8) -> f64 {
        let e = self.terms[0].eval(x, order) + self.terms[1].eval(x, order);
        match order {
            0 => e + self.slope * x + self.intercept,
            1 => e + self.slope,
            _ => e,
        }
    }

    /// `int_lo^hi p(u) alpha e^{-alpha (x-u)} du` in closed form.
    pub fn kernel_integral(&self, alpha: f64, x: f64, lo: f64, hi: f64) -> f64 {
        if hi <= lo {
            return 0.0;
        }
        let exp_part = self.terms[0].kernel_integral(alpha, x, lo, hi) + self.terms[1].kernel_integral(alpha, x, lo, hi);
        // antiderivative of (p u + q) alpha e^{alpha(u-x)} is e^{alpha(u-x)} (p u + q - p/alpha)
        let anti = |u: f64| libm::exp(alpha * (u - x)) * (self.slope * u + self.intercept - self.slope / alpha);
        exp_part + anti(hi) - anti(lo)
    }
}

/// One piece of a [`PiecewiseValue`], valid on `[start, end]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Piece {
    pub start: f64,
    pub end: f64,
    pub poly: ExpPoly,
}

/// Which side of a joint to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// A function on `[0, inf)` made of consecutive [`Piece`]s; the last piece is unbounded.
///
/// At a joint the left piece is used unless [`PiecewiseValue::eval_side`] asks otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseValue {
    pieces: Vec<Piece>,
    concave: bool,
}

const CONCAVITY_SAMPLES: usize = 256;
const CONCAVITY_TOL: f64 = 1e-8;

impl PiecewiseValue {
    /// Chains polynomials at the given joints: `polys.len() == joints.len() + 1`.
    ///
    /// Zero-width pieces (repeated joints) are dropped.
    pub fn from_joints(joints: &[f64], polys: &[ExpPoly]) -> Self {
        assert_eq!(polys.len(), joints.len() + 1, "one polynomial per piece");
        let mut pieces = Vec::with_capacity(polys.len());
        let mut start = 0.0;
        for (i, poly) in polys.iter().enumerate() {
            let end = joints.get(i).copied().unwrap_or(f64::INFINITY);
            if end > start || end.is_infinite() {
                pieces.push(Piece { start, end, poly: *poly });
                start = end;
            }
        }
        let mut v = PiecewiseValue { pieces, concave: true };
        v.concave = v.max_second_derivative().1 <= CONCAVITY_TOL;
        v
    }

    /// `x + offset` everywhere.
    pub fn linear(offset: f64) -> Self {
        Self::from_joints(&[], &[ExpPoly::affine(1.0, offset)])
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    /// Interior joints, in increasing order.
    pub fn joints(&self) -> impl Iterator<Item = f64> + '_ {
        self.pieces.iter().skip(1).map(|p| p.start)
    }

    /// Start of the last piece (the dividend barrier for our solutions).
    pub fn last_joint(&self) -> f64 {
        self.pieces.last().map_or(0.0, |p| p.start)
    }

    /// Whether `V''` stayed below a small tolerance on a sample of every finite piece.
    pub fn is_concave(&self) -> bool {
        self.concave
    }

    /// Largest sampled `V''` and where it occurred.
    pub fn max_second_derivative(&self) -> (f64, f64) {
        let mut worst = (0.0, f64::NEG_INFINITY);
        for piece in &self.pieces {
            let end = if piece.end.is_finite() { piece.end } else { piece.start + 1.0 };
            for i in 0..=CONCAVITY_SAMPLES {
                let x = piece.start + (end - piece.start) * i as f64 / CONCAVITY_SAMPLES as f64;
                let d2 = piece.poly.eval(x, 2);
                if d2 > worst.1 {
                    worst = (x, d2);
                }
            }
        }
        worst
    }

    fn piece_index(&self, x: f64, side: Side) -> usize {
        let n = self.pieces.len();
        for (i, p) in self.pieces.iter().enumerate() {
            let inside = match side {
                Side::Left => x <= p.end,
                Side::Right => x < p.end,
            };
            if inside {
                return i;
            }
        }
        n - 1
    }

    pub fn eval_side(&self, x: f64, order: u8, side: Side) -> f64 {
        self.pieces[self.piece_index(x, side)].poly.eval(x, order)
    }

    /// Value (`order` 0) or derivative (1, 2) at `x >= 0`.
    pub fn eval(&self, x: f64, order: u8) -> Result<f64> {
        if order > 2 {
            return Err(Error::InvalidOrder(order));
        }
        if !(x >= 0.0) {
            return Err(Error::NegativeX(x));
        }
        Ok(self.eval_side(x, order, Side::Left))
    }

    pub fn value(&self, x: f64) -> f64 {
        self.eval_side(x, 0, Side::Left)
    }

    pub fn derivative(&self, x: f64) -> f64 {
        self.eval_side(x, 1, Side::Left)
    }

    pub fn second_derivative(&self, x: f64) -> f64 {
        self.eval_side(x, 2, Side::Left)
    }

    /// `int_0^x V(x - y) alpha e^{-alpha y} dy`, exact piece by piece.
    pub fn exp_convolution(&self, alpha: f64, x: f64) -> f64 {
        let mut total = 0.0;
        for p in &self.pieces {
            if p.start >= x {
                break;
            }
            total += p.poly.kernel_integral(alpha, x, p.start, p.end.min(x));
        }
        total
    }

    /// Largest one-sided mismatch of `V`, `V'`, `V''` over all joints, per order.
    pub fn joint_gaps(&self) -> [f64; 3] {
        let mut gaps = [0.0_f64; 3];
        for w in self.pieces.windows(2) {
            let x = w[1].start;
            for (order, g) in gaps.iter_mut().enumerate() {
                let d = libm::fabs(w[0].poly.eval(x, order as u8) - w[1].poly.eval(x, order as u8));
                *g = g.max(d);
            }
        }
        gaps
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::adaptive_simpson;

    fn sample() -> PiecewiseValue {
        let lower = ExpPoly {
            terms: [ExpTerm::new(-0.5, -1.2, 0.0), ExpTerm::new(0.3, 1.7, 2.0)],
            slope: 1.4,
            intercept: 2.0,
        };
        let upper = ExpPoly {
            terms: [ExpTerm::new(-2.0, -0.8, 2.0), ExpTerm::new(4.0, 0.02, 5.0)],
            slope: 0.0,
            intercept: 0.0,
        };
        let v5 = upper.eval(5.0, 0);
        PiecewiseValue::from_joints(&[2.0, 5.0], &[lower, upper, ExpPoly::affine(1.0, v5 - 5.0)])
    }

    #[test]
    fn convolution_matches_quadrature() {
        let v = sample();
        let alpha = 1.5;
        for &x in &[0.0, 0.3, 2.0, 3.7, 5.0, 9.0] {
            let exact = v.exp_convolution(alpha, x);
            let mut quad = 0.0;
            let cuts = [0.0, 2.0, 5.0, x];
            for w in cuts.windows(2) {
                let (lo, hi) = (w[0].min(x), w[1].min(x));
                quad += adaptive_simpson(|u| v.value(u) * alpha * (-alpha * (x - u)).exp(), lo, hi, 1e-13);
            }
            assert!((exact - quad).abs() < 1e-10, "x={x}: {exact} vs {quad}");
        }
        assert_eq!(v.exp_convolution(alpha, 0.0), 0.0);
    }

    #[test]
    fn evaluation_and_sides() {
        let v = sample();
        assert_eq!(v.joints().collect::<Vec<_>>(), vec![2.0, 5.0]);
        assert_eq!(v.last_joint(), 5.0);
        assert!((v.value(7.0) - v.value(5.0) - 2.0).abs() < 1e-12);
        assert_eq!(v.derivative(8.0), 1.0);
        assert_eq!(v.eval(-0.1, 0), Err(Error::NegativeX(-0.1)));
        assert_eq!(v.eval(1.0, 3), Err(Error::InvalidOrder(3)));
        let left = v.eval_side(2.0, 1, Side::Left);
        let right = v.eval_side(2.0, 1, Side::Right);
        assert!((left - v.pieces()[0].poly.eval(2.0, 1)).abs() < 1e-15);
        assert!((right - v.pieces()[1].poly.eval(2.0, 1)).abs() < 1e-15);
    }

    #[test]
    fn zero_width_pieces_are_dropped() {
        let v = PiecewiseValue::from_joints(&[0.0, 3.0], &[ExpPoly::affine(5.0, 0.0), ExpPoly::affine(2.0, 1.0), ExpPoly::affine(1.0, 4.0)]);
        assert_eq!(v.pieces().len(), 2);
        assert_eq!(v.value(0.0), 1.0);
        assert!(v.is_concave());
        assert_eq!(v.joint_gaps(), [0.0, 1.0, 0.0]);
    }

    #[test]
    fn detects_convexity() {
        let convex = ExpPoly { terms: [ExpTerm::new(1.0, 1.0, 0.0), ExpTerm::ZERO], slope: 0.0, intercept: 0.0 };
        let v = PiecewiseValue::from_joints(&[1.0], &[convex, ExpPoly::affine(1.0, 0.0)]);
        assert!(!v.is_concave());
    }
}
