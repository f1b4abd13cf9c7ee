//! Optimal dividend payouts with randomly arriving funding opportunities.
//!
//! The surplus of an insurer follows a compound Poisson process with
//! exponential claims. Dividends may be paid at any time, while capital can
//! only be raised at the arrival times of an independent Poisson stream of
//! investors, at a proportional cost `phi >= 1`. The optimal strategy is a
//! two-level band `(a*, b*)`: inject up to `a*` when an investor shows up
//! below it, and pay out everything above `b*`.
//!
//! The crate is `no_std` (it needs `alloc`) and contains only pure
//! computation:
//!
//! * [`params`]: model constants, characteristic roots, regime selection.
//! * [`classical`]: closed-form barrier solution without funding.
//! * [`band`]: coefficient system, free-boundary search, assembled solution.
//! * [`value`]: piecewise exponential-polynomial value functions.
//! * [`hjb`]: HJB residuals and verification-theorem hypotheses.
//! * [`sim`]: event-exact Monte Carlo of the controlled surplus.
//! * [`iteration`]: grid scheme allowing at most `n` fundings.
//!
//! IO, configuration files and the command line live in the `divfund` crate.

#![cfg_attr(not(test), no_std)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod band;
pub mod classical;
mod error;
pub mod hjb;
pub mod iteration;
pub mod linalg;
pub mod params;
pub mod quad;
pub mod roots;
pub mod sim;
pub mod value;

pub use band::{solve, BandCoefficients, BandSolution};
pub use error::{Error, Result};
pub use params::{CharRoots, ModelParams, Regime};
pub use value::PiecewiseValue;
