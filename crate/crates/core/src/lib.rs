//! Computable conditionally monotone (c-monotone) probability.
//!
//! The crate has two evaluation tracks that are cross-checked against each
//! other throughout the test suite:
//!
//! * an exact track over arbitrary-precision rationals (moment sequences,
//!   truncated formal series, rational reciprocal Cauchy transforms of
//!   finitely atomic measures, partition sums),
//! * a floating-point analytic track (closed-form transforms with the fixed
//!   branch conventions, Stieltjes inversion, atom location, complex ODE
//!   flows for convolution semigroups).
//!
//! Module layout follows the subject matter: [`measures`] holds distribution
//! representations, [`transforms`] the reciprocal Cauchy transform machinery,
//! [`partitions`] the non-crossing/monotone partition combinatorics,
//! [`cumulants`] the cumulant calculi, [`pair_convolutions`] the convolution
//! operations and deformations, [`mixed_moments`] the two-state word
//! evaluator, [`semigroups`] the Levy-Khintchine flows and divisibility
//! checks, and [`limits`] the limit-theorem harness.

// index loops mirror the matrix/series recurrences they implement
#![allow(clippy::needless_range_loop)]
#![allow(clippy::manual_memcpy)]

pub mod acceptance;
pub mod cumulants;
pub mod limits;
pub mod measures;
pub mod mixed_moments;
pub mod pair_convolutions;
pub mod partitions;
pub mod ring;
pub mod semigroups;
pub mod series;
pub mod transforms;
pub(crate) mod util;

pub use measures::{AtomicMeasure, MomentSeq, NamedLaw};
pub use ring::{Coeff, MPoly, Q};
