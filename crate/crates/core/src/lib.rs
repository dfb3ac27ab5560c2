//! Numerical laboratory for intracavity absorption spectroscopy.
//!
//! The crate models a two-mirror cavity containing a weakly absorbing trace
//! gas plus an optional intracavity medium (saturable gain or saturable
//! loss), and asks how well the gas absorption coefficient can be estimated
//! from the cavity output. It provides four layers:
//!
//! * closed-form benchmarks for single-pass and linear-cavity readout
//!   ([`analytic`]),
//! * the steady-state photon statistics of the nonlinear cavity via its
//!   stationary intensity distribution ([`fokkerplanck`]),
//! * estimation-sensitivity curves and operating-point optimization built
//!   on those statistics ([`sensitivity`]),
//! * time-domain stochastic trajectories for the experiments that have no
//!   closed form: hysteretic sweep-up switching and saturable ring-down
//!   timing ([`bistability`], [`sde`]).
//!
//! Everything works in SI internally (lengths in m, rates in 1/s,
//! intracavity intensity in photons). Conversions from the bench units
//! used at the CLI boundary (W/cm^2, 1/cm) live in [`units`].

// Parameter guards are written as negated comparisons (`!(x > 0.0)`) so
// that NaN fails validation; the `partial_cmp` rewrite clippy suggests
// would lose that.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::manual_range_contains)]

pub mod analytic;
pub mod bistability;
pub mod cli;
pub mod error;
pub mod fokkerplanck;
pub mod numerics;
pub mod output;
pub mod sde;
pub mod sensitivity;
pub mod units;

pub use error::{Error, Result};
