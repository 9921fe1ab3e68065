//! Constructive tools around uniform continuity, extreme values and
//! intermediate values of real functions on compact intervals.
//!
//! - [`optimal_delta`]: the largest admissible `δ` for a given `ε`, exactly for
//!   the power family and the chainsaw, by grid search otherwise, plus the
//!   modulus of continuity.
//! - [`extremum`]: maxima via nested dyadic nets with a modulus-based
//!   certificate, and via the running-maximum envelope.
//! - [`intermediate`]: bisection towards the boundary of a target set, the
//!   classical intermediate value search, and fixed points of (possibly
//!   discontinuous) self-maps.

pub mod error;
pub mod extremum;
pub mod function_model;
pub mod intermediate;
pub mod optimal_delta;

pub use error::{Error, Result};
pub use function_model::{parse_function, FiniteMetricSpace, Interval, RealFunction};
