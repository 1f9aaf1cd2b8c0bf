//! Cheap Subsampling confidence intervals for asymptotically linear
//! estimators, the comparator intervals (Cheap Bootstrap, jackknife limit,
//! influence-function Wald interval), a deterministic parallel replication
//! engine, and a Monte Carlo harness for coverage studies on a two-interval
//! longitudinal data-generating mechanism.
//!
//! The numerical core is generic over [`Scalar`] (`f32` / `f64`); the
//! aliases below fix it to `f64`, which is what the simulation harness uses.

pub mod error;
pub mod estimators;
pub mod intervals;
pub mod numerics;
pub mod resampling;
pub mod scalar;
pub mod simstudy;

pub use error::{Error, FitError, Result};
pub use scalar::Scalar;

pub type Probability = numerics::Probability<f64>;
pub type IntervalEstimate = intervals::IntervalEstimate<f64>;
pub type EstimateWithIf = estimators::EstimateWithIf<f64>;
pub type Replications = resampling::Replications<f64>;
pub type LogisticFit = estimators::LogisticFit<f64>;
pub type DesignMatrix = estimators::DesignMatrix<f64>;
