//! Estimators that plug into the replication engine and interval
//! constructors.

mod dataset;
mod logistic;
mod longitudinal;

pub use dataset::{LongitudinalDataset, Record};
pub use logistic::{fit_logistic, fit_logistic_weighted, DesignMatrix, LogisticFit};
pub use longitudinal::{
    fit_longitudinal_risk, LongitudinalEstimator, ModelSpec, NuisanceModelSet, OutcomeFit,
    Regime, Term, PROBABILITY_FLOOR,
};

use serde::Serialize;

use crate::error::{Error, FitError, Result};
use crate::scalar::Scalar;

/// Point estimate plus, when the estimator provides them, the estimated
/// influence-function values at each observation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateWithIf<T> {
    pub point: T,
    pub influence: Option<Vec<T>>,
}

impl<T: Scalar> EstimateWithIf<T> {
    pub fn point_only(point: T) -> Self {
        Self {
            point,
            influence: None,
        }
    }

    pub fn with_influence(point: T, influence: Vec<T>) -> Self {
        Self {
            point,
            influence: Some(influence),
        }
    }

    /// `(1/n) sum phi_i^2`.
    pub fn influence_variance(&self) -> Option<T> {
        self.influence.as_ref().map(|phi| {
            let n = T::from_count(phi.len());
            phi.iter().map(|&v| v * v).sum::<T>() / n
        })
    }
}

/// An asymptotically linear estimator that can be refit on resamples.
///
/// `fit` must be deterministic given the dataset.
pub trait Estimator<D: ?Sized>: Sync {
    type Scalar: Scalar;

    fn fit(&self, data: &D) -> Result<EstimateWithIf<Self::Scalar>, FitError>;

    /// Whether `fit` returns influence values.
    fn provides_influence(&self) -> bool;

    /// Point estimate only; used for replicates.
    fn estimate(&self, data: &D) -> Result<Self::Scalar, FitError> {
        self.fit(data).map(|e| e.point)
    }
}

/// Sample mean with influence values `x_i - mean`.
pub fn fit_mean<T: Scalar>(values: &[T]) -> Result<EstimateWithIf<T>> {
    if values.len() < 2 {
        return Err(Error::Fit(FitError::TooFewObservations {
            needed: 1,
            got: values.len(),
        }));
    }
    let mean = mean_of(values);
    Ok(EstimateWithIf::with_influence(
        mean,
        values.iter().map(|&v| v - mean).collect(),
    ))
}

fn mean_of<T: Scalar>(values: &[T]) -> T {
    values.iter().copied().sum::<T>() / T::from_count(values.len())
}

/// [`fit_mean`] as an [`Estimator`] over `Vec<T>`.
#[derive(Debug, Clone, Copy, Default)]
pub struct MeanEstimator;

impl<T: Scalar> Estimator<Vec<T>> for MeanEstimator {
    type Scalar = T;

    fn fit(&self, data: &Vec<T>) -> Result<EstimateWithIf<T>, FitError> {
        fit_mean(data).map_err(|e| match e {
            Error::Fit(f) => f,
            other => unreachable!("fit_mean only fails with fit errors: {other}"),
        })
    }

    fn provides_influence(&self) -> bool {
        true
    }

    fn estimate(&self, data: &Vec<T>) -> Result<T, FitError> {
        if data.is_empty() {
            return Err(FitError::TooFewObservations { needed: 0, got: 0 });
        }
        Ok(mean_of(data))
    }
}
