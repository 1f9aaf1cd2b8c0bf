use thiserror::Error;

/// Why a single estimator fit failed.
///
/// These are the failures the replication engine is allowed to retry on a
/// fresh random stream.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum FitError {
    #[error("iteratively reweighted least squares did not converge in {iterations} iterations")]
    NonConvergence { iterations: usize },
    #[error("complete or quasi-complete separation detected")]
    Separation,
    #[error("design matrix is singular or not positive definite")]
    Singular,
    #[error("too few observations: need more than {needed}, got {got}")]
    TooFewObservations { needed: usize, got: usize },
    #[error("no observations in stratum `{0}`")]
    EmptyStratum(&'static str),
    #[error("non-finite value produced in {0}")]
    NonFinite(&'static str),
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("subsample size must satisfy 1 <= m < n (got m = {m}, n = {n})")]
    SubsampleSize { m: usize, n: usize },
    #[error("resample size must be at least 1")]
    EmptyResample,
    #[error("replicate list is empty")]
    EmptyReplicates,
    #[error("estimator does not provide influence values (unsupported for the asymptotic interval)")]
    InfluenceUnavailable,
    #[error("influence values have length {got}, expected {expected}")]
    InfluenceLength { expected: usize, got: usize },
    #[error("estimator failed: {0}")]
    Fit(#[from] FitError),
    #[error("replicate {replicate} failed after {attempts} attempts: {source}")]
    ReplicateExhausted {
        replicate: usize,
        attempts: usize,
        source: FitError,
    },
    #[error("invalid record {row}: {reason}")]
    InvalidRecord { row: usize, reason: String },
    #[error("truth oracle disagreement: quadrature {quadrature} vs Monte Carlo {monte_carlo}")]
    TruthDisagreement { quadrature: f64, monte_carlo: f64 },
    #[error("scenario n={n}, eta={eta}, B={b}: {source}")]
    Scenario {
        n: usize,
        eta: f64,
        b: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True when the failure originates in an estimator fit rather than in
    /// malformed input.
    pub fn is_estimator_failure(&self) -> bool {
        match self {
            Error::Fit(_) | Error::ReplicateExhausted { .. } => true,
            Error::Scenario { source, .. } => source.is_estimator_failure(),
            _ => false,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
