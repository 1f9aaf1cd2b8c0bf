//! Confidence-interval constructors.
//!
//! * Cheap Subsampling: `point ± t_{B,1-α/2} · sqrt(m/(n-m)) · S`, with
//!   `S² = (1/B) Σ_b (ψ*_b − point)²` over size-`m` subsamples drawn without
//!   replacement.
//! * Cheap Bootstrap: `point ± t_{B,1-α/2} · S` over size-`n` resamples
//!   drawn with replacement.
//! * Jackknife limit: `point ± q_{1-α/2} · sqrt(m/(n-m) · S²)`, the
//!   `B → ∞` limit of the Cheap Subsampling interval.
//! * Asymptotic: `point ± q_{1-α/2} · σ̂ / sqrt(n)` with `σ̂² = (1/n) Σ φ̂_i²`.
//!
//! All intervals are centred at the full-data estimate.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::EstimateWithIf;
use crate::numerics::{normal_quantile, t_quantile, DegreesOfFreedom, Probability};
use crate::resampling::Replications;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    CheapSubsampling,
    CheapBootstrap,
    JackknifeLimit,
    AsymptoticIf,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::CheapSubsampling,
        Method::CheapBootstrap,
        Method::JackknifeLimit,
        Method::AsymptoticIf,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::CheapSubsampling => "cheap-subsampling",
            Method::CheapBootstrap => "cheap-bootstrap",
            Method::JackknifeLimit => "jackknife-limit",
            Method::AsymptoticIf => "asymptotic-if",
        }
    }

    /// Whether the method needs subsample replicates.
    pub fn uses_subsamples(self) -> bool {
        matches!(self, Method::CheapSubsampling | Method::JackknifeLimit)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| {
                Error::Domain(format!(
                    "unknown method `{s}` (expected one of cheap-subsampling, cheap-bootstrap, jackknife-limit, asymptotic-if)"
                ))
            })
    }
}

/// Machine-readable warnings attached to an interval.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Warning {
    /// All replicates (or influence values) coincide with the point
    /// estimate; the interval has zero width.
    DegenerateSpread,
    /// Some replicates failed permanently; `B` is the realized count.
    DroppedReplicates { requested: usize, realized: usize },
    /// Replicate fits that had to be retried on a fresh stream.
    RetriedReplicates { retries: usize },
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Warning::DegenerateSpread => f.write_str("degenerate-spread"),
            Warning::DroppedReplicates {
                requested,
                realized,
            } => write!(f, "dropped-replicates:{realized}/{requested}"),
            Warning::RetriedReplicates { retries } => write!(f, "retried-replicates:{retries}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntervalEstimate<T> {
    pub method: Method,
    pub point: T,
    pub lower: T,
    pub upper: T,
    pub alpha: T,
    /// Number of replicates (0 for the asymptotic interval).
    #[serde(rename = "B")]
    pub b: usize,
    /// Resample size (`n` for the bootstrap and asymptotic intervals).
    pub m: usize,
    pub n: usize,
    /// Root mean square deviation of the replicates from the point estimate
    /// (`σ̂` for the asymptotic interval).
    #[serde(rename = "S")]
    pub s: T,
    /// `m n / (n - m)` for the subsampling-based intervals.
    pub k_factor: Option<T>,
    pub replicate_estimates: Vec<T>,
    pub warnings: Vec<Warning>,
}

impl<T: Scalar> IntervalEstimate<T> {
    pub fn half_width(&self) -> T {
        (self.upper - self.lower) / T::lit(2.0)
    }

    pub fn width(&self) -> T {
        self.upper - self.lower
    }

    pub fn contains(&self, value: T) -> bool {
        self.lower <= value && value <= self.upper
    }

    /// `k · S²`, the resampling estimate of the asymptotic variance of
    /// `sqrt(n) (ψ̂_n − ψ)`; only defined for subsampling intervals.
    pub fn asymptotic_variance(&self) -> Option<T> {
        self.k_factor.map(|k| k * self.s * self.s)
    }

    /// Record replicate bookkeeping from the engine.
    pub fn with_replication_diagnostics(mut self, reps: &Replications<T>) -> Self {
        if !reps.dropped.is_empty() {
            self.warnings.push(Warning::DroppedReplicates {
                requested: reps.requested,
                realized: reps.realized(),
            });
        }
        if reps.retries > 0 {
            self.warnings.push(Warning::RetriedReplicates {
                retries: reps.retries,
            });
        }
        self
    }

    pub const CSV_HEADER: [&'static str; 10] = [
        "method", "point", "lower", "upper", "alpha", "B", "m", "n", "S", "warnings",
    ];

    pub fn csv_record(&self) -> [String; 10] {
        [
            self.method.to_string(),
            self.point.to_string(),
            self.lower.to_string(),
            self.upper.to_string(),
            self.alpha.to_string(),
            self.b.to_string(),
            self.m.to_string(),
            self.n.to_string(),
            self.s.to_string(),
            self.warnings
                .iter()
                .map(ToString::to_string)
                .collect::<Vec<_>>()
                .join(";"),
        ]
    }
}

fn rms_deviation<T: Scalar>(point: T, replicates: &[T]) -> Result<T> {
    if replicates.is_empty() {
        return Err(Error::EmptyReplicates);
    }
    if !point.is_finite() || replicates.iter().any(|r| !r.is_finite()) {
        return Err(Error::Domain("point and replicate estimates must be finite".into()));
    }
    let b = T::from_count(replicates.len());
    let ss = replicates
        .iter()
        .map(|&r| (r - point) * (r - point))
        .sum::<T>();
    Ok((ss / b).sqrt())
}

fn check_sizes(m: usize, n: usize) -> Result<()> {
    if m == 0 || m >= n {
        Err(Error::SubsampleSize { m, n })
    } else {
        Ok(())
    }
}

fn df_of(b: usize) -> DegreesOfFreedom {
    DegreesOfFreedom::new(b as u64).expect("B >= 1 checked by caller")
}

#[allow(clippy::too_many_arguments)]
fn build<T: Scalar>(
    method: Method,
    point: T,
    half: T,
    alpha: Probability<T>,
    b: usize,
    m: usize,
    n: usize,
    s: T,
    k_factor: Option<T>,
    replicates: &[T],
) -> IntervalEstimate<T> {
    let warnings = if half == T::zero() {
        vec![Warning::DegenerateSpread]
    } else {
        Vec::new()
    };
    IntervalEstimate {
        method,
        point,
        lower: point - half,
        upper: point + half,
        alpha: alpha.value(),
        b,
        m,
        n,
        s,
        k_factor,
        replicate_estimates: replicates.to_vec(),
        warnings,
    }
}

fn k_factor<T: Scalar>(m: usize, n: usize) -> T {
    T::from_count(m) * T::from_count(n) / T::from_count(n - m)
}

/// Cheap Subsampling interval from `B` subsample replicates of size `m`.
pub fn cheap_subsampling_ci<T: Scalar>(
    point: T,
    replicates: &[T],
    m: usize,
    n: usize,
    alpha: Probability<T>,
) -> Result<IntervalEstimate<T>> {
    check_sizes(m, n)?;
    let s = rms_deviation(point, replicates)?;
    let b = replicates.len();
    let t = t_quantile(df_of(b), alpha.upper_two_sided());
    let scale = (T::from_count(m) / T::from_count(n - m)).sqrt();
    Ok(build(
        Method::CheapSubsampling,
        point,
        t * scale * s,
        alpha,
        b,
        m,
        n,
        s,
        Some(k_factor(m, n)),
        replicates,
    ))
}

/// Cheap Bootstrap interval from `B` with-replacement resamples of size `n`.
pub fn cheap_bootstrap_ci<T: Scalar>(
    point: T,
    replicates: &[T],
    n: usize,
    alpha: Probability<T>,
) -> Result<IntervalEstimate<T>> {
    let s = rms_deviation(point, replicates)?;
    let b = replicates.len();
    let t = t_quantile(df_of(b), alpha.upper_two_sided());
    Ok(build(
        Method::CheapBootstrap,
        point,
        t * s,
        alpha,
        b,
        n,
        n,
        s,
        None,
        replicates,
    ))
}

/// Normal-quantile interval from the delete-`(n - m)` jackknife variance
/// estimated by the subsample replicates.
pub fn jackknife_limit_ci<T: Scalar>(
    point: T,
    replicates: &[T],
    m: usize,
    n: usize,
    alpha: Probability<T>,
) -> Result<IntervalEstimate<T>> {
    check_sizes(m, n)?;
    let s = rms_deviation(point, replicates)?;
    let var_jack = T::from_count(m) / T::from_count(n - m) * s * s;
    let q = normal_quantile(alpha.upper_two_sided());
    Ok(build(
        Method::JackknifeLimit,
        point,
        q * var_jack.sqrt(),
        alpha,
        replicates.len(),
        m,
        n,
        s,
        Some(k_factor(m, n)),
        replicates,
    ))
}

/// Wald interval from estimated influence values.
pub fn asymptotic_if_ci<T: Scalar>(
    estimate: &EstimateWithIf<T>,
    n: usize,
    alpha: Probability<T>,
) -> Result<IntervalEstimate<T>> {
    let phi = estimate
        .influence
        .as_ref()
        .ok_or(Error::InfluenceUnavailable)?;
    if phi.len() != n {
        return Err(Error::InfluenceLength {
            expected: n,
            got: phi.len(),
        });
    }
    if n == 0 {
        return Err(Error::Domain("asymptotic interval needs n >= 1".into()));
    }
    let sigma2 = estimate.influence_variance().expect("influence present");
    if !sigma2.is_finite() || !estimate.point.is_finite() {
        return Err(Error::Domain("influence values must be finite".into()));
    }
    let sigma = sigma2.sqrt();
    let q = normal_quantile(alpha.upper_two_sided());
    Ok(build(
        Method::AsymptoticIf,
        estimate.point,
        q * sigma / T::from_count(n).sqrt(),
        alpha,
        0,
        n,
        n,
        sigma,
        None,
        &[],
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::fit_mean;

    fn alpha() -> Probability<f64> {
        Probability::new(0.05).unwrap()
    }

    #[test]
    fn cheap_subsampling_two_replicates() {
        let ci = cheap_subsampling_ci(0.0, &[1.0, -1.0], 50, 100, alpha()).unwrap();
        assert_eq!(ci.s, 1.0);
        assert!((ci.upper - 4.30265).abs() < 1e-5);
        assert!((ci.lower + 4.30265).abs() < 1e-5);
        assert_eq!(ci.k_factor, Some(100.0));
        assert_eq!(ci.b, 2);
        assert!(ci.warnings.is_empty());
    }

    #[test]
    fn degenerate_spread_is_zero_width_with_warning() {
        let ci = cheap_subsampling_ci(0.7, &[0.7; 5], 3, 9, alpha()).unwrap();
        assert_eq!((ci.lower, ci.upper), (0.7, 0.7));
        assert_eq!(ci.warnings, vec![Warning::DegenerateSpread]);
        let cb = cheap_bootstrap_ci(0.7, &[0.7; 5], 9, alpha()).unwrap();
        assert_eq!(cb.width(), 0.0);
        assert_eq!(cb.warnings, vec![Warning::DegenerateSpread]);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(
            cheap_subsampling_ci(0.0, &[], 5, 10, alpha()),
            Err(Error::EmptyReplicates)
        ));
        assert!(matches!(
            cheap_subsampling_ci(0.0, &[1.0], 10, 10, alpha()),
            Err(Error::SubsampleSize { .. })
        ));
        assert!(jackknife_limit_ci(0.0, &[1.0], 0, 10, alpha()).is_err());
        assert!(cheap_bootstrap_ci(0.0, &[f64::NAN], 10, alpha()).is_err());
    }

    #[test]
    fn cheap_bootstrap_examples() {
        let ci = cheap_bootstrap_ci(0.0, &[1.0, -1.0], 100, alpha()).unwrap();
        assert!((ci.half_width() - 4.30265).abs() < 1e-5);
        let ci = cheap_bootstrap_ci(2.0, &[2.5], 40, alpha()).unwrap();
        assert!((ci.half_width() - 12.7062 * 0.5).abs() < 1e-4);
        assert_eq!(ci.k_factor, None);
    }

    #[test]
    fn jackknife_limit_example_and_ratio() {
        let jk = jackknife_limit_ci(0.0, &[1.0, -1.0], 50, 100, alpha()).unwrap();
        assert!((jk.half_width() - 1.959964).abs() < 1e-6);
        let cs = cheap_subsampling_ci(0.0, &[1.0, -1.0], 50, 100, alpha()).unwrap();
        let t = t_quantile(DegreesOfFreedom::new(2).unwrap(), Probability::new(0.975).unwrap());
        let q = normal_quantile(Probability::new(0.975).unwrap());
        assert!((cs.half_width() / jk.half_width() - t / q).abs() < 1e-12);
    }

    #[test]
    fn asymptotic_mean_example() {
        let est = fit_mean(&[-1.0_f64, 1.0]).unwrap();
        let ci = asymptotic_if_ci(&est, 2, alpha()).unwrap();
        assert!((ci.half_width() - 1.959964 / 2f64.sqrt()).abs() < 1e-6);
        assert_eq!(ci.point, 0.0);

        let constant = fit_mean(&[3.0_f64; 4]).unwrap();
        let ci = asymptotic_if_ci(&constant, 4, alpha()).unwrap();
        assert_eq!(ci.width(), 0.0);

        assert!(matches!(
            asymptotic_if_ci(&EstimateWithIf::point_only(1.0), 3, alpha()),
            Err(Error::InfluenceUnavailable)
        ));
        assert!(matches!(
            asymptotic_if_ci(&est, 3, alpha()),
            Err(Error::InfluenceLength { .. })
        ));
    }

    #[test]
    fn leader_scale_subsample_size() {
        // floor(0.8 * 8652) = floor(6921.6)
        let m = crate::resampling::SubsampleRule::Proportion(0.8).resolve(8652).unwrap();
        assert_eq!(m, 6921);
        let ci = cheap_subsampling_ci(0.1, &[0.11, 0.09, 0.1], 6850, 8652, alpha()).unwrap();
        assert!((ci.k_factor.unwrap() - 6850.0 * 8652.0 / 1802.0).abs() < 1e-9);
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.as_str().parse::<Method>().unwrap(), m);
        }
        assert!("percentile".parse::<Method>().is_err());
    }

    #[test]
    fn csv_and_json_surface() {
        let ci = cheap_subsampling_ci(0.0, &[1.0, -1.0], 50, 100, alpha()).unwrap();
        let rec = ci.csv_record();
        assert_eq!(rec[0], "cheap-subsampling");
        assert_eq!(rec[5], "2");
        assert_eq!(rec[8], "1");
        assert_eq!(rec[9], "");
        let json = serde_json::to_value(&ci).unwrap();
        assert_eq!(json["method"], "cheap-subsampling");
        assert_eq!(json["B"], 2);
        assert_eq!(json["S"], 1.0);
    }

    #[test]
    fn f32_intervals() {
        let a = Probability::new(0.05_f32).unwrap();
        let ci = cheap_subsampling_ci(0.0_f32, &[1.0, -1.0], 50, 100, a).unwrap();
        assert!((ci.upper - 4.30265).abs() < 1e-4);
    }
}
