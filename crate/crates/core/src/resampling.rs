//! Seedable random streams, subsampling without replacement, resampling
//! with replacement, and the deterministic parallel replication engine.
//!
//! Every replicate draws from its own ChaCha8 stream keyed by
//! `(master_seed, stream_id)`, so replicate `b` can be regenerated without
//! touching replicates `0..b` and results do not depend on how rayon
//! schedules work across threads.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, FitError, Result};
use crate::estimators::Estimator;

/// Identifies one independent random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedSpec {
    pub master_seed: u64,
    pub stream_id: u64,
}

impl SeedSpec {
    pub const fn new(master_seed: u64, stream_id: u64) -> Self {
        Self {
            master_seed,
            stream_id,
        }
    }

    /// Generator for this stream; a pure function of the two fields.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.stream_id);
        rng
    }

    /// Derive a fresh master seed for a nested experiment (e.g. the
    /// replicates of simulation `s`, method `tag`).
    pub fn derive(&self, tag: u64) -> u64 {
        let mut z = splitmix64(self.master_seed ^ 0x5851_f42d_4c95_7f2d);
        z = splitmix64(z ^ self.stream_id);
        splitmix64(z ^ tag.wrapping_mul(0x9e37_79b9_7f4a_7c15))
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Positions of the records selected into one resample.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexSet {
    pub indices: Vec<usize>,
    pub n: usize,
    pub with_replacement: bool,
}

impl IndexSet {
    pub fn m(&self) -> usize {
        self.indices.len()
    }

    /// Number of distinct records.
    pub fn distinct(&self) -> usize {
        let mut seen = vec![false; self.n];
        self.indices
            .iter()
            .filter(|&&i| !std::mem::replace(&mut seen[i], true))
            .count()
    }
}

/// Uniform `m`-subset of `0..n` via a partial Fisher–Yates shuffle.
pub fn subsample(n: usize, m: usize, seed: SeedSpec) -> Result<IndexSet> {
    let mut rng = seed.rng();
    subsample_with(n, m, &mut rng)
}

fn subsample_with<R: Rng>(n: usize, m: usize, rng: &mut R) -> Result<IndexSet> {
    if m == 0 || m >= n {
        return Err(Error::SubsampleSize { m, n });
    }
    let mut pool: Vec<usize> = (0..n).collect();
    for i in 0..m {
        let j = rng.random_range(i..n);
        pool.swap(i, j);
    }
    pool.truncate(m);
    Ok(IndexSet {
        indices: pool,
        n,
        with_replacement: false,
    })
}

/// `k` i.i.d. uniform draws from `0..n`.
pub fn resample_with_replacement(n: usize, k: usize, seed: SeedSpec) -> Result<IndexSet> {
    let mut rng = seed.rng();
    resample_with(n, k, &mut rng)
}

fn resample_with<R: Rng>(n: usize, k: usize, rng: &mut R) -> Result<IndexSet> {
    if k == 0 {
        return Err(Error::EmptyResample);
    }
    if n == 0 {
        return Err(Error::Domain("cannot resample from an empty dataset".into()));
    }
    let indices = (0..k).map(|_| rng.random_range(0..n)).collect();
    Ok(IndexSet {
        indices,
        n,
        with_replacement: true,
    })
}

/// A dataset that can be restricted to a list of record positions.
pub trait Resample {
    fn n_obs(&self) -> usize;
    fn select(&self, indices: &[usize]) -> Self
    where
        Self: Sized;
}

impl<T: Clone> Resample for Vec<T> {
    fn n_obs(&self) -> usize {
        self.len()
    }

    fn select(&self, indices: &[usize]) -> Self {
        indices.iter().map(|&i| self[i].clone()).collect()
    }
}

/// How the subsample size `m` is chosen from `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubsampleRule {
    /// `m = floor(eta * n)`.
    Proportion(f64),
    Fixed(usize),
}

impl Default for SubsampleRule {
    fn default() -> Self {
        SubsampleRule::Proportion(DEFAULT_ETA)
    }
}

pub const DEFAULT_ETA: f64 = 0.632;

impl SubsampleRule {
    pub fn resolve(&self, n: usize) -> Result<usize> {
        let m = match *self {
            SubsampleRule::Proportion(eta) => {
                if !(eta > 0.0 && eta < 1.0) {
                    return Err(Error::Domain(format!("eta must lie in (0, 1), got {eta}")));
                }
                (eta * n as f64).floor() as usize
            }
            SubsampleRule::Fixed(m) => m,
        };
        if m == 0 || m >= n {
            return Err(Error::SubsampleSize { m, n });
        }
        Ok(m)
    }
}

/// Which resamples the replicates are computed on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Size-`m` subsamples drawn without replacement.
    Subsample(SubsampleRule),
    /// Size-`n` resamples drawn with replacement.
    Bootstrap,
}

pub const DEFAULT_MAX_RETRIES: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationPlan {
    pub master_seed: u64,
    pub replicates: usize,
    pub scheme: Scheme,
    pub max_retries: usize,
    /// Thread cap; `None` runs on the ambient rayon pool.
    pub workers: Option<usize>,
    /// Drop a replicate whose retries are exhausted instead of failing the
    /// whole run. The realized `B` is reported.
    pub drop_exhausted: bool,
}

impl ReplicationPlan {
    pub fn subsampling(master_seed: u64, replicates: usize, rule: SubsampleRule) -> Self {
        Self {
            master_seed,
            replicates,
            scheme: Scheme::Subsample(rule),
            max_retries: DEFAULT_MAX_RETRIES,
            workers: None,
            drop_exhausted: false,
        }
    }

    pub fn bootstrap(master_seed: u64, replicates: usize) -> Self {
        Self {
            scheme: Scheme::Bootstrap,
            ..Self::subsampling(master_seed, replicates, SubsampleRule::default())
        }
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = Some(workers);
        self
    }

    pub fn with_max_retries(mut self, retries: usize) -> Self {
        self.max_retries = retries;
        self
    }

    pub fn dropping_exhausted(mut self) -> Self {
        self.drop_exhausted = true;
        self
    }

    /// Stream used for replicate `b` on attempt `attempt`. Attempt 0 uses
    /// `stream_id = b`; retries move to disjoint high stream ids.
    pub fn stream(&self, replicate: usize, attempt: usize) -> SeedSpec {
        SeedSpec::new(
            self.master_seed,
            (replicate as u64) | ((attempt as u64) << 40),
        )
    }
}

/// Replicate estimates in replicate order, plus bookkeeping.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Replications<T> {
    pub estimates: Vec<T>,
    pub requested: usize,
    /// Resample size (`m` for subsampling, `n` for the bootstrap).
    pub m: usize,
    pub n: usize,
    pub with_replacement: bool,
    /// Total failed attempts that were retried.
    pub retries: usize,
    /// Replicates dropped after exhausting their retries.
    pub dropped: Vec<usize>,
}

impl<T> Replications<T> {
    pub fn realized(&self) -> usize {
        self.estimates.len()
    }
}

enum Outcome<T> {
    Ok { value: T, retries: usize },
    Exhausted { retries: usize, last: FitError },
}

/// Run `plan.replicates` independent re-estimations of `estimator` on
/// resamples of `data`.
///
/// Output is a pure function of `(data, estimator, plan)` minus `workers`.
pub fn run_replications<D, E>(
    data: &D,
    estimator: &E,
    plan: &ReplicationPlan,
) -> Result<Replications<E::Scalar>>
where
    D: Resample + Sync,
    E: Estimator<D> + ?Sized,
{
    if plan.replicates == 0 {
        return Err(Error::EmptyReplicates);
    }
    let n = data.n_obs();
    let (size, with_replacement) = match plan.scheme {
        Scheme::Subsample(rule) => (rule.resolve(n)?, false),
        Scheme::Bootstrap => {
            if n == 0 {
                return Err(Error::EmptyResample);
            }
            (n, true)
        }
    };

    let one = |b: usize| -> Result<Outcome<E::Scalar>> {
        let mut last = None;
        for attempt in 0..=plan.max_retries {
            let seed = plan.stream(b, attempt);
            let idx = if with_replacement {
                resample_with_replacement(n, size, seed)?
            } else {
                subsample(n, size, seed)?
            };
            let resampled = data.select(&idx.indices);
            match estimator.estimate(&resampled) {
                Ok(value) => {
                    return Ok(Outcome::Ok {
                        value,
                        retries: attempt,
                    })
                }
                Err(e) => last = Some(e),
            }
        }
        Ok(Outcome::Exhausted {
            retries: plan.max_retries + 1,
            last: last.expect("at least one attempt"),
        })
    };

    let outcomes: Vec<Result<Outcome<E::Scalar>>> = with_workers(plan.workers, || {
        (0..plan.replicates).into_par_iter().map(one).collect()
    });

    let mut out = Replications {
        estimates: Vec::with_capacity(plan.replicates),
        requested: plan.replicates,
        m: size,
        n,
        with_replacement,
        retries: 0,
        dropped: Vec::new(),
    };
    for (b, outcome) in outcomes.into_iter().enumerate() {
        match outcome? {
            Outcome::Ok { value, retries } => {
                out.retries += retries;
                out.estimates.push(value);
            }
            Outcome::Exhausted { retries, last } => {
                if !plan.drop_exhausted {
                    return Err(Error::ReplicateExhausted {
                        replicate: b,
                        attempts: retries,
                        source: last,
                    });
                }
                out.retries += retries;
                out.dropped.push(b);
            }
        }
    }
    if out.estimates.is_empty() {
        return Err(Error::EmptyReplicates);
    }
    Ok(out)
}

/// Run `f` on a dedicated pool of `workers` threads, or on the ambient pool
/// when `workers` is `None`.
pub fn with_workers<R, F>(workers: Option<usize>, f: F) -> R
where
    R: Send,
    F: FnOnce() -> R + Send,
{
    match workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build()
            .expect("thread pool")
            .install(f),
        None => f(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::MeanEstimator;

    #[test]
    fn subsample_rejects_bad_sizes() {
        let s = SeedSpec::new(1, 0);
        assert!(matches!(
            subsample(10, 10, s),
            Err(Error::SubsampleSize { m: 10, n: 10 })
        ));
        assert!(subsample(10, 0, s).is_err());
        assert!(subsample(10, 11, s).is_err());
        assert!(resample_with_replacement(3, 0, s).is_err());
    }

    #[test]
    fn subsample_is_deterministic_and_distinct() {
        let s = SeedSpec::new(42, 3);
        let a = subsample(100, 37, s).unwrap();
        let b = subsample(100, 37, s).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.m(), 37);
        assert_eq!(a.distinct(), 37);
        assert!(a.indices.iter().all(|&i| i < 100));
        assert_ne!(a, subsample(100, 37, SeedSpec::new(42, 4)).unwrap());
    }

    #[test]
    fn two_point_subsample_is_fair() {
        let draws = 100_000;
        let zeros = (0..draws)
            .filter(|&s| subsample(2, 1, SeedSpec::new(s, 0)).unwrap().indices[0] == 0)
            .count();
        assert!((zeros as f64 / draws as f64 - 0.5).abs() < 0.01);
    }

    #[test]
    fn inclusion_probability_is_m_over_n() {
        let draws = 100_000;
        let mut counts = [0usize; 5];
        for s in 0..draws {
            for i in subsample(5, 3, SeedSpec::new(7, s)).unwrap().indices {
                counts[i] += 1;
            }
        }
        for c in counts {
            assert!((c as f64 / draws as f64 - 0.6).abs() < 0.01);
        }
    }

    #[test]
    fn with_replacement_combinatorics() {
        assert_eq!(
            resample_with_replacement(1, 3, SeedSpec::new(9, 9)).unwrap().indices,
            vec![0, 0, 0]
        );
        let draws = 100_000;
        let dup = (0..draws)
            .filter(|&s| {
                resample_with_replacement(2, 2, SeedSpec::new(11, s))
                    .unwrap()
                    .distinct()
                    < 2
            })
            .count();
        assert!((dup as f64 / draws as f64 - 0.5).abs() < 0.01);
        let distinct = (0..draws)
            .filter(|&s| {
                resample_with_replacement(5, 5, SeedSpec::new(13, s))
                    .unwrap()
                    .distinct()
                    == 5
            })
            .count();
        assert!((distinct as f64 / draws as f64 - 120.0 / 3125.0).abs() < 0.005);
    }

    #[test]
    fn subsample_rule_resolution() {
        assert_eq!(SubsampleRule::Proportion(0.8).resolve(8652).unwrap(), 6921);
        assert_eq!(SubsampleRule::Proportion(0.632).resolve(2000).unwrap(), 1264);
        assert_eq!(SubsampleRule::Fixed(2).resolve(4).unwrap(), 2);
        assert!(SubsampleRule::Fixed(4).resolve(4).is_err());
        assert!(SubsampleRule::Proportion(1.0).resolve(4).is_err());
        assert!(SubsampleRule::Proportion(0.1).resolve(4).is_err());
    }

    #[test]
    fn single_replicate_mean_is_reproducible() {
        let data = vec![1.0_f64, 2.0, 3.0, 4.0];
        let plan = ReplicationPlan::subsampling(77, 1, SubsampleRule::Fixed(2));
        let a = run_replications(&data, &MeanEstimator, &plan).unwrap();
        let b = run_replications(&data, &MeanEstimator, &plan).unwrap();
        assert_eq!(a, b);
        let idx = subsample(4, 2, plan.stream(0, 0)).unwrap();
        let expected = idx.indices.iter().map(|&i| data[i]).sum::<f64>() / 2.0;
        assert_eq!(a.estimates, vec![expected]);
    }

    #[test]
    fn identical_across_worker_counts() {
        let data: Vec<f64> = (0..57).map(|i| ((i * 37) % 11) as f64).collect();
        let base = ReplicationPlan::subsampling(5, 64, SubsampleRule::Proportion(0.5));
        let one = run_replications(&data, &MeanEstimator, &base.clone().with_workers(1)).unwrap();
        for w in [4, 16] {
            let other =
                run_replications(&data, &MeanEstimator, &base.clone().with_workers(w)).unwrap();
            let a: Vec<u64> = one.estimates.iter().map(|x| x.to_bits()).collect();
            let b: Vec<u64> = other.estimates.iter().map(|x| x.to_bits()).collect();
            assert_eq!(a, b);
        }
    }

    /// Fails on every stream whose first selected record is odd.
    struct Picky;
    impl Estimator<Vec<f64>> for Picky {
        type Scalar = f64;
        fn fit(&self, data: &Vec<f64>) -> std::result::Result<crate::estimators::EstimateWithIf<f64>, FitError> {
            if data[0] as usize % 2 == 1 {
                Err(FitError::NonConvergence { iterations: 0 })
            } else {
                Ok(crate::estimators::EstimateWithIf::point_only(data[0]))
            }
        }
        fn provides_influence(&self) -> bool {
            false
        }
    }

    struct AlwaysFails;
    impl Estimator<Vec<f64>> for AlwaysFails {
        type Scalar = f64;
        fn fit(&self, _: &Vec<f64>) -> std::result::Result<crate::estimators::EstimateWithIf<f64>, FitError> {
            Err(FitError::Separation)
        }
        fn provides_influence(&self) -> bool {
            false
        }
    }

    #[test]
    fn retries_use_fresh_streams_and_are_counted() {
        let data: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let plan = ReplicationPlan::subsampling(3, 200, SubsampleRule::Fixed(5)).with_max_retries(20);
        let out = run_replications(&data, &Picky, &plan).unwrap();
        assert_eq!(out.realized(), 200);
        assert!(out.estimates.iter().all(|&x| (x as usize).is_multiple_of(2)));
        assert!(out.retries > 50);
    }

    #[test]
    fn exhausted_retries_error_or_drop() {
        let data: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let plan = ReplicationPlan::subsampling(3, 4, SubsampleRule::Fixed(5));
        match run_replications(&data, &AlwaysFails, &plan) {
            Err(Error::ReplicateExhausted { replicate: 0, attempts: 6, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
        let plan = plan.dropping_exhausted();
        assert!(matches!(
            run_replications(&data, &AlwaysFails, &plan),
            Err(Error::EmptyReplicates)
        ));
    }

    #[test]
    fn bootstrap_scheme_uses_full_size() {
        let data: Vec<f64> = (0..30).map(|i| i as f64).collect();
        let out = run_replications(&data, &MeanEstimator, &ReplicationPlan::bootstrap(1, 8)).unwrap();
        assert_eq!(out.m, 30);
        assert!(out.with_replacement);
        assert_eq!(out.realized(), 8);
    }

    #[test]
    fn derived_seeds_differ() {
        let s = SeedSpec::new(1, 2);
        assert_ne!(s.derive(0), s.derive(1));
        assert_ne!(s.derive(0), SeedSpec::new(1, 3).derive(0));
        assert_eq!(s.derive(5), SeedSpec::new(1, 2).derive(5));
    }
}
