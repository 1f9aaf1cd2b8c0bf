//! Monte Carlo coverage studies: simulate, estimate, build every interval,
//! check whether it contains the truth, and aggregate.

use std::io::Write;

use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dgm::DgmParams;
use super::truth::{truth_oracle, TruthOracle};
use crate::error::{Error, Result};
use crate::estimators::{
    Estimator, LongitudinalDataset, LongitudinalEstimator, MeanEstimator, Regime,
};
use crate::intervals::{
    asymptotic_if_ci, cheap_bootstrap_ci, cheap_subsampling_ci, jackknife_limit_ci,
    IntervalEstimate, Method,
};
use crate::numerics::Probability;
use crate::resampling::{
    run_replications, with_workers, ReplicationPlan, Resample, SeedSpec, SubsampleRule,
    DEFAULT_MAX_RETRIES,
};

/// A data-generating mechanism with known target and the estimator under
/// study.
pub trait SimulationModel: Sync {
    type Data: Resample + Sync + Send;
    type Est: Estimator<Self::Data, Scalar = f64>;

    fn name(&self) -> String;
    fn generate(&self, n: usize, seed: SeedSpec) -> Self::Data;
    fn truth(&self) -> f64;
    fn estimator(&self) -> &Self::Est;
}

/// The two-interval survival mechanism with a sequential-regression
/// estimator of the risk under a sustained regime.
#[derive(Debug, Clone, PartialEq)]
pub struct LongitudinalModel {
    pub params: DgmParams,
    pub estimator: LongitudinalEstimator,
    pub truth: f64,
}

impl LongitudinalModel {
    /// Default mechanism, targeted estimator, cached truth.
    pub fn new(regime: Regime) -> Result<Self> {
        Ok(Self {
            params: DgmParams::default(),
            estimator: LongitudinalEstimator::targeted(regime),
            truth: truth_oracle(regime)?.psi,
        })
    }

    /// Custom mechanism; the truth is recomputed (quadrature only).
    pub fn with_params(params: DgmParams, estimator: LongitudinalEstimator) -> Self {
        let oracle = TruthOracle {
            params,
            ..TruthOracle::default()
        };
        Self {
            params,
            truth: oracle.quadrature(estimator.regime),
            estimator,
        }
    }
}

impl SimulationModel for LongitudinalModel {
    type Data = LongitudinalDataset;
    type Est = LongitudinalEstimator;

    fn name(&self) -> String {
        format!(
            "longitudinal(a={}, targeted={})",
            self.estimator.regime.level(),
            self.estimator.targeting
        )
    }

    fn generate(&self, n: usize, seed: SeedSpec) -> LongitudinalDataset {
        self.params.generate(n, seed)
    }

    fn truth(&self) -> f64 {
        self.truth
    }

    fn estimator(&self) -> &LongitudinalEstimator {
        &self.estimator
    }
}

/// I.i.d. normal data and the sample mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalMeanModel {
    pub mean: f64,
    pub sd: f64,
}

impl Default for NormalMeanModel {
    fn default() -> Self {
        Self { mean: 0.0, sd: 1.0 }
    }
}

impl SimulationModel for NormalMeanModel {
    type Data = Vec<f64>;
    type Est = MeanEstimator;

    fn name(&self) -> String {
        format!("normal-mean(mu={}, sd={})", self.mean, self.sd)
    }

    fn generate(&self, n: usize, seed: SeedSpec) -> Vec<f64> {
        let dist = Normal::new(self.mean, self.sd).expect("sd must be finite and positive");
        let mut rng = seed.rng();
        (0..n).map(|_| dist.sample(&mut rng)).collect()
    }

    fn truth(&self) -> f64 {
        self.mean
    }

    fn estimator(&self) -> &MeanEstimator {
        &MeanEstimator
    }
}

pub const DEFAULT_N_SIM: usize = 1000;

fn default_alpha() -> f64 {
    0.05
}
fn default_n_sim() -> usize {
    DEFAULT_N_SIM
}
fn default_methods() -> Vec<Method> {
    Method::ALL.to_vec()
}
fn default_max_retries() -> usize {
    DEFAULT_MAX_RETRIES
}

/// One cell of a coverage study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub n: usize,
    pub eta: f64,
    #[serde(rename = "B")]
    pub b: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_n_sim")]
    pub n_sim: usize,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    pub master_seed: u64,
    #[serde(default = "default_max_retries")]
    pub max_retries: usize,
    /// Keep every simulated interval in the report.
    #[serde(default)]
    pub keep_intervals: bool,
}

impl ScenarioSpec {
    pub fn new(n: usize, eta: f64, b: usize, master_seed: u64) -> Self {
        Self {
            n,
            eta,
            b,
            alpha: default_alpha(),
            n_sim: DEFAULT_N_SIM,
            methods: default_methods(),
            master_seed,
            max_retries: DEFAULT_MAX_RETRIES,
            keep_intervals: false,
        }
    }

    pub fn m(&self) -> Result<usize> {
        SubsampleRule::Proportion(self.eta).resolve(self.n)
    }

    pub fn validate(&self) -> Result<()> {
        if self.b == 0 {
            return Err(Error::Domain("B must be at least 1".into()));
        }
        if self.n_sim == 0 {
            return Err(Error::Domain("n_sim must be at least 1".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::Domain("methods must not be empty".into()));
        }
        Probability::new(self.alpha)?;
        self.m()?;
        Ok(())
    }
}

/// Aggregates for one method in one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageRow {
    pub method: Method,
    pub n: usize,
    pub eta: f64,
    pub m: usize,
    #[serde(rename = "B")]
    pub b: usize,
    pub alpha: f64,
    /// Fraction of completed simulations whose interval contains the truth.
    pub coverage: f64,
    pub coverage_se: f64,
    pub mean_width: f64,
    /// `100 * mean_width / mean width of the influence-function interval`.
    pub relative_width_pct: f64,
    /// Failed replicate fits, including retried attempts.
    pub failures: usize,
    pub seed: u64,
    /// Simulations that produced an interval for this method.
    pub completed: usize,
}

impl CoverageRow {
    pub const CSV_HEADER: [&'static str; 12] = [
        "method",
        "n",
        "eta",
        "m",
        "B",
        "alpha",
        "coverage",
        "coverage_se",
        "mean_width",
        "relative_width_pct",
        "failures",
        "seed",
    ];

    pub fn csv_record(&self) -> [String; 12] {
        [
            self.method.to_string(),
            self.n.to_string(),
            self.eta.to_string(),
            self.m.to_string(),
            self.b.to_string(),
            self.alpha.to_string(),
            self.coverage.to_string(),
            self.coverage_se.to_string(),
            self.mean_width.to_string(),
            self.relative_width_pct.to_string(),
            self.failures.to_string(),
            self.seed.to_string(),
        ]
    }
}

/// One interval from one simulated dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimInterval {
    pub sim: usize,
    pub method: Method,
    pub point: f64,
    pub lower: f64,
    pub upper: f64,
    #[serde(rename = "B")]
    pub b: usize,
    pub covered: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub model: String,
    pub scenario: ScenarioSpec,
    pub truth: f64,
    pub rows: Vec<CoverageRow>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub intervals: Option<Vec<SimInterval>>,
}

impl CoverageReport {
    pub fn row(&self, method: Method) -> Option<&CoverageRow> {
        self.rows.iter().find(|r| r.method == method)
    }
}

/// Write the rows of several reports as one CSV table.
pub fn write_coverage_csv<W: Write>(reports: &[CoverageReport], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CoverageRow::CSV_HEADER)?;
    for r in reports.iter().flat_map(|r| &r.rows) {
        w.write_record(r.csv_record())?;
    }
    w.flush()?;
    Ok(())
}

struct SimOutcome {
    intervals: Vec<(Method, Option<IntervalEstimate<f64>>)>,
    asymptotic_width: f64,
    failures: [usize; 4],
}

fn method_slot(m: Method) -> usize {
    Method::ALL.iter().position(|&x| x == m).expect("known method")
}

fn one_simulation<M: SimulationModel>(
    model: &M,
    spec: &ScenarioSpec,
    m: usize,
    alpha: Probability<f64>,
    s: usize,
) -> Result<SimOutcome> {
    let seed = SeedSpec::new(spec.master_seed, s as u64);
    let data = model.generate(spec.n, seed);
    let est = model.estimator();
    let full = est.fit(&data)?;
    let asym = asymptotic_if_ci(&full, spec.n, alpha)?;
    let point = full.point;

    let wants = |x: Method| spec.methods.contains(&x);
    let mut failures = [0usize; 4];
    let mut intervals = Vec::with_capacity(spec.methods.len());

    if wants(Method::CheapSubsampling) || wants(Method::JackknifeLimit) {
        let plan = ReplicationPlan::subsampling(seed.derive(1), spec.b, SubsampleRule::Fixed(m))
            .with_max_retries(spec.max_retries)
            .dropping_exhausted();
        let reps = match run_replications(&data, est, &plan) {
            Ok(r) => Some(r),
            Err(Error::EmptyReplicates) => None,
            Err(e) => return Err(e),
        };
        for method in [Method::CheapSubsampling, Method::JackknifeLimit] {
            if !wants(method) {
                continue;
            }
            let ci = match &reps {
                Some(r) => {
                    failures[method_slot(method)] += r.retries;
                    let ci = if method == Method::CheapSubsampling {
                        cheap_subsampling_ci(point, &r.estimates, m, spec.n, alpha)?
                    } else {
                        jackknife_limit_ci(point, &r.estimates, m, spec.n, alpha)?
                    };
                    Some(ci.with_replication_diagnostics(r))
                }
                None => {
                    failures[method_slot(method)] += spec.b * (spec.max_retries + 1);
                    None
                }
            };
            intervals.push((method, ci));
        }
    }
    if wants(Method::CheapBootstrap) {
        let plan = ReplicationPlan::bootstrap(seed.derive(2), spec.b)
            .with_max_retries(spec.max_retries)
            .dropping_exhausted();
        let slot = method_slot(Method::CheapBootstrap);
        let ci = match run_replications(&data, est, &plan) {
            Ok(r) => {
                failures[slot] += r.retries;
                Some(cheap_bootstrap_ci(point, &r.estimates, spec.n, alpha)?.with_replication_diagnostics(&r))
            }
            Err(Error::EmptyReplicates) => {
                failures[slot] += spec.b * (spec.max_retries + 1);
                None
            }
            Err(e) => return Err(e),
        };
        intervals.push((Method::CheapBootstrap, ci));
    }
    let asymptotic_width = asym.width();
    if wants(Method::AsymptoticIf) {
        intervals.push((Method::AsymptoticIf, Some(asym)));
    }
    Ok(SimOutcome {
        intervals,
        asymptotic_width,
        failures,
    })
}

/// Run `spec.n_sim` simulations of `model` and aggregate coverage and
/// width per method.
///
/// Simulation `s` uses data stream `(master_seed, s)`; its subsample
/// replicates (shared by the subsampling and jackknife intervals) and its
/// bootstrap replicates use seeds derived from that stream. The report is
/// identical for any `workers`.
pub fn run_coverage_study<M: SimulationModel>(
    model: &M,
    spec: &ScenarioSpec,
    workers: Option<usize>,
) -> Result<CoverageReport> {
    let wrap = |e: Error| Error::Scenario {
        n: spec.n,
        eta: spec.eta,
        b: spec.b,
        source: Box::new(e),
    };
    spec.validate().map_err(wrap)?;
    let m = spec.m().map_err(wrap)?;
    let alpha = Probability::new(spec.alpha).map_err(wrap)?;
    let truth = model.truth();

    let outcomes: Vec<Result<SimOutcome>> = with_workers(workers, || {
        (0..spec.n_sim)
            .into_par_iter()
            .map(|s| one_simulation(model, spec, m, alpha, s))
            .collect()
    });
    let outcomes = outcomes
        .into_iter()
        .collect::<Result<Vec<_>>>()
        .map_err(wrap)?;

    let asym_mean =
        outcomes.iter().map(|o| o.asymptotic_width).sum::<f64>() / outcomes.len() as f64;
    let mut intervals = spec.keep_intervals.then(Vec::new);
    let mut rows = Vec::with_capacity(spec.methods.len());
    for &method in &spec.methods {
        let mut covered = 0usize;
        let mut completed = 0usize;
        let mut width_sum = 0.0;
        let mut failures = 0usize;
        for (s, o) in outcomes.iter().enumerate() {
            failures += o.failures[method_slot(method)];
            let Some((_, Some(ci))) = o.intervals.iter().find(|(x, _)| *x == method) else {
                continue;
            };
            completed += 1;
            width_sum += ci.width();
            let hit = ci.contains(truth);
            covered += usize::from(hit);
            if let Some(v) = intervals.as_mut() {
                v.push(SimInterval {
                    sim: s,
                    method,
                    point: ci.point,
                    lower: ci.lower,
                    upper: ci.upper,
                    b: ci.b,
                    covered: hit,
                });
            }
        }
        let (coverage, coverage_se, mean_width) = if completed > 0 {
            let c = covered as f64 / completed as f64;
            (
                c,
                (c * (1.0 - c) / completed as f64).sqrt(),
                width_sum / completed as f64,
            )
        } else {
            (f64::NAN, f64::NAN, f64::NAN)
        };
        rows.push(CoverageRow {
            method,
            n: spec.n,
            eta: spec.eta,
            m,
            b: spec.b,
            alpha: spec.alpha,
            coverage,
            coverage_se,
            mean_width,
            relative_width_pct: 100.0 * mean_width / asym_mean,
            failures,
            seed: spec.master_seed,
            completed,
        });
    }
    if let Some(v) = intervals.as_mut() {
        v.sort_by_key(|i| (i.sim, method_slot(i.method)));
    }
    Ok(CoverageReport {
        model: model.name(),
        scenario: spec.clone(),
        truth,
        rows,
        intervals,
    })
}
