//! Absolute risk of an event by the end of the second interval under a
//! sustained treatment regime, estimated by sequential (iterated
//! conditional expectation) regression with optional targeting.
//!
//! The backward recursion:
//!
//! 1. regress `Y2` on the history among subjects uncensored and event-free
//!    after interval 1, predict `Q2` under the regime for everyone at risk;
//!    subjects with `Y1 = 1` carry `Q2 = 1`;
//! 2. regress that pseudo-outcome on baseline among subjects uncensored
//!    through interval 1, predict `Q1` under the regime for everyone;
//! 3. the estimate is the mean of `Q1`.
//!
//! With targeting, each step is followed by a logistic fluctuation
//! `logit Q* = logit Q + eps` fitted with weights equal to the regime and
//! censoring indicator over the cumulative (bounded) treatment and
//! censoring probabilities. The influence values are the estimated
//! efficient influence curve
//! `H2 (Y2 - Q2*) + H1 (Z1 - Q1*) + Q1* - psi`.
//!
//! This estimator works in `f64` only.

use serde::{Deserialize, Serialize};

use super::dataset::{LongitudinalDataset, Record};
use super::logistic::{fit_logistic_weighted, DesignMatrix, LogisticFit};
use super::{EstimateWithIf, Estimator};
use crate::error::{Error, FitError, Result};
use crate::numerics::{expit, logit};

/// Lower bound applied to every regime-consistent treatment and censoring
/// probability before it enters an inverse-probability weight.
pub const PROBABILITY_FLOOR: f64 = 0.01;

/// Outcome predictions are kept this far from 0 and 1 on the logit scale
/// used by the fluctuation.
const Q_CLAMP: f64 = 1e-12;

/// Sustained treatment level `a` applied at both time points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Regime(pub bool);

impl Regime {
    pub const TREATED: Regime = Regime(true);
    pub const UNTREATED: Regime = Regime(false);

    pub fn from_level(a: u8) -> Result<Self> {
        match a {
            0 => Ok(Self::UNTREATED),
            1 => Ok(Self::TREATED),
            _ => Err(Error::Domain(format!("regime must be 0 or 1, got {a}"))),
        }
    }

    pub fn level(self) -> f64 {
        if self.0 {
            1.0
        } else {
            0.0
        }
    }
}

/// A covariate entering one of the nuisance regressions (an intercept is
/// always included).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Term {
    W0,
    A0,
    W1,
    A1,
    /// `W0 * W1` interaction.
    W0W1,
}

impl Term {
    fn value(self, h: &History) -> f64 {
        match self {
            Term::W0 => h.w0,
            Term::A0 => h.a0,
            Term::W1 => h.w1,
            Term::A1 => h.a1,
            Term::W0W1 => h.w0 * h.w1,
        }
    }

    fn uses_interval_one(self) -> bool {
        matches!(self, Term::W1 | Term::A1 | Term::W0W1)
    }
}

/// How the outcome regressions use subjects who deviate from the regime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeFit {
    /// Fit on all uncensored at-risk subjects with treatment as a covariate,
    /// then predict with treatment set to the regime.
    Pooled,
    /// Fit only on subjects whose treatment history matches the regime.
    Stratified,
}

/// Covariates of each nuisance regression.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub outcome_fit: OutcomeFit,
    pub q2: Vec<Term>,
    pub q1: Vec<Term>,
    pub g_a0: Vec<Term>,
    pub g_c1: Vec<Term>,
    pub g_a1: Vec<Term>,
    pub g_c2: Vec<Term>,
}

impl Default for ModelSpec {
    /// Correctly specified treatment, censoring and time-2 outcome models
    /// for the simulation design, with pooled outcome regressions.
    fn default() -> Self {
        Self {
            outcome_fit: OutcomeFit::Pooled,
            q2: vec![Term::W0, Term::W1, Term::A0, Term::A1],
            q1: vec![Term::W0, Term::A0],
            g_a0: vec![Term::W0],
            g_c1: vec![Term::W0],
            g_a1: vec![Term::W0, Term::A0, Term::W1],
            g_c2: vec![Term::W1],
        }
    }
}

impl ModelSpec {
    /// Outcome regressions restricted to regime followers; treatment terms
    /// are constant there and are left out.
    pub fn stratified() -> Self {
        Self {
            outcome_fit: OutcomeFit::Stratified,
            q2: vec![Term::W0, Term::W1],
            q1: vec![Term::W0],
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let baseline_only = |name: &str, terms: &[Term], allow_a0: bool| -> Result<()> {
            for t in terms {
                if t.uses_interval_one() || (!allow_a0 && *t == Term::A0) {
                    return Err(Error::Domain(format!(
                        "model `{name}` cannot use term {t:?}"
                    )));
                }
            }
            Ok(())
        };
        baseline_only("g_a0", &self.g_a0, false)?;
        baseline_only("g_c1", &self.g_c1, true)?;
        baseline_only("q1", &self.q1, true)?;
        if self.g_a1.contains(&Term::A1) {
            return Err(Error::Domain("model `g_a1` cannot use term A1".into()));
        }
        if self.outcome_fit == OutcomeFit::Stratified {
            let has_treatment =
                |ts: &[Term]| ts.iter().any(|t| matches!(t, Term::A0 | Term::A1));
            if has_treatment(&self.q1) || has_treatment(&self.q2) {
                return Err(Error::Domain(
                    "stratified outcome models cannot include treatment terms".into(),
                ));
            }
        }
        Ok(())
    }
}

/// A fitted nuisance regression.
#[derive(Debug, Clone, PartialEq)]
pub enum FittedModel {
    Logistic {
        terms: Vec<Term>,
        fit: LogisticFit<f64>,
    },
    /// The outcome in the fitting set was constant; the likelihood is
    /// maximized at this boundary probability.
    Constant(f64),
}

impl FittedModel {
    fn predict(&self, h: &History) -> f64 {
        match self {
            FittedModel::Constant(p) => *p,
            FittedModel::Logistic { terms, fit } => {
                let mut eta = fit.coefficients[0];
                for (t, c) in terms.iter().zip(&fit.coefficients[1..]) {
                    eta += c * t.value(h);
                }
                expit(eta)
            }
        }
    }

    pub fn coefficients(&self) -> Option<&[f64]> {
        match self {
            FittedModel::Logistic { fit, .. } => Some(&fit.coefficients),
            FittedModel::Constant(_) => None,
        }
    }
}

/// Everything fitted along the way, for inspection.
#[derive(Debug, Clone, PartialEq)]
pub struct NuisanceModelSet {
    pub q2: FittedModel,
    pub q1: FittedModel,
    pub g_a0: FittedModel,
    pub g_c1: FittedModel,
    pub g_a1: FittedModel,
    pub g_c2: FittedModel,
    /// Fluctuation parameters (0 when targeting is off; infinite when the
    /// weighted outcome was constant).
    pub epsilon2: f64,
    pub epsilon1: f64,
}

#[derive(Debug, Clone, Copy)]
struct History {
    w0: f64,
    a0: f64,
    w1: f64,
    a1: f64,
}

impl History {
    fn observed(r: &Record) -> Self {
        Self {
            w0: r.w0,
            a0: flag(r.a0),
            w1: r.w1.unwrap_or(0.0),
            a1: r.a1.map_or(0.0, flag),
        }
    }

    fn under(r: &Record, a: f64) -> Self {
        Self {
            a0: a,
            a1: a,
            ..Self::observed(r)
        }
    }
}

#[inline]
fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

fn fit_model(
    terms: &[Term],
    rows: &[History],
    y: &[f64],
    weights: Option<&[f64]>,
) -> Result<FittedModel, FitError> {
    if rows.is_empty() {
        return Err(FitError::TooFewObservations {
            needed: terms.len() + 1,
            got: 0,
        });
    }
    let w = |i: usize| weights.map_or(1.0, |w| w[i]);
    let (mut pos, mut neg) = (0.0, 0.0);
    for (i, &v) in y.iter().enumerate() {
        pos += w(i) * v;
        neg += w(i) * (1.0 - v);
    }
    if pos <= 0.0 {
        return Ok(FittedModel::Constant(0.0));
    }
    if neg <= 0.0 {
        return Ok(FittedModel::Constant(1.0));
    }
    let p = terms.len() + 1;
    let mut data = Vec::with_capacity(rows.len() * p);
    for h in rows {
        data.push(1.0);
        data.extend(terms.iter().map(|t| t.value(h)));
    }
    let x = DesignMatrix::from_row_major(rows.len(), p, data)
        .expect("design dimensions are consistent");
    let fit = fit_logistic_weighted(&x, y, weights, None)?;
    Ok(FittedModel::Logistic {
        terms: terms.to_vec(),
        fit,
    })
}

/// Weighted intercept-only fluctuation with offsets `logit(q)`.
/// Returns `eps` (possibly infinite at a boundary solution).
fn fluctuate(q: &[f64], y: &[f64], w: &[f64]) -> Result<f64, FitError> {
    if q.is_empty() {
        return Ok(0.0);
    }
    let (mut pos, mut neg) = (0.0, 0.0);
    for i in 0..y.len() {
        pos += w[i] * y[i];
        neg += w[i] * (1.0 - y[i]);
    }
    if pos <= 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    if neg <= 0.0 {
        return Ok(f64::INFINITY);
    }
    let offset: Vec<f64> = q.iter().map(|&v| logit(clamp_q(v))).collect();
    let fit = fit_logistic_weighted(&DesignMatrix::intercept(q.len()), y, Some(w), Some(&offset))?;
    Ok(fit.coefficients[0])
}

#[inline]
fn clamp_q(q: f64) -> f64 {
    q.clamp(Q_CLAMP, 1.0 - Q_CLAMP)
}

fn tilt(q: f64, eps: f64) -> f64 {
    if eps == 0.0 {
        q
    } else if eps == f64::INFINITY {
        1.0
    } else if eps == f64::NEG_INFINITY {
        0.0
    } else {
        expit(logit(clamp_q(q)) + eps)
    }
}

#[inline]
fn bounded(p: f64) -> f64 {
    p.max(PROBABILITY_FLOOR)
}

/// Sequential-regression estimator of the two-interval absolute risk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LongitudinalEstimator {
    pub regime: Regime,
    pub targeting: bool,
    pub models: ModelSpec,
}

impl LongitudinalEstimator {
    pub fn new(regime: Regime, targeting: bool, models: ModelSpec) -> Result<Self> {
        models.validate()?;
        Ok(Self {
            regime,
            targeting,
            models,
        })
    }

    /// Targeted estimator with the default (correctly specified) models.
    pub fn targeted(regime: Regime) -> Self {
        Self {
            regime,
            targeting: true,
            models: ModelSpec::default(),
        }
    }

    /// Fit and return the estimate together with all nuisance fits.
    pub fn fit_detailed(
        &self,
        data: &LongitudinalDataset,
    ) -> Result<(EstimateWithIf<f64>, NuisanceModelSet), FitError> {
        let recs = data.records();
        let n = recs.len();
        if n < 2 {
            return Err(FitError::TooFewObservations { needed: 1, got: n });
        }
        let a = self.regime.level();
        let follows0 = |r: &Record| r.a0 == self.regime.0;
        let at_risk = |r: &Record| r.c1 && r.y1 == Some(false);
        let follows1 = |r: &Record| follows0(r) && at_risk(r) && r.a1 == Some(self.regime.0);
        let m = &self.models;

        // Treatment and censoring mechanisms.
        let all_hist: Vec<History> = recs.iter().map(History::observed).collect();
        let g_a0 = fit_model(
            &m.g_a0,
            &all_hist,
            &recs.iter().map(|r| flag(r.a0)).collect::<Vec<_>>(),
            None,
        )?;
        let g_c1 = fit_model(
            &m.g_c1,
            &all_hist,
            &recs.iter().map(|r| flag(r.c1)).collect::<Vec<_>>(),
            None,
        )?;
        let risk_idx: Vec<usize> = (0..n).filter(|&i| at_risk(&recs[i])).collect();
        let risk_hist: Vec<History> = risk_idx.iter().map(|&i| all_hist[i]).collect();
        let g_a1 = fit_model(
            &m.g_a1,
            &risk_hist,
            &risk_idx
                .iter()
                .map(|&i| recs[i].a1.map_or(0.0, flag))
                .collect::<Vec<_>>(),
            None,
        )?;
        let g_c2 = fit_model(
            &m.g_c2,
            &risk_hist,
            &risk_idx
                .iter()
                .map(|&i| recs[i].c2.map_or(0.0, flag))
                .collect::<Vec<_>>(),
            None,
        )?;

        // Clever covariates: indicator over cumulative bounded probability.
        let mut h1 = vec![0.0; n];
        let mut h2 = vec![0.0; n];
        for (i, r) in recs.iter().enumerate() {
            if !(follows0(r) && r.c1) {
                continue;
            }
            let hist = &all_hist[i];
            let p_a0 = g_a0.predict(hist);
            let p_a0 = if self.regime.0 { p_a0 } else { 1.0 - p_a0 };
            let pi1 = bounded(p_a0) * bounded(g_c1.predict(hist));
            h1[i] = 1.0 / pi1;
            if follows1(r) && r.c2 == Some(true) {
                let p_a1 = g_a1.predict(hist);
                let p_a1 = if self.regime.0 { p_a1 } else { 1.0 - p_a1 };
                h2[i] = h1[i] / (bounded(p_a1) * bounded(g_c2.predict(hist)));
            }
        }
        if h1.iter().chain(&h2).any(|v| !v.is_finite()) {
            return Err(FitError::NonFinite("inverse probability weights"));
        }

        // Time-2 outcome regression.
        let q2_idx: Vec<usize> = risk_idx
            .iter()
            .copied()
            .filter(|&i| {
                recs[i].c2 == Some(true)
                    && (m.outcome_fit == OutcomeFit::Pooled || follows1(&recs[i]))
            })
            .collect();
        let q2 = fit_model(
            &m.q2,
            &q2_idx.iter().map(|&i| all_hist[i]).collect::<Vec<_>>(),
            &q2_idx
                .iter()
                .map(|&i| recs[i].y2.map_or(0.0, flag))
                .collect::<Vec<_>>(),
            None,
        )?;
        let mut q2bar = vec![0.0; n];
        for &i in &risk_idx {
            q2bar[i] = q2.predict(&History::under(&recs[i], a));
        }
        let mut epsilon2 = 0.0;
        if self.targeting {
            let fl: Vec<usize> = (0..n).filter(|&i| h2[i] > 0.0).collect();
            epsilon2 = fluctuate(
                &fl.iter().map(|&i| q2bar[i]).collect::<Vec<_>>(),
                &fl.iter().map(|&i| recs[i].y2.map_or(0.0, flag)).collect::<Vec<_>>(),
                &fl.iter().map(|&i| h2[i]).collect::<Vec<_>>(),
            )?;
            for &i in &risk_idx {
                q2bar[i] = tilt(q2bar[i], epsilon2);
            }
        }

        // Pseudo-outcome for interval 1; the event is absorbing.
        let mut z1 = vec![0.0; n];
        for (i, r) in recs.iter().enumerate() {
            if r.c1 {
                z1[i] = if r.y1 == Some(true) { 1.0 } else { q2bar[i] };
            }
        }
        let q1_idx: Vec<usize> = (0..n)
            .filter(|&i| {
                recs[i].c1 && (m.outcome_fit == OutcomeFit::Pooled || follows0(&recs[i]))
            })
            .collect();
        let q1 = fit_model(
            &m.q1,
            &q1_idx.iter().map(|&i| all_hist[i]).collect::<Vec<_>>(),
            &q1_idx.iter().map(|&i| z1[i]).collect::<Vec<_>>(),
            None,
        )?;
        let mut q1bar: Vec<f64> = recs.iter().map(|r| q1.predict(&History::under(r, a))).collect();
        let mut epsilon1 = 0.0;
        if self.targeting {
            let fl: Vec<usize> = (0..n).filter(|&i| h1[i] > 0.0).collect();
            epsilon1 = fluctuate(
                &fl.iter().map(|&i| q1bar[i]).collect::<Vec<_>>(),
                &fl.iter().map(|&i| z1[i]).collect::<Vec<_>>(),
                &fl.iter().map(|&i| h1[i]).collect::<Vec<_>>(),
            )?;
            for q in q1bar.iter_mut() {
                *q = tilt(*q, epsilon1);
            }
        }

        let psi = q1bar.iter().sum::<f64>() / n as f64;
        if !psi.is_finite() {
            return Err(FitError::NonFinite("risk estimate"));
        }
        let influence: Vec<f64> = (0..n)
            .map(|i| {
                let r = &recs[i];
                let mut d = q1bar[i] - psi;
                if h1[i] > 0.0 {
                    d += h1[i] * (z1[i] - q1bar[i]);
                }
                if h2[i] > 0.0 {
                    d += h2[i] * (r.y2.map_or(0.0, flag) - q2bar[i]);
                }
                d
            })
            .collect();
        if influence.iter().any(|v| !v.is_finite()) {
            return Err(FitError::NonFinite("influence values"));
        }
        Ok((
            EstimateWithIf::with_influence(psi, influence),
            NuisanceModelSet {
                q2,
                q1,
                g_a0,
                g_c1,
                g_a1,
                g_c2,
                epsilon2,
                epsilon1,
            },
        ))
    }
}

impl Estimator<LongitudinalDataset> for LongitudinalEstimator {
    type Scalar = f64;

    fn fit(&self, data: &LongitudinalDataset) -> Result<EstimateWithIf<f64>, FitError> {
        self.fit_detailed(data).map(|(e, _)| e)
    }

    fn provides_influence(&self) -> bool {
        true
    }
}

/// Fit the risk under sustained treatment `regime` with the default models.
pub fn fit_longitudinal_risk(
    data: &LongitudinalDataset,
    regime: Regime,
    targeting: bool,
) -> Result<EstimateWithIf<f64>, FitError> {
    LongitudinalEstimator {
        regime,
        targeting,
        models: ModelSpec::default(),
    }
    .fit(data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::resampling::SeedSpec;
    use crate::simstudy::{generate_dgm, truth_oracle, BernoulliModel, DgmParams};
    use std::collections::HashMap;

    fn binarized(n: usize, seed: u64) -> LongitudinalDataset {
        let recs = generate_dgm(n, SeedSpec::new(seed, 0))
            .records()
            .iter()
            .map(|r| Record {
                w0: flag(r.w0 > 0.0),
                w1: r.w1.map(|w| flag(w > 0.0)),
                ..*r
            })
            .collect();
        LongitudinalDataset::new(recs).unwrap()
    }

    /// Nonparametric sequential g-formula by stratum averages.
    fn empirical_g_formula(data: &LongitudinalDataset, a: bool) -> f64 {
        let recs = data.records();
        let mut q2: HashMap<(u8, u8), (f64, f64)> = HashMap::new();
        for r in recs {
            if r.a0 == a && r.c1 && r.y1 == Some(false) && r.a1 == Some(a) && r.c2 == Some(true) {
                let e = q2.entry((r.w0 as u8, r.w1.unwrap() as u8)).or_default();
                e.0 += flag(r.y2.unwrap());
                e.1 += 1.0;
            }
        }
        let mut q1: HashMap<u8, (f64, f64)> = HashMap::new();
        for r in recs {
            if r.a0 == a && r.c1 {
                let z = match r.y1 {
                    Some(true) => 1.0,
                    _ => {
                        let (s, c) = q2[&(r.w0 as u8, r.w1.unwrap() as u8)];
                        s / c
                    }
                };
                let e = q1.entry(r.w0 as u8).or_default();
                e.0 += z;
                e.1 += 1.0;
            }
        }
        recs.iter()
            .map(|r| {
                let (s, c) = q1[&(r.w0 as u8)];
                s / c
            })
            .sum::<f64>()
            / recs.len() as f64
    }

    fn saturated(regime: Regime, targeting: bool) -> LongitudinalEstimator {
        let models = ModelSpec {
            q2: vec![Term::W0, Term::W1, Term::W0W1],
            ..ModelSpec::stratified()
        };
        LongitudinalEstimator::new(regime, targeting, models).unwrap()
    }

    #[test]
    fn saturated_fit_reproduces_g_formula() {
        let data = binarized(6000, 4);
        for regime in [Regime::TREATED, Regime::UNTREATED] {
            let oracle = empirical_g_formula(&data, regime.0);
            for targeting in [false, true] {
                let (est, fits) = saturated(regime, targeting).fit_detailed(&data).unwrap();
                assert!((est.point - oracle).abs() < 1e-8, "{} vs {oracle}", est.point);
                if targeting {
                    assert!(fits.epsilon1.abs() < 1e-6 && fits.epsilon2.abs() < 1e-6);
                }
            }
        }
    }

    #[test]
    fn targeted_influence_has_mean_zero() {
        for seed in 0..5 {
            let data = generate_dgm(2000, SeedSpec::new(seed, 0));
            let est = LongitudinalEstimator::targeted(Regime::TREATED).fit(&data).unwrap();
            let phi = est.influence.as_ref().unwrap();
            let mean = phi.iter().sum::<f64>() / phi.len() as f64;
            assert!(mean.abs() < 1e-6, "{mean}");
            assert!((0.0..=1.0).contains(&est.point));
        }
    }

    #[test]
    fn estimates_stay_in_unit_interval_on_small_samples() {
        for seed in 0..30 {
            let data = generate_dgm(120, SeedSpec::new(seed, 9));
            for targeting in [false, true] {
                for regime in [Regime::TREATED, Regime::UNTREATED] {
                    if let Ok(e) = fit_longitudinal_risk(&data, regime, targeting) {
                        assert!((0.0..=1.0).contains(&e.point), "{}", e.point);
                    }
                }
            }
        }
    }

    #[test]
    fn large_sample_estimate_is_close_to_truth() {
        let truth = truth_oracle(Regime::TREATED).unwrap().psi;
        let data = generate_dgm(100_000, SeedSpec::new(77, 0));
        for targeting in [false, true] {
            let e = fit_longitudinal_risk(&data, Regime::TREATED, targeting).unwrap();
            assert!((e.point - truth).abs() < 0.01, "{} vs {truth}", e.point);
        }
    }

    #[test]
    fn without_confounding_or_censoring_targeting_gives_crude_risk() {
        let params = DgmParams {
            a0: BernoulliModel::Constant(1.0),
            a1: BernoulliModel::Constant(1.0),
            c1: BernoulliModel::Constant(1.0),
            c2: BernoulliModel::Constant(1.0),
            ..DgmParams::default()
        };
        let data = params.generate(3000, SeedSpec::new(5, 0));
        let events: Vec<f64> = data
            .records()
            .iter()
            .map(|r| flag(r.event_by_two().unwrap()))
            .collect();
        let crude = events.iter().sum::<f64>() / events.len() as f64;
        let est = LongitudinalEstimator::new(Regime::TREATED, true, ModelSpec::stratified())
            .unwrap()
            .fit(&data)
            .unwrap();
        assert!((est.point - crude).abs() < 1e-8);
        for (phi, y) in est.influence.unwrap().iter().zip(&events) {
            assert!((phi - (y - est.point)).abs() < 1e-6);
        }
    }

    #[test]
    fn pooled_models_reject_constant_treatment() {
        let params = DgmParams {
            a0: BernoulliModel::Constant(1.0),
            a1: BernoulliModel::Constant(1.0),
            ..DgmParams::default()
        };
        let data = params.generate(500, SeedSpec::new(5, 0));
        assert_eq!(
            fit_longitudinal_risk(&data, Regime::TREATED, true).unwrap_err(),
            FitError::Singular
        );
    }

    #[test]
    fn stratified_spec_rejects_treatment_terms() {
        let models = ModelSpec {
            q1: vec![Term::W0, Term::A0],
            ..ModelSpec::stratified()
        };
        assert!(LongitudinalEstimator::new(Regime::TREATED, true, models).is_err());
        let models = ModelSpec {
            g_a0: vec![Term::W1],
            ..ModelSpec::default()
        };
        assert!(LongitudinalEstimator::new(Regime::TREATED, true, models).is_err());
    }
}
