//! Two-interval survival data with treatment, time-varying confounding and
//! censoring.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::estimators::{LongitudinalDataset, Record};
use crate::numerics::expit;
use crate::resampling::SeedSpec;

/// `expit(intercept + slope_w * w + slope_a * a)`, or a constant
/// probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BernoulliModel {
    Logistic {
        intercept: f64,
        slope_w: f64,
        slope_a: f64,
    },
    Constant(f64),
}

impl BernoulliModel {
    pub const fn logistic(intercept: f64, slope_w: f64, slope_a: f64) -> Self {
        BernoulliModel::Logistic {
            intercept,
            slope_w,
            slope_a,
        }
    }

    #[inline]
    pub fn prob(&self, w: f64, a: f64) -> f64 {
        match *self {
            BernoulliModel::Logistic {
                intercept,
                slope_w,
                slope_a,
            } => expit(intercept + slope_w * w + slope_a * a),
            BernoulliModel::Constant(p) => p,
        }
    }
}

/// Coefficients of the data-generating mechanism. `Default` gives the
/// simulation design:
///
/// ```text
/// W0 ~ N(0, 1)
/// A0 ~ Bern(expit(-0.2 + 0.4 W0))
/// C1 ~ Bern(expit(3.5 + W0))
/// Y1 ~ Bern(expit(-1.4 + 0.1 W0 - 1.5 A0))              if C1 = 1
/// W1 ~ N(0.5 W0 + 0.2 A0, 1)                            if C1 = 1, Y1 = 0
/// A1 ~ Bern(expit(-0.4 W0 + 0.8 A0))                    if C1 = 1, Y1 = 0
/// C2 ~ Bern(expit(3.5 + W1))                            if C1 = 1, Y1 = 0
/// Y2 ~ Bern(expit(-1.4 + 0.1 W1 - 1.5 A1))              if C2 = 1, Y1 = 0
/// ```
///
/// `C1 = 0` forces `C2 = 0`; `Y1 = 1` is absorbing (`Y2 = 1`, `C2` missing).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DgmParams {
    /// Treatment at baseline, as a function of `W0` (`slope_a` unused).
    pub a0: BernoulliModel,
    /// Remaining uncensored through interval 1, given `W0`.
    pub c1: BernoulliModel,
    /// Event in interval 1, given `(W0, A0)`.
    pub y1: BernoulliModel,
    /// Mean of `W1` is `w1_w0 * W0 + w1_a0 * A0`, unit variance.
    pub w1_w0: f64,
    pub w1_a0: f64,
    /// Treatment at time 1 given `(W0, A0)`.
    pub a1: BernoulliModel,
    /// Remaining uncensored through interval 2, given `W1`.
    pub c2: BernoulliModel,
    /// Event in interval 2, given `(W1, A1)`.
    pub y2: BernoulliModel,
}

impl Default for DgmParams {
    fn default() -> Self {
        Self {
            a0: BernoulliModel::logistic(-0.2, 0.4, 0.0),
            c1: BernoulliModel::logistic(3.5, 1.0, 0.0),
            y1: BernoulliModel::logistic(-1.4, 0.1, -1.5),
            w1_w0: 0.5,
            w1_a0: 0.2,
            a1: BernoulliModel::logistic(0.0, -0.4, 0.8),
            c2: BernoulliModel::logistic(3.5, 1.0, 0.0),
            y2: BernoulliModel::logistic(-1.4, 0.1, -1.5),
        }
    }
}

#[inline]
fn bern<R: Rng>(rng: &mut R, p: f64) -> bool {
    rng.random::<f64>() < p
}

impl DgmParams {
    pub fn draw_record<R: Rng>(&self, rng: &mut R) -> Record {
        let w0: f64 = StandardNormal.sample(rng);
        let a0 = bern(rng, self.a0.prob(w0, 0.0));
        let a0f = if a0 { 1.0 } else { 0.0 };
        let c1 = bern(rng, self.c1.prob(w0, 0.0));
        if !c1 {
            return Record {
                w0,
                a0,
                c1,
                y1: None,
                w1: None,
                a1: None,
                c2: Some(false),
                y2: None,
            };
        }
        let y1 = bern(rng, self.y1.prob(w0, a0f));
        if y1 {
            return Record {
                w0,
                a0,
                c1,
                y1: Some(true),
                w1: None,
                a1: None,
                c2: None,
                y2: Some(true),
            };
        }
        let z: f64 = StandardNormal.sample(rng);
        let w1 = self.w1_w0 * w0 + self.w1_a0 * a0f + z;
        let a1 = bern(rng, self.a1.prob(w0, a0f));
        let a1f = if a1 { 1.0 } else { 0.0 };
        let c2 = bern(rng, self.c2.prob(w1, 0.0));
        let y2 = if c2 {
            Some(bern(rng, self.y2.prob(w1, a1f)))
        } else {
            None
        };
        Record {
            w0,
            a0,
            c1,
            y1: Some(false),
            w1: Some(w1),
            a1: Some(a1),
            c2: Some(c2),
            y2,
        }
    }

    /// `n` i.i.d. records from one random stream.
    pub fn generate(&self, n: usize, seed: SeedSpec) -> LongitudinalDataset {
        let mut rng = seed.rng();
        let records = (0..n).map(|_| self.draw_record(&mut rng)).collect();
        LongitudinalDataset::new(records).expect("generator respects monotone missingness")
    }
}

/// Simulate `n` records from the default mechanism.
pub fn generate_dgm(n: usize, seed: SeedSpec) -> LongitudinalDataset {
    DgmParams::default().generate(n, seed)
}
