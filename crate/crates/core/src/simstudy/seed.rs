//! Run-to-run variability of the Cheap Subsampling interval on one fixed
//! dataset, as a function of the subsample proportion and of `B`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::Estimator;
use crate::intervals::cheap_subsampling_ci;
use crate::numerics::Probability;
use crate::resampling::{
    run_replications, with_workers, ReplicationPlan, Resample, SeedSpec, SubsampleRule,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedCell {
    pub eta: f64,
    pub m: usize,
    #[serde(rename = "B")]
    pub b: usize,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    #[serde(rename = "S")]
    pub s: Vec<f64>,
    pub upper_min: f64,
    pub upper_max: f64,
    /// `upper_max - upper_min`.
    pub upper_range: f64,
    pub upper_sd: f64,
    pub s_sd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedExperiment {
    pub n: usize,
    pub point: f64,
    pub alpha: f64,
    pub n_seeds: usize,
    pub master_seed: u64,
    pub cells: Vec<SeedCell>,
}

impl SeedExperiment {
    pub fn cell(&self, eta: f64, b: usize) -> Option<&SeedCell> {
        self.cells.iter().find(|c| c.eta == eta && c.b == b)
    }

    pub const CSV_HEADER: [&'static str; 8] =
        ["eta", "m", "B", "seed_index", "lower", "upper", "S", "upper_range"];

    /// Long-format table, one row per (cell, seed).
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(Self::CSV_HEADER)?;
        for c in &self.cells {
            for k in 0..c.upper.len() {
                w.write_record([
                    c.eta.to_string(),
                    c.m.to_string(),
                    c.b.to_string(),
                    k.to_string(),
                    c.lower[k].to_string(),
                    c.upper[k].to_string(),
                    c.s[k].to_string(),
                    c.upper_range.to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Sample standard deviation; zero for fewer than two values.
pub fn sample_sd(x: &[f64]) -> f64 {
    if x.len() < 2 {
        return 0.0;
    }
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    (x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (x.len() - 1) as f64).sqrt()
}

/// Repeat the whole Cheap Subsampling procedure `n_seeds` times in every
/// `(eta, B)` cell on the same `data`.
///
/// Repetition `k` uses master seed `SeedSpec::new(master_seed, k).derive(0)`
/// in every cell, so cells differ only through `eta` and `B`.
#[allow(clippy::too_many_arguments)]
pub fn run_seed_experiment<D, E>(
    data: &D,
    estimator: &E,
    eta_grid: &[f64],
    b_grid: &[usize],
    n_seeds: usize,
    master_seed: u64,
    alpha: f64,
    workers: Option<usize>,
) -> Result<SeedExperiment>
where
    D: Resample + Sync,
    E: Estimator<D, Scalar = f64> + ?Sized,
{
    if n_seeds == 0 {
        return Err(Error::Domain("n_seeds must be at least 1".into()));
    }
    if eta_grid.is_empty() || b_grid.is_empty() {
        return Err(Error::Domain("eta and B grids must not be empty".into()));
    }
    let alpha_p = Probability::new(alpha)?;
    let n = data.n_obs();
    let point = estimator.estimate(data)?;
    let mut cells = Vec::with_capacity(eta_grid.len() * b_grid.len());
    with_workers(workers, || -> Result<()> {
        for &eta in eta_grid {
            let rule = SubsampleRule::Proportion(eta);
            let m = rule.resolve(n)?;
            for &b in b_grid {
                let mut lower = Vec::with_capacity(n_seeds);
                let mut upper = Vec::with_capacity(n_seeds);
                let mut s = Vec::with_capacity(n_seeds);
                for k in 0..n_seeds {
                    let seed = SeedSpec::new(master_seed, k as u64).derive(0);
                    let plan = ReplicationPlan::subsampling(seed, b, rule);
                    let reps = run_replications(data, estimator, &plan)?;
                    let ci = cheap_subsampling_ci(point, &reps.estimates, m, n, alpha_p)?;
                    lower.push(ci.lower);
                    upper.push(ci.upper);
                    s.push(ci.s);
                }
                let upper_min = upper.iter().copied().fold(f64::INFINITY, f64::min);
                let upper_max = upper.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                cells.push(SeedCell {
                    eta,
                    m,
                    b,
                    upper_min,
                    upper_max,
                    upper_range: upper_max - upper_min,
                    upper_sd: sample_sd(&upper),
                    s_sd: sample_sd(&s),
                    lower,
                    upper,
                    s,
                });
            }
        }
        Ok(())
    })?;
    Ok(SeedExperiment {
        n,
        point,
        alpha,
        n_seeds,
        master_seed,
        cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::MeanEstimator;
    use rand_distr::{Distribution, StandardNormal};

    fn data(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = SeedSpec::new(seed, 0).rng();
        (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
    }

    #[test]
    fn single_seed_has_zero_spread() {
        let x = data(100, 1);
        let e = run_seed_experiment(&x, &MeanEstimator, &[0.5], &[10], 1, 3, 0.05, None).unwrap();
        let c = &e.cells[0];
        assert_eq!(c.upper_range, 0.0);
        assert_eq!(c.upper_sd, 0.0);
    }

    #[test]
    fn spread_shrinks_with_b() {
        let mut wins = 0;
        let trials = 40;
        for t in 0..trials {
            let x = data(300, 100 + t);
            let e = run_seed_experiment(&x, &MeanEstimator, &[0.632], &[5, 200], 10, t, 0.05, None)
                .unwrap();
            if e.cell(0.632, 200).unwrap().upper_range < e.cell(0.632, 5).unwrap().upper_range {
                wins += 1;
            }
        }
        assert!(wins as f64 >= 0.95 * trials as f64, "{wins}/{trials}");
    }

    #[test]
    fn s_spread_scales_like_inverse_root_b() {
        let x = data(400, 9);
        let e = run_seed_experiment(&x, &MeanEstimator, &[0.5], &[20, 320], 60, 5, 0.05, None)
            .unwrap();
        let ratio = e.cell(0.5, 20).unwrap().s_sd / e.cell(0.5, 320).unwrap().s_sd;
        // sqrt(320 / 20) = 4.
        assert!(ratio > 2.0 && ratio < 8.0, "{ratio}");
    }

    #[test]
    fn deterministic_across_workers() {
        let x = data(120, 2);
        let a = run_seed_experiment(&x, &MeanEstimator, &[0.5, 0.8], &[5, 25], 4, 8, 0.05, Some(1))
            .unwrap();
        let b = run_seed_experiment(&x, &MeanEstimator, &[0.5, 0.8], &[5, 25], 4, 8, 0.05, Some(4))
            .unwrap();
        assert_eq!(a, b);
    }
}
