//! The target value under a sustained regime, computed two independent
//! ways: nested Gauss–Hermite quadrature of the g-formula and brute-force
//! simulation of intervened trajectories.

use std::sync::OnceLock;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dgm::DgmParams;
use crate::error::{Error, Result};
use crate::estimators::Regime;
use crate::resampling::SeedSpec;

pub const DEFAULT_NODES: usize = 96;
pub const DEFAULT_MC_DRAWS: u64 = 10_000_000;
pub const DEFAULT_MC_SEED: u64 = 0x7275_7468;
/// Maximum tolerated gap between the two computations.
pub const AGREEMENT_TOL: f64 = 5e-4;

const MC_CHUNK: u64 = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Truth {
    pub regime: Regime,
    /// Quadrature value; this is the one used as ψ.
    pub psi: f64,
    pub quadrature: f64,
    pub monte_carlo: f64,
    pub quadrature_nodes: usize,
    pub mc_draws: u64,
    pub mc_seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruthOracle {
    pub params: DgmParams,
    pub nodes: usize,
    pub mc_draws: u64,
    pub mc_seed: u64,
}

impl Default for TruthOracle {
    fn default() -> Self {
        Self {
            params: DgmParams::default(),
            nodes: DEFAULT_NODES,
            mc_draws: DEFAULT_MC_DRAWS,
            mc_seed: DEFAULT_MC_SEED,
        }
    }
}

impl TruthOracle {
    /// `E_W0[p1(W0) + (1 - p1(W0)) E_{W1|W0}[p2(W1)]]` by nested quadrature.
    pub fn quadrature(&self, regime: Regime) -> f64 {
        let a = regime.level();
        let (x, w) = gauss_hermite(self.nodes);
        let p = &self.params;
        let norm = std::f64::consts::PI.sqrt();
        let sqrt2 = std::f64::consts::SQRT_2;
        let mut outer = 0.0;
        for (&xi, &wi) in x.iter().zip(&w) {
            let w0 = sqrt2 * xi;
            let p1 = p.y1.prob(w0, a);
            let mean1 = p.w1_w0 * w0 + p.w1_a0 * a;
            let inner = x
                .iter()
                .zip(&w)
                .map(|(&xj, &wj)| wj * p.y2.prob(mean1 + sqrt2 * xj, a))
                .sum::<f64>()
                / norm;
            outer += wi * (p1 + (1.0 - p1) * inner);
        }
        outer / norm
    }

    /// Fraction of `mc_draws` simulated trajectories, with treatment set to
    /// the regime and censoring removed, that have an event by time 2.
    pub fn monte_carlo(&self, regime: Regime) -> f64 {
        let a = regime.level();
        let p = &self.params;
        let chunks = self.mc_draws.div_ceil(MC_CHUNK);
        let events: u64 = (0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut rng = SeedSpec::new(self.mc_seed, c).rng();
                let len = MC_CHUNK.min(self.mc_draws - c * MC_CHUNK);
                let mut hits = 0u64;
                for _ in 0..len {
                    let w0: f64 = StandardNormal.sample(&mut rng);
                    if rng.random::<f64>() < p.y1.prob(w0, a) {
                        hits += 1;
                        continue;
                    }
                    let z: f64 = StandardNormal.sample(&mut rng);
                    let w1 = p.w1_w0 * w0 + p.w1_a0 * a + z;
                    if rng.random::<f64>() < p.y2.prob(w1, a) {
                        hits += 1;
                    }
                }
                hits
            })
            .sum();
        events as f64 / self.mc_draws as f64
    }

    /// Both computations; errors when they disagree by more than 5e-4.
    pub fn evaluate(&self, regime: Regime) -> Result<Truth> {
        let quadrature = self.quadrature(regime);
        let monte_carlo = self.monte_carlo(regime);
        if (quadrature - monte_carlo).abs() > AGREEMENT_TOL {
            return Err(Error::TruthDisagreement {
                quadrature,
                monte_carlo,
            });
        }
        Ok(Truth {
            regime,
            psi: quadrature,
            quadrature,
            monte_carlo,
            quadrature_nodes: self.nodes,
            mc_draws: self.mc_draws,
            mc_seed: self.mc_seed,
        })
    }
}

/// Truth for the default mechanism, computed once per regime per process.
pub fn truth_oracle(regime: Regime) -> Result<Truth> {
    static TREATED: OnceLock<std::result::Result<Truth, String>> = OnceLock::new();
    static UNTREATED: OnceLock<std::result::Result<Truth, String>> = OnceLock::new();
    let cell = if regime.0 { &TREATED } else { &UNTREATED };
    cell.get_or_init(|| {
        TruthOracle::default()
            .evaluate(regime)
            .map_err(|e| e.to_string())
    })
    .clone()
    .map_err(Error::Domain)
}

/// Gauss–Hermite nodes and weights for the weight function `exp(-x^2)`.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    const EPS: f64 = 1e-14;
    let pim4 = std::f64::consts::PI.powf(-0.25);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    let mut z = 0.0;
    for i in 0..n.div_ceil(2) {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.855_75 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..200 {
            let mut p1 = pim4;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= EPS {
                break;
            }
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}
