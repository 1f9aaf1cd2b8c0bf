//! Simulation study: data-generating mechanism, truth, coverage studies and
//! the seed-variability experiment.

pub mod coverage;
pub mod dgm;
pub mod seed;
pub mod truth;

pub use coverage::{
    run_coverage_study, write_coverage_csv, CoverageReport, CoverageRow, LongitudinalModel,
    NormalMeanModel, ScenarioSpec, SimInterval, SimulationModel,
};
pub use dgm::{generate_dgm, BernoulliModel, DgmParams};
pub use seed::{run_seed_experiment, SeedCell, SeedExperiment};
pub use truth::{truth_oracle, Truth, TruthOracle};
