use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;

use cheapsub::estimators::{
    Estimator, LongitudinalDataset, LongitudinalEstimator, MeanEstimator, ModelSpec, Regime,
};
use cheapsub::intervals::{
    asymptotic_if_ci, cheap_bootstrap_ci, cheap_subsampling_ci, jackknife_limit_ci,
    IntervalEstimate, Method,
};
use cheapsub::numerics::Probability;
use cheapsub::resampling::{
    run_replications, with_workers, ReplicationPlan, Resample, SeedSpec, SubsampleRule,
};
use cheapsub::simstudy::coverage::SimInterval;
use cheapsub::simstudy::{
    generate_dgm, run_coverage_study, run_seed_experiment, write_coverage_csv, CoverageReport,
    LongitudinalModel, NormalMeanModel, ScenarioSpec, SimulationModel, TruthOracle,
};

use crate::config::{
    self, CiConfig, EstimatorKind, GenerateConfig, ModelKind, SeedExperimentConfig,
    SimulateConfig, TruthConfig,
};

fn open(path: &Path) -> Result<BufReader<File>> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(BufReader::new(f))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

/// Destination for a single output: a file (with config sidecar) or stdout.
fn with_output<C: Serialize>(
    output: Option<&Path>,
    cfg: &C,
    body: impl FnOnce(&mut dyn Write) -> Result<()>,
) -> Result<()> {
    match output {
        Some(path) => {
            let mut w = create(path)?;
            body(&mut w)?;
            w.flush()?;
            config::write_sidecar(path, cfg)?;
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            body(&mut w)?;
            w.flush()?;
        }
    }
    Ok(())
}

/// One numeric column of a headed CSV.
fn read_column(path: &Path, column: Option<&str>) -> Result<Vec<f64>> {
    let mut rdr = csv::Reader::from_reader(open(path)?);
    let headers = rdr.headers().map_err(cheapsub::Error::from)?.clone();
    let idx = match column {
        None => 0,
        Some(name) => headers.iter().position(|h| h.trim() == name).ok_or_else(|| {
            cheapsub::Error::InvalidRecord {
                row: 0,
                reason: format!("no column named `{name}`"),
            }
        })?,
    };
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(cheapsub::Error::from)?;
        let row = i + 1;
        let field = rec.get(idx).ok_or_else(|| cheapsub::Error::InvalidRecord {
            row,
            reason: "missing field".into(),
        })?;
        let v: f64 = field
            .trim()
            .parse()
            .map_err(|_| cheapsub::Error::InvalidRecord {
                row,
                reason: format!("`{field}` is not a number"),
            })?;
        if !v.is_finite() {
            return Err(cheapsub::Error::InvalidRecord {
                row,
                reason: "value is not finite".into(),
            }
            .into());
        }
        out.push(v);
    }
    Ok(out)
}

fn read_longitudinal(path: &Path) -> Result<LongitudinalDataset> {
    Ok(LongitudinalDataset::read_csv(open(path)?)?)
}

fn longitudinal_estimator(regime: u8, targeting: bool) -> Result<LongitudinalEstimator> {
    Ok(LongitudinalEstimator::new(
        Regime::from_level(regime)?,
        targeting,
        ModelSpec::default(),
    )?)
}

fn intervals<D, E>(data: &D, est: &E, cfg: &CiConfig) -> Result<Vec<IntervalEstimate<f64>>>
where
    D: Resample + Sync,
    E: Estimator<D, Scalar = f64>,
{
    let n = data.n_obs();
    let alpha = Probability::new(cfg.alpha)?;
    let rule = match cfg.m {
        Some(m) => SubsampleRule::Fixed(m),
        None => SubsampleRule::Proportion(cfg.eta),
    };
    let needs_subsamples = cfg.methods.iter().any(|m| m.uses_subsamples());
    let m = if needs_subsamples { rule.resolve(n)? } else { 0 };
    let full = est.fit(data).map_err(cheapsub::Error::from)?;

    let sub = if needs_subsamples {
        let plan = ReplicationPlan::subsampling(cfg.master_seed, cfg.b, SubsampleRule::Fixed(m))
            .with_max_retries(cfg.max_retries);
        Some(run_replications(data, est, &plan)?)
    } else {
        None
    };
    let mut out = Vec::with_capacity(cfg.methods.len());
    for &method in &cfg.methods {
        let ci = match method {
            Method::CheapSubsampling | Method::JackknifeLimit => {
                let r = sub.as_ref().expect("subsample replicates computed");
                let ci = if method == Method::CheapSubsampling {
                    cheap_subsampling_ci(full.point, &r.estimates, m, n, alpha)?
                } else {
                    jackknife_limit_ci(full.point, &r.estimates, m, n, alpha)?
                };
                ci.with_replication_diagnostics(r)
            }
            Method::CheapBootstrap => {
                let plan = ReplicationPlan::bootstrap(cfg.master_seed, cfg.b)
                    .with_max_retries(cfg.max_retries);
                let r = run_replications(data, est, &plan)?;
                cheap_bootstrap_ci(full.point, &r.estimates, n, alpha)?
                    .with_replication_diagnostics(&r)
            }
            Method::AsymptoticIf => asymptotic_if_ci(&full, n, alpha)?,
        };
        out.push(ci);
    }
    Ok(out)
}

pub fn ci(cfg: &CiConfig) -> Result<()> {
    let input = cfg.input.as_deref().expect("validated");
    let rows = match cfg.estimator {
        EstimatorKind::Mean => {
            let data = read_column(input, cfg.column.as_deref())?;
            intervals(&data, &MeanEstimator, cfg)?
        }
        EstimatorKind::Longitudinal => {
            let data = read_longitudinal(input)?;
            let est = longitudinal_estimator(cfg.regime, cfg.targeting)?;
            intervals(&data, &est, cfg)?
        }
    };
    with_output(cfg.output.as_deref(), cfg, |w| {
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(IntervalEstimate::<f64>::CSV_HEADER)?;
        for r in &rows {
            csv.write_record(r.csv_record())?;
        }
        csv.flush()?;
        Ok(())
    })
}

#[derive(Serialize)]
struct SimulationOutput<'a> {
    config: &'a SimulateConfig,
    truth: f64,
    reports: &'a [CoverageReport],
}

fn sweep<M: SimulationModel>(
    model: &M,
    cfg: &SimulateConfig,
    workers: Option<usize>,
) -> Result<Vec<CoverageReport>> {
    let mut reports = Vec::new();
    for &b in &cfg.b {
        for &n in &cfg.n {
            for &eta in &cfg.eta {
                let spec = ScenarioSpec {
                    alpha: cfg.alpha,
                    n_sim: cfg.n_sim,
                    methods: cfg.methods.clone(),
                    max_retries: cfg.max_retries,
                    keep_intervals: cfg.keep_intervals,
                    ..ScenarioSpec::new(n, eta, b, cfg.master_seed)
                };
                eprintln!("scenario n={n} eta={eta} B={b} ({} simulations)", cfg.n_sim);
                reports.push(run_coverage_study(model, &spec, workers)?);
            }
        }
    }
    Ok(reports)
}

pub fn simulate(cfg: &SimulateConfig, workers: Option<usize>) -> Result<()> {
    let reports = match cfg.model {
        ModelKind::Longitudinal => {
            let regime = Regime::from_level(cfg.regime)?;
            let mut model = with_workers(workers, || LongitudinalModel::new(regime))?;
            model.estimator.targeting = cfg.targeting;
            sweep(&model, cfg, workers)?
        }
        ModelKind::NormalMean => sweep(&NormalMeanModel::default(), cfg, workers)?,
    };
    let dir = &cfg.output_dir;
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;

    let mut w = create(&dir.join("report.csv"))?;
    write_coverage_csv(&reports, &mut w)?;
    w.flush()?;

    let mut w = create(&dir.join("report.json"))?;
    let out = SimulationOutput {
        config: cfg,
        truth: reports[0].truth,
        reports: &reports,
    };
    serde_json::to_writer_pretty(&mut w, &out)?;
    writeln!(w)?;
    w.flush()?;

    std::fs::write(dir.join("config.toml"), config::to_toml(cfg))?;

    if cfg.keep_intervals {
        let mut w = csv::Writer::from_writer(create(&dir.join("intervals.csv"))?);
        w.write_record(["n", "eta", "B", "sim", "method", "point", "lower", "upper", "covered"])?;
        for r in &reports {
            let s = &r.scenario;
            for SimInterval {
                sim,
                method,
                point,
                lower,
                upper,
                covered,
                ..
            } in r.intervals.iter().flatten()
            {
                w.write_record([
                    s.n.to_string(),
                    s.eta.to_string(),
                    s.b.to_string(),
                    sim.to_string(),
                    method.to_string(),
                    point.to_string(),
                    lower.to_string(),
                    upper.to_string(),
                    covered.to_string(),
                ])?;
            }
        }
        w.flush()?;
    }

    let mut stdout = io::stdout().lock();
    write_coverage_csv(&reports, &mut stdout)?;
    Ok(())
}

#[derive(Serialize)]
struct TruthOutput<'a> {
    config: &'a TruthConfig,
    truth: cheapsub::simstudy::Truth,
}

pub fn truth(cfg: &TruthConfig, workers: Option<usize>) -> Result<()> {
    let oracle = TruthOracle {
        nodes: cfg.nodes,
        mc_draws: cfg.mc_draws,
        mc_seed: cfg.mc_seed,
        ..TruthOracle::default()
    };
    let regime = Regime::from_level(cfg.regime)?;
    let truth = with_workers(workers, || oracle.evaluate(regime))?;
    let out = TruthOutput { config: cfg, truth };
    let text = serde_json::to_string_pretty(&out)?;
    match &cfg.output {
        Some(p) => std::fs::write(p, text + "\n").with_context(|| format!("writing {}", p.display()))?,
        None => println!("{text}"),
    }
    Ok(())
}

pub fn generate(cfg: &GenerateConfig) -> Result<()> {
    let data = generate_dgm(cfg.n, SeedSpec::new(cfg.master_seed, 0));
    with_output(cfg.output.as_deref(), cfg, |w| Ok(data.write_csv(w)?))
}

pub fn seed_experiment(cfg: &SeedExperimentConfig, workers: Option<usize>) -> Result<()> {
    let exp = match (cfg.estimator, &cfg.input) {
        (EstimatorKind::Mean, Some(path)) => {
            let data = read_column(path, cfg.column.as_deref())?;
            run_seed_experiment(
                &data,
                &MeanEstimator,
                &cfg.eta,
                &cfg.b,
                cfg.n_seeds,
                cfg.master_seed,
                cfg.alpha,
                workers,
            )?
        }
        (EstimatorKind::Mean, None) => unreachable!("rejected by validation"),
        (EstimatorKind::Longitudinal, input) => {
            let data = match input {
                Some(p) => read_longitudinal(p)?,
                None => generate_dgm(cfg.n, SeedSpec::new(cfg.data_seed, 0)),
            };
            let est = longitudinal_estimator(cfg.regime, cfg.targeting)?;
            run_seed_experiment(
                &data,
                &est,
                &cfg.eta,
                &cfg.b,
                cfg.n_seeds,
                cfg.master_seed,
                cfg.alpha,
                workers,
            )?
        }
    };
    if let Some(path) = &cfg.output {
        let mut w = create(path)?;
        exp.write_csv(&mut w)?;
        w.flush()?;
        config::write_sidecar(path, cfg)?;
    }
    let mut w = csv::Writer::from_writer(io::stdout().lock());
    w.write_record(["eta", "m", "B", "upper_min", "upper_max", "upper_range", "upper_sd", "S_sd"])?;
    for c in &exp.cells {
        w.write_record([
            c.eta.to_string(),
            c.m.to_string(),
            c.b.to_string(),
            c.upper_min.to_string(),
            c.upper_max.to_string(),
            c.upper_range.to_string(),
            c.upper_sd.to_string(),
            c.s_sd.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
