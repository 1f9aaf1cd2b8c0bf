use std::path::Path;
use std::process::{Command, Output};

fn cheapsub(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cheapsub"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn four_rows(dir: &Path) {
    std::fs::write(dir.join("four.csv"), "x\n1\n2\n3\n4\n").unwrap();
}

#[test]
fn ci_on_four_values_is_centred_and_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    four_rows(dir.path());
    let args = ["ci", "--input", "four.csv", "--m", "2", "--B", "1", "--seed", "11"];
    let a = cheapsub(&args, dir.path());
    assert_eq!(a.status.code(), Some(0), "{}", stderr(&a));
    let b = cheapsub(&args, dir.path());
    assert_eq!(stdout(&a), stdout(&b));

    let mut rdr = csv::Reader::from_reader(a.stdout.as_slice());
    let row = rdr.records().next().unwrap().unwrap();
    assert_eq!(&row[0], "cheap-subsampling");
    let point: f64 = row[1].parse().unwrap();
    let lower: f64 = row[2].parse().unwrap();
    let upper: f64 = row[3].parse().unwrap();
    assert_eq!(point, 2.5);
    assert!(((lower + upper) / 2.0 - 2.5).abs() < 1e-12);
}

#[test]
fn subsample_as_large_as_data_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    four_rows(dir.path());
    let o = cheapsub(&["ci", "--input", "four.csv", "--m", "4", "--B", "3"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("m < n"), "{}", stderr(&o));
}

#[test]
fn bad_data_and_unknown_flags_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.csv"), "x\n1\nabc\n").unwrap();
    let o = cheapsub(&["ci", "--input", "bad.csv"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("record 2"), "{}", stderr(&o));

    let o = cheapsub(&["generate", "--n", "5", "--frobnicate"], dir.path());
    assert_eq!(o.status.code(), Some(2));

    std::fs::write(dir.path().join("sim.toml"), "n_sims = 3\n").unwrap();
    let o = cheapsub(&["simulate", "--config", "sim.toml"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("n_sims"), "{}", stderr(&o));

    let o = cheapsub(&["simulate", "--eta", "0.5,1.2"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("simulate.eta[1]"), "{}", stderr(&o));
}

#[test]
fn estimator_failure_exits_3() {
    // Every record censored after baseline: no outcome regression can be
    // fitted on any subsample.
    let dir = tempfile::tempdir().unwrap();
    let mut text = String::from("W0,A0,C1,Y1,W1,A1,C2,Y2\n");
    for i in 0..40 {
        text.push_str(&format!("{},{},0,,,,0,\n", i as f64 / 10.0, i % 2));
    }
    std::fs::write(dir.path().join("cens.csv"), text).unwrap();
    let o = cheapsub(
        &["ci", "--input", "cens.csv", "--estimator", "longitudinal"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn generate_is_reproducible_and_paired_with_config() {
    let dir = tempfile::tempdir().unwrap();
    let a = cheapsub(&["generate", "--n", "100", "--seed", "7"], dir.path());
    let b = cheapsub(&["generate", "--n", "100", "--seed", "7"], dir.path());
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(stdout(&a).lines().count(), 101);

    let o = cheapsub(
        &["generate", "--n", "100", "--seed", "7", "--output", "d.csv"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(std::fs::read(dir.path().join("d.csv")).unwrap(), a.stdout);
    // Re-run from the paired config reproduces the file.
    std::fs::rename(dir.path().join("d.csv.config.toml"), dir.path().join("g.toml")).unwrap();
    let o = cheapsub(&["generate", "--config", "g.toml", "--output", "e.csv"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(
        std::fs::read(dir.path().join("e.csv")).unwrap(),
        std::fs::read(dir.path().join("d.csv")).unwrap()
    );
}

#[test]
fn longitudinal_ci_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let o = cheapsub(
        &["generate", "--n", "800", "--seed", "3", "--output", "d.csv"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0));
    let o = cheapsub(
        &[
            "ci", "--input", "d.csv", "--estimator", "longitudinal", "--eta", "0.632", "--B",
            "25", "--method", "cheap-subsampling,asymptotic-if",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let mut rdr = csv::Reader::from_reader(o.stdout.as_slice());
    let rows: Vec<_> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 2);
    for r in &rows {
        let lo: f64 = r[2].parse().unwrap();
        let hi: f64 = r[3].parse().unwrap();
        let point: f64 = r[1].parse().unwrap();
        assert!((0.0..=1.0).contains(&point));
        assert!(lo < point && point < hi);
    }
    assert_eq!(&rows[0][6], "505");
}

#[test]
fn truth_output_is_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let a = cheapsub(&["truth", "--regime", "1"], dir.path());
    let b = cheapsub(&["truth", "--regime", "1", "--workers", "2"], dir.path());
    assert_eq!(a.status.code(), Some(0), "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
    let v: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    let psi = v["truth"]["psi"].as_f64().unwrap();
    assert!(psi > 0.0 && psi < 1.0);
    assert_eq!(v["config"]["mc_draws"].as_u64(), Some(10_000_000));
}

#[test]
fn simulate_smoke_scenario_emits_one_row_per_method() {
    let dir = tempfile::tempdir().unwrap();
    let o = cheapsub(
        &[
            "simulate", "--n", "500", "--eta", "0.632", "--B", "25", "--n-sim", "200", "--seed",
            "5", "--output-dir", "out",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = dir.path().join("out");
    let csv_text = std::fs::read_to_string(out.join("report.csv")).unwrap();
    let mut rdr = csv::Reader::from_reader(csv_text.as_bytes());
    assert_eq!(
        rdr.headers().unwrap().iter().collect::<Vec<_>>(),
        [
            "method", "n", "eta", "m", "B", "alpha", "coverage", "coverage_se", "mean_width",
            "relative_width_pct", "failures", "seed"
        ]
    );
    let methods: Vec<String> = rdr.records().map(|r| r.unwrap()[0].to_string()).collect();
    assert_eq!(
        methods,
        ["cheap-subsampling", "cheap-bootstrap", "jackknife-limit", "asymptotic-if"]
    );
    let json: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(json["config"]["master_seed"].as_u64(), Some(5));
    assert!(out.join("config.toml").exists());

    // Re-running from the saved config reproduces both reports.
    let o = cheapsub(
        &["simulate", "--config", "out/config.toml", "--output-dir", "again"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(
        std::fs::read(out.join("report.csv")).unwrap(),
        std::fs::read(dir.path().join("again/report.csv")).unwrap()
    );
}

#[test]
fn seed_experiment_reports_every_cell() {
    let dir = tempfile::tempdir().unwrap();
    let o = cheapsub(
        &[
            "seed-experiment", "--n", "400", "--eta", "0.5,0.9", "--B", "5,50", "--n-seeds", "4",
            "--output", "seeds.csv",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o).lines().count(), 5);
    let long = std::fs::read_to_string(dir.path().join("seeds.csv")).unwrap();
    assert_eq!(long.lines().count(), 1 + 4 * 4);
    assert!(dir.path().join("seeds.csv.config.toml").exists());
}

#[test]
fn help_documents_flags() {
    let dir = tempfile::tempdir().unwrap();
    let o = cheapsub(&["ci", "--help"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    for flag in ["--input", "--estimator", "--method", "--eta", "--B", "--alpha", "--seed", "--workers"] {
        assert!(text.contains(flag), "missing {flag}");
    }
}
