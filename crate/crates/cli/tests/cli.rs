use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use ris_experiment::{builtin, execute, run, ExperimentError, ExperimentSpec, Scale};

const SMALL: &str = r#"
name = "small"
kind = "rates"
designs = ["max_sum", "random", "aligned"]
seed = 7

[system]
M = 16
N = 4
K = 2

[sweep]
parameter = "delta"
values = [10.0, 0.1, 1.0]

[ga]
population = 20
elites = 2
crossover_pairs = 14
mutation_parents = 4
max_generations = 30

[mc]
samples = 400
random_draws = 10
random_mc_draws = 4
"#;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ris-experiment"))
}

fn write_spec(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn empty_sweep_exits_with_config_code() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), "e.toml", &SMALL.replace("[10.0, 0.1, 1.0]", "[]"));
    let out = bin().arg("run").arg(&spec).arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
    assert!(stderr(&out).contains("sweep.values"));
    assert!(!dir.path().join("small.csv").exists());
}

#[test]
fn unknown_parameter_is_reported_by_name() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), "u.toml", &SMALL.replace("\"delta\"", "\"rho\""));
    let out = bin().arg("validate").arg(&spec).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("rho"), "{}", stderr(&out));
}

#[test]
fn validate_accepts_good_spec() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), "s.toml", SMALL);
    let out = bin().arg("validate").arg(&spec).output().unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(String::from_utf8_lossy(&out.stdout).contains("3 sweep points"));
}

#[test]
fn list_names_every_builtin() {
    let out = bin().arg("list").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    for (name, _) in ris_experiment::BUILTINS {
        assert!(text.contains(name));
    }
}

#[test]
fn same_seed_gives_identical_csv() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), "s.toml", SMALL);
    let mut files = Vec::new();
    for (sub, seed) in [("a", "7"), ("b", "7"), ("c", "8")] {
        let out_dir = dir.path().join(sub);
        let out = bin()
            .args(["run", "--seed", seed, "--out"])
            .arg(&out_dir)
            .arg(&spec)
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", stderr(&out));
        files.push(fs::read_to_string(out_dir.join("small.csv")).unwrap());
    }
    assert_eq!(files[0], files[1]);
    assert_ne!(files[0], files[2]);
}

#[test]
fn csv_schema_and_ordering() {
    let spec = ExperimentSpec::from_toml_str(SMALL).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let (outputs, summary) = run(&spec, dir.path()).unwrap();
    let mut reader = csv::Reader::from_path(&outputs.csv).unwrap();
    let header: Vec<String> = reader.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(
        header,
        [
            "experiment", "parameter", "value", "series", "series_value", "metric", "design", "user", "closed_form",
            "mc_mean", "mc_std_err", "unit"
        ]
    );
    let records: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
    // 3 points × 3 designs × (sum, min, 2 users).
    assert_eq!(records.len(), 36);
    assert_eq!(summary.rows, 36);
    let values: Vec<f64> = records.iter().map(|r| r[2].parse().unwrap()).collect();
    assert!(values.windows(2).all(|w| w[0] <= w[1]));
    for r in &records {
        let cf: f64 = r[8].parse().unwrap();
        let mc: f64 = r[9].parse().unwrap();
        assert!(cf > 0.0 && mc > 0.0);
        assert_eq!(&r[11], "bit/s/Hz");
        assert_eq!(r[10].is_empty(), &r[5] == "min_rate");
    }

    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&outputs.json).unwrap()).unwrap();
    assert_eq!(json["name"], "small");
    assert_eq!(json["seed"], 7);
    assert_eq!(json["points"], 3);
    assert_eq!(json["ga_runs"].as_array().unwrap().len(), 3);
    assert!(json["wall_time_s"].as_f64().unwrap() >= 0.0);
}

#[test]
fn unwritable_output_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let spec = ExperimentSpec::from_toml_str(SMALL).unwrap();
    match run(&spec, &blocker.join("sub")) {
        Err(ExperimentError::Config(msg)) => assert!(msg.contains("output"), "{msg}"),
        other => panic!("expected config error, got {other:?}"),
    }
}

#[test]
fn json_spec_is_accepted() {
    let spec = ExperimentSpec::from_toml_str(SMALL).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = write_spec(dir.path(), "s.json", &serde_json::to_string(&spec).unwrap());
    assert_eq!(ExperimentSpec::from_path(&path).unwrap(), spec);
}

#[test]
fn series_rows_are_grouped_by_series_value() {
    let text = format!("{SMALL}\n[series]\nparameter = \"bits\"\nvalues = [2, 0]\n");
    let mut spec = ExperimentSpec::from_toml_str(&text).unwrap();
    spec.designs = vec![ris_experiment::Design::Aligned];
    spec.mc.samples = 0;
    let (rows, _) = execute(&spec).unwrap();
    assert_eq!(rows.len(), 2 * 3 * 4);
    let keys: Vec<(f64, f64)> = rows.iter().map(|r| (r.series_value.unwrap(), r.value)).collect();
    assert!(keys.windows(2).all(|w| w[0] <= w[1]));
    assert!(rows.iter().all(|r| r.series == "bits" && r.mc_mean.is_none()));
    // Quantized alignment cannot beat continuous alignment on the same channel.
    let sum = |bits: f64, delta: f64| {
        rows.iter()
            .find(|r| r.metric == "sum_rate" && r.series_value == Some(bits) && r.value == delta)
            .unwrap()
            .closed_form
            .unwrap()
    };
    assert!(sum(2.0, 10.0) <= sum(0.0, 10.0) + 1e-9);
}

#[test]
fn moments_agree_with_simulation() {
    let spec = builtin("fig3-moments", Scale::Desk).unwrap();
    let (rows, _) = execute(&spec).unwrap();
    assert!(!rows.is_empty());
    for r in &rows {
        let z = (r.closed_form.unwrap() - r.mc_mean.unwrap()) / r.mc_std_err.unwrap();
        assert!(z.abs() < 4.0, "{} N={} user {:?}: z = {z:.2}", r.metric, r.value, r.user);
    }
}

#[test]
fn scaled_power_rate_flattens_in_m() {
    let mut spec = builtin("fig8-power-scaling", Scale::Desk).unwrap();
    spec.mc.samples = 0;
    spec.series = None;
    spec.designs = vec![ris_experiment::Design::MaxSum];
    let (rows, _) = execute(&spec).unwrap();
    let sums: Vec<f64> = rows
        .iter()
        .filter(|r| r.metric == "sum_rate")
        .map(|r| r.closed_form.unwrap())
        .collect();
    assert_eq!(sums.len(), 4);
    let gains: Vec<f64> = sums.windows(2).map(|w| w[1] - w[0]).collect();
    assert!(gains[0] > 0.0, "{sums:?}");
    assert!(gains.windows(2).all(|g| g[1] < g[0]), "{sums:?}");
    assert!(gains[2] < 0.25 * gains[0], "{sums:?}");
}
