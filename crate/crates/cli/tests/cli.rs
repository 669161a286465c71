use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn landau(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_landau"))
        .args(args)
        .env("LANDAU_WORKERS", "2")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> String {
    let p = dir.join("run.toml");
    fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

const SMALL: &str =
    "gamma = -2.0\ndt = 0.001\nt_end = 0.01\nn_particles = 32\nseed = 3\nsnapshot_stride = 5\n";

fn digests(run: &Path) -> Vec<(String, String)> {
    let m: Value =
        serde_json::from_str(&fs::read_to_string(run.join("manifest.json")).unwrap()).unwrap();
    m["outputs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|o| {
            (
                o["path"].as_str().unwrap().to_owned(),
                o["sha256"].as_str().unwrap().to_owned(),
            )
        })
        .collect()
}

#[test]
fn simulate_is_reproducible_and_writes_a_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for out in [&a, &b] {
        let o = landau(&["simulate", "--config", &cfg, "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let da = digests(&a);
    assert_eq!(da, digests(&b));
    let snaps = da
        .iter()
        .filter(|(p, _)| p.starts_with("snapshots/"))
        .count();
    assert_eq!(snaps, 3);
    assert!(da.iter().any(|(p, _)| p == "diagnostics.jsonl"));
    assert!(da.iter().any(|(p, _)| p == "config.toml"));
}

#[test]
fn seed_override_changes_the_output() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    assert!(
        landau(&["simulate", "--config", &cfg, "--out", a.to_str().unwrap()])
            .status
            .success()
    );
    assert!(landau(&[
        "simulate",
        "--config",
        &cfg,
        "--seed",
        "4",
        "--out",
        b.to_str().unwrap(),
        "--format",
        "binary"
    ])
    .status
    .success());
    let m: Value =
        serde_json::from_str(&fs::read_to_string(b.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["seed"], 4);
    assert_eq!(m["format"], "binary");
    assert_ne!(digests(&a), digests(&b));
}

#[test]
fn malformed_config_is_a_usage_error_with_location() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "gamma = -2.0\ndt = \"fast\"\n");
    let o = landau(&[
        "simulate",
        "--config",
        &cfg,
        "--out",
        tmp.path().join("x").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));

    let cfg = write_config(
        tmp.path(),
        "gamma = -1.0\ndt = 0.01\nt_end = 0.1\nn_particles = 8\nseed = 1\n",
    );
    let o = landau(&[
        "simulate",
        "--config",
        &cfg,
        "--out",
        tmp.path().join("y").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unknown_names_are_usage_errors() {
    let o = landau(&[
        "functionals",
        "--preset",
        "maxwellian(1)",
        "--functional",
        "Q",
    ]);
    assert_eq!(o.status.code(), Some(2));
    let o = landau(&["functionals", "--preset", "cauchy(1)", "--functional", "I"]);
    assert_eq!(o.status.code(), Some(2));

    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let run = tmp.path().join("run");
    assert!(
        landau(&["simulate", "--config", &cfg, "--out", run.to_str().unwrap()])
            .status
            .success()
    );
    let o = landau(&[
        "plotdata",
        "--run",
        run.to_str().unwrap(),
        "--series",
        "temperature",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn sweep_without_values_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let o = landau(&["sweep", "--config", &cfg, "--axis", "n", "--values", ""]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn sweep_writes_one_row_per_value() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let out = tmp.path().join("sw");
    let o = landau(&[
        "sweep",
        "--config",
        &cfg,
        "--axis",
        "n",
        "--values",
        "8,16",
        "--replicates",
        "2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("summary.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("8,2,0,"));
    assert!(lines[2].starts_with("16,2,0,"));
}

#[test]
fn rescaled_run_has_constant_energy_series() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &format!("{SMALL}energy_mode = \"rescale\"\n"));
    let run = tmp.path().join("run");
    assert!(
        landau(&["simulate", "--config", &cfg, "--out", run.to_str().unwrap()])
            .status
            .success()
    );
    let o = landau(&[
        "plotdata",
        "--run",
        run.to_str().unwrap(),
        "--series",
        "energy",
    ]);
    assert!(o.status.success());
    let values: Vec<f64> = String::from_utf8_lossy(&o.stdout)
        .lines()
        .map(|l| l.split_whitespace().nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(values.len(), 3);
    for v in &values {
        assert!((v - values[0]).abs() <= 1e-12 * values[0]);
    }
}

#[test]
fn fisher_of_standard_maxwellian_is_three() {
    let o = landau(&[
        "functionals",
        "--preset",
        "maxwellian(1)",
        "--functional",
        "I",
    ]);
    assert!(o.status.success());
    let r: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((r["value"].as_f64().unwrap() - 3.0).abs() < 1e-6);
    assert_eq!(r["method"], "grid");
}

#[test]
fn verify_passes() {
    let o = landau(&["verify"]);
    assert!(o.status.success());
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.lines().count() >= 5);
    assert!(text.lines().all(|l| l.starts_with("PASS ")));
}
