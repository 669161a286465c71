use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use landau_core::density::TensorProduct;
use landau_core::diagnostics::{
    DiagnosticsRecord, StandardObserver, StandardObserverOptions, SERIES_NAMES,
};
use landau_core::dynamics::{run, Observer};
use landau_core::functionals::{
    dissipation_k, entropy, entropy_production_d, fisher, j_functional, tensor_consistency_d,
    FunctionalEstimate, GridSpec, KSet, McSpec, Method,
};
use landau_core::io::{
    config_to_toml, load_config, read_jsonl, JsonlWriter, SnapshotFormat, SnapshotWriter,
};
use landau_core::potentials::Potential;
use landau_core::reference::preset;
use landau_core::verify::run_checks;
use serde::Serialize;

use crate::error::{CliError, CliResult};
use crate::manifest::{digests, RunManifest, Timing};

pub const DIAGNOSTICS_FILE: &str = "diagnostics.jsonl";
pub const CONFIG_FILE: &str = "config.toml";
pub const SNAPSHOT_DIR: &str = "snapshots";

pub fn format_name(format: SnapshotFormat) -> &'static str {
    match format {
        SnapshotFormat::Csv => "csv",
        SnapshotFormat::Binary => "binary",
    }
}

/// Runs one simulation into `out` and writes its manifest. A run that stops
/// early still writes everything gathered so far, then reports an error.
pub fn simulate(
    config: &Path,
    seed: Option<u64>,
    out: &Path,
    format: SnapshotFormat,
) -> CliResult<RunManifest> {
    let mut cfg = load_config(config)?;
    if let Some(s) = seed {
        cfg = cfg.with_seed(s);
    }
    let g0 = preset(&cfg.initial)?;
    fs::create_dir_all(out)?;
    let config_path = out.join(CONFIG_FILE);
    fs::write(&config_path, config_to_toml(&cfg))?;

    let diag_path = out.join(DIAGNOSTICS_FILE);
    let mut snapshots = SnapshotWriter::new(&out.join(SNAPSHOT_DIR), format)?;
    let mut diagnostics = StandardObserver::new(
        cfg.gamma,
        StandardObserverOptions::default(),
        Some(JsonlWriter::create(&diag_path)?),
    )?;
    let start = Instant::now();
    let traj = {
        let mut observers: [&mut dyn Observer; 2] = [&mut snapshots, &mut diagnostics];
        run(&cfg, g0.as_ref(), &mut observers)?
    };
    let wall_seconds = start.elapsed().as_secs_f64();

    let mut files = vec![config_path];
    files.extend(snapshots.written().iter().cloned());
    files.push(diag_path);
    let error = traj
        .error
        .as_ref()
        .map(|e| format!("run stopped at step {}: {}", e.step, e.message));
    let manifest = RunManifest {
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        config: config_to_toml(&cfg),
        seed: cfg.seed,
        format: format_name(format).to_string(),
        outputs: digests(out, &files)?,
        timing: Timing { wall_seconds },
        error: error.clone(),
    };
    manifest.write(out)?;
    match error {
        Some(e) => Err(CliError::Runtime(e)),
        None => Ok(manifest),
    }
}

/// Functional names accepted by [`functional_report`].
pub const FUNCTIONAL_NAMES: &[&str] = &["H", "I", "D", "K_beta", "J", "D_tensor"];

#[derive(Debug, Clone)]
pub struct FunctionalRequest {
    pub preset: String,
    pub functional: String,
    pub beta: f64,
    pub k: Vec<usize>,
    pub gamma: f64,
    pub samples: usize,
    pub seed: u64,
    pub grid_points: usize,
    pub order: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FunctionalReport {
    pub functional: String,
    pub preset: String,
    pub method: Method,
    pub value: f64,
    pub abs_error: f64,
    pub n: usize,
    pub rejected: usize,
}

pub fn functional_report(req: &FunctionalRequest) -> CliResult<FunctionalReport> {
    let name = match req.functional.as_str() {
        "H" | "entropy" => "H",
        "I" | "fisher" => "I",
        "D" => "D",
        "K_beta" | "K" => "K_beta",
        "J" => "J",
        "D_tensor" => "D_tensor",
        other => {
            return Err(CliError::Usage(format!(
                "unknown functional {other:?}; available: {}",
                FUNCTIONAL_NAMES.join(", ")
            )))
        }
    };
    let rho = preset(&req.preset)?;
    let pot = Potential::exact(req.gamma)?;
    let mc = McSpec::new(req.samples, req.seed);
    let k_set = if req.k.is_empty() {
        KSet::all()
    } else {
        KSet::new(&req.k)?
    };
    let pair = || -> CliResult<TensorProduct> { Ok(TensorProduct::power(Arc::clone(&rho), 2)?) };
    let est: FunctionalEstimate = match name {
        "H" => entropy(
            rho.as_ref(),
            &GridSpec::covering(rho.as_ref(), req.grid_points)?,
        )?,
        "I" => fisher(
            rho.as_ref(),
            &GridSpec::covering(rho.as_ref(), req.grid_points)?,
        )?,
        "D" => entropy_production_d(&rho, &pot, &mc)?,
        "K_beta" => dissipation_k(&pair()?, req.beta, &k_set, &pot, &mc)?,
        "J" => j_functional(&pair()?, &k_set, &pot, &mc)?,
        _ => tensor_consistency_d(&rho, req.order, &pot, &mc)?.value_j,
    };
    Ok(FunctionalReport {
        functional: name.to_string(),
        preset: req.preset.clone(),
        method: est.method,
        value: est.value,
        abs_error: est.abs_error,
        n: est.n,
        rejected: est.rejected,
    })
}

fn known_series(name: &str) -> bool {
    SERIES_NAMES.contains(&name) || name.starts_with("weak_residual.")
}

/// Extracts `series` from a run directory as `t value` lines. Rows where the
/// series is undefined are skipped.
pub fn plotdata(run_dir: &Path, series: &str, out: Option<&PathBuf>) -> CliResult<usize> {
    if !known_series(series) {
        return Err(CliError::Usage(format!(
            "unknown series {series:?}; available: {}, weak_residual.<id>",
            SERIES_NAMES.join(", ")
        )));
    }
    let rows: Vec<DiagnosticsRecord> = read_jsonl(&run_dir.join(DIAGNOSTICS_FILE))?;
    if let Some(id) = series.strip_prefix("weak_residual.") {
        if rows
            .first()
            .is_some_and(|r| !r.weak_residual.contains_key(id))
        {
            let ids: Vec<&str> = rows[0].weak_residual.keys().map(String::as_str).collect();
            return Err(CliError::Usage(format!(
                "unknown weak residual {id:?}; available: {}",
                ids.join(", ")
            )));
        }
    }
    let mut text = String::new();
    let mut count = 0;
    for row in &rows {
        if let Some(Some(v)) = row.series(series) {
            text.push_str(&format!("{:?} {:?}\n", row.t, v));
            count += 1;
        }
    }
    match out {
        Some(p) => fs::write(p, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(count)
}

/// Runs the self-check suite, printing one line per check.
pub fn verify() -> CliResult<()> {
    let outcomes = run_checks();
    let mut failed = 0;
    for c in &outcomes {
        let tag = if c.passed { "PASS" } else { "FAIL" };
        println!("{tag} {}: {}", c.name, c.detail);
        failed += usize::from(!c.passed);
    }
    if failed > 0 {
        return Err(CliError::Runtime(format!(
            "{failed} of {} checks failed",
            outcomes.len()
        )));
    }
    Ok(())
}
