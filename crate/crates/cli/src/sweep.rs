//! Parameter sweeps: one axis of the configuration crossed with seeds, each
//! cell in its own directory, summarized by per-value medians.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use landau_core::diagnostics::{DiagnosticsRecord, StandardObserver, StandardObserverOptions};
use landau_core::dynamics::{run, EtaRule, Observer, SimConfig};
use landau_core::io::{config_to_toml, JsonlWriter};
use landau_core::numeric::median;
use landau_core::reference::preset;
use rayon::prelude::*;
use serde::Serialize;

use crate::commands::{CONFIG_FILE, DIAGNOSTICS_FILE};
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    N,
    Dt,
    Eta,
}

/// Summary of one (value, seed) cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellResult {
    pub value: f64,
    pub seed: u64,
    pub dir: PathBuf,
    /// |weak residual| of the compact bump at the final time.
    pub weak_residual: Option<f64>,
    pub bl_distance: Option<f64>,
    /// |E_T − E_0|/E_0.
    pub energy_drift: Option<f64>,
    pub error: Option<String>,
}

/// Per-value medians over seeds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub value: f64,
    pub cells: usize,
    pub failed: usize,
    pub median_weak_residual: Option<f64>,
    pub median_bl_distance: Option<f64>,
    pub median_energy_drift: Option<f64>,
}

pub const SUMMARY_FILE: &str = "summary.csv";

pub fn apply_axis(base: &SimConfig, axis: Axis, value: f64) -> CliResult<SimConfig> {
    let mut cfg = base.clone();
    match axis {
        Axis::N => {
            if !(value >= 2.0 && value.fract() == 0.0) {
                return Err(CliError::Usage(format!(
                    "N must be an integer ≥ 2, got {value}"
                )));
            }
            cfg.n_particles = value as usize;
        }
        Axis::Dt => cfg.dt = value,
        Axis::Eta => cfg.eta_rule = EtaRule::Fixed(value),
    }
    cfg.validate()?;
    Ok(cfg)
}

fn cell_dir(out: &Path, axis: Axis, value: f64, seed: u64) -> PathBuf {
    let axis = match axis {
        Axis::N => "n",
        Axis::Dt => "dt",
        Axis::Eta => "eta",
    };
    out.join(format!("{axis}_{value}_seed_{seed}"))
}

fn run_cell(cfg: &SimConfig, dir: &Path) -> CliResult<Vec<DiagnosticsRecord>> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(CONFIG_FILE), config_to_toml(cfg))?;
    let g0 = preset(&cfg.initial)?;
    let mut obs = StandardObserver::new(
        cfg.gamma,
        StandardObserverOptions::default(),
        Some(JsonlWriter::create(&dir.join(DIAGNOSTICS_FILE))?),
    )?;
    let traj = {
        let mut observers: [&mut dyn Observer; 1] = [&mut obs];
        run(cfg, g0.as_ref(), &mut observers)?
    };
    if let Some(e) = traj.error {
        return Err(CliError::Runtime(format!(
            "run stopped at step {}: {}",
            e.step, e.message
        )));
    }
    Ok(obs.into_rows())
}

fn summarize(
    value: f64,
    seed: u64,
    dir: PathBuf,
    rows: CliResult<Vec<DiagnosticsRecord>>,
) -> CellResult {
    match rows {
        Ok(rows) => {
            let (first, last) = (rows.first(), rows.last());
            CellResult {
                value,
                seed,
                dir,
                weak_residual: last
                    .and_then(|r| r.weak_residual.get("bump"))
                    .map(|v| v.abs()),
                bl_distance: last.and_then(|r| r.bl_dist_to_ref),
                energy_drift: first
                    .zip(last)
                    .map(|(a, b)| (b.energy - a.energy).abs() / a.energy),
                error: None,
            }
        }
        Err(e) => CellResult {
            value,
            seed,
            dir,
            weak_residual: None,
            bl_distance: None,
            energy_drift: None,
            error: Some(e.to_string()),
        },
    }
}

fn median_of(xs: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let v: Vec<f64> = xs.flatten().collect();
    (!v.is_empty()).then(|| median(&v))
}

/// Runs every (value, seed) cell, writes `summary.csv` and returns the
/// per-value rows. Failed cells are reported in the table; the sweep as a
/// whole fails afterwards if any cell did.
pub fn sweep(
    base: &SimConfig,
    axis: Axis,
    values: &[f64],
    seeds: &[u64],
    out: &Path,
) -> CliResult<Vec<SweepRow>> {
    if values.is_empty() {
        return Err(CliError::Usage("sweep needs at least one value".into()));
    }
    if seeds.is_empty() {
        return Err(CliError::Usage("sweep needs at least one seed".into()));
    }
    let configs: Vec<SimConfig> = values
        .iter()
        .map(|&v| apply_axis(base, axis, v))
        .collect::<CliResult<_>>()?;
    fs::create_dir_all(out)?;
    let jobs: Vec<(usize, u64)> = (0..values.len())
        .flat_map(|i| seeds.iter().map(move |&s| (i, s)))
        .collect();
    let cells: Vec<CellResult> = jobs
        .par_iter()
        .map(|&(i, seed)| {
            let cfg = configs[i].clone().with_seed(seed);
            let dir = cell_dir(out, axis, values[i], seed);
            let rows = run_cell(&cfg, &dir);
            summarize(values[i], seed, dir, rows)
        })
        .collect();
    let rows: Vec<SweepRow> = values
        .iter()
        .map(|&v| {
            let group: Vec<&CellResult> = cells.iter().filter(|c| c.value == v).collect();
            SweepRow {
                value: v,
                cells: group.len(),
                failed: group.iter().filter(|c| c.error.is_some()).count(),
                median_weak_residual: median_of(group.iter().map(|c| c.weak_residual)),
                median_bl_distance: median_of(group.iter().map(|c| c.bl_distance)),
                median_energy_drift: median_of(group.iter().map(|c| c.energy_drift)),
            }
        })
        .collect();
    fs::write(out.join(SUMMARY_FILE), summary_csv(axis, &rows))?;
    let mut cell_lines = String::new();
    for c in &cells {
        cell_lines.push_str(&serde_json::to_string(c)?);
        cell_lines.push('\n');
    }
    fs::write(out.join("cells.jsonl"), cell_lines)?;
    let failed: Vec<&CellResult> = cells.iter().filter(|c| c.error.is_some()).collect();
    if let Some(first) = failed.first() {
        print!("{}", summary_csv(axis, &rows));
        return Err(CliError::Runtime(format!(
            "{} of {} cells failed; first: {}: {}",
            failed.len(),
            cells.len(),
            first.dir.display(),
            first.error.as_deref().unwrap_or("")
        )));
    }
    Ok(rows)
}

pub fn summary_csv(axis: Axis, rows: &[SweepRow]) -> String {
    let name = match axis {
        Axis::N => "n",
        Axis::Dt => "dt",
        Axis::Eta => "eta",
    };
    let opt = |x: Option<f64>| x.map_or_else(|| "nan".to_string(), |v| format!("{v:e}"));
    let mut s = format!(
        "{name},cells,failed,median_weak_residual,median_bl_distance,median_energy_drift\n"
    );
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            r.value,
            r.cells,
            r.failed,
            opt(r.median_weak_residual),
            opt(r.median_bl_distance),
            opt(r.median_energy_drift)
        );
    }
    s
}
