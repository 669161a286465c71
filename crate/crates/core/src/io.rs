//! Configuration files, snapshot files and JSON-lines streams.
//!
//! Snapshot layouts:
//!
//! - CSV: a header line `step,t,n`, one line with those three values, then
//!   one `vx,vy,vz` line per particle. Floats use the shortest representation
//!   that round-trips.
//! - Binary: little-endian `u64 step`, `f64 t`, `u64 n`, then `3n` `f64`
//!   velocity components in particle order.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dynamics::{Observer, ParticleState, RawSimConfig, SimConfig};
use crate::{LandauError, Result, Vec3};

/// Parses a TOML configuration, reporting syntax and type errors with their
/// line and column.
pub fn parse_config(text: &str) -> Result<SimConfig> {
    let raw: RawSimConfig = toml::from_str(text).map_err(|e| {
        let (line, column) = e
            .span()
            .map(|s| line_column(text, s.start))
            .unwrap_or((1, 1));
        LandauError::ConfigParse {
            line,
            column,
            message: e.message().to_string(),
        }
    })?;
    SimConfig::try_from(raw)
}

/// Reads and parses a configuration file.
pub fn load_config(path: &Path) -> Result<SimConfig> {
    let text = fs::read_to_string(path)
        .map_err(|e| LandauError::Config(format!("cannot read config {}: {e}", path.display())))?;
    parse_config(&text)
}

/// Serializes a configuration in the same TOML layout it is read from.
pub fn config_to_toml(config: &SimConfig) -> String {
    let raw: RawSimConfig = config.clone().into();
    toml::to_string(&raw).expect("config serializes to TOML")
}

/// 1-based line and column of a byte offset.
fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let offset = offset.min(text.len());
    let before = &text[..offset];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SnapshotFormat {
    #[default]
    Csv,
    Binary,
}

impl SnapshotFormat {
    pub fn extension(&self) -> &'static str {
        match self {
            SnapshotFormat::Csv => "csv",
            SnapshotFormat::Binary => "bin",
        }
    }
}

/// Writes one snapshot file.
pub fn write_snapshot(path: &Path, state: &ParticleState, format: SnapshotFormat) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    match format {
        SnapshotFormat::Csv => {
            writeln!(w, "step,t,n")?;
            writeln!(w, "{},{:?},{}", state.step_index, state.t, state.n())?;
            for v in &state.velocities {
                writeln!(w, "{:?},{:?},{:?}", v[0], v[1], v[2])?;
            }
        }
        SnapshotFormat::Binary => {
            w.write_all(&state.step_index.to_le_bytes())?;
            w.write_all(&state.t.to_le_bytes())?;
            w.write_all(&(state.n() as u64).to_le_bytes())?;
            for v in &state.velocities {
                for c in v.iter() {
                    w.write_all(&c.to_le_bytes())?;
                }
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// A snapshot read back from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotData {
    pub step: u64,
    pub t: f64,
    pub velocities: Vec<Vec3>,
}

/// Reads a snapshot file written by [`write_snapshot`].
pub fn read_snapshot(path: &Path, format: SnapshotFormat) -> Result<SnapshotData> {
    let bad = |m: &str| LandauError::Serialization(format!("{}: {m}", path.display()));
    match format {
        SnapshotFormat::Csv => {
            let mut lines = BufReader::new(File::open(path)?).lines();
            let _header = lines.next().ok_or_else(|| bad("empty file"))??;
            let meta = lines.next().ok_or_else(|| bad("missing step line"))??;
            let parts: Vec<&str> = meta.split(',').collect();
            if parts.len() != 3 {
                return Err(bad("malformed step line"));
            }
            let step = parts[0].trim().parse().map_err(|_| bad("bad step"))?;
            let t = parts[1].trim().parse().map_err(|_| bad("bad time"))?;
            let n: usize = parts[2].trim().parse().map_err(|_| bad("bad count"))?;
            let mut velocities = Vec::with_capacity(n);
            for line in lines {
                let line = line?;
                let c: Vec<f64> = line
                    .split(',')
                    .map(|s| s.trim().parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| bad("bad velocity"))?;
                if c.len() != 3 {
                    return Err(bad("velocity rows need three components"));
                }
                velocities.push(Vec3::new(c[0], c[1], c[2]));
            }
            if velocities.len() != n {
                return Err(bad("row count does not match header"));
            }
            Ok(SnapshotData {
                step,
                t,
                velocities,
            })
        }
        SnapshotFormat::Binary => {
            let mut bytes = Vec::new();
            File::open(path)?.read_to_end(&mut bytes)?;
            if bytes.len() < 24 {
                return Err(bad("truncated header"));
            }
            let word = |k: usize| -> [u8; 8] { bytes[8 * k..8 * k + 8].try_into().unwrap() };
            let step = u64::from_le_bytes(word(0));
            let t = f64::from_le_bytes(word(1));
            let n = u64::from_le_bytes(word(2)) as usize;
            if bytes.len() != 24 + 24 * n {
                return Err(bad("size does not match particle count"));
            }
            let velocities = (0..n)
                .map(|i| {
                    let c = |k| f64::from_le_bytes(word(3 + 3 * i + k));
                    Vec3::new(c(0), c(1), c(2))
                })
                .collect();
            Ok(SnapshotData {
                step,
                t,
                velocities,
            })
        }
    }
}

/// Observer persisting every snapshot into a directory as
/// `snap_<step>.<ext>`.
pub struct SnapshotWriter {
    dir: PathBuf,
    format: SnapshotFormat,
    written: Vec<PathBuf>,
}

impl SnapshotWriter {
    pub fn new(dir: &Path, format: SnapshotFormat) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(SnapshotWriter {
            dir: dir.to_path_buf(),
            format,
            written: Vec::new(),
        })
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }
}

impl Observer for SnapshotWriter {
    fn observe(&mut self, state: &ParticleState) -> Result<()> {
        let path = self.dir.join(format!(
            "snap_{:08}.{}",
            state.step_index,
            self.format.extension()
        ));
        write_snapshot(&path, state, self.format)?;
        self.written.push(path);
        Ok(())
    }
}

/// Appends serializable rows to a JSON-lines file.
pub struct JsonlWriter {
    out: BufWriter<File>,
}

impl JsonlWriter {
    pub fn create(path: &Path) -> Result<Self> {
        Ok(JsonlWriter {
            out: BufWriter::new(File::create(path)?),
        })
    }

    pub fn write<T: Serialize>(&mut self, row: &T) -> Result<()> {
        serde_json::to_writer(&mut self.out, row)?;
        self.out.write_all(b"\n")?;
        self.out.flush()?;
        Ok(())
    }
}

/// Reads every row of a JSON-lines file.
pub fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let reader = BufReader::new(File::open(path)?);
    let mut rows = Vec::new();
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        rows.push(serde_json::from_str(&line)?);
    }
    Ok(rows)
}
