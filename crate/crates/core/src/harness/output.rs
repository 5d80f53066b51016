use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::sweep::{SweepCell, SweepResult, LEAKAGE_LIMIT};
use crate::dynamics::Series;
use crate::error::Result;

/// Header of every grid CSV.
pub const GRID_COLUMNS: [&str; 6] = [
    "T_us",
    "rate_per_us",
    "success",
    "mean_jumps",
    "stderr_success",
    "n_traj",
];

/// Manifest written next to every CSV, same stem with a `.json` extension.
#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub kind: String,
    pub seed: u64,
    pub config: serde_json::Value,
    pub wall_clock_seconds: f64,
    pub truncation: TruncationReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cells: Option<Vec<SweepCell>>,
    #[serde(skip_serializing_if = "serde_json::Value::is_null")]
    pub extra: serde_json::Value,
}

#[derive(Clone, Debug, Serialize)]
pub struct TruncationReport {
    /// Per-mode Fock dimensions; absent for qubit registers.
    pub fock_dims: Option<Vec<usize>>,
    pub leakage_limit: f64,
    pub max_leakage: f64,
    pub invalid_cells: usize,
}

impl Manifest {
    pub fn new(kind: impl Into<String>, seed: u64, config: serde_json::Value) -> Self {
        Manifest {
            tool: "cvim",
            version: env!("CARGO_PKG_VERSION"),
            kind: kind.into(),
            seed,
            config,
            wall_clock_seconds: 0.0,
            truncation: TruncationReport {
                fock_dims: None,
                leakage_limit: LEAKAGE_LIMIT,
                max_leakage: 0.0,
                invalid_cells: 0,
            },
            cells: None,
            extra: serde_json::Value::Null,
        }
    }
}

pub fn manifest_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    Ok(())
}

pub fn write_manifest(csv: &Path, manifest: &Manifest) -> Result<PathBuf> {
    let path = manifest_path(csv);
    ensure_parent(&path)?;
    fs::write(&path, serde_json::to_string_pretty(manifest)? + "\n")?;
    Ok(path)
}

/// Grid CSV text, one row per cell in grid order.
pub fn grid_csv(cells: &[SweepCell]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(GRID_COLUMNS)?;
    for c in cells {
        w.write_record([
            c.ramp_duration.to_string(),
            c.rate.to_string(),
            c.success.to_string(),
            c.mean_jumps.to_string(),
            c.stderr_success.to_string(),
            c.n_traj.to_string(),
        ])?;
    }
    Ok(
        String::from_utf8(w.into_inner().map_err(|e| e.into_error())?)
            .expect("csv output is UTF-8"),
    )
}

/// Writes the grid CSV and its manifest; returns both paths.
pub fn write_sweep(result: &SweepResult, csv_path: &Path) -> Result<(PathBuf, PathBuf)> {
    ensure_parent(csv_path)?;
    fs::write(csv_path, grid_csv(&result.cells)?)?;
    let mut m = Manifest::new(
        format!("{:?}_sweep", result.config.machine).to_lowercase(),
        result.config.sweep.base_seed,
        serde_json::to_value(&result.config)?,
    );
    m.wall_clock_seconds = result.wall_clock_seconds;
    m.truncation.fock_dims = result.fock_dims.clone();
    m.truncation.max_leakage = result
        .cells
        .iter()
        .map(|c| c.max_leakage)
        .filter(|v| v.is_finite())
        .fold(0.0, f64::max);
    m.truncation.invalid_cells = result.cells.iter().filter(|c| !c.valid).count();
    m.cells = Some(result.cells.clone());
    m.extra = serde_json::json!({ "ground": result.ground });
    let manifest = write_manifest(csv_path, &m)?;
    Ok((csv_path.to_path_buf(), manifest))
}

/// Time-series CSV text: `t_us`, then one column per real series or a
/// `.re`/`.im` pair per complex one.
pub fn time_series_csv(times: &[f64], series: &[Series]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["t_us".to_string()];
    for s in series {
        if s.real {
            header.push(s.name.clone());
        } else {
            header.push(format!("{}.re", s.name));
            header.push(format!("{}.im", s.name));
        }
    }
    w.write_record(&header)?;
    for (k, t) in times.iter().enumerate() {
        let mut row = vec![t.to_string()];
        for s in series {
            let v = s.values[k];
            row.push(v.re.to_string());
            if !s.real {
                row.push(v.im.to_string());
            }
        }
        w.write_record(&row)?;
    }
    Ok(
        String::from_utf8(w.into_inner().map_err(|e| e.into_error())?)
            .expect("csv output is UTF-8"),
    )
}

pub fn write_time_series(
    path: &Path,
    times: &[f64],
    series: &[Series],
    manifest: &Manifest,
) -> Result<(PathBuf, PathBuf)> {
    ensure_parent(path)?;
    fs::write(path, time_series_csv(times, series)?)?;
    let m = write_manifest(path, manifest)?;
    Ok((path.to_path_buf(), m))
}
