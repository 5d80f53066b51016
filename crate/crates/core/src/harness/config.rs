use std::path::{Path, PathBuf};

use log::warn;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ising::{npp_to_ising, parse_assets, IsingProblem};
use crate::models::KpoSystemParams;
use crate::semiclassical::predicted_photon_number;

/// Largest total Hilbert-space dimension the automatic truncation picks.
pub const MAX_AUTO_TOTAL_DIM: usize = 20_000;

/// Total dimension above which the automatic integrator switches to
/// Magnus-Chebyshev steps.
pub const AUTO_MAGNUS_DIM: usize = 100;

pub const DEFAULT_MAGNUS_STEP: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MachineKind {
    Cvim,
    Qubit,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Integrator {
    Auto,
    Dopri5,
    Magnus,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    machine: RawMachine,
    problem: RawProblem,
    #[serde(default)]
    physics: RawPhysics,
    #[serde(default)]
    sweep: RawSweep,
    #[serde(default)]
    output: RawOutput,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMachine {
    kind: MachineKind,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProblem {
    assets: Option<Vec<u64>>,
    matrix: Option<Vec<Vec<f64>>>,
    file: Option<PathBuf>,
}

#[derive(Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPhysics {
    detuning: Option<f64>,
    kerr: Option<OneOrMany>,
    epsilon_max: Option<f64>,
    drive_scale: Option<Vec<f64>>,
    fock_dim: Option<usize>,
    integrator: Option<Integrator>,
    magnus_step: Option<f64>,
    rtol: Option<f64>,
    atol: Option<f64>,
    jump_time_resolution: Option<f64>,
    amplitude_floor: Option<f64>,
}

#[derive(Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    ramp_durations: Option<Vec<f64>>,
    rates: Option<Vec<f64>>,
    n_traj: Option<usize>,
    base_seed: Option<u64>,
}

#[derive(Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    path: Option<PathBuf>,
}

/// Problem instance as resolved from the config.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProblemConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub assets: Option<Vec<u64>>,
    /// Cost matrix `C`, row by row.
    pub cost: Vec<Vec<f64>>,
}

impl ProblemConfig {
    pub fn ising(&self) -> Result<IsingProblem> {
        match &self.assets {
            Some(a) => npp_to_ising(a),
            None => {
                let n = self.cost.len();
                IsingProblem::from_matrix(DMatrix::from_fn(n, n, |i, j| self.cost[i][j]))
            }
        }
    }

    pub fn spins(&self) -> usize {
        self.cost.len()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PhysicsConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detuning: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kerr: Option<Vec<f64>>,
    pub epsilon_max: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub drive_scale: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fock_dim: Option<usize>,
    pub integrator: Integrator,
    pub magnus_step: f64,
    pub rtol: f64,
    pub atol: f64,
    pub jump_time_resolution: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub amplitude_floor: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepGrid {
    /// Ramp durations `T` (μs).
    pub ramp_durations: Vec<f64>,
    /// Photon loss rates κ or dephasing rates γ (1/μs).
    pub rates: Vec<f64>,
    pub n_traj: usize,
    pub base_seed: u64,
}

/// Fully resolved sweep configuration; serializes to the manifest echo.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepConfig {
    pub machine: MachineKind,
    pub problem: ProblemConfig,
    pub physics: PhysicsConfig,
    pub sweep: SweepGrid,
    pub output_path: PathBuf,
}

impl SweepConfig {
    /// Oscillator parameters at loss rate `kappa`.
    pub fn kpo_params(&self, kappa: f64) -> Result<KpoSystemParams> {
        let problem = self.problem.ising()?;
        let p = &self.physics;
        let detuning = p
            .detuning
            .ok_or_else(|| Error::config("physics.detuning", "required"))?;
        let kerr = p
            .kerr
            .clone()
            .ok_or_else(|| Error::config("physics.kerr", "required"))?;
        let params =
            KpoSystemParams::new(detuning, kerr, kappa, crate::ising::cvim_coupling(&problem))?;
        match &p.drive_scale {
            Some(s) => params.with_drive_scale(s.clone()),
            None => Ok(params),
        }
    }

    /// Uses Magnus steps for large truncated spaces unless overridden.
    pub fn uses_magnus(&self, total_dim: usize) -> bool {
        match self.physics.integrator {
            Integrator::Auto => total_dim > AUTO_MAGNUS_DIM,
            Integrator::Dopri5 => false,
            Integrator::Magnus => true,
        }
    }
}

/// `ceil(4|α|² + 6)`, the truncation that keeps the coherent tail small.
pub fn recommended_fock_dim(photon_number: f64) -> usize {
    (4.0 * photon_number + 6.0).ceil() as usize
}

/// Log-spaced values from `lo` to `hi` inclusive.
pub fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.log10(), hi.log10());
    (0..n)
        .map(|k| 10f64.powf(a + (b - a) * k as f64 / (n - 1) as f64))
        .collect()
}

fn dedup_grid(values: Vec<f64>, field: &str) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::with_capacity(values.len());
    for v in values {
        if out.contains(&v) {
            warn!("duplicate value {v} in `{field}` removed");
        } else {
            out.push(v);
        }
    }
    out
}

fn positive(v: f64, field: &str) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::config(field, format!("must be > 0, got {v}")))
    }
}

/// Parses, fills in defaults and checks a TOML sweep configuration.
///
/// Unknown keys are rejected. A relative `problem.file` is resolved against
/// `base_dir`.
pub fn validate_config(text: &str, base_dir: Option<&Path>) -> Result<SweepConfig> {
    let raw: RawConfig = toml::from_str(text)?;
    let machine = raw.machine.kind;

    let problem = match (raw.problem.assets, raw.problem.matrix, raw.problem.file) {
        (Some(a), None, None) => resolve_assets(a)?,
        (None, None, Some(f)) => {
            let path = match base_dir {
                Some(d) if f.is_relative() => d.join(f),
                _ => f,
            };
            resolve_assets(parse_assets(&std::fs::read_to_string(&path)?)?)?
        }
        (None, Some(m), None) => {
            let n = m.len();
            if n < 2 || m.iter().any(|row| row.len() != n) {
                return Err(Error::config(
                    "problem.matrix",
                    "must be square with at least 2 rows",
                ));
            }
            let c = IsingProblem::from_matrix(DMatrix::from_fn(n, n, |i, j| m[i][j]))
                .map_err(|e| Error::config("problem.matrix", e.to_string()))?;
            ProblemConfig {
                assets: None,
                cost: rows(&c.cost),
            }
        }
        _ => {
            return Err(Error::config(
                "problem",
                "exactly one of `assets`, `matrix` or `file` is required",
            ))
        }
    };
    let n = problem.spins();

    let p = raw.physics;
    let epsilon_max = positive(
        p.epsilon_max.unwrap_or(match machine {
            MachineKind::Cvim => 2.0,
            MachineKind::Qubit => 6.0,
        }),
        "physics.epsilon_max",
    )?;
    let mut physics = PhysicsConfig {
        detuning: None,
        kerr: None,
        epsilon_max,
        drive_scale: None,
        fock_dim: None,
        integrator: p.integrator.unwrap_or(Integrator::Auto),
        magnus_step: positive(
            p.magnus_step.unwrap_or(DEFAULT_MAGNUS_STEP),
            "physics.magnus_step",
        )?,
        rtol: positive(p.rtol.unwrap_or(1e-8), "physics.rtol")?,
        atol: positive(p.atol.unwrap_or(1e-10), "physics.atol")?,
        jump_time_resolution: positive(
            p.jump_time_resolution.unwrap_or(1e-3),
            "physics.jump_time_resolution",
        )?,
        amplitude_floor: None,
    };
    match machine {
        MachineKind::Cvim => {
            physics.detuning = Some(p.detuning.unwrap_or(-1.5));
            physics.kerr = Some(match p.kerr {
                None => vec![0.6; n],
                Some(OneOrMany::One(k)) => vec![k; n],
                Some(OneOrMany::Many(k)) if k.len() == n => k,
                Some(OneOrMany::Many(k)) => {
                    return Err(Error::config(
                        "physics.kerr",
                        format!("needs {n} entries, got {}", k.len()),
                    ))
                }
            });
            physics.drive_scale = p.drive_scale;
            let floor = p
                .amplitude_floor
                .unwrap_or(crate::ising::DEFAULT_AMPLITUDE_FLOOR);
            if !(floor >= 0.0) {
                return Err(Error::config("physics.amplitude_floor", "must be >= 0"));
            }
            physics.amplitude_floor = Some(floor);
        }
        MachineKind::Qubit => {
            for (set, name) in [
                (p.detuning.is_some(), "detuning"),
                (p.kerr.is_some(), "kerr"),
                (p.drive_scale.is_some(), "drive_scale"),
                (p.fock_dim.is_some(), "fock_dim"),
                (p.amplitude_floor.is_some(), "amplitude_floor"),
            ] {
                if set {
                    return Err(Error::config(
                        format!("physics.{name}"),
                        "only applies to the cvim machine",
                    ));
                }
            }
            if n > crate::models::MAX_QUBITS {
                return Err(Error::config(
                    "problem",
                    format!(
                        "qubit machine is limited to {} spins",
                        crate::models::MAX_QUBITS
                    ),
                ));
            }
        }
    }

    let s = raw.sweep;
    let ramp_durations = dedup_grid(
        s.ramp_durations.unwrap_or_else(|| match machine {
            MachineKind::Cvim => vec![25.0, 50.0, 100.0, 200.0],
            MachineKind::Qubit => vec![75.0, 150.0, 300.0, 600.0],
        }),
        "ramp_durations",
    );
    let rates = dedup_grid(
        s.rates.unwrap_or_else(|| log_spaced(1e-3, 1e-1, 4)),
        "rates",
    );
    if ramp_durations.is_empty() {
        return Err(Error::config("ramp_durations", "must not be empty"));
    }
    if rates.is_empty() {
        return Err(Error::config("rates", "must not be empty"));
    }
    for &t in &ramp_durations {
        positive(t, "ramp_durations")?;
    }
    if let Some(&r) = rates.iter().find(|r| !(**r >= 0.0 && r.is_finite())) {
        return Err(Error::config("rates", format!("must be >= 0, got {r}")));
    }
    let n_traj = s.n_traj.unwrap_or(40);
    if n_traj == 0 {
        return Err(Error::config("n_traj", "must be >= 1"));
    }

    let mut config = SweepConfig {
        machine,
        problem,
        physics,
        sweep: SweepGrid {
            ramp_durations,
            rates,
            n_traj,
            base_seed: s.base_seed.unwrap_or(1),
        },
        output_path: raw
            .output
            .path
            .unwrap_or_else(|| PathBuf::from("out/sweep.csv")),
    };

    if machine == MachineKind::Cvim {
        // validates Δ, K, drive_scale and the vacuum condition at the smallest rate
        let params = config.kpo_params(0.0).map_err(|e| match e {
            Error::Parameter { field, rule } => Error::config(format!("physics.{field}"), rule),
            other => other,
        })?;
        let photons = predicted_photon_number(&params, epsilon_max);
        let want = recommended_fock_dim(photons);
        let fock_dim = match p.fock_dim {
            Some(d) if d < 2 => return Err(Error::config("physics.fock_dim", "must be >= 2")),
            Some(d) => {
                if d < want {
                    warn!("fock_dim {d} is below 4|α|²+6 = {want} for |α|² = {photons:.3}");
                }
                d
            }
            None => {
                let cap = (MAX_AUTO_TOTAL_DIM as f64).powf(1.0 / n as f64).floor() as usize;
                if want > cap {
                    warn!("fock_dim {want} capped at {cap} to keep the total dimension <= {MAX_AUTO_TOTAL_DIM}");
                }
                want.min(cap).max(2)
            }
        };
        config.physics.fock_dim = Some(fock_dim);
    }
    Ok(config)
}

/// Reads and validates a config file.
pub fn load_config(path: &Path) -> Result<SweepConfig> {
    let text = std::fs::read_to_string(path)?;
    validate_config(&text, path.parent())
}

fn resolve_assets(assets: Vec<u64>) -> Result<ProblemConfig> {
    let p = npp_to_ising(&assets).map_err(|e| Error::config("problem.assets", e.to_string()))?;
    Ok(ProblemConfig {
        assets: Some(assets),
        cost: rows(&p.cost),
    })
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| m.row(i).iter().copied().collect())
        .collect()
}
