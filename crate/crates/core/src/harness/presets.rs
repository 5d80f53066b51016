use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use num_complex::Complex64;
use serde_json::json;

use super::config::{validate_config, SweepConfig, DEFAULT_MAGNUS_STEP};
use super::output::{write_manifest, write_sweep, write_time_series, Manifest};
use super::sweep::run_sweep;
use crate::dynamics::{
    evolve_coherent, mcwf_trajectory, oscillator_observables, photon_loss_channels,
    uniform_sample_times, EvolveOptions, Method, Observable, TrajectoryRecord, TrajectorySpec,
};
use crate::error::{Error, Result};
use crate::fockspace::{cat_state, parity_operator, FockDims, StateVector};
use crate::models::{cvim_hamiltonian, DriveSchedule, KpoSystemParams};
use crate::semiclassical::steady_amplitude;

pub const FIG2_DETUNING: f64 = -1.0;
pub const FIG2_COUPLING: f64 = -0.5;
pub const FIG2_KERR: f64 = 0.7;
pub const FIG2_EPSILON_MAX: f64 = 2.0;
pub const FIG2_DURATION: f64 = 400.0;
pub const FIG2_DIM: usize = 18;
pub const FIG2B_LOSS: f64 = 0.01;
/// One sample per μs.
pub const FIG2_SAMPLES: usize = 401;

pub const FIDELITY_VACUUM: &str = "fid_vac";
pub const FIDELITY_PHI_PLUS: &str = "fid_phi_plus";
pub const FIDELITY_PHI_MINUS: &str = "fid_phi_minus";
pub const FIDELITY_PSI_PLUS: &str = "fid_psi_plus";
pub const PARITY: &str = "parity";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    Fig2a,
    Fig2b,
    Fig3aSlice,
    Fig3cSlice,
}

impl Preset {
    pub const ALL: [Preset; 4] = [
        Preset::Fig2a,
        Preset::Fig2b,
        Preset::Fig3aSlice,
        Preset::Fig3cSlice,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Fig2a => "fig2a",
            Preset::Fig2b => "fig2b",
            Preset::Fig3aSlice => "fig3a_slice",
            Preset::Fig3cSlice => "fig3c_slice",
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::param("preset", format!("unknown preset `{s}`")))
    }
}

/// Command-line overrides applied to a preset.
#[derive(Clone, Debug, Default)]
pub struct PresetOptions {
    pub seed: Option<u64>,
    pub n_traj: Option<usize>,
    pub out_dir: Option<PathBuf>,
}

/// Coupled pair used for the two-oscillator anneal.
pub fn fig2_params(loss: f64) -> Result<KpoSystemParams> {
    KpoSystemParams::pair(FIG2_DETUNING, FIG2_COUPLING, FIG2_KERR, loss)
}

/// Reference states of the pair at `ε_max`: vacuum, the even and odd
/// anti-aligned cats `|φ±>` and the even aligned cat `|ψ+>`.
pub fn fig2_targets(dims: &FockDims) -> Result<Vec<(&'static str, StateVector)>> {
    let a = steady_amplitude(
        FIG2_DETUNING,
        FIG2_COUPLING,
        FIG2_KERR,
        FIG2_EPSILON_MAX,
        0.0,
    )?;
    Ok(vec![
        (FIDELITY_VACUUM, StateVector::vacuum(dims)),
        (FIDELITY_PHI_PLUS, cat_state(dims, &[a, -a], 1)?),
        (FIDELITY_PHI_MINUS, cat_state(dims, &[a, -a], -1)?),
        (FIDELITY_PSI_PLUS, cat_state(dims, &[a, a], 1)?),
    ])
}

/// Vacuum-start anneal of the pair with the cat fidelities, photon numbers,
/// the pair correlation and the total parity as observables.
pub fn fig2_spec(loss: f64, dim: usize, samples: usize) -> Result<TrajectorySpec> {
    let params = fig2_params(loss)?;
    let dims = FockDims::uniform(2, dim)?;
    let mut observables: Vec<Observable> = fig2_targets(&dims)?
        .into_iter()
        .map(|(name, s)| Observable::fidelity(name, s))
        .collect();
    observables.extend(oscillator_observables(&dims)?);
    observables.push(Observable::expectation(PARITY, parity_operator(&dims)));
    Ok(TrajectorySpec {
        hamiltonian: cvim_hamiltonian(&params, &dims)?,
        schedule: DriveSchedule::up(FIG2_EPSILON_MAX, FIG2_DURATION)?,
        channels: photon_loss_channels(&dims, loss)?,
        initial: StateVector::vacuum(&dims),
        sample_times: uniform_sample_times(FIG2_DURATION, samples),
        observables,
        options: EvolveOptions::default(),
    })
}

/// Coherent anneal of the pair.
pub fn fig2a_record() -> Result<TrajectoryRecord> {
    let spec = fig2_spec(0.0, FIG2_DIM, FIG2_SAMPLES)?;
    evolve_coherent(
        &spec.hamiltonian,
        &spec.schedule,
        &spec.initial,
        &spec.sample_times,
        &spec.observables,
        spec.options,
    )
}

/// One lossy trajectory of the pair at `κ = 0.01`, propagated with
/// Magnus-Chebyshev steps.
pub fn fig2b_record(seed: u64) -> Result<TrajectoryRecord> {
    mcwf_trajectory(&fig2b_spec()?, seed)
}

pub fn fig2b_spec() -> Result<TrajectorySpec> {
    let mut spec = fig2_spec(FIG2B_LOSS, FIG2_DIM, FIG2_SAMPLES)?;
    spec.options.method = Method::MagnusChebyshev {
        max_step: DEFAULT_MAGNUS_STEP,
    };
    Ok(spec)
}

fn fig3_config(text: &str, opts: &PresetOptions) -> Result<SweepConfig> {
    let mut c = validate_config(text, None)?;
    if let Some(s) = opts.seed {
        c.sweep.base_seed = s;
    }
    if let Some(n) = opts.n_traj {
        if n == 0 {
            return Err(Error::config("n_traj", "must be >= 1"));
        }
        c.sweep.n_traj = n;
    }
    Ok(c)
}

/// Oscillator machine on the partition `{4, 5, 6, 7}`: 4×4 grid of
/// `T ∈ {25, 50, 100, 200}` μs and log-spaced κ in `[1e-3, 1e-1]`.
pub fn fig3a_config(opts: &PresetOptions) -> Result<SweepConfig> {
    fig3_config(
        r#"
[machine]
kind = "cvim"

[problem]
assets = [4, 5, 6, 7]

[physics]
detuning = -1.5
kerr = 0.6
epsilon_max = 2.0
fock_dim = 10

[sweep]
ramp_durations = [25.0, 50.0, 100.0, 200.0]
rates = [0.001, 0.004641588833612777, 0.021544346900318832, 0.1]
n_traj = 40
base_seed = 1

[output]
path = "fig3a_slice.csv"
"#,
        opts,
    )
}

/// Qubit annealer on the same partition at `ε_max = 6`: `T` up to 600 μs
/// and log-spaced γ in `[1e-3, 1e-1]`.
pub fn fig3c_config(opts: &PresetOptions) -> Result<SweepConfig> {
    fig3_config(
        r#"
[machine]
kind = "qubit"

[problem]
assets = [4, 5, 6, 7]

[physics]
epsilon_max = 6.0

[sweep]
ramp_durations = [75.0, 150.0, 300.0, 600.0]
rates = [0.001, 0.004641588833612777, 0.021544346900318832, 0.1]
n_traj = 40
base_seed = 1

[output]
path = "fig3c_slice.csv"
"#,
        opts,
    )
}

fn fig2_manifest(
    kind: &str,
    seed: u64,
    loss: f64,
    record: &TrajectoryRecord,
    started: Instant,
) -> Manifest {
    let mut m = Manifest::new(
        kind,
        seed,
        json!({
            "detuning": FIG2_DETUNING,
            "coupling": FIG2_COUPLING,
            "kerr": FIG2_KERR,
            "loss": loss,
            "epsilon_max": FIG2_EPSILON_MAX,
            "ramp_duration": FIG2_DURATION,
            "fock_dim": FIG2_DIM,
            "samples": FIG2_SAMPLES,
        }),
    );
    m.wall_clock_seconds = started.elapsed().as_secs_f64();
    m.truncation.fock_dims = Some(vec![FIG2_DIM; 2]);
    m.truncation.max_leakage = record.max_leakage;
    m.truncation.invalid_cells = usize::from(record.max_leakage > m.truncation.leakage_limit);
    m
}

/// Runs a preset and writes its CSV files and manifests into the output
/// directory; returns every path written.
pub fn run_preset(preset: Preset, opts: &PresetOptions) -> Result<Vec<PathBuf>> {
    let dir = opts.out_dir.clone().unwrap_or_else(|| PathBuf::from("out"));
    let started = Instant::now();
    let mut written = Vec::new();
    match preset {
        Preset::Fig2a => {
            let record = fig2a_record()?;
            let m = fig2_manifest("fig2a", 0, 0.0, &record, started);
            let (c, j) = write_time_series(
                &dir.join("fig2a.csv"),
                &record.sample_times,
                &record.observables,
                &m,
            )?;
            written.extend([c, j]);
        }
        Preset::Fig2b => {
            let seed = opts.seed.unwrap_or(1);
            let record = fig2b_record(seed)?;
            let mut m = fig2_manifest("fig2b", seed, FIG2B_LOSS, &record, started);
            m.extra = json!({ "jumps": record.jumps.len() });
            let (c, j) = write_time_series(
                &dir.join("fig2b.csv"),
                &record.sample_times,
                &record.observables,
                &m,
            )?;
            written.extend([c, j]);
            let jumps_path = dir.join("fig2b_jumps.csv");
            write_jumps(&jumps_path, &record)?;
            m.kind = "fig2b_jumps".into();
            written.push(jumps_path.clone());
            written.push(write_manifest(&jumps_path, &m)?);
        }
        Preset::Fig3aSlice | Preset::Fig3cSlice => {
            let config = if preset == Preset::Fig3aSlice {
                fig3a_config(opts)?
            } else {
                fig3c_config(opts)?
            };
            let result = run_sweep(&config)?;
            let (c, j) = write_sweep(&result, &dir.join(preset.name()).with_extension("csv"))?;
            written.extend([c, j]);
        }
    }
    Ok(written)
}

fn write_jumps(path: &Path, record: &TrajectoryRecord) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["t_us", "mode"])?;
    for j in &record.jumps {
        w.write_record([j.time.to_string(), j.channel.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Index of the dominant cat among `|φ+>` and `|φ->` in a snapshot of
/// [`fig2_spec`] observables: `+1` for even, `-1` for odd.
pub fn dominant_parity(record: &TrajectoryRecord, snapshot: &[Complex64]) -> Option<i32> {
    let plus = record.observable_index(FIDELITY_PHI_PLUS)?;
    let minus = record.observable_index(FIDELITY_PHI_MINUS)?;
    Some(if snapshot[plus].re >= snapshot[minus].re {
        1
    } else {
        -1
    })
}
