use std::time::Instant;

use log::{info, warn};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::config::{MachineKind, SweepConfig};
use crate::dynamics::{
    dephasing_channels, ensemble_run, oscillator_observables, photon_loss_channels, EnsembleResult,
    EvolveOptions, Method, TrajectorySpec,
};
use crate::error::{Error, Result};
use crate::fockspace::{FockDims, StateVector};
use crate::integrate::Tolerances;
use crate::ising::{brute_force_ground, success_cvim, success_qubit, GroundSolution};
use crate::models::{
    cvim_hamiltonian, qubit_annealer_hamiltonian, DriveSchedule, DrivenHamiltonian,
    QubitAnnealerParams,
};

/// Population of the top two Fock levels above which a cell is flagged.
pub const LEAKAGE_LIMIT: f64 = 1e-4;

/// Statistics of one `(T, rate)` grid point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepCell {
    pub ramp_duration: f64,
    pub rate: f64,
    /// `(dε/dt)^-1 = T / ε_max` in μs².
    pub inverse_ramp_rate: f64,
    pub success: f64,
    pub stderr_success: f64,
    pub mean_jumps: f64,
    pub stderr_jumps: f64,
    /// Trajectories that completed and were scored.
    pub n_traj: usize,
    pub max_leakage: f64,
    /// False when leakage exceeds [`LEAKAGE_LIMIT`] or the ensemble failed.
    pub valid: bool,
    pub failures: Vec<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult {
    pub config: SweepConfig,
    /// Row-major over `ramp_durations` then `rates`.
    pub cells: Vec<SweepCell>,
    pub ground: GroundSolution,
    pub fock_dims: Option<Vec<usize>>,
    pub wall_clock_seconds: f64,
}

impl SweepResult {
    pub fn cell(&self, ramp_duration: f64, rate: f64) -> Option<&SweepCell> {
        self.cells
            .iter()
            .find(|c| c.ramp_duration == ramp_duration && c.rate == rate)
    }
}

/// Ground state of a Hermitian operator by dense diagonalization.
pub fn ground_state(h: &crate::fockspace::Operator) -> Result<StateVector> {
    let eig = h.to_dense().symmetric_eigen();
    let k = (0..eig.eigenvalues.len())
        .min_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]))
        .ok_or_else(|| Error::DegenerateState("empty operator".into()))?;
    let v: Vec<Complex64> = eig.eigenvectors.column(k).iter().copied().collect();
    StateVector::new(h.dims().clone(), v)?.normalized()
}

fn options(config: &SweepConfig, total_dim: usize) -> EvolveOptions {
    let p = &config.physics;
    EvolveOptions {
        method: if config.uses_magnus(total_dim) {
            Method::MagnusChebyshev {
                max_step: p.magnus_step,
            }
        } else {
            Method::Dopri5
        },
        tolerances: Tolerances {
            rtol: p.rtol,
            atol: p.atol,
        },
        jump_time_resolution: p.jump_time_resolution,
        jump_snapshots: false,
        spectral_shift: true,
    }
}

fn cvim_cell(
    config: &SweepConfig,
    ground: &GroundSolution,
    t: f64,
    kappa: f64,
) -> Result<EnsembleResult> {
    let params = config.kpo_params(kappa)?;
    let d = config
        .physics
        .fock_dim
        .ok_or_else(|| Error::config("physics.fock_dim", "required"))?;
    let dims = FockDims::uniform(params.modes(), d)?;
    let spec = TrajectorySpec {
        hamiltonian: cvim_hamiltonian(&params, &dims)?,
        schedule: DriveSchedule::up(config.physics.epsilon_max, t)?,
        channels: photon_loss_channels(&dims, kappa)?,
        initial: StateVector::vacuum(&dims),
        sample_times: vec![t],
        observables: oscillator_observables(&dims)?,
        options: options(config, dims.total()),
    };
    let floor = config
        .physics
        .amplitude_floor
        .unwrap_or(crate::ising::DEFAULT_AMPLITUDE_FLOOR);
    ensemble_run(&spec, config.sweep.n_traj, config.sweep.base_seed, |r| {
        Ok(if success_cvim(r, ground, floor)? {
            1.0
        } else {
            0.0
        })
    })
}

fn qubit_cell(
    config: &SweepConfig,
    cost: &DMatrix<f64>,
    initial: &StateVector,
    ground: &GroundSolution,
    t: f64,
    gamma: f64,
) -> Result<EnsembleResult> {
    let params = QubitAnnealerParams::new(cost.clone(), config.physics.epsilon_max, t, gamma)?;
    let hamiltonian = qubit_annealer_hamiltonian(&params)?;
    let dims = hamiltonian.dims().clone();
    let spec = TrajectorySpec {
        channels: dephasing_channels(&dims, gamma)?,
        schedule: params.schedule()?,
        hamiltonian,
        initial: initial.clone(),
        sample_times: vec![t],
        observables: Vec::new(),
        options: options(config, dims.total()),
    };
    ensemble_run(&spec, config.sweep.n_traj, config.sweep.base_seed, |r| {
        success_qubit(&r.final_state, ground)
    })
}

/// Qubit-annealer start state: ground state of `H(0) = ε_max Σ σx + H_Ising`.
pub fn qubit_initial_state(
    hamiltonian: &DrivenHamiltonian,
    epsilon_max: f64,
) -> Result<StateVector> {
    ground_state(&hamiltonian.at(epsilon_max))
}

/// Runs every `(T, rate)` cell of the grid; cells run in parallel and each
/// cell's trajectories use seeds derived from `base_seed` alone, so any cell
/// can be recomputed on its own.
pub fn run_sweep(config: &SweepConfig) -> Result<SweepResult> {
    let started = Instant::now();
    let problem = config.problem.ising()?;
    let ground = brute_force_ground(&problem)?;
    let grid: Vec<(f64, f64)> = config
        .sweep
        .ramp_durations
        .iter()
        .flat_map(|&t| config.sweep.rates.iter().map(move |&r| (t, r)))
        .collect();

    let qubit_start = match config.machine {
        MachineKind::Qubit => {
            let params = QubitAnnealerParams::new(
                problem.cost.clone(),
                config.physics.epsilon_max,
                1.0,
                0.0,
            )?;
            Some(qubit_initial_state(
                &qubit_annealer_hamiltonian(&params)?,
                config.physics.epsilon_max,
            )?)
        }
        MachineKind::Cvim => None,
    };

    let outcomes: Vec<Result<EnsembleResult>> = grid
        .par_iter()
        .map(|&(t, rate)| {
            let clock = Instant::now();
            let out = match &qubit_start {
                None => cvim_cell(config, &ground, t, rate),
                Some(psi) => qubit_cell(config, &problem.cost, psi, &ground, t, rate),
            };
            info!(
                "cell T = {t} rate = {rate} finished in {:.1} s",
                clock.elapsed().as_secs_f64()
            );
            out
        })
        .collect();

    let mut cells = Vec::with_capacity(grid.len());
    for ((t, rate), outcome) in grid.into_iter().zip(outcomes) {
        let inverse_ramp_rate = t / config.physics.epsilon_max;
        let cell = match outcome {
            Ok(e) => {
                let valid = e.max_leakage <= LEAKAGE_LIMIT;
                if !valid {
                    warn!(
                        "cell T = {t} rate = {rate}: leakage {:.2e} into the top Fock levels exceeds {LEAKAGE_LIMIT:.0e}; flagged invalid",
                        e.max_leakage
                    );
                }
                SweepCell {
                    ramp_duration: t,
                    rate,
                    inverse_ramp_rate,
                    success: e.success_fraction,
                    stderr_success: e.stderr_success,
                    mean_jumps: e.mean_jump_count,
                    stderr_jumps: e.stderr_jumps,
                    n_traj: e.n_completed,
                    max_leakage: e.max_leakage,
                    valid,
                    failures: e.failures,
                }
            }
            Err(err @ Error::Ensemble { .. }) => {
                warn!("cell T = {t} rate = {rate} failed: {err}");
                SweepCell {
                    ramp_duration: t,
                    rate,
                    inverse_ramp_rate,
                    success: f64::NAN,
                    stderr_success: f64::NAN,
                    mean_jumps: f64::NAN,
                    stderr_jumps: f64::NAN,
                    n_traj: 0,
                    max_leakage: f64::NAN,
                    valid: false,
                    failures: vec![err.to_string()],
                }
            }
            Err(other) => return Err(other),
        };
        cells.push(cell);
    }
    Ok(SweepResult {
        config: config.clone(),
        cells,
        ground,
        fock_dims: config
            .physics
            .fock_dim
            .map(|d| vec![d; config.problem.spins()]),
        wall_clock_seconds: started.elapsed().as_secs_f64(),
    })
}
