//! Time evolution: coherent Schrödinger propagation, Monte-Carlo
//! wave-function trajectories for photon loss or dephasing, a dense Lindblad
//! integrator for small systems, and ensemble statistics.

mod ensemble;
mod generator;
mod lindblad;
mod magnus;
mod trajectory;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fockspace::{embed, expectation_raw, FockDims, Operator, StateVector};
use crate::integrate::Tolerances;

pub use ensemble::{
    ensemble_run, run_trajectories, trajectory_seed, EnsembleResult, TrajectoryOutcome,
    TrajectorySummary,
};
pub use lindblad::{lindblad_evolve, MAX_LINDBLAD_DIM};
pub use trajectory::{evolve_coherent, mcwf_trajectory, TrajectorySpec};

/// A collapse channel `sqrt(rate) * op`.
#[derive(Clone, Debug)]
pub struct JumpChannel {
    pub op: Operator,
    pub rate: f64,
}

impl JumpChannel {
    pub fn new(op: Operator, rate: f64) -> Result<Self> {
        if !(rate >= 0.0 && rate.is_finite()) {
            return Err(Error::param("rate", "must be >= 0"));
        }
        Ok(JumpChannel { op, rate })
    }
}

/// One photon-loss channel `a_n` per mode, all with rate `kappa`.
pub fn photon_loss_channels(dims: &FockDims, kappa: f64) -> Result<Vec<JumpChannel>> {
    (0..dims.modes())
        .map(|n| {
            let a = crate::fockspace::destroy(dims.as_slice()[n])?;
            JumpChannel::new(embed(&a, n, dims)?, kappa)
        })
        .collect()
}

/// One `σ_z` dephasing channel per qubit, all with rate `gamma`.
pub fn dephasing_channels(dims: &FockDims, gamma: f64) -> Result<Vec<JumpChannel>> {
    (0..dims.modes())
        .map(|n| JumpChannel::new(embed(&crate::fockspace::sigma_z(), n, dims)?, gamma))
        .collect()
}

/// What an observable measures.
#[derive(Clone, Debug)]
pub enum Probe {
    /// `<ψ|op|ψ> / <ψ|ψ>`
    Expectation(Operator),
    /// `|<φ|ψ>|² / (<φ|φ><ψ|ψ>)`
    Fidelity(StateVector),
}

#[derive(Clone, Debug)]
pub struct Observable {
    pub name: String,
    pub probe: Probe,
}

impl Observable {
    pub fn expectation(name: impl Into<String>, op: Operator) -> Self {
        Observable {
            name: name.into(),
            probe: Probe::Expectation(op),
        }
    }

    pub fn fidelity(name: impl Into<String>, target: StateVector) -> Self {
        Observable {
            name: name.into(),
            probe: Probe::Fidelity(target),
        }
    }

    pub fn is_real(&self) -> bool {
        matches!(self.probe, Probe::Fidelity(_))
    }

    fn dims(&self) -> &FockDims {
        match &self.probe {
            Probe::Expectation(op) => op.dims(),
            Probe::Fidelity(s) => s.dims(),
        }
    }

    /// Evaluates on raw amplitudes with squared norm `norm_sqr`.
    pub(crate) fn eval(&self, amps: &[Complex64], norm_sqr: f64) -> Complex64 {
        match &self.probe {
            Probe::Expectation(op) => expectation_raw(amps, op) / norm_sqr,
            Probe::Fidelity(target) => {
                let overlap: Complex64 = target
                    .amplitudes()
                    .iter()
                    .zip(amps)
                    .map(|(a, b)| a.conj() * b)
                    .sum();
                Complex64::new(overlap.norm_sqr() / (norm_sqr * target.norm_sqr()), 0.0)
            }
        }
    }
}

/// Name under which pair correlations `<a_i† a_j>` are recorded.
pub fn pair_correlation_name(i: usize, j: usize) -> String {
    format!("adag{i}_a{j}")
}

/// Name under which photon numbers `<a_n† a_n>` are recorded.
pub fn photon_number_name(n: usize) -> String {
    format!("n{n}")
}

/// `<a_n†a_n>` for every mode and `<a_i†a_j>` for every pair `i < j`.
pub fn oscillator_observables(dims: &FockDims) -> Result<Vec<Observable>> {
    let mut lowering = Vec::new();
    for (k, &d) in dims.as_slice().iter().enumerate() {
        lowering.push(embed(&crate::fockspace::destroy(d)?, k, dims)?);
    }
    let mut out = Vec::new();
    for (n, a) in lowering.iter().enumerate() {
        out.push(Observable::expectation(
            photon_number_name(n),
            &a.adjoint() * a,
        ));
    }
    for i in 0..lowering.len() {
        for j in i + 1..lowering.len() {
            out.push(Observable::expectation(
                pair_correlation_name(i, j),
                &lowering[i].adjoint() * &lowering[j],
            ));
        }
    }
    Ok(out)
}

/// A named series of sampled values.
#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub name: String,
    /// Fidelities and other intrinsically real quantities.
    pub real: bool,
    pub values: Vec<Complex64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct JumpEvent {
    pub time: f64,
    pub channel: usize,
    /// Observables just before and just after the jump (empty unless
    /// snapshots were requested).
    pub before: Vec<Complex64>,
    pub after: Vec<Complex64>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct IntegrationStats {
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub rhs_evaluations: usize,
}

/// Result of a single coherent or stochastic run.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryRecord {
    pub sample_times: Vec<f64>,
    pub observables: Vec<Series>,
    pub jumps: Vec<JumpEvent>,
    /// Normalized state at `t = T`.
    pub final_state: StateVector,
    pub seed: u64,
    /// Largest population found in the top two Fock levels of any mode over
    /// the sample times; zero for qubit registers.
    pub max_leakage: f64,
    pub stats: IntegrationStats,
}

impl TrajectoryRecord {
    pub fn series(&self, name: &str) -> Option<&Series> {
        self.observables.iter().find(|s| s.name == name)
    }

    pub fn observable_index(&self, name: &str) -> Option<usize> {
        self.observables.iter().position(|s| s.name == name)
    }

    /// Value of an observable at the last sample time.
    pub fn final_value(&self, name: &str) -> Option<Complex64> {
        self.series(name).and_then(|s| s.values.last().copied())
    }
}

/// Time-stepping scheme for the (non-Hermitian) Schrödinger equation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Method {
    /// Adaptive Dormand-Prince 5(4) with Hermite dense output.
    Dopri5,
    /// Fourth-order commutator-free Magnus steps of at most `max_step` μs,
    /// each exponential expanded in Chebyshev polynomials. Suited to large
    /// truncated spaces, where the fast phases of highly occupied Fock
    /// levels force tiny Runge-Kutta steps.
    MagnusChebyshev { max_step: f64 },
}

/// Knobs shared by the coherent and stochastic propagators.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvolveOptions {
    pub method: Method,
    /// Runge-Kutta tolerances.
    pub tolerances: Tolerances,
    /// Width of the bracket within which jump times are located (μs).
    pub jump_time_resolution: f64,
    /// Record observables right before and after every jump.
    pub jump_snapshots: bool,
    /// Shift the spectrum to its center before Runge-Kutta integration.
    pub spectral_shift: bool,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        EvolveOptions {
            method: Method::Dopri5,
            tolerances: Tolerances::default(),
            jump_time_resolution: 1e-3,
            jump_snapshots: true,
            spectral_shift: true,
        }
    }
}

/// Observables sampled at 400 uniform times by default.
pub const DEFAULT_SAMPLES: usize = 400;

/// `n` uniformly spaced times from 0 to `duration` inclusive.
pub fn uniform_sample_times(duration: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![duration],
        _ => (0..n)
            .map(|k| {
                if k == n - 1 {
                    duration
                } else {
                    duration * k as f64 / (n - 1) as f64
                }
            })
            .collect(),
    }
}

/// Basis indices whose occupation lies in the top two levels of some mode.
pub(crate) fn leakage_mask(dims: &FockDims) -> Vec<usize> {
    if dims.as_slice().iter().any(|&d| d < 4) {
        return Vec::new();
    }
    (0..dims.total())
        .filter(|&i| {
            dims.occupations_of(i)
                .iter()
                .zip(dims.as_slice())
                .any(|(&n, &d)| n + 2 >= d)
        })
        .collect()
}

pub(crate) fn check_observables(observables: &[Observable], dims: &FockDims) -> Result<()> {
    for o in observables {
        if o.dims() != dims {
            return Err(Error::DimensionMismatch(format!(
                "observable `{}` lives on another space",
                o.name
            )));
        }
    }
    Ok(())
}
