//! Hamiltonian builders for the coupled-oscillator Ising machine and the
//! qubit annealer, plus the mapping from circuit parameters to model
//! parameters.
//!
//! Units: rates are plain numbers interpreted as rad/μs, times are in μs and
//! ħ = 1. Every time-dependent Hamiltonian in the crate has the form
//! `H(t) = H_static + ε(t) Σ_k H_drive[k]`, represented by
//! [`DrivenHamiltonian`].

use log::warn;
use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fockspace::{create, destroy, embed, sigma_x, sigma_z, FockDims, Operator};
use crate::sparse::CsrMatrix;

const HERMITIAN_TOL: f64 = 1e-10;

/// Largest eigenvalue of a real symmetric matrix.
pub fn max_eigenvalue(m: &DMatrix<f64>) -> f64 {
    m.clone()
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max)
}

fn check_symmetric_zero_diag(m: &DMatrix<f64>, n: usize, field: &str) -> Result<()> {
    if m.nrows() != n || m.ncols() != n {
        return Err(Error::param(field, format!("must be {n}x{n}")));
    }
    for i in 0..n {
        if m[(i, i)] != 0.0 {
            return Err(Error::param(field, "diagonal must be zero"));
        }
        for j in 0..i {
            if (m[(i, j)] - m[(j, i)]).abs() > 1e-12 * (1.0 + m[(i, j)].abs()) {
                return Err(Error::param(field, "must be symmetric"));
            }
            if !m[(i, j)].is_finite() {
                return Err(Error::param(field, "entries must be finite"));
            }
        }
    }
    Ok(())
}

/// Parameters of `N` resonant Kerr parametric oscillators.
#[derive(Clone, Debug, PartialEq)]
pub struct KpoSystemParams {
    /// Common detuning Δ from half the modulation frequency.
    pub detuning: f64,
    /// Kerr strengths `K_n > 0`.
    pub kerr: Vec<f64>,
    /// Photon loss rate κ, shared by all modes.
    pub loss: f64,
    /// Real symmetric coupling matrix with zero diagonal. Each unordered
    /// pair enters the Hamiltonian twice, as `J_nm a_n†a_m + J_mn a_m†a_n`.
    pub coupling: DMatrix<f64>,
    /// Relative two-photon drive strength of every mode.
    pub drive_scale: Vec<f64>,
}

impl KpoSystemParams {
    pub fn new(detuning: f64, kerr: Vec<f64>, loss: f64, coupling: DMatrix<f64>) -> Result<Self> {
        let n = kerr.len();
        let p = KpoSystemParams {
            detuning,
            kerr,
            loss,
            coupling,
            drive_scale: vec![1.0; n],
        };
        p.validate()?;
        Ok(p)
    }

    /// Identical oscillators with a shared Kerr strength.
    pub fn uniform(detuning: f64, kerr: f64, loss: f64, coupling: DMatrix<f64>) -> Result<Self> {
        let n = coupling.nrows();
        Self::new(detuning, vec![kerr; n], loss, coupling)
    }

    /// Two identical oscillators with coupling `J`.
    pub fn pair(detuning: f64, coupling: f64, kerr: f64, loss: f64) -> Result<Self> {
        let j = DMatrix::from_row_slice(2, 2, &[0.0, coupling, coupling, 0.0]);
        Self::uniform(detuning, kerr, loss, j)
    }

    pub fn with_drive_scale(mut self, drive_scale: Vec<f64>) -> Result<Self> {
        self.drive_scale = drive_scale;
        self.validate()?;
        Ok(self)
    }

    pub fn with_loss(mut self, loss: f64) -> Result<Self> {
        self.loss = loss;
        self.validate()?;
        Ok(self)
    }

    pub fn modes(&self) -> usize {
        self.kerr.len()
    }

    /// Largest eigenvalue of the coupling matrix: the quadratic frequency
    /// of the softest normal mode is `Δ + λ_max(J)`.
    pub fn soft_mode_coupling(&self) -> f64 {
        max_eigenvalue(&self.coupling)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.kerr.len();
        if n == 0 {
            return Err(Error::param("kerr", "at least one mode is required"));
        }
        if !self.detuning.is_finite() {
            return Err(Error::param("detuning", "must be finite"));
        }
        if self.kerr.iter().any(|&k| !(k > 0.0 && k.is_finite())) {
            return Err(Error::param("kerr", "every K_n must be > 0"));
        }
        if !(self.loss >= 0.0 && self.loss.is_finite()) {
            return Err(Error::param("loss", "must be >= 0"));
        }
        if self.drive_scale.len() != n {
            return Err(Error::param("drive_scale", format!("needs {n} entries")));
        }
        if self
            .drive_scale
            .iter()
            .any(|&s| !(s >= 0.0 && s.is_finite()))
        {
            return Err(Error::param("drive_scale", "entries must be >= 0"));
        }
        check_symmetric_zero_diag(&self.coupling, n, "coupling")?;
        // the undriven vacuum must be the extremal state of the quadratic part
        let top = self.detuning + self.soft_mode_coupling();
        if top >= 0.0 {
            return Err(Error::param(
                "detuning",
                format!("Δ + λ_max(J) = {top} must be < 0 for a valid vacuum start"),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RampDirection {
    /// `ε(t) = ε_max t / T`
    Up,
    /// `ε(t) = ε_max (1 - t / T)`
    Down,
}

/// Linear drive ramp over `[0, T]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DriveSchedule {
    pub epsilon_max: f64,
    pub duration: f64,
    pub direction: RampDirection,
}

impl DriveSchedule {
    pub fn new(epsilon_max: f64, duration: f64, direction: RampDirection) -> Result<Self> {
        if !(epsilon_max > 0.0 && epsilon_max.is_finite()) {
            return Err(Error::param("epsilon_max", "must be > 0"));
        }
        if !(duration > 0.0 && duration.is_finite()) {
            return Err(Error::param("duration", "must be > 0"));
        }
        Ok(DriveSchedule {
            epsilon_max,
            duration,
            direction,
        })
    }

    pub fn up(epsilon_max: f64, duration: f64) -> Result<Self> {
        Self::new(epsilon_max, duration, RampDirection::Up)
    }

    pub fn down(epsilon_max: f64, duration: f64) -> Result<Self> {
        Self::new(epsilon_max, duration, RampDirection::Down)
    }

    pub fn epsilon(&self, t: f64) -> f64 {
        let s = (t / self.duration).clamp(0.0, 1.0);
        match self.direction {
            RampDirection::Up => self.epsilon_max * s,
            RampDirection::Down => self.epsilon_max * (1.0 - s),
        }
    }

    /// Time at which the ramp passes `epsilon`, if it does.
    pub fn time_of(&self, epsilon: f64) -> Option<f64> {
        if !(0.0..=self.epsilon_max).contains(&epsilon) {
            return None;
        }
        let s = epsilon / self.epsilon_max;
        Some(match self.direction {
            RampDirection::Up => s * self.duration,
            RampDirection::Down => (1.0 - s) * self.duration,
        })
    }

    /// `(dε/dt)^-1 = T / ε_max`.
    pub fn inverse_ramp_rate(&self) -> f64 {
        self.duration / self.epsilon_max
    }
}

/// `H(t) = H_static + ε(t) Σ_k H_drive[k]`.
#[derive(Clone, Debug)]
pub struct DrivenHamiltonian {
    pub static_part: Operator,
    pub drives: Vec<Operator>,
}

impl DrivenHamiltonian {
    pub fn new(static_part: Operator, drives: Vec<Operator>) -> Result<Self> {
        for d in &drives {
            d.check_same_space(static_part.dims())?;
        }
        Ok(DrivenHamiltonian {
            static_part,
            drives,
        })
    }

    pub fn dims(&self) -> &FockDims {
        self.static_part.dims()
    }

    /// Sum of the drive terms.
    pub fn total_drive(&self) -> Operator {
        self.drives
            .iter()
            .fold(Operator::zeros(self.dims()), |acc, d| &acc + d)
    }

    /// Instantaneous Hamiltonian at drive strength `epsilon`.
    pub fn at(&self, epsilon: f64) -> Operator {
        &self.static_part + &self.total_drive().scale(epsilon)
    }

    pub fn hermiticity_error(&self) -> f64 {
        self.drives
            .iter()
            .map(Operator::hermiticity_error)
            .fold(self.static_part.hermiticity_error(), f64::max)
    }

    fn verified(self) -> Result<Self> {
        let err = self.hermiticity_error();
        if err > HERMITIAN_TOL {
            return Err(Error::param(
                "hamiltonian",
                format!("built operator is not Hermitian ({err:.2e})"),
            ));
        }
        Ok(self)
    }
}

/// Single oscillator: `H_static = Δ a†a - K a†a†aa`, `H_drive = a² + a†²`.
pub fn kpo_hamiltonian(detuning: f64, kerr: f64, dim: usize) -> Result<DrivenHamiltonian> {
    if dim < 4 {
        return Err(Error::InvalidDimension(format!(
            "an oscillator needs at least 4 levels, got {dim}"
        )));
    }
    let a = destroy(dim)?;
    let ad = create(dim)?;
    let n = &ad * &a;
    let kerr_term = &(&(&ad * &ad) * &a) * &a;
    let h_static = &n.scale(detuning) - &kerr_term.scale(kerr);
    let h_drive = &(&a * &a) + &(&ad * &ad);
    DrivenHamiltonian::new(h_static, vec![h_drive])?.verified()
}

/// Resonant `N`-oscillator Hamiltonian
/// `Σ Δ a_n†a_n + Σ_{n≠m} J_nm a_n†a_m - Σ K_n a_n†a_n†a_n a_n`
/// with drives `s_n (a_n² + a_n†²)`.
pub fn cvim_hamiltonian(params: &KpoSystemParams, dims: &FockDims) -> Result<DrivenHamiltonian> {
    params.validate()?;
    let n_modes = params.modes();
    if dims.modes() != n_modes {
        return Err(Error::DimensionMismatch(format!(
            "{} truncation dimensions for {n_modes} oscillators",
            dims.modes()
        )));
    }
    if dims.as_slice().iter().any(|&d| d < 4) {
        return Err(Error::InvalidDimension(
            "every oscillator needs at least 4 levels".into(),
        ));
    }
    let mut lowering = Vec::with_capacity(n_modes);
    for (k, &d) in dims.as_slice().iter().enumerate() {
        lowering.push(embed(&destroy(d)?, k, dims)?);
    }
    let raising: Vec<Operator> = lowering.iter().map(Operator::adjoint).collect();

    // diagonal part assembled directly
    let diag: Vec<Complex64> = (0..dims.total())
        .map(|i| {
            let occ = dims.occupations_of(i);
            let e: f64 = occ
                .iter()
                .zip(&params.kerr)
                .map(|(&n, &k)| {
                    let n = n as f64;
                    params.detuning * n - k * n * (n - 1.0)
                })
                .sum();
            Complex64::new(e, 0.0)
        })
        .collect();
    let mut h_static = Operator::new(dims.clone(), CsrMatrix::from_diagonal(&diag))?;
    for n in 0..n_modes {
        for m in 0..n_modes {
            let j = params.coupling[(n, m)];
            if n != m && j != 0.0 {
                h_static = &h_static + &(&raising[n] * &lowering[m]).scale(j);
            }
        }
    }
    let mut drives = Vec::with_capacity(n_modes);
    for n in 0..n_modes {
        let two_photon = &(&lowering[n] * &lowering[n]) + &(&raising[n] * &raising[n]);
        drives.push(two_photon.scale(params.drive_scale[n]));
    }
    DrivenHamiltonian::new(h_static, drives)?.verified()
}

/// Two coupled identical oscillators written in the symmetric
/// `d = (a + b)/√2` (mode 0) and antisymmetric `c = (a - b)/√2` (mode 1)
/// normal modes:
/// `H_d(Δ+J, K/2) + H_c(Δ-J, K/2) - 2K d†d c†c`.
///
/// With `keep_remainder` the counter-rotating cross term
/// `-(K/2)(d†d†cc + c†c†dd)` is included, which makes the result exactly
/// unitarily equivalent to the two-oscillator lab-frame Hamiltonian. Without
/// it this is the rotating-wave form.
pub fn two_kpo_normal_mode_hamiltonian(
    detuning: f64,
    coupling: f64,
    kerr: f64,
    dims: &FockDims,
    keep_remainder: bool,
) -> Result<DrivenHamiltonian> {
    if dims.modes() != 2 {
        return Err(Error::DimensionMismatch(
            "normal-mode form needs exactly two modes".into(),
        ));
    }
    let (dd, dc) = (dims.as_slice()[0], dims.as_slice()[1]);
    let d = embed(&destroy(dd)?, 0, dims)?;
    let c = embed(&destroy(dc)?, 1, dims)?;
    let dt = d.adjoint();
    let ct = c.adjoint();
    let nd = &dt * &d;
    let nc = &ct * &c;
    let kerr_d = &(&(&dt * &dt) * &d) * &d;
    let kerr_c = &(&(&ct * &ct) * &c) * &c;
    let mut h = &(&nd.scale(detuning + coupling) + &nc.scale(detuning - coupling))
        - &(&kerr_d + &kerr_c).scale(kerr / 2.0);
    h = &h - &(&nd * &nc).scale(2.0 * kerr);
    if keep_remainder {
        let pair = &(&(&(&dt * &dt) * &c) * &c) + &(&(&(&ct * &ct) * &d) * &d);
        h = &h - &pair.scale(kerr / 2.0);
    }
    // a² + b² = d² + c²
    let drive_d = &(&d * &d) + &(&dt * &dt);
    let drive_c = &(&c * &c) + &(&ct * &ct);
    DrivenHamiltonian::new(h, vec![drive_d, drive_c])?.verified()
}

/// Parameters of the transverse-field qubit annealer.
#[derive(Clone, Debug, PartialEq)]
pub struct QubitAnnealerParams {
    /// Ising cost matrix `C`, energy `Σ_{i<j} C_ij s_i s_j`.
    pub cost: DMatrix<f64>,
    pub epsilon_max: f64,
    pub duration: f64,
    /// σ_z dephasing rate γ per qubit.
    pub dephasing: f64,
}

/// Largest register the dense qubit builder accepts.
pub const MAX_QUBITS: usize = 12;

impl QubitAnnealerParams {
    pub fn new(
        cost: DMatrix<f64>,
        epsilon_max: f64,
        duration: f64,
        dephasing: f64,
    ) -> Result<Self> {
        let p = QubitAnnealerParams {
            cost,
            epsilon_max,
            duration,
            dephasing,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn qubits(&self) -> usize {
        self.cost.nrows()
    }

    pub fn schedule(&self) -> Result<DriveSchedule> {
        DriveSchedule::down(self.epsilon_max, self.duration)
    }

    pub fn validate(&self) -> Result<()> {
        check_symmetric_zero_diag(&self.cost, self.cost.nrows(), "cost")?;
        if !(self.dephasing >= 0.0 && self.dephasing.is_finite()) {
            return Err(Error::param("dephasing", "must be >= 0"));
        }
        DriveSchedule::down(self.epsilon_max, self.duration)?;
        Ok(())
    }
}

/// `H(t) = ε(t) Σ_j σ_j^x + Σ_{i<j} C_ij σ_i^z σ_j^z`; returns the Ising
/// part as the static term and the transverse field as the single drive.
pub fn qubit_annealer_hamiltonian(params: &QubitAnnealerParams) -> Result<DrivenHamiltonian> {
    params.validate()?;
    let n = params.qubits();
    if n > MAX_QUBITS {
        return Err(Error::Capacity(format!(
            "dense qubit annealer supports at most {MAX_QUBITS} qubits, got {n}"
        )));
    }
    if n == 0 {
        return Err(Error::param("cost", "at least one qubit is required"));
    }
    let dims = FockDims::qubits(n)?;
    let sz: Vec<Operator> = (0..n)
        .map(|i| embed(&sigma_z(), i, &dims))
        .collect::<Result<_>>()?;
    let mut h_ising = Operator::zeros(&dims);
    for i in 0..n {
        for j in i + 1..n {
            let c = params.cost[(i, j)];
            if c != 0.0 {
                h_ising = &h_ising + &(&sz[i] * &sz[j]).scale(c);
            }
        }
    }
    let mut h_x = Operator::zeros(&dims);
    for i in 0..n {
        h_x = &h_x + &embed(&sigma_x(), i, &dims)?;
    }
    DrivenHamiltonian::new(h_ising, vec![h_x])?.verified()
}

/// How the series chain of oscillators is closed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Shunt {
    /// Conventional inductor; ferromagnetic couplings only.
    Inductor { inductance: f64 },
    /// Large Josephson junction at half a flux quantum; acts as a negative
    /// inductor and gives anti-ferromagnetic couplings.
    Junction { josephson_energy: f64 },
}

/// Per-oscillator circuit parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct CircuitParams {
    pub charging_energy: Vec<f64>,
    pub josephson_energy: Vec<f64>,
    /// dc flux bias Φ_n (radians).
    pub flux_dc: Vec<f64>,
    /// ac flux modulation amplitude δΦ_n.
    pub flux_ac: Vec<f64>,
    pub shunt: Shunt,
    /// Detuning Δ chosen through the modulation frequency Ω_n = 2(ω_n - Δ).
    pub detuning: f64,
    pub loss: f64,
}

/// Quantities derived from [`CircuitParams`], one entry per oscillator.
#[derive(Clone, Debug, PartialEq)]
pub struct CircuitDerived {
    /// Natural frequency ω_n.
    pub frequency: Vec<f64>,
    /// Flux modulation frequency Ω_n = 2(ω_n - Δ).
    pub modulation_frequency: Vec<f64>,
    /// Mode impedance Z_n = 8 E_C / ω_n.
    pub impedance: Vec<f64>,
    /// Two-photon drive strength ε_n.
    pub drive: Vec<f64>,
    pub kerr: Vec<f64>,
    pub coupling: DMatrix<f64>,
}

impl CircuitParams {
    pub fn modes(&self) -> usize {
        self.charging_energy.len()
    }

    fn check(&self) -> Result<()> {
        let n = self.modes();
        if n == 0 {
            return Err(Error::param(
                "charging_energy",
                "at least one oscillator is required",
            ));
        }
        for (field, v) in [
            ("josephson_energy", &self.josephson_energy),
            ("flux_dc", &self.flux_dc),
            ("flux_ac", &self.flux_ac),
        ] {
            if v.len() != n {
                return Err(Error::param(field, format!("needs {n} entries")));
            }
        }
        for (k, (&ec, &ej)) in self
            .charging_energy
            .iter()
            .zip(&self.josephson_energy)
            .enumerate()
        {
            if !(ec > 0.0 && ej > 0.0) {
                return Err(Error::param("josephson_energy", "energies must be > 0"));
            }
            if ej / ec < 10.0 {
                warn!(
                    "oscillator {k}: E_J/E_C = {} is not in the transmon regime",
                    ej / ec
                );
            }
            if self.flux_dc[k].cos() <= 0.0 {
                return Err(Error::param("flux_dc", "cos(Φ_dc) must be > 0"));
            }
        }
        match self.shunt {
            Shunt::Inductor { inductance } if !(inductance > 0.0) => {
                return Err(Error::param("shunt", "inductance must be > 0"));
            }
            Shunt::Junction { josephson_energy } => {
                let min_ej = self
                    .josephson_energy
                    .iter()
                    .copied()
                    .fold(f64::INFINITY, f64::min);
                if !(josephson_energy > 0.0) || n as f64 * josephson_energy >= min_ej {
                    return Err(Error::Stability(format!(
                        "N E_J^(0) = {} must be below min E_J^(n) = {min_ej}",
                        n as f64 * josephson_energy
                    )));
                }
            }
            _ => {}
        }
        Ok(())
    }

    pub fn derive(&self) -> Result<CircuitDerived> {
        self.check()?;
        let n = self.modes();
        let frequency: Vec<f64> = (0..n)
            .map(|k| {
                4.0 * (self.charging_energy[k] * self.josephson_energy[k] * self.flux_dc[k].cos())
                    .sqrt()
            })
            .collect();
        let impedance: Vec<f64> = (0..n)
            .map(|k| 8.0 * self.charging_energy[k] / frequency[k])
            .collect();
        let drive = (0..n)
            .map(|k| {
                self.josephson_energy[k] / 4.0
                    * impedance[k]
                    * self.flux_dc[k].sin()
                    * self.flux_ac[k]
            })
            .collect();
        let kerr = self.charging_energy.iter().map(|ec| ec / 2.0).collect();
        let mut coupling = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    let zz = (impedance[i] * impedance[j]).sqrt();
                    coupling[(i, j)] = match self.shunt {
                        Shunt::Inductor { inductance } => zz / (2.0 * inductance),
                        Shunt::Junction { josephson_energy } => -josephson_energy / 2.0 * zz,
                    };
                }
            }
        }
        let modulation_frequency = frequency
            .iter()
            .map(|w| 2.0 * (w - self.detuning))
            .collect();
        Ok(CircuitDerived {
            frequency,
            modulation_frequency,
            impedance,
            drive,
            kerr,
            coupling,
        })
    }
}

/// Maps circuit parameters onto oscillator model parameters. The drive scale
/// is normalized so that the strongest oscillator has scale 1.
pub fn circuit_to_model(c: &CircuitParams) -> Result<KpoSystemParams> {
    let d = c.derive()?;
    let spread = d
        .frequency
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max)
        - d.frequency.iter().copied().fold(f64::INFINITY, f64::min);
    if spread > 1e-6 * d.frequency[0].abs() {
        warn!(
            "oscillators are not resonant (frequency spread {spread}); the model assumes they are"
        );
    }
    let max_drive = d.drive.iter().map(|e| e.abs()).fold(0.0, f64::max);
    let drive_scale = if max_drive > 0.0 {
        d.drive.iter().map(|e| e.abs() / max_drive).collect()
    } else {
        vec![0.0; c.modes()]
    };
    KpoSystemParams::new(c.detuning, d.kerr, c.loss, d.coupling)?.with_drive_scale(drive_scale)
}

/// Smallest-magnitude solution of `φ = r sin(N φ)`, `r = E_J^(0)/E_J^(n)`.
///
/// Zero is the only solution when `N r <= 1`; otherwise the positive root in
/// `(0, π/N)` is returned (its negative is also a solution).
pub fn shunt_equilibrium_phase(ratio: f64, n: usize) -> Result<f64> {
    if !(ratio > 0.0) || n == 0 {
        return Err(Error::param("ratio", "need ratio > 0 and N >= 1"));
    }
    let nf = n as f64;
    if nf * ratio <= 1.0 {
        return Ok(0.0);
    }
    let g = |phi: f64| ratio * (nf * phi).sin() - phi;
    let (mut lo, mut hi) = (0.0_f64, std::f64::consts::PI / nf);
    // g > 0 just above zero, g(π/N) < 0
    let mut probe = hi * 1e-9;
    while g(probe) <= 0.0 && probe < hi {
        probe *= 2.0;
    }
    lo = lo.max(probe.min(hi));
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-16 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}
