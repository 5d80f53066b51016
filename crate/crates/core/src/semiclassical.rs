//! Mean-field equations of motion of coupled Kerr parametric oscillators,
//! their dissipative bifurcation thresholds and the steady amplitude far
//! above threshold.
//!
//! Replacing every `a_n` by a complex number `α_n` gives
//!
//! ```text
//! i dα_n/dt = (Δ - 2 K_n |α_n|²) α_n + Σ_m J_nm α_m + 2 ε s_n α_n* - i (κ/2) α_n
//! ```
//!
//! with `s_n` the relative drive strength of mode `n`. For two modes this is
//! the usual pair of equations with `Σ_m J_nm α_m = J β`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::integrate::{Dopri5, Tolerances};
use crate::models::{DriveSchedule, KpoSystemParams};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Seed used by [`integrate_classical`] callers that have no preference.
pub const DEFAULT_PERTURBATION: f64 = 1e-4;

/// Classical amplitudes, one per mode.
#[derive(Clone, Debug, PartialEq)]
pub struct MeanFieldState {
    pub amplitudes: Vec<Complex64>,
}

impl MeanFieldState {
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.iter().any(|a| !a.is_finite()) {
            return Err(Error::param("amplitudes", "entries must be finite"));
        }
        Ok(MeanFieldState { amplitudes })
    }

    pub fn vacuum(modes: usize) -> Self {
        MeanFieldState {
            amplitudes: vec![Complex64::new(0.0, 0.0); modes],
        }
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes
            .iter()
            .map(|a| a.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

fn rhs_into(params: &KpoSystemParams, epsilon: f64, alpha: &[Complex64], out: &mut [Complex64]) {
    let j = &params.coupling;
    for n in 0..alpha.len() {
        let a = alpha[n];
        let mut h = (params.detuning - 2.0 * params.kerr[n] * a.norm_sqr()) * a
            + 2.0 * epsilon * params.drive_scale[n] * a.conj()
            - I * (0.5 * params.loss) * a;
        for (m, &b) in alpha.iter().enumerate() {
            if m != n {
                h += j[(n, m)] * b;
            }
        }
        out[n] = -I * h;
    }
}

/// Time derivative of the mean-field amplitudes at drive strength `epsilon`.
pub fn classical_rhs(
    state: &MeanFieldState,
    params: &KpoSystemParams,
    epsilon: f64,
) -> Result<MeanFieldState> {
    if state.amplitudes.len() != params.modes() {
        return Err(Error::DimensionMismatch(format!(
            "{} amplitudes for {} modes",
            state.amplitudes.len(),
            params.modes()
        )));
    }
    let mut out = vec![Complex64::new(0.0, 0.0); state.amplitudes.len()];
    rhs_into(params, epsilon, &state.amplitudes, &mut out);
    Ok(MeanFieldState { amplitudes: out })
}

/// Eigenvector of `J` for its largest eigenvalue, the softest normal mode.
pub fn soft_mode_vector(coupling: &DMatrix<f64>) -> Vec<f64> {
    let eig = coupling.clone().symmetric_eigen();
    let top = (0..eig.eigenvalues.len())
        .max_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]))
        .unwrap_or(0);
    let mut v: Vec<f64> = eig.eigenvectors.column(top).iter().copied().collect();
    // fix the overall sign so the first nonzero entry is positive
    if let Some(first) = v.iter().copied().find(|x| x.abs() > 1e-12) {
        if first < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
    v
}

/// Sampled mean-field trajectory.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassicalTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<MeanFieldState>,
}

impl ClassicalTrajectory {
    pub fn last(&self) -> &MeanFieldState {
        self.states
            .last()
            .expect("trajectory has at least one sample")
    }
}

/// Integrates the mean-field equations under the drive ramp.
///
/// The vacuum is a fixed point, so `perturbation` times the softest normal
/// mode (largest eigenvalue of `J`) is added to `initial` to break the
/// symmetry. `perturbation = 0` leaves a vacuum start at rest.
pub fn integrate_classical(
    params: &KpoSystemParams,
    schedule: &DriveSchedule,
    initial: &MeanFieldState,
    perturbation: f64,
    sample_times: &[f64],
) -> Result<ClassicalTrajectory> {
    params.validate()?;
    let n = params.modes();
    if initial.amplitudes.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{} amplitudes for {n} modes",
            initial.amplitudes.len()
        )));
    }
    if !(perturbation >= 0.0 && perturbation.is_finite()) {
        return Err(Error::param("perturbation", "must be >= 0"));
    }
    let mut y0 = initial.amplitudes.clone();
    if perturbation > 0.0 {
        for (y, v) in y0.iter_mut().zip(soft_mode_vector(&params.coupling)) {
            *y += perturbation * v;
        }
    }
    let kmin = params.kerr.iter().copied().fold(f64::INFINITY, f64::min);
    let limit = 10.0 * (schedule.epsilon_max / kmin).sqrt();

    let mut rhs = |t: f64, y: &[Complex64], dy: &mut [Complex64]| {
        rhs_into(params, schedule.epsilon(t), y, dy)
    };
    let tol = Tolerances {
        rtol: 1e-10,
        atol: 1e-12,
    };
    let mut stepper = Dopri5::new(tol, 0.0, &y0);
    let mut states = Vec::with_capacity(sample_times.len());
    let mut last = f64::NEG_INFINITY;
    for &t in sample_times {
        if t < 0.0 || t <= last {
            return Err(Error::param("sample_times", "must be increasing and >= 0"));
        }
        last = t;
        while stepper.t() < t {
            stepper.step(&mut rhs, t)?;
            if let Some(a) = stepper.y().iter().find(|a| !(a.norm() <= limit)) {
                return Err(Error::Instability(format!(
                    "|alpha| = {:.3e} exceeds {limit:.3e} at t = {}",
                    a.norm(),
                    stepper.t()
                )));
            }
        }
        states.push(MeanFieldState {
            amplitudes: stepper.y().to_vec(),
        });
    }
    Ok(ClassicalTrajectory {
        times: sample_times.to_vec(),
        states,
    })
}

/// Steady amplitude of a coupled pair far above threshold,
/// `α = e^{iφ} √[(√(4ε² - (κ/2)²) + Δ + |J|) / (2K)]` with
/// `φ = -½ atan[κ / √(16ε² - κ²)]`.
///
/// For the ferromagnetic sign the pair locks to `(α, α)`, otherwise to
/// `(α, -α)`.
pub fn steady_amplitude(
    detuning: f64,
    coupling: f64,
    kerr: f64,
    epsilon: f64,
    kappa: f64,
) -> Result<Complex64> {
    if !(kerr > 0.0) {
        return Err(Error::Domain(format!("Kerr strength {kerr} must be > 0")));
    }
    let drive2 = 4.0 * epsilon * epsilon - 0.25 * kappa * kappa;
    if !(drive2 > 0.0) {
        return Err(Error::Domain(format!(
            "4ε² - (κ/2)² = {drive2} is not positive"
        )));
    }
    let radicand = drive2.sqrt() + detuning + coupling.abs();
    if !(radicand > 0.0) {
        return Err(Error::Domain(format!(
            "ε = {epsilon} is below threshold (radicand {radicand})"
        )));
    }
    let phi = -0.5 * (kappa / (16.0 * epsilon * epsilon - kappa * kappa).sqrt()).atan();
    Ok(Complex64::from_polar((radicand / (2.0 * kerr)).sqrt(), phi))
}

/// Bifurcation thresholds of the soft and hard normal modes of a pair.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct ThresholdPair {
    pub soft: f64,
    pub hard: f64,
}

fn threshold(shifted_detuning: f64, kappa: f64) -> f64 {
    0.5 * (shifted_detuning.powi(2) + (0.5 * kappa).powi(2)).sqrt()
}

/// `ε_soft/hard = ½ √((Δ ± |J|)² + (κ/2)²)`, with `soft ≤ hard`.
pub fn bifurcation_thresholds(detuning: f64, coupling: f64, kappa: f64) -> ThresholdPair {
    let a = threshold(detuning + coupling.abs(), kappa);
    let b = threshold(detuning - coupling.abs(), kappa);
    ThresholdPair {
        soft: a.min(b),
        hard: a.max(b),
    }
}

/// Threshold of every normal mode of `J`, `½ √((Δ + λ_k)² + (κ/2)²)`,
/// sorted ascending. Exact for identical oscillators with unit drive scale.
pub fn mode_thresholds(detuning: f64, coupling: &DMatrix<f64>, kappa: f64) -> Vec<f64> {
    let mut out: Vec<f64> = coupling
        .clone()
        .symmetric_eigenvalues()
        .iter()
        .map(|&l| threshold(detuning + l, kappa))
        .collect();
    out.sort_by(f64::total_cmp);
    out
}

/// Mean-field photon number per mode at drive `epsilon`, estimated with the
/// soft-mode shift `λ_max(J)` in place of `|J|` and the weakest Kerr
/// strength. Zero below the soft threshold.
pub fn predicted_photon_number(params: &KpoSystemParams, epsilon: f64) -> f64 {
    let kmin = params.kerr.iter().copied().fold(f64::INFINITY, f64::min);
    let smax = params.drive_scale.iter().copied().fold(0.0, f64::max);
    let eps = epsilon * smax;
    let drive2 = 4.0 * eps * eps - 0.25 * params.loss * params.loss;
    if drive2 <= 0.0 {
        return 0.0;
    }
    ((drive2.sqrt() + params.detuning + params.soft_mode_coupling()) / (2.0 * kmin)).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(kappa: f64) -> KpoSystemParams {
        KpoSystemParams::pair(-1.0, -0.5, 0.7, kappa).unwrap()
    }

    #[test]
    fn vacuum_is_fixed() {
        let d = classical_rhs(&MeanFieldState::vacuum(2), &pair(0.1), 1.3).unwrap();
        assert!(d.norm() == 0.0);
    }

    #[test]
    fn fig2_steady_amplitude() {
        let a = steady_amplitude(-1.0, 0.5, 0.7, 2.0, 0.0).unwrap();
        assert!((a.norm_sqr() - 2.5).abs() < 1e-12);
        assert_eq!(a.arg(), 0.0);
        let phi = steady_amplitude(-1.0, 0.5, 0.7, 2.0, 0.01).unwrap().arg();
        let expected = -0.5 * (0.01 / (64.0_f64 - 1e-4).sqrt()).atan();
        assert!((phi - expected).abs() < 1e-15);
        assert!((phi + 6.25e-4).abs() < 1e-6);
    }

    #[test]
    fn steady_amplitude_is_stationary() {
        let kappa = 0.3;
        let a = steady_amplitude(-1.0, -0.5, 0.7, 2.0, kappa).unwrap();
        let s = MeanFieldState::new(vec![a, -a]).unwrap();
        let d = classical_rhs(&s, &pair(kappa), 2.0).unwrap();
        assert!(d.norm() < 1e-12, "{}", d.norm());
    }

    #[test]
    fn below_threshold_is_a_domain_error() {
        assert!(matches!(
            steady_amplitude(-1.0, 0.5, 0.7, 0.2, 0.0),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            steady_amplitude(-1.0, 0.5, 0.7, 0.01, 0.1),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn thresholds_of_fig2_pair() {
        let t = bifurcation_thresholds(-1.0, -0.5, 0.0);
        assert!((t.soft - 0.25).abs() < 1e-15);
        assert!((t.hard - 0.75).abs() < 1e-15);
        let m = mode_thresholds(-1.0, &pair(0.0).coupling, 0.0);
        assert!((m[0] - 0.25).abs() < 1e-12 && (m[1] - 0.75).abs() < 1e-12);
    }

    #[test]
    fn free_rotation() {
        let p = KpoSystemParams::new(-1.3, vec![1e-300], 0.0, DMatrix::zeros(1, 1)).unwrap();
        // ε_max is irrelevant once the drive scale is zero
        let p = p.with_drive_scale(vec![0.0]).unwrap();
        let sched = DriveSchedule::up(1.0, 5.0).unwrap();
        let a0 = Complex64::new(1e-3, 0.0);
        let out = integrate_classical(
            &p,
            &sched,
            &MeanFieldState::new(vec![a0]).unwrap(),
            0.0,
            &[5.0],
        )
        .unwrap();
        let exact = a0 * Complex64::new(0.0, 1.3 * 5.0).exp();
        assert!((out.last().amplitudes[0] - exact).norm() < 1e-8 * a0.norm());
    }
}
