use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::generator::{ActiveRows, Generator, Live};
use super::magnus::Magnus;
use super::{
    check_observables, leakage_mask, EvolveOptions, IntegrationStats, JumpChannel, JumpEvent,
    Method, Observable, Series, TrajectoryRecord,
};
use crate::error::{Error, Result};
use crate::fockspace::StateVector;
use crate::integrate::Dopri5;
use crate::models::{DriveSchedule, DrivenHamiltonian};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Everything needed to run one trajectory except the seed.
#[derive(Clone, Debug)]
pub struct TrajectorySpec {
    pub hamiltonian: DrivenHamiltonian,
    pub schedule: DriveSchedule,
    pub channels: Vec<JumpChannel>,
    pub initial: StateVector,
    pub sample_times: Vec<f64>,
    pub observables: Vec<Observable>,
    pub options: EvolveOptions,
}

impl TrajectorySpec {
    pub fn validate(&self) -> Result<()> {
        let dims = self.hamiltonian.dims();
        if self.initial.dims() != dims {
            return Err(Error::DimensionMismatch(
                "initial state and Hamiltonian spaces differ".into(),
            ));
        }
        for ch in &self.channels {
            ch.op.check_same_space(dims)?;
            if !(ch.rate >= 0.0) {
                return Err(Error::param("rate", "must be >= 0"));
            }
        }
        check_observables(&self.observables, dims)?;
        let t_end = self.schedule.duration;
        let mut last = f64::NEG_INFINITY;
        for &t in &self.sample_times {
            if !(0.0..=t_end).contains(&t) {
                return Err(Error::param(
                    "sample_times",
                    format!("{t} outside [0, {t_end}]"),
                ));
            }
            if t <= last {
                return Err(Error::param("sample_times", "must be strictly increasing"));
            }
            last = t;
        }
        Ok(())
    }

    pub(crate) fn prepare(&self) -> Result<Prepared<'_>> {
        self.validate()?;
        if let Method::MagnusChebyshev { max_step } = self.options.method {
            if !(max_step > 0.0 && max_step.is_finite()) {
                return Err(Error::param("max_step", "must be > 0"));
            }
        }
        let active: Vec<usize> = self
            .channels
            .iter()
            .enumerate()
            .filter(|(_, c)| c.rate > 0.0)
            .map(|(k, _)| k)
            .collect();
        Ok(Prepared {
            spec: self,
            generator: Generator::new(
                &self.hamiltonian,
                &self.schedule,
                &self.channels,
                self.options.spectral_shift && self.options.method == Method::Dopri5,
            ),
            active,
            leakage: leakage_mask(self.hamiltonian.dims()),
        })
    }
}

pub(crate) struct Prepared<'a> {
    spec: &'a TrajectorySpec,
    generator: Generator,
    active: Vec<usize>,
    leakage: Vec<usize>,
}

enum Stepper {
    Rk(Dopri5, ActiveRows),
    Magnus(Magnus),
}

impl Stepper {
    fn t(&self) -> f64 {
        match self {
            Stepper::Rk(s, _) => s.t(),
            Stepper::Magnus(s) => s.t(),
        }
    }

    fn y(&self) -> &[Complex64] {
        match self {
            Stepper::Rk(s, _) => s.y(),
            Stepper::Magnus(s) => s.y(),
        }
    }

    fn last_step_start(&self) -> f64 {
        match self {
            Stepper::Rk(s, _) => s.last_step_start(),
            Stepper::Magnus(s) => s.last_step_start(),
        }
    }

    fn step(&mut self, gen: &Generator, t_end: f64) -> Result<()> {
        match self {
            Stepper::Rk(s, active) => s.step(&mut Live { gen, active }, t_end),
            Stepper::Magnus(s) => s.step(gen, t_end),
        }
    }

    fn interpolate(&mut self, gen: &Generator, t: f64, out: &mut [Complex64]) -> Result<()> {
        match self {
            Stepper::Rk(s, _) => {
                s.interpolate(t, out);
                Ok(())
            }
            Stepper::Magnus(s) => s.interpolate(gen, t, out),
        }
    }

    fn reset(&mut self, gen: &Generator, t: f64, y: &[Complex64]) {
        match self {
            Stepper::Rk(s, active) => {
                *active = gen.active_rows(y);
                s.reset(t, y)
            }
            Stepper::Magnus(s) => s.reset(gen, t, y),
        }
    }

    fn stats(&self) -> IntegrationStats {
        match self {
            Stepper::Rk(s, _) => IntegrationStats {
                accepted_steps: s.accepted,
                rejected_steps: s.rejected,
                rhs_evaluations: s.evaluations,
            },
            Stepper::Magnus(s) => IntegrationStats {
                accepted_steps: s.steps,
                rejected_steps: 0,
                rhs_evaluations: s.matvecs,
            },
        }
    }
}

fn norm_sqr(y: &[Complex64]) -> f64 {
    y.iter().map(|a| a.norm_sqr()).sum()
}

impl Prepared<'_> {
    /// No channel has a positive rate, so every seed gives the same run.
    pub(crate) fn is_deterministic(&self) -> bool {
        self.active.is_empty()
    }

    fn snapshot(&self, y: &[Complex64]) -> Vec<Complex64> {
        let n2 = norm_sqr(y);
        self.spec
            .observables
            .iter()
            .map(|o| o.eval(y, n2))
            .collect()
    }

    fn leakage_of(&self, y: &[Complex64]) -> f64 {
        if self.leakage.is_empty() {
            return 0.0;
        }
        self.leakage.iter().map(|&i| y[i].norm_sqr()).sum::<f64>() / norm_sqr(y)
    }

    pub(crate) fn run(&self, seed: u64) -> Result<TrajectoryRecord> {
        let spec = self.spec;
        let opts = &spec.options;
        let t_end = spec.schedule.duration;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let stochastic = !self.active.is_empty();
        let psi0 = spec.initial.normalized()?;
        let dims = psi0.dims().clone();

        let mut series: Vec<Series> = spec
            .observables
            .iter()
            .map(|o| Series {
                name: o.name.clone(),
                real: o.is_real(),
                values: Vec::with_capacity(spec.sample_times.len()),
            })
            .collect();
        let mut jumps = Vec::new();
        let mut max_leakage: f64 = 0.0;
        let record_sample = |y: &[Complex64], series: &mut Vec<Series>, max_leakage: &mut f64| {
            let n2 = norm_sqr(y);
            for (s, o) in series.iter_mut().zip(&spec.observables) {
                s.values.push(o.eval(y, n2));
            }
            *max_leakage = max_leakage.max(self.leakage_of(y));
        };

        let mut threshold = if stochastic { rng.gen::<f64>() } else { 0.0 };
        let mut stepper = match opts.method {
            Method::Dopri5 => Stepper::Rk(
                Dopri5::new(opts.tolerances, 0.0, psi0.amplitudes()),
                self.generator.active_rows(psi0.amplitudes()),
            ),
            Method::MagnusChebyshev { max_step } => Stepper::Magnus(Magnus::new(
                &self.generator,
                0.0,
                psi0.amplitudes(),
                max_step,
            )),
        };
        let mut next_sample = 0;
        while next_sample < spec.sample_times.len() && spec.sample_times[next_sample] <= 0.0 {
            record_sample(psi0.amplitudes(), &mut series, &mut max_leakage);
            next_sample += 1;
        }
        let gen = &self.generator;
        let mut buf = vec![ZERO; dims.total()];
        let mut jumped = vec![ZERO; dims.total()];

        while stepper.t() < t_end {
            let target = spec
                .sample_times
                .get(next_sample)
                .copied()
                .unwrap_or(t_end)
                .min(t_end);
            stepper.step(gen, target)?;
            let n2 = norm_sqr(stepper.y());
            if !n2.is_finite() || n2 < 1e-300 {
                return Err(Error::IntegratorStep {
                    time: stepper.t(),
                    reason: format!("state norm underflow ({n2:.3e})"),
                });
            }
            if stochastic && n2 <= threshold {
                // bracket the crossing on the dense output
                let (mut lo, mut hi) = (stepper.last_step_start(), stepper.t());
                while hi - lo > opts.jump_time_resolution {
                    let mid = 0.5 * (lo + hi);
                    stepper.interpolate(gen, mid, &mut buf)?;
                    if norm_sqr(&buf) > threshold {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                let t_jump = hi;
                stepper.interpolate(gen, t_jump, &mut buf)?;
                let before = if opts.jump_snapshots {
                    self.snapshot(&buf)
                } else {
                    Vec::new()
                };

                let mut weights = Vec::with_capacity(self.active.len());
                for &k in &self.active {
                    let ch = &spec.channels[k];
                    ch.op.matrix().mul_vec_into(&buf, &mut jumped);
                    weights.push(ch.rate * norm_sqr(&jumped));
                }
                let total: f64 = weights.iter().sum();
                if !(total > 0.0) {
                    return Err(Error::IntegratorStep {
                        time: t_jump,
                        reason: "norm decayed but no channel can act on the state".into(),
                    });
                }
                let mut u = rng.gen::<f64>() * total;
                let mut pick = self.active.len() - 1;
                for (slot, w) in weights.iter().enumerate() {
                    if u < *w {
                        pick = slot;
                        break;
                    }
                    u -= w;
                }
                let channel = self.active[pick];
                spec.channels[channel]
                    .op
                    .matrix()
                    .mul_vec_into(&buf, &mut jumped);
                let norm = norm_sqr(&jumped).sqrt();
                jumped.iter_mut().for_each(|a| *a /= norm);
                let after = if opts.jump_snapshots {
                    self.snapshot(&jumped)
                } else {
                    Vec::new()
                };
                jumps.push(JumpEvent {
                    time: t_jump,
                    channel,
                    before,
                    after,
                });
                threshold = rng.gen::<f64>();
                stepper.reset(gen, t_jump, &jumped);
                continue;
            }
            if next_sample < spec.sample_times.len()
                && stepper.t() >= spec.sample_times[next_sample]
            {
                record_sample(stepper.y(), &mut series, &mut max_leakage);
                next_sample += 1;
            }
        }

        let phase = self.generator.phase_correction(t_end);
        let n = norm_sqr(stepper.y()).sqrt();
        let amps = stepper.y().iter().map(|a| a * phase / n).collect();
        let final_state = StateVector::new(dims, amps)?;
        max_leakage = max_leakage.max(self.leakage_of(final_state.amplitudes()));
        Ok(TrajectoryRecord {
            sample_times: spec.sample_times.clone(),
            observables: series,
            jumps,
            final_state,
            seed,
            max_leakage,
            stats: stepper.stats(),
        })
    }
}

/// Solves `i dψ/dt = H(t) ψ` and samples the observables.
pub fn evolve_coherent(
    hamiltonian: &DrivenHamiltonian,
    schedule: &DriveSchedule,
    initial: &StateVector,
    sample_times: &[f64],
    observables: &[Observable],
    options: EvolveOptions,
) -> Result<TrajectoryRecord> {
    let spec = TrajectorySpec {
        hamiltonian: hamiltonian.clone(),
        schedule: *schedule,
        channels: Vec::new(),
        initial: initial.clone(),
        sample_times: sample_times.to_vec(),
        observables: observables.to_vec(),
        options,
    };
    spec.prepare()?.run(0)
}

/// One Monte-Carlo wave-function trajectory.
///
/// Between jumps the state follows `H_NH = H(t) - (i/2) Σ_c r_c L_c†L_c`
/// without renormalization. A jump fires when `‖ψ‖²` decays to a uniform
/// random threshold; the channel is chosen with probability
/// `∝ r_c ‖L_c ψ‖²`, the state is replaced by `L_c ψ / ‖L_c ψ‖` and a new
/// threshold is drawn. The run is a pure function of `(spec, seed)`.
pub fn mcwf_trajectory(spec: &TrajectorySpec, seed: u64) -> Result<TrajectoryRecord> {
    spec.prepare()?.run(seed)
}
