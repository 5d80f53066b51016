use num_complex::Complex64;

use super::generator::{ActiveRows, Generator, Values};
use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Truncation threshold of the Chebyshev series, relative to `‖ψ‖`.
const SERIES_TOL: f64 = 1e-13;

/// `J_0(x) .. J_kmax(x)` for `x ≥ 0` by Miller's downward recurrence,
/// normalized with `J_0 + 2 Σ J_2k = 1`.
pub(crate) fn bessel_j_sequence(x: f64, kmax: usize) -> Vec<f64> {
    let mut out = vec![0.0; kmax + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let top = (kmax as f64).max(x);
    let mut start = (top + 30.0 + (40.0 * top).sqrt()) as usize;
    start += start % 2;
    let (mut next, mut cur) = (0.0_f64, 1e-30_f64);
    let mut norm = 0.0;
    for k in (1..=start).rev() {
        let prev = 2.0 * k as f64 / x * cur - next;
        next = cur;
        cur = prev;
        // `cur` now holds J_{k-1} up to scale
        if k - 1 <= kmax {
            out[k - 1] = cur;
        }
        if (k - 1) % 2 == 0 && k > 1 {
            norm += 2.0 * cur;
        }
        if cur.abs() > 1e250 {
            cur *= 1e-250;
            next *= 1e-250;
            norm *= 1e-250;
            out.iter_mut().for_each(|v| *v *= 1e-250);
        }
    }
    norm += cur;
    out.iter_mut().for_each(|v| *v /= norm);
    out
}

/// Applies `exp(-i τ H_eff(ε))` in place with a Chebyshev expansion over a
/// Gershgorin enclosure of the spectrum. Returns the number of matrix-vector
/// products used.
pub(crate) fn chebyshev_exp(
    gen: &Generator,
    active: &ActiveRows,
    eps: f64,
    tau: f64,
    y: &mut [Complex64],
    work: &mut Workspace,
) -> Result<usize> {
    if tau == 0.0 {
        return Ok(0);
    }
    let b = gen.bounds(eps, active);
    let centre = 0.5 * (b.lo + b.hi);
    let radius = (0.5 * (b.hi - b.lo)).max(1e-12) * (1.0 + 1e-9);
    // Bernstein ellipse through the damped strip below [-1, 1]
    let delta = b.damping / radius;
    let rho = 1.0 + delta + (delta * (2.0 + delta)).sqrt();
    let x = radius * tau;

    let mut kmax = (1.5 * x + 40.0) as usize;
    let (coeffs, terms) = loop {
        let j = bessel_j_sequence(x, kmax);
        let mut last = None;
        let mut growth = 1.0;
        for (k, v) in j.iter().enumerate() {
            if 2.0 * v.abs() * growth > SERIES_TOL {
                last = Some(k);
            }
            growth *= rho;
        }
        match last {
            Some(k) if k + 5 < kmax => break (j, k + 1),
            _ if kmax > 1_000_000 => {
                return Err(Error::Convergence {
                    time: tau,
                    reason: "Chebyshev series does not converge".into(),
                })
            }
            _ => kmax *= 2,
        }
    };

    let norm: f64 = y.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Ok(0);
    }
    let Workspace {
        vectors: [prev, cur],
        values,
    } = work;
    let n = y.len();
    prev.resize(n, ZERO);
    cur.resize(n, ZERO);
    prev.copy_from_slice(y);
    // 2 H̃ with H̃ = (H - centre) / radius mapping the spectrum into [-1, 1]
    let op = gen.assemble(eps, centre, 2.0 / radius, active, std::mem::take(values));
    op.apply(prev, cur);
    cur.iter_mut().for_each(|a| *a *= 0.5);
    let mut matvecs = 1;
    let mut phase = Complex64::new(0.0, -1.0);
    let c0 = Complex64::new(coeffs[0], 0.0);
    let c1 = phase * 2.0 * coeffs[1];
    for ((o, p), c) in y.iter_mut().zip(prev.iter()).zip(cur.iter()) {
        *o = c0 * p + c1 * c;
    }
    for &jk in &coeffs[2..terms] {
        phase *= Complex64::new(0.0, -1.0);
        op.recurrence(cur, prev, y, phase * 2.0 * jk);
        matvecs += 1;
        std::mem::swap(prev, cur);
    }
    *values = op.into_values();
    let rot = Complex64::new(0.0, -centre * tau).exp();
    y.iter_mut().for_each(|a| *a *= rot);
    Ok(matvecs)
}

#[derive(Default)]
pub(crate) struct Workspace {
    vectors: [Vec<Complex64>; 2],
    values: Values,
}

/// Fourth-order commutator-free Magnus integrator with Chebyshev
/// exponentials. Step sizes are fixed up to landing on requested times.
pub(crate) struct Magnus {
    t: f64,
    y: Vec<Complex64>,
    t_prev: f64,
    y_prev: Vec<Complex64>,
    max_step: f64,
    work: Workspace,
    active: ActiveRows,
    pub steps: usize,
    pub matvecs: usize,
}

const SQRT3_6: f64 = 0.288_675_134_594_812_9;
const ALPHA1: f64 = 0.25 + SQRT3_6;
const ALPHA2: f64 = 0.25 - SQRT3_6;

impl Magnus {
    pub fn new(gen: &Generator, t0: f64, y0: &[Complex64], max_step: f64) -> Self {
        Magnus {
            active: gen.active_rows(y0),
            t: t0,
            y: y0.to_vec(),
            t_prev: t0,
            y_prev: y0.to_vec(),
            max_step,
            work: Workspace::default(),
            steps: 0,
            matvecs: 0,
        }
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn y(&self) -> &[Complex64] {
        &self.y
    }

    pub fn last_step_start(&self) -> f64 {
        self.t_prev
    }

    pub fn reset(&mut self, gen: &Generator, t: f64, y: &[Complex64]) {
        self.active = gen.active_rows(y);
        self.t = t;
        self.t_prev = t;
        self.y.copy_from_slice(y);
        self.y_prev.copy_from_slice(y);
    }

    fn propagate(
        gen: &Generator,
        active: &ActiveRows,
        t: f64,
        h: f64,
        y: &mut [Complex64],
        work: &mut Workspace,
    ) -> Result<usize> {
        let sched = gen.schedule();
        let e1 = sched.epsilon(t + (0.5 - SQRT3_6) * h);
        let e2 = sched.epsilon(t + (0.5 + SQRT3_6) * h);
        let first = 2.0 * (ALPHA1 * e1 + ALPHA2 * e2);
        let second = 2.0 * (ALPHA2 * e1 + ALPHA1 * e2);
        Ok(chebyshev_exp(gen, active, first, 0.5 * h, y, work)?
            + chebyshev_exp(gen, active, second, 0.5 * h, y, work)?)
    }

    /// Advances by at most `max_step`, landing exactly on `t_end`.
    pub fn step(&mut self, gen: &Generator, t_end: f64) -> Result<()> {
        let h = (t_end - self.t).min(self.max_step);
        if h <= 0.0 {
            return Ok(());
        }
        self.t_prev = self.t;
        self.y_prev.copy_from_slice(&self.y);
        self.matvecs += Self::propagate(gen, &self.active, self.t, h, &mut self.y, &mut self.work)?;
        self.t = if t_end - self.t <= self.max_step {
            t_end
        } else {
            self.t + h
        };
        self.steps += 1;
        if self.y.iter().any(|a| !a.is_finite()) {
            return Err(Error::IntegratorStep {
                time: self.t,
                reason: "non-finite amplitudes".into(),
            });
        }
        Ok(())
    }

    /// State at `t` inside the last step, by re-propagating from its start.
    pub fn interpolate(&mut self, gen: &Generator, t: f64, out: &mut [Complex64]) -> Result<()> {
        out.copy_from_slice(&self.y_prev);
        self.matvecs += Self::propagate(
            gen,
            &self.active,
            self.t_prev,
            t - self.t_prev,
            out,
            &mut self.work,
        )?;
        Ok(())
    }
}
