//! Adaptive Dormand–Prince 5(4) integrator for complex vector ODEs with
//! cubic Hermite dense output.
//!
//! The stepper is driven one accepted step at a time so callers can inspect
//! the state between steps (jump detection, sampling) and restart it after
//! modifying the state.

use num_complex::Complex64;

use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

// Butcher tableau
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
// fifth minus fourth order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

// step-size control
const SAFETY: f64 = 0.9;
const BETA: f64 = 0.04;
const MAX_GROWTH: f64 = 10.0;
const MAX_SHRINK: f64 = 0.2;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            rtol: 1e-8,
            atol: 1e-10,
        }
    }
}

/// Right-hand side `dy/dt = f(t, y)`.
pub trait Rhs {
    fn eval(&mut self, t: f64, y: &[Complex64], dy: &mut [Complex64]);
}

impl<F: FnMut(f64, &[Complex64], &mut [Complex64])> Rhs for F {
    fn eval(&mut self, t: f64, y: &[Complex64], dy: &mut [Complex64]) {
        self(t, y, dy)
    }
}

#[derive(Clone, Debug)]
pub struct Dopri5 {
    tol: Tolerances,
    t: f64,
    h: f64,
    y: Vec<Complex64>,
    f: Vec<Complex64>,
    t_prev: f64,
    y_prev: Vec<Complex64>,
    f_prev: Vec<Complex64>,
    k: [Vec<Complex64>; 5],
    y_new: Vec<Complex64>,
    tmp: Vec<Complex64>,
    err_prev: f64,
    fresh: bool,
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

impl Dopri5 {
    pub fn new(tol: Tolerances, t0: f64, y0: &[Complex64]) -> Self {
        let n = y0.len();
        let zeros = || vec![ZERO; n];
        Dopri5 {
            tol,
            t: t0,
            h: 0.0,
            y: y0.to_vec(),
            f: zeros(),
            t_prev: t0,
            y_prev: y0.to_vec(),
            f_prev: zeros(),
            k: [zeros(), zeros(), zeros(), zeros(), zeros()],
            y_new: zeros(),
            tmp: zeros(),
            err_prev: 1e-4,
            fresh: true,
            accepted: 0,
            rejected: 0,
            evaluations: 0,
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

    pub fn step_size(&self) -> f64 {
        self.h
    }

    /// Restarts from `(t, y)`, keeping the current step-size estimate.
    pub fn reset(&mut self, t: f64, y: &[Complex64]) {
        self.t = t;
        self.t_prev = t;
        self.y.copy_from_slice(y);
        self.y_prev.copy_from_slice(y);
        self.fresh = true;
    }

    fn initial_step(&mut self, rhs: &mut impl Rhs, span: f64) -> f64 {
        let n = self.y.len() as f64;
        let mut d0 = 0.0;
        let mut d1 = 0.0;
        for (y, f) in self.y.iter().zip(&self.f) {
            let sc = self.tol.atol + self.tol.rtol * y.norm();
            d0 += (y.norm() / sc).powi(2);
            d1 += (f.norm() / sc).powi(2);
        }
        let (d0, d1) = ((d0 / n).sqrt(), (d1 / n).sqrt());
        let h0 = if d0 < 1e-5 || d1 < 1e-5 {
            1e-6
        } else {
            0.01 * d0 / d1
        };
        let h0 = h0.min(span);
        for i in 0..self.y.len() {
            self.tmp[i] = self.y[i] + self.f[i] * h0;
        }
        rhs.eval(self.t + h0, &self.tmp, &mut self.k[0]);
        self.evaluations += 1;
        let mut d2 = 0.0;
        for i in 0..self.y.len() {
            let sc = self.tol.atol + self.tol.rtol * self.y[i].norm();
            d2 += ((self.k[0][i] - self.f[i]).norm() / sc).powi(2);
        }
        let d2 = (d2 / n).sqrt() / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        (100.0 * h0).min(h1).min(span)
    }

    /// Advances by one accepted step without passing `t_end`.
    pub fn step(&mut self, rhs: &mut impl Rhs, t_end: f64) -> Result<()> {
        let span = t_end - self.t;
        if span <= 0.0 {
            return Err(Error::IntegratorStep {
                time: self.t,
                reason: format!("target {t_end} is not ahead of the current time"),
            });
        }
        if self.fresh {
            rhs.eval(self.t, &self.y, &mut self.f);
            self.evaluations += 1;
            if self.h <= 0.0 {
                self.h = self.initial_step(rhs, span);
            }
            self.fresh = false;
        }
        let n = self.y.len();
        let mut rejected_here = false;
        loop {
            let mut h = self.h.min(span);
            // land exactly on t_end when within a hair of it
            if span - h < 1e-12 * span.max(1.0) {
                h = span;
            }
            if h <= 1e-14 * self.t.abs().max(1.0) {
                return Err(Error::Convergence {
                    time: self.t,
                    reason: format!("step size underflow (h = {h:.3e})"),
                });
            }
            let t = self.t;
            let [k2, k3, k4, k5, k6] = &mut self.k;
            let (y, f, tmp) = (&self.y, &self.f, &mut self.tmp);
            for i in 0..n {
                tmp[i] = y[i] + f[i] * (h * A21);
            }
            rhs.eval(t + C2 * h, tmp, k2);
            for i in 0..n {
                tmp[i] = y[i] + (f[i] * A31 + k2[i] * A32) * h;
            }
            rhs.eval(t + C3 * h, tmp, k3);
            for i in 0..n {
                tmp[i] = y[i] + (f[i] * A41 + k2[i] * A42 + k3[i] * A43) * h;
            }
            rhs.eval(t + C4 * h, tmp, k4);
            for i in 0..n {
                tmp[i] = y[i] + (f[i] * A51 + k2[i] * A52 + k3[i] * A53 + k4[i] * A54) * h;
            }
            rhs.eval(t + C5 * h, tmp, k5);
            for i in 0..n {
                tmp[i] =
                    y[i] + (f[i] * A61 + k2[i] * A62 + k3[i] * A63 + k4[i] * A64 + k5[i] * A65) * h;
            }
            rhs.eval(t + h, tmp, k6);
            let y_new = &mut self.y_new;
            for i in 0..n {
                y_new[i] =
                    y[i] + (f[i] * A71 + k3[i] * A73 + k4[i] * A74 + k5[i] * A75 + k6[i] * A76) * h;
            }
            // k2 is free now; reuse it for the FSAL stage
            rhs.eval(t + h, y_new, k2);
            self.evaluations += 6;
            let mut acc = 0.0;
            for i in 0..n {
                let e =
                    (f[i] * E1 + k3[i] * E3 + k4[i] * E4 + k5[i] * E5 + k6[i] * E6 + k2[i] * E7)
                        * h;
                let w = self.tol.atol + self.tol.rtol * y[i].norm().max(y_new[i].norm());
                acc += e.norm_sqr() / (w * w);
            }
            let err = (acc / n as f64).sqrt();
            if !err.is_finite() {
                return Err(Error::IntegratorStep {
                    time: t,
                    reason: "non-finite error estimate".into(),
                });
            }
            let fac11 = err.powf(0.2 - 0.75 * BETA);
            if err <= 1.0 {
                let mut fac = fac11 / self.err_prev.powf(BETA) / SAFETY;
                fac = fac.clamp(1.0 / MAX_GROWTH, 1.0 / MAX_SHRINK);
                let mut h_new = h / fac;
                if rejected_here {
                    h_new = h_new.min(h);
                }
                self.err_prev = err.max(1e-4);
                self.t_prev = t;
                std::mem::swap(&mut self.y_prev, &mut self.y);
                std::mem::swap(&mut self.y, &mut self.y_new);
                std::mem::swap(&mut self.f_prev, &mut self.f);
                std::mem::swap(&mut self.f, &mut self.k[0]);
                self.t = if h == span { t_end } else { t + h };
                // keep the step estimate unless this step was truncated to hit t_end
                if h >= self.h || h_new < self.h {
                    self.h = h_new;
                }
                self.accepted += 1;
                return Ok(());
            }
            self.rejected += 1;
            rejected_here = true;
            self.h = h / (fac11 / SAFETY).min(1.0 / MAX_SHRINK);
        }
    }

    /// Dense output on the last accepted step; `t` must lie in
    /// `[last_step_start, t]`.
    pub fn interpolate(&self, t: f64, out: &mut [Complex64]) {
        let h = self.t - self.t_prev;
        if h <= 0.0 {
            out.copy_from_slice(&self.y);
            return;
        }
        let th = ((t - self.t_prev) / h).clamp(0.0, 1.0);
        let a = 1.0 - th;
        let g = th * (th - 1.0);
        for i in 0..out.len() {
            let y0 = self.y_prev[i];
            let y1 = self.y[i];
            let corr = (y1 - y0) * (1.0 - 2.0 * th)
                + self.f_prev[i] * ((th - 1.0) * h)
                + self.f[i] * (th * h);
            out[i] = y0 * a + y1 * th + corr * g;
        }
    }
}

/// Integrates from `t0` to each of `times` (ascending, `>= t0`) and returns
/// the states there.
pub fn integrate_to(
    rhs: &mut impl Rhs,
    tol: Tolerances,
    t0: f64,
    y0: &[Complex64],
    times: &[f64],
) -> Result<Vec<Vec<Complex64>>> {
    let mut stepper = Dopri5::new(tol, t0, y0);
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        while stepper.t() < t {
            stepper.step(rhs, t)?;
        }
        out.push(stepper.y().to_vec());
    }
    Ok(out)
}
