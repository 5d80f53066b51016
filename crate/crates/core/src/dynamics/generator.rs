use num_complex::Complex64;

use crate::dynamics::JumpChannel;
use crate::integrate::Rhs;
use crate::models::{DriveSchedule, DrivenHamiltonian};
use crate::sparse::CsrMatrix;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const MINUS_I: Complex64 = Complex64::new(0.0, -1.0);

/// Off-diagonal values; real storage cuts the memory traffic of the
/// products whenever every coupling is real.
#[derive(Clone, Debug)]
enum OffDiagonal {
    Real {
        stat: Vec<f64>,
        drive: Vec<f64>,
    },
    Complex {
        stat: Vec<Complex64>,
        drive: Vec<Complex64>,
    },
}

/// `H_eff(ε) = H_static - c - (i/2) Σ r L†L + ε H_drive` with diagonal and
/// off-diagonal parts stored separately on the union pattern.
///
/// `c` is a real spectral shift used by the Runge-Kutta path; it only
/// rotates the global phase by `e^{ict}`, which [`Generator::phase_correction`]
/// undoes.
///
/// Basis states are grouped into the connected components of the coupling
/// graph. The generator never mixes components, so products only visit the
/// rows of components the current state occupies.
pub(crate) struct Generator {
    n: usize,
    indptr: Vec<usize>,
    indices: Vec<u32>,
    off: OffDiagonal,
    diag_stat: Vec<Complex64>,
    diag_drive: Vec<Complex64>,
    schedule: DriveSchedule,
    shift: f64,
    radius_stat: Vec<f64>,
    radius_drive: Vec<f64>,
    max_damping: f64,
    component: Vec<u32>,
    components: usize,
}

/// Spectral enclosure of `H_eff(ε)` on a set of rows: real part in
/// `[lo, hi]`, imaginary part in `[-damping, 0]`.
#[derive(Clone, Copy, Debug)]
pub(crate) struct SpectralBounds {
    pub lo: f64,
    pub hi: f64,
    pub damping: f64,
}

/// Rows of the components a state occupies.
#[derive(Clone, Debug, PartialEq)]
pub(crate) struct ActiveRows {
    rows: Vec<u32>,
    idle: Vec<u32>,
}

fn find(parent: &mut [u32], mut i: u32) -> u32 {
    while parent[i as usize] != i {
        parent[i as usize] = parent[parent[i as usize] as usize];
        i = parent[i as usize];
    }
    i
}

impl Generator {
    pub fn new(
        ham: &DrivenHamiltonian,
        schedule: &DriveSchedule,
        channels: &[JumpChannel],
        auto_shift: bool,
    ) -> Self {
        let n = ham.dims().total();
        let mut damping = CsrMatrix::zeros(n);
        for ch in channels.iter().filter(|c| c.rate > 0.0) {
            let l = ch.op.matrix();
            damping = damping.add(
                &l.adjoint()
                    .matmul(l)
                    .scale(Complex64::new(0.5 * ch.rate, 0.0)),
            );
        }
        // Gershgorin bound on the spectrum of the positive semidefinite decay part
        let max_damping = damping.max_row_sum();
        let stat = ham
            .static_part
            .matrix()
            .sub(&damping.scale(Complex64::new(0.0, 1.0)));
        let drive = ham.total_drive().matrix().clone();

        let mut indptr = Vec::with_capacity(n + 1);
        let mut indices = Vec::new();
        let mut off_stat = Vec::new();
        let mut off_drive = Vec::new();
        let mut diag_stat = vec![ZERO; n];
        let mut diag_drive = vec![ZERO; n];
        let mut radius_stat = vec![0.0; n];
        let mut radius_drive = vec![0.0; n];
        let mut parent: Vec<u32> = (0..n as u32).collect();
        indptr.push(0);
        let mut row: Vec<(usize, Complex64, Complex64)> = Vec::new();
        for i in 0..n {
            row.clear();
            for (j, v) in stat.row(i) {
                row.push((j, v, ZERO));
            }
            for (j, v) in drive.row(i) {
                match row.iter_mut().find(|e| e.0 == j) {
                    Some(e) => e.2 = v,
                    None => row.push((j, ZERO, v)),
                }
            }
            row.sort_by_key(|e| e.0);
            for &(j, s, d) in &row {
                if i == j {
                    diag_stat[i] = s;
                    diag_drive[i] = d;
                    continue;
                }
                radius_stat[i] += s.norm();
                radius_drive[i] += d.norm();
                indices.push(j as u32);
                off_stat.push(s);
                off_drive.push(d);
                let (a, b) = (find(&mut parent, i as u32), find(&mut parent, j as u32));
                if a != b {
                    parent[a.max(b) as usize] = a.min(b);
                }
            }
            indptr.push(indices.len());
        }
        let mut labels = std::collections::HashMap::new();
        let component: Vec<u32> = (0..n as u32)
            .map(|i| {
                let root = find(&mut parent, i);
                let next = labels.len() as u32;
                *labels.entry(root).or_insert(next)
            })
            .collect();
        let real = off_stat.iter().chain(&off_drive).all(|v| v.im == 0.0);
        let off = if real {
            OffDiagonal::Real {
                stat: off_stat.iter().map(|v| v.re).collect(),
                drive: off_drive.iter().map(|v| v.re).collect(),
            }
        } else {
            OffDiagonal::Complex {
                stat: off_stat,
                drive: off_drive,
            }
        };
        let mut gen = Generator {
            n,
            indptr,
            indices,
            off,
            diag_stat,
            diag_drive,
            schedule: *schedule,
            shift: 0.0,
            radius_stat,
            radius_drive,
            max_damping,
            components: labels.len(),
            component,
        };
        if auto_shift {
            let all = gen.all_rows();
            let b = gen.bounds(schedule.epsilon_max, &all);
            let b0 = gen.bounds(0.0, &all);
            let shift = 0.5 * (b.lo.min(b0.lo) + b.hi.max(b0.hi));
            if shift.is_finite() {
                gen.shift = shift;
            }
        }
        gen
    }

    pub fn schedule(&self) -> &DriveSchedule {
        &self.schedule
    }

    /// Factor turning the shifted-frame state at time `t` into the true state.
    pub fn phase_correction(&self, t: f64) -> Complex64 {
        Complex64::new(0.0, -self.shift * t).exp()
    }

    pub fn all_rows(&self) -> ActiveRows {
        ActiveRows {
            rows: (0..self.n as u32).collect(),
            idle: Vec::new(),
        }
    }

    /// Rows of every component on which `state` has support.
    pub fn active_rows(&self, state: &[Complex64]) -> ActiveRows {
        if self.components == 1 {
            return self.all_rows();
        }
        let mut occupied = vec![false; self.components];
        for (i, a) in state.iter().enumerate() {
            if *a != ZERO {
                occupied[self.component[i] as usize] = true;
            }
        }
        let (rows, idle) =
            (0..self.n as u32).partition(|&i| occupied[self.component[i as usize] as usize]);
        ActiveRows { rows, idle }
    }

    /// Gershgorin enclosure of `H_eff(ε)` restricted to `active` (without
    /// the spectral shift).
    pub fn bounds(&self, eps: f64, active: &ActiveRows) -> SpectralBounds {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &i in &active.rows {
            let i = i as usize;
            let c = (self.diag_stat[i] + eps * self.diag_drive[i]).re;
            let r = self.radius_stat[i] + eps.abs() * self.radius_drive[i];
            lo = lo.min(c - r);
            hi = hi.max(c + r);
        }
        SpectralBounds {
            lo,
            hi,
            damping: self.max_damping,
        }
    }

    /// `scale * (H_eff(ε) - offset)` frozen at one drive value.
    pub fn assemble<'a>(
        &'a self,
        eps: f64,
        offset: f64,
        scale: f64,
        active: &'a ActiveRows,
        into: Values,
    ) -> Assembled<'a> {
        let Values {
            mut diag,
            mut real,
            mut complex,
        } = into;
        diag.clear();
        diag.extend(
            self.diag_stat
                .iter()
                .zip(&self.diag_drive)
                .map(|(&s, &d)| scale * (s + eps * d - offset)),
        );
        real.clear();
        complex.clear();
        match &self.off {
            OffDiagonal::Real { stat, drive } => {
                real.extend(stat.iter().zip(drive).map(|(&s, &d)| scale * (s + eps * d)));
            }
            OffDiagonal::Complex { stat, drive } => {
                complex.extend(stat.iter().zip(drive).map(|(&s, &d)| scale * (s + eps * d)));
            }
        }
        Assembled {
            gen: self,
            active,
            values: Values {
                diag,
                real,
                complex,
            },
        }
    }

    fn apply_live(&self, eps: f64, active: &ActiveRows, y: &[Complex64], out: &mut [Complex64]) {
        for &i in &active.idle {
            out[i as usize] = ZERO;
        }
        for &i in &active.rows {
            let i = i as usize;
            let (a, b) = (self.indptr[i], self.indptr[i + 1]);
            let mut acc = (self.diag_stat[i] + eps * self.diag_drive[i] - self.shift) * y[i];
            match &self.off {
                OffDiagonal::Real { stat, drive } => {
                    let (mut re, mut im) = (0.0, 0.0);
                    for ((&j, &s), &d) in
                        self.indices[a..b].iter().zip(&stat[a..b]).zip(&drive[a..b])
                    {
                        let v = s + eps * d;
                        let x = y[j as usize];
                        re += v * x.re;
                        im += v * x.im;
                    }
                    acc += Complex64::new(re, im);
                }
                OffDiagonal::Complex { stat, drive } => {
                    for ((&j, &s), &d) in
                        self.indices[a..b].iter().zip(&stat[a..b]).zip(&drive[a..b])
                    {
                        acc += (s + eps * d) * y[j as usize];
                    }
                }
            }
            out[i] = MINUS_I * acc;
        }
    }
}

/// Reusable buffers for [`Assembled`].
#[derive(Clone, Debug, Default)]
pub(crate) struct Values {
    diag: Vec<Complex64>,
    real: Vec<f64>,
    complex: Vec<Complex64>,
}

pub(crate) struct Assembled<'a> {
    gen: &'a Generator,
    active: &'a ActiveRows,
    values: Values,
}

impl Assembled<'_> {
    pub fn apply(&self, y: &[Complex64], out: &mut [Complex64]) {
        let g = self.gen;
        for &i in &self.active.idle {
            out[i as usize] = ZERO;
        }
        let v = &self.values;
        for &i in &self.active.rows {
            let i = i as usize;
            let (a, b) = (g.indptr[i], g.indptr[i + 1]);
            let mut acc = v.diag[i] * y[i];
            if v.complex.is_empty() {
                let (mut re, mut im) = (0.0, 0.0);
                for (&j, &w) in g.indices[a..b].iter().zip(&v.real[a..b]) {
                    let x = y[j as usize];
                    re += w * x.re;
                    im += w * x.im;
                }
                acc += Complex64::new(re, im);
            } else {
                for (&j, &w) in g.indices[a..b].iter().zip(&v.complex[a..b]) {
                    acc += w * y[j as usize];
                }
            }
            out[i] = acc;
        }
    }

    /// One Chebyshev recurrence step on the active rows:
    /// `prev <- op·cur - prev`, then `acc += c · prev`.
    pub fn recurrence(
        &self,
        cur: &[Complex64],
        prev: &mut [Complex64],
        acc: &mut [Complex64],
        c: Complex64,
    ) {
        let g = self.gen;
        let v = &self.values;
        for &i in &self.active.rows {
            let i = i as usize;
            let (a, b) = (g.indptr[i], g.indptr[i + 1]);
            let mut sum = v.diag[i] * cur[i];
            if v.complex.is_empty() {
                let (mut re, mut im) = (0.0, 0.0);
                for (&j, &w) in g.indices[a..b].iter().zip(&v.real[a..b]) {
                    let x = cur[j as usize];
                    re += w * x.re;
                    im += w * x.im;
                }
                sum += Complex64::new(re, im);
            } else {
                for (&j, &w) in g.indices[a..b].iter().zip(&v.complex[a..b]) {
                    sum += w * cur[j as usize];
                }
            }
            let next = sum - prev[i];
            prev[i] = next;
            acc[i] += c * next;
        }
    }

    pub fn into_values(self) -> Values {
        self.values
    }
}

/// Right-hand side `-i (H_eff(ε(t)) - c) ψ` on the rows of `active`.
pub(crate) struct Live<'a> {
    pub gen: &'a Generator,
    pub active: &'a ActiveRows,
}

impl Rhs for Live<'_> {
    fn eval(&mut self, t: f64, y: &[Complex64], dy: &mut [Complex64]) {
        self.gen
            .apply_live(self.gen.schedule.epsilon(t), self.active, y, dy);
    }
}
