use nalgebra::DMatrix;
use num_complex::Complex64;

use super::JumpChannel;
use crate::error::{Error, Result};
use crate::fockspace::DensityMatrix;
use crate::integrate::{Dopri5, Tolerances};
use crate::models::{DriveSchedule, DrivenHamiltonian};

/// Largest total dimension accepted by the dense master-equation solver.
pub const MAX_LINDBLAD_DIM: usize = 200;

const MINUS_I: Complex64 = Complex64::new(0.0, -1.0);

/// Integrates `dρ/dt = -i[H(t), ρ] + Σ_c r_c (L_c ρ L_c† - ½{L_c†L_c, ρ})`
/// densely and returns `ρ` at each sample time.
pub fn lindblad_evolve(
    hamiltonian: &DrivenHamiltonian,
    schedule: &DriveSchedule,
    channels: &[JumpChannel],
    rho0: &DensityMatrix,
    sample_times: &[f64],
    tolerances: Tolerances,
) -> Result<Vec<DensityMatrix>> {
    let dims = hamiltonian.dims().clone();
    let n = dims.total();
    if n > MAX_LINDBLAD_DIM {
        return Err(Error::Capacity(format!(
            "dense master equation limited to dimension {MAX_LINDBLAD_DIM}, got {n}"
        )));
    }
    if rho0.dims() != &dims {
        return Err(Error::DimensionMismatch(
            "initial density matrix and Hamiltonian spaces differ".into(),
        ));
    }
    for ch in channels {
        ch.op.check_same_space(&dims)?;
    }
    let mut last = f64::NEG_INFINITY;
    for &t in sample_times {
        if !(0.0..=schedule.duration).contains(&t) || t <= last {
            return Err(Error::param(
                "sample_times",
                "must be increasing and inside [0, T]",
            ));
        }
        last = t;
    }

    // -i H_eff with H_eff = H_static - (i/2) Σ r L†L; the drive is added per call
    let mut h_eff = hamiltonian.static_part.to_dense();
    let mut jumps = Vec::new();
    for ch in channels.iter().filter(|c| c.rate > 0.0) {
        let l = ch.op.to_dense();
        h_eff -= (l.adjoint() * &l) * Complex64::new(0.0, 0.5 * ch.rate);
        let scaled = l * Complex64::new(ch.rate.sqrt(), 0.0);
        let scaled_adj = scaled.adjoint();
        jumps.push((scaled, scaled_adj));
    }
    let a_static = h_eff * MINUS_I;
    let a_drive = hamiltonian.total_drive().to_dense() * MINUS_I;

    let mut a = DMatrix::<Complex64>::zeros(n, n);
    let mut tmp = DMatrix::<Complex64>::zeros(n, n);
    let mut rhs = |t: f64, y: &[Complex64], dy: &mut [Complex64]| {
        let rho = nalgebra::DMatrixView::from_slice(y, n, n);
        a.copy_from(&a_drive);
        a *= Complex64::new(schedule.epsilon(t), 0.0);
        a += &a_static;
        // A ρ + ρ A† with A = -i H_eff
        a.mul_to(&rho, &mut tmp);
        let mut out = nalgebra::DMatrixViewMut::from_slice(dy, n, n);
        out.copy_from(&tmp);
        out += tmp.adjoint();
        for (l, ladj) in &jumps {
            l.mul_to(&rho, &mut tmp);
            out.gemm(
                Complex64::new(1.0, 0.0),
                &tmp,
                ladj,
                Complex64::new(1.0, 0.0),
            );
        }
    };

    let mut stepper = Dopri5::new(tolerances, 0.0, rho0.matrix().as_slice());
    let mut out = Vec::with_capacity(sample_times.len());
    for &t in sample_times {
        while stepper.t() < t {
            stepper.step(&mut rhs, t)?;
        }
        let mut rho =
            DensityMatrix::new(dims.clone(), DMatrix::from_column_slice(n, n, stepper.y()))?;
        rho.symmetrize();
        out.push(rho);
    }
    Ok(out)
}
