//! Truncated bosonic Fock spaces and qubit registers.
//!
//! A multi-mode space is described by [`FockDims`], one truncation dimension
//! per mode. Basis states are ordered with mode 0 as the slowest-varying
//! index, so the basis index of `|n_0, n_1, ..., n_{N-1}>` is
//! `sum_k n_k * stride_k` with `stride_k = prod_{l > k} dims_l`. This matches
//! `op_0 ⊗ op_1 ⊗ ...` in the usual Kronecker convention and is the ordering
//! used by every operator, state and output file of the crate.
//!
//! A qubit register is just a Fock space with every dimension equal to 2;
//! `|0>` is the `sigma_z = +1` state.

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Default bound on the weight a coherent state may lose to truncation.
pub const COHERENT_TAIL_LIMIT: f64 = 1e-8;

/// Per-mode truncation dimensions.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FockDims(Vec<usize>);

impl FockDims {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::InvalidDimension(
                "at least one mode is required".into(),
            ));
        }
        if let Some(&d) = dims.iter().find(|&&d| d < 2) {
            return Err(Error::InvalidDimension(format!(
                "every mode needs dimension >= 2, got {d}"
            )));
        }
        Ok(FockDims(dims))
    }

    pub fn uniform(modes: usize, dim: usize) -> Result<Self> {
        Self::new(vec![dim; modes])
    }

    pub fn qubits(n: usize) -> Result<Self> {
        Self::uniform(n, 2)
    }

    pub fn modes(&self) -> usize {
        self.0.len()
    }

    pub fn total(&self) -> usize {
        self.0.iter().product()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.0.len()];
        for k in (0..self.0.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * self.0[k + 1];
        }
        strides
    }

    pub fn index_of(&self, occupations: &[usize]) -> Result<usize> {
        if occupations.len() != self.modes() {
            return Err(Error::DimensionMismatch(format!(
                "{} occupations for {} modes",
                occupations.len(),
                self.modes()
            )));
        }
        let mut idx = 0;
        for ((&n, &d), s) in occupations.iter().zip(&self.0).zip(self.strides()) {
            if n >= d {
                return Err(Error::InvalidDimension(format!(
                    "occupation {n} >= dim {d}"
                )));
            }
            idx += n * s;
        }
        Ok(idx)
    }

    pub fn occupations_of(&self, mut index: usize) -> Vec<usize> {
        let mut occ = vec![0; self.modes()];
        for k in (0..self.modes()).rev() {
            occ[k] = index % self.0[k];
            index /= self.0[k];
        }
        occ
    }

    pub fn is_qubit_register(&self) -> bool {
        self.0.iter().all(|&d| d == 2)
    }
}

/// A complex square matrix on a multi-mode space.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    dims: FockDims,
    mat: CsrMatrix,
}

impl Operator {
    pub fn new(dims: FockDims, mat: CsrMatrix) -> Result<Self> {
        if mat.dim() != dims.total() {
            return Err(Error::DimensionMismatch(format!(
                "matrix side {} vs total dimension {}",
                mat.dim(),
                dims.total()
            )));
        }
        Ok(Operator { dims, mat })
    }

    pub fn from_dense(dims: FockDims, m: &DMatrix<Complex64>) -> Result<Self> {
        Self::new(dims, CsrMatrix::from_dense(m))
    }

    pub fn identity(dims: &FockDims) -> Self {
        Operator {
            dims: dims.clone(),
            mat: CsrMatrix::identity(dims.total()),
        }
    }

    pub fn zeros(dims: &FockDims) -> Self {
        Operator {
            dims: dims.clone(),
            mat: CsrMatrix::zeros(dims.total()),
        }
    }

    pub fn dims(&self) -> &FockDims {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.mat.dim()
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.mat
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        self.mat.to_dense()
    }

    pub fn adjoint(&self) -> Self {
        Operator {
            dims: self.dims.clone(),
            mat: self.mat.adjoint(),
        }
    }

    pub fn scale(&self, s: impl Into<Complex64>) -> Self {
        Operator {
            dims: self.dims.clone(),
            mat: self.mat.scale(s.into()),
        }
    }

    /// `[self, other]`.
    pub fn commutator(&self, other: &Operator) -> Operator {
        &(self * other) - &(other * self)
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.mat.norm()
    }

    /// Frobenius norm of `self - self†`.
    pub fn hermiticity_error(&self) -> f64 {
        (self - &self.adjoint()).norm()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_error() < tol
    }

    pub fn apply(&self, psi: &StateVector) -> Result<StateVector> {
        self.check_same_space(&psi.dims)?;
        Ok(StateVector {
            dims: self.dims.clone(),
            amps: self.mat.mul_vec(&psi.amps),
        })
    }

    pub fn check_same_space(&self, dims: &FockDims) -> Result<()> {
        if &self.dims != dims {
            return Err(Error::DimensionMismatch(format!(
                "operator on {:?}, state on {:?}",
                self.dims.as_slice(),
                dims.as_slice()
            )));
        }
        Ok(())
    }

    /// Eigenvalues of a Hermitian operator, ascending. Dense, so only for
    /// small spaces.
    pub fn hermitian_eigenvalues(&self) -> Vec<f64> {
        let mut e: Vec<f64> = self
            .to_dense()
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .collect();
        e.sort_by(|a, b| a.total_cmp(b));
        e
    }
}

fn assert_same(a: &Operator, b: &Operator) {
    assert_eq!(a.dims, b.dims, "operators act on different spaces");
}

impl Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        assert_same(self, rhs);
        Operator {
            dims: self.dims.clone(),
            mat: self.mat.add(&rhs.mat),
        }
    }
}

impl Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        assert_same(self, rhs);
        Operator {
            dims: self.dims.clone(),
            mat: self.mat.sub(&rhs.mat),
        }
    }
}

impl Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        assert_same(self, rhs);
        Operator {
            dims: self.dims.clone(),
            mat: self.mat.matmul(&rhs.mat),
        }
    }
}

impl Mul<&Operator> for f64 {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        rhs.scale(self)
    }
}

impl Mul<&Operator> for Complex64 {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        rhs.scale(self)
    }
}

impl Neg for &Operator {
    type Output = Operator;
    fn neg(self) -> Operator {
        self.scale(-1.0)
    }
}

/// Annihilation operator `a` on a single mode of dimension `dim`.
pub fn destroy(dim: usize) -> Result<Operator> {
    let dims = FockDims::new(vec![dim])?;
    let triplets = (1..dim)
        .map(|n| (n - 1, n, Complex64::new((n as f64).sqrt(), 0.0)))
        .collect();
    Operator::new(dims, CsrMatrix::from_triplets(dim, triplets))
}

/// Creation operator `a†`.
pub fn create(dim: usize) -> Result<Operator> {
    Ok(destroy(dim)?.adjoint())
}

/// Number operator `a†a`.
pub fn number(dim: usize) -> Result<Operator> {
    let dims = FockDims::new(vec![dim])?;
    let diag: Vec<Complex64> = (0..dim).map(|n| Complex64::new(n as f64, 0.0)).collect();
    Operator::new(dims, CsrMatrix::from_diagonal(&diag))
}

pub fn sigma_x() -> Operator {
    let dims = FockDims(vec![2]);
    Operator {
        dims,
        mat: CsrMatrix::from_triplets(2, vec![(0, 1, ONE), (1, 0, ONE)]),
    }
}

pub fn sigma_z() -> Operator {
    let dims = FockDims(vec![2]);
    Operator {
        dims,
        mat: CsrMatrix::from_diagonal(&[ONE, -ONE]),
    }
}

/// Lifts a single-mode operator to `1 ⊗ ... ⊗ op ⊗ ... ⊗ 1` acting on `mode`.
pub fn embed(op: &Operator, mode: usize, dims: &FockDims) -> Result<Operator> {
    if mode >= dims.modes() {
        return Err(Error::IndexOutOfRange {
            index: mode,
            len: dims.modes(),
        });
    }
    if op.dim() != dims.as_slice()[mode] {
        return Err(Error::DimensionMismatch(format!(
            "operator dimension {} vs mode {mode} dimension {}",
            op.dim(),
            dims.as_slice()[mode]
        )));
    }
    let left: usize = dims.as_slice()[..mode].iter().product();
    let right: usize = dims.as_slice()[mode + 1..].iter().product();
    let mut mat = op.mat.clone();
    if left > 1 {
        mat = CsrMatrix::identity(left).kron(&mat);
    }
    if right > 1 {
        mat = mat.kron(&CsrMatrix::identity(right));
    }
    Operator::new(dims.clone(), mat)
}

/// Total photon-number parity `⊗_n exp(iπ a_n†a_n)`.
pub fn parity_operator(dims: &FockDims) -> Operator {
    let diag: Vec<Complex64> = (0..dims.total())
        .map(|i| {
            let n: usize = dims.occupations_of(i).iter().sum();
            if n.is_multiple_of(2) {
                ONE
            } else {
                -ONE
            }
        })
        .collect();
    Operator {
        dims: dims.clone(),
        mat: CsrMatrix::from_diagonal(&diag),
    }
}

/// Pure state amplitudes on a multi-mode space.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    dims: FockDims,
    amps: Vec<Complex64>,
}

impl StateVector {
    pub fn new(dims: FockDims, amps: Vec<Complex64>) -> Result<Self> {
        if amps.len() != dims.total() {
            return Err(Error::DimensionMismatch(format!(
                "{} amplitudes for total dimension {}",
                amps.len(),
                dims.total()
            )));
        }
        Ok(StateVector { dims, amps })
    }

    pub fn basis(dims: &FockDims, index: usize) -> Result<Self> {
        if index >= dims.total() {
            return Err(Error::IndexOutOfRange {
                index,
                len: dims.total(),
            });
        }
        let mut amps = vec![ZERO; dims.total()];
        amps[index] = ONE;
        Ok(StateVector {
            dims: dims.clone(),
            amps,
        })
    }

    /// Fock state `|n_0, n_1, ...>`.
    pub fn fock(dims: &FockDims, occupations: &[usize]) -> Result<Self> {
        Self::basis(dims, dims.index_of(occupations)?)
    }

    pub fn vacuum(dims: &FockDims) -> Self {
        Self::basis(dims, 0).expect("index 0 always exists")
    }

    pub fn dims(&self) -> &FockDims {
        &self.dims
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::ZeroVector("cannot normalize".into()));
        }
        Ok(StateVector {
            dims: self.dims.clone(),
            amps: self.amps.iter().map(|a| a / n).collect(),
        })
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        assert_eq!(self.dims, other.dims, "states live on different spaces");
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// `|<self|other>|^2`, normalized by both norms.
    pub fn fidelity(&self, other: &StateVector) -> f64 {
        self.inner(other).norm_sqr() / (self.norm_sqr() * other.norm_sqr())
    }

    /// Product state `self ⊗ other`, modes of `self` first.
    pub fn tensor(&self, other: &StateVector) -> StateVector {
        let mut dims = self.dims.0.clone();
        dims.extend_from_slice(&other.dims.0);
        let amps = self
            .amps
            .iter()
            .flat_map(|a| other.amps.iter().map(move |b| a * b))
            .collect();
        StateVector {
            dims: FockDims(dims),
            amps,
        }
    }

    pub(crate) fn add_scaled(&self, s: Complex64, other: &StateVector) -> StateVector {
        StateVector {
            dims: self.dims.clone(),
            amps: self
                .amps
                .iter()
                .zip(&other.amps)
                .map(|(a, b)| a + s * b)
                .collect(),
        }
    }
}

/// Weight of the Poisson photon distribution at or above `dim`.
fn coherent_tail_weight(dim: usize, alpha: Complex64) -> f64 {
    let n_mean = alpha.norm_sqr();
    let mut term = (-n_mean).exp();
    let mut kept = 0.0;
    for n in 0..dim {
        kept += term;
        term *= n_mean / (n + 1) as f64;
    }
    (1.0 - kept).max(0.0)
}

fn coherent_truncated(dims: FockDims, alpha: Complex64) -> StateVector {
    let dim = dims.total();
    let mut amps = Vec::with_capacity(dim);
    let mut c = Complex64::new((-alpha.norm_sqr() / 2.0).exp(), 0.0);
    for n in 0..dim {
        amps.push(c);
        c = c * alpha / ((n + 1) as f64).sqrt();
    }
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    amps.iter_mut().for_each(|a| *a /= norm);
    StateVector { dims, amps }
}

/// Coherent state `|alpha>` truncated to `dim` levels and renormalized.
///
/// Fails when more than [`COHERENT_TAIL_LIMIT`] of the weight would be cut
/// off; `|alpha|^2 + 5|alpha| + 10 <= dim` is comfortably safe.
pub fn coherent_state(dim: usize, alpha: Complex64) -> Result<StateVector> {
    let dims = FockDims::new(vec![dim])?;
    let tail = coherent_tail_weight(dim, alpha);
    if tail > COHERENT_TAIL_LIMIT {
        return Err(Error::Truncation {
            dim,
            amplitude: alpha.norm(),
            tail,
            limit: COHERENT_TAIL_LIMIT,
        });
    }
    Ok(coherent_truncated(dims, alpha))
}

/// Product coherent state `|alpha_0, alpha_1, ...>`.
pub fn product_coherent_state(dims: &FockDims, amplitudes: &[Complex64]) -> Result<StateVector> {
    if amplitudes.len() != dims.modes() {
        return Err(Error::DimensionMismatch(format!(
            "{} amplitudes for {} modes",
            amplitudes.len(),
            dims.modes()
        )));
    }
    let mut state: Option<StateVector> = None;
    for (&d, &alpha) in dims.as_slice().iter().zip(amplitudes) {
        let mode = coherent_state(d, alpha)?;
        state = Some(match state {
            None => mode,
            Some(s) => s.tensor(&mode),
        });
    }
    Ok(state.expect("at least one mode"))
}

/// Multi-mode cat state `∝ |a_0, ..., a_{N-1}> + parity |-a_0, ..., -a_{N-1}>`.
pub fn cat_state(dims: &FockDims, amplitudes: &[Complex64], parity: i32) -> Result<StateVector> {
    if parity != 1 && parity != -1 {
        return Err(Error::param("parity", "must be +1 or -1"));
    }
    let plus = product_coherent_state(dims, amplitudes)?;
    let flipped: Vec<Complex64> = amplitudes.iter().map(|a| -a).collect();
    let minus = product_coherent_state(dims, &flipped)?;
    let sum = plus.add_scaled(Complex64::new(parity as f64, 0.0), &minus);
    if sum.norm() < 1e-12 {
        return Err(Error::ZeroVector(
            "odd cat of vanishing amplitude has no normalizable state".into(),
        ));
    }
    sum.normalized()
}

/// `<psi|op|psi> / <psi|psi>`.
pub fn expectation(state: &StateVector, op: &Operator) -> Result<Complex64> {
    op.check_same_space(&state.dims)?;
    let norm = state.norm_sqr();
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::DegenerateState(
            "expectation in a zero-norm state".into(),
        ));
    }
    Ok(expectation_raw(&state.amps, op) / norm)
}

/// `<psi|op|psi>` without normalization, on raw amplitudes.
pub(crate) fn expectation_raw(amps: &[Complex64], op: &Operator) -> Complex64 {
    let mut acc = ZERO;
    for (i, a) in amps.iter().enumerate() {
        let mut row = ZERO;
        for (j, v) in op.mat.row(i) {
            row += v * amps[j];
        }
        acc += a.conj() * row;
    }
    acc
}

/// Mixed state on a (small) multi-mode space, stored densely.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    dims: FockDims,
    mat: DMatrix<Complex64>,
}

impl DensityMatrix {
    pub fn new(dims: FockDims, mat: DMatrix<Complex64>) -> Result<Self> {
        if mat.nrows() != dims.total() || mat.ncols() != dims.total() {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix for total dimension {}",
                mat.nrows(),
                mat.ncols(),
                dims.total()
            )));
        }
        Ok(DensityMatrix { dims, mat })
    }

    /// `|psi><psi| / <psi|psi>`.
    pub fn from_pure(psi: &StateVector) -> Result<Self> {
        let psi = psi.normalized()?;
        let v = nalgebra::DVector::from_column_slice(&psi.amps);
        Ok(DensityMatrix {
            dims: psi.dims.clone(),
            mat: &v * v.adjoint(),
        })
    }

    pub fn dims(&self) -> &FockDims {
        &self.dims
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.mat
    }

    pub fn trace(&self) -> Complex64 {
        self.mat.trace()
    }

    pub fn purity(&self) -> f64 {
        (&self.mat * &self.mat).trace().re
    }

    pub fn expectation(&self, op: &Operator) -> Result<Complex64> {
        op.check_same_space(&self.dims)?;
        Ok((op.to_dense() * &self.mat).trace())
    }

    /// `<psi|rho|psi>` for normalized `psi`.
    pub fn fidelity_with_pure(&self, psi: &StateVector) -> f64 {
        let v = nalgebra::DVector::from_column_slice(&psi.amps);
        (v.adjoint() * &self.mat * &v)[(0, 0)].re / psi.norm_sqr()
    }

    /// Replaces the matrix by its Hermitian part.
    pub fn symmetrize(&mut self) {
        self.mat = (&self.mat + self.mat.adjoint()) * Complex64::new(0.5, 0.0);
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut e: Vec<f64> = self.mat.symmetric_eigenvalues().iter().copied().collect();
        e.sort_by(|a, b| a.total_cmp(b));
        e
    }

    /// `½ ||rho - sigma||_1`.
    pub fn trace_distance(&self, other: &DensityMatrix) -> f64 {
        assert_eq!(self.dims, other.dims);
        let diff = &self.mat - &other.mat;
        let herm = (&diff + diff.adjoint()) * Complex64::new(0.5, 0.0);
        0.5 * herm
            .symmetric_eigenvalues()
            .iter()
            .map(|e| e.abs())
            .sum::<f64>()
    }

    /// Checks Hermiticity (1e-10), unit trace (1e-8) and positivity (-1e-8).
    pub fn check_invariants(&self) -> Result<()> {
        let herm = (&self.mat - self.mat.adjoint()).norm();
        if herm > 1e-10 {
            return Err(Error::DegenerateState(format!("not Hermitian: {herm:.2e}")));
        }
        let tr = self.trace();
        if (tr - ONE).norm() > 1e-8 {
            return Err(Error::DegenerateState(format!("trace {tr}")));
        }
        let min = self.eigenvalues()[0];
        if min < -1e-8 {
            return Err(Error::DegenerateState(format!(
                "negative eigenvalue {min:.2e}"
            )));
        }
        Ok(())
    }
}

/// Ensemble average `(1/n) Σ |psi_k><psi_k| / <psi_k|psi_k>`.
pub fn average_density(states: &[StateVector]) -> Result<DensityMatrix> {
    let first = states
        .first()
        .ok_or_else(|| Error::DegenerateState("empty ensemble".into()))?;
    let d = first.dims.total();
    let mut acc = DMatrix::from_element(d, d, ZERO);
    for s in states {
        acc += DensityMatrix::from_pure(s)?.mat;
    }
    DensityMatrix::new(
        first.dims.clone(),
        acc / Complex64::new(states.len() as f64, 0.0),
    )
}
