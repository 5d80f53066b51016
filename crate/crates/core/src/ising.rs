//! Ising encodings of number partitioning, an exhaustive ground-state
//! oracle and the success measures of both machines.
//!
//! Energies follow `E(s) = Σ_{i<j} C_ij s_i s_j` with `s_i = ±1`.

use log::warn;
use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::dynamics::{pair_correlation_name, TrajectoryRecord};
use crate::error::{Error, Result};
use crate::fockspace::StateVector;

/// Largest problem the exhaustive oracle accepts.
pub const MAX_BRUTE_FORCE_SPINS: usize = 24;

/// Default lower bound on `|<a_i† a_j>|` for a pair to count as locked.
pub const DEFAULT_AMPLITUDE_FLOOR: f64 = 0.1;

/// Spin configuration, entries `±1`.
pub type Spins = Vec<i8>;

#[derive(Clone, Debug, PartialEq)]
pub struct IsingProblem {
    /// Symmetric cost matrix with zero diagonal.
    pub cost: DMatrix<f64>,
    /// Numbers being partitioned, when the problem came from a partition.
    pub assets: Option<Vec<u64>>,
    /// Scale applied to `A_i A_j`.
    pub j0: Option<f64>,
}

impl IsingProblem {
    /// Any nonzero diagonal is dropped with a warning.
    pub fn from_matrix(mut cost: DMatrix<f64>) -> Result<Self> {
        let n = cost.nrows();
        if n != cost.ncols() {
            return Err(Error::param("cost", "must be square"));
        }
        if n == 0 {
            return Err(Error::param("cost", "needs at least one spin"));
        }
        for i in 0..n {
            if cost[(i, i)] != 0.0 {
                warn!(
                    "cost diagonal entry ({i}, {i}) = {} forced to 0",
                    cost[(i, i)]
                );
                cost[(i, i)] = 0.0;
            }
            for j in 0..i {
                let (a, b) = (cost[(i, j)], cost[(j, i)]);
                if !a.is_finite() || !b.is_finite() {
                    return Err(Error::param("cost", "entries must be finite"));
                }
                if (a - b).abs() > 1e-12 * (1.0 + a.abs()) {
                    return Err(Error::param("cost", format!("not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(IsingProblem {
            cost,
            assets: None,
            j0: None,
        })
    }

    pub fn spins(&self) -> usize {
        self.cost.nrows()
    }

    pub fn energy(&self, s: &[i8]) -> f64 {
        let mut e = 0.0;
        for i in 0..s.len() {
            for j in i + 1..s.len() {
                e += self.cost[(i, j)] * f64::from(s[i] * s[j]);
            }
        }
        e
    }

    /// Same problem with every coupling multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        IsingProblem {
            cost: &self.cost * factor,
            assets: self.assets.clone(),
            j0: self.j0.map(|j| j * factor),
        }
    }
}

/// `C_ij = J0 A_i A_j` for `i ≠ j` with `J0 = 1 / max_{i≠j} A_i A_j`.
pub fn npp_to_ising(assets: &[u64]) -> Result<IsingProblem> {
    if assets.len() < 2 {
        return Err(Error::param("assets", "at least two numbers are required"));
    }
    if assets.contains(&0) {
        return Err(Error::param("assets", "numbers must be positive"));
    }
    let n = assets.len();
    let mut largest = 0.0_f64;
    for i in 0..n {
        for j in i + 1..n {
            largest = largest.max(assets[i] as f64 * assets[j] as f64);
        }
    }
    let j0 = 1.0 / largest;
    let cost = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            0.0
        } else {
            j0 * assets[i] as f64 * assets[j] as f64
        }
    });
    Ok(IsingProblem {
        cost,
        assets: Some(assets.to_vec()),
        j0: Some(j0),
    })
}

/// Reads a partition instance: one positive integer per line. Blank lines
/// and lines starting with `#` are skipped.
pub fn parse_assets(text: &str) -> Result<Vec<u64>> {
    let mut out = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let v: u64 = line.parse().map_err(|_| {
            Error::param(
                "assets",
                format!("line {}: `{line}` is not a positive integer", k + 1),
            )
        })?;
        if v == 0 {
            return Err(Error::param(
                "assets",
                format!("line {}: numbers must be positive", k + 1),
            ));
        }
        out.push(v);
    }
    Ok(out)
}

/// Oscillator couplings realizing the problem: `J = -C`, so that maximizing
/// `Σ J_nm s_n s_m` minimizes the problem energy.
pub fn cvim_coupling(problem: &IsingProblem) -> DMatrix<f64> {
    -&problem.cost
}

/// `Σ_i A_i s_i`.
pub fn partition_imbalance(assets: &[u64], s: &[i8]) -> i64 {
    assets
        .iter()
        .zip(s)
        .map(|(&a, &si)| a as i64 * i64::from(si))
        .sum()
}

/// All minimizers of the problem energy.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct GroundSolution {
    /// Sorted, closed under global flip.
    pub configs: Vec<Spins>,
    pub energy: f64,
}

impl GroundSolution {
    pub fn contains(&self, s: &[i8]) -> bool {
        self.configs.iter().any(|c| c == s)
    }
}

/// Exhaustive enumeration in Gray-code order; the last spin is pinned to
/// `+1` and flipped partners are added afterwards. Configurations within
/// `1e-9 (1 + Σ|C_ij|)` of the minimum are kept.
pub fn brute_force_ground(problem: &IsingProblem) -> Result<GroundSolution> {
    let n = problem.spins();
    if n > MAX_BRUTE_FORCE_SPINS {
        return Err(Error::Capacity(format!(
            "brute force is limited to {MAX_BRUTE_FORCE_SPINS} spins, got {n}"
        )));
    }
    let c = &problem.cost;
    let scale: f64 = c.iter().map(|v| v.abs()).sum::<f64>() * 0.5;
    let tie = 1e-9 * (1.0 + scale);
    let mut s: Spins = vec![1; n];
    // local fields h_i = Σ_j C_ij s_j
    let mut h: Vec<f64> = (0..n).map(|i| (0..n).map(|j| c[(i, j)]).sum()).collect();
    let mut e = problem.energy(&s);
    let mut best = e;
    let mut found: Vec<Spins> = vec![s.clone()];
    let free = n.saturating_sub(1);
    for step in 1..(1_u64 << free) {
        let k = step.trailing_zeros() as usize;
        let old = f64::from(s[k]);
        e -= 2.0 * old * h[k];
        s[k] = -s[k];
        for (i, hi) in h.iter_mut().enumerate() {
            if i != k {
                *hi -= 2.0 * old * c[(i, k)];
            }
        }
        if e < best - tie {
            best = e;
            found.clear();
            found.push(s.clone());
        } else if e <= best + tie {
            found.push(s.clone());
        }
    }
    // recompute exactly to remove accumulated rounding
    let mut configs: Vec<Spins> = Vec::new();
    for cfg in found {
        let flipped: Spins = cfg.iter().map(|v| -v).collect();
        configs.push(cfg);
        configs.push(flipped);
    }
    let energies: Vec<f64> = configs.iter().map(|cfg| problem.energy(cfg)).collect();
    let energy = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let mut configs: Vec<Spins> = configs
        .into_iter()
        .zip(energies)
        .filter(|(_, e)| *e <= energy + tie)
        .map(|(cfg, _)| cfg)
        .collect();
    configs.sort();
    configs.dedup();
    Ok(GroundSolution { configs, energy })
}

/// Single-shot readout of the oscillator machine: true iff every pair
/// correlation at `t = T` has `|<a_i† a_j>| ≥ amplitude_floor` and
/// `sign cos arg <a_i† a_j> = s_i s_j` for some ground configuration.
pub fn success_cvim(
    record: &TrajectoryRecord,
    ground: &GroundSolution,
    amplitude_floor: f64,
) -> Result<bool> {
    let n = ground
        .configs
        .first()
        .map(|c| c.len())
        .ok_or_else(|| Error::Evaluation("empty ground solution".into()))?;
    let mut signs = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            let name = pair_correlation_name(i, j);
            let v = record
                .final_value(&name)
                .ok_or_else(|| Error::Evaluation(format!("record lacks observable `{name}`")))?;
            if !v.is_finite() {
                return Err(Error::Evaluation(format!("`{name}` is not finite")));
            }
            signs.push((v, i, j));
        }
    }
    Ok(correlations_match(&signs, ground, amplitude_floor))
}

fn correlations_match(
    pairs: &[(Complex64, usize, usize)],
    ground: &GroundSolution,
    floor: f64,
) -> bool {
    if pairs.iter().any(|(v, _, _)| v.norm() < floor) {
        return false;
    }
    // cos(arg z) has the sign of Re z
    ground.configs.iter().any(|s| {
        pairs.iter().all(|&(v, i, j)| {
            let want = f64::from(s[i] * s[j]);
            v.re * want > 0.0
        })
    })
}

/// Basis index of a spin configuration in a qubit register: qubit state
/// `|0>` is `σ_z = +1` (`s = +1`), and qubit 0 is the most significant bit.
pub fn spins_to_index(s: &[i8]) -> usize {
    s.iter().fold(0, |acc, &v| (acc << 1) | usize::from(v < 0))
}

/// Population of the ground manifold in a qubit-register state.
pub fn success_qubit(state: &StateVector, ground: &GroundSolution) -> Result<f64> {
    if !state.dims().is_qubit_register() {
        return Err(Error::Evaluation("state is not a qubit register".into()));
    }
    let n = state.dims().modes();
    let norm = state.norm_sqr();
    if !(norm > 0.0) {
        return Err(Error::DegenerateState("zero-norm state".into()));
    }
    let mut p = 0.0;
    for cfg in &ground.configs {
        if cfg.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "{} spins for {n} qubits",
                cfg.len()
            )));
        }
        p += state.amplitudes()[spins_to_index(cfg)].norm_sqr();
    }
    Ok((p / norm).min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn npp_4567() {
        let p = npp_to_ising(&[4, 5, 6, 7]).unwrap();
        assert_eq!(p.j0, Some(1.0 / 42.0));
        assert!((p.cost[(2, 3)] - 1.0).abs() < 1e-15);
        let g = brute_force_ground(&p).unwrap();
        assert_eq!(g.configs, vec![vec![-1, 1, 1, -1], vec![1, -1, -1, 1]]);
        assert!((g.energy + 1.5).abs() < 1e-12);
        assert!(cvim_coupling(&p)
            .iter()
            .enumerate()
            .all(|(k, &v)| if k % 5 == 0 { v == 0.0 } else { v < 0.0 }));
    }

    #[test]
    fn single_pair() {
        let mut c = DMatrix::zeros(3, 3);
        c[(0, 1)] = 1.0;
        c[(1, 0)] = 1.0;
        let g = brute_force_ground(&IsingProblem::from_matrix(c).unwrap()).unwrap();
        assert_eq!(g.configs.len(), 4);
        assert!(g.configs.iter().all(|s| s[0] * s[1] == -1));
        assert_eq!(g.energy, -1.0);
    }

    #[test]
    fn fair_split_of_two_ones() {
        let g = brute_force_ground(&npp_to_ising(&[1, 1]).unwrap()).unwrap();
        assert_eq!(g.configs, vec![vec![-1, 1], vec![1, -1]]);
    }

    #[test]
    fn diagonal_is_dropped() {
        let c = DMatrix::from_row_slice(2, 2, &[3.0, 1.0, 1.0, 0.0]);
        assert_eq!(IsingProblem::from_matrix(c).unwrap().cost[(0, 0)], 0.0);
    }

    #[test]
    fn asset_file_parsing() {
        assert_eq!(
            parse_assets("4\n5\n\n# c\n 6 \n7\n").unwrap(),
            vec![4, 5, 6, 7]
        );
        assert!(parse_assets("4\n-5\n").is_err());
        assert!(parse_assets("0\n").is_err());
    }

    #[test]
    fn index_convention() {
        assert_eq!(spins_to_index(&[1, 1, 1, 1]), 0);
        assert_eq!(spins_to_index(&[-1, 1, 1, 1]), 8);
        assert_eq!(spins_to_index(&[1, -1, -1, 1]), 6);
    }

    #[test]
    fn too_many_spins() {
        let p = IsingProblem::from_matrix(DMatrix::zeros(25, 25)).unwrap();
        assert!(matches!(brute_force_ground(&p), Err(Error::Capacity(_))));
    }
}
