use num_complex::Complex64;
use rayon::prelude::*;

use super::trajectory::TrajectorySpec;
use super::{Series, TrajectoryRecord};
use crate::error::{Error, Result};

/// Largest failed fraction an ensemble tolerates.
const MAX_FAILED_FRACTION: f64 = 0.1;

/// Seed of trajectory `index` in an ensemble started from `base`.
pub fn trajectory_seed(base: u64, index: usize) -> u64 {
    base ^ index as u64
}

/// Runs `n_traj` trajectories in parallel; element `k` uses
/// `trajectory_seed(base_seed, k)`.
pub fn run_trajectories(
    spec: &TrajectorySpec,
    n_traj: usize,
    base_seed: u64,
) -> Result<Vec<Result<TrajectoryRecord>>> {
    let prepared = spec.prepare()?;
    Ok((0..n_traj)
        .into_par_iter()
        .map(|k| prepared.run(trajectory_seed(base_seed, k)))
        .collect())
}

/// Per-trajectory statistics kept after the state is dropped.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectorySummary {
    pub seed: u64,
    pub jump_times: Vec<f64>,
    pub success: f64,
    pub max_leakage: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleResult {
    /// Trajectories requested.
    pub n_traj: usize,
    /// Trajectories that completed and were evaluated.
    pub n_completed: usize,
    pub failures: Vec<String>,
    pub success_fraction: f64,
    pub stderr_success: f64,
    pub mean_jump_count: f64,
    pub stderr_jumps: f64,
    /// Sample-wise averages over completed trajectories.
    pub sample_times: Vec<f64>,
    pub mean_observables: Vec<Series>,
    pub max_leakage: f64,
    pub trajectories: Vec<TrajectorySummary>,
}

fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Summary, sampled observables and sample times of one trajectory.
pub type TrajectoryOutcome = Result<(TrajectorySummary, Vec<Series>, Vec<f64>)>;

impl EnsembleResult {
    /// Aggregates in index order, so the result does not depend on how the
    /// trajectories were scheduled.
    pub fn aggregate(outcomes: Vec<TrajectoryOutcome>) -> Result<EnsembleResult> {
        let n_traj = outcomes.len();
        if n_traj == 0 {
            return Err(Error::param("n_traj", "must be >= 1"));
        }
        let mut failures = Vec::new();
        let mut trajectories = Vec::new();
        let mut sums: Option<Vec<Series>> = None;
        let mut sample_times = Vec::new();
        for outcome in outcomes {
            match outcome {
                Ok((summary, series, times)) => {
                    match &mut sums {
                        None => {
                            sums = Some(series);
                            sample_times = times;
                        }
                        Some(acc) => {
                            for (a, s) in acc.iter_mut().zip(series) {
                                for (x, y) in a.values.iter_mut().zip(s.values) {
                                    *x += y;
                                }
                            }
                        }
                    }
                    trajectories.push(summary);
                }
                Err(e) => failures.push(e.to_string()),
            }
        }
        if failures.len() as f64 > MAX_FAILED_FRACTION * n_traj as f64 {
            return Err(Error::Ensemble {
                failed: failures.len(),
                total: n_traj,
                first: failures[0].clone(),
            });
        }
        let n_completed = trajectories.len();
        let mut mean_observables = sums.unwrap_or_default();
        let scale = Complex64::new(1.0 / n_completed.max(1) as f64, 0.0);
        for s in &mut mean_observables {
            s.values.iter_mut().for_each(|v| *v *= scale);
        }
        let successes: Vec<f64> = trajectories.iter().map(|t| t.success).collect();
        let jumps: Vec<f64> = trajectories
            .iter()
            .map(|t| t.jump_times.len() as f64)
            .collect();
        let (success_fraction, stderr_success) = mean_and_stderr(&successes);
        let (mean_jump_count, stderr_jumps) = mean_and_stderr(&jumps);
        let max_leakage = trajectories
            .iter()
            .map(|t| t.max_leakage)
            .fold(0.0, f64::max);
        Ok(EnsembleResult {
            n_traj,
            n_completed,
            failures,
            success_fraction,
            stderr_success,
            mean_jump_count,
            stderr_jumps,
            sample_times,
            mean_observables,
            max_leakage,
            trajectories,
        })
    }

    pub fn mean_series(&self, name: &str) -> Option<&Series> {
        self.mean_observables.iter().find(|s| s.name == name)
    }
}

fn summarize<E>(
    record: Result<TrajectoryRecord>,
    evaluator: &E,
) -> Result<(TrajectorySummary, Vec<Series>, Vec<f64>)>
where
    E: Fn(&TrajectoryRecord) -> Result<f64>,
{
    let record = record?;
    let success = evaluator(&record)?;
    if !(0.0..=1.0).contains(&success) {
        return Err(Error::Evaluation(format!(
            "evaluator returned {success}, outside [0, 1]"
        )));
    }
    let summary = TrajectorySummary {
        seed: record.seed,
        jump_times: record.jumps.iter().map(|j| j.time).collect(),
        success,
        max_leakage: record.max_leakage,
    };
    Ok((summary, record.observables, record.sample_times))
}

/// Runs an MCWF ensemble and scores every trajectory with `evaluator`,
/// which returns a success value in `[0, 1]` (1/0 for single-shot
/// outcomes, a probability otherwise).
///
/// Failed trajectories are excluded and listed; more than 10% failures is
/// an error. Without active channels a single run is shared by all seeds.
pub fn ensemble_run<E>(
    spec: &TrajectorySpec,
    n_traj: usize,
    base_seed: u64,
    evaluator: E,
) -> Result<EnsembleResult>
where
    E: Fn(&TrajectoryRecord) -> Result<f64> + Sync,
{
    if n_traj == 0 {
        return Err(Error::param("n_traj", "must be >= 1"));
    }
    let prepared = spec.prepare()?;
    if prepared.is_deterministic() {
        // one run stands in for all seeds
        let first = summarize(prepared.run(trajectory_seed(base_seed, 0)), &evaluator);
        let outcomes = (0..n_traj)
            .map(|k| match &first {
                Ok((summary, series, times)) => Ok((
                    TrajectorySummary {
                        seed: trajectory_seed(base_seed, k),
                        ..summary.clone()
                    },
                    series.clone(),
                    times.clone(),
                )),
                Err(e) => Err(Error::Evaluation(e.to_string())),
            })
            .collect();
        return EnsembleResult::aggregate(outcomes);
    }
    let outcomes = (0..n_traj)
        .into_par_iter()
        .map(|k| summarize(prepared.run(trajectory_seed(base_seed, k)), &evaluator))
        .collect();
    EnsembleResult::aggregate(outcomes)
}
