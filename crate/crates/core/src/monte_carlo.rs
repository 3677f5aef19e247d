//! Replication harness for the two-armed location experiment and its
//! generalisation to `K` arms.
//!
//! A study runs `replications` seeded trajectories for every value of the
//! local offset `m1` in its grid. The seed of replication `rep` in cell
//! `cell` is [`replication_seed`]`(base_seed, cell, rep)`, so results do not
//! depend on how work is scheduled across threads.

use crate::arm_models::{ArmModel, Family, ThetaVector};
use crate::engine::{run_trajectory, ExperimentConfig, Trajectory};
use crate::error::{Error, Result};
use crate::lan::{ExpansionReport, InfoWeights, RateRegime};
use crate::policies::PolicySpec;
use crate::rng::replication_seed;
use crate::stats::{self, quantile_sorted, KsResult};

/// How `m1` maps to the mean of arm 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GapScaling {
    /// `μ1 = m1 / sqrt(T)` (local alternatives).
    SqrtT,
    /// `μ1 = m1` (fixed gap).
    Fixed,
}

impl GapScaling {
    pub fn name(&self) -> &'static str {
        match self {
            GapScaling::SqrtT => "sqrt_t",
            GapScaling::Fixed => "fixed",
        }
    }
}

/// Local-direction settings for tracking the likelihood-ratio expansion.
#[derive(Debug, Clone, PartialEq)]
pub struct LanTracking {
    pub h: Vec<f64>,
    pub regime: RateRegime,
    pub weights: InfoWeights,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub family: Family,
    pub arms: usize,
    pub horizon: usize,
    pub policy: PolicySpec,
    /// Means of arms `2..=K`.
    pub other_means: Vec<f64>,
    pub gap_scaling: GapScaling,
    pub m1_grid: Vec<f64>,
    pub replications: usize,
    pub base_seed: u64,
    pub lan: Option<LanTracking>,
}

impl StudyConfig {
    /// The two-armed logistic design: `μ2 = 0`, `μ1 = m1 / sqrt(T)`.
    pub fn two_arm(policy: PolicySpec, horizon: usize, m1_grid: Vec<f64>, replications: usize, base_seed: u64) -> Self {
        StudyConfig {
            family: Family::LogisticUnitVariance,
            arms: 2,
            horizon,
            policy,
            other_means: vec![0.0],
            gap_scaling: GapScaling::SqrtT,
            m1_grid,
            replications,
            base_seed,
            lan: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::config("replications must be at least 1"));
        }
        if self.m1_grid.is_empty() {
            return Err(Error::config("m1 grid is empty"));
        }
        if self.other_means.len() + 1 != self.arms {
            return Err(Error::config(format!(
                "{} arms need {} other means, got {}",
                self.arms,
                self.arms - 1,
                self.other_means.len()
            )));
        }
        if let Some(lan) = &self.lan {
            if lan.h.len() != self.arms {
                return Err(Error::Dimension { expected: self.arms, got: lan.h.len() });
            }
        }
        // builds (and so validates) the experiment for the first cell
        self.experiment(0, 0).map(|_| ())
    }

    pub fn mean_of_first_arm(&self, m1: f64) -> f64 {
        match self.gap_scaling {
            GapScaling::SqrtT => m1 / (self.horizon as f64).sqrt(),
            GapScaling::Fixed => m1,
        }
    }

    pub fn theta(&self, m1: f64) -> Result<ThetaVector> {
        let mut v = Vec::with_capacity(self.arms);
        v.push(self.mean_of_first_arm(m1));
        v.extend_from_slice(&self.other_means);
        ThetaVector::new(v)
    }

    pub fn arm_models(&self) -> Result<Vec<ArmModel>> {
        ArmModel::location_model(self.family, self.arms)
    }

    /// The experiment of replication `rep` in cell `cell`.
    pub fn experiment(&self, cell: usize, rep: usize) -> Result<ExperimentConfig> {
        let m1 = *self.m1_grid.get(cell).ok_or_else(|| Error::config(format!("no m1 cell {cell}")))?;
        ExperimentConfig::new(
            self.arm_models()?,
            self.theta(m1)?,
            self.policy.clone(),
            self.horizon,
            replication_seed(self.base_seed, cell as u64, rep as u64),
        )
    }

    pub fn cells(&self) -> usize {
        self.m1_grid.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LanValues {
    pub exact_llr: f64,
    pub quad_llr: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationRecord {
    pub cell: usize,
    pub rep: usize,
    pub m1: f64,
    pub seed: u64,
    pub pulls: Vec<u64>,
    pub tau_mu: Vec<Option<f64>>,
    pub tau_delta: Option<f64>,
    pub lan: Option<LanValues>,
}

impl ReplicationRecord {
    pub fn has_missing(&self) -> bool {
        self.pulls.contains(&0)
    }
}

/// `τ^μ_k = (R_k/D_k − μ_k) / sqrt(1/D_k)`; `None` when arm `k` was never pulled.
pub fn t_stat_arm(traj: &Trajectory, k: usize, mu_k: f64) -> Option<f64> {
    let d = traj.pull_counts[k];
    if d == 0 {
        return None;
    }
    let d = d as f64;
    Some((traj.reward_sums[k] / d - mu_k) / (1.0 / d).sqrt())
}

/// `τ^δ = (R_1/D_1 − R_2/D_2 − δ) / sqrt(1/D_1 + 1/D_2)` for two arms.
pub fn t_stat_diff(traj: &Trajectory, delta: f64) -> Result<Option<f64>> {
    if traj.arms() != 2 {
        return Err(Error::config(format!("the difference statistic needs 2 arms, got {}", traj.arms())));
    }
    let (d1, d2) = (traj.pull_counts[0], traj.pull_counts[1]);
    if d1 == 0 || d2 == 0 {
        return Ok(None);
    }
    let (d1, d2) = (d1 as f64, d2 as f64);
    let diff = traj.reward_sums[0] / d1 - traj.reward_sums[1] / d2;
    Ok(Some((diff - delta) / (1.0 / d1 + 1.0 / d2).sqrt()))
}

fn record_for(
    config: &StudyConfig,
    cell: usize,
    rep: usize,
    on_trajectory: &(dyn Fn(usize, usize, &Trajectory) + Sync),
) -> Result<ReplicationRecord> {
    let experiment = config.experiment(cell, rep)?;
    let traj = run_trajectory(&experiment);
    on_trajectory(cell, rep, &traj);
    let theta = experiment.theta();
    let arms = experiment.arms();
    let means: Vec<f64> = arms.iter().map(|a| a.mean(theta)).collect();
    let tau_mu = (0..arms.len()).map(|k| t_stat_arm(&traj, k, means[k])).collect();
    let tau_delta = if arms.len() == 2 { t_stat_diff(&traj, means[0] - means[1])? } else { None };
    let lan = match &config.lan {
        Some(l) => {
            let rep = ExpansionReport::compute(&traj, theta, arms, &l.h, l.regime, &l.weights)?;
            Some(LanValues { exact_llr: rep.exact_llr, quad_llr: rep.quad_llr, residual: rep.residual })
        }
        None => None,
    };
    Ok(ReplicationRecord {
        cell,
        rep,
        m1: config.m1_grid[cell],
        seed: experiment.seed(),
        pulls: traj.pull_counts.clone(),
        tau_mu,
        tau_delta,
        lan,
    })
}

/// Runs `f(i)` for `i in 0..n` and returns the results in index order.
pub(crate) fn ordered_map<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// One record per `(m1, rep)` cell, ordered by cell then replication.
///
/// Work is spread over the current rayon pool (wrap the call in
/// `ThreadPool::install` to pick a size); the output does not depend on it.
pub fn run_study(config: &StudyConfig) -> Result<Vec<ReplicationRecord>> {
    run_study_with(config, &|_, _, _| {})
}

/// [`run_study`] with a hook called on every trajectory, e.g. to dump it.
pub fn run_study_with(
    config: &StudyConfig,
    on_trajectory: &(dyn Fn(usize, usize, &Trajectory) + Sync),
) -> Result<Vec<ReplicationRecord>> {
    config.validate()?;
    let reps = config.replications;
    let n = config.cells() * reps;
    ordered_map(n, |i| record_for(config, i / reps, i % reps, on_trajectory)).into_iter().collect()
}

/// Runs every replication and applies `f(experiment, trajectory)`, returning
/// results ordered by cell then replication.
pub fn map_replications<T, F>(config: &StudyConfig, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&ExperimentConfig, &Trajectory) -> Result<T> + Sync + Send,
{
    config.validate()?;
    let reps = config.replications;
    ordered_map(config.cells() * reps, |i| {
        let experiment = config.experiment(i / reps, i % reps)?;
        f(&experiment, &run_trajectory(&experiment))
    })
    .into_iter()
    .collect()
}

/// KS distances and pull-count summary for one `m1` cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub cell: usize,
    pub m1: f64,
    pub horizon: usize,
    pub n_reps: usize,
    pub ks_tau_mu: Vec<Option<KsResult>>,
    pub ks_tau_delta: Option<KsResult>,
    /// Replications with at least one arm never pulled.
    pub n_missing: usize,
    pub median_d2: f64,
    pub q25_d2: f64,
    pub q75_d2: f64,
}

pub fn summarize(records: &[ReplicationRecord], config: &StudyConfig) -> Vec<CellSummary> {
    (0..config.cells())
        .map(|cell| {
            let rows: Vec<&ReplicationRecord> = records.iter().filter(|r| r.cell == cell).collect();
            let ks_tau_mu = (0..config.arms)
                .map(|k| stats::ks_distance(&rows.iter().map(|r| r.tau_mu[k]).collect::<Vec<_>>()).ok())
                .collect();
            let ks_tau_delta = if config.arms == 2 {
                stats::ks_distance(&rows.iter().map(|r| r.tau_delta).collect::<Vec<_>>()).ok()
            } else {
                None
            };
            let mut d2: Vec<f64> = rows.iter().map(|r| r.pulls[1] as f64).collect();
            d2.sort_by(f64::total_cmp);
            let (median_d2, q25_d2, q75_d2) = if d2.is_empty() {
                (f64::NAN, f64::NAN, f64::NAN)
            } else {
                (quantile_sorted(&d2, 0.5), quantile_sorted(&d2, 0.25), quantile_sorted(&d2, 0.75))
            };
            CellSummary {
                cell,
                m1: config.m1_grid[cell],
                horizon: config.horizon,
                n_reps: rows.len(),
                ks_tau_mu,
                ks_tau_delta,
                n_missing: rows.iter().filter(|r| r.has_missing()).count(),
                median_d2,
                q25_d2,
                q75_d2,
            }
        })
        .collect()
}

/// How pull counts are normalised in the convergence table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PullScale {
    /// `D_{k,T'} / ln T'` (adaptive policies).
    LogT,
    /// `D_{k,T'} / T'` (fixed or clipped designs).
    Linear,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub m1: f64,
    pub checkpoint: usize,
    pub arm: usize,
    pub scale: PullScale,
    pub median: f64,
    pub q25: f64,
    pub q75: f64,
    /// `2σ²/Δ_k²` for well-specified Gaussian adaptive designs, the weight
    /// for RCTs, otherwise `None`.
    pub reference: Option<f64>,
}

/// Reference pull-rate constant for arm `k`, when one is known.
fn reference_constant(config: &StudyConfig, means: &[f64], star: usize, k: usize) -> Option<f64> {
    match (&config.policy, config.family) {
        (PolicySpec::Rct { weights }, _) => Some(weights[k]),
        (PolicySpec::Thompson { assumed_var, .. }, Family::Gaussian { sigma2 }) if *assumed_var == sigma2 => {
            let gap = means[star] - means[k];
            Some(2.0 * sigma2 / (gap * gap))
        }
        (PolicySpec::Ucb1, Family::Gaussian { sigma2 }) => {
            let gap = means[star] - means[k];
            Some(2.0 * sigma2 / (gap * gap))
        }
        _ => None,
    }
}

/// Distribution of normalised pull counts at each checkpoint.
///
/// Adaptive policies report suboptimal arms on the `ln T'` scale; fixed and
/// clipped designs report every arm on the `T'` scale.
pub fn convergence_diag(config: &StudyConfig, checkpoints: &[usize]) -> Result<Vec<ConvergenceRow>> {
    config.validate()?;
    if checkpoints.is_empty() || checkpoints.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::config("checkpoints must be non-empty and strictly increasing"));
    }
    if checkpoints[0] < 2 || *checkpoints.last().unwrap() > config.horizon {
        return Err(Error::config(format!("checkpoints must lie in [2, {}]", config.horizon)));
    }
    let scale = if config.policy.is_log_rate() { PullScale::LogT } else { PullScale::Linear };
    let reps = config.replications;
    let mut rows = Vec::new();
    for cell in 0..config.cells() {
        let probe = config.experiment(cell, 0)?;
        let means: Vec<f64> = probe.arms().iter().map(|a| a.mean(probe.theta())).collect();
        let star = crate::lan::optimal_arm(probe.theta(), probe.arms())?;
        let counts: Vec<Vec<Vec<u64>>> = ordered_map(reps, |rep| {
            let traj = run_trajectory(&config.experiment(cell, rep).expect("validated"));
            checkpoints.iter().map(|&c| traj.pulls_after(c)).collect()
        });
        for (ci, &c) in checkpoints.iter().enumerate() {
            let norm = match scale {
                PullScale::LogT => (c as f64).ln(),
                PullScale::Linear => c as f64,
            };
            for arm in 0..config.arms {
                if scale == PullScale::LogT && arm == star {
                    continue;
                }
                let mut v: Vec<f64> = counts.iter().map(|per_rep| per_rep[ci][arm] as f64 / norm).collect();
                v.sort_by(f64::total_cmp);
                rows.push(ConvergenceRow {
                    m1: config.m1_grid[cell],
                    checkpoint: c,
                    arm,
                    scale,
                    median: quantile_sorted(&v, 0.5),
                    q25: quantile_sorted(&v, 0.25),
                    q75: quantile_sorted(&v, 0.75),
                    reference: reference_constant(config, &means, star, arm),
                });
            }
        }
    }
    Ok(rows)
}
