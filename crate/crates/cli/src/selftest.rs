//! Oracle checks run by the `selftest` subcommand.

use bandit_lan::lan::{self, RateRegime};
use bandit_lan::monte_carlo::StudyConfig;
use bandit_lan::oracle;
use bandit_lan::{run_trajectory, ArmModel, ExperimentConfig, Family, PolicySpec, ThetaVector};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub value: f64,
    pub tolerance: f64,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.value.is_finite() && self.value <= self.tolerance
    }
}

fn theta(v: &[f64]) -> ThetaVector {
    ThetaVector::new(v.to_vec()).expect("finite theta")
}

fn families() -> [Family; 3] {
    [Family::LogisticUnitVariance, Family::Gaussian { sigma2: 1.0 }, Family::Gaussian { sigma2: 2.5 }]
}

/// `|quadrature Fisher − closed form|`, worst over families.
fn fisher_check() -> f64 {
    let th = theta(&[0.3, -0.2]);
    families()
        .iter()
        .map(|&f| {
            let arm = ArmModel::new(f, 0).expect("arm");
            (oracle::quadrature_fisher(&arm, &th, 0, 0) - f.location_info()).abs()
        })
        .fold(0.0, f64::max)
}

fn fd_check() -> f64 {
    let th = theta(&[0.3, -0.2]);
    families()
        .iter()
        .flat_map(|&f| (0..2).map(move |k| ArmModel::new(f, k).expect("arm")))
        .map(|arm| oracle::max_score_fd_error(&arm, &th))
        .fold(0.0, f64::max)
}

fn score_mean_check() -> f64 {
    let th = theta(&[0.3, -0.2]);
    families()
        .iter()
        .map(|&f| oracle::quadrature_score_mean(&ArmModel::new(f, 1).expect("arm"), &th, 1).abs())
        .fold(0.0, f64::max)
}

fn mixed_trajectories(family: Family, count: usize, horizon: usize) -> Vec<(ExperimentConfig, bandit_lan::Trajectory)> {
    let policies = [
        PolicySpec::thompson(),
        PolicySpec::Ucb1,
        PolicySpec::rct(vec![0.3, 0.7]),
        PolicySpec::clipped(PolicySpec::thompson(), 0.1),
    ];
    let arms = ArmModel::location_model(family, 2).expect("arms");
    (0..count)
        .map(|i| {
            let th = theta(&[0.4 + 0.01 * i as f64, 0.0]);
            let config = ExperimentConfig::new(arms.clone(), th, policies[i % 4].clone(), horizon, 1000 + i as u64)
                .expect("experiment");
            let traj = run_trajectory(&config);
            (config, traj)
        })
        .collect()
}

/// Worst relative error of `Σ_k Λ_k(a_k R⁻¹ h) = exact log-LR`.
pub fn decomposition_error(family: Family, count: usize, horizon: usize) -> Result<f64, CliError> {
    let h = [1.3, -0.7];
    let mut worst = 0.0f64;
    for (i, (config, traj)) in mixed_trajectories(family, count, horizon).into_iter().enumerate() {
        let regime = if i % 2 == 0 { RateRegime::LogRate } else { RateRegime::LinearRate };
        let rates = lan::rate_matrix(config.theta(), config.arms(), horizon, regime)?;
        let exact = lan::exact_log_lr(&traj, config.theta(), &lan::localize(config.theta(), &h, &rates), config.arms());
        let parts: f64 = (0..2)
            .map(|k| {
                let u = lan::per_arm_argument(&h, &rates, k);
                lan::per_arm_lambda(&traj, config.theta(), config.arms(), k, &u, &rates)
            })
            .sum();
        worst = worst.max((exact - parts).abs() / exact.abs().max(1e-300));
    }
    Ok(worst)
}

/// Worst `|uᵀS_k − ½uᵀJ_k u − Λ_k(u)|` for Gaussian arms, over several
/// trajectories, horizons and directions.
pub fn gaussian_exactness_error() -> Result<f64, CliError> {
    let mut worst = 0.0f64;
    for sigma2 in [1.0, 0.5, 3.0] {
        for horizon in [10, 500, 5000] {
            for (config, traj) in mixed_trajectories(Family::Gaussian { sigma2 }, 4, horizon) {
                let rates = lan::rate_matrix(config.theta(), config.arms(), horizon, RateRegime::LogRate)?;
                for u in [[0.5, -1.0], [3.0, 2.0]] {
                    for k in 0..2 {
                        let s = lan::per_arm_score_stat(&traj, config.theta(), config.arms(), k, &rates);
                        let j = lan::per_arm_info_stat(&traj, config.theta(), config.arms(), k, &rates);
                        let uv = nalgebra::DVector::from_column_slice(&u);
                        let quad = uv.dot(&s) - 0.5 * uv.dot(&(&j * &uv));
                        let lam = lan::per_arm_lambda(&traj, config.theta(), config.arms(), k, &u, &rates);
                        worst = worst.max((quad - lam).abs());
                    }
                }
            }
        }
    }
    Ok(worst)
}

/// Replay check over a small study; returns the number of mismatches.
fn replay_check() -> Result<f64, CliError> {
    let study = StudyConfig::two_arm(PolicySpec::thompson(), 300, vec![2.0, 10.0], 8, 5);
    let bad = bandit_lan::monte_carlo::map_replications(&study, |e, t| Ok(!bandit_lan::replay_check(t, e)))?;
    Ok(bad.into_iter().filter(|&b| b).count() as f64)
}

pub fn run_checks() -> Result<Vec<Check>, CliError> {
    Ok(vec![
        Check { name: "quadrature Fisher vs closed form", value: fisher_check(), tolerance: 1e-3 },
        Check { name: "finite-difference scores", value: fd_check(), tolerance: 1e-5 },
        Check { name: "score has mean zero", value: score_mean_check(), tolerance: 1e-6 },
        Check {
            name: "decomposition identity (logistic)",
            value: decomposition_error(Family::LogisticUnitVariance, 20, 500)?,
            tolerance: 1e-10,
        },
        Check { name: "Gaussian quadratic exactness", value: gaussian_exactness_error()?, tolerance: 1e-10 },
        Check { name: "trajectory replay mismatches", value: replay_check()?, tolerance: 0.0 },
    ])
}
