//! Single-trajectory simulation.

use std::io::{self, Write};

use crate::arm_models::{ArmModel, ThetaVector};
use crate::error::{Error, Result};
use crate::policies::{draw_action, PolicySpec, PolicyState};
use crate::rng::{RandomStream, ACTION_STREAM, REWARD_STREAM};

/// Everything needed to run one bandit trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    arms: Vec<ArmModel>,
    theta: ThetaVector,
    policy: PolicySpec,
    horizon: usize,
    seed: u64,
}

impl ExperimentConfig {
    pub fn new(arms: Vec<ArmModel>, theta: ThetaVector, policy: PolicySpec, horizon: usize, seed: u64) -> Result<Self> {
        let k = arms.len();
        if k < 2 {
            return Err(Error::config(format!("a bandit needs at least 2 arms, got {k}")));
        }
        if horizon < k {
            return Err(Error::config(format!("horizon T={horizon} is smaller than the number of arms {k}")));
        }
        if let Some(arm) = arms.iter().find(|a| a.component() >= theta.len()) {
            return Err(Error::config(format!(
                "arm reads theta[{}] but theta has {} components",
                arm.component(),
                theta.len()
            )));
        }
        policy.validate(k)?;
        Ok(ExperimentConfig { arms, theta, policy, horizon, seed })
    }

    pub fn arms(&self) -> &[ArmModel] {
        &self.arms
    }

    pub fn theta(&self) -> &ThetaVector {
        &self.theta
    }

    pub fn policy(&self) -> &PolicySpec {
        &self.policy
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        ExperimentConfig { seed, ..self.clone() }
    }
}

/// One realised run: actions are 0-based arm indices.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub actions: Vec<usize>,
    pub rewards: Vec<f64>,
    pub pull_counts: Vec<u64>,
    pub reward_sums: Vec<f64>,
}

impl Trajectory {
    pub fn horizon(&self) -> usize {
        self.actions.len()
    }

    pub fn arms(&self) -> usize {
        self.pull_counts.len()
    }

    /// Pull counts `D_{k,t}` after the first `t` rounds.
    pub fn pulls_after(&self, t: usize) -> Vec<u64> {
        let mut d = vec![0; self.arms()];
        for &a in &self.actions[..t.min(self.actions.len())] {
            d[a] += 1;
        }
        d
    }

    /// Rewards of the rounds in which arm `k` was pulled, in time order.
    pub fn rewards_of(&self, k: usize) -> impl Iterator<Item = f64> + '_ {
        self.actions.iter().zip(&self.rewards).filter(move |(&a, _)| a == k).map(|(_, &y)| y)
    }

    /// Writes the history as CSV with columns `t, action, reward`
    /// (1-based round and arm numbers).
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "t,action,reward")?;
        for (t, (&a, &y)) in self.actions.iter().zip(&self.rewards).enumerate() {
            writeln!(out, "{},{},{:.16e}", t + 1, a + 1, y)?;
        }
        Ok(())
    }
}

/// Runs `config.horizon()` rounds. Only the chosen arm's reward is drawn.
pub fn run_trajectory(config: &ExperimentConfig) -> Trajectory {
    let k = config.arms.len();
    let mut action_rng = RandomStream::substream(config.seed, ACTION_STREAM);
    let mut reward_rng = RandomStream::substream(config.seed, REWARD_STREAM);
    let mut state = PolicyState::new(k);
    let mut actions = Vec::with_capacity(config.horizon);
    let mut rewards = Vec::with_capacity(config.horizon);
    for _ in 0..config.horizon {
        let a = draw_action(&state, &config.policy, &mut action_rng);
        let y = config.arms[a].sample(&config.theta, &mut reward_rng);
        state.update(a, y);
        actions.push(a);
        rewards.push(y);
    }
    Trajectory {
        actions,
        rewards,
        pull_counts: state.pulls().to_vec(),
        reward_sums: state.sums().to_vec(),
    }
}

/// Recomputes pull counts and reward sums from the history and compares
/// them bit-exactly with the stored totals.
pub fn replay_check(traj: &Trajectory, config: &ExperimentConfig) -> bool {
    let k = config.arms.len();
    if traj.actions.len() != traj.rewards.len()
        || traj.actions.len() != config.horizon
        || traj.pull_counts.len() != k
        || traj.reward_sums.len() != k
    {
        return false;
    }
    let mut d = vec![0u64; k];
    let mut r = vec![0.0f64; k];
    for (&a, &y) in traj.actions.iter().zip(&traj.rewards) {
        if a >= k {
            return false;
        }
        d[a] += 1;
        r[a] += y;
    }
    d == traj.pull_counts && r.iter().zip(&traj.reward_sums).all(|(x, y)| x.to_bits() == y.to_bits())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arm_models::Family;

    fn config(policy: PolicySpec, horizon: usize, seed: u64) -> ExperimentConfig {
        let arms = ArmModel::location_model(Family::LogisticUnitVariance, 2).unwrap();
        let theta = ThetaVector::new(vec![0.5, 0.0]).unwrap();
        ExperimentConfig::new(arms, theta, policy, horizon, seed).unwrap()
    }

    #[test]
    fn degenerate_rct_pulls_one_arm() {
        let traj = run_trajectory(&config(PolicySpec::rct(vec![1.0, 0.0]), 50, 1));
        assert!(traj.actions.iter().all(|&a| a == 0));
        assert_eq!(traj.pull_counts, vec![50, 0]);
    }

    #[test]
    fn deterministic() {
        let c = config(PolicySpec::thompson(), 300, 99);
        let a = run_trajectory(&c);
        let b = run_trajectory(&c);
        assert_eq!(a.actions, b.actions);
        assert_eq!(
            a.rewards.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            b.rewards.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
        assert_ne!(a, run_trajectory(&c.with_seed(100)));
    }

    #[test]
    fn ucb1_initialisation() {
        let traj = run_trajectory(&config(PolicySpec::Ucb1, 2, 3));
        assert_eq!(traj.actions, vec![0, 1]);
    }

    #[test]
    fn replay() {
        let c = config(PolicySpec::rct(vec![0.4, 0.6]), 200, 5);
        let mut traj = run_trajectory(&c);
        assert!(replay_check(&traj, &c));
        assert_eq!(traj.pull_counts.iter().sum::<u64>(), 200);
        traj.reward_sums[1] += 1e-12;
        assert!(!replay_check(&traj, &c));
    }

    #[test]
    fn config_preconditions() {
        let arms = ArmModel::location_model(Family::LogisticUnitVariance, 2).unwrap();
        let theta = ThetaVector::new(vec![0.5, 0.0]).unwrap();
        assert!(ExperimentConfig::new(arms.clone(), theta.clone(), PolicySpec::Ucb1, 1, 0).is_err());
        assert!(ExperimentConfig::new(arms[..1].to_vec(), theta.clone(), PolicySpec::Ucb1, 10, 0).is_err());
        let short = ThetaVector::new(vec![0.5]).unwrap();
        assert!(ExperimentConfig::new(arms, short, PolicySpec::Ucb1, 10, 0).is_err());
    }

    #[test]
    fn action_and_reward_streams_are_separate() {
        // Same seed, different policies: the first reward drawn for arm 1 is
        // the first value of the shared reward stream either way.
        let a = run_trajectory(&config(PolicySpec::rct(vec![1.0, 0.0]), 5, 8));
        let b = run_trajectory(&config(PolicySpec::Ucb1, 5, 8));
        assert_eq!(a.rewards[0].to_bits(), b.rewards[0].to_bits());
    }

    #[test]
    fn csv_dump() {
        let traj = run_trajectory(&config(PolicySpec::Ucb1, 3, 2));
        let mut buf = Vec::new();
        traj.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,action,reward");
        assert!(lines[1].starts_with("1,1,"));
        assert!(lines[2].starts_with("2,2,"));
        assert_eq!(lines.len(), 4);
    }
}
