//! Sampling strategies.
//!
//! A policy sees only the history summary held in [`PolicyState`] (pull
//! counts, reward sums and the round number). None of the functions here
//! take the model parameter, so action probabilities cannot depend on it.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::normal;
use crate::rng::RandomStream;

#[derive(Debug, Clone, PartialEq)]
pub enum PolicySpec {
    /// Gaussian Thompson sampling with an `N(0, prior_var)` prior and a
    /// known reward variance `assumed_var`.
    Thompson { prior_var: f64, assumed_var: f64 },
    /// UCB1 with index `R_k/D_k + sqrt(2 ln(t+1) / D_k)`. Rounds `1..=K`
    /// pull arms `1..=K` in order; ties go to the lowest arm index.
    Ucb1,
    /// Fixed, history-independent weights.
    Rct { weights: Vec<f64> },
    /// `inner`'s probabilities constrained to `[epsilon, 1 - (K-1) epsilon]`.
    Clipped { inner: Box<PolicySpec>, epsilon: f64 },
}

impl PolicySpec {
    /// Default Thompson sampler: `N(0, 1)` prior, unit variance.
    pub fn thompson() -> Self {
        PolicySpec::Thompson { prior_var: 1.0, assumed_var: 1.0 }
    }

    pub fn rct(weights: Vec<f64>) -> Self {
        PolicySpec::Rct { weights }
    }

    pub fn clipped(inner: PolicySpec, epsilon: f64) -> Self {
        PolicySpec::Clipped { inner: Box::new(inner), epsilon }
    }

    /// Config-file name of the policy kind.
    pub fn name(&self) -> &'static str {
        match self {
            PolicySpec::Thompson { .. } => "thompson",
            PolicySpec::Ucb1 => "ucb1",
            PolicySpec::Rct { .. } => "rct",
            PolicySpec::Clipped { .. } => "clipped",
        }
    }

    /// Whether suboptimal arms are pulled at a logarithmic rate (Thompson,
    /// UCB1) rather than a linear one (RCT, clipped).
    pub fn is_log_rate(&self) -> bool {
        matches!(self, PolicySpec::Thompson { .. } | PolicySpec::Ucb1)
    }

    /// Checks the parameters for a `k`-armed problem.
    ///
    /// RCT weights may contain zeros here (a degenerate design that is useful
    /// in tests); the config-file front end requires them to be positive.
    pub fn validate(&self, k: usize) -> Result<()> {
        match self {
            PolicySpec::Thompson { prior_var, assumed_var } => {
                if !(*prior_var > 0.0 && prior_var.is_finite()) {
                    return Err(Error::config(format!("thompson.prior_var must be positive, got {prior_var}")));
                }
                if !(*assumed_var > 0.0 && assumed_var.is_finite()) {
                    return Err(Error::config(format!("thompson.assumed_var must be positive, got {assumed_var}")));
                }
                Ok(())
            }
            PolicySpec::Ucb1 => Ok(()),
            PolicySpec::Rct { weights } => {
                if weights.len() != k {
                    return Err(Error::config(format!("rct.weights has {} entries for {k} arms", weights.len())));
                }
                if weights.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
                    return Err(Error::config("rct.weights must be non-negative"));
                }
                let total: f64 = weights.iter().sum();
                if (total - 1.0).abs() > 1e-9 {
                    return Err(Error::config(format!("rct.weights sum to {total}, not 1")));
                }
                Ok(())
            }
            PolicySpec::Clipped { inner, epsilon } => {
                if !(*epsilon > 0.0 && *epsilon < 1.0 / k as f64) {
                    return Err(Error::config(format!("clipped.epsilon must lie in (0, 1/{k}), got {epsilon}")));
                }
                if matches!(**inner, PolicySpec::Clipped { .. }) {
                    return Err(Error::config("clipped.inner cannot itself be clipped"));
                }
                if k > 2 && matches!(**inner, PolicySpec::Thompson { .. }) {
                    return Err(Error::ProbabilitiesUnavailable(format!("clipped thompson with {k} arms")));
                }
                inner.validate(k)
            }
        }
    }
}

/// History summary seen by a policy.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyState {
    pulls: Vec<u64>,
    sums: Vec<f64>,
    round: u64,
}

impl PolicyState {
    pub fn new(k: usize) -> Self {
        PolicyState { pulls: vec![0; k], sums: vec![0.0; k], round: 0 }
    }

    /// Builds a state from explicit counts and sums; the round is `Σ D_k`.
    pub fn from_counts(pulls: Vec<u64>, sums: Vec<f64>) -> Self {
        assert_eq!(pulls.len(), sums.len(), "pulls and sums must have the same length");
        let round = pulls.iter().sum();
        PolicyState { pulls, sums, round }
    }

    pub fn arms(&self) -> usize {
        self.pulls.len()
    }

    pub fn pulls(&self) -> &[u64] {
        &self.pulls
    }

    pub fn sums(&self) -> &[f64] {
        &self.sums
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    /// Records the outcome of pulling `action` (0-based).
    ///
    /// # Panics
    ///
    /// If `action` is not a valid arm index.
    pub fn update(&mut self, action: usize, reward: f64) {
        assert!(action < self.pulls.len(), "action {action} out of range for {} arms", self.pulls.len());
        self.pulls[action] += 1;
        self.sums[action] += reward;
        self.round += 1;
    }

    fn gaussian_posterior(&self, k: usize, prior_var: f64, assumed_var: f64) -> (f64, f64) {
        let precision = 1.0 / prior_var + self.pulls[k] as f64 / assumed_var;
        ((self.sums[k] / assumed_var) / precision, 1.0 / precision)
    }
}

/// Exact conditional action probabilities `π_{t+1}(k)` given the history.
///
/// Thompson sampling with more than two arms has no closed form; use
/// [`estimate_action_probabilities`] for it.
pub fn action_probabilities(state: &PolicyState, spec: &PolicySpec) -> Result<Vec<f64>> {
    let k = state.arms();
    match spec {
        PolicySpec::Thompson { prior_var, assumed_var } => {
            if k != 2 {
                return Err(Error::ProbabilitiesUnavailable(format!("thompson with {k} arms")));
            }
            let (m1, v1) = state.gaussian_posterior(0, *prior_var, *assumed_var);
            let (m2, v2) = state.gaussian_posterior(1, *prior_var, *assumed_var);
            let z = (m2 - m1) / (v1 + v2).sqrt();
            Ok(vec![normal::cdf(-z), normal::cdf(z)])
        }
        PolicySpec::Ucb1 => {
            let mut p = vec![0.0; k];
            p[ucb1_choice(state)] = 1.0;
            Ok(p)
        }
        PolicySpec::Rct { weights } => {
            if weights.len() != k {
                return Err(Error::Dimension { expected: k, got: weights.len() });
            }
            Ok(weights.clone())
        }
        PolicySpec::Clipped { inner, epsilon } => {
            let q = action_probabilities(state, inner)?;
            Ok(clip_probabilities(&q, *epsilon))
        }
    }
}

/// Posterior-draw frequencies for Thompson sampling (any `K`), or the exact
/// probabilities for every other policy.
pub fn estimate_action_probabilities(
    state: &PolicyState,
    spec: &PolicySpec,
    rng: &mut RandomStream,
    draws: usize,
) -> Result<Vec<f64>> {
    match spec {
        PolicySpec::Thompson { prior_var, assumed_var } => {
            let mut counts = vec![0usize; state.arms()];
            for _ in 0..draws {
                counts[thompson_argmax(state, *prior_var, *assumed_var, rng)] += 1;
            }
            Ok(counts.into_iter().map(|c| c as f64 / draws as f64).collect())
        }
        _ => action_probabilities(state, spec),
    }
}

/// Draws the next action (0-based).
///
/// Every policy with exact probabilities consumes one uniform per call and
/// inverts the cumulative distribution. Thompson sampling with `K > 2`
/// draws one posterior sample per arm and takes the argmax.
pub fn draw_action(state: &PolicyState, spec: &PolicySpec, rng: &mut RandomStream) -> usize {
    if let PolicySpec::Thompson { prior_var, assumed_var } = spec {
        if state.arms() != 2 {
            return thompson_argmax(state, *prior_var, *assumed_var, rng);
        }
    }
    let probs = action_probabilities(state, spec).expect("policy validated against arm count");
    sample_index(&probs, rng.random::<f64>())
}

fn sample_index(probs: &[f64], u: f64) -> usize {
    let mut cumulative = 0.0;
    for (k, p) in probs.iter().enumerate() {
        cumulative += p;
        if u < cumulative {
            return k;
        }
    }
    // rounding left u above the final cumulative sum
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(probs.len() - 1)
}

fn thompson_argmax(state: &PolicyState, prior_var: f64, assumed_var: f64, rng: &mut RandomStream) -> usize {
    let mut best = 0;
    let mut best_value = f64::NEG_INFINITY;
    for k in 0..state.arms() {
        let (m, v) = state.gaussian_posterior(k, prior_var, assumed_var);
        let z: f64 = rng.sample(StandardNormal);
        let value = m + v.sqrt() * z;
        if value > best_value {
            best = k;
            best_value = value;
        }
    }
    best
}

fn ucb1_choice(state: &PolicyState) -> usize {
    // forced initialisation: under UCB1 alone, round t+1 <= K pulls arm t+1
    if let Some(k) = state.pulls().iter().position(|&d| d == 0) {
        return k;
    }
    let round = state.round();
    let bonus_num = 2.0 * ((round + 1) as f64).ln();
    let mut best = 0;
    let mut best_index = f64::NEG_INFINITY;
    for (k, (&d, &r)) in state.pulls().iter().zip(state.sums()).enumerate() {
        let d = d as f64;
        let index = r / d + (bonus_num / d).sqrt();
        if index > best_index {
            best = k;
            best_index = index;
        }
    }
    best
}

/// Projects `q` onto `{p : p_k >= epsilon, Σ p_k = 1}` by repeated
/// clip-and-renormalise: entries that would fall below `epsilon` are pinned
/// there and the remaining mass is shared in proportion to `q`.
pub fn clip_probabilities(q: &[f64], epsilon: f64) -> Vec<f64> {
    let k = q.len();
    let mut pinned = vec![false; k];
    loop {
        let free_mass = 1.0 - epsilon * pinned.iter().filter(|&&b| b).count() as f64;
        let free_q: f64 = q.iter().zip(&pinned).filter(|(_, &b)| !b).map(|(v, _)| v).sum();
        let free_count = pinned.iter().filter(|&&b| !b).count();
        let p: Vec<f64> = q
            .iter()
            .zip(&pinned)
            .map(|(&v, &b)| {
                if b {
                    epsilon
                } else if free_q > 0.0 {
                    free_mass * v / free_q
                } else {
                    free_mass / free_count as f64
                }
            })
            .collect();
        let mut changed = false;
        for j in 0..k {
            if !pinned[j] && p[j] < epsilon {
                pinned[j] = true;
                changed = true;
            }
        }
        if !changed {
            return p;
        }
    }
}
