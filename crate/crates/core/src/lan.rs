//! Likelihood-ratio expansion objects for a realised trajectory.
//!
//! Components of θ informed by the optimal arm are localised at rate
//! `sqrt(T)`; all others at `sqrt(s_T)`, where `s_T = ln T` when suboptimal
//! arms are pulled logarithmically often and `s_T = T` when every arm is
//! pulled at a linear rate. Which components an arm informs is read from its
//! declared parameter map, never from comparing floats with zero.

use nalgebra::{DMatrix, DVector};

use crate::arm_models::{ArmModel, ThetaVector};
use crate::engine::Trajectory;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RateRegime {
    /// Suboptimal arms pulled `~ C_k ln T` times: `s_T = ln T`.
    LogRate,
    /// Every arm pulled `~ C_k T` times: `s_T = T`.
    LinearRate,
}

impl RateRegime {
    pub fn s(&self, horizon: usize) -> f64 {
        match self {
            RateRegime::LogRate => (horizon as f64).ln(),
            RateRegime::LinearRate => horizon as f64,
        }
    }

    /// Config-file name (`case_b` / `case_b_star`).
    pub fn name(&self) -> &'static str {
        match self {
            RateRegime::LogRate => "case_b",
            RateRegime::LinearRate => "case_b_star",
        }
    }
}

/// Diagonal localisation rates `r_{j,T}`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateMatrix {
    pub diag: Vec<f64>,
    pub horizon: usize,
    pub regime: RateRegime,
    pub optimal_arm: usize,
}

impl RateMatrix {
    /// Per-arm rate `a_{k,T}`: `sqrt(T)` for the optimal arm, `sqrt(s_T)`
    /// otherwise.
    pub fn arm_rate(&self, k: usize) -> f64 {
        if k == self.optimal_arm {
            (self.horizon as f64).sqrt()
        } else {
            self.regime.s(self.horizon).sqrt()
        }
    }

    /// `a²_{k,T}`, computed without a round trip through the square root.
    pub fn arm_rate_sq(&self, k: usize) -> f64 {
        if k == self.optimal_arm {
            self.horizon as f64
        } else {
            self.regime.s(self.horizon)
        }
    }
}

/// Source of the constants `C_k` weighting the Fisher matrices in the
/// linear-rate regime.
#[derive(Debug, Clone, PartialEq)]
pub enum InfoWeights {
    /// `D_{k,T} / T` from the trajectory.
    Empirical,
    /// Known limits, e.g. RCT weights.
    Given(Vec<f64>),
}

/// Index of the arm with the strictly largest mean.
pub fn optimal_arm(theta: &ThetaVector, arms: &[ArmModel]) -> Result<usize> {
    let mut best = 0;
    let mut best_mean = f64::NEG_INFINITY;
    for (k, arm) in arms.iter().enumerate() {
        let m = arm.mean(theta);
        if m > best_mean {
            best = k;
            best_mean = m;
        }
    }
    if let Some(other) = (0..arms.len()).find(|&k| k != best && arms[k].mean(theta) == best_mean) {
        return Err(Error::UniqueOptimalArmViolation(best.min(other), best.max(other)));
    }
    Ok(best)
}

/// Whether `J_{θ,k*}[j,j] > 0` by declaration.
fn informed_by(arm: &ArmModel, j: usize) -> bool {
    arm.depends_on(j)
}

pub fn rate_matrix(theta: &ThetaVector, arms: &[ArmModel], horizon: usize, regime: RateRegime) -> Result<RateMatrix> {
    if horizon < 2 {
        return Err(Error::config(format!("rate matrix needs T >= 2, got {horizon}")));
    }
    let star = optimal_arm(theta, arms)?;
    let fast = (horizon as f64).sqrt();
    let slow = regime.s(horizon).sqrt();
    let diag = (0..theta.len())
        .map(|j| if informed_by(&arms[star], j) { fast } else { slow })
        .collect();
    Ok(RateMatrix { diag, horizon, regime, optimal_arm: star })
}

/// `θ + R⁻¹ h`.
pub fn localize(theta: &ThetaVector, h: &[f64], rates: &RateMatrix) -> ThetaVector {
    let step: Vec<f64> = h.iter().zip(&rates.diag).map(|(hj, r)| hj / r).collect();
    theta.shifted(&step)
}

/// `S_{k,T} = a_{k,T}⁻¹ Σ_{t: A_t = k} score_k(Y_t)`.
pub fn per_arm_score_stat(
    traj: &Trajectory,
    theta: &ThetaVector,
    arms: &[ArmModel],
    k: usize,
    rates: &RateMatrix,
) -> DVector<f64> {
    let arm = &arms[k];
    let total: f64 = traj.rewards_of(k).map(|y| arm.location_score(theta, y)).sum();
    let mut s = DVector::zeros(theta.len());
    s[arm.component()] = total / rates.arm_rate(k);
    s
}

/// `J_{k,T} = (D_{k,T} / a²_{k,T}) J_{θ,k}`.
pub fn per_arm_info_stat(
    traj: &Trajectory,
    theta: &ThetaVector,
    arms: &[ArmModel],
    k: usize,
    rates: &RateMatrix,
) -> DMatrix<f64> {
    arms[k].fisher(theta) * (traj.pull_counts[k] as f64 / rates.arm_rate_sq(k))
}

/// Central sequence `Δ_T` from the per-arm score statistics.
pub fn central_sequence(
    scores: &[DVector<f64>],
    theta: &ThetaVector,
    arms: &[ArmModel],
    regime: RateRegime,
) -> Result<DVector<f64>> {
    let p = theta.len();
    let mut delta = DVector::zeros(p);
    match regime {
        RateRegime::LinearRate => {
            for s in scores {
                delta += s;
            }
        }
        RateRegime::LogRate => {
            let star = optimal_arm(theta, arms)?;
            for j in 0..p {
                delta[j] = scores[star][j];
                if !informed_by(&arms[star], j) {
                    delta[j] += scores.iter().enumerate().filter(|&(k, _)| k != star).map(|(_, s)| s[j]).sum::<f64>();
                }
            }
        }
    }
    Ok(delta)
}

/// Information matrix `𝒥`. `weights` are the `C_k`, required in the
/// linear-rate regime and ignored otherwise.
pub fn info_matrix(
    theta: &ThetaVector,
    arms: &[ArmModel],
    weights: Option<&[f64]>,
    regime: RateRegime,
) -> Result<DMatrix<f64>> {
    let p = theta.len();
    match regime {
        RateRegime::LinearRate => {
            let c = weights.ok_or(Error::MissingInfoWeights)?;
            if c.len() != arms.len() {
                return Err(Error::Dimension { expected: arms.len(), got: c.len() });
            }
            let mut m = DMatrix::zeros(p, p);
            for (arm, &ck) in arms.iter().zip(c) {
                m += arm.fisher(theta) * ck;
            }
            Ok(m)
        }
        RateRegime::LogRate => {
            let star = optimal_arm(theta, arms)?;
            let mut m = arms[star].fisher(theta);
            let fishers: Vec<DMatrix<f64>> = arms.iter().map(|a| a.fisher(theta)).collect();
            for l in 0..p {
                for c in 0..p {
                    // J_{θ,k*}[l,c] is structurally nonzero only on the arm's own diagonal cell
                    let structural_zero = !(informed_by(&arms[star], l) && l == c);
                    if structural_zero {
                        m[(l, c)] += (0..arms.len()).filter(|&k| k != star).map(|k| fishers[k][(l, c)]).sum::<f64>();
                    }
                }
            }
            Ok(m)
        }
    }
}

/// `Σ_t [log f_{A_t}(Y_t | θ') − log f_{A_t}(Y_t | θ)]`. The policy factors
/// cancel and are not evaluated.
pub fn exact_log_lr(traj: &Trajectory, theta: &ThetaVector, theta_alt: &ThetaVector, arms: &[ArmModel]) -> f64 {
    traj.actions
        .iter()
        .zip(&traj.rewards)
        .map(|(&a, &y)| arms[a].log_density(theta_alt, y) - arms[a].log_density(theta, y))
        .sum()
}

/// `Λ_k(u) = Σ_{t: A_t = k} log f_k(Y_t | θ + u / a_{k,T}) / f_k(Y_t | θ)`.
pub fn per_arm_lambda(
    traj: &Trajectory,
    theta: &ThetaVector,
    arms: &[ArmModel],
    k: usize,
    u: &[f64],
    rates: &RateMatrix,
) -> f64 {
    let a = rates.arm_rate(k);
    let step: Vec<f64> = u.iter().map(|v| v / a).collect();
    let shifted = theta.shifted(&step);
    let arm = &arms[k];
    traj.rewards_of(k).map(|y| arm.log_density(&shifted, y) - arm.log_density(theta, y)).sum()
}

/// The per-arm argument `a_{k,T} R⁻¹ h` at which `Σ_k Λ_k` reproduces the
/// full log-likelihood ratio.
pub fn per_arm_argument(h: &[f64], rates: &RateMatrix, k: usize) -> Vec<f64> {
    let a = rates.arm_rate(k);
    h.iter().zip(&rates.diag).map(|(hj, r)| a * hj / r).collect()
}

/// `hᵀΔ − ½ hᵀ𝒥h`.
pub fn quadratic_approx(delta: &DVector<f64>, info: &DMatrix<f64>, h: &[f64]) -> f64 {
    let h = DVector::from_column_slice(h);
    h.dot(delta) - 0.5 * h.dot(&(info * &h))
}

/// Every expansion object for one trajectory and local direction `h`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionReport {
    pub rates: RateMatrix,
    pub per_arm_scores: Vec<DVector<f64>>,
    pub per_arm_info: Vec<DMatrix<f64>>,
    pub central_sequence: DVector<f64>,
    pub info_matrix: DMatrix<f64>,
    pub exact_llr: f64,
    pub quad_llr: f64,
    pub residual: f64,
}

impl ExpansionReport {
    pub fn compute(
        traj: &Trajectory,
        theta: &ThetaVector,
        arms: &[ArmModel],
        h: &[f64],
        regime: RateRegime,
        weights: &InfoWeights,
    ) -> Result<Self> {
        if h.len() != theta.len() {
            return Err(Error::Dimension { expected: theta.len(), got: h.len() });
        }
        let horizon = traj.horizon();
        let rates = rate_matrix(theta, arms, horizon, regime)?;
        let k = arms.len();
        let per_arm_scores: Vec<_> = (0..k).map(|i| per_arm_score_stat(traj, theta, arms, i, &rates)).collect();
        let per_arm_info: Vec<_> = (0..k).map(|i| per_arm_info_stat(traj, theta, arms, i, &rates)).collect();
        let central = central_sequence(&per_arm_scores, theta, arms, regime)?;
        let c: Vec<f64> = match weights {
            InfoWeights::Empirical => traj.pull_counts.iter().map(|&d| d as f64 / horizon as f64).collect(),
            InfoWeights::Given(c) => c.clone(),
        };
        let info = info_matrix(theta, arms, Some(&c), regime)?;
        let exact_llr = exact_log_lr(traj, theta, &localize(theta, h, &rates), arms);
        let quad_llr = quadratic_approx(&central, &info, h);
        Ok(ExpansionReport {
            rates,
            per_arm_scores,
            per_arm_info,
            central_sequence: central,
            info_matrix: info,
            exact_llr,
            quad_llr,
            residual: exact_llr - quad_llr,
        })
    }
}
