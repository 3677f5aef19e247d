//! Parametric reward families.
//!
//! Every arm is a location family: arm `k` reads one component of the
//! parameter vector (plus a fixed offset) as its mean. The component an arm
//! reads is declared up front, so the sparsity pattern of its score and
//! Fisher matrix is a property of the model, not of floating-point values.

use std::f64::consts::PI;
use std::ops::Index;

use nalgebra::{DMatrix, DVector};
use rand::distr::Open01;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::rng::RandomStream;

pub type ScoreVector = DVector<f64>;
pub type FisherMatrix = DMatrix<f64>;

/// Scale of the zero-mean logistic law with unit variance (`s² π² / 3 = 1`).
pub const LOGISTIC_SCALE: f64 = 0.551_328_895_421_792_1;

/// Fisher information of the unit-variance logistic location family, `π²/9`.
pub const LOGISTIC_FISHER: f64 = PI * PI / 9.0;

/// The model parameter θ.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaVector(Vec<f64>);

impl ThetaVector {
    pub fn new(components: Vec<f64>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::config("theta must have at least one component"));
        }
        if let Some(j) = components.iter().position(|v| !v.is_finite()) {
            return Err(Error::config(format!("theta[{j}] is not finite")));
        }
        Ok(ThetaVector(components))
    }

    pub fn zeros(p: usize) -> Self {
        ThetaVector(vec![0.0; p.max(1)])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// `self + step`, componentwise.
    pub fn shifted(&self, step: &[f64]) -> ThetaVector {
        assert_eq!(step.len(), self.len(), "shift dimension");
        ThetaVector(self.0.iter().zip(step).map(|(a, b)| a + b).collect())
    }
}

impl Index<usize> for ThetaVector {
    type Output = f64;

    fn index(&self, j: usize) -> &f64 {
        &self.0[j]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    /// Normal rewards with known variance.
    Gaussian { sigma2: f64 },
    /// Logistic rewards with scale [`LOGISTIC_SCALE`], i.e. unit variance.
    LogisticUnitVariance,
}

impl Family {
    /// Config-file name of the family.
    pub fn name(&self) -> &'static str {
        match self {
            Family::Gaussian { .. } => "gaussian",
            Family::LogisticUnitVariance => "logistic_unit_var",
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            Family::Gaussian { sigma2 } => sigma2,
            Family::LogisticUnitVariance => LOGISTIC_SCALE * LOGISTIC_SCALE * PI * PI / 3.0,
        }
    }

    /// Fisher information for the location parameter.
    pub fn location_info(&self) -> f64 {
        match *self {
            Family::Gaussian { sigma2 } => 1.0 / sigma2,
            Family::LogisticUnitVariance => 1.0 / (3.0 * LOGISTIC_SCALE * LOGISTIC_SCALE),
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Family::Gaussian { sigma2 } if !(sigma2 > 0.0 && sigma2.is_finite()) => Err(
                Error::config(format!("gaussian sigma2 must be positive, got {sigma2}")),
            ),
            _ => Ok(()),
        }
    }

    /// Log density of a standardised residual `x = z - location`.
    fn log_density_residual(&self, x: f64) -> f64 {
        match *self {
            Family::Gaussian { sigma2 } => -0.5 * (2.0 * PI * sigma2).ln() - x * x / (2.0 * sigma2),
            Family::LogisticUnitVariance => {
                let a = (x / LOGISTIC_SCALE).abs();
                -a - 2.0 * (-a).exp().ln_1p() - LOGISTIC_SCALE.ln()
            }
        }
    }

    /// Derivative of the log density with respect to the location.
    fn location_score(&self, x: f64) -> f64 {
        match *self {
            Family::Gaussian { sigma2 } => x / sigma2,
            Family::LogisticUnitVariance => (x / (2.0 * LOGISTIC_SCALE)).tanh() / LOGISTIC_SCALE,
        }
    }

    fn sample_residual(&self, rng: &mut RandomStream) -> f64 {
        match *self {
            Family::Gaussian { sigma2 } => {
                let z: f64 = rng.sample(StandardNormal);
                sigma2.sqrt() * z
            }
            Family::LogisticUnitVariance => {
                let u: f64 = rng.sample(Open01);
                LOGISTIC_SCALE * (u / (1.0 - u)).ln()
            }
        }
    }
}

/// One arm's reward law: `Z = theta[component] + offset + noise`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmModel {
    family: Family,
    component: usize,
    offset: f64,
}

impl ArmModel {
    pub fn new(family: Family, component: usize) -> Result<Self> {
        family.validate()?;
        Ok(ArmModel { family, component, offset: 0.0 })
    }

    pub fn gaussian(component: usize, sigma2: f64) -> Result<Self> {
        Self::new(Family::Gaussian { sigma2 }, component)
    }

    pub fn logistic(component: usize) -> Self {
        ArmModel { family: Family::LogisticUnitVariance, component, offset: 0.0 }
    }

    pub fn with_offset(mut self, offset: f64) -> Self {
        self.offset = offset;
        self
    }

    /// The location model with `k` arms: arm `i` reads `theta[i]` as its mean.
    pub fn location_model(family: Family, k: usize) -> Result<Vec<ArmModel>> {
        (0..k).map(|i| ArmModel::new(family, i)).collect()
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn component(&self) -> usize {
        self.component
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// Whether the density depends on `theta[j]`.
    pub fn depends_on(&self, j: usize) -> bool {
        j == self.component
    }

    fn location(&self, theta: &ThetaVector) -> f64 {
        theta[self.component] + self.offset
    }

    pub fn sample(&self, theta: &ThetaVector, rng: &mut RandomStream) -> f64 {
        self.location(theta) + self.family.sample_residual(rng)
    }

    pub fn log_density(&self, theta: &ThetaVector, z: f64) -> f64 {
        self.family.log_density_residual(z - self.location(theta))
    }

    pub fn score(&self, theta: &ThetaVector, z: f64) -> ScoreVector {
        let mut s = DVector::zeros(theta.len());
        s[self.component] = self.family.location_score(z - self.location(theta));
        s
    }

    /// Score entry for the arm's own component; every other entry is zero.
    pub fn location_score(&self, theta: &ThetaVector, z: f64) -> f64 {
        self.family.location_score(z - self.location(theta))
    }

    pub fn fisher(&self, theta: &ThetaVector) -> FisherMatrix {
        let p = theta.len();
        let mut m = DMatrix::zeros(p, p);
        m[(self.component, self.component)] = self.family.location_info();
        m
    }

    pub fn mean(&self, theta: &ThetaVector) -> f64 {
        self.location(theta)
    }

    /// Monte Carlo estimate of `E[r²] / |ω|²` for the DQM remainder
    ///
    /// `r(z | ω) = 2 (sqrt(f(z | θ+ω) / f(z | θ)) - 1) - score(z)ᵀ ω`
    ///
    /// using `n` draws from `f(· | θ)`. Pass streams with the same seed to
    /// compare several `ω` on common random numbers.
    pub fn dqm_remainder_stat(
        &self,
        theta: &ThetaVector,
        omega: &[f64],
        n: usize,
        rng: &mut RandomStream,
    ) -> f64 {
        let norm2: f64 = omega.iter().map(|w| w * w).sum();
        if norm2 == 0.0 || n == 0 {
            return 0.0;
        }
        let shifted = theta.shifted(omega);
        let mut acc = 0.0;
        for _ in 0..n {
            let z = self.sample(theta, rng);
            let half_log_ratio = 0.5 * (self.log_density(&shifted, z) - self.log_density(theta, z));
            let linear = self.location_score(theta, z) * omega[self.component];
            let r = 2.0 * half_log_ratio.exp_m1() - linear;
            acc += r * r;
        }
        acc / n as f64 / norm2
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn theta(v: &[f64]) -> ThetaVector {
        ThetaVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn logistic_scale_is_unit_variance() {
        assert_abs_diff_eq!(LOGISTIC_SCALE, 3f64.sqrt() / PI, epsilon = 1e-16);
        // s = sqrt(3)/pi has no f64 representation with s²π²/3 == 1 exactly;
        // the nearest one misses by a single ulp
        assert!((Family::LogisticUnitVariance.variance() - 1.0).abs() <= 2.0 * f64::EPSILON);
        assert_abs_diff_eq!(Family::LogisticUnitVariance.location_info(), LOGISTIC_FISHER, epsilon = 1e-15);
    }

    #[test]
    fn rejects_bad_sigma2() {
        assert!(ArmModel::gaussian(0, 0.0).is_err());
        assert!(ArmModel::gaussian(0, -1.0).is_err());
        assert!(ArmModel::gaussian(0, f64::NAN).is_err());
        assert!(ThetaVector::new(vec![0.0, f64::INFINITY]).is_err());
        assert!(ThetaVector::new(vec![]).is_err());
    }

    #[test]
    fn log_density_values() {
        let g = ArmModel::gaussian(0, 1.0).unwrap();
        assert_abs_diff_eq!(g.log_density(&theta(&[0.0, 0.0]), 0.0), -0.918_938_533_204_672_7, epsilon = 1e-14);
        let l = ArmModel::logistic(0);
        let expected = (1.0 / (4.0 * LOGISTIC_SCALE)).ln();
        assert_abs_diff_eq!(l.log_density(&theta(&[0.0, 0.0]), 0.0), expected, epsilon = 1e-14);
        assert_abs_diff_eq!(expected, -0.790_870_6, epsilon = 1e-7);
        // far tails stay finite
        assert!(l.log_density(&theta(&[0.0, 0.0]), 1e4).is_finite());
        assert!(l.log_density(&theta(&[0.0, 0.0]), -1e4).is_finite());
    }

    #[test]
    fn translation_invariance() {
        for arm in [ArmModel::gaussian(0, 2.0).unwrap(), ArmModel::logistic(0)] {
            for &(c, a) in &[(0.3, -1.2), (-4.0, 0.5), (10.0, 3.0)] {
                let lhs = arm.log_density(&theta(&[c, 0.0]), c + a);
                let rhs = arm.log_density(&theta(&[0.0, 0.0]), a);
                assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn score_values() {
        let g = ArmModel::gaussian(0, 1.0).unwrap();
        let s = g.score(&theta(&[0.0, 0.0]), 0.7);
        assert_eq!(s.as_slice(), &[0.7, 0.0]);
        let l = ArmModel::logistic(0);
        assert_eq!(l.score(&theta(&[0.0, 0.0]), 0.0).as_slice(), &[0.0, 0.0]);
        let s1 = l.score(&theta(&[0.0, 0.0]), 1.0);
        // (1/s) tanh(1/(2s)); a central difference of log_density agrees
        assert_abs_diff_eq!(s1[0], 1.305_284_153, epsilon = 1e-9);
        assert_eq!(s1[1], 0.0);
    }

    #[test]
    fn fisher_structure() {
        let t = theta(&[0.4, -1.0, 2.0]);
        let g = ArmModel::gaussian(1, 1.0).unwrap();
        let f = g.fisher(&t);
        for i in 0..3 {
            for j in 0..3 {
                let expected = if i == 1 && j == 1 { 1.0 } else { 0.0 };
                assert_eq!(f[(i, j)], expected);
            }
        }
        let l = ArmModel::logistic(2);
        assert_abs_diff_eq!(l.fisher(&t)[(2, 2)], 1.096_622_711_232_151, epsilon = 1e-12);
        // location family: information does not move with the mean
        assert_eq!(l.fisher(&t), l.fisher(&theta(&[0.4, -1.0, -7.5])));
    }

    #[test]
    fn means() {
        let arms = ArmModel::location_model(Family::LogisticUnitVariance, 2).unwrap();
        assert_eq!(arms[1].mean(&theta(&[0.5, 0.0])), 0.0);
        let mu1 = 50.0 / 500f64.sqrt();
        assert_abs_diff_eq!(arms[0].mean(&theta(&[mu1, 0.0])), 2.23607, epsilon = 1e-5);
        assert_eq!(arms[0].mean(&theta(&[1.25, 0.0])) - arms[0].mean(&theta(&[0.0, 0.0])), 1.25);
        let shifted = ArmModel::logistic(0).with_offset(1.0);
        assert_eq!(shifted.mean(&theta(&[0.5])), 1.5);
    }

    #[test]
    fn sample_is_deterministic() {
        let g = ArmModel::gaussian(0, 1.0).unwrap();
        let t = theta(&[0.0, 0.0]);
        let a = g.sample(&t, &mut RandomStream::new(11));
        let b = g.sample(&t, &mut RandomStream::new(11));
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn logistic_sample_moments() {
        let l = ArmModel::logistic(0);
        let mut rng = RandomStream::new(2024);
        let n = 1_000_000;
        let t5 = theta(&[5.0, 0.0]);
        let mean = (0..n).map(|_| l.sample(&t5, &mut rng)).sum::<f64>() / n as f64;
        assert!((mean - 5.0).abs() < 0.01, "mean {mean}");

        let t0 = theta(&[0.0, 0.0]);
        let xs: Vec<f64> = (0..n).map(|_| l.sample(&t0, &mut rng)).collect();
        let m = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1) as f64;
        assert!((var - 1.0).abs() < 0.02, "variance {var}");
    }

    #[test]
    fn dqm_zero_omega() {
        let l = ArmModel::logistic(0);
        let v = l.dqm_remainder_stat(&theta(&[0.0, 0.0]), &[0.0, 0.0], 10_000, &mut RandomStream::new(1));
        assert_eq!(v, 0.0);
    }

    #[test]
    fn dqm_decays() {
        let t = theta(&[0.0, 0.0]);
        let g = ArmModel::gaussian(0, 1.0).unwrap();
        let big = g.dqm_remainder_stat(&t, &[0.1, 0.0], 20_000, &mut RandomStream::new(5));
        let small = g.dqm_remainder_stat(&t, &[0.001, 0.0], 20_000, &mut RandomStream::new(5));
        assert!(small < big, "{small} !< {big}");

        let l = ArmModel::logistic(0);
        let big = l.dqm_remainder_stat(&t, &[0.1, 0.0], 10_000, &mut RandomStream::new(5));
        let small = l.dqm_remainder_stat(&t, &[0.01, 0.0], 10_000, &mut RandomStream::new(5));
        assert!(big / small >= 5.0, "ratio {}", big / small);
    }
}
