//! Numerical cross-checks of the closed-form scores and Fisher matrices.
//!
//! Everything here goes through [`ArmModel::log_density`] only: scores are
//! recovered by central finite differences and expectations by quadrature
//! against the density, so a mistake in the closed forms shows up as a
//! disagreement.

use crate::arm_models::{ArmModel, Family, ThetaVector};

/// Composite Simpson rule on `[a, b]` with `n` (even) subintervals.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let n = if n % 2 == 1 { n + 1 } else { n };
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

/// Central difference of `log_density` with respect to `theta[j]`.
pub fn fd_score(arm: &ArmModel, theta: &ThetaVector, z: f64, j: usize, step: f64) -> f64 {
    let mut e = vec![0.0; theta.len()];
    e[j] = step;
    let plus = theta.shifted(&e);
    e[j] = -step;
    let minus = theta.shifted(&e);
    (arm.log_density(&plus, z) - arm.log_density(&minus, z)) / (2.0 * step)
}

fn integration_window(arm: &ArmModel, theta: &ThetaVector) -> (f64, f64) {
    let m = arm.mean(theta);
    let sd = arm.family().variance().sqrt();
    let half = match arm.family() {
        Family::Gaussian { .. } => 40.0 * sd,
        // logistic tails decay like exp(-|x|/s); 80 sd leaves < 1e-60 of mass
        Family::LogisticUnitVariance => 80.0 * sd,
    };
    (m - half, m + half)
}

/// `E_θ[score_i · score_j]` by quadrature, using finite-difference scores.
pub fn quadrature_fisher(arm: &ArmModel, theta: &ThetaVector, i: usize, j: usize) -> f64 {
    let (a, b) = integration_window(arm, theta);
    simpson(
        |z| {
            let dens = arm.log_density(theta, z).exp();
            dens * fd_score(arm, theta, z, i, 1e-5) * fd_score(arm, theta, z, j, 1e-5)
        },
        a,
        b,
        200_000,
    )
}

/// `E_θ[score_j]` by quadrature.
pub fn quadrature_score_mean(arm: &ArmModel, theta: &ThetaVector, j: usize) -> f64 {
    let (a, b) = integration_window(arm, theta);
    simpson(|z| arm.log_density(theta, z).exp() * fd_score(arm, theta, z, j, 1e-5), a, b, 200_000)
}

/// Largest `|closed-form score − finite difference|` over 21 points spanning
/// ±4 standard deviations and every component of θ.
pub fn max_score_fd_error(arm: &ArmModel, theta: &ThetaVector) -> f64 {
    let m = arm.mean(theta);
    let sd = arm.family().variance().sqrt();
    let mut worst = 0.0f64;
    for i in 0..21 {
        let z = m + sd * (-4.0 + 0.4 * i as f64);
        let s = arm.score(theta, z);
        for j in 0..theta.len() {
            worst = worst.max((s[j] - fd_score(arm, theta, z, j, 1e-6)).abs());
        }
    }
    worst
}
