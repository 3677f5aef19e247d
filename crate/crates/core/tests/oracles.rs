//! Closed forms checked against independent computations: statrs
//! densities, quadrature and posterior sampling.

use bandit_lan::arm_models::{LOGISTIC_FISHER, LOGISTIC_SCALE};
use bandit_lan::policies::{action_probabilities, estimate_action_probabilities};
use bandit_lan::{normal, oracle, ArmModel, Family, PolicySpec, PolicyState, RandomStream, ThetaVector};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

fn theta_grid() -> Vec<ThetaVector> {
    [[0.0, 0.0], [0.7, -0.3], [-2.5, 1.1], [10.0, 4.0]]
        .iter()
        .map(|v| ThetaVector::new(v.to_vec()).unwrap())
        .collect()
}

fn families() -> Vec<Family> {
    vec![
        Family::LogisticUnitVariance,
        Family::Gaussian { sigma2: 1.0 },
        Family::Gaussian { sigma2: 0.25 },
        Family::Gaussian { sigma2: 4.0 },
    ]
}

#[test]
fn normal_cdf_matches_integrated_density() {
    // statrs' own normal cdf is off by ~1e-12 near x = -2, so the reference is
    // 1/2 + integral of the density from 0 to x
    let n = Normal::new(0.0, 1.0).unwrap();
    for i in -80..=80 {
        let x = i as f64 / 10.0;
        let reference = 0.5 + oracle::simpson(|t| n.pdf(t), 0.0, x, 20_000);
        assert!((normal::cdf(x) - reference).abs() < 1e-14, "x={x} {:e} {:e}", normal::cdf(x), reference);
        assert!((normal::pdf(x) - n.pdf(x)).abs() < 1e-15, "x={x}");
    }
}

#[test]
fn gaussian_log_density_matches_statrs() {
    for sigma2 in [0.25, 1.0, 4.0] {
        let arm = ArmModel::gaussian(1, sigma2).unwrap();
        for th in theta_grid() {
            let law = Normal::new(th[1], sigma2.sqrt()).unwrap();
            for z in [-3.0, 0.0, 0.4, 7.5] {
                assert!((arm.log_density(&th, z) - law.ln_pdf(z)).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn logistic_density_matches_textbook_form() {
    let arm = ArmModel::logistic(0);
    let s = 3f64.sqrt() / std::f64::consts::PI;
    for th in theta_grid() {
        for z in [-5.0, -0.3, 0.0, 1.0, 6.0] {
            let e = (-(z - th[0]) / s).exp();
            let f = e / (s * (1.0 + e).powi(2));
            assert!((arm.log_density(&th, z) - f.ln()).abs() < 1e-12);
        }
    }
    assert!((LOGISTIC_SCALE - s).abs() < 1e-16);
}

#[test]
fn score_gradient_consistency_on_grid() {
    for f in families() {
        for k in 0..2 {
            let arm = ArmModel::new(f, k).unwrap();
            for th in theta_grid() {
                let err = oracle::max_score_fd_error(&arm, &th);
                assert!(err < 1e-5, "{f:?} arm {k} theta {:?}: {err}", th.as_slice());
            }
        }
    }
}

#[test]
fn fisher_and_zero_mean_by_quadrature() {
    let th = ThetaVector::new(vec![0.7, -0.3]).unwrap();
    for f in families() {
        let arm = ArmModel::new(f, 1).unwrap();
        let fisher = arm.fisher(&th);
        for i in 0..2 {
            for j in 0..2 {
                let q = oracle::quadrature_fisher(&arm, &th, i, j);
                assert!((q - fisher[(i, j)]).abs() < 1e-3, "{f:?} [{i},{j}] {q} vs {}", fisher[(i, j)]);
            }
            let mean = oracle::quadrature_score_mean(&arm, &th, i);
            assert!(mean.abs() < 5e-3 * fisher[(i, i)].sqrt().max(1e-300) || (i == 0 && mean == 0.0));
        }
    }
    let q = oracle::quadrature_fisher(&ArmModel::logistic(0), &th, 0, 0);
    assert!((q - 1.09662).abs() < 1e-3);
    assert!((q - LOGISTIC_FISHER).abs() < 1e-8);
}

#[test]
fn structural_sparsity_is_bit_exact() {
    for f in families() {
        let arm = ArmModel::new(f, 2).unwrap();
        let th = ThetaVector::new(vec![0.3, 1.0, -0.4, 2.0]).unwrap();
        let s = arm.score(&th, 0.9);
        let fi = arm.fisher(&th);
        for j in [0, 1, 3] {
            assert_eq!(s[j].to_bits(), 0.0f64.to_bits());
            for i in 0..4 {
                assert_eq!(fi[(i, j)].to_bits(), 0.0f64.to_bits());
                assert_eq!(fi[(j, i)].to_bits(), 0.0f64.to_bits());
            }
        }
    }
}

#[test]
fn thompson_closed_form_matches_posterior_sampling() {
    // posterior N(R/(D+1), 1/(D+1)) under the default N(0,1) prior
    let states = [(vec![3, 5], vec![1.2, -0.4]), (vec![0, 1], vec![0.0, 0.9]), (vec![20, 2], vec![5.0, 1.3]), (vec![7, 7], vec![2.0, 2.1]), (vec![1, 40], vec![-0.2, 3.0])];
    let n = Normal::new(0.0, 1.0).unwrap();
    let draws = 100_000;
    let mut rng = RandomStream::new(17);
    for (pulls, sums) in states {
        let post = |k: usize| (sums[k] / (pulls[k] as f64 + 1.0), 1.0 / (pulls[k] as f64 + 1.0));
        let ((m1, v1), (m2, v2)) = (post(0), post(1));
        let oracle_p2 = n.cdf((m2 - m1) / (v1 + v2).sqrt());
        let state = PolicyState::from_counts(pulls.clone(), sums.clone());
        let exact = action_probabilities(&state, &PolicySpec::thompson()).unwrap();
        assert!((exact[1] - oracle_p2).abs() < 1e-11);
        let freq = estimate_action_probabilities(&state, &PolicySpec::thompson(), &mut rng, draws).unwrap();
        let se = (oracle_p2 * (1.0 - oracle_p2) / draws as f64).sqrt();
        assert!((freq[1] - oracle_p2).abs() <= 3.0 * se, "{pulls:?}: {} vs {oracle_p2}", freq[1]);
    }
}
