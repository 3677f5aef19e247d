//! Browser front end. Each export returns a JSON string; the plain-Rust
//! versions (`*_json`) are what the tests call.

use bandit_lan::lan::{InfoWeights, RateRegime};
use bandit_lan::monte_carlo::{self, GapScaling, LanTracking, StudyConfig};
use bandit_lan::policies::action_probabilities;
use bandit_lan::stats::{histogram, median, HistogramSpec};
use bandit_lan::{Family, PolicySpec, PolicyState};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Keeps a browser tab responsive.
const MAX_WORK: usize = 20_000_000;

fn policy(name: &str, epsilon: f64) -> Result<PolicySpec, String> {
    match name {
        "thompson" => Ok(PolicySpec::thompson()),
        "ucb1" => Ok(PolicySpec::Ucb1),
        "rct" => Ok(PolicySpec::rct(vec![0.5, 0.5])),
        "clipped" => Ok(PolicySpec::clipped(PolicySpec::thompson(), epsilon)),
        other => Err(format!("unknown policy {other:?}")),
    }
}

fn family(name: &str) -> Result<Family, String> {
    match name {
        "logistic" => Ok(Family::LogisticUnitVariance),
        "gaussian" => Ok(Family::Gaussian { sigma2: 1.0 }),
        other => Err(format!("unknown family {other:?}")),
    }
}

fn check_budget(work: usize) -> Result<(), String> {
    if work > MAX_WORK {
        return Err(format!("{work} simulated rounds requested; the demo allows {MAX_WORK}"));
    }
    Ok(())
}

#[derive(Serialize)]
struct Surface {
    d2: Vec<u64>,
    gap: Vec<f64>,
    /// `p2[i][j]`: probability of pulling arm 2 at `gap[i]`, `d2[j]`.
    p2: Vec<Vec<f64>>,
}

/// Probability that the next pull is arm 2, over a grid of arm-2 pull counts
/// and observed mean gaps, with arm 1 pulled `d1` times.
pub fn probability_surface_json(policy_name: &str, epsilon: f64, d1: u32, max_d2: u32, max_gap: f64) -> Result<String, String> {
    let spec = policy(policy_name, epsilon)?;
    spec.validate(2).map_err(|e| e.to_string())?;
    if max_d2 == 0 || max_d2 > 500 || !(max_gap > 0.0) {
        return Err("need 1 <= max_d2 <= 500 and max_gap > 0".into());
    }
    let d2: Vec<u64> = (1..=max_d2 as u64).collect();
    let gap: Vec<f64> = (0..=40).map(|i| max_gap * i as f64 / 40.0).collect();
    let mut p2 = Vec::with_capacity(gap.len());
    for &g in &gap {
        let mut row = Vec::with_capacity(d2.len());
        for &n2 in &d2 {
            // arm 1 mean g, arm 2 mean 0
            let state = PolicyState::from_counts(vec![d1 as u64, n2], vec![g * d1 as f64, 0.0]);
            row.push(action_probabilities(&state, &spec).map_err(|e| e.to_string())?[1]);
        }
        p2.push(row);
    }
    serde_json::to_string(&Surface { d2, gap, p2 }).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct Panel {
    name: &'static str,
    lo: f64,
    width: f64,
    /// Interior bins only; `underflow`/`overflow` count the rest.
    counts: Vec<u64>,
    underflow: u64,
    overflow: u64,
    ks: Option<f64>,
    missing: usize,
}

#[derive(Serialize)]
struct CellResult {
    policy: String,
    m1: f64,
    horizon: usize,
    reps: usize,
    median_d2: f64,
    panels: Vec<Panel>,
}

fn panel(name: &'static str, samples: &[Option<f64>], spec: HistogramSpec, ks: bool) -> Result<Panel, String> {
    let present: Vec<f64> = samples.iter().flatten().copied().collect();
    let all = histogram(&present, spec).map_err(|e| e.to_string())?;
    let ks = if ks { bandit_lan::stats::ks_distance(samples).ok().map(|k| k.distance) } else { None };
    Ok(Panel {
        name,
        lo: spec.lo,
        width: spec.width(),
        counts: all[1..=spec.bins].to_vec(),
        underflow: all[0],
        overflow: all[spec.bins + 1],
        ks,
        missing: samples.len() - present.len(),
    })
}

/// One row of the pull-count / t-statistic grid for a logistic two-armed
/// design with `μ1 = m1/√T`, `μ2 = 0`.
pub fn simulate_cell_json(policy_name: &str, epsilon: f64, m1: f64, horizon: u32, reps: u32, seed: u32) -> Result<String, String> {
    let spec = policy(policy_name, epsilon)?;
    let horizon = horizon as usize;
    check_budget(horizon * reps as usize)?;
    let config = StudyConfig::two_arm(spec, horizon, vec![m1], reps as usize, seed as u64);
    let records = monte_carlo::run_study(&config).map_err(|e| e.to_string())?;
    let d2: Vec<Option<f64>> = records.iter().map(|r| Some(r.pulls[1] as f64)).collect();
    let mu1: Vec<Option<f64>> = records.iter().map(|r| r.tau_mu[0]).collect();
    let mu2: Vec<Option<f64>> = records.iter().map(|r| r.tau_mu[1]).collect();
    let delta: Vec<Option<f64>> = records.iter().map(|r| r.tau_delta).collect();
    let t = HistogramSpec { lo: -6.0, hi: 6.0, bins: 61 };
    let panels = vec![
        panel("D2", &d2, HistogramSpec::counts(horizon as u64), false)?,
        panel("tau_mu1", &mu1, t, true)?,
        panel("tau_mu2", &mu2, t, true)?,
        panel("tau_delta", &delta, t, true)?,
    ];
    let result = CellResult {
        policy: policy_name.to_string(),
        m1,
        horizon,
        reps: reps as usize,
        median_d2: median(&d2.iter().flatten().copied().collect::<Vec<_>>()),
        panels,
    };
    serde_json::to_string(&result).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct ResidualPoint {
    horizon: usize,
    median_abs: f64,
    q25_abs: f64,
    q75_abs: f64,
}

/// Median `|exact log-LR − quadratic approximation|` across horizons, for
/// logistic or Gaussian arms under a fixed gap `θ = (gap, 0)`.
pub fn residual_curve_json(policy_name: &str, family_name: &str, gap: f64, h1: f64, h2: f64, reps: u32, seed: u32) -> Result<String, String> {
    let spec = policy(policy_name, 0.1)?;
    let regime = if spec.is_log_rate() { RateRegime::LogRate } else { RateRegime::LinearRate };
    let horizons = [100usize, 300, 1000, 3000, 10000];
    check_budget(horizons.iter().sum::<usize>() * reps as usize)?;
    let mut points = Vec::new();
    for horizon in horizons {
        let config = StudyConfig {
            family: family(family_name)?,
            gap_scaling: GapScaling::Fixed,
            lan: Some(LanTracking { h: vec![h1, h2], regime, weights: InfoWeights::Empirical }),
            ..StudyConfig::two_arm(spec.clone(), horizon, vec![gap], reps as usize, seed as u64)
        };
        let records = monte_carlo::run_study(&config).map_err(|e| e.to_string())?;
        let mut abs: Vec<f64> = records.iter().filter_map(|r| r.lan.map(|l| l.residual.abs())).collect();
        abs.sort_by(f64::total_cmp);
        let q = |p| bandit_lan::stats::quantile_sorted(&abs, p);
        points.push(ResidualPoint { horizon, median_abs: q(0.5), q25_abs: q(0.25), q75_abs: q(0.75) });
    }
    serde_json::to_string(&points).map_err(|e| e.to_string())
}

#[wasm_bindgen]
pub fn probability_surface(policy: &str, epsilon: f64, d1: u32, max_d2: u32, max_gap: f64) -> Result<String, JsValue> {
    probability_surface_json(policy, epsilon, d1, max_d2, max_gap).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn simulate_cell(policy: &str, epsilon: f64, m1: f64, horizon: u32, reps: u32, seed: u32) -> Result<String, JsValue> {
    simulate_cell_json(policy, epsilon, m1, horizon, reps, seed).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn residual_curve(policy: &str, family: &str, gap: f64, h1: f64, h2: f64, reps: u32, seed: u32) -> Result<String, JsValue> {
    residual_curve_json(policy, family, gap, h1, h2, reps, seed).map_err(|e| JsValue::from_str(&e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::Value;

    #[test]
    fn surface_is_monotone_in_gap() {
        let v: Value = serde_json::from_str(&probability_surface_json("thompson", 0.0, 20, 10, 2.0).unwrap()).unwrap();
        let p2 = v["p2"].as_array().unwrap();
        assert_eq!(p2.len(), 41);
        assert!((p2[0][0].as_f64().unwrap() - 0.5).abs() < 0.2);
        for j in 0..10 {
            let col: Vec<f64> = p2.iter().map(|r| r[j].as_f64().unwrap()).collect();
            assert!(col.windows(2).all(|w| w[1] <= w[0]));
        }
    }

    #[test]
    fn clipped_surface_respects_floor() {
        let v: Value = serde_json::from_str(&probability_surface_json("clipped", 0.1, 50, 50, 5.0).unwrap()).unwrap();
        for row in v["p2"].as_array().unwrap() {
            for p in row.as_array().unwrap() {
                let p = p.as_f64().unwrap();
                assert!((0.1 - 1e-12..=0.9 + 1e-12).contains(&p));
            }
        }
        assert!(probability_surface_json("clipped", 0.6, 5, 5, 1.0).is_err());
        assert!(probability_surface_json("greedy", 0.1, 5, 5, 1.0).is_err());
    }

    #[test]
    fn cell_counts_add_up() {
        let v: Value = serde_json::from_str(&simulate_cell_json("thompson", 0.0, 75.0, 200, 300, 1).unwrap()).unwrap();
        for p in v["panels"].as_array().unwrap() {
            let interior: u64 = p["counts"].as_array().unwrap().iter().map(|c| c.as_u64().unwrap()).sum();
            let total = interior + p["underflow"].as_u64().unwrap() + p["overflow"].as_u64().unwrap();
            assert_eq!(total + p["missing"].as_u64().unwrap(), 300);
        }
        assert!(simulate_cell_json("thompson", 0.0, 2.0, 100_000, 1000, 1).is_err());
    }

    #[test]
    fn residual_curve_decreases_for_rct() {
        let v: Value = serde_json::from_str(&residual_curve_json("rct", "logistic", 1.0, 1.0, 1.0, 200, 3).unwrap()).unwrap();
        let m: Vec<f64> = v.as_array().unwrap().iter().map(|p| p["median_abs"].as_f64().unwrap()).collect();
        assert_eq!(m.len(), 5);
        assert!(m[4] < m[0]);
        let g: Value = serde_json::from_str(&residual_curve_json("rct", "gaussian", 1.0, 1.0, 1.0, 20, 3).unwrap()).unwrap();
        assert!(g.as_array().unwrap().iter().all(|p| p["median_abs"].as_f64().unwrap() < 1e-9));
    }
}
