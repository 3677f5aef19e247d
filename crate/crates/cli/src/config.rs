//! Flat `key=value` configuration files.
//!
//! Blank lines and lines starting with `#` are ignored. Keys use dotted
//! sections (`policy.kind=thompson`, `study.T=500`). Lists are comma
//! separated. Every key must appear in [`KNOWN_KEYS`].

use std::collections::BTreeMap;

use bandit_lan::lan::{InfoWeights, RateRegime};
use bandit_lan::monte_carlo::{GapScaling, LanTracking};
use bandit_lan::{Family, PolicySpec, StudyConfig};

use crate::error::CliError;

/// Accepted keys with a one-line description each.
pub const KNOWN_KEYS: &[(&str, &str)] = &[
    ("policy", "alias of policy.kind"),
    ("policy.kind", "thompson | ucb1 | rct | clipped"),
    ("thompson.prior_var", "prior variance of the Gaussian Thompson sampler (default 1)"),
    ("thompson.assumed_var", "reward variance assumed by the Thompson sampler (default 1)"),
    ("rct.weights", "comma-separated positive weights summing to 1"),
    ("clipped.epsilon", "probability floor in (0, 1/K)"),
    ("clipped.inner", "policy being clipped: thompson | ucb1 | rct"),
    ("arms.family", "gaussian | logistic_unit_var"),
    ("arms.sigma2", "reward variance of gaussian arms (default 1)"),
    ("arms.K", "number of arms (default 2)"),
    ("arms.other_means", "means of arms 2..K (default all 0)"),
    ("study.T", "horizon"),
    ("study.replications", "replications per m1 cell"),
    ("study.base_seed", "unsigned 64-bit base seed"),
    ("study.m1", "comma-separated m1 grid"),
    ("study.gap_scaling", "sqrt_t (mu1 = m1/sqrt(T)) | fixed (mu1 = m1)"),
    ("lan.h", "local direction h, one entry per component; enables expansion tracking"),
    ("lan.regime", "case_b | case_b_star"),
    ("lan.info_weights", "empirical | true (true uses the rct weights)"),
    ("lan.t_ladder", "comma-separated horizons for lan-check"),
    ("convergence.checkpoints", "comma-separated increasing checkpoints"),
    ("histogram.lo", "lower edge for t-statistic histograms (default -6)"),
    ("histogram.hi", "upper edge for t-statistic histograms (default 6)"),
    ("histogram.bins", "number of t-statistic bins (default 121)"),
    ("output.trajectories", "true to dump one t,action,reward CSV per replication"),
];

/// Raw key/value pairs in a deterministic order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConfigMap(BTreeMap<String, String>);

impl ConfigMap {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut map = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected key=value, got {line:?}", n + 1)))?;
            let key = key.trim();
            let key = if key == "policy" { "policy.kind" } else { key };
            if !KNOWN_KEYS.iter().any(|(k, _)| *k == key) {
                return Err(CliError::Config(format!("unknown config key `{key}` (line {})", n + 1)));
            }
            map.insert(key.to_string(), value.trim().to_string());
        }
        Ok(ConfigMap(map))
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.0.insert(key.to_string(), value.into());
    }

    /// Adds `key` only if it is not already present.
    pub fn set_default(&mut self, key: &str, value: impl Into<String>) {
        self.0.entry(key.to_string()).or_insert_with(|| value.into());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &String)> {
        self.0.iter()
    }

    /// Canonical `key=value` lines, used for hashing and the manifest.
    pub fn echo(&self) -> String {
        self.0.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }

    fn parsed<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| CliError::Config(format!("`{key}`: cannot parse {v:?}"))),
        }
    }

    fn required<T: std::str::FromStr>(&self, key: &str) -> Result<T, CliError> {
        self.parsed(key)?.ok_or_else(|| CliError::Config(format!("missing required key `{key}`")))
    }

    fn list(&self, key: &str) -> Result<Option<Vec<f64>>, CliError> {
        self.get(key)
            .map(|v| {
                v.split(',')
                    .map(|x| {
                        x.trim()
                            .parse::<f64>()
                            .map_err(|_| CliError::Config(format!("`{key}`: cannot parse {x:?} as a number")))
                    })
                    .collect()
            })
            .transpose()
    }

    fn usize_list(&self, key: &str) -> Result<Option<Vec<usize>>, CliError> {
        self.get(key)
            .map(|v| {
                v.split(',')
                    .map(|x| {
                        x.trim()
                            .parse::<usize>()
                            .map_err(|_| CliError::Config(format!("`{key}`: cannot parse {x:?} as an integer")))
                    })
                    .collect()
            })
            .transpose()
    }

    pub fn family(&self) -> Result<Family, CliError> {
        match self.get("arms.family").unwrap_or("logistic_unit_var") {
            "logistic_unit_var" => Ok(Family::LogisticUnitVariance),
            "gaussian" => {
                let sigma2 = self.parsed("arms.sigma2")?.unwrap_or(1.0);
                Ok(Family::Gaussian { sigma2 })
            }
            other => Err(CliError::Config(format!("unknown arms.family {other:?}"))),
        }
    }

    pub fn arm_count(&self) -> Result<usize, CliError> {
        Ok(self.parsed("arms.K")?.unwrap_or(2))
    }

    fn policy_named(&self, name: &str, k: usize, allow_clipped: bool) -> Result<PolicySpec, CliError> {
        let spec = match name {
            "thompson" => PolicySpec::Thompson {
                prior_var: self.parsed("thompson.prior_var")?.unwrap_or(1.0),
                assumed_var: self.parsed("thompson.assumed_var")?.unwrap_or(1.0),
            },
            "ucb1" => PolicySpec::Ucb1,
            "rct" => {
                let weights = self.list("rct.weights")?.unwrap_or_else(|| vec![1.0 / k as f64; k]);
                if weights.iter().any(|&w| w <= 0.0) {
                    return Err(CliError::Config("rct.weights must be strictly positive".into()));
                }
                PolicySpec::Rct { weights }
            }
            "clipped" if allow_clipped => {
                let inner = self.get("clipped.inner").unwrap_or("thompson");
                let inner = self.policy_named(inner, k, false)?;
                PolicySpec::clipped(inner, self.required("clipped.epsilon")?)
            }
            other => return Err(CliError::Config(format!("unknown policy {other:?}"))),
        };
        spec.validate(k).map_err(|e| CliError::Config(e.to_string()))?;
        Ok(spec)
    }

    pub fn policy(&self) -> Result<PolicySpec, CliError> {
        let k = self.arm_count()?;
        self.policy_named(self.get("policy.kind").unwrap_or("thompson"), k, true)
    }

    pub fn regime(&self) -> Result<RateRegime, CliError> {
        match self.get("lan.regime") {
            Some("case_b") => Ok(RateRegime::LogRate),
            Some("case_b_star") => Ok(RateRegime::LinearRate),
            None => Ok(if self.policy()?.is_log_rate() { RateRegime::LogRate } else { RateRegime::LinearRate }),
            Some(other) => Err(CliError::Config(format!("unknown lan.regime {other:?}"))),
        }
    }

    fn lan_tracking(&self, policy: &PolicySpec) -> Result<Option<LanTracking>, CliError> {
        let Some(h) = self.list("lan.h")? else {
            return Ok(None);
        };
        let weights = match self.get("lan.info_weights").unwrap_or("empirical") {
            "empirical" => InfoWeights::Empirical,
            "true" => match policy {
                PolicySpec::Rct { weights } => InfoWeights::Given(weights.clone()),
                _ => return Err(CliError::Config("lan.info_weights=true needs policy rct".into())),
            },
            other => return Err(CliError::Config(format!("unknown lan.info_weights {other:?}"))),
        };
        Ok(Some(LanTracking { h, regime: self.regime()?, weights }))
    }

    pub fn study(&self) -> Result<StudyConfig, CliError> {
        let k = self.arm_count()?;
        let policy = self.policy()?;
        let lan = self.lan_tracking(&policy)?;
        let gap_scaling = match self.get("study.gap_scaling").unwrap_or("sqrt_t") {
            "sqrt_t" => GapScaling::SqrtT,
            "fixed" => GapScaling::Fixed,
            other => return Err(CliError::Config(format!("unknown study.gap_scaling {other:?}"))),
        };
        let config = StudyConfig {
            family: self.family()?,
            arms: k,
            horizon: self.required("study.T")?,
            policy,
            other_means: self.list("arms.other_means")?.unwrap_or_else(|| vec![0.0; k.saturating_sub(1)]),
            gap_scaling,
            m1_grid: self.list("study.m1")?.unwrap_or_default(),
            replications: self.required("study.replications")?,
            base_seed: self.required("study.base_seed")?,
            lan,
        };
        config.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(config)
    }

    pub fn t_ladder(&self) -> Result<Vec<usize>, CliError> {
        Ok(self.usize_list("lan.t_ladder")?.unwrap_or_else(|| vec![200, 2000, 20000]))
    }

    pub fn checkpoints(&self) -> Result<Option<Vec<usize>>, CliError> {
        self.usize_list("convergence.checkpoints")
    }

    pub fn histogram_spec(&self) -> Result<bandit_lan::stats::HistogramSpec, CliError> {
        let d = bandit_lan::stats::HistogramSpec::T_STAT;
        Ok(bandit_lan::stats::HistogramSpec {
            lo: self.parsed("histogram.lo")?.unwrap_or(d.lo),
            hi: self.parsed("histogram.hi")?.unwrap_or(d.hi),
            bins: self.parsed("histogram.bins")?.unwrap_or(d.bins),
        })
    }

    pub fn dump_trajectories(&self) -> Result<bool, CliError> {
        Ok(self.parsed("output.trajectories")?.unwrap_or(false))
    }
}
