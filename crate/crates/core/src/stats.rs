//! Sample summaries: KS distance to the standard normal, histograms and
//! quantiles.

use crate::error::{Error, Result};
use crate::normal;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsResult {
    pub distance: f64,
    pub n: usize,
    pub missing: usize,
}

/// `sup_x |F̂_n(x) − Φ(x)|` over the non-missing samples.
///
/// The supremum is attained at an order statistic, where both one-sided
/// gaps `i/n − Φ(x_(i))` and `Φ(x_(i)) − (i−1)/n` are checked.
pub fn ks_distance(samples: &[Option<f64>]) -> Result<KsResult> {
    let mut xs: Vec<f64> = samples.iter().flatten().copied().collect();
    let missing = samples.len() - xs.len();
    if xs.is_empty() {
        return Err(Error::AllMissing(missing));
    }
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let distance = xs.iter().enumerate().fold(0.0f64, |acc, (i, &x)| {
        let f = normal::cdf(x);
        let upper = (i + 1) as f64 / n - f;
        let lower = f - i as f64 / n;
        acc.max(upper).max(lower)
    });
    Ok(KsResult { distance, n: xs.len(), missing })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistogramSpec {
    pub lo: f64,
    pub hi: f64,
    pub bins: usize,
}

impl HistogramSpec {
    /// 121 bins on `[-6, 6]`, used for t-statistics.
    pub const T_STAT: HistogramSpec = HistogramSpec { lo: -6.0, hi: 6.0, bins: 121 };

    /// Unit-width bins centred on `0, 1, ..., max`.
    pub fn counts(max: u64) -> HistogramSpec {
        HistogramSpec { lo: -0.5, hi: max as f64 + 0.5, bins: max as usize + 1 }
    }

    pub fn width(&self) -> f64 {
        (self.hi - self.lo) / self.bins as f64
    }

    /// `[lo, hi)` edges of interior bin `i`.
    pub fn edges(&self, i: usize) -> (f64, f64) {
        let w = self.width();
        (self.lo + i as f64 * w, if i + 1 == self.bins { self.hi } else { self.lo + (i + 1) as f64 * w })
    }
}

/// Equal-width counts with left-closed bins. Index 0 counts samples below
/// `lo`, index `bins + 1` counts samples at or above `hi` (and NaNs).
pub fn histogram(samples: &[f64], spec: HistogramSpec) -> Result<Vec<u64>> {
    if !(spec.lo < spec.hi) || spec.bins == 0 {
        return Err(Error::config(format!(
            "histogram needs lo < hi and at least one bin, got [{}, {}) with {} bins",
            spec.lo, spec.hi, spec.bins
        )));
    }
    let mut counts = vec![0u64; spec.bins + 2];
    let w = spec.width();
    for &x in samples {
        let slot = if x < spec.lo {
            0
        } else if x >= spec.hi || x.is_nan() {
            spec.bins + 1
        } else {
            (((x - spec.lo) / w).floor() as usize).min(spec.bins - 1) + 1
        };
        counts[slot] += 1;
    }
    Ok(counts)
}

/// Linear-interpolation quantile of sorted data (R type 7).
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty data");
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    quantile_sorted(&v, 0.5)
}
