use super::{fit, CategoricalDataset, FitConfig};
use crate::error::{Error, Result};

/// Relative-improvement threshold below which adding a cluster is not
/// worth it.
pub const DEFAULT_EPSILON: f64 = 0.05;

/// Fits every k in `k_min..=k_max` with `base` (its `k` is ignored) and
/// returns `(k, final cost)` in ascending k.
pub fn elbow_scan(
    dataset: &CategoricalDataset,
    k_min: usize,
    k_max: usize,
    base: &FitConfig,
) -> Result<Vec<(usize, f64)>> {
    if k_min == 0 || k_min > k_max {
        return Err(Error::InvalidConfig(format!(
            "invalid k range {k_min}..={k_max}"
        )));
    }
    if k_max > dataset.len() {
        return Err(Error::InfeasibleK {
            k: k_max,
            available: dataset.len(),
        });
    }
    (k_min..=k_max)
        .map(|k| {
            let config = FitConfig { k, ..base.clone() };
            fit(dataset, &config).map(|model| (k, model.cost))
        })
        .collect()
}

/// Picks the elbow of a WCD curve: the smallest k whose relative
/// improvement `(W(k) - W(k+1)) / W(k)` falls below `epsilon`. A point with
/// zero WCD is returned immediately; with no elbow the largest k is
/// returned.
pub fn select_k(curve: &[(usize, f64)], epsilon: f64) -> Result<usize> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidCurve(format!(
            "epsilon must lie in (0, 1), got {epsilon}"
        )));
    }
    if curve.len() < 2 {
        return Err(Error::InvalidCurve("need at least two points".into()));
    }
    for pair in curve.windows(2) {
        if pair[1].0 <= pair[0].0 {
            return Err(Error::InvalidCurve(format!(
                "k values must ascend, found {} after {}",
                pair[1].0, pair[0].0
            )));
        }
    }
    if let Some(&(_, w)) = curve.iter().find(|(_, w)| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::InvalidCurve(format!("invalid WCD value {w}")));
    }

    for pair in curve.windows(2) {
        let (k, w) = pair[0];
        if w == 0.0 {
            return Ok(k);
        }
        let drop = (w - pair[1].1) / w.max(f64::MIN_POSITIVE);
        if drop < epsilon {
            return Ok(k);
        }
    }
    Ok(curve[curve.len() - 1].0)
}
