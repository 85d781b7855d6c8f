//! K-modes clustering: initialization, the online allocate/update loop,
//! within-cluster difference and elbow-based choice of k.

mod dataset;
mod elbow;
mod engine;
mod init;
mod persist;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use dataset::CategoricalDataset;
pub use elbow::{elbow_scan, select_k, DEFAULT_EPSILON};
pub use engine::fit;
pub use init::init_modes;
pub use persist::{ModelDocument, RowAssignment};

use crate::dissimilarity::{
    compute_category_weights, effective_gamma, AttributeSpec, CategoryWeightTable,
    DissimilarityPolicy, GammaMode, Measure, PolicyMode, Prototype, Record,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitStrategy {
    #[default]
    RandomRows,
    Density,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub k: usize,
    pub policy: DissimilarityPolicy,
    #[serde(default)]
    pub init: InitStrategy,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_max_epochs")]
    pub max_epochs: usize,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    /// Recompute the total cost around every accepted move and fail with
    /// [`Error::DescentViolation`] unless it strictly decreased. Only
    /// consulted under the simple policy.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub check_descent: bool,
}

fn default_max_epochs() -> usize {
    100
}

fn default_restarts() -> usize {
    1
}

impl FitConfig {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            policy: DissimilarityPolicy::simple(),
            init: InitStrategy::RandomRows,
            seed: 0,
            max_epochs: default_max_epochs(),
            restarts: default_restarts(),
            check_descent: false,
        }
    }

    pub fn with_policy(mut self, policy: DissimilarityPolicy) -> Self {
        self.policy = policy;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_restarts(mut self, restarts: usize) -> Self {
        self.restarts = restarts;
        self
    }

    pub fn with_init(mut self, init: InitStrategy) -> Self {
        self.init = init;
        self
    }

    pub fn with_max_epochs(mut self, max_epochs: usize) -> Self {
        self.max_epochs = max_epochs;
        self
    }

    pub fn with_descent_check(mut self, on: bool) -> Self {
        self.check_descent = on;
        self
    }

    /// Checks the configuration against a dataset.
    pub fn validate(&self, dataset: &CategoricalDataset) -> Result<()> {
        if self.max_epochs == 0 {
            return Err(Error::InvalidConfig("max_epochs must be at least 1".into()));
        }
        if self.restarts == 0 {
            return Err(Error::InvalidConfig("restarts must be at least 1".into()));
        }
        if dataset.is_empty() {
            return Err(Error::InvalidDataset("cannot fit an empty dataset".into()));
        }
        if self.k == 0 || self.k > dataset.len() {
            return Err(Error::InfeasibleK {
                k: self.k,
                available: dataset.len(),
            });
        }
        self.policy.validate()?;
        match self.policy.mode {
            PolicyMode::Simple | PolicyMode::Weighted if dataset.has_numeric() => {
                Err(Error::policy(format!(
                    "{} policy requires all attributes to be categorical",
                    self.policy.label()
                )))
            }
            PolicyMode::Mixed
                if self.policy.gamma_mode == GammaMode::Auto && !dataset.has_numeric() =>
            {
                Err(Error::policy(
                    "mixed policy with automatic gamma needs at least one numeric attribute",
                ))
            }
            _ => Ok(()),
        }
    }
}

/// A fitted partition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterModel {
    pub modes: Vec<Prototype>,
    pub assignments: Vec<usize>,
    pub cost: f64,
    pub epochs_run: usize,
    pub converged: bool,
    pub config: FitConfig,
}

impl ClusterModel {
    pub fn k(&self) -> usize {
        self.modes.len()
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.modes.len()];
        for &a in &self.assignments {
            sizes[a] += 1;
        }
        sizes
    }

    /// Row indices belonging to `cluster`, ascending.
    pub fn members(&self, cluster: usize) -> Vec<usize> {
        self.assignments
            .iter()
            .enumerate()
            .filter(|(_, &a)| a == cluster)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Index of the closest mode and its distance. Equally close modes resolve
/// to the lowest cluster index.
pub fn nearest_mode(
    record: &Record,
    modes: &[Prototype],
    attrs: &[AttributeSpec],
    measure: &Measure<'_>,
) -> Result<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (l, mode) in modes.iter().enumerate() {
        let d = measure.distance(record, mode, attrs)?;
        if best.is_none_or(|(_, bd)| d < bd) {
            best = Some((l, d));
        }
    }
    best.ok_or_else(|| Error::InvalidConfig("no modes to choose from".into()))
}

/// Most frequent code; ties go to the lowest code.
pub fn update_mode_attribute(values: &[u32]) -> Result<u32> {
    let mut counts: BTreeMap<u32, usize> = BTreeMap::new();
    for &v in values {
        *counts.entry(v).or_default() += 1;
    }
    let mut best: Option<(u32, usize)> = None;
    // BTreeMap iterates ascending, so a strict comparison keeps the lowest code.
    for (code, count) in counts {
        if best.is_none_or(|(_, c)| count > c) {
            best = Some((code, count));
        }
    }
    best.map(|(code, _)| code).ok_or(Error::EmptyCluster)
}

/// Sum over rows of the policy measure from each row to its cluster's mode.
///
/// `weights` is used as given under the weighted policy; when absent the
/// table is derived from `assignments`. Under the mixed policy with
/// automatic gamma each cluster's gamma is derived from its members.
pub fn within_cluster_difference(
    dataset: &CategoricalDataset,
    modes: &[Prototype],
    assignments: &[usize],
    policy: &DissimilarityPolicy,
    weights: Option<&CategoryWeightTable>,
) -> Result<f64> {
    if assignments.len() != dataset.len() {
        return Err(Error::Alignment {
            expected: dataset.len(),
            found: assignments.len(),
        });
    }
    let k = modes.len();
    if let Some(&bad) = assignments.iter().find(|&&a| a >= k) {
        return Err(Error::InvalidConfig(format!(
            "assignment {bad} outside [0, {k})"
        )));
    }

    let derived_weights;
    let gammas;
    let measure = match policy.mode {
        PolicyMode::Simple => Measure::Simple,
        PolicyMode::Weighted => match weights {
            Some(w) => Measure::Weighted(w),
            None => {
                derived_weights = compute_category_weights(dataset, assignments, k)?;
                Measure::Weighted(&derived_weights)
            }
        },
        PolicyMode::Mixed => {
            gammas = cluster_gammas(dataset, assignments, k, policy)?;
            Measure::Mixed { gammas: &gammas }
        }
    };

    let mut total = 0.0;
    for (row, &l) in dataset.rows.iter().zip(assignments) {
        total += measure.distance(row, &modes[l], &dataset.attrs)?;
    }
    Ok(total)
}

/// Per-cluster gamma for the mixed policy.
pub(crate) fn cluster_gammas(
    dataset: &CategoricalDataset,
    assignments: &[usize],
    k: usize,
    policy: &DissimilarityPolicy,
) -> Result<Vec<f64>> {
    match policy.gamma_mode {
        GammaMode::Fixed => Ok(vec![policy.gamma_value; k]),
        GammaMode::Auto => {
            let mut members: Vec<Vec<&Record>> = vec![Vec::new(); k];
            for (row, &l) in dataset.rows.iter().zip(assignments) {
                members[l].push(row);
            }
            members
                .iter()
                .map(|rows| effective_gamma(rows, &dataset.attrs))
                .collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn attrs(m: usize) -> Vec<AttributeSpec> {
        (0..m)
            .map(|i| AttributeSpec::categorical(i, format!("a{i}"), (0..10).collect()))
            .collect()
    }

    #[test]
    fn nearest_mode_examples() {
        let a = attrs(3);
        let modes = vec![
            Prototype::from_codes(0, &[1, 1, 1]),
            Prototype::from_codes(1, &[5, 5, 5]),
            Prototype::from_codes(2, &[7, 8, 9]),
        ];
        let r = Record::from_codes("r", &[7, 8, 9]);
        assert_eq!(
            nearest_mode(&r, &modes, &a, &Measure::Simple).unwrap(),
            (2, 0.0)
        );

        let modes = vec![
            Prototype::from_codes(0, &[2, 2, 2]),
            Prototype::from_codes(1, &[4, 4, 4]),
        ];
        let r = Record::from_codes("r", &[2, 4, 3]);
        assert_eq!(
            nearest_mode(&r, &modes, &a, &Measure::Simple).unwrap(),
            (0, 2.0)
        );

        let modes = vec![
            Prototype::from_codes(0, &[1, 0, 0]),
            Prototype::from_codes(1, &[0, 1, 0]),
        ];
        let r = Record::from_codes("r", &[0, 0, 0]);
        assert_eq!(nearest_mode(&r, &modes, &a, &Measure::Simple).unwrap().0, 0);

        assert!(nearest_mode(&r, &[], &a, &Measure::Simple).is_err());
    }

    #[test]
    fn update_mode_examples() {
        assert_eq!(update_mode_attribute(&[2, 2, 3]).unwrap(), 2);
        assert_eq!(update_mode_attribute(&[3, 2]).unwrap(), 2);
        assert_eq!(update_mode_attribute(&[3, 3, 3, 3]).unwrap(), 3);
        assert!(matches!(
            update_mode_attribute(&[]),
            Err(Error::EmptyCluster)
        ));
    }

    #[test]
    fn wcd_examples() {
        let ds = CategoricalDataset::from_code_rows(&[vec![1, 1], vec![1, 1], vec![1, 1]]).unwrap();
        let modes = vec![Prototype::from_codes(0, &[1, 1])];
        let p = DissimilarityPolicy::simple();
        assert_eq!(
            within_cluster_difference(&ds, &modes, &[0, 0, 0], &p, None).unwrap(),
            0.0
        );

        let ds = CategoricalDataset::from_code_rows(&[vec![1, 1], vec![1, 2]]).unwrap();
        assert_eq!(
            within_cluster_difference(&ds, &modes, &[0, 0], &p, None).unwrap(),
            1.0
        );

        assert!(within_cluster_difference(&ds, &modes, &[0, 1], &p, None).is_err());
    }

    #[test]
    fn config_validation() {
        let ds = CategoricalDataset::from_code_rows(&[vec![1], vec![2]]).unwrap();
        assert!(matches!(
            FitConfig::new(3).validate(&ds),
            Err(Error::InfeasibleK { k: 3, available: 2 })
        ));
        assert!(FitConfig::new(2).with_restarts(0).validate(&ds).is_err());
        assert!(FitConfig::new(2).with_max_epochs(0).validate(&ds).is_err());
        assert!(matches!(
            FitConfig::new(2)
                .with_policy(DissimilarityPolicy::mixed_auto())
                .validate(&ds),
            Err(Error::Policy(_))
        ));
        assert!(FitConfig::new(2)
            .with_policy(DissimilarityPolicy::mixed_fixed(1.0))
            .validate(&ds)
            .is_ok());
    }
}
