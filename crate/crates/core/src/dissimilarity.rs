//! Dissimilarity measures between a record and a cluster prototype.
//!
//! Four measures are provided: simple matching (Hamming distance over
//! categorical attributes), Euclidean distance over numeric attributes, a
//! frequency-weighted matching measure driven by a [`CategoryWeightTable`],
//! and the mixed measure `euclidean + gamma * matching` used for datasets
//! that carry both kinds of attribute.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kmodes::CategoricalDataset;

/// Neutral weight: a match and a mismatch cost the same.
pub const DEFAULT_WEIGHT: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttributeKind {
    Categorical,
    Numeric,
}

/// Metadata for one column of a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeSpec {
    pub index: usize,
    pub kind: AttributeKind,
    /// Category dictionary. The order is significant: wherever two
    /// categories tie, the one listed first wins.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub categories: Vec<u32>,
    pub name: String,
}

impl AttributeSpec {
    pub fn categorical(index: usize, name: impl Into<String>, categories: Vec<u32>) -> Self {
        Self {
            index,
            kind: AttributeKind::Categorical,
            categories,
            name: name.into(),
        }
    }

    pub fn numeric(index: usize, name: impl Into<String>) -> Self {
        Self {
            index,
            kind: AttributeKind::Numeric,
            categories: Vec::new(),
            name: name.into(),
        }
    }

    pub fn is_categorical(&self) -> bool {
        self.kind == AttributeKind::Categorical
    }

    /// Position of `code` in the category dictionary.
    pub fn rank_of(&self, code: u32) -> Option<usize> {
        self.categories.iter().position(|&c| c == code)
    }
}

/// A single attribute value: a category code or a real number.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Category(u32),
    Numeric(f64),
}

impl Value {
    pub fn as_category(&self) -> Option<u32> {
        match *self {
            Value::Category(c) => Some(c),
            Value::Numeric(_) => None,
        }
    }

    pub fn as_numeric(&self) -> Option<f64> {
        match *self {
            Value::Numeric(v) => Some(v),
            Value::Category(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub row_id: String,
    pub values: Vec<Value>,
}

impl Record {
    pub fn new(row_id: impl Into<String>, values: Vec<Value>) -> Self {
        Self {
            row_id: row_id.into(),
            values,
        }
    }

    /// Builds an all-categorical record.
    pub fn from_codes(row_id: impl Into<String>, codes: &[u32]) -> Self {
        Self::new(row_id, codes.iter().map(|&c| Value::Category(c)).collect())
    }

    /// Views this record as a prototype, e.g. when it seeds a cluster.
    pub fn to_prototype(&self, cluster_index: usize) -> Prototype {
        Prototype {
            values: self.values.clone(),
            cluster_index,
        }
    }
}

/// The representative of a cluster: the mode for categorical slots and the
/// mean for numeric slots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prototype {
    pub values: Vec<Value>,
    pub cluster_index: usize,
}

impl Prototype {
    pub fn from_codes(cluster_index: usize, codes: &[u32]) -> Self {
        Self {
            values: codes.iter().map(|&c| Value::Category(c)).collect(),
            cluster_index,
        }
    }
}

/// Per (attribute, category, cluster) weights for [`weighted_matching`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryWeightTable {
    entries: BTreeMap<(usize, u32, usize), f64>,
    pub default_weight: f64,
}

impl Default for CategoryWeightTable {
    fn default() -> Self {
        Self {
            entries: BTreeMap::new(),
            default_weight: DEFAULT_WEIGHT,
        }
    }
}

impl CategoryWeightTable {
    pub fn new(default_weight: f64) -> Result<Self> {
        check_unit(default_weight)?;
        Ok(Self {
            entries: BTreeMap::new(),
            default_weight,
        })
    }

    pub fn set(&mut self, attr: usize, code: u32, cluster: usize, weight: f64) -> Result<()> {
        check_unit(weight)?;
        self.entries.insert((attr, code, cluster), weight);
        Ok(())
    }

    /// The stored weight, or `default_weight` for an unseen key.
    pub fn get(&self, attr: usize, code: u32, cluster: usize) -> f64 {
        self.entries
            .get(&(attr, code, cluster))
            .copied()
            .unwrap_or(self.default_weight)
    }

    pub fn contains(&self, attr: usize, code: u32, cluster: usize) -> bool {
        self.entries.contains_key(&(attr, code, cluster))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Iterates `((attr, code, cluster), weight)` in key order.
    pub fn iter(&self) -> impl Iterator<Item = ((usize, u32, usize), f64)> + '_ {
        self.entries.iter().map(|(&k, &w)| (k, w))
    }
}

fn check_unit(w: f64) -> Result<()> {
    if (0.0..=1.0).contains(&w) {
        Ok(())
    } else {
        Err(Error::policy(format!("weight {w} outside [0, 1]")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolicyMode {
    Simple,
    Weighted,
    Mixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GammaMode {
    Auto,
    Fixed,
}

/// Which measure a fit uses. The gamma fields only matter in mixed mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DissimilarityPolicy {
    pub mode: PolicyMode,
    pub gamma_mode: GammaMode,
    pub gamma_value: f64,
}

impl Default for DissimilarityPolicy {
    fn default() -> Self {
        Self::simple()
    }
}

impl DissimilarityPolicy {
    pub fn simple() -> Self {
        Self {
            mode: PolicyMode::Simple,
            gamma_mode: GammaMode::Auto,
            gamma_value: 1.0,
        }
    }

    pub fn weighted() -> Self {
        Self {
            mode: PolicyMode::Weighted,
            ..Self::simple()
        }
    }

    pub fn mixed_auto() -> Self {
        Self {
            mode: PolicyMode::Mixed,
            ..Self::simple()
        }
    }

    pub fn mixed_fixed(gamma: f64) -> Self {
        Self {
            mode: PolicyMode::Mixed,
            gamma_mode: GammaMode::Fixed,
            gamma_value: gamma,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma_value.is_finite() && self.gamma_value >= 0.0) {
            return Err(Error::policy(format!(
                "gamma must be a non-negative finite number, got {}",
                self.gamma_value
            )));
        }
        Ok(())
    }

    /// Short label used in report metadata, e.g. `simple` or `mixed(gamma=0.5)`.
    pub fn label(&self) -> String {
        match (self.mode, self.gamma_mode) {
            (PolicyMode::Simple, _) => "simple".into(),
            (PolicyMode::Weighted, _) => "weighted".into(),
            (PolicyMode::Mixed, GammaMode::Auto) => "mixed(gamma=auto)".into(),
            (PolicyMode::Mixed, GammaMode::Fixed) => format!("mixed(gamma={})", self.gamma_value),
        }
    }
}

/// A measure resolved against its per-fit state.
#[derive(Debug, Clone, Copy)]
pub enum Measure<'a> {
    Simple,
    Weighted(&'a CategoryWeightTable),
    /// One gamma per cluster, indexed by `Prototype::cluster_index`.
    Mixed {
        gammas: &'a [f64],
    },
}

impl Measure<'_> {
    pub fn distance(&self, a: &Record, z: &Prototype, attrs: &[AttributeSpec]) -> Result<f64> {
        match *self {
            Measure::Simple => simple_matching(a, z, attrs).map(|d| d as f64),
            Measure::Weighted(w) => weighted_matching(a, z, attrs, w),
            Measure::Mixed { gammas } => {
                let gamma = gammas.get(z.cluster_index).copied().ok_or_else(|| {
                    Error::policy(format!("no gamma for cluster {}", z.cluster_index))
                })?;
                mixed_dissimilarity(a, z, attrs, gamma)
            }
        }
    }
}

fn check_aligned(a: &[Value], b: &[Value], attrs: &[AttributeSpec]) -> Result<()> {
    for found in [a.len(), b.len()] {
        if found != attrs.len() {
            return Err(Error::Alignment {
                expected: attrs.len(),
                found,
            });
        }
    }
    Ok(())
}

fn category_pair(a: &Value, b: &Value, attr: &AttributeSpec) -> Result<(u32, u32)> {
    match (a, b) {
        (Value::Category(x), Value::Category(z)) => Ok((*x, *z)),
        _ => Err(Error::InvalidDataset(format!(
            "attribute `{}` is categorical but holds a numeric value",
            attr.name
        ))),
    }
}

fn numeric_pair(a: &Value, b: &Value, attr: &AttributeSpec) -> Result<(f64, f64)> {
    match (a, b) {
        (Value::Numeric(x), Value::Numeric(z)) => Ok((*x, *z)),
        _ => Err(Error::InvalidDataset(format!(
            "attribute `{}` is numeric but holds a category code",
            attr.name
        ))),
    }
}

/// Mismatch count over the categorical attributes only.
fn categorical_mismatches(a: &Record, z: &Prototype, attrs: &[AttributeSpec]) -> Result<usize> {
    let mut count = 0;
    for ((x, y), attr) in a.values.iter().zip(&z.values).zip(attrs) {
        if attr.is_categorical() {
            let (x, y) = category_pair(x, y, attr)?;
            count += usize::from(x != y);
        }
    }
    Ok(count)
}

/// Number of positions where the record and the prototype differ.
///
/// Every attribute must be categorical.
pub fn simple_matching(a: &Record, z: &Prototype, attrs: &[AttributeSpec]) -> Result<usize> {
    check_aligned(&a.values, &z.values, attrs)?;
    if let Some(attr) = attrs.iter().find(|a| !a.is_categorical()) {
        return Err(Error::policy(format!(
            "simple matching requires categorical attributes; `{}` is numeric",
            attr.name
        )));
    }
    categorical_mismatches(a, z, attrs)
}

/// Euclidean distance over the numeric attributes; categorical slots are
/// ignored.
pub fn euclidean_distance(a: &Record, z: &Prototype, attrs: &[AttributeSpec]) -> Result<f64> {
    check_aligned(&a.values, &z.values, attrs)?;
    if attrs.iter().all(AttributeSpec::is_categorical) {
        return Err(Error::policy(
            "euclidean distance needs a numeric attribute",
        ));
    }
    numeric_part(a, z, attrs)
}

fn numeric_part(a: &Record, z: &Prototype, attrs: &[AttributeSpec]) -> Result<f64> {
    let mut sum = 0.0;
    for ((x, y), attr) in a.values.iter().zip(&z.values).zip(attrs) {
        if !attr.is_categorical() {
            let (x, y) = numeric_pair(x, y, attr)?;
            sum += (x - y) * (x - y);
        }
    }
    Ok(sum.sqrt())
}

/// Weighted matching: a match on attribute `j` costs `1 - w`, a mismatch
/// costs `w`, where `w` is the weight of the record's own category in the
/// prototype's cluster.
pub fn weighted_matching(
    a: &Record,
    z: &Prototype,
    attrs: &[AttributeSpec],
    weights: &CategoryWeightTable,
) -> Result<f64> {
    check_aligned(&a.values, &z.values, attrs)?;
    let mut total = 0.0;
    for ((x, y), attr) in a.values.iter().zip(&z.values).zip(attrs) {
        if !attr.is_categorical() {
            return Err(Error::policy(format!(
                "weighted matching requires categorical attributes; `{}` is numeric",
                attr.name
            )));
        }
        let (x, y) = category_pair(x, y, attr)?;
        let w = weights.get(attr.index, x, z.cluster_index);
        total += if x == y { 1.0 - w } else { w };
    }
    Ok(total)
}

/// Euclidean distance over numeric attributes plus `gamma` times the
/// mismatch count over categorical attributes.
pub fn mixed_dissimilarity(
    a: &Record,
    z: &Prototype,
    attrs: &[AttributeSpec],
    gamma: f64,
) -> Result<f64> {
    if !(gamma.is_finite() && gamma >= 0.0) {
        return Err(Error::policy(format!(
            "gamma must be non-negative, got {gamma}"
        )));
    }
    check_aligned(&a.values, &z.values, attrs)?;
    let numeric = numeric_part(a, z, attrs)?;
    let categorical = categorical_mismatches(a, z, attrs)?;
    Ok(numeric + gamma * categorical as f64)
}

/// Mean over numeric attributes of the population standard deviation of
/// that attribute within `cluster_rows`. Returns 0 for an empty, single-row
/// or constant cluster; callers substitute 1 in that case.
pub fn compute_gamma(cluster_rows: &[&Record], attrs: &[AttributeSpec]) -> Result<f64> {
    let numeric: Vec<&AttributeSpec> = attrs.iter().filter(|a| !a.is_categorical()).collect();
    if numeric.is_empty() {
        return Err(Error::policy(
            "mixed policy with automatic gamma needs at least one numeric attribute",
        ));
    }
    if cluster_rows.is_empty() {
        return Ok(0.0);
    }
    let n = cluster_rows.len() as f64;
    let mut total = 0.0;
    for attr in &numeric {
        let mut column = Vec::with_capacity(cluster_rows.len());
        for row in cluster_rows {
            let v = row.values.get(attr.index).ok_or(Error::Alignment {
                expected: attrs.len(),
                found: row.values.len(),
            })?;
            column.push(v.as_numeric().ok_or_else(|| {
                Error::InvalidDataset(format!("attribute `{}` holds a category code", attr.name))
            })?);
        }
        let mean = column.iter().sum::<f64>() / n;
        let var = column.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        total += var.sqrt();
    }
    Ok(total / numeric.len() as f64)
}

/// [`compute_gamma`] with the zero-to-one substitution applied.
pub fn effective_gamma(cluster_rows: &[&Record], attrs: &[AttributeSpec]) -> Result<f64> {
    let g = compute_gamma(cluster_rows, attrs)?;
    Ok(if g > 0.0 { g } else { 1.0 })
}

/// Builds the weight table for a partition.
///
/// For attribute `j`, category `a` and cluster `l` the weight is the
/// relative frequency of `a` inside `l` divided by its relative frequency in
/// the whole dataset, clamped to `[0, 1]`. Categories that never occur in a
/// cluster get 0. Empty clusters get no entries and fall back to the
/// table's default weight.
pub fn compute_category_weights(
    dataset: &CategoricalDataset,
    assignments: &[usize],
    k: usize,
) -> Result<CategoryWeightTable> {
    let n = dataset.len();
    if n == 0 {
        return Err(Error::InvalidDataset("dataset is empty".into()));
    }
    if assignments.len() != n {
        return Err(Error::Alignment {
            expected: n,
            found: assignments.len(),
        });
    }
    if let Some(&bad) = assignments.iter().find(|&&a| a >= k) {
        return Err(Error::InvalidConfig(format!(
            "assignment {bad} outside [0, {k})"
        )));
    }
    let mut sizes = vec![0usize; k];
    for &a in assignments {
        sizes[a] += 1;
    }

    let mut table = CategoryWeightTable::default();
    for attr in dataset.attrs.iter().filter(|a| a.is_categorical()) {
        let c = attr.categories.len();
        let mut global = vec![0usize; c];
        let mut local = vec![0usize; c * k];
        for (row, &l) in dataset.rows.iter().zip(assignments) {
            let code = row.values[attr.index].as_category().ok_or_else(|| {
                Error::InvalidDataset(format!("attribute `{}` holds a numeric value", attr.name))
            })?;
            let r = attr.rank_of(code).ok_or_else(|| {
                Error::InvalidDataset(format!("code {code} not in dictionary of `{}`", attr.name))
            })?;
            global[r] += 1;
            local[l * c + r] += 1;
        }
        for (l, &size) in sizes.iter().enumerate() {
            if size == 0 {
                continue;
            }
            for (r, &code) in attr.categories.iter().enumerate() {
                let in_cluster = local[l * c + r];
                let w = if in_cluster == 0 || global[r] == 0 {
                    0.0
                } else {
                    let ratio = (in_cluster as f64 / size as f64) / (global[r] as f64 / n as f64);
                    ratio.clamp(0.0, 1.0)
                };
                table.set(attr.index, code, l, w)?;
            }
        }
    }
    Ok(table)
}
