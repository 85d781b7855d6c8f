//! Cluster labeling, population trait percentages, fusion with external
//! profiles and report serialization.

use std::fmt::Write as _;
use std::str::FromStr;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kmodes::ClusterModel;
use crate::survey::{SurveySchema, TraitProfile};

/// Allowed deviation of a report's percentage sum from 100.
pub const SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterLabel {
    pub cluster: usize,
    pub size: usize,
    pub dominant: String,
    pub mean_percent: IndexMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterLabeling {
    pub schema: String,
    pub dimensions: Vec<String>,
    pub n: usize,
    pub clusters: Vec<ClusterLabel>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Questionnaire,
    External,
    Fused,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aggregate: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub restarts: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub policy: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost: Option<f64>,
}

/// Population-level trait percentages.
///
/// The JSON form of this type is also the import format for profiles
/// produced by external assessment systems (`provenance: "external"`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PercentReport {
    pub provenance: Provenance,
    pub percentages: IndexMap<String, f64>,
    #[serde(default)]
    pub metadata: ReportMetadata,
}

impl PercentReport {
    pub fn validate(&self) -> Result<()> {
        if self.percentages.is_empty() {
            return Err(Error::DimensionMismatch("report has no dimensions".into()));
        }
        if let Some((d, p)) = self
            .percentages
            .iter()
            .find(|(_, p)| !(p.is_finite() && (0.0..=100.0).contains(*p)))
        {
            return Err(Error::InvalidDataset(format!(
                "percentage for `{d}` is {p}, outside [0, 100]"
            )));
        }
        let sum: f64 = self.percentages.values().sum();
        if (sum - 100.0).abs() > SUM_TOLERANCE {
            return Err(Error::InvalidDataset(format!(
                "percentages sum to {sum}, not 100"
            )));
        }
        Ok(())
    }

    /// Parses and validates a report document.
    pub fn from_json(doc: &str) -> Result<Self> {
        let report: PercentReport = serde_json::from_str(doc)?;
        report.validate()?;
        Ok(report)
    }

    pub fn dimensions(&self) -> impl Iterator<Item = &str> {
        self.percentages.keys().map(String::as_str)
    }
}

/// Averages member percentages per cluster and names each cluster after
/// its highest mean dimension (earliest in schema order on ties).
pub fn label_clusters(
    model: &ClusterModel,
    profiles: &[TraitProfile],
    schema: &SurveySchema,
) -> Result<ClusterLabeling> {
    if profiles.len() != model.assignments.len() {
        return Err(Error::Alignment {
            expected: model.assignments.len(),
            found: profiles.len(),
        });
    }
    let dims = &schema.dimensions;
    let k = model.k();
    let mut sums = vec![vec![0.0; dims.len()]; k];
    let mut sizes = vec![0usize; k];
    for (profile, &l) in profiles.iter().zip(&model.assignments) {
        if l >= k {
            return Err(Error::InvalidConfig(format!(
                "assignment {l} outside [0, {k})"
            )));
        }
        sizes[l] += 1;
        for (slot, d) in sums[l].iter_mut().zip(dims) {
            *slot += profile.percent.get(d).copied().ok_or_else(|| {
                Error::DimensionMismatch(format!("profile lacks dimension `{d}`"))
            })?;
        }
    }

    let clusters = (0..k)
        .map(|l| {
            if sizes[l] == 0 {
                return Err(Error::InvalidConfig(format!("cluster {l} is empty")));
            }
            let mean: IndexMap<String, f64> = dims
                .iter()
                .zip(&sums[l])
                .map(|(d, s)| (d.clone(), s / sizes[l] as f64))
                .collect();
            Ok(ClusterLabel {
                cluster: l,
                size: sizes[l],
                dominant: argmax(&mean).to_string(),
                mean_percent: mean,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(ClusterLabeling {
        schema: schema.name.clone(),
        dimensions: dims.clone(),
        n: profiles.len(),
        clusters,
    })
}

fn argmax(values: &IndexMap<String, f64>) -> &str {
    let mut best: Option<(&str, f64)> = None;
    for (d, &v) in values {
        if best.is_none_or(|(_, bv)| v > bv) {
            best = Some((d, v));
        }
    }
    best.map(|(d, _)| d).unwrap_or_default()
}

/// Share of the population whose cluster carries each dominant label.
pub fn personality_percentages(labeling: &ClusterLabeling) -> PercentReport {
    let mut percentages: IndexMap<String, f64> = labeling
        .dimensions
        .iter()
        .map(|d| (d.clone(), 0.0))
        .collect();
    let mut counts: IndexMap<&str, usize> = labeling
        .dimensions
        .iter()
        .map(|d| (d.as_str(), 0))
        .collect();
    for c in &labeling.clusters {
        *counts.entry(c.dominant.as_str()).or_default() += c.size;
    }
    for (d, count) in counts {
        percentages.insert(d.to_string(), 100.0 * count as f64 / labeling.n as f64);
    }
    PercentReport {
        provenance: Provenance::Questionnaire,
        percentages,
        metadata: ReportMetadata {
            schema: Some(labeling.schema.clone()),
            aggregate: Some("share".into()),
            n: Some(labeling.n),
            k: Some(labeling.clusters.len()),
            ..ReportMetadata::default()
        },
    }
}

/// Mean of the individual percentage profiles, the alternative to
/// [`personality_percentages`].
pub fn mean_profile_percentages(
    profiles: &[TraitProfile],
    schema: &SurveySchema,
) -> Result<PercentReport> {
    if profiles.is_empty() {
        return Err(Error::InvalidDataset("no profiles to aggregate".into()));
    }
    let mut percentages = IndexMap::new();
    for d in &schema.dimensions {
        let mut sum = 0.0;
        for p in profiles {
            sum += p.percent.get(d).copied().ok_or_else(|| {
                Error::DimensionMismatch(format!("profile lacks dimension `{d}`"))
            })?;
        }
        percentages.insert(d.clone(), sum / profiles.len() as f64);
    }
    Ok(PercentReport {
        provenance: Provenance::Questionnaire,
        percentages,
        metadata: ReportMetadata {
            schema: Some(schema.name.clone()),
            aggregate: Some("mean".into()),
            n: Some(profiles.len()),
            ..ReportMetadata::default()
        },
    })
}

/// Convex combination `w * a + (1 - w) * b`, in `a`'s dimension order.
pub fn fuse_profiles(a: &PercentReport, b: &PercentReport, w: f64) -> Result<PercentReport> {
    if !(0.0..=1.0).contains(&w) {
        return Err(Error::InvalidConfig(format!(
            "fusion weight {w} outside [0, 1]"
        )));
    }
    if a.percentages.len() != b.percentages.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} dimensions vs {}",
            a.percentages.len(),
            b.percentages.len()
        )));
    }
    let mut percentages = IndexMap::with_capacity(a.percentages.len());
    for (d, &pa) in &a.percentages {
        let pb = b.percentages.get(d).copied().ok_or_else(|| {
            Error::DimensionMismatch(format!("`{d}` missing from the second report"))
        })?;
        percentages.insert(d.clone(), w * pa + (1.0 - w) * pb);
    }
    let schema = match (&a.metadata.schema, &b.metadata.schema) {
        (Some(x), Some(y)) if x == y => Some(x.clone()),
        _ => None,
    };
    Ok(PercentReport {
        provenance: Provenance::Fused,
        percentages,
        metadata: ReportMetadata {
            schema,
            ..ReportMetadata::default()
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Text,
    PieData,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "text" => Ok(ReportFormat::Text),
            "piedata" => Ok(ReportFormat::PieData),
            other => Err(Error::UnknownFormat(other.to_string())),
        }
    }
}

/// Anything [`emit_report`] can render.
#[derive(Debug, Clone, Copy)]
pub enum Emittable<'a> {
    Report(&'a PercentReport),
    Labeling(&'a ClusterLabeling),
}

impl<'a> From<&'a PercentReport> for Emittable<'a> {
    fn from(r: &'a PercentReport) -> Self {
        Emittable::Report(r)
    }
}

impl<'a> From<&'a ClusterLabeling> for Emittable<'a> {
    fn from(l: &'a ClusterLabeling) -> Self {
        Emittable::Labeling(l)
    }
}

/// Fixed three-decimal rendering. `{:.3}` rounds the exact binary value
/// half to even; negative zero prints as zero.
pub fn format_3dp(x: f64) -> String {
    let s = format!("{x:.3}");
    if s == "-0.000" {
        "0.000".into()
    } else {
        s
    }
}

/// Serializes a report or labeling.
///
/// `json` keeps full precision so documents re-parse to identical values;
/// `text` and `piedata` print numbers with three decimals.
pub fn emit_report<'a>(item: impl Into<Emittable<'a>>, format: ReportFormat) -> Result<Vec<u8>> {
    let item = item.into();
    match format {
        ReportFormat::Json => {
            let mut s = match item {
                Emittable::Report(r) => serde_json::to_string_pretty(r)?,
                Emittable::Labeling(l) => serde_json::to_string_pretty(l)?,
            };
            s.push('\n');
            Ok(s.into_bytes())
        }
        ReportFormat::Text => Ok(match item {
            Emittable::Report(r) => report_text(r),
            Emittable::Labeling(l) => labeling_text(l),
        }
        .into_bytes()),
        ReportFormat::PieData => {
            let shares;
            let report = match item {
                Emittable::Report(r) => r,
                Emittable::Labeling(l) => {
                    shares = personality_percentages(l);
                    &shares
                }
            };
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["dimension", "percentage"])?;
            for (d, p) in &report.percentages {
                w.write_record([d.as_str(), &format_3dp(*p)])?;
            }
            w.into_inner().map_err(|e| Error::Io(e.into_error()))
        }
    }
}

fn report_text(r: &PercentReport) -> String {
    let mut out = String::new();
    let provenance = match r.provenance {
        Provenance::Questionnaire => "questionnaire",
        Provenance::External => "external",
        Provenance::Fused => "fused",
    };
    let m = &r.metadata;
    let mut meta: Vec<(&str, String)> = vec![("provenance", provenance.into())];
    if let Some(s) = &m.schema {
        meta.push(("schema", s.clone()));
    }
    if let Some(a) = &m.aggregate {
        meta.push(("aggregate", a.clone()));
    }
    if let Some(n) = m.n {
        meta.push(("n", n.to_string()));
    }
    if let Some(k) = m.k {
        meta.push(("k", k.to_string()));
    }
    if let Some(seed) = m.seed {
        meta.push(("seed", seed.to_string()));
    }
    if let Some(restarts) = m.restarts {
        meta.push(("restarts", restarts.to_string()));
    }
    if let Some(p) = &m.policy {
        meta.push(("policy", p.clone()));
    }
    if let Some(c) = m.cost {
        meta.push(("cost", format_3dp(c)));
    }
    for (key, value) in meta {
        let _ = writeln!(out, "{key:<11}{value}");
    }
    out.push('\n');

    let width = r
        .percentages
        .keys()
        .map(String::len)
        .chain(std::iter::once("dimension".len()))
        .max()
        .unwrap_or(0);
    let _ = writeln!(out, "{:<width$}  {:>8}", "dimension", "percent");
    for (d, p) in &r.percentages {
        let _ = writeln!(out, "{:<width$}  {:>8}", d, format_3dp(*p));
    }
    out
}

fn labeling_text(l: &ClusterLabeling) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "schema     {}", l.schema);
    let _ = writeln!(out, "n          {}", l.n);
    out.push('\n');
    let dominant_width = l
        .clusters
        .iter()
        .map(|c| c.dominant.len())
        .chain(std::iter::once("dominant".len()))
        .max()
        .unwrap_or(0);
    let col = |d: &str| d.len().max(8);
    let _ = write!(
        out,
        "{:>7}  {:>6}  {:<dominant_width$}",
        "cluster", "size", "dominant"
    );
    for d in &l.dimensions {
        let _ = write!(out, "  {:>w$}", d, w = col(d));
    }
    out.push('\n');
    for c in &l.clusters {
        let _ = write!(
            out,
            "{:>7}  {:>6}  {:<dominant_width$}",
            c.cluster, c.size, c.dominant
        );
        for d in &l.dimensions {
            let v = c.mean_percent.get(d).copied().unwrap_or(0.0);
            let _ = write!(out, "  {:>w$}", format_3dp(v), w = col(d));
        }
        out.push('\n');
    }
    out
}
