//! Flow-feature tables: schema, CSV ingestion, ordering, stratified splitting
//! and synthetic regime-switch data.

mod csv_io;
mod split;
mod synth;
mod transform;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use csv_io::{load_flow_csv, load_flow_csvs, read_flow_csv, write_flow_csv, LoadReport};
pub use split::{stratified_split, stratified_split_indices, DEFAULT_TRAIN_FRACTION};
pub use synth::{synth_generate, Regime, SynthConfig};
pub use transform::{transform_parts, transform_table};

/// The 23 time-related flow features of the ISCX VPN-nonVPN CSVs, in file order.
pub const ISCX_FEATURES: [&str; 23] = [
    "duration",
    "total_fiat",
    "total_biat",
    "min_fiat",
    "min_biat",
    "max_fiat",
    "max_biat",
    "mean_fiat",
    "mean_biat",
    "flowPktsPerSecond",
    "flowBytesPerSecond",
    "min_flowiat",
    "max_flowiat",
    "mean_flowiat",
    "std_flowiat",
    "min_active",
    "mean_active",
    "max_active",
    "std_active",
    "min_idle",
    "mean_idle",
    "max_idle",
    "std_idle",
];

pub const ISCX_LABEL: &str = "class1";

/// Which columns of a flow CSV are features.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum FeatureColumns {
    Named(Vec<String>),
    /// Every column other than the label and timestamp columns.
    AllOthers,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub features: FeatureColumns,
    pub label: String,
    pub timestamp: Option<String>,
}

impl Default for FeatureSchema {
    fn default() -> Self {
        Self::iscx()
    }
}

impl FeatureSchema {
    pub fn new(
        features: Vec<String>,
        label: impl Into<String>,
        timestamp: Option<String>,
    ) -> Result<Self> {
        let label = label.into();
        let mut seen = std::collections::HashSet::new();
        for name in features
            .iter()
            .chain(std::iter::once(&label))
            .chain(timestamp.iter())
        {
            if !seen.insert(name.as_str()) {
                return Err(Error::Schema(format!("column `{name}` declared twice")));
            }
        }
        if features.is_empty() {
            return Err(Error::Schema("schema declares no feature columns".into()));
        }
        Ok(Self {
            features: FeatureColumns::Named(features),
            label,
            timestamp,
        })
    }

    pub fn iscx() -> Self {
        Self {
            features: FeatureColumns::Named(ISCX_FEATURES.iter().map(|s| s.to_string()).collect()),
            label: ISCX_LABEL.to_string(),
            timestamp: None,
        }
    }

    /// All columns except `label` (and `timestamp`, if given) are features.
    pub fn auto(label: impl Into<String>, timestamp: Option<String>) -> Self {
        Self {
            features: FeatureColumns::AllOthers,
            label: label.into(),
            timestamp,
        }
    }

    /// Parses a schema file of `key = value` lines with keys `features`
    /// (comma-separated, or `*` for all other columns), `label` and `timestamp`.
    /// Blank lines and lines starting with `#` are ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut features = None;
        let mut label = ISCX_LABEL.to_string();
        let mut timestamp = None;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Schema(format!("line {}: expected `key = value`", lineno + 1))
            })?;
            let value = value.trim();
            match key.trim() {
                "features" if value == "*" => features = Some(FeatureColumns::AllOthers),
                "features" => {
                    features = Some(FeatureColumns::Named(
                        value
                            .split(',')
                            .map(|s| s.trim().to_string())
                            .filter(|s| !s.is_empty())
                            .collect(),
                    ))
                }
                "label" => label = value.to_string(),
                "timestamp" => timestamp = (!value.is_empty()).then(|| value.to_string()),
                other => {
                    return Err(Error::Schema(format!(
                        "line {}: unknown schema key `{other}`",
                        lineno + 1
                    )))
                }
            }
        }
        match features {
            Some(FeatureColumns::Named(names)) => Self::new(names, label, timestamp),
            Some(FeatureColumns::AllOthers) => Ok(Self::auto(label, timestamp)),
            None => Err(Error::Schema("schema file has no `features` entry".into())),
        }
    }
}

/// Maps raw label strings onto class names, case-insensitively.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelNormalizer {
    rules: Vec<LabelRule>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum LabelRule {
    Exact { pattern: String, class: String },
    Prefix { pattern: String, class: String },
}

impl Default for LabelNormalizer {
    /// `VPN` ↦ VPN, anything starting with `non` ↦ NonVPN.
    fn default() -> Self {
        Self::new(vec![
            LabelRule::Exact {
                pattern: "vpn".into(),
                class: "VPN".into(),
            },
            LabelRule::Prefix {
                pattern: "non".into(),
                class: "NonVPN".into(),
            },
        ])
    }
}

impl LabelNormalizer {
    pub fn new(rules: Vec<LabelRule>) -> Self {
        let rules = rules
            .into_iter()
            .map(|r| match r {
                LabelRule::Exact { pattern, class } => LabelRule::Exact {
                    pattern: pattern.to_lowercase(),
                    class,
                },
                LabelRule::Prefix { pattern, class } => LabelRule::Prefix {
                    pattern: pattern.to_lowercase(),
                    class,
                },
            })
            .collect();
        Self { rules }
    }

    /// No aliasing: labels are used as written (trimmed).
    pub fn passthrough() -> Self {
        Self { rules: Vec::new() }
    }

    /// The class for a raw label; unmatched labels are kept verbatim. `None` for
    /// an empty label.
    pub fn normalize(&self, raw: &str) -> Option<String> {
        let raw = raw.trim();
        if raw.is_empty() {
            return None;
        }
        let lower = raw.to_lowercase();
        for rule in &self.rules {
            match rule {
                LabelRule::Exact { pattern, class } if lower == *pattern => {
                    return Some(class.clone())
                }
                LabelRule::Prefix { pattern, class } if lower.starts_with(pattern.as_str()) => {
                    return Some(class.clone())
                }
                _ => {}
            }
        }
        Some(raw.to_string())
    }
}

/// Where a row came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowOrigin {
    /// Index into [`FeatureTable::sources`].
    pub source: usize,
    /// Zero-based data-row index within that source.
    pub row: usize,
}

/// An N×F matrix of finite flow features, stored column-wise, with one class
/// label per row and optional timestamps.
///
/// Class indices refer to [`FeatureTable::classes`], which is sorted
/// lexicographically; comparing indices therefore compares label names.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    feature_names: Vec<String>,
    columns: Vec<Vec<f64>>,
    labels: Vec<usize>,
    classes: Vec<String>,
    label_name: String,
    timestamp_name: Option<String>,
    timestamps: Option<Vec<f64>>,
    sources: Vec<String>,
    provenance: Vec<RowOrigin>,
}

impl FeatureTable {
    /// Builds a table from named columns and per-row label strings.
    pub fn new<S: AsRef<str>>(
        feature_names: Vec<String>,
        columns: Vec<Vec<f64>>,
        labels: &[S],
    ) -> Result<Self> {
        let mut classes: Vec<String> = labels.iter().map(|l| l.as_ref().to_string()).collect();
        classes.sort();
        classes.dedup();
        let codes = labels
            .iter()
            .map(|l| {
                classes
                    .binary_search_by(|c| c.as_str().cmp(l.as_ref()))
                    .unwrap()
            })
            .collect();
        Self::from_codes(feature_names, columns, codes, classes)
    }

    /// Builds a table from class codes. `classes` must be sorted and unique.
    pub fn from_codes(
        feature_names: Vec<String>,
        columns: Vec<Vec<f64>>,
        labels: Vec<usize>,
        classes: Vec<String>,
    ) -> Result<Self> {
        let n = labels.len();
        if n == 0 {
            return Err(Error::Data("table has no rows".into()));
        }
        if feature_names.len() != columns.len() {
            return Err(Error::Schema(format!(
                "{} feature names for {} columns",
                feature_names.len(),
                columns.len()
            )));
        }
        if let Some((name, _)) = feature_names
            .iter()
            .zip(&columns)
            .find(|(_, c)| c.len() != n)
        {
            return Err(Error::Data(format!(
                "column `{name}` length differs from label count {n}"
            )));
        }
        if !classes.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::Data("class list must be sorted and unique".into()));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= classes.len()) {
            return Err(Error::Data(format!("class code {bad} out of range")));
        }
        for (name, column) in feature_names.iter().zip(&columns) {
            if column.iter().any(|v| !v.is_finite()) {
                return Err(Error::Data(format!(
                    "column `{name}` has non-finite values"
                )));
            }
        }
        Ok(Self {
            feature_names,
            columns,
            labels,
            classes,
            label_name: ISCX_LABEL.to_string(),
            timestamp_name: None,
            timestamps: None,
            sources: Vec::new(),
            provenance: (0..n).map(|row| RowOrigin { source: 0, row }).collect(),
        })
    }

    pub fn with_label_name(mut self, name: impl Into<String>) -> Self {
        self.label_name = name.into();
        self
    }

    pub fn with_timestamps(
        mut self,
        name: impl Into<String>,
        timestamps: Vec<f64>,
    ) -> Result<Self> {
        if timestamps.len() != self.n_rows() {
            return Err(Error::Data("timestamp count differs from row count".into()));
        }
        self.timestamp_name = Some(name.into());
        self.timestamps = Some(timestamps);
        Ok(self)
    }

    pub(crate) fn with_provenance(
        mut self,
        sources: Vec<String>,
        provenance: Vec<RowOrigin>,
    ) -> Self {
        debug_assert_eq!(provenance.len(), self.n_rows());
        self.sources = sources;
        self.provenance = provenance;
        self
    }

    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    pub fn n_features(&self) -> usize {
        self.columns.len()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn column(&self, index: usize) -> &[f64] {
        &self.columns[index]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn label_name(&self) -> &str {
        &self.label_name
    }

    pub fn timestamp_name(&self) -> Option<&str> {
        self.timestamp_name.as_deref()
    }

    pub fn timestamps(&self) -> Option<&[f64]> {
        self.timestamps.as_deref()
    }

    pub fn sources(&self) -> &[String] {
        &self.sources
    }

    pub fn provenance(&self) -> &[RowOrigin] {
        &self.provenance
    }

    pub fn label_of(&self, row: usize) -> &str {
        &self.classes[self.labels[row]]
    }

    /// Rows per class, indexed like [`FeatureTable::classes`].
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.classes.len()];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Row-major copy of the feature values.
    pub fn row_major(&self) -> Vec<f64> {
        let (n, f) = (self.n_rows(), self.n_features());
        let mut out = vec![0.0; n * f];
        for (j, column) in self.columns.iter().enumerate() {
            for (i, &v) in column.iter().enumerate() {
                out[i * f + j] = v;
            }
        }
        out
    }

    /// The rows at `indices`, in that order. The class list is kept as is.
    pub fn select_rows(&self, indices: &[usize]) -> Self {
        let pick = |v: &[f64]| indices.iter().map(|&i| v[i]).collect::<Vec<f64>>();
        Self {
            feature_names: self.feature_names.clone(),
            columns: self.columns.iter().map(|c| pick(c)).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            classes: self.classes.clone(),
            label_name: self.label_name.clone(),
            timestamp_name: self.timestamp_name.clone(),
            timestamps: self.timestamps.as_deref().map(pick),
            sources: self.sources.clone(),
            provenance: indices.iter().map(|&i| self.provenance[i]).collect(),
        }
    }

    /// The feature columns at `indices`, in that order.
    pub fn select_features(&self, indices: &[usize]) -> Self {
        Self {
            feature_names: indices
                .iter()
                .map(|&i| self.feature_names[i].clone())
                .collect(),
            columns: indices.iter().map(|&i| self.columns[i].clone()).collect(),
            ..self.clone()
        }
    }

    /// The feature columns with the given names, in that order.
    pub fn select_features_by_name<S: AsRef<str>>(&self, names: &[S]) -> Result<Self> {
        let indices = names
            .iter()
            .map(|name| {
                self.feature_names
                    .iter()
                    .position(|n| n == name.as_ref())
                    .ok_or_else(|| {
                        Error::Schema(format!("feature `{}` not in table", name.as_ref()))
                    })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(self.select_features(&indices))
    }

    /// Stacks tables with identical feature names, label column and timestamp
    /// column, in the given order. Classes are merged and re-sorted; sources
    /// are concatenated.
    pub fn concat(tables: &[FeatureTable]) -> Result<Self> {
        let first = tables
            .first()
            .ok_or_else(|| Error::Data("nothing to concatenate".into()))?;
        if tables.len() == 1 {
            return Ok(first.clone());
        }
        for t in &tables[1..] {
            if t.feature_names != first.feature_names
                || t.label_name != first.label_name
                || t.timestamp_name != first.timestamp_name
            {
                return Err(Error::Schema(format!(
                    "column layout of {} differs from {}",
                    t.sources.join(", "),
                    first.sources.join(", ")
                )));
            }
        }
        let mut classes: Vec<String> = tables
            .iter()
            .flat_map(|t| t.classes.iter().cloned())
            .collect();
        classes.sort();
        classes.dedup();
        let code = |name: &str| classes.binary_search_by(|c| c.as_str().cmp(name)).unwrap();

        let mut columns = vec![Vec::new(); first.n_features()];
        let mut labels = Vec::new();
        let mut timestamps = first.timestamps.as_ref().map(|_| Vec::new());
        let mut sources = Vec::new();
        let mut provenance = Vec::new();
        for t in tables {
            for (out, column) in columns.iter_mut().zip(&t.columns) {
                out.extend_from_slice(column);
            }
            labels.extend(t.labels.iter().map(|&l| code(&t.classes[l])));
            if let (Some(out), Some(ts)) = (timestamps.as_mut(), &t.timestamps) {
                out.extend_from_slice(ts);
            }
            let offset = sources.len();
            if t.sources.is_empty() {
                sources.push(String::new());
            } else {
                sources.extend(t.sources.iter().cloned());
            }
            provenance.extend(t.provenance.iter().map(|o| RowOrigin {
                source: o.source + offset,
                row: o.row,
            }));
        }
        Ok(Self {
            feature_names: first.feature_names.clone(),
            columns,
            labels,
            classes,
            label_name: first.label_name.clone(),
            timestamp_name: first.timestamp_name.clone(),
            timestamps,
            sources,
            provenance,
        })
    }

    /// Replaces the feature columns, keeping labels, timestamps and provenance.
    pub(crate) fn with_columns(&self, feature_names: Vec<String>, columns: Vec<Vec<f64>>) -> Self {
        Self {
            feature_names,
            columns,
            ..self.clone()
        }
    }

    /// Stable sort of all rows by timestamp; no-op without timestamps.
    pub(crate) fn sort_by_timestamp(&mut self) {
        let Some(ts) = &self.timestamps else { return };
        if ts.windows(2).all(|w| w[0] <= w[1]) {
            return;
        }
        let mut order: Vec<usize> = (0..self.n_rows()).collect();
        order.sort_by(|&a, &b| ts[a].total_cmp(&ts[b]));
        *self = self.select_rows(&order);
    }
}
