use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{ForestModel, ForestParams, KnnModel, Matrix, MaxFeatures, TreeModel, TreeParams};
use super::{DEFAULT_K, DEFAULT_TREES};
use crate::error::{Error, Result};
use crate::rescaled_range::DsrrConfig;

pub const MODEL_FORMAT: &str = "dsrr-model";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Knn,
    Tree,
    Rf,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Knn => "knn",
            ModelKind::Tree => "tree",
            ModelKind::Rf => "rf",
        })
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "knn" => Ok(ModelKind::Knn),
            "tree" | "dt" | "cart" => Ok(ModelKind::Tree),
            "rf" | "forest" => Ok(ModelKind::Rf),
            other => Err(Error::Parameter(format!("unknown model `{other}`"))),
        }
    }
}

/// Learner choice plus hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub k: usize,
    pub n_trees: usize,
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
    pub seed: u64,
}

impl ModelSpec {
    /// Defaults: k = 5; 100 trees; unlimited depth; one sample per leaf.
    pub fn new(kind: ModelKind) -> Self {
        Self {
            kind,
            k: DEFAULT_K,
            n_trees: DEFAULT_TREES,
            max_depth: None,
            min_leaf: 1,
            seed: 0,
        }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    fn tree_params(&self) -> TreeParams {
        TreeParams {
            max_depth: self.max_depth,
            min_leaf: self.min_leaf,
        }
    }

    pub fn fit(&self, x: &Matrix, labels: &[usize], n_classes: usize) -> Result<Classifier> {
        Ok(match self.kind {
            ModelKind::Knn => Classifier::Knn(KnnModel::fit(x, labels, n_classes, self.k)?),
            ModelKind::Tree => {
                Classifier::Tree(TreeModel::fit(x, labels, n_classes, self.tree_params())?)
            }
            ModelKind::Rf => Classifier::Forest(ForestModel::fit(
                x,
                labels,
                n_classes,
                ForestParams {
                    n_trees: self.n_trees,
                    tree: self.tree_params(),
                    max_features: MaxFeatures::Sqrt,
                    bootstrap: true,
                    seed: self.seed,
                },
            )?),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Classifier {
    Knn(KnnModel),
    Tree(TreeModel),
    Forest(ForestModel),
}

impl Classifier {
    pub fn predict(&self, x: &Matrix) -> Result<Vec<usize>> {
        match self {
            Classifier::Knn(m) => m.predict(x),
            Classifier::Tree(m) => m.predict(x),
            Classifier::Forest(m) => m.predict(x),
        }
    }
}

/// Versioned on-disk model: the fitted learner plus everything needed to
/// rebuild its inputs (feature names, class names, transform, split).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format: String,
    pub version: u32,
    pub feature_names: Vec<String>,
    pub classes: Vec<String>,
    pub dsrr: Option<DsrrConfig>,
    pub transform_after_split: bool,
    pub train_fraction: f64,
    pub split_seed: u64,
    pub spec: ModelSpec,
    pub model: Classifier,
}

impl ModelFile {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let header: serde_json::Value = serde_json::from_str(text)?;
        let format = header.get("format").and_then(|v| v.as_str());
        let version = header.get("version").and_then(|v| v.as_u64());
        if format != Some(MODEL_FORMAT) {
            return Err(Error::Model(format!("not a {MODEL_FORMAT} document")));
        }
        if version != Some(MODEL_VERSION as u64) {
            return Err(Error::Model(format!(
                "unsupported model version {version:?}, expected {MODEL_VERSION}"
            )));
        }
        Ok(serde_json::from_value(header)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
