//! Seed-deterministic classical learners: kNN, CART and random forest.
//!
//! All learners take a row-major [`Matrix`] and class codes in `0..n_classes`.
//! Ties in votes resolve to the lower class code.

mod forest;
mod knn;
mod model;
mod tree;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use forest::{ForestModel, ForestParams, MaxFeatures, DEFAULT_TREES};
pub use knn::{KnnModel, DEFAULT_K};
pub use model::{Classifier, ModelFile, ModelKind, ModelSpec, MODEL_FORMAT, MODEL_VERSION};
pub use tree::{TreeModel, TreeNode, TreeParams};

/// Dense row-major matrix of feature values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    n_rows: usize,
    n_cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(n_rows: usize, n_cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n_rows * n_cols {
            return Err(Error::Input(format!(
                "{} values for a {n_rows}x{n_cols} matrix",
                data.len()
            )));
        }
        Ok(Self {
            n_rows,
            n_cols,
            data,
        })
    }

    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Self {
            n_rows,
            n_cols,
            data: vec![0.0; n_rows * n_cols],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n_cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n_cols) {
            return Err(Error::Input("ragged rows".into()));
        }
        Self::new(rows.len(), n_cols, rows.concat())
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.n_cols + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.n_cols..(row + 1) * self.n_cols]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        // chunks_exact(0) panics; a zero-width matrix has empty rows
        let width = self.n_cols.max(1);
        self.data.chunks_exact(width).chain(std::iter::repeat_n(
            &[][..],
            if self.n_cols == 0 { self.n_rows } else { 0 },
        ))
    }
}

impl From<&crate::dataset::FeatureTable> for Matrix {
    fn from(table: &crate::dataset::FeatureTable) -> Self {
        Self {
            n_rows: table.n_rows(),
            n_cols: table.n_features(),
            data: table.row_major(),
        }
    }
}

/// Index of the largest count; the lowest index among equals.
pub(crate) fn majority(counts: &[u64]) -> usize {
    let mut best = 0;
    for (i, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = i;
        }
    }
    best
}

fn check_training(x: &Matrix, labels: &[usize], n_classes: usize) -> Result<()> {
    if x.n_rows() == 0 {
        return Err(Error::Parameter("training set is empty".into()));
    }
    if labels.len() != x.n_rows() {
        return Err(Error::Input(format!(
            "{} labels for {} rows",
            labels.len(),
            x.n_rows()
        )));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= n_classes) {
        return Err(Error::Input(format!("class code {bad} >= {n_classes}")));
    }
    if x.data.iter().any(|v| !v.is_finite()) {
        return Err(Error::Input("training features must be finite".into()));
    }
    Ok(())
}

fn check_width(x: &Matrix, n_features: usize) -> Result<()> {
    if x.n_cols() != n_features {
        return Err(Error::Input(format!(
            "model expects {n_features} features, got {}",
            x.n_cols()
        )));
    }
    Ok(())
}
