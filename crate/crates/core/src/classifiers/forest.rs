use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{FeaturePicker, TreeModel, TreeParams};
use super::{majority, Matrix};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from_seed};

pub const DEFAULT_TREES: usize = 100;

/// Number of candidate features examined per split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaxFeatures {
    /// ⌈√F⌉
    Sqrt,
    All,
    Count(usize),
}

impl MaxFeatures {
    pub fn resolve(self, n_features: usize) -> usize {
        let m = match self {
            MaxFeatures::Sqrt => (n_features as f64).sqrt().ceil() as usize,
            MaxFeatures::All => n_features,
            MaxFeatures::Count(m) => m,
        };
        m.clamp(1, n_features.max(1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    pub tree: TreeParams,
    pub max_features: MaxFeatures,
    /// Train each tree on an N-row bootstrap resample; otherwise on all rows.
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            n_trees: DEFAULT_TREES,
            tree: TreeParams::default(),
            max_features: MaxFeatures::Sqrt,
            bootstrap: true,
            seed: 0,
        }
    }
}

/// Bagged CART trees with per-split random feature subsets.
///
/// Tree `t` draws all of its randomness from `derive_seed(master_seed, t)`, so
/// trees can be trained in parallel and the model is a pure function of the
/// training data and the master seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<TreeModel>,
    pub tree_seeds: Vec<u64>,
    pub master_seed: u64,
    pub features_per_split: usize,
    pub bootstrap: bool,
    pub n_features: usize,
    pub n_classes: usize,
}

impl ForestModel {
    pub fn fit(
        x: &Matrix,
        labels: &[usize],
        n_classes: usize,
        params: ForestParams,
    ) -> Result<Self> {
        super::check_training(x, labels, n_classes)?;
        if params.n_trees == 0 {
            return Err(Error::Parameter("a forest needs at least one tree".into()));
        }
        let n = x.n_rows();
        let per_split = params.max_features.resolve(x.n_cols());
        let tree_seeds: Vec<u64> = (0..params.n_trees as u64)
            .map(|t| derive_seed(params.seed, t))
            .collect();
        let trees = tree_seeds
            .par_iter()
            .map(|&seed| {
                let mut rng = rng_from_seed(seed);
                let samples = if params.bootstrap {
                    (0..n).map(|_| rng.random_range(0..n)).collect()
                } else {
                    (0..n).collect()
                };
                let mut picker = FeaturePicker::Random {
                    per_split,
                    rng: &mut rng,
                };
                TreeModel::grow(x, labels, n_classes, samples, params.tree, &mut picker)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            trees,
            tree_seeds,
            master_seed: params.seed,
            features_per_split: per_split,
            bootstrap: params.bootstrap,
            n_features: x.n_cols(),
            n_classes,
        })
    }

    /// Majority vote over trees; ties go to the lower class index.
    pub fn predict(&self, x: &Matrix) -> Result<Vec<usize>> {
        super::check_width(x, self.n_features)?;
        Ok((0..x.n_rows())
            .into_par_iter()
            .map(|i| {
                let row = x.row(i);
                let mut votes = vec![0u64; self.n_classes];
                for tree in &self.trees {
                    votes[tree.predict_row(row)] += 1;
                }
                majority(&votes)
            })
            .collect())
    }
}
