//! CART classification tree grown by greedy weighted-Gini minimization.
//!
//! Split quality is compared exactly in integer arithmetic: minimizing the
//! weighted Gini impurity of a split is equivalent to maximizing
//! `Σ_L c²/n_L + Σ_R c²/n_R`, a ratio of integers. Exact comparison keeps
//! tie-breaking (lower feature index, then lower threshold) independent of
//! summation order and class numbering.

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{majority, Matrix};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum TreeNode {
    /// Rows with `x[feature] <= threshold` go to `left`.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        counts: Vec<u64>,
        class: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeParams {
    /// `None` grows until purity.
    pub max_depth: Option<usize>,
    /// Minimum number of samples in each child of a split.
    pub min_leaf: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self {
            max_depth: None,
            min_leaf: 1,
        }
    }
}

/// A fitted tree stored as a node arena; the root is node 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeModel {
    pub nodes: Vec<TreeNode>,
    pub n_features: usize,
    pub n_classes: usize,
}

/// Which features a node may split on.
pub(crate) enum FeaturePicker<'a> {
    All,
    /// Examine `per_split` features in random order, continuing past them only
    /// if none yields a valid split.
    Random {
        per_split: usize,
        rng: &'a mut ChaCha8Rng,
    },
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    /// Score numerator `S_L·n_R + S_R·n_L` and denominator `n_L·n_R`.
    num: u128,
    den: u128,
    feature: usize,
    threshold: f64,
}

impl Candidate {
    fn beats(&self, other: &Candidate) -> bool {
        let lhs = self.num * other.den;
        let rhs = other.num * self.den;
        lhs.cmp(&rhs)
            .then_with(|| other.feature.cmp(&self.feature))
            .then_with(|| other.threshold.total_cmp(&self.threshold))
            .is_gt()
    }
}

/// A threshold `t` with `lo <= t < hi`.
fn midpoint(lo: f64, hi: f64) -> f64 {
    let mid = lo / 2.0 + hi / 2.0;
    if mid >= hi || mid < lo {
        lo
    } else {
        mid
    }
}

fn class_counts(labels: &[usize], samples: &[usize], n_classes: usize) -> Vec<u64> {
    let mut counts = vec![0u64; n_classes];
    for &i in samples {
        counts[labels[i]] += 1;
    }
    counts
}

struct Grower<'a> {
    x: &'a Matrix,
    labels: &'a [usize],
    n_classes: usize,
    params: TreeParams,
    pairs: Vec<(f64, usize)>,
}

impl Grower<'_> {
    fn best_for_feature(
        &mut self,
        samples: &[usize],
        feature: usize,
        totals: &[u64],
    ) -> Option<Candidate> {
        self.pairs.clear();
        self.pairs.extend(
            samples
                .iter()
                .map(|&i| (self.x.get(i, feature), self.labels[i])),
        );
        self.pairs.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
        let n = self.pairs.len() as u128;
        if self.pairs[0].0 == self.pairs[self.pairs.len() - 1].0 {
            return None;
        }

        let min_leaf = self.params.min_leaf as u128;
        let mut left = vec![0u64; self.n_classes];
        let mut right = totals.to_vec();
        let mut s_left: u128 = 0;
        let mut s_right: u128 = totals.iter().map(|&c| (c as u128) * (c as u128)).sum();
        let mut best: Option<Candidate> = None;
        for i in 0..self.pairs.len() - 1 {
            let c = self.pairs[i].1;
            s_left += 2 * left[c] as u128 + 1;
            left[c] += 1;
            s_right -= 2 * right[c] as u128 - 1;
            right[c] -= 1;
            let (value, next) = (self.pairs[i].0, self.pairs[i + 1].0);
            if value == next {
                continue;
            }
            let n_left = i as u128 + 1;
            let n_right = n - n_left;
            if n_left < min_leaf || n_right < min_leaf {
                continue;
            }
            let candidate = Candidate {
                num: s_left * n_right + s_right * n_left,
                den: n_left * n_right,
                feature,
                threshold: midpoint(value, next),
            };
            if best.is_none_or(|b| candidate.num * b.den > b.num * candidate.den) {
                best = Some(candidate);
            }
        }
        best
    }

    fn best_split(
        &mut self,
        samples: &[usize],
        totals: &[u64],
        picker: &mut FeaturePicker,
    ) -> Option<Candidate> {
        let f = self.x.n_cols();
        let (order, examine): (Vec<usize>, usize) = match picker {
            FeaturePicker::All => ((0..f).collect(), f),
            FeaturePicker::Random { per_split, rng } => {
                let mut order: Vec<usize> = (0..f).collect();
                order.shuffle(*rng);
                (order, (*per_split).clamp(1, f))
            }
        };
        let mut best: Option<Candidate> = None;
        for (visited, &feature) in order.iter().enumerate() {
            if visited >= examine && best.is_some() {
                break;
            }
            if let Some(c) = self.best_for_feature(samples, feature, totals) {
                if best.is_none_or(|b| c.beats(&b)) {
                    best = Some(c);
                }
            }
        }
        best
    }
}

impl TreeModel {
    pub fn fit(x: &Matrix, labels: &[usize], n_classes: usize, params: TreeParams) -> Result<Self> {
        super::check_training(x, labels, n_classes)?;
        Self::grow(
            x,
            labels,
            n_classes,
            (0..x.n_rows()).collect(),
            params,
            &mut FeaturePicker::All,
        )
    }

    /// Grows a tree on `samples` (row indices, repeats allowed).
    pub(crate) fn grow(
        x: &Matrix,
        labels: &[usize],
        n_classes: usize,
        samples: Vec<usize>,
        params: TreeParams,
        picker: &mut FeaturePicker,
    ) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Parameter(
                "cannot grow a tree on zero samples".into(),
            ));
        }
        if params.min_leaf == 0 {
            return Err(Error::Parameter("min_leaf must be at least 1".into()));
        }
        let mut grower = Grower {
            x,
            labels,
            n_classes,
            params,
            pairs: Vec::with_capacity(samples.len()),
        };
        let mut nodes = vec![TreeNode::Leaf {
            counts: Vec::new(),
            class: 0,
        }];
        let mut stack = vec![(0usize, samples, 0usize)];
        while let Some((id, samples, depth)) = stack.pop() {
            let counts = class_counts(labels, &samples, n_classes);
            let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
            let depth_reached = params.max_depth.is_some_and(|d| depth >= d);
            let too_small = samples.len() < 2 * params.min_leaf;
            let split = if pure || depth_reached || too_small {
                None
            } else {
                grower.best_split(&samples, &counts, picker)
            };
            match split {
                None => {
                    nodes[id] = TreeNode::Leaf {
                        class: majority(&counts),
                        counts,
                    };
                }
                Some(c) => {
                    let (left, right): (Vec<usize>, Vec<usize>) = samples
                        .iter()
                        .partition(|&&i| x.get(i, c.feature) <= c.threshold);
                    let (l, r) = (nodes.len(), nodes.len() + 1);
                    nodes.push(TreeNode::Leaf {
                        counts: Vec::new(),
                        class: 0,
                    });
                    nodes.push(TreeNode::Leaf {
                        counts: Vec::new(),
                        class: 0,
                    });
                    nodes[id] = TreeNode::Split {
                        feature: c.feature,
                        threshold: c.threshold,
                        left: l,
                        right: r,
                    };
                    stack.push((r, right, depth + 1));
                    stack.push((l, left, depth + 1));
                }
            }
        }
        Ok(Self {
            nodes,
            n_features: x.n_cols(),
            n_classes,
        })
    }

    pub fn predict_row(&self, row: &[f64]) -> usize {
        let mut id = 0;
        loop {
            match &self.nodes[id] {
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    id = if row[*feature] <= *threshold {
                        *left
                    } else {
                        *right
                    }
                }
                TreeNode::Leaf { class, .. } => return *class,
            }
        }
    }

    pub fn predict(&self, x: &Matrix) -> Result<Vec<usize>> {
        super::check_width(x, self.n_features)?;
        Ok((0..x.n_rows())
            .into_par_iter()
            .map(|i| self.predict_row(x.row(i)))
            .collect())
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, TreeNode::Leaf { .. }))
            .count()
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[TreeNode], id: usize) -> usize {
            match &nodes[id] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => {
                    1 + walk(nodes, *left).max(walk(nodes, *right))
                }
            }
        }
        walk(&self.nodes, 0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xor() -> (Matrix, Vec<usize>) {
        let x = Matrix::new(4, 2, vec![0.0, 0.0, 1.0, 1.0, 0.0, 1.0, 1.0, 0.0]).unwrap();
        (x, vec![0, 0, 1, 1])
    }

    #[test]
    fn single_class_is_one_leaf() {
        let x = Matrix::new(3, 1, vec![1.0, 2.0, 3.0]).unwrap();
        let tree = TreeModel::fit(&x, &[1, 1, 1], 2, TreeParams::default()).unwrap();
        assert_eq!(tree.nodes.len(), 1);
        assert_eq!(tree.predict(&x).unwrap(), vec![1, 1, 1]);
    }

    #[test]
    fn single_sample_is_one_leaf() {
        let x = Matrix::new(1, 2, vec![1.0, 2.0]).unwrap();
        let tree = TreeModel::fit(&x, &[0], 1, TreeParams::default()).unwrap();
        assert_eq!(tree.n_leaves(), 1);
    }

    #[test]
    fn xor_at_depth_two() {
        let (x, y) = xor();
        let params = TreeParams {
            max_depth: Some(2),
            min_leaf: 1,
        };
        let tree = TreeModel::fit(&x, &y, 2, params).unwrap();
        assert_eq!(tree.predict(&x).unwrap(), y);
        assert_eq!(tree.depth(), 2);
        // both root splits are equally (un)informative; the lower feature index wins
        assert!(
            matches!(tree.nodes[0], TreeNode::Split { feature: 0, threshold, .. } if threshold == 0.5)
        );
    }

    #[test]
    fn xor_needs_depth_two() {
        let (x, y) = xor();
        let params = TreeParams {
            max_depth: Some(1),
            min_leaf: 1,
        };
        let tree = TreeModel::fit(&x, &y, 2, params).unwrap();
        let correct = tree
            .predict(&x)
            .unwrap()
            .iter()
            .zip(&y)
            .filter(|(a, b)| a == b)
            .count();
        assert_eq!(correct, 2);
    }

    #[test]
    fn min_leaf_is_respected() {
        let x = Matrix::new(5, 1, vec![0.0, 1.0, 2.0, 3.0, 4.0]).unwrap();
        let params = TreeParams {
            max_depth: None,
            min_leaf: 2,
        };
        let tree = TreeModel::fit(&x, &[0, 1, 1, 1, 1], 2, params).unwrap();
        for node in &tree.nodes {
            if let TreeNode::Leaf { counts, .. } = node {
                assert!(counts.iter().sum::<u64>() >= 2);
            }
        }
    }

    #[test]
    fn midpoint_stays_below_upper_value() {
        let lo = 1.0f64;
        let hi = f64::from_bits(lo.to_bits() + 1);
        let t = midpoint(lo, hi);
        assert!(lo <= t && t < hi);
        assert_eq!(midpoint(f64::MAX / 2.0, f64::MAX), 0.75 * f64::MAX);
    }

    #[test]
    fn rejects_empty_training_set() {
        let x = Matrix::new(0, 1, vec![]).unwrap();
        assert!(TreeModel::fit(&x, &[], 2, TreeParams::default()).is_err());
    }
}
