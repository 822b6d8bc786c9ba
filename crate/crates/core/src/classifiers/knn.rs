use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{majority, Matrix};
use crate::error::{Error, Result};

pub const DEFAULT_K: usize = 5;

/// k-nearest-neighbour classifier over standardized features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub k: usize,
    pub n_classes: usize,
    pub means: Vec<f64>,
    /// Population standard deviations; 1 for constant features.
    pub scales: Vec<f64>,
    /// Standardized training rows.
    pub train: Matrix,
    pub labels: Vec<usize>,
}

#[derive(PartialEq)]
struct Neighbour {
    distance: f64,
    index: usize,
}

impl Eq for Neighbour {}

impl Ord for Neighbour {
    fn cmp(&self, other: &Self) -> Ordering {
        self.distance
            .total_cmp(&other.distance)
            .then(self.index.cmp(&other.index))
    }
}

impl PartialOrd for Neighbour {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl KnnModel {
    pub fn fit(x: &Matrix, labels: &[usize], n_classes: usize, k: usize) -> Result<Self> {
        super::check_training(x, labels, n_classes)?;
        if k == 0 || k > x.n_rows() {
            return Err(Error::Parameter(format!(
                "k must lie in 1..={}, got {k}",
                x.n_rows()
            )));
        }
        let n = x.n_rows() as f64;
        let f = x.n_cols();
        let mut means = vec![0.0; f];
        for row in x.rows() {
            for (m, v) in means.iter_mut().zip(row) {
                *m += v;
            }
        }
        means.iter_mut().for_each(|m| *m /= n);
        let mut scales = vec![0.0; f];
        for row in x.rows() {
            for ((s, v), m) in scales.iter_mut().zip(row).zip(&means) {
                *s += (v - m) * (v - m);
            }
        }
        for s in &mut scales {
            *s = (*s / n).sqrt();
            if *s == 0.0 {
                *s = 1.0;
            }
        }
        let mut model = Self {
            k,
            n_classes,
            means,
            scales,
            train: Matrix::zeros(0, f),
            labels: labels.to_vec(),
        };
        model.train = model.standardize(x);
        Ok(model)
    }

    fn standardize(&self, x: &Matrix) -> Matrix {
        let data = x
            .rows()
            .flat_map(|row| {
                row.iter()
                    .zip(&self.means)
                    .zip(&self.scales)
                    .map(|((v, m), s)| (v - m) / s)
            })
            .collect();
        Matrix::new(x.n_rows(), x.n_cols(), data).expect("shape preserved")
    }

    /// Indices of the k nearest training rows, nearest first. Equal distances
    /// are ordered by training-row index.
    fn neighbours(&self, query: &[f64]) -> Vec<usize> {
        let mut heap = BinaryHeap::with_capacity(self.k + 1);
        for (index, row) in self.train.rows().enumerate() {
            let distance: f64 = row.iter().zip(query).map(|(a, b)| (a - b) * (a - b)).sum();
            let candidate = Neighbour { distance, index };
            if heap.len() < self.k {
                heap.push(candidate);
            } else if candidate < *heap.peek().unwrap() {
                heap.pop();
                heap.push(candidate);
            }
        }
        heap.into_sorted_vec()
            .into_iter()
            .map(|n| n.index)
            .collect()
    }

    pub fn predict(&self, x: &Matrix) -> Result<Vec<usize>> {
        super::check_width(x, self.train.n_cols())?;
        let z = self.standardize(x);
        Ok(z.rows()
            .collect::<Vec<_>>()
            .par_iter()
            .map(|q| {
                let mut votes = vec![0u64; self.n_classes];
                for i in self.neighbours(q) {
                    votes[self.labels[i]] += 1;
                }
                majority(&votes)
            })
            .collect())
    }
}
