//! Φ_k: a correlation coefficient in [0, 1] obtained by inverting the χ² of a
//! binned contingency table through a discretized bivariate normal.
//!
//! Interval variables are cut into quantile bins. The observed Pearson χ² is
//! compared against the χ² a bivariate normal with correlation ρ produces on
//! the same bin grid (bins mapped to normal quantiles through their observed
//! marginal frequencies). The independence pedestal `(r−1)(k−1)` is removed by
//! the affine map `χ²(ρ) = ped + (1 − ped/χ²_max)·n·φ²(ρ)`, which pins ρ = 0 to
//! the pedestal and ρ = 1 to the largest χ² the grid can express.

use super::bivariate_normal::{normal_quantile, rectangle};
use super::Association;
use crate::error::{ensure_finite, Error, Result};

/// Two-way table of counts over occupied categories only.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContingencyTable {
    rows: usize,
    cols: usize,
    counts: Vec<u64>,
}

fn compress_codes(codes: &[usize]) -> (Vec<usize>, usize) {
    let max = codes.iter().copied().max().unwrap_or(0);
    let mut remap = vec![usize::MAX; max + 1];
    for &c in codes {
        remap[c] = 0;
    }
    let mut next = 0;
    for slot in remap.iter_mut().filter(|s| **s == 0) {
        *slot = next;
        next += 1;
    }
    (codes.iter().map(|&c| remap[c]).collect(), next)
}

impl ContingencyTable {
    /// Cross-tabulates two category code vectors. Codes keep their relative order;
    /// unused codes are removed.
    pub fn from_codes(a: &[usize], b: &[usize]) -> Result<Self> {
        if a.len() != b.len() {
            return Err(Error::Input(format!(
                "length mismatch: {} vs {}",
                a.len(),
                b.len()
            )));
        }
        if a.is_empty() {
            return Err(Error::Input(
                "contingency table needs at least one sample".into(),
            ));
        }
        let (a, rows) = compress_codes(a);
        let (b, cols) = compress_codes(b);
        let mut counts = vec![0u64; rows * cols];
        for (&i, &j) in a.iter().zip(&b) {
            counts[i * cols + j] += 1;
        }
        Ok(Self { rows, cols, counts })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn count(&self, row: usize, col: usize) -> u64 {
        self.counts[row * self.cols + col]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn row_totals(&self) -> Vec<u64> {
        self.counts
            .chunks(self.cols)
            .map(|r| r.iter().sum())
            .collect()
    }

    pub fn col_totals(&self) -> Vec<u64> {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self.count(i, j)).sum())
            .collect()
    }

    pub fn transpose(&self) -> Self {
        let counts = (0..self.cols)
            .flat_map(|j| (0..self.rows).map(move |i| (i, j)))
            .map(|(i, j)| self.count(i, j))
            .collect();
        Self {
            rows: self.cols,
            cols: self.rows,
            counts,
        }
    }

    /// Pearson χ² against the independence expectation.
    pub fn chi_square(&self) -> f64 {
        let n = self.total() as f64;
        let row_totals = self.row_totals();
        let col_totals = self.col_totals();
        let mut chi2 = 0.0;
        for (i, &ri) in row_totals.iter().enumerate() {
            for (j, &cj) in col_totals.iter().enumerate() {
                let expected = ri as f64 * cj as f64 / n;
                let diff = self.count(i, j) as f64 - expected;
                chi2 += diff * diff / expected;
            }
        }
        chi2
    }
}

/// Assigns each value to one of `n_bins` quantile bins by its rank.
///
/// A value whose count of strictly smaller values is `m` lands in bin
/// `⌊n_bins·m/n⌋`, so ties always share a bin and any strictly increasing
/// transform leaves the assignment unchanged.
pub fn quantile_bins(values: &[f64], n_bins: usize) -> Vec<usize> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_unstable_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut bins = vec![0; n];
    let mut rank_start = 0;
    for (pos, &idx) in order.iter().enumerate() {
        if pos > 0 && values[idx] != values[order[pos - 1]] {
            rank_start = pos;
        }
        bins[idx] = (n_bins * rank_start / n).min(n_bins - 1);
    }
    bins
}

/// Normal-quantile bin edges reproducing the given marginal counts.
fn normal_edges(totals: &[u64], n: f64) -> Vec<f64> {
    let mut edges = Vec::with_capacity(totals.len() + 1);
    edges.push(f64::NEG_INFINITY);
    let mut cumulative = 0u64;
    for &t in &totals[..totals.len() - 1] {
        cumulative += t;
        edges.push(normal_quantile(cumulative as f64 / n));
    }
    edges.push(f64::INFINITY);
    edges
}

/// Mean square contingency φ² of a bivariate normal with correlation `rho`
/// discretized on the given grid.
fn phi_squared(rho: f64, x_edges: &[f64], y_edges: &[f64], px: &[f64], py: &[f64]) -> f64 {
    let mut sum = 0.0;
    for (i, xw) in x_edges.windows(2).enumerate() {
        for (j, yw) in y_edges.windows(2).enumerate() {
            let p = rectangle(xw[0], xw[1], yw[0], yw[1], rho);
            sum += p * p / (px[i] * py[j]);
        }
    }
    (sum - 1.0).max(0.0)
}

const BISECTION_STEPS: usize = 200;
const RHO_TOLERANCE: f64 = 1e-15;

/// Φ_k of an already tabulated pair of variables.
///
/// The table and its transpose give bit-identical results.
pub fn phi_k_from_table(table: &ContingencyTable) -> Result<Association> {
    if table.rows() < 2 || table.cols() < 2 {
        return Ok(Association::degenerate());
    }
    let transposed = table.transpose();
    let table = if (transposed.rows, transposed.cols, &transposed.counts)
        < (table.rows, table.cols, &table.counts)
    {
        &transposed
    } else {
        table
    };
    let n = table.total() as f64;
    let chi2 = table.chi_square();
    let pedestal = ((table.rows() - 1) * (table.cols() - 1)) as f64;
    if chi2 <= pedestal {
        return Ok(Association::new(0.0));
    }

    let row_totals = table.row_totals();
    let col_totals = table.col_totals();
    let x_edges = normal_edges(&row_totals, n);
    let y_edges = normal_edges(&col_totals, n);
    let px: Vec<f64> = row_totals.iter().map(|&t| t as f64 / n).collect();
    let py: Vec<f64> = col_totals.iter().map(|&t| t as f64 / n).collect();
    let phi2 = |rho: f64| phi_squared(rho, &x_edges, &y_edges, &px, &py);

    let chi2_max = n * phi2(1.0);
    if chi2 >= chi2_max || chi2_max <= pedestal {
        return Ok(Association::new(1.0));
    }
    // Solve n·φ²(ρ) = (χ² − ped)·χ²_max / (χ²_max − ped).
    let target = (chi2 - pedestal) * chi2_max / (chi2_max - pedestal) / n;
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    if phi2(lo) > target {
        return Err(Error::Estimation(
            "phi_k root is not bracketed on [0, 1]".into(),
        ));
    }
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= RHO_TOLERANCE {
            break;
        }
        if phi2(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let rho = 0.5 * (lo + hi);
    if !rho.is_finite() {
        return Err(Error::Estimation("phi_k root-find did not converge".into()));
    }
    Ok(Association::new(rho.clamp(0.0, 1.0)))
}

fn check_pair(x: &[f64], len: usize, n_bins: usize) -> Result<()> {
    if x.len() != len {
        return Err(Error::Input(format!(
            "length mismatch: {} vs {len}",
            x.len()
        )));
    }
    if n_bins < 2 {
        return Err(Error::Parameter(format!(
            "need at least 2 bins, got {n_bins}"
        )));
    }
    ensure_finite(x, "series")
}

/// Φ_k between two interval variables, each cut into `n_bins` quantile bins.
pub fn phi_k(x: &[f64], y: &[f64], n_bins: usize) -> Result<Association> {
    check_pair(x, y.len(), n_bins)?;
    ensure_finite(y, "series")?;
    let table = ContingencyTable::from_codes(&quantile_bins(x, n_bins), &quantile_bins(y, n_bins))?;
    phi_k_from_table(&table)
}

/// Φ_k between an interval variable and a categorical one (e.g. class labels).
pub fn phi_k_categorical(x: &[f64], categories: &[usize], n_bins: usize) -> Result<Association> {
    check_pair(x, categories.len(), n_bins)?;
    let table = ContingencyTable::from_codes(&quantile_bins(x, n_bins), categories)?;
    phi_k_from_table(&table)
}
