use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{kendall_tau, phi_k, phi_k_categorical};
use crate::dataset::FeatureTable;
use crate::error::Result;

pub const DEFAULT_TAU_THRESHOLD: f64 = 0.87;
/// Φ_k values at or above `1 − PHIK_ONE_TOLERANCE` count as a perfect association.
pub const PHIK_ONE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PruneConfig {
    /// Drop one member of every pair with Φ_k = 1.
    pub drop_phik_one: bool,
    /// Drop one member of every pair with |τ| above this value.
    pub tau_threshold: Option<f64>,
    pub n_bins: usize,
}

impl Default for PruneConfig {
    fn default() -> Self {
        Self {
            drop_phik_one: true,
            tau_threshold: Some(DEFAULT_TAU_THRESHOLD),
            n_bins: 10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DropReason {
    /// The column has a single value.
    Constant,
    PhikOne,
    TauThreshold,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DroppedFeature {
    pub feature: String,
    pub index: usize,
    pub reason: DropReason,
    /// The retained member of the offending pair, if any.
    pub partner: Option<String>,
    /// The Φ_k or τ value that triggered the drop.
    pub value: Option<f64>,
}

/// Pairwise association matrices, target associations and pruning decisions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub features: Vec<String>,
    pub phi_k: Vec<Vec<f64>>,
    pub kendall_tau: Vec<Vec<f64>>,
    /// Φ_k between every feature and the class label.
    pub target_association: Vec<f64>,
    pub constant: Vec<bool>,
    pub dropped: Vec<DroppedFeature>,
    pub kept: Vec<usize>,
}

/// Computes Φ_k and τ matrices plus target associations. No pruning is applied
/// (`dropped` is empty, `kept` lists every column).
pub fn correlation_report(table: &FeatureTable, n_bins: usize) -> Result<CorrelationReport> {
    let f = table.n_features();
    let columns = table.columns();
    let constant: Vec<bool> = columns
        .iter()
        .map(|c| c.iter().all(|&v| v == c[0]))
        .collect();

    let target_association = columns
        .par_iter()
        .map(|c| phi_k_categorical(c, table.labels(), n_bins).map(|a| a.value))
        .collect::<Result<Vec<f64>>>()?;

    let pairs: Vec<(usize, usize)> = (0..f)
        .flat_map(|i| (i + 1..f).map(move |j| (i, j)))
        .collect();
    let values = pairs
        .par_iter()
        .map(|&(i, j)| -> Result<(f64, f64)> {
            if columns[i].len() < 2 {
                return Ok((0.0, 0.0));
            }
            let phi = phi_k(&columns[i], &columns[j], n_bins)?.value;
            let tau = kendall_tau(&columns[i], &columns[j])?.value;
            Ok((phi, tau))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut phi_matrix = vec![vec![0.0; f]; f];
    let mut tau_matrix = vec![vec![0.0; f]; f];
    for (i, &is_constant) in constant.iter().enumerate() {
        let diag = if is_constant { 0.0 } else { 1.0 };
        phi_matrix[i][i] = diag;
        tau_matrix[i][i] = diag;
    }
    for (&(i, j), &(phi, tau)) in pairs.iter().zip(&values) {
        phi_matrix[i][j] = phi;
        phi_matrix[j][i] = phi;
        tau_matrix[i][j] = tau;
        tau_matrix[j][i] = tau;
    }

    Ok(CorrelationReport {
        features: table.feature_names().to_vec(),
        phi_k: phi_matrix,
        kendall_tau: tau_matrix,
        target_association,
        constant,
        dropped: Vec::new(),
        kept: (0..f).collect(),
    })
}

/// Of a redundant pair, the member with the lower target association goes;
/// on equal association the higher column index goes.
fn loser(report: &CorrelationReport, i: usize, j: usize) -> (usize, usize) {
    let (ai, aj) = (report.target_association[i], report.target_association[j]);
    if ai < aj {
        (i, j)
    } else {
        (j, i)
    }
}

fn sweep(
    report: &CorrelationReport,
    alive: &mut [bool],
    dropped: &mut Vec<DroppedFeature>,
    reason: DropReason,
    value: impl Fn(usize, usize) -> f64,
    violates: impl Fn(f64) -> bool,
) {
    let f = alive.len();
    for i in 0..f {
        for j in i + 1..f {
            if !alive[i] || !alive[j] {
                continue;
            }
            let v = value(i, j);
            if violates(v) {
                let (gone, stays) = loser(report, i, j);
                alive[gone] = false;
                dropped.push(DroppedFeature {
                    feature: report.features[gone].clone(),
                    index: gone,
                    reason,
                    partner: Some(report.features[stays].clone()),
                    value: Some(v),
                });
            }
        }
    }
}

/// Removes constant columns, then one member of every Φ_k = 1 pair, then one
/// member of every pair with |τ| above the threshold. Pairs are visited in
/// ascending (i, j) order and pairs with an already dropped member are skipped,
/// so no surviving pair violates either criterion.
pub fn prune_features(
    table: &FeatureTable,
    config: &PruneConfig,
) -> Result<(Vec<usize>, CorrelationReport)> {
    let mut report = correlation_report(table, config.n_bins)?;
    let f = table.n_features();
    let mut alive = vec![true; f];
    let mut dropped = Vec::new();

    for (i, alive) in alive.iter_mut().enumerate() {
        if report.constant[i] {
            *alive = false;
            dropped.push(DroppedFeature {
                feature: report.features[i].clone(),
                index: i,
                reason: DropReason::Constant,
                partner: None,
                value: None,
            });
        }
    }
    if config.drop_phik_one {
        sweep(
            &report,
            &mut alive,
            &mut dropped,
            DropReason::PhikOne,
            |i, j| report.phi_k[i][j],
            |v| v >= 1.0 - PHIK_ONE_TOLERANCE,
        );
    }
    if let Some(threshold) = config.tau_threshold {
        sweep(
            &report,
            &mut alive,
            &mut dropped,
            DropReason::TauThreshold,
            |i, j| report.kendall_tau[i][j],
            |v| v.abs() > threshold,
        );
    }

    let kept: Vec<usize> = (0..f).filter(|&i| alive[i]).collect();
    report.dropped = dropped;
    report.kept = kept.clone();
    Ok((kept, report))
}
