//! Feature association analysis: Kendall τ-b, Φ_k and redundant-feature pruning.

pub mod bivariate_normal;
mod kendall;
mod phik;
mod prune;

use serde::{Deserialize, Serialize};

pub use kendall::kendall_tau;
pub use phik::{phi_k, phi_k_categorical, phi_k_from_table, quantile_bins, ContingencyTable};
pub use prune::{
    correlation_report, prune_features, CorrelationReport, DropReason, DroppedFeature, PruneConfig,
    DEFAULT_TAU_THRESHOLD, PHIK_ONE_TOLERANCE,
};

/// A correlation value together with a flag for undefined cases (constant input),
/// which are reported as 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Association {
    pub value: f64,
    pub degenerate: bool,
}

impl Association {
    pub fn new(value: f64) -> Self {
        Self {
            value,
            degenerate: false,
        }
    }

    pub fn degenerate() -> Self {
        Self {
            value: 0.0,
            degenerate: true,
        }
    }
}
