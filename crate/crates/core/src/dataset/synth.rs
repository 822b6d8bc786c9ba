use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::FeatureTable;
use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

/// Generation parameters of one class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Regime {
    /// Mean of the block.
    pub level: f64,
    /// Noise variance.
    pub variance: f64,
    /// Offset added to the first `burst_len` samples of every block.
    pub burst: f64,
}

/// Alternating blocks of two regimes: class 0 (`NonVPN`) then class 1 (`VPN`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_blocks: usize,
    pub block_len: usize,
    pub n_features: usize,
    /// Length of the burst segment that opens each block.
    pub burst_len: usize,
    pub regimes: [Regime; 2],
    pub seed: u64,
}

impl Default for SynthConfig {
    /// 40 blocks of 50 samples, four features, unit-variance noise and a
    /// 10σ burst over the first 5 samples of every VPN block.
    fn default() -> Self {
        Self {
            n_blocks: 40,
            block_len: 50,
            n_features: 4,
            burst_len: 5,
            regimes: [
                Regime {
                    level: 0.0,
                    variance: 1.0,
                    burst: 0.0,
                },
                Regime {
                    level: 0.0,
                    variance: 1.0,
                    burst: 10.0,
                },
            ],
            seed: 7,
        }
    }
}

pub const SYNTH_CLASSES: [&str; 2] = ["NonVPN", "VPN"];

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.block_len < 2 {
            return Err(Error::Parameter("block_len must be at least 2".into()));
        }
        if self.n_blocks == 0 || self.n_features == 0 {
            return Err(Error::Parameter(
                "need at least one block and one feature".into(),
            ));
        }
        if self.burst_len > self.block_len {
            return Err(Error::Parameter("burst_len exceeds block_len".into()));
        }
        for r in &self.regimes {
            if !(r.variance >= 0.0 && r.variance.is_finite())
                || !r.level.is_finite()
                || !r.burst.is_finite()
            {
                return Err(Error::Parameter(
                    "regime parameters must be finite, variance ≥ 0".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Generates a regime-switch table. Block `b` has class `b % 2`; each feature
/// is `level + noise`, with `burst` added over the burst segment. Timestamps are
/// the sample indices.
pub fn synth_generate(config: &SynthConfig) -> Result<FeatureTable> {
    config.validate()?;
    let n = config.n_blocks * config.block_len;
    let mut rng = rng_from_seed(config.seed);
    let mut columns = vec![Vec::with_capacity(n); config.n_features];
    let mut labels = Vec::with_capacity(n);
    for block in 0..config.n_blocks {
        let class = block % 2;
        let regime = config.regimes[class];
        let sd = regime.variance.sqrt();
        labels.extend(std::iter::repeat_n(class, config.block_len));
        for column in columns.iter_mut() {
            for t in 0..config.block_len {
                let noise: f64 = rng.sample(StandardNormal);
                let burst = if t < config.burst_len {
                    regime.burst
                } else {
                    0.0
                };
                column.push(regime.level + burst + sd * noise);
            }
        }
    }
    let names = (0..config.n_features).map(|j| format!("f{j}")).collect();
    let classes = SYNTH_CLASSES.iter().map(|s| s.to_string()).collect();
    FeatureTable::from_codes(names, columns, labels, classes)?
        .with_timestamps("timestamp", (0..n).map(|i| i as f64).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic() {
        let a = synth_generate(&SynthConfig::default()).unwrap();
        let b = synth_generate(&SynthConfig::default()).unwrap();
        assert_eq!(a, b);
        let c = synth_generate(&SynthConfig {
            seed: 8,
            ..SynthConfig::default()
        })
        .unwrap();
        assert_ne!(a.columns(), c.columns());
    }

    #[test]
    fn label_balance_follows_schedule() {
        let config = SynthConfig {
            n_blocks: 7,
            block_len: 10,
            ..SynthConfig::default()
        };
        let t = synth_generate(&config).unwrap();
        assert_eq!(t.class_counts(), vec![40, 30]);
        assert_eq!(t.n_rows(), 70);
        assert_eq!(t.labels()[9], 0);
        assert_eq!(t.labels()[10], 1);
    }

    #[test]
    fn invalid_configs() {
        assert!(synth_generate(&SynthConfig {
            block_len: 1,
            ..SynthConfig::default()
        })
        .is_err());
        let mut bad = SynthConfig::default();
        bad.regimes[0].variance = -1.0;
        assert!(synth_generate(&bad).is_err());
    }
}
