//! Rescaled-range (R/S) analysis and the sliding rescaled-range derivative transform.
//!
//! For the first `n` samples of a series with mean `m`, the cumulative
//! deviations are `Z_t = Σ_{i≤t} (x_i − m)`, the range is
//! `R(n) = max Z_t − min Z_t` and `S(n)` is the population standard deviation.
//! A prefix with `S(n) = 0` (constant, or a single sample) has R/S defined as 0.
//!
//! The DSRR transform cuts a feature series into consecutive blocks of `w`
//! samples, evaluates R/S on the growing prefixes `a, 2a, …` of every block and
//! replaces the feature by the forward first difference of that curve.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};

/// How the trailing block is handled when the series length is not a multiple of `w`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgePolicy {
    /// Process the leftover samples as a smaller block.
    #[default]
    Shrink,
    /// Emit zeros for the leftover samples and flag them.
    Drop,
}

/// Whether transformed columns replace the originals or are appended next to them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransformMode {
    #[default]
    Replace,
    Augment,
}

macro_rules! impl_lowercase_enum {
    ($ty:ty, $($variant:ident => $name:literal),+) => {
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                match self {
                    $(Self::$variant => f.write_str($name),)+
                }
            }
        }

        impl FromStr for $ty {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                match s.trim().to_ascii_lowercase().as_str() {
                    $($name => Ok(Self::$variant),)+
                    other => Err(Error::Parameter(format!(
                        concat!("unknown ", stringify!($ty), " `{}`"),
                        other
                    ))),
                }
            }
        }
    };
}

impl_lowercase_enum!(EdgePolicy, Shrink => "shrink", Drop => "drop");
impl_lowercase_enum!(TransformMode, Replace => "replace", Augment => "augment");

/// Parameters of the block-wise transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DsrrConfig {
    /// Block size `w` in samples.
    pub window: usize,
    /// Prefix step `a` in samples.
    pub step: usize,
    pub edge_policy: EdgePolicy,
    pub mode: TransformMode,
}

impl Default for DsrrConfig {
    fn default() -> Self {
        Self {
            window: 40,
            step: 1,
            edge_policy: EdgePolicy::Shrink,
            mode: TransformMode::Replace,
        }
    }
}

impl DsrrConfig {
    pub fn new(window: usize, step: usize) -> Result<Self> {
        let config = Self {
            window,
            step,
            ..Self::default()
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.window < 2 {
            return Err(Error::Parameter(format!(
                "block size must be at least 2, got {}",
                self.window
            )));
        }
        if self.step == 0 || self.step > self.window {
            return Err(Error::Parameter(format!(
                "prefix step must lie in 1..={}, got {}",
                self.window, self.step
            )));
        }
        Ok(())
    }
}

/// Rescaled ranges evaluated over growing prefixes of a block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RsCurve {
    pub prefix_lengths: Vec<usize>,
    pub ratios: Vec<f64>,
}

impl RsCurve {
    pub fn len(&self) -> usize {
        self.ratios.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ratios.is_empty()
    }
}

/// Least-squares fit of `log(R/S) = log C + H log n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HurstFit {
    pub h: f64,
    pub c: f64,
    pub r_squared: f64,
    pub points_used: usize,
    /// Prefix lengths whose R/S was zero and therefore left out of the fit.
    pub points_excluded: usize,
}

/// Location of the trailing partial block, if any.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartialBlock {
    pub start: usize,
    pub len: usize,
    /// `true` when the samples were zero-filled under [`EdgePolicy::Drop`].
    pub dropped: bool,
}

/// Output of [`dsrr_transform`]: one value per input sample.
#[derive(Debug, Clone, PartialEq)]
pub struct DsrrSeries {
    pub values: Vec<f64>,
    pub partial_block: Option<PartialBlock>,
}

/// R/S of the whole slice. No validation; callers guarantee finite input.
pub(crate) fn rs_of(x: &[f64]) -> f64 {
    let n = x.len();
    if n < 2 {
        return 0.0;
    }
    let (lo, hi) = x
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    // An exactly constant prefix can still produce a tiny S from the rounded mean.
    if lo == hi {
        return 0.0;
    }
    let mean = x.iter().sum::<f64>() / n as f64;
    let mut cumulative = 0.0;
    let mut z_max = f64::NEG_INFINITY;
    let mut z_min = f64::INFINITY;
    let mut sum_sq = 0.0;
    for &v in x {
        let dev = v - mean;
        cumulative += dev;
        z_max = z_max.max(cumulative);
        z_min = z_min.min(cumulative);
        sum_sq += dev * dev;
    }
    let s = (sum_sq / n as f64).sqrt();
    if s == 0.0 {
        0.0
    } else {
        (z_max - z_min) / s
    }
}

/// R(n)/S(n) over the first `n` samples of `series`.
pub fn rescaled_range(series: &[f64], n: usize) -> Result<f64> {
    if n == 0 || n > series.len() {
        return Err(Error::Parameter(format!(
            "prefix length {n} outside 1..={}",
            series.len()
        )));
    }
    ensure_finite(&series[..n], "series")?;
    Ok(rs_of(&series[..n]))
}

fn curve_unchecked(block: &[f64], step: usize) -> RsCurve {
    let len = block.len();
    let mut prefix_lengths: Vec<usize> = (1..=len / step).map(|k| k * step).collect();
    if !len.is_multiple_of(step) {
        prefix_lengths.push(len);
    }
    let ratios = prefix_lengths.iter().map(|&n| rs_of(&block[..n])).collect();
    RsCurve {
        prefix_lengths,
        ratios,
    }
}

/// R/S at prefix lengths `a, 2a, …` and, when `a` does not divide the block
/// length, once more over the entire block.
pub fn rs_curve(block: &[f64], step: usize) -> Result<RsCurve> {
    if block.is_empty() {
        return Err(Error::Parameter(
            "block must contain at least one sample".into(),
        ));
    }
    if step == 0 || step > block.len() {
        return Err(Error::Parameter(format!(
            "prefix step {step} outside 1..={}",
            block.len()
        )));
    }
    ensure_finite(block, "block")?;
    Ok(curve_unchecked(block, step))
}

/// Forward first difference with the last value replicated, so the output is
/// as long as the input. A single value differentiates to `[0]`.
pub fn differentiate(ratios: &[f64]) -> Vec<f64> {
    match ratios.len() {
        0 => Vec::new(),
        1 => vec![0.0],
        m => {
            let mut out: Vec<f64> = ratios.windows(2).map(|w| w[1] - w[0]).collect();
            out.push(out[m - 2]);
            out
        }
    }
}

fn transform_block(block: &[f64], step: usize, out: &mut [f64]) {
    let step = step.min(block.len());
    let curve = curve_unchecked(block, step);
    let derivative = differentiate(&curve.ratios);
    let mut start = 0;
    for (&end, &d) in curve.prefix_lengths.iter().zip(&derivative) {
        out[start..end].fill(d);
        start = end;
    }
}

/// Block-wise DSRR transform of one feature series.
///
/// The output always has the input's length. With `a > 1`, each derivative
/// value is repeated over the `a` samples that extended the prefix.
pub fn dsrr_transform(feature: &[f64], config: &DsrrConfig) -> Result<DsrrSeries> {
    config.validate()?;
    if feature.is_empty() {
        return Err(Error::Parameter("feature series is empty".into()));
    }
    ensure_finite(feature, "feature")?;

    let mut values = vec![0.0; feature.len()];
    let mut partial_block = None;
    for (index, block) in feature.chunks(config.window).enumerate() {
        let start = index * config.window;
        let out = &mut values[start..start + block.len()];
        if block.len() < config.window {
            let dropped = config.edge_policy == EdgePolicy::Drop;
            partial_block = Some(PartialBlock {
                start,
                len: block.len(),
                dropped,
            });
            if dropped {
                continue;
            }
        }
        transform_block(block, config.step, out);
    }
    Ok(DsrrSeries {
        values,
        partial_block,
    })
}

/// Mean R/S over the non-overlapping windows of length `n`; windows with S = 0
/// do not contribute. Returns 0 when no window does.
fn mean_rs(series: &[f64], n: usize) -> f64 {
    let (sum, count) = series
        .chunks_exact(n)
        .map(rs_of)
        .filter(|&rs| rs > 0.0)
        .fold((0.0, 0usize), |(s, c), rs| (s + rs, c + 1));
    if count == 0 {
        0.0
    } else {
        sum / count as f64
    }
}

/// Hurst exponent from the log-log regression of R/S on the window length.
///
/// At every length `n`, R/S is averaged over the `⌊len/n⌋` non-overlapping
/// windows of the series. Lengths whose average R/S is zero are excluded and
/// counted in [`HurstFit::points_excluded`].
pub fn hurst_exponent(series: &[f64], prefix_lengths: &[usize]) -> Result<HurstFit> {
    ensure_finite(series, "series")?;
    let mut lengths = prefix_lengths.to_vec();
    lengths.sort_unstable();
    lengths.dedup();
    if let Some(&bad) = lengths.iter().find(|&&n| n < 2 || n > series.len()) {
        return Err(Error::Parameter(format!(
            "prefix length {bad} outside 2..={}",
            series.len()
        )));
    }

    let mut xs = Vec::with_capacity(lengths.len());
    let mut ys = Vec::with_capacity(lengths.len());
    let mut excluded = 0;
    for &n in &lengths {
        let rs = mean_rs(series, n);
        if rs > 0.0 {
            xs.push((n as f64).ln());
            ys.push(rs.ln());
        } else {
            excluded += 1;
        }
    }
    if xs.len() < 2 {
        return Err(Error::Estimation(format!(
            "need at least 2 prefix lengths with nonzero R/S, have {}",
            xs.len()
        )));
    }

    let k = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / k;
    let mean_y = ys.iter().sum::<f64>() / k;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(&ys) {
        let (dx, dy) = (x - mean_x, y - mean_y);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    let h = sxy / sxx;
    let intercept = mean_y - h * mean_x;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        ((sxy * sxy) / (sxx * syy)).clamp(0.0, 1.0)
    };
    Ok(HurstFit {
        h,
        c: intercept.exp(),
        r_squared,
        points_used: xs.len(),
        points_excluded: excluded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn constant_prefix_is_zero() {
        assert_eq!(rescaled_range(&[5.0, 5.0, 5.0], 3).unwrap(), 0.0);
        assert_eq!(rescaled_range(&[0.1; 7], 7).unwrap(), 0.0);
        assert_eq!(rescaled_range(&[3.0], 1).unwrap(), 0.0);
    }

    #[test]
    fn small_hand_values() {
        assert_relative_eq!(
            rescaled_range(&[1.0, 2.0], 2).unwrap(),
            1.0,
            epsilon = 1e-12
        );
        let expected = 2.0 / 1.25f64.sqrt();
        assert_relative_eq!(
            rescaled_range(&[1.0, 2.0, 3.0, 4.0], 4).unwrap(),
            expected,
            epsilon = 1e-12
        );
    }

    #[test]
    fn prefix_out_of_range() {
        assert!(matches!(
            rescaled_range(&[1.0, 2.0], 0),
            Err(Error::Parameter(_))
        ));
        assert!(matches!(
            rescaled_range(&[1.0, 2.0], 3),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn non_finite_rejected() {
        assert!(matches!(
            rescaled_range(&[1.0, f64::NAN], 2),
            Err(Error::Input(_))
        ));
        assert!(matches!(
            dsrr_transform(&[1.0, f64::INFINITY], &DsrrConfig::default()),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn curve_with_step_covers_whole_block() {
        let block: Vec<f64> = (0..40).map(|i| (i as f64 * 0.7).sin()).collect();
        let curve = rs_curve(&block, 10).unwrap();
        assert_eq!(curve.prefix_lengths, vec![10, 20, 30, 40]);

        let curve = rs_curve(&block[..25], 10).unwrap();
        assert_eq!(curve.prefix_lengths, vec![10, 20, 25]);
    }

    #[test]
    fn curve_rejects_bad_step() {
        assert!(rs_curve(&[1.0, 2.0], 3).is_err());
        assert!(rs_curve(&[1.0, 2.0], 0).is_err());
        assert!(rs_curve(&[], 1).is_err());
    }

    #[test]
    fn differentiate_edges() {
        assert_eq!(differentiate(&[2.5]), vec![0.0]);
        assert_eq!(differentiate(&[4.0, 4.0, 4.0]), vec![0.0, 0.0, 0.0]);
        assert_eq!(differentiate(&[0.0, 1.0, 3.0]), vec![1.0, 2.0, 2.0]);
        assert!(differentiate(&[]).is_empty());
    }

    #[test]
    fn config_validation() {
        assert!(DsrrConfig::new(1, 1).is_err());
        assert!(DsrrConfig::new(4, 0).is_err());
        assert!(DsrrConfig::new(4, 5).is_err());
        assert!(DsrrConfig::new(40, 10).is_ok());
        assert_eq!(DsrrConfig::default().step, 1);
    }

    #[test]
    fn step_broadcast_aligns_segments() {
        let feature: Vec<f64> = (0..8).map(|i| ((i * i) % 5) as f64).collect();
        let config = DsrrConfig::new(8, 3).unwrap();
        let out = dsrr_transform(&feature, &config).unwrap();
        let curve = rs_curve(&feature, 3).unwrap();
        assert_eq!(curve.prefix_lengths, vec![3, 6, 8]);
        let d = differentiate(&curve.ratios);
        assert_eq!(&out.values[0..3], &[d[0]; 3]);
        assert_eq!(&out.values[3..6], &[d[1]; 3]);
        assert_eq!(&out.values[6..8], &[d[2]; 2]);
    }

    #[test]
    fn partial_block_policies() {
        let feature = [1.0, 2.0, 3.0, 4.0, 1.0, 7.0, 2.0];
        let shrink = dsrr_transform(&feature, &DsrrConfig::new(4, 1).unwrap()).unwrap();
        assert_eq!(
            shrink.partial_block,
            Some(PartialBlock {
                start: 4,
                len: 3,
                dropped: false
            })
        );
        let tail = dsrr_transform(&feature[4..], &DsrrConfig::new(3, 1).unwrap()).unwrap();
        assert_eq!(&shrink.values[4..], &tail.values[..]);

        let config = DsrrConfig {
            edge_policy: EdgePolicy::Drop,
            ..DsrrConfig::new(4, 1).unwrap()
        };
        let dropped = dsrr_transform(&feature, &config).unwrap();
        assert_eq!(&dropped.values[4..], &[0.0, 0.0, 0.0]);
        assert!(dropped.partial_block.unwrap().dropped);
        assert_eq!(&dropped.values[..4], &shrink.values[..4]);
    }

    #[test]
    fn leftover_single_sample_maps_to_zero() {
        let out =
            dsrr_transform(&[1.0, 3.0, 2.0, 9.0, 4.0], &DsrrConfig::new(4, 2).unwrap()).unwrap();
        assert_eq!(out.values[4], 0.0);
        assert_eq!(out.values.len(), 5);
    }

    #[test]
    fn hurst_needs_two_usable_points() {
        let constant = [1.0; 64];
        assert!(matches!(
            hurst_exponent(&constant, &[8, 16]),
            Err(Error::Estimation(_))
        ));
        let ramp: Vec<f64> = (0..64).map(f64::from).collect();
        assert!(matches!(
            hurst_exponent(&ramp, &[8]),
            Err(Error::Estimation(_))
        ));
        assert!(matches!(
            hurst_exponent(&ramp, &[1, 8]),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn hurst_of_ramp_is_one() {
        let ramp: Vec<f64> = (0..64).map(f64::from).collect();
        let fit = hurst_exponent(&ramp, &[8, 16, 32, 64]).unwrap();
        assert!((fit.h - 1.0).abs() < 0.05, "h = {}", fit.h);
        assert!(fit.c > 0.0);
        assert!(fit.r_squared > 0.99);
        assert_eq!(fit.points_used, 4);
    }

    #[test]
    fn enum_parsing() {
        assert_eq!("SHRINK".parse::<EdgePolicy>().unwrap(), EdgePolicy::Shrink);
        assert_eq!(
            "augment".parse::<TransformMode>().unwrap(),
            TransformMode::Augment
        );
        assert!("bogus".parse::<EdgePolicy>().is_err());
        assert_eq!(EdgePolicy::Drop.to_string(), "drop");
    }
}
