//! End-to-end orchestration: order → DSRR → split → prune → fit → evaluate.

use serde::Serialize;

use crate::classifiers::{Classifier, Matrix, ModelKind, ModelSpec};
use crate::correlation::{prune_features, CorrelationReport, PruneConfig};
use crate::dataset::{
    stratified_split_indices, transform_parts, transform_table, FeatureTable,
    DEFAULT_TRAIN_FRACTION,
};
use crate::error::{Error, Result};
use crate::evaluation::{confusion, metrics, MetricsReport};
use crate::rescaled_range::{DsrrConfig, PartialBlock};

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub dsrr: DsrrConfig,
    /// `None` skips correlation pruning.
    pub prune: Option<PruneConfig>,
    pub model: ModelSpec,
    pub train_fraction: f64,
    /// Seeds the split; the model carries its own seed in [`ModelSpec`].
    pub seed: u64,
    /// Also fit the model on the untransformed features.
    pub baseline: bool,
    /// Transform the train and test rows as two separate series instead of
    /// transforming the whole series before splitting.
    pub transform_after_split: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            dsrr: DsrrConfig::default(),
            prune: Some(PruneConfig::default()),
            model: ModelSpec::new(ModelKind::Rf),
            train_fraction: DEFAULT_TRAIN_FRACTION,
            seed: 0,
            baseline: false,
            transform_after_split: false,
        }
    }
}

/// Metrics of one model/feature-set combination.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodResult {
    pub method: String,
    pub window: Option<usize>,
    pub step: Option<usize>,
    pub features: Vec<String>,
    pub metrics: MetricsReport,
}

impl MethodResult {
    pub fn csv_row(&self) -> String {
        self.metrics.csv_row(&self.method, self.window, self.step)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PipelineOutcome {
    pub n_rows: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub partial_blocks: Vec<PartialBlock>,
    /// Raw baseline first (if requested), then the DSRR result.
    pub results: Vec<MethodResult>,
    pub correlation: Option<CorrelationReport>,
}

/// Stratified train/test row indices.
pub fn split_rows(
    table: &FeatureTable,
    train_fraction: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    stratified_split_indices(table.labels(), table.classes().len(), train_fraction, seed)
}

/// DSRR over the whole series, or over the train and test rows separately.
pub fn apply_dsrr(
    table: &FeatureTable,
    config: &DsrrConfig,
    train: &[usize],
    test: &[usize],
    after_split: bool,
) -> Result<(FeatureTable, Vec<PartialBlock>)> {
    if after_split {
        let (t, partials) = transform_parts(table, &[train, test], config)?;
        Ok((t, partials.into_iter().flatten().collect()))
    } else {
        let (t, partial) = transform_table(table, config)?;
        Ok((t, partial.into_iter().collect()))
    }
}

/// Fits on the `train` rows and scores on the `test` rows.
pub fn fit_and_evaluate(
    table: &FeatureTable,
    train: &[usize],
    test: &[usize],
    spec: &ModelSpec,
) -> Result<(Classifier, MetricsReport)> {
    if table.n_features() == 0 {
        return Err(Error::Data("no features left to train on".into()));
    }
    let train_table = table.select_rows(train);
    let test_table = table.select_rows(test);
    let model = spec.fit(
        &Matrix::from(&train_table),
        train_table.labels(),
        table.classes().len(),
    )?;
    let report = evaluate(&model, &test_table)?;
    Ok((model, report))
}

/// Scores a fitted model on every row of `table`.
pub fn evaluate(model: &Classifier, table: &FeatureTable) -> Result<MetricsReport> {
    let predicted = model.predict(&Matrix::from(table))?;
    let classes = table.classes();
    let truth: Vec<&str> = table
        .labels()
        .iter()
        .map(|&l| classes[l].as_str())
        .collect();
    let predicted: Vec<&str> = predicted.iter().map(|&l| classes[l].as_str()).collect();
    Ok(metrics(&confusion(&truth, &predicted)?))
}

pub fn run_pipeline(table: &FeatureTable, config: &PipelineConfig) -> Result<PipelineOutcome> {
    let (train, test) = split_rows(table, config.train_fraction, config.seed)?;
    let model = config.model.kind.to_string();
    let mut results = Vec::new();

    if config.baseline {
        let (_, report) = fit_and_evaluate(table, &train, &test, &config.model)?;
        results.push(MethodResult {
            method: model.clone(),
            window: None,
            step: None,
            features: table.feature_names().to_vec(),
            metrics: report,
        });
    }

    let (transformed, partial_blocks) = apply_dsrr(
        table,
        &config.dsrr,
        &train,
        &test,
        config.transform_after_split,
    )?;
    let (features, correlation, method) = match &config.prune {
        Some(prune) => {
            let (kept, report) = prune_features(&transformed.select_rows(&train), prune)?;
            (
                transformed.select_features(&kept),
                Some(report),
                format!("{model}+dsrr+prune"),
            )
        }
        None => (transformed, None, format!("{model}+dsrr")),
    };
    let (_, report) = fit_and_evaluate(&features, &train, &test, &config.model)?;
    results.push(MethodResult {
        method,
        window: Some(config.dsrr.window),
        step: Some(config.dsrr.step),
        features: features.feature_names().to_vec(),
        metrics: report,
    });

    Ok(PipelineOutcome {
        n_rows: table.n_rows(),
        n_train: train.len(),
        n_test: test.len(),
        partial_blocks,
        results,
        correlation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{synth_generate, SynthConfig};

    #[test]
    fn baseline_then_dsrr_rows() {
        let table = synth_generate(&SynthConfig {
            n_blocks: 8,
            block_len: 20,
            ..SynthConfig::default()
        })
        .unwrap();
        let config = PipelineConfig {
            dsrr: DsrrConfig::new(20, 1).unwrap(),
            model: ModelSpec {
                n_trees: 10,
                ..ModelSpec::new(ModelKind::Rf)
            },
            baseline: true,
            ..PipelineConfig::default()
        };
        let out = run_pipeline(&table, &config).unwrap();
        assert_eq!(out.results.len(), 2);
        assert_eq!(out.results[0].method, "rf");
        assert_eq!(out.results[1].method, "rf+dsrr+prune");
        assert_eq!(out.n_train + out.n_test, 160);
        assert!(out.correlation.is_some());
    }

    #[test]
    fn after_split_mode_runs() {
        let table = synth_generate(&SynthConfig {
            n_blocks: 6,
            block_len: 10,
            ..SynthConfig::default()
        })
        .unwrap();
        let config = PipelineConfig {
            dsrr: DsrrConfig::new(10, 1).unwrap(),
            prune: None,
            model: ModelSpec::new(ModelKind::Knn),
            transform_after_split: true,
            ..PipelineConfig::default()
        };
        let out = run_pipeline(&table, &config).unwrap();
        assert_eq!(out.results.len(), 1);
        assert_eq!(out.results[0].method, "knn+dsrr");
        // 42 train rows and 18 test rows leave partial blocks in both parts
        assert_eq!(out.partial_blocks.len(), 2);
    }
}
