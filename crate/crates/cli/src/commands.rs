use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use dsrr_core::classifiers::{
    Matrix, ModelFile, ModelKind, ModelSpec, MODEL_FORMAT, MODEL_VERSION,
};
use dsrr_core::correlation::{prune_features, CorrelationReport, PruneConfig};
use dsrr_core::dataset::{
    load_flow_csvs, synth_generate, transform_table, write_flow_csv, FeatureSchema, FeatureTable,
    LabelNormalizer, Regime, SynthConfig, DEFAULT_TRAIN_FRACTION,
};
use dsrr_core::evaluation::{confusion, metrics, MetricsReport};
use dsrr_core::pipeline::{
    apply_dsrr, fit_and_evaluate, run_pipeline, split_rows, PipelineConfig, PipelineOutcome,
};
use dsrr_core::rescaled_range::{DsrrConfig, EdgePolicy, PartialBlock, TransformMode};
use serde_json::json;

use crate::config::ConfigFile;
use crate::{
    Cli, CliError, Command, CorrelateArgs, DsrrArgs, EvaluateArgs, InputArgs, ModelArgs,
    PipelineArgs, PruneArgs, RowSet, SynthArgs, TrainArgs, TransformArgs,
};

type Result<T> = std::result::Result<T, CliError>;

pub fn run(cli: Cli) -> Result<()> {
    let cfg = match &cli.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    match cli.command {
        Command::Transform(args) => transform(&cfg, args),
        Command::Correlate(args) => correlate(&cfg, args),
        Command::Train(args) => train(&cfg, args),
        Command::Evaluate(args) => evaluate(&cfg, args),
        Command::Pipeline(args) => pipeline(&cfg, args),
        Command::Synth(args) => synth(args),
    }
}

// ---- settings -------------------------------------------------------------

fn schema(cfg: &ConfigFile, flag: Option<String>) -> Result<FeatureSchema> {
    match cfg.pick(flag, "schema")?.as_deref() {
        None | Some("auto") => Ok(FeatureSchema::auto(dsrr_core::dataset::ISCX_LABEL, None)),
        Some("iscx") => Ok(FeatureSchema::iscx()),
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Data(format!("schema {path}: {e}")))?;
            Ok(FeatureSchema::parse(&text)?)
        }
    }
}

fn has_duration_tag(name: &str, seconds: u32) -> bool {
    let tag = format!("{seconds}s");
    let name = name.to_lowercase();
    name.match_indices(&tag)
        .any(|(i, _)| !name[..i].ends_with(|c: char| c.is_ascii_digit()))
}

/// Expands directories to their `*.csv` files (sorted) and applies the
/// duration filter.
fn input_files(inputs: &[PathBuf], duration: Option<u32>) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for input in inputs {
        if input.is_dir() {
            let mut found: Vec<PathBuf> = fs::read_dir(input)?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| {
                    p.is_file() && p.extension().is_some_and(|x| x.eq_ignore_ascii_case("csv"))
                })
                .collect();
            found.sort();
            files.extend(found);
        } else if input.is_file() {
            files.push(input.clone());
        } else {
            return Err(CliError::Data(format!(
                "{}: no such file or directory",
                input.display()
            )));
        }
    }
    if let Some(seconds) = duration {
        files.retain(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| has_duration_tag(n, seconds))
        });
    }
    if files.is_empty() {
        return Err(CliError::Data("no input CSV files selected".into()));
    }
    Ok(files)
}

fn load(cfg: &ConfigFile, args: InputArgs) -> Result<FeatureTable> {
    let schema = schema(cfg, args.schema)?;
    let duration = cfg.pick(args.duration, "duration")?;
    let files = input_files(&args.input, duration)?;
    let (table, report) = load_flow_csvs(&files, &schema, &LabelNormalizer::default())?;
    let counts = table.class_counts();
    let classes: Vec<String> = table
        .classes()
        .iter()
        .zip(&counts)
        .map(|(c, n)| format!("{c} {n}"))
        .collect();
    println!(
        "loaded {} rows × {} features from {} file(s); dropped {} of {} rows; classes: {}",
        table.n_rows(),
        table.n_features(),
        files.len(),
        report.rows_dropped,
        report.rows_read,
        classes.join(", ")
    );
    Ok(table)
}

fn dsrr_config(cfg: &ConfigFile, args: &DsrrArgs) -> Result<DsrrConfig> {
    let defaults = DsrrConfig::default();
    let config = DsrrConfig {
        window: cfg.pick(args.window, "window")?.unwrap_or(defaults.window),
        step: cfg.pick(args.step, "step")?.unwrap_or(defaults.step),
        edge_policy: cfg
            .pick::<EdgePolicy>(args.edge, "edge")?
            .unwrap_or(defaults.edge_policy),
        mode: cfg
            .pick::<TransformMode>(args.mode, "mode")?
            .unwrap_or(defaults.mode),
    };
    config.validate()?;
    Ok(config)
}

fn prune_config(cfg: &ConfigFile, args: &PruneArgs) -> Result<PruneConfig> {
    let defaults = PruneConfig::default();
    let config = PruneConfig {
        drop_phik_one: !cfg.switch(args.keep_phik_one, "keep-phik-one")?,
        tau_threshold: cfg
            .pick(args.tau_threshold, "tau-threshold")?
            .or(defaults.tau_threshold),
        n_bins: cfg.pick(args.bins, "bins")?.unwrap_or(defaults.n_bins),
    };
    if config.n_bins < 2 {
        return Err(CliError::Usage("--bins must be at least 2".into()));
    }
    if config
        .tau_threshold
        .is_some_and(|t| !(0.0..=1.0).contains(&t))
    {
        return Err(CliError::Usage("--tau-threshold must lie in [0, 1]".into()));
    }
    Ok(config)
}

struct ModelSettings {
    spec: ModelSpec,
    seed: u64,
    train_fraction: f64,
    transform_after_split: bool,
    prune: bool,
}

fn model_settings(cfg: &ConfigFile, args: &ModelArgs) -> Result<ModelSettings> {
    let kind = cfg
        .pick::<ModelKind>(args.model, "model")?
        .unwrap_or(ModelKind::Rf);
    let seed = cfg.pick(args.seed, "seed")?.unwrap_or(0);
    let defaults = ModelSpec::new(kind);
    let spec = ModelSpec {
        k: cfg.pick(args.k, "k")?.unwrap_or(defaults.k),
        n_trees: cfg.pick(args.trees, "trees")?.unwrap_or(defaults.n_trees),
        max_depth: cfg
            .pick(args.max_depth, "max-depth")?
            .or(defaults.max_depth),
        min_leaf: cfg
            .pick(args.min_leaf, "min-leaf")?
            .unwrap_or(defaults.min_leaf),
        ..defaults.with_seed(seed)
    };
    let train_fraction = cfg
        .pick(args.train_fraction, "train-fraction")?
        .unwrap_or(DEFAULT_TRAIN_FRACTION);
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(CliError::Usage(
            "--train-fraction must lie strictly between 0 and 1".into(),
        ));
    }
    Ok(ModelSettings {
        spec,
        seed,
        train_fraction,
        transform_after_split: cfg.switch(args.transform_after_split, "transform-after-split")?,
        prune: !cfg.switch(args.no_prune, "no-prune")?,
    })
}

// ---- output helpers -------------------------------------------------------

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    let file =
        File::create(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    Ok(BufWriter::new(file))
}

fn write_json<T: serde::Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut out = create(path)?;
    serde_json::to_writer_pretty(&mut out, value).map_err(|e| CliError::Internal(e.to_string()))?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

fn report_partials(partials: &[PartialBlock]) {
    for p in partials {
        let action = if p.dropped {
            "zero-filled"
        } else {
            "transformed with a shortened step"
        };
        println!(
            "partial block: rows {}..{} ({} samples) {action}",
            p.start,
            p.start + p.len,
            p.len
        );
    }
}

fn describe_dropped(report: &CorrelationReport) {
    if report.dropped.is_empty() {
        println!("no features dropped");
    }
    for d in &report.dropped {
        let reason = serde_json::to_value(d.reason).unwrap_or_default();
        let reason = reason.as_str().unwrap_or("");
        match (&d.partner, d.value) {
            (Some(partner), Some(v)) => {
                println!("dropped {} ({reason} with {partner}: {v:.4})", d.feature)
            }
            _ => println!("dropped {} ({reason})", d.feature),
        }
    }
}

fn fmt_opt(v: Option<usize>) -> String {
    v.map_or_else(|| "-".to_string(), |v| v.to_string())
}

fn print_metrics_table(rows: &[(String, Option<usize>, Option<usize>, &MetricsReport)]) {
    let width = rows.iter().map(|r| r.0.len()).max().unwrap_or(6).max(6);
    println!(
        "{:<width$}  {:>4}  {:>4}  {:>6}  {:>6}  {:>6}  {:>6}",
        "method", "w", "a", "Pr", "Rc", "F1", "Acc"
    );
    for (method, w, a, m) in rows {
        println!(
            "{method:<width$}  {:>4}  {:>4}  {:>6.4}  {:>6.4}  {:>6.4}  {:>6.4}",
            fmt_opt(*w),
            fmt_opt(*a),
            m.precision,
            m.recall,
            m.f1,
            m.accuracy
        );
    }
}

fn matrix_csv(path: &Path, names: &[String], matrix: &[Vec<f64>]) -> Result<()> {
    let mut out = create(path)?;
    writeln!(out, "feature,{}", names.join(","))?;
    for (name, row) in names.iter().zip(matrix) {
        let cells: Vec<String> = row.iter().map(f64::to_string).collect();
        writeln!(out, "{name},{}", cells.join(","))?;
    }
    out.flush()?;
    Ok(())
}

// ---- commands -------------------------------------------------------------

fn transform(cfg: &ConfigFile, args: TransformArgs) -> Result<()> {
    let dsrr = dsrr_config(cfg, &args.dsrr)?;
    let table = load(cfg, args.input)?;
    let (transformed, partial) = transform_table(&table, &dsrr)?;
    let comment = format!("dsrr: w={},a={},mode={}", dsrr.window, dsrr.step, dsrr.mode);
    let mut out = create(&args.out)?;
    write_flow_csv(&transformed, &mut out, Some(&comment))?;
    out.flush()?;
    report_partials(partial.as_slice());
    println!(
        "wrote {} rows to {}",
        transformed.n_rows(),
        args.out.display()
    );
    Ok(())
}

fn correlate(cfg: &ConfigFile, args: CorrelateArgs) -> Result<()> {
    let prune = prune_config(cfg, &args.prune)?;
    let dsrr = args
        .transform
        .then(|| dsrr_config(cfg, &args.dsrr))
        .transpose()?;
    let mut table = load(cfg, args.input)?;
    if let Some(dsrr) = dsrr {
        let (t, partial) = transform_table(&table, &dsrr)?;
        report_partials(partial.as_slice());
        table = t;
    }
    let (_, report) = prune_features(&table, &prune)?;
    fs::create_dir_all(&args.out)?;
    write_json(&args.out.join("correlation.json"), &report)?;
    matrix_csv(&args.out.join("phi_k.csv"), &report.features, &report.phi_k)?;
    matrix_csv(
        &args.out.join("kendall_tau.csv"),
        &report.features,
        &report.kendall_tau,
    )?;
    describe_dropped(&report);
    println!(
        "kept {} of {} features; wrote {}",
        report.kept.len(),
        report.features.len(),
        args.out.display()
    );
    Ok(())
}

fn train(cfg: &ConfigFile, args: TrainArgs) -> Result<()> {
    let settings = model_settings(cfg, &args.model)?;
    let dsrr = (!args.raw)
        .then(|| dsrr_config(cfg, &args.dsrr))
        .transpose()?;
    let prune = settings
        .prune
        .then(|| prune_config(cfg, &args.prune))
        .transpose()?;
    let table = load(cfg, args.input)?;
    let (train_rows, test_rows) = split_rows(&table, settings.train_fraction, settings.seed)?;

    let mut features = table;
    if let Some(dsrr) = &dsrr {
        let (t, partials) = apply_dsrr(
            &features,
            dsrr,
            &train_rows,
            &test_rows,
            settings.transform_after_split,
        )?;
        report_partials(&partials);
        features = t;
    }
    if let Some(prune) = &prune {
        let (kept, report) = prune_features(&features.select_rows(&train_rows), prune)?;
        describe_dropped(&report);
        features = features.select_features(&kept);
    }
    let (model, report) = fit_and_evaluate(&features, &train_rows, &test_rows, &settings.spec)?;
    let file = ModelFile {
        format: MODEL_FORMAT.to_string(),
        version: MODEL_VERSION,
        feature_names: features.feature_names().to_vec(),
        classes: features.classes().to_vec(),
        dsrr,
        transform_after_split: settings.transform_after_split,
        train_fraction: settings.train_fraction,
        split_seed: settings.seed,
        spec: settings.spec,
        model,
    };
    file.save(&args.out)?;
    println!(
        "trained {} on {} rows ({} features); held-out rows: {}",
        settings.spec.kind,
        train_rows.len(),
        file.feature_names.len(),
        test_rows.len()
    );
    print_metrics_table(&[(
        settings.spec.kind.to_string(),
        dsrr.map(|d| d.window),
        dsrr.map(|d| d.step),
        &report,
    )]);
    println!("wrote {}", args.out.display());
    Ok(())
}

fn evaluate(cfg: &ConfigFile, args: EvaluateArgs) -> Result<()> {
    let file = ModelFile::load(&args.model_file)?;
    let table = load(cfg, args.input)?;
    let needs_split =
        args.rows == RowSet::Test || (file.dsrr.is_some() && file.transform_after_split);
    let (train_rows, test_rows) = if needs_split {
        split_rows(&table, file.train_fraction, file.split_seed)?
    } else {
        (Vec::new(), Vec::new())
    };

    let mut features = table;
    if let Some(dsrr) = &file.dsrr {
        let (t, partials) = apply_dsrr(
            &features,
            dsrr,
            &train_rows,
            &test_rows,
            file.transform_after_split,
        )?;
        report_partials(&partials);
        features = t;
    }
    let features = features.select_features_by_name(&file.feature_names)?;
    let features = match args.rows {
        RowSet::All => features,
        RowSet::Test => features.select_rows(&test_rows),
    };

    let predicted = file.model.predict(&Matrix::from(&features))?;
    let truth: Vec<&str> = (0..features.n_rows())
        .map(|i| features.label_of(i))
        .collect();
    let predicted: Vec<&str> = predicted
        .iter()
        .map(|&c| file.classes[c].as_str())
        .collect();
    let report = metrics(&confusion(&truth, &predicted)?);

    println!(
        "evaluated {} rows with {}",
        features.n_rows(),
        args.model_file.display()
    );
    print_metrics_table(&[(
        file.spec.kind.to_string(),
        file.dsrr.map(|d| d.window),
        file.dsrr.map(|d| d.step),
        &report,
    )]);
    if let Some(out) = &args.out {
        write_json(out, &report)?;
        println!("wrote {}", out.display());
    }
    Ok(())
}

fn pipeline_json(config: &PipelineConfig, outcome: &PipelineOutcome) -> serde_json::Value {
    json!({
        "config": {
            "dsrr": config.dsrr,
            "prune": config.prune,
            "model": config.model,
            "train_fraction": config.train_fraction,
            "seed": config.seed,
            "baseline": config.baseline,
            "transform_after_split": config.transform_after_split,
        },
        "outcome": outcome,
    })
}

fn pipeline(cfg: &ConfigFile, args: PipelineArgs) -> Result<()> {
    let settings = model_settings(cfg, &args.model)?;
    let config = PipelineConfig {
        dsrr: dsrr_config(cfg, &args.dsrr)?,
        prune: settings
            .prune
            .then(|| prune_config(cfg, &args.prune))
            .transpose()?,
        model: settings.spec,
        train_fraction: settings.train_fraction,
        seed: settings.seed,
        baseline: cfg.switch(args.baseline, "baseline")?,
        transform_after_split: settings.transform_after_split,
    };
    let table = load(cfg, args.input)?;
    let outcome = run_pipeline(&table, &config)?;

    println!(
        "split: {} train rows, {} test rows",
        outcome.n_train, outcome.n_test
    );
    report_partials(&outcome.partial_blocks);
    if let Some(report) = &outcome.correlation {
        describe_dropped(report);
    }
    let rows: Vec<_> = outcome
        .results
        .iter()
        .map(|r| (r.method.clone(), r.window, r.step, &r.metrics))
        .collect();
    print_metrics_table(&rows);
    if let [raw, dsrr] = outcome.results.as_slice() {
        println!(
            "DSRR gain: accuracy {:+.4}, precision {:+.4}",
            dsrr.metrics.accuracy - raw.metrics.accuracy,
            dsrr.metrics.precision - raw.metrics.precision
        );
    }

    if let Some(dir) = &args.out {
        fs::create_dir_all(dir)?;
        write_json(&dir.join("metrics.json"), &pipeline_json(&config, &outcome))?;
        let mut csv = create(&dir.join("metrics.csv"))?;
        writeln!(csv, "{}", MetricsReport::CSV_HEADER)?;
        for r in &outcome.results {
            writeln!(csv, "{}", r.csv_row())?;
        }
        csv.flush()?;
        println!("wrote {}", dir.display());
    }
    Ok(())
}

fn synth(args: SynthArgs) -> Result<()> {
    let config = SynthConfig {
        n_blocks: args.blocks,
        block_len: args.block_len,
        n_features: args.features,
        burst_len: args.burst_len,
        regimes: [
            Regime {
                level: 0.0,
                variance: args.variance,
                burst: 0.0,
            },
            Regime {
                level: 0.0,
                variance: args.variance,
                burst: args.burst,
            },
        ],
        seed: args.seed,
    };
    let table = synth_generate(&config)?;
    let comment = format!(
        "synth: blocks={},block_len={},burst={},burst_len={},variance={},seed={}",
        config.n_blocks, config.block_len, args.burst, config.burst_len, args.variance, config.seed
    );
    let mut out = create(&args.out)?;
    write_flow_csv(&table, &mut out, Some(&comment))?;
    out.flush()?;
    println!(
        "wrote {} rows × {} features to {}",
        table.n_rows(),
        table.n_features(),
        args.out.display()
    );
    Ok(())
}
