//! Acceptance suite. Runs every criterion, prints one PASS/FAIL/SKIP line per
//! criterion and exits non-zero if any criterion fails.
//!
//! Criterion 7 needs the ISCX VPN-nonVPN 60 s time-based flow data as CSV;
//! point `DSRR_ISCX_60S` at the file, or at a directory of such files.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use dsrr_core::classifiers::{
    ForestModel, ForestParams, KnnModel, Matrix, ModelKind, ModelSpec, TreeModel, TreeParams,
};
use dsrr_core::correlation::{kendall_tau, phi_k, PruneConfig};
use dsrr_core::dataset::{
    load_flow_csvs, synth_generate, FeatureSchema, LabelNormalizer, SynthConfig,
};
use dsrr_core::pipeline::{run_pipeline, PipelineConfig};
use dsrr_core::rescaled_range::{
    differentiate, dsrr_transform, hurst_exponent, rescaled_range, rs_curve, DsrrConfig, EdgePolicy,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn normals(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

/// Direct-formula R/S: every cumulative deviation is summed from scratch.
fn rs_oracle(x: &[f64]) -> f64 {
    let n = x.len();
    let mean = x.iter().sum::<f64>() / n as f64;
    let z: Vec<f64> = (1..=n)
        .map(|t| x[..t].iter().map(|v| v - mean).sum::<f64>())
        .collect();
    let r = z.iter().cloned().fold(f64::MIN, f64::max) - z.iter().cloned().fold(f64::MAX, f64::min);
    let s = (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
    if s == 0.0 || x.iter().all(|&v| v == x[0]) {
        0.0
    } else {
        r / s
    }
}

fn rel_err(got: f64, want: f64) -> f64 {
    if want == 0.0 {
        got.abs()
    } else {
        ((got - want) / want).abs()
    }
}

fn criterion_1() -> Check {
    let start = Instant::now();
    let mut r = rng(1);
    let mut worst = 0.0f64;
    let mut checked = 0;
    for _ in 0..1000 {
        let len = r.random_range(2..=64);
        let series: Vec<f64> = (0..len).map(|_| r.random_range(-1000.0..1000.0)).collect();
        for n in 1..=len {
            let got = rescaled_range(&series, n).map_err(|e| e.to_string())?;
            worst = worst.max(rel_err(got, rs_oracle(&series[..n])));
            checked += 1;
        }
    }
    let elapsed = start.elapsed();
    ensure(
        worst <= 1e-12,
        format!("max relative error {worst:e} > 1e-12"),
    )?;
    ensure(
        elapsed < Duration::from_secs(1),
        format!("took {elapsed:?}"),
    )?;
    Ok(format!(
        "{checked} prefixes of 1000 series, max rel err {worst:.2e}, {elapsed:.0?}"
    ))
}

fn criterion_2() -> Check {
    let tol = 1e-9;
    let mut r = rng(2);

    // length preservation over random configurations
    for _ in 0..500 {
        let len = r.random_range(1..200);
        let w = r.random_range(2..60);
        let a = r.random_range(1..=w);
        let edge = if r.random_bool(0.5) {
            EdgePolicy::Shrink
        } else {
            EdgePolicy::Drop
        };
        let config = DsrrConfig {
            edge_policy: edge,
            ..DsrrConfig::new(w, a).unwrap()
        };
        let x = normals(&mut r, len);
        let out = dsrr_transform(&x, &config).map_err(|e| e.to_string())?;
        ensure(
            out.values.len() == len,
            format!("length {} -> {} (w={w}, a={a})", len, out.values.len()),
        )?;
        ensure(
            out.values.iter().all(|v| v.is_finite()),
            "non-finite output",
        )?;
    }

    // constant series map to zero
    for &c in &[0.0, 0.1, -3.7, 1e6] {
        let out = dsrr_transform(&vec![c; 97], &DsrrConfig::new(10, 3).unwrap())
            .map_err(|e| e.to_string())?;
        ensure(
            out.values.iter().all(|&v| v == 0.0),
            format!("constant {c} not mapped to zero"),
        )?;
    }

    // shift and positive-scale invariance of R/S
    for _ in 0..200 {
        let len = r.random_range(2..64);
        let x = normals(&mut r, len);
        let base = rescaled_range(&x, len).unwrap();
        let shift = r.random_range(-50.0..50.0);
        let scale = r.random_range(0.01..100.0);
        let shifted: Vec<f64> = x.iter().map(|v| v + shift).collect();
        let scaled: Vec<f64> = x.iter().map(|v| v * scale).collect();
        ensure(
            rel_err(rescaled_range(&shifted, len).unwrap(), base) < tol,
            "shift changed R/S",
        )?;
        ensure(
            rel_err(rescaled_range(&scaled, len).unwrap(), base) < tol,
            "scale changed R/S",
        )?;
    }

    // hand-derived curve for [1, 2, 3, 4]: R = {0, 1/2, 1, 2}, S = {0, 1/2, √(2/3), √1.25}
    let curve = rs_curve(&[1.0, 2.0, 3.0, 4.0], 1).map_err(|e| e.to_string())?;
    let expected = [0.0, 1.0, 1.0 / (2.0f64 / 3.0).sqrt(), 2.0 / 1.25f64.sqrt()];
    ensure(curve.prefix_lengths == vec![1, 2, 3, 4], "prefix lengths")?;
    for (got, want) in curve.ratios.iter().zip(&expected) {
        ensure((got - want).abs() < tol, format!("curve {got} vs {want}"))?;
    }
    ensure(
        (expected[2] - 1.22474).abs() < 1e-5 && (expected[3] - 1.78885).abs() < 1e-5,
        "oracle",
    )?;

    let d = differentiate(&curve.ratios);
    let d_want = [
        1.0,
        expected[2] - 1.0,
        expected[3] - expected[2],
        expected[3] - expected[2],
    ];
    for (got, want) in d.iter().zip(&d_want) {
        ensure(
            (got - want).abs() < tol,
            format!("derivative {got} vs {want}"),
        )?;
    }
    let out = dsrr_transform(
        &[1.0, 2.0, 3.0, 4.0, 10.0, 10.0, 10.0, 10.0],
        &DsrrConfig::new(4, 1).unwrap(),
    )
    .map_err(|e| e.to_string())?;
    for (got, want) in out.values.iter().zip(d_want.iter().chain(&[0.0; 4])) {
        ensure(
            (got - want).abs() < tol,
            format!("transform {got} vs {want}"),
        )?;
    }
    Ok("length, constant→0, shift/scale invariance, [1,2,3,4] curve within 1e-9".into())
}

fn criterion_3() -> Check {
    let start = Instant::now();
    let ramp: Vec<f64> = (0..64).map(f64::from).collect();
    let fit = hurst_exponent(&ramp, &[8, 16, 32, 64]).map_err(|e| e.to_string())?;
    ensure(
        (0.95..=1.05).contains(&fit.h),
        format!("ramp H = {}", fit.h),
    )?;

    let lengths: Vec<usize> = (4..=9).map(|p| 1 << p).collect();
    let mut sum = 0.0;
    for seed in 0..30 {
        let x = normals(&mut rng(1000 + seed), 4096);
        sum += hurst_exponent(&x, &lengths).map_err(|e| e.to_string())?.h;
    }
    let mean_h = sum / 30.0;
    let elapsed = start.elapsed();
    ensure(
        (0.40..=0.65).contains(&mean_h),
        format!("iid mean H = {mean_h}"),
    )?;
    ensure(
        elapsed < Duration::from_secs(10),
        format!("took {elapsed:?}"),
    )?;
    Ok(format!(
        "ramp H = {:.4}, iid-normal mean H = {mean_h:.4} (30 seeds), {elapsed:.0?}",
        fit.h
    ))
}

/// Kendall τ-b by enumerating every pair.
fn tau_oracle(x: &[f64], y: &[f64]) -> (f64, bool) {
    let n = x.len();
    let (mut concordant, mut discordant, mut untied_x, mut untied_y) = (0i64, 0i64, 0u64, 0u64);
    for i in 0..n {
        for j in i + 1..n {
            let dx = x[i] - x[j];
            let dy = y[i] - y[j];
            if dx != 0.0 {
                untied_x += 1;
            }
            if dy != 0.0 {
                untied_y += 1;
            }
            if dx * dy > 0.0 {
                concordant += 1;
            } else if dx * dy < 0.0 {
                discordant += 1;
            }
        }
    }
    if untied_x == 0 || untied_y == 0 {
        return (0.0, true);
    }
    let tau = (concordant - discordant) as f64 / ((untied_x as f64) * (untied_y as f64)).sqrt();
    (tau.clamp(-1.0, 1.0), false)
}

fn criterion_4() -> Check {
    let mut r = rng(4);
    for case in 0..200 {
        let n = r.random_range(2..=30);
        let levels = r.random_range(1..=8);
        let x: Vec<f64> = (0..n).map(|_| r.random_range(0..levels) as f64).collect();
        let y: Vec<f64> = (0..n).map(|_| r.random_range(0..levels) as f64).collect();
        let got = kendall_tau(&x, &y).map_err(|e| e.to_string())?;
        let (want, degenerate) = tau_oracle(&x, &y);
        ensure(
            got.value == want && got.degenerate == degenerate,
            format!("case {case}: tau {} vs oracle {want}", got.value),
        )?;
    }

    let x = normals(&mut r, 10_000);
    let self_phi = phi_k(&x, &x, 10).map_err(|e| e.to_string())?.value;
    ensure(
        (self_phi - 1.0).abs() <= 1e-6,
        format!("phi_k(x, x) = {self_phi}"),
    )?;

    let mut max_independent = 0.0f64;
    let mut worst_rho_err = 0.0f64;
    let mut mean_rho = 0.0;
    for seed in 0..30 {
        let mut r = rng(4000 + seed);
        let u: Vec<f64> = (0..10_000).map(|_| r.random::<f64>()).collect();
        let v: Vec<f64> = (0..10_000).map(|_| r.random::<f64>()).collect();
        max_independent = max_independent.max(phi_k(&u, &v, 10).map_err(|e| e.to_string())?.value);

        let rho = 0.95f64;
        let a = normals(&mut r, 10_000);
        let b: Vec<f64> = a
            .iter()
            .map(|&a| rho * a + (1.0 - rho * rho).sqrt() * r.sample::<f64, _>(StandardNormal))
            .collect();
        let est = phi_k(&a, &b, 10).map_err(|e| e.to_string())?.value;
        worst_rho_err = worst_rho_err.max((est - rho).abs());
        mean_rho += est / 30.0;
    }
    ensure(
        max_independent < 0.1,
        format!("independent uniforms phi_k up to {max_independent}"),
    )?;
    ensure(
        worst_rho_err <= 0.05,
        format!("rho = 0.95 recovered with error {worst_rho_err}"),
    )?;
    Ok(format!(
        "tau exact on 200 cases; phi_k(x,x) = {self_phi:.9}; independent max {max_independent:.4}; \
         rho 0.95 → mean {mean_rho:.4}, worst error {worst_rho_err:.4}"
    ))
}

fn blobs(seed: u64, n: usize) -> (Matrix, Vec<usize>) {
    let mut r = rng(seed);
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let class = i % 2;
        let centre = if class == 0 { -3.0 } else { 3.0 };
        rows.push(
            (0..4)
                .map(|_| centre + r.sample::<f64, _>(StandardNormal))
                .collect(),
        );
        labels.push(class);
    }
    (Matrix::from_rows(&rows).unwrap(), labels)
}

fn accuracy(pred: &[usize], truth: &[usize]) -> f64 {
    pred.iter().zip(truth).filter(|(a, b)| a == b).count() as f64 / truth.len() as f64
}

fn criterion_5() -> Check {
    let (x, y) = blobs(50, 300);
    let knn = KnnModel::fit(&x, &y, 2, 1).map_err(|e| e.to_string())?;
    let self_acc = accuracy(&knn.predict(&x).unwrap(), &y);
    ensure(self_acc == 1.0, format!("kNN k=1 self accuracy {self_acc}"))?;

    let xor = Matrix::new(4, 2, vec![0.0, 0.0, 1.0, 1.0, 0.0, 1.0, 1.0, 0.0]).unwrap();
    let xor_y = [0, 0, 1, 1];
    let tree = TreeModel::fit(
        &xor,
        &xor_y,
        2,
        TreeParams {
            max_depth: Some(2),
            min_leaf: 1,
        },
    )
    .map_err(|e| e.to_string())?;
    let xor_acc = accuracy(&tree.predict(&xor).unwrap(), &xor_y);
    ensure(xor_acc == 1.0, format!("XOR accuracy {xor_acc}"))?;

    let (train_x, train_y) = blobs(51, 200);
    let (test_x, test_y) = blobs(52, 100);
    let params = ForestParams {
        n_trees: 50,
        seed: 5,
        ..ForestParams::default()
    };
    let forest = ForestModel::fit(&train_x, &train_y, 2, params).map_err(|e| e.to_string())?;
    let pred = forest.predict(&test_x).unwrap();
    let forest_acc = accuracy(&pred, &test_y);
    ensure(forest_acc >= 0.95, format!("forest accuracy {forest_acc}"))?;

    let again = ForestModel::fit(&train_x, &train_y, 2, params).map_err(|e| e.to_string())?;
    ensure(again == forest, "same seed produced a different forest")?;
    ensure(
        again.predict(&test_x).unwrap() == pred,
        "same seed produced different predictions",
    )?;
    Ok(format!(
        "kNN self {self_acc}, XOR {xor_acc}, forest blobs {forest_acc:.3}, same-seed identical"
    ))
}

fn criterion_6() -> Check {
    let start = Instant::now();
    let config = SynthConfig::default();
    ensure(
        config.n_blocks == 40
            && config.block_len == 50
            && config.seed == 7
            && config.regimes[1].burst == 10.0 * config.regimes[1].variance.sqrt(),
        "synthetic defaults drifted",
    )?;
    let table = synth_generate(&config).map_err(|e| e.to_string())?;
    let mut summary = Vec::new();
    for kind in [ModelKind::Knn, ModelKind::Tree, ModelKind::Rf] {
        let pipeline = PipelineConfig {
            dsrr: DsrrConfig::new(config.block_len, 1).unwrap(),
            prune: Some(PruneConfig::default()),
            model: ModelSpec::new(kind).with_seed(7),
            seed: 7,
            baseline: true,
            ..PipelineConfig::default()
        };
        let out = run_pipeline(&table, &pipeline).map_err(|e| e.to_string())?;
        let raw = out.results[0].metrics.accuracy;
        let dsrr = out.results[1].metrics.accuracy;
        summary.push(format!("{kind}: {raw:.3}→{dsrr:.3}"));
        ensure(
            dsrr - raw >= 0.05,
            format!("{kind}: raw {raw:.3} vs DSRR {dsrr:.3}"),
        )?;
    }
    let elapsed = start.elapsed();
    ensure(
        elapsed < Duration::from_secs(30),
        format!("took {elapsed:?}"),
    )?;
    Ok(format!(
        "accuracy raw→DSRR {} ({elapsed:.1?})",
        summary.join(", ")
    ))
}

/// The CSV file named by `DSRR_ISCX_60S`, or every `*.csv` in that directory.
fn iscx_files() -> Option<Vec<PathBuf>> {
    let path = PathBuf::from(std::env::var_os("DSRR_ISCX_60S")?);
    if path.is_file() {
        return Some(vec![path]);
    }
    let mut files: Vec<PathBuf> = std::fs::read_dir(&path)
        .ok()?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("csv")))
        .collect();
    files.sort();
    (!files.is_empty()).then_some(files)
}

fn criterion_7(files: &[PathBuf]) -> Check {
    let (table, _) = load_flow_csvs(files, &FeatureSchema::iscx(), &LabelNormalizer::default())
        .map_err(|e| e.to_string())?;
    let base = PipelineConfig {
        model: ModelSpec::new(ModelKind::Rf).with_seed(42),
        seed: 42,
        baseline: true,
        prune: None,
        ..PipelineConfig::default()
    };
    let plain = run_pipeline(&table, &base).map_err(|e| e.to_string())?;
    let pruned = run_pipeline(
        &table,
        &PipelineConfig {
            prune: Some(PruneConfig::default()),
            baseline: false,
            ..base
        },
    )
    .map_err(|e| e.to_string())?;
    let raw = plain.results[0].metrics.precision;
    let dsrr = plain.results[1].metrics.precision;
    let dsrr_prune = pruned.results[0].metrics.precision;
    let line = format!(
        "{} rows; Pr raw {raw:.3}, DSRR {dsrr:.3}, DSRR+prune {dsrr_prune:.3}",
        table.n_rows()
    );
    ensure(
        (0.75..=0.85).contains(&raw),
        format!("{line}: raw outside [0.75, 0.85]"),
    )?;
    ensure(dsrr >= 0.95, format!("{line}: DSRR below 0.95"))?;
    ensure(dsrr_prune >= 0.95, format!("{line}: DSRR+prune below 0.95"))?;
    ensure(
        raw < dsrr && dsrr <= dsrr_prune,
        format!("{line}: ordering violated"),
    )?;
    Ok(line)
}

fn run(name: &str, check: impl FnOnce() -> Check) -> Outcome {
    match std::panic::catch_unwind(std::panic::AssertUnwindSafe(check)) {
        Ok(Ok(msg)) => Outcome::Pass(format!("{name}: {msg}")),
        Ok(Err(msg)) => Outcome::Fail(format!("{name}: {msg}")),
        Err(_) => Outcome::Fail(format!("{name}: panicked")),
    }
}

fn main() -> ExitCode {
    let mut outcomes = vec![
        run("AC1 R/S oracle equivalence", criterion_1),
        run("AC2 DSRR structural suite", criterion_2),
        run("AC3 Hurst sanity", criterion_3),
        run("AC4 correlation suite", criterion_4),
        run("AC5 classifier suite", criterion_5),
        run("AC6 synthetic DSRR gain", criterion_6),
    ];
    outcomes.push(match iscx_files() {
        Some(files) => run("AC7 ISCX 60 s precision bands", || criterion_7(&files)),
        None => Outcome::Skip(
            "AC7 ISCX 60 s precision bands: DSRR_ISCX_60S not set or holds no CSV".into(),
        ),
    });

    let mut failed = 0;
    for outcome in &outcomes {
        match outcome {
            Outcome::Pass(line) => println!("[PASS] {line}"),
            Outcome::Skip(line) => println!("[SKIP] {line}"),
            Outcome::Fail(line) => {
                failed += 1;
                println!("[FAIL] {line}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} acceptance criterion(s) failed");
        ExitCode::FAILURE
    }
}
