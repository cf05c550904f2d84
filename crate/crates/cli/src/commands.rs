//! Subcommand implementations.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use deepactif::attribution::{compute_scores, AttributionConfig, FeatureScores, Method};
use deepactif::bench::{efficiency_csv, efficiency_markdown, efficiency_table, time_method, BenchResult};
use deepactif::data::{self, SequenceDataset, SynthConfig};
use deepactif::evaluation::{evaluate_methods, hash_json, EvalReport};
use deepactif::nn::{self, weights};
use deepactif::stats::{compare_all, comparison_csv, comparison_markdown, PairedComparison};
use serde::{Deserialize, Serialize};

use crate::config::{load_csv_dataset, read_json, CsvSource, RunConfig};
use crate::CliError;

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Usage(format!("cannot create {}: {e}", dir.display())))
}

fn json<T: Serialize>(value: &T) -> Result<String, CliError> {
    serde_json::to_string_pretty(value)
        .map(|s| s + "\n")
        .map_err(|e| CliError::Runtime(e.to_string()))
}

#[derive(Serialize)]
struct GroundTruth<'a> {
    relevant: &'a [usize],
    relevant_names: Vec<&'a str>,
    weights: &'a [f64],
    dataset_fingerprint: String,
}

pub fn synth(config: &Path, out: &Path) -> Result<(), CliError> {
    let cfg: SynthConfig = read_json(config)?;
    let generated = data::synth_generate(&cfg).map_err(CliError::usage)?;
    ensure_dir(out)?;
    data::save_csv(&generated.records, &out.join("dataset.csv")).map_err(CliError::runtime)?;
    // Weights in the order of the sorted relevant indices.
    let weights: Vec<f64> = generated
        .relevant
        .iter()
        .map(|r| cfg.weights[cfg.relevant.iter().position(|x| x == r).unwrap_or(0)])
        .collect();
    let fingerprint = generated.dataset.fingerprint();
    let truth = GroundTruth {
        relevant: &generated.relevant,
        relevant_names: generated
            .relevant
            .iter()
            .map(|&i| generated.dataset.feature_names[i].as_str())
            .collect(),
        weights: &weights,
        dataset_fingerprint: fingerprint.clone(),
    };
    write(&out.join("ground_truth.json"), &json(&truth)?)?;
    println!("{fingerprint}");
    Ok(())
}

#[derive(Serialize)]
struct TrainSummary {
    dataset_fingerprint: String,
    n_samples: usize,
    n_features: usize,
    epochs_run: usize,
    best_epoch: usize,
    best_validation_mae: f64,
    used_validation_split: bool,
    train_mae: f64,
}

pub fn train(config: &Path, out: &Path) -> Result<(), CliError> {
    let cfg = RunConfig::load(config)?;
    let dataset = cfg.load_dataset()?;
    let outcome = nn::train(&dataset, cfg.model.dims(dataset.n_features()), &cfg.train).map_err(CliError::runtime)?;
    ensure_dir(out)?;
    weights::save(&outcome.model, &out.join("model.dfw")).map_err(CliError::runtime)?;
    let summary = TrainSummary {
        dataset_fingerprint: dataset.fingerprint(),
        n_samples: dataset.len(),
        n_features: dataset.n_features(),
        epochs_run: outcome.epochs_run,
        best_epoch: outcome.best_epoch,
        best_validation_mae: outcome.best_validation_mae,
        used_validation_split: outcome.used_validation_split,
        train_mae: nn::predict_mae(&outcome.model, &dataset).map_err(CliError::runtime)?,
    };
    write(&out.join("train.json"), &json(&summary)?)?;
    println!("trained {} epochs, validation MAE {:.6}", outcome.epochs_run, outcome.best_validation_mae);
    Ok(())
}

pub struct AttributeArgs {
    pub weights: PathBuf,
    pub dataset: PathBuf,
    pub method: Option<String>,
    pub config: Option<PathBuf>,
    pub window_len: usize,
    pub stride: usize,
    pub normalize: bool,
    pub out: PathBuf,
}

pub fn attribute(args: &AttributeArgs) -> Result<(), CliError> {
    let mut cfg: AttributionConfig = match &args.config {
        Some(p) => read_json(p)?,
        None => AttributionConfig::new(Method::DeepActif(deepactif::attribution::Tap::Lstm)),
    };
    if let Some(m) = &args.method {
        cfg.method = m.parse::<Method>().map_err(CliError::usage)?;
        cfg.label = None;
    } else if args.config.is_none() {
        return Err(CliError::Usage("either --method or --config is required".into()));
    }
    let model = weights::load(&args.weights).map_err(CliError::usage)?;
    let dataset = load_csv_dataset(&CsvSource {
        path: args.dataset.clone(),
        window_len: args.window_len,
        stride: args.stride,
        schema: Default::default(),
        normalize: args.normalize,
    })?;
    if model.dims.input != dataset.n_features() {
        return Err(CliError::Usage(format!(
            "weights expect {} features but the dataset has {}",
            model.dims.input,
            dataset.n_features()
        )));
    }
    let scores = compute_scores(&model, &dataset, &cfg).map_err(CliError::runtime)?;
    if let Some(dir) = args.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        ensure_dir(dir)?;
    }
    write(&args.out, &(scores.to_json().map_err(CliError::runtime)? + "\n"))?;
    for (i, name) in scores.ranked_names().iter().take(10).enumerate() {
        println!("{:>2}. {name}", i + 1);
    }
    Ok(())
}

#[derive(Serialize)]
struct RunInfo {
    command: String,
    version: &'static str,
    started_unix_s: u64,
    finished_unix_s: u64,
    elapsed_s: f64,
    config_hash: String,
    jobs: usize,
    failed_cells: usize,
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

fn comparisons_for(report: &EvalReport, reference: &str) -> Result<Vec<PairedComparison>, CliError> {
    if !report.metadata.methods.iter().any(|m| m == reference) {
        log::warn!("reference method {reference:?} not evaluated; skipping statistics");
        return Ok(Vec::new());
    }
    let mut all = Vec::new();
    for &k in &report.metadata.k_percents {
        match compare_all(report, reference, k) {
            Ok(c) => all.extend(c),
            Err(e) => log::warn!("statistics at k={k} skipped: {e}"),
        }
    }
    Ok(all)
}

fn write_stats(out: &Path, comparisons: &[PairedComparison]) -> Result<(), CliError> {
    write(&out.join("stats.csv"), &comparison_csv(comparisons))?;
    write(&out.join("stats.md"), &comparison_markdown(comparisons))
}

fn bench_subject(dataset: &SequenceDataset, subject: Option<&str>) -> Result<SequenceDataset, CliError> {
    let subjects = dataset.subjects();
    let chosen = match subject {
        Some(s) if subjects.iter().any(|x| x == s) => s.to_string(),
        Some(s) => return Err(CliError::Usage(format!("bench subject {s:?} not in dataset"))),
        None => subjects.first().cloned().ok_or_else(|| CliError::Usage("empty dataset".into()))?,
    };
    Ok(dataset.filter(|s| s.subject_id == chosen))
}

/// Benchmarks each configured method on one subject with a model trained on
/// the remaining subjects. Always single-job.
fn run_bench(cfg: &RunConfig, dataset: &SequenceDataset) -> Result<Vec<BenchResult>, CliError> {
    let workload = bench_subject(dataset, cfg.bench.subject.as_deref())?;
    let subject = workload.samples[0].subject_id.clone();
    let rest = dataset.filter(|s| s.subject_id != subject);
    let train_on = if rest.is_empty() { dataset } else { &rest };
    let model = nn::train(train_on, cfg.model.dims(dataset.n_features()), &cfg.train)
        .map_err(CliError::runtime)?
        .model;
    let mut results = Vec::new();
    for m in &cfg.methods {
        let (r, _): (BenchResult, FeatureScores) =
            time_method(&m.label(), cfg.bench.runs, cfg.bench.warmup, || compute_scores(&model, &workload, m))
                .map_err(CliError::runtime)?;
        results.push(r);
    }
    Ok(results)
}

fn write_bench(out: &Path, results: &[BenchResult]) -> Result<(), CliError> {
    let rows = efficiency_table(results);
    write(&out.join("bench.csv"), &efficiency_csv(&rows))?;
    write(&out.join("bench.md"), &efficiency_markdown(&rows))?;
    write(&out.join("bench.json"), &json(&results)?)
}

pub fn evaluate(config: &Path, out: &Path, jobs_flag: Option<usize>, with_bench: bool) -> Result<(), CliError> {
    let started = unix_now();
    let clock = std::time::Instant::now();
    let cfg = RunConfig::load(config)?;
    let dataset = cfg.load_dataset()?;
    let jobs = jobs_flag.or(cfg.jobs).unwrap_or(1).max(1);
    let mut report = evaluate_methods(&dataset, &cfg.methods, &cfg.topk, &cfg.train, &cfg.model, jobs).map_err(CliError::runtime)?;
    report.comparisons = comparisons_for(&report, &cfg.reference)?;
    ensure_dir(out)?;
    write(&out.join("report.json"), &report.canonical_json().map_err(CliError::runtime)?)?;
    write(&out.join("grid.csv"), &report.grid_csv())?;
    write(&out.join("folds.csv"), &report.fold_csv())?;
    write(&out.join("summary.md"), &report.summary_markdown())?;
    write_stats(out, &report.comparisons)?;
    if with_bench {
        let results = run_bench(&cfg, &dataset)?;
        write_bench(out, &results)?;
    }
    let info = RunInfo {
        command: if with_bench { "run" } else { "evaluate" }.into(),
        version: env!("CARGO_PKG_VERSION"),
        started_unix_s: started,
        finished_unix_s: unix_now(),
        elapsed_s: clock.elapsed().as_secs_f64(),
        config_hash: report.metadata.config_hash.clone(),
        jobs,
        failed_cells: report.metadata.failed_cells,
    };
    write(&out.join("run_info.json"), &json(&info)?)?;
    print!("{}", report.summary_markdown());
    if report.metadata.failed_cells > 0 {
        return Err(CliError::Partial(report.metadata.failed_cells, report.cells.len() + report.folds.len()));
    }
    Ok(())
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct StatsConfig {
    report: Option<PathBuf>,
    reference: Option<String>,
    #[serde(default)]
    k: Vec<u32>,
}

pub fn stats(config: Option<&Path>, report: Option<PathBuf>, reference: Option<String>, out: &Path) -> Result<(), CliError> {
    let mut cfg: StatsConfig = match config {
        Some(p) => {
            let mut c: StatsConfig = read_json(p)?;
            if let (Some(r), Some(base)) = (&c.report, p.parent()) {
                if r.is_relative() {
                    c.report = Some(base.join(r));
                }
            }
            c
        }
        None => StatsConfig::default(),
    };
    if report.is_some() {
        cfg.report = report;
    }
    if reference.is_some() {
        cfg.reference = reference;
    }
    let path = cfg
        .report
        .ok_or_else(|| CliError::Usage("no report given (use --report or a config with \"report\")".into()))?;
    let text = std::fs::read_to_string(&path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    let report = EvalReport::from_json(&text).map_err(CliError::usage)?;
    let reference = cfg.reference.unwrap_or_else(|| "deepactif-lstm".into());
    if !report.metadata.methods.contains(&reference) {
        return Err(CliError::Usage(format!(
            "reference {reference:?} not in report; methods: {}",
            report.metadata.methods.join(", ")
        )));
    }
    let ks = if cfg.k.is_empty() { report.metadata.k_percents.clone() } else { cfg.k };
    let mut all = Vec::new();
    for k in ks {
        all.extend(compare_all(&report, &reference, k).map_err(CliError::runtime)?);
    }
    ensure_dir(out)?;
    write_stats(out, &all)?;
    print!("{}", comparison_markdown(&all));
    Ok(())
}

pub fn bench(config: &Path, out: &Path) -> Result<(), CliError> {
    let cfg = RunConfig::load(config)?;
    let dataset = cfg.load_dataset()?;
    for m in &cfg.methods {
        m.validate(dataset.n_features()).map_err(CliError::usage)?;
    }
    let results = run_bench(&cfg, &dataset)?;
    ensure_dir(out)?;
    write_bench(out, &results)?;
    let info = serde_json::json!({
        "command": "bench",
        "finished_unix_s": unix_now(),
        "config_hash": hash_json(&cfg.methods).map_err(CliError::runtime)?,
    });
    write(&out.join("run_info.json"), &json(&info)?)?;
    print!("{}", efficiency_markdown(&efficiency_table(&results)));
    Ok(())
}

