//! JSON run configuration.

use std::path::{Path, PathBuf};

use deepactif::attribution::AttributionConfig;
use deepactif::data::{self, CsvSchema, SequenceDataset, SynthConfig, DEFAULT_STRIDE, DEFAULT_WINDOW_LEN};
use deepactif::evaluation::{ModelSpec, TopKConfig};
use deepactif::nn::TrainConfig;
use serde::{Deserialize, Serialize};

use crate::CliError;

fn default_window_len() -> usize {
    DEFAULT_WINDOW_LEN
}
fn default_stride() -> usize {
    DEFAULT_STRIDE
}
fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CsvSource {
    pub path: PathBuf,
    #[serde(default = "default_window_len")]
    pub window_len: usize,
    #[serde(default = "default_stride")]
    pub stride: usize,
    #[serde(default)]
    pub schema: CsvSchema,
    /// Per-subject z-scoring before windowing.
    #[serde(default = "default_true")]
    pub normalize: bool,
}

/// Exactly one dataset source.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetSource {
    Csv(CsvSource),
    Synth(SynthConfig),
    SynthPath(PathBuf),
}

fn default_runs() -> usize {
    5
}
fn default_warmup() -> usize {
    deepactif::bench::DEFAULT_WARMUP
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchSettings {
    #[serde(default = "default_runs")]
    pub runs: usize,
    #[serde(default = "default_warmup")]
    pub warmup: usize,
    /// Subject whose windows form the timed workload; the first by default.
    #[serde(default)]
    pub subject: Option<String>,
}

impl Default for BenchSettings {
    fn default() -> Self {
        Self {
            runs: default_runs(),
            warmup: default_warmup(),
            subject: None,
        }
    }
}

fn default_reference() -> String {
    "deepactif-lstm".into()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub dataset: DatasetSource,
    #[serde(default)]
    pub model: ModelSpec,
    #[serde(default)]
    pub train: TrainConfig,
    pub methods: Vec<AttributionConfig>,
    #[serde(default)]
    pub topk: TopKConfig,
    /// Method the statistics compare every other family against.
    #[serde(default = "default_reference")]
    pub reference: String,
    #[serde(default)]
    pub bench: BenchSettings,
    #[serde(default)]
    pub jobs: Option<usize>,
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("invalid JSON in {}: {e}", path.display())))
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let mut cfg: RunConfig = read_json(path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        match &mut cfg.dataset {
            DatasetSource::Csv(c) => c.path = resolve(base, &c.path),
            DatasetSource::SynthPath(p) => *p = resolve(base, p),
            DatasetSource::Synth(_) => {}
        }
        if cfg.methods.is_empty() {
            return Err(CliError::Usage("config lists no methods".into()));
        }
        Ok(cfg)
    }

    pub fn load_dataset(&self) -> Result<SequenceDataset, CliError> {
        load_source(&self.dataset)
    }
}

pub fn load_source(source: &DatasetSource) -> Result<SequenceDataset, CliError> {
    match source {
        DatasetSource::Csv(c) => load_csv_dataset(c),
        DatasetSource::Synth(s) => Ok(data::synth_generate(s).map_err(CliError::usage)?.dataset),
        DatasetSource::SynthPath(p) => {
            let s: SynthConfig = read_json(p)?;
            Ok(data::synth_generate(&s).map_err(CliError::usage)?.dataset)
        }
    }
}

pub fn load_csv_dataset(c: &CsvSource) -> Result<SequenceDataset, CliError> {
    let raw = data::load_csv(&c.path, &c.schema).map_err(CliError::usage)?;
    let raw = if c.normalize {
        data::subject_normalize(&raw).map_err(CliError::usage)?
    } else {
        raw
    };
    let windowed = data::window(&raw, c.window_len, c.stride).map_err(CliError::usage)?;
    if windowed.dataset.is_empty() {
        return Err(CliError::Usage(format!(
            "{} yields no windows of length {}",
            c.path.display(),
            c.window_len
        )));
    }
    Ok(windowed.dataset)
}
