//! Wall-clock timing of attribution jobs and the efficiency table.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::attribution::family;
use crate::bench::alloc::{measure_peak, tracking_available};
use crate::error::{Error, Result};

pub const DEFAULT_WARMUP: usize = 2;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnvFingerprint {
    pub cpu_model: String,
    pub cores: usize,
    pub os: String,
    pub arch: String,
}

impl EnvFingerprint {
    pub fn detect() -> Self {
        let cpu_model = std::fs::read_to_string("/proc/cpuinfo")
            .ok()
            .and_then(|s| {
                s.lines()
                    .find(|l| l.starts_with("model name"))
                    .and_then(|l| l.split(':').nth(1))
                    .map(|v| v.trim().to_string())
            })
            .unwrap_or_else(|| "unknown".into());
        Self {
            cpu_model,
            cores: std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
            os: std::env::consts::OS.into(),
            arch: std::env::consts::ARCH.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchResult {
    pub method_tag: String,
    pub times_s: Vec<f64>,
    pub median_s: f64,
    pub mean_s: f64,
    /// Allocator high-water mark over the timed runs; `None` without the
    /// counting allocator.
    pub peak_bytes: Option<u64>,
    pub runs: usize,
    pub env: EnvFingerprint,
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Runs `warmup` discarded calls, then `runs` timed calls of `job`. Returns
/// the timings and the output of the last run. Peak allocation is recorded
/// when the counting allocator is installed.
pub fn time_method<T>(
    method_tag: &str,
    runs: usize,
    warmup: usize,
    mut job: impl FnMut() -> Result<T>,
) -> Result<(BenchResult, T)> {
    if runs == 0 {
        return Err(Error::config("runs must be >= 1"));
    }
    for _ in 0..warmup {
        job()?;
    }
    let track = tracking_available();
    let mut times = Vec::with_capacity(runs);
    let mut peak: Option<u64> = None;
    let mut last = None;
    for _ in 0..runs {
        let start = Instant::now();
        let (out, bytes) = if track {
            let (out, b) = measure_peak(&mut job)?;
            (out, Some(b))
        } else {
            (job(), None)
        };
        let elapsed = start.elapsed().as_secs_f64();
        last = Some(out?);
        times.push(elapsed);
        if let Some(b) = bytes {
            peak = Some(peak.map_or(b, |p: u64| p.max(b)));
        }
    }
    let mean_s = times.iter().sum::<f64>() / runs as f64;
    let result = BenchResult {
        method_tag: method_tag.to_string(),
        median_s: median(&times),
        mean_s,
        times_s: times,
        peak_bytes: peak,
        runs,
        env: EnvFingerprint::detect(),
    };
    Ok((result, last.expect("runs >= 1")))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyRow {
    pub method: String,
    pub variant: String,
    pub mean_s: f64,
    pub median_s: f64,
    pub peak_mb: Option<f64>,
    pub runs: usize,
}

/// Rows sorted by method family, then variant.
pub fn efficiency_table(results: &[BenchResult]) -> Vec<EfficiencyRow> {
    let mut rows: Vec<EfficiencyRow> = results
        .iter()
        .map(|r| {
            let fam = family(&r.method_tag).to_string();
            let variant = r.method_tag[fam.len()..].trim_start_matches('-');
            EfficiencyRow {
                variant: if variant.is_empty() { "-".into() } else { variant.into() },
                method: fam,
                mean_s: r.mean_s,
                median_s: r.median_s,
                peak_mb: r.peak_bytes.map(|b| b as f64 / (1024.0 * 1024.0)),
                runs: r.runs,
            }
        })
        .collect();
    rows.sort_by(|a, b| (&a.method, &a.variant).cmp(&(&b.method, &b.variant)));
    rows
}

pub fn efficiency_csv(rows: &[EfficiencyRow]) -> String {
    let mut out = String::from("method,variant,mean_s,median_s,peak_mb,runs\n");
    for r in rows {
        let mb = r.peak_mb.map(|m| format!("{m:.3}")).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{:.6},{:.6},{},{}\n",
            r.method, r.variant, r.mean_s, r.median_s, mb, r.runs
        ));
    }
    out
}

pub fn efficiency_markdown(rows: &[EfficiencyRow]) -> String {
    let mut out = String::from(
        "| Method | Variant | Avg. Exec. Time (s) | Median (s) | Peak Alloc. (MB) |\n|---|---|---:|---:|---:|\n",
    );
    let mut prev: Option<&str> = None;
    for r in rows {
        let name = if prev == Some(r.method.as_str()) { "" } else { r.method.as_str() };
        prev = Some(&r.method);
        let mb = r.peak_mb.map(|m| format!("{m:.2}")).unwrap_or_else(|| "n/a".into());
        out.push_str(&format!(
            "| {name} | {} | {:.4} | {:.4} | {mb} |\n",
            r.variant, r.mean_s, r.median_s
        ));
    }
    out
}
