//! Timing and allocation measurement for attribution jobs.

pub mod alloc;
pub mod timing;

pub use alloc::{measure_peak, peak_allocation, tracking_available, CountingAllocator};
pub use timing::{
    efficiency_csv, efficiency_markdown, efficiency_table, time_method, BenchResult, EfficiencyRow, EnvFingerprint,
    DEFAULT_WARMUP,
};
