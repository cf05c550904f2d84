//! Top-k fidelity evaluation under leave-one-subject-out.

pub mod fidelity;
pub mod report;
pub mod topk;

pub use fidelity::{derive_seed, evaluate_methods, fidelity_eval, ModelSpec};
pub use report::{assemble_report, hash_json, Cell, EvalReport, FoldRecord, FoldSummary, RankingRecord, ReportMetadata, SummaryRow};
pub use topk::{select_top_k, subset_dataset, top_k_count, TopKConfig};
