//! Paired statistics: Wilcoxon signed-rank test and Cohen's d.

pub mod compare;
pub mod effect;
pub mod wilcoxon;

pub use compare::{comparison_csv, comparison_markdown, compare_all, compare_pair, fold_vector, format_p, PairedComparison};
pub use effect::{cohens_d_paired, EffectSize};
pub use wilcoxon::{exact_p_value, midranks, normal_p_value, signed_rank, wilcoxon_signed_rank, PMethod, SignedRankTest};
