//! Error metrics, the signed-rank test and the seeded synthetic benchmark.

mod bench;
mod metrics;
mod report;
mod wilcoxon;

pub use bench::{
    aggregate, evaluate_signal, run_benchmark, run_benchmark_with, BenchmarkConfig, BenchmarkReport, CellReport,
    Comparison, MethodRow, NoiseLevel, RowKind, SignalOutcome,
};
pub use metrics::{mae, median, nmae};
pub use wilcoxon::{bonferroni_threshold, wilcoxon_normal, wilcoxon_signed_rank, WilcoxonResult, EXACT_MAX_N};
