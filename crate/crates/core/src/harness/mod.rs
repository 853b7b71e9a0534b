//! Experiments and statistics built on the simulators: the alignment-only
//! validation sweep, the neighbor-search cost benchmark, histogram errors,
//! label-fraction series and cluster counting.

pub mod bench;
pub mod stats;
pub mod validation;

pub use bench::{run_benchmark, write_bench_csv, BenchRow, Method};
pub use stats::{
    cluster_count, l2_histogram_error, label_fraction_series, mean_leader_fraction, FractionPoint,
    HistogramSpec,
};
pub use validation::{
    exact_alignment_reference, run_validation, write_validation_csv, ValidationRow, ValidationSpec,
};
