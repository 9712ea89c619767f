//! Generators and loaders for the three experiment pipelines: the synthetic
//! networked-SVM benchmark, the geographic housing-regression dataset, and
//! the building entry/exit event-detection series (with its Poisson
//! baseline). Every generator is bit-reproducible from its seed.

pub mod events;
pub mod housing;
pub mod regular;
pub mod svm;

use thiserror::Error;

pub use events::{
    chain_event_graph, detect_events, detrend_series, load_calit2_counts, load_event_list,
    match_events, poisson_baseline, synthetic_event_series, EventSeriesSpec, SyntheticEventSpec,
};
pub use housing::{
    build_knn_graph, haversine_m, load_housing, nearest_training, standardize_records,
    HousingRecord, StandardizedHousing,
};
pub use regular::gen_regular_graph;
pub use svm::{gen_svm_benchmark, svm_accuracy, SvmBenchmark, SvmBenchmarkSpec};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("{path}: missing required column `{column}`")]
    MissingColumn { path: String, column: String },
    #[error("column `{0}` has zero variance; cannot standardize")]
    ZeroVariance(String),
    #[error("need at least {need} records, got {got}")]
    TooFewRecords { need: usize, got: usize },
    #[error("{path}:{line}: {msg}")]
    Parse { path: String, line: usize, msg: String },
    #[error("invalid specification: {0}")]
    BadSpec(String),
    #[error(transparent)]
    Graph(#[from] crate::graph::GraphError),
}
