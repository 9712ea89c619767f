//! Experiment pipelines and the scaling benchmark, exposed as plain
//! functions so integration tests can drive them without the binary.

pub mod bench;
pub mod events;
pub mod housing;
pub mod svm;

pub use bench::{run_bench, BenchRow};
pub use events::{run_events_experiment, EventsConfig, EventsOutcome, RecallRow};
pub use housing::{run_housing_experiment, HousingConfig, HousingOutcome};
pub use svm::{run_svm_experiment, SvmConfig, SvmOutcome};
