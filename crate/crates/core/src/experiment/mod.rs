//! Experiment configuration, orchestration, and reporting.

mod config;
mod report;
mod runner;

pub use config::{
    ExperimentConfig, ExperimentKind, ExtrapolationMode, MethodConfig, PolicyConfig,
    SelectionConfig, SelectionCriteria, SyntheticConfig, TemporalConfig,
};
pub use report::{read_cells, report};
pub use runner::{run_experiment, FailedCell, ResultCell, RunManifest};
