//! Experiment harness: config parsing, Monte Carlo runner, aggregation,
//! and byte-stable artifact export.

pub mod config;
pub mod output;
pub mod runner;

pub use config::{parse_config, Algorithm, EmitKind, ExperimentSpec, SweepAxis, SweepSpec};
pub use runner::{
    emit_beampattern, run_experiment, AggregateResult, AlgorithmSummary, TrialOutcome,
};
