//! Experiment configuration, Monte Carlo runner, CSV output and summaries.

pub mod config;
pub mod records;
pub mod run;
pub mod summary;

pub use config::{load_spec, load_spec_file, Algorithm, BitSpec, ExperimentSpec};
pub use records::{read_csv, write_csv};
pub use run::{run_experiment, run_experiment_with, RunOptions, TrialRecord};
pub use summary::{summarize, write_summary_csv, SummaryRow};
