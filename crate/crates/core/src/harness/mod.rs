//! Experiment harness: configuration, corpus, suites and reports.

pub mod config;
pub mod corpus;
pub mod plot;
pub mod rng;
pub mod suites;

pub use config::{EngineOverrides, ExperimentConfig};
pub use corpus::{corpus, corpus_grid, select, CorpusMember};
pub use plot::{emit_plot_data, ratio_histogram, write_series, PlotFiles};
pub use rng::stream;
pub use suites::{compare_bounds, exit_code, read_summaries, render_report, run_suite, CompareRow, SuiteOutcome, SUITES};
