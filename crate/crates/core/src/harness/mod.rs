//! Metrics, experiment plans and result export.

mod experiment;
mod export;
mod metrics;

pub use experiment::{
    mean_std, run_cell, run_experiment, Cell, CellFailure, ExperimentPlan, ExperimentResult, ResultRow, RunRecord,
    SummaryRow, DENSITIES,
};
pub use export::{read_csv, read_json, write_csv, write_json, write_plot_data, write_summary_csv, write_timeline, ExportError};
pub use metrics::{summarize, MetricSummary, RunMetrics};
