//! Scenario configuration, batch execution and result files.

mod config;
mod scenario;
mod sweep;
mod workload;

pub use config::{
    format_crash, parse_config, parse_crash, render_config, QuorumKind, ScenarioConfig, Scheme,
    DEFAULT_OPS_PER_CLIENT, DEFAULT_READ_INTERVAL, DEFAULT_WRITE_INTERVAL,
};
pub use scenario::{
    read_rows, run_scenario, write_rows, write_run, Outcome, ResultRow, RunFiles, ScenarioRun,
    COMPUTE_COLUMN, CSV_COLUMNS, CSV_SCHEMA_VERSION,
};
pub use sweep::{
    parse_grid, summarize_rows, sweep, write_summary, Cell, CellReport, Grid, RunFailure,
    SummaryRow, SweepOptions, SweepReport, DEFAULT_SEEDS, SUMMARY_COLUMNS,
};
pub use workload::build_workload;
