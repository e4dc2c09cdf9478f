//! Seeded experiment runs, curve fitting and seed aggregation.

pub mod aggregate;
pub mod config;
pub mod fit;
pub mod output;
pub mod run;

pub use aggregate::{aggregate, aggregate_tables, read_table, write_table, MeanStd, Table};
pub use config::{parse_seed_range, AlgorithmConfig, Horizons, Method, OutputConfig, RunConfig, UcbConfig};
pub use fit::{fit_log_square, Band, LogSquareFit};
pub use output::{content_hash, write_results, write_run, RunSummary};
pub use run::{simulate, simulate_all, simulate_seed, SeedOutcome};
