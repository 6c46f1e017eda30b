//! Batch runner behind the `ctcpp` binary: config validation, seeded mission runs
//! with artifact export, and planner comparison across seeds.

pub mod compare;
pub mod config;
pub mod error;
pub mod run;

pub use compare::{compare_dir, Comparison, MetricsFile, PlannerKind};
pub use config::{validate, ExportLevel, PlannerChoice, RunConfig, RunManifest, ValidationReport};
pub use error::{CliError, CliResult};
pub use run::{run, RunSummary};
