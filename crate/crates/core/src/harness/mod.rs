//! Experiment harness: configuration files, run orchestration, CSV reports,
//! SVG plots and refinement comparison.

pub mod compare;
pub mod config;
pub mod runner;
pub mod svg;

use thiserror::Error;

pub use compare::{compare_runs, least_squares_slope, RefinementGroup, RefinementSummary};
pub use config::{parse_config, parse_config_for, Diagnostics, ExperimentConfig, Mode};
pub use runner::{resolve_workers, run, RunSummary};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{0}")]
    Config(#[from] Diagnostics),
    #[error("{0}")]
    Setup(String),
    #[error("compare: {0}")]
    Compare(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Geometry(#[from] crate::geometry::GeometryError),
    #[error(transparent)]
    Solver(#[from] crate::solver::SolverError),
    #[error(transparent)]
    Inequality(#[from] crate::inequality::InequalityError),
    #[error(transparent)]
    MeanValue(#[from] crate::meanvalue::MeanValueError),
}
