//! Convergence studies, report emission and Laplace inversion on top of
//! `tfk-core`.

pub mod check;
pub mod config;
pub mod emit;
pub mod error;
pub mod invert;
pub mod presets;
pub mod study;

pub use config::StudyConfig;
pub use error::{CliError, CliResult};
pub use study::{run_study, ConvergenceReport};
