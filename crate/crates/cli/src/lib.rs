//! Driver for the froblab pipelines: config ingestion, registered examples, reports and the
//! regression suite.

pub mod config;
pub mod examples;
pub mod report;
pub mod suite;
pub mod toric_config;

use std::path::PathBuf;

use thiserror::Error;

pub use config::SchemaError;
pub use examples::{run_example, Check, Outcome, EXAMPLES};
pub use suite::{regression_suite, CriterionResult, Perturbation, SuiteSummary};
pub use toric_config::load_toric_config;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("unknown example `{0}` (known: {known})", known = EXAMPLES.iter().map(|e| e.0).collect::<Vec<_>>().join(", "))]
    UnknownExample(String),
    #[error("config: {0}")]
    Schema(#[from] SchemaError),
    #[error("invalid run configuration: {0}")]
    InvalidConfig(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error(transparent)]
    Toric(#[from] froblab_core::toric::ToricError),
    #[error(transparent)]
    Frame(#[from] froblab_core::frame::FrameError),
    #[error(transparent)]
    Frobenius(#[from] froblab_core::frobenius::FrobeniusError),
    #[error(transparent)]
    Series(#[from] froblab_core::SeriesError),
    #[error(transparent)]
    Exact(#[from] froblab_core::ExactError),
    #[error(transparent)]
    Singularity(#[from] froblab_core::singularity::SingularityError),
    #[error(transparent)]
    DmFlow(#[from] froblab_core::dmflow::DmError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Text,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Source {
    Example(String),
    Config(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Command {
    Run(Source),
    Suite,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunConfig {
    pub command: Command,
    /// Truncation order in `q`; `None` uses the example's own default.
    pub order: Option<i64>,
    /// Powers of `hbar` kept in jets, `(lo, hi)`.
    pub hbar_window: Option<(i64, i64)>,
    /// Largest lattice denominator tried for fractional exponents.
    pub max_lattice: u32,
    pub format: Format,
    pub out: Option<PathBuf>,
}

pub const DEFAULT_ORDER: i64 = 8;

impl RunConfig {
    pub fn example(name: &str) -> Self {
        RunConfig {
            command: Command::Run(Source::Example(name.into())),
            order: None,
            hbar_window: None,
            max_lattice: 6,
            format: Format::Json,
            out: None,
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if let Some(o) = self.order {
            if o <= 0 {
                return Err(CliError::InvalidConfig(format!("order must be positive, got {}", o)));
            }
        }
        if let Some((a, b)) = self.hbar_window {
            if a > b || a > 0 {
                return Err(CliError::InvalidConfig(format!("hbar window {}:{} must satisfy a <= 0 and a <= b", a, b)));
            }
        }
        if self.max_lattice == 0 {
            return Err(CliError::InvalidConfig("lattice cap must be positive".into()));
        }
        if let Command::Run(Source::Example(name)) = &self.command {
            if !EXAMPLES.iter().any(|e| e.0 == name) {
                return Err(CliError::UnknownExample(name.clone()));
            }
        }
        Ok(())
    }
}

/// Parses `a:b`.
pub fn parse_window(s: &str) -> Result<(i64, i64), String> {
    let (a, b) = s.split_once(':').ok_or_else(|| format!("expected a:b, got `{}`", s))?;
    let a = a.trim().parse::<i64>().map_err(|e| format!("{}: {}", a, e))?;
    let b = b.trim().parse::<i64>().map_err(|e| format!("{}: {}", b, e))?;
    Ok((a, b))
}
