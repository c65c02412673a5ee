//! Configuration ingestion, analysis orchestration and report emission for
//! the `resonance-atlas` command.

pub mod config;
pub mod error;
pub mod output;
pub mod pipeline;
pub mod validate;

pub use config::{AnalysisConfig, FlagDefaults, Input, InputKind, Rect, Task, Tolerances};
pub use error::{exit, CliError};
pub use pipeline::{run, Report};
