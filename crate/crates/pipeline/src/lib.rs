//! Resumable AHP decision pipeline: configuration, staged elicitation from
//! a virtual expert panel, aggregation, synthesis and reporting.

pub mod backend;
pub mod config;
pub mod error;
pub mod fixture;
pub mod report;
pub mod runner;
pub mod session;

pub use backend::build_backend;
pub use config::PipelineConfig;
pub use error::{ErrorClass, PipelineError};
pub use report::{synthesize, DecisionReport};
pub use runner::Runner;
pub use session::{SessionState, Stage};
