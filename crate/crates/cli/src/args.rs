use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "ahp",
    version,
    about = "Analytic hierarchy process decisions with a virtual expert panel"
)]
pub struct Cli {
    /// Machine-readable JSON on standard output; human text moves to standard error.
    #[arg(long, global = true)]
    pub json: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the whole pipeline from a configuration file.
    Run(RunArgs),
    /// Continue an interrupted session, or re-emit the report of a finished one.
    Resume(ResumeArgs),
    /// Priorities and consistency of one pairwise matrix (CSV).
    Compute(ComputeArgs),
    /// Check configuration, session and matrix files without changing them.
    Validate(ValidateArgs),
    /// Print the decision report of a session.
    Report(ReportArgs),
    /// Price a session's conversations.
    EstimateCost(CostArgs),
    /// Print a session's hierarchy as an outline or a graph description.
    ExportTree(ExportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BackendChoice {
    Live,
    Replay,
    Scripted,
}

/// Overrides applied on top of the stored configuration.
#[derive(Debug, Args)]
pub struct Overrides {
    /// Backend kind, replacing the configured one.
    #[arg(long, value_enum)]
    pub backend: Option<BackendChoice>,
    /// Abort at aggregation when an aggregate matrix is inconsistent.
    #[arg(long)]
    pub strict_consistency: bool,
    /// Concurrent experts per elicitation stage.
    #[arg(long, value_name = "N")]
    pub parallelism: Option<usize>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Pipeline configuration (TOML).
    #[arg(long, value_name = "FILE")]
    pub config: PathBuf,
    /// Session file; defaults to session.json in the output directory.
    #[arg(long, value_name = "FILE")]
    pub session: Option<PathBuf>,
    /// Directory for the session and report files.
    #[arg(long, value_name = "DIR", default_value = ".")]
    pub out: PathBuf,
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, Args)]
pub struct ResumeArgs {
    /// Session file written by `run`.
    #[arg(long, value_name = "FILE")]
    pub session: PathBuf,
    /// Directory for the report files; defaults to the session's directory.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, Args)]
pub struct ComputeArgs {
    /// CSV matrix: header row of labels, then one labelled row per item.
    pub matrix: PathBuf,
    /// Consistency ratio threshold.
    #[arg(long, default_value_t = 0.1)]
    pub threshold: f64,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Pipeline configuration (TOML) to check.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Session file to check against its own configuration and report.
    #[arg(long, value_name = "FILE")]
    pub session: Option<PathBuf>,
    /// CSV matrices to check for shape, positivity and reciprocity.
    pub matrices: Vec<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Session file to read.
    #[arg(long, value_name = "FILE")]
    pub session: PathBuf,
    /// Also write report.json and report.md into this directory.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CostArgs {
    /// Session file to read.
    #[arg(long, value_name = "FILE")]
    pub session: PathBuf,
    /// Blended dollars per 1k tokens; overrides the session's pricing.
    #[arg(long, value_name = "USD", conflicts_with_all = ["input", "output"])]
    pub blended: Option<f64>,
    /// Dollars per 1k prompt tokens.
    #[arg(long, value_name = "USD", requires = "output")]
    pub input: Option<f64>,
    /// Dollars per 1k reply tokens.
    #[arg(long, value_name = "USD", requires = "input")]
    pub output: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TreeFormat {
    Outline,
    Graph,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    /// Session file to read.
    #[arg(long, value_name = "FILE")]
    pub session: PathBuf,
    /// Outline text or a graph description.
    #[arg(long, value_enum, default_value_t = TreeFormat::Outline)]
    pub format: TreeFormat,
}
