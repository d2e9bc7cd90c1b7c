//! `ahp`: command-line surface over the decision pipeline and the math core.

mod args;
mod commands;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::Cli;
use commands::{CliError, Output};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let raw: Vec<String> = std::env::args().collect();
    let json = raw.iter().any(|a| a == "--json");
    let cli = match Cli::try_parse_from(&raw) {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            commands::emit(&mut std::io::stdout().lock(), e.to_string().trim_end());
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail(&Output { json }, CliError::Usage(usage_message(&e))),
    };
    let out = Output { json: cli.json };
    match commands::dispatch(cli.command, &out) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(&out, e),
    }
}

fn fail(out: &Output, e: CliError) -> ExitCode {
    commands::emit(&mut std::io::stderr().lock(), &format!("error: {e}"));
    out.json(&serde_json::json!({ "error": { "kind": e.kind(), "message": e.to_string(), "exit_code": e.code() } }));
    ExitCode::from(e.code())
}

/// Clap's rendering without its own leading "error: ".
fn usage_message(e: &clap::Error) -> String {
    let text = e.to_string();
    text.trim().trim_start_matches("error: ").to_string()
}
