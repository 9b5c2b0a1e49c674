//! Batch front end: JSON config in, JSON/CSV reports out.
//!
//! Exit codes: 0 success, 2 analogy rejected, 3 validation error, 4 numerical failure.

mod config;
mod ingest;
mod run;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use config::{AnalysisConfig, BispatialBlock, Mode, ModelBlock, PriorSpec};
pub use ingest::ingest_csv;
pub use run::{error_record, load_config, run, Overrides, RunOutcome};

#[derive(Debug, Parser)]
#[command(name = "ioi", version, about = "Post-data inference from batch configs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the analysis described by a config file.
    Run {
        config: PathBuf,
        /// Override the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the config's output path.
        #[arg(long)]
        out: Option<String>,
    },
    /// Check a config without running it.
    Validate { config: PathBuf },
}

/// Runs the parsed command, printing to stdout/stderr, and returns the exit code.
pub fn execute(cli: Cli) -> i32 {
    let result = match cli.command {
        Command::Run { config, seed, out } => run(&config, &Overrides { seed, output_path: out }).map(|o| {
            let mut msg = serde_json::json!({ "status": "ok", "report": o.report_path.display().to_string() });
            if let Some(d) = o.draws_path {
                msg["draws"] = serde_json::Value::String(d.display().to_string());
            }
            println!("{msg}");
        }),
        Command::Validate { config } => load_config(&config, &Overrides::default()).map(|c| {
            println!("{}", serde_json::json!({ "status": "ok", "mode": c.mode }));
        }),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", error_record(&e));
            e.exit_code()
        }
    }
}
