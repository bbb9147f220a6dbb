mod commands;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use serde::{Deserialize, Serialize};

use commands::Command;
use error::CliError;
use output::OutDir;

/// Reproducible experiments on the irrational torus: lattice counting,
/// cubic NLS evolution, dispersive estimates, X^{s,b} norms and
/// Sobolev growth.
#[derive(Debug, Parser)]
#[command(name = "toruslab", version)]
struct Cli {
    /// Output directory; created if missing.
    #[arg(long, global = true, default_value = "toruslab-out")]
    out: PathBuf,
    /// Worker thread cap.
    #[arg(long, global = true, env = "TORUSLAB_THREADS")]
    threads: Option<usize>,
    /// Exit with status 4 when a command's verdict fails.
    #[arg(long = "assert", global = true)]
    assert: bool,
    /// Rerun the command recorded in a config.json.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Option<Command>,
}

/// Everything needed to reproduce a run; written as config.json.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(flatten)]
    pub command: Command,
    pub assert: bool,
    pub output: PathBuf,
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be >= 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    let cfg = match (cli.command, cli.config) {
        (Some(_), Some(_)) => return Err(CliError::Config("--config cannot be combined with a command".into())),
        (Some(command), None) => RunConfig { command, assert: cli.assert, output: cli.out },
        (None, Some(path)) => {
            let text = std::fs::read_to_string(&path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            let mut cfg: RunConfig = serde_json::from_str(&text)?;
            cfg.output = cli.out;
            cfg.assert |= cli.assert;
            cfg
        }
        (None, None) => return Err(CliError::Config("no command given; see --help".into())),
    };
    let out = OutDir::create(&cfg.output)?;
    let _ = std::fs::remove_file(out.path().join("error.json"));
    out.json("config.json", &cfg)?;
    let verdict = commands::execute(&cfg.command, &out)?;
    println!("{}", out.path().join("summary.json").display());
    match verdict {
        Some(false) if cfg.assert => Err(CliError::Assertion(format!("{} verdict failed", cfg.command.name()))),
        _ => Ok(()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            let err = CliError::Config(e.kind().to_string());
            eprintln!("{}", serde_json::to_string(&err.report()).unwrap());
            return ExitCode::from(err.exit_code() as u8);
        }
    };
    let out = cli.out.clone();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let report = err.report();
            eprintln!("{}", serde_json::to_string(&report).unwrap());
            if out.is_dir() {
                let _ = std::fs::write(out.join("error.json"), serde_json::to_string_pretty(&report).unwrap() + "\n");
            }
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
