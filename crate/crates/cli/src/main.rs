use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lrxfl_cli::config::{parse_override_args, Config};
use lrxfl_cli::{inspect, run, sweep, Result};

#[derive(Parser)]
#[command(name = "lrxfl", version, about = "Rule-based explainable federated learning experiments")]
struct Cli {
    /// Worker threads for client rounds (results do not depend on it).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured method and write a results bundle.
    Run {
        /// TOML config; defaults apply when omitted.
        #[arg(long, short)]
        config: Option<PathBuf>,
        /// Overrides as `--section.key value`.
        #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
        overrides: Vec<String>,
    },
    /// Run every sweep method at every noise level.
    Sweep {
        #[arg(long, short)]
        config: Option<PathBuf>,
        #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
        overrides: Vec<String>,
    },
    /// Print global and per-client rules from a bundle.
    Inspect {
        /// Bundle directory or results.json path.
        bundle: PathBuf,
        /// Restrict to these class names.
        #[arg(long = "class")]
        classes: Vec<String>,
    },
}

fn load(config: Option<PathBuf>, overrides: &[String]) -> Result<Config> {
    Config::load(config.as_deref(), &parse_override_args(overrides)?)
}

fn main_inner(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { config, overrides } => {
            let cfg = load(config, &overrides)?;
            let res = run(&cfg, cli.workers)?;
            let t = &res.global.test;
            println!(
                "{} on {} clients: model accuracy {:.4}, rule accuracy {:.4}, rule fidelity {:.4}",
                res.method.name(),
                cfg.federation.clients,
                t.model_accuracy,
                t.rule_accuracy,
                t.rule_fidelity
            );
            println!("bundle written to {}", cfg.output_dir.display());
        }
        Command::Sweep { config, overrides } => {
            let cfg = load(config, &overrides)?;
            for row in sweep(&cfg, cli.workers)? {
                println!(
                    "level {:.2} {:<13} model {:.4} rule {:.4} fidelity {:.4}",
                    row.level,
                    row.method.name(),
                    row.model_accuracy,
                    row.rule_accuracy,
                    row.rule_fidelity
                );
            }
            println!("summary written to {}", cfg.output_dir.join("summary.csv").display());
        }
        Command::Inspect { bundle, classes } => print!("{}", inspect(&bundle, &classes)?),
    }
    Ok(())
}

fn main() -> ExitCode {
    match main_inner(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
