use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use nspe_cli::{
    load_config_source, parse_config, run_experiment, RunOptions, EXIT_CONFIG, EXIT_IO, PRESETS,
};

#[derive(Parser)]
#[command(
    name = "nspe",
    version,
    about = "Diffusion LMS for node-specific parameter estimation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write `<out>/<name>.csv` and `<out>/<name>.summary.txt`.
    Run {
        /// Configuration file, or the name of a built-in preset.
        config: String,
        /// Output directory (overrides `output_dir`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Master seed (overrides `seed`).
        #[arg(long)]
        seed: Option<u64>,
        /// Exit 0 even if some runs diverged.
        #[arg(long)]
        allow_divergence: bool,
        /// Worker threads for Monte Carlo runs.
        #[arg(long)]
        workers: Option<usize>,
    },
    /// List built-in presets, or print one.
    Presets {
        /// Preset to print.
        name: Option<String>,
    },
    /// Parse and validate a configuration without running it.
    Validate { config: String },
}

fn load(arg: &str) -> Result<nspe_cli::ExperimentConfig, ExitCode> {
    let (text, name) = load_config_source(arg).map_err(|e| {
        eprintln!("error: cannot read {arg}: {e}");
        ExitCode::from(EXIT_IO as u8)
    })?;
    parse_config(&text, &name).map_err(|errors| {
        eprintln!("error: invalid configuration {arg}:\n{errors}");
        ExitCode::from(EXIT_CONFIG as u8)
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            config,
            out,
            seed,
            allow_divergence,
            workers,
        } => {
            let config = match load(&config) {
                Ok(c) => c,
                Err(code) => return code,
            };
            if workers == Some(0) {
                eprintln!("error: --workers must be at least 1");
                return ExitCode::from(EXIT_CONFIG as u8);
            }
            let opts = RunOptions {
                out_dir: out,
                seed,
                allow_divergence,
                workers,
            };
            match run_experiment(config, &opts) {
                Ok(outcome) => {
                    print!("{}", nspe_cli::summary_text(&outcome.result));
                    println!();
                    println!("wrote {}", outcome.csv.display());
                    println!("wrote {}", outcome.summary.display());
                    if !outcome.result.divergences.is_empty() && !allow_divergence {
                        eprintln!("error: divergence detected (use --allow-divergence to accept)");
                    }
                    ExitCode::from(outcome.exit_code as u8)
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    match e {
                        nspe_cli::ExperimentError::Io { .. } => ExitCode::from(EXIT_IO as u8),
                        _ => ExitCode::FAILURE,
                    }
                }
            }
        }
        Command::Presets { name: None } => {
            for (name, _) in PRESETS {
                println!("{name}");
            }
            ExitCode::SUCCESS
        }
        Command::Presets { name: Some(name) } => match nspe_cli::preset(&name) {
            Some(text) => {
                print!("{text}");
                ExitCode::SUCCESS
            }
            None => {
                eprintln!("error: no preset named `{name}`");
                ExitCode::from(EXIT_CONFIG as u8)
            }
        },
        Command::Validate { config } => match load(&config) {
            Ok(c) => {
                println!(
                    "ok: {} ({} algorithms, {} iterations, {} runs)",
                    c.name,
                    c.algorithms.len(),
                    c.iterations,
                    c.runs
                );
                ExitCode::SUCCESS
            }
            Err(code) => code,
        },
    }
}
