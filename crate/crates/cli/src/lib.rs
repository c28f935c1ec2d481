//! Experiment runner for diffusion NSPE: configuration parsing, Monte Carlo
//! execution, and CSV / summary output.

pub mod config;
pub mod experiment;
pub mod output;

use std::path::{Path, PathBuf};

pub use config::{parse_config, preset, CombinationRule, ConfigErrors, ExperimentConfig, PRESETS};
pub use experiment::{
    execute, summary_text, write_outputs, Divergence, ExperimentError, ExperimentResult,
    STEADY_STATE_FRACTION,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_DIVERGENCE: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Overrides `output_dir` from the configuration.
    pub out_dir: Option<PathBuf>,
    /// Overrides `seed` from the configuration.
    pub seed: Option<u64>,
    pub allow_divergence: bool,
    pub workers: Option<usize>,
}

#[derive(Debug)]
pub struct Outcome {
    pub result: ExperimentResult,
    pub csv: PathBuf,
    pub summary: PathBuf,
    pub exit_code: i32,
}

/// Runs an experiment and writes its outputs. Divergent runs are excluded
/// from the curves; unless allowed they make the exit code
/// [`EXIT_DIVERGENCE`].
pub fn run_experiment(
    mut config: ExperimentConfig,
    opts: &RunOptions,
) -> Result<Outcome, ExperimentError> {
    if let Some(seed) = opts.seed {
        config.seed = seed;
    }
    let dir: &Path = opts.out_dir.as_deref().unwrap_or(&config.output_dir);
    let dir = dir.to_path_buf();
    let result = execute(&config, opts.workers)?;
    let (csv, summary) = write_outputs(&result, &dir)?;
    let exit_code = if result.divergences.is_empty() || opts.allow_divergence {
        EXIT_OK
    } else {
        EXIT_DIVERGENCE
    };
    Ok(Outcome {
        result,
        csv,
        summary,
        exit_code,
    })
}

/// Reads a configuration file, falling back to a built-in preset when no
/// file of that name exists. Returns the text and the default experiment name.
pub fn load_config_source(arg: &str) -> std::io::Result<(String, String)> {
    let path = Path::new(arg);
    if !path.exists() {
        if let Some(text) = preset(arg) {
            return Ok((text.to_owned(), arg.to_owned()));
        }
    }
    let text = std::fs::read_to_string(path)?;
    let stem = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("experiment")
        .to_owned();
    Ok((text, stem))
}
