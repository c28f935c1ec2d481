use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use nspe_core::algorithms::{step_size_bound, AlgoError, AlgorithmKind, RunSeed, Simulation};
use nspe_core::datagen::regressor_covariance;
use nspe_core::metrics::{monte_carlo_average, trace_run, MsdTrace, RunTrace};

use crate::config::{ExperimentConfig, ScenarioConfig};
use crate::output::{format_sig9, render_csv};

/// Fraction of final iterations averaged into the steady-state figure.
pub const STEADY_STATE_FRACTION: f64 = 0.1;

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("cannot start worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
    #[error("simulation failed: {0}")]
    Simulation(#[from] AlgoError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Divergence {
    pub algorithm: AlgorithmKind,
    pub run: usize,
    pub node: usize,
    pub iteration: usize,
}

/// Traces and diagnostics of a finished experiment.
#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    /// One per algorithm that had at least one non-divergent run, in
    /// configuration order.
    pub traces: Vec<MsdTrace>,
    pub divergences: Vec<Divergence>,
    /// Per-node `2 / lambda_max` of the regressor moment, or why it could
    /// not be computed.
    pub step_size_bounds: Vec<Result<f64, AlgoError>>,
}

impl ExperimentResult {
    pub fn trace(&self, kind: AlgorithmKind) -> Option<&MsdTrace> {
        self.traces.iter().find(|t| t.algorithm == kind)
    }
}

/// Runs every configured algorithm over `config.runs` Monte Carlo runs.
///
/// Runs execute on `workers` threads (default: available parallelism) and
/// are reduced in run order, so the result does not depend on scheduling.
pub fn execute(
    config: &ExperimentConfig,
    workers: Option<usize>,
) -> Result<ExperimentResult, ExperimentError> {
    let scenario = config.build_scenario();
    let topology = config.build_topology();
    let combination = config.build_combination(&topology);
    let step_sizes = config.step_sizes();
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        pool = pool.num_threads(w);
    }
    let pool = pool.build()?;

    let mut traces = Vec::new();
    let mut divergences = Vec::new();
    for &kind in &config.algorithms {
        let sim = Simulation {
            scenario: &scenario,
            topology: &topology,
            combination: &combination,
            kind,
            step_sizes: &step_sizes,
            iterations: config.iterations,
            init: config.init,
            oracle_stride: config.oracle_stride,
        };
        let results: Vec<Result<RunTrace, AlgoError>> = pool.install(|| {
            (0..config.runs)
                .into_par_iter()
                .map(|run| trace_run(&sim, RunSeed::new(config.seed, run as u64)))
                .collect()
        });
        let mut ok = Vec::with_capacity(results.len());
        for (run, result) in results.into_iter().enumerate() {
            match result {
                Ok(trace) => ok.push(trace),
                Err(AlgoError::DivergedAt { node, iteration }) => divergences.push(Divergence {
                    algorithm: kind,
                    run,
                    node,
                    iteration,
                }),
                Err(other) => return Err(other.into()),
            }
        }
        if !ok.is_empty() {
            traces.push(monte_carlo_average(&ok).expect("runs share algorithm and length"));
        }
    }
    let step_size_bounds = (0..config.n_nodes)
        .map(|k| step_size_bound(&regressor_covariance(&scenario, k)))
        .collect();
    Ok(ExperimentResult {
        config: config.clone(),
        traces,
        divergences,
        step_size_bounds,
    })
}

pub fn summary_text(result: &ExperimentResult) -> String {
    let c = &result.config;
    let dims = c.dims();
    let mut s = String::new();
    let _ = writeln!(s, "experiment: {}", c.name);
    let scenario = match &c.scenario {
        ScenarioConfig::Gaussian { regressor_stddev, .. } => {
            format!("gaussian regressors (stddev {})", format_sig9(*regressor_stddev))
        }
        ScenarioConfig::Spectrum(spec) => format!(
            "spectrum sensing: Q={} primary users, J={} basis functions, L={} channels on [{}, {}] Hz, gain jitter {}",
            spec.q_primary,
            spec.j_basis,
            spec.n_channels,
            format_sig9(spec.f_min),
            format_sig9(spec.f_max),
            format_sig9(spec.gain_jitter)
        ),
    };
    let _ = writeln!(s, "scenario: {scenario}");
    let _ = writeln!(
        s,
        "dimensions: N={} M_g={} M_l={} L={}",
        dims.n_nodes, dims.m_global, dims.m_local, dims.l_obs
    );
    let _ = writeln!(
        s,
        "topology: ring of degree {}, link drop probability {}, {} combination",
        c.ring_degree,
        format_sig9(c.link_drop_prob),
        c.combination.name()
    );
    let _ = writeln!(
        s,
        "iterations: {}  runs: {}  seed: {}",
        c.iterations, c.runs, c.seed
    );

    let _ = writeln!(s);
    let _ = writeln!(s, "step-size bound 2/lambda_max(E{{U_k^T U_k}}):");
    for (k, bound) in result.step_size_bounds.iter().enumerate() {
        let mu = c.mu[k];
        match bound {
            Ok(b) => {
                let verdict = if mu < *b {
                    "within bound"
                } else {
                    "EXCEEDS BOUND"
                };
                let _ = writeln!(
                    s,
                    "  node {:>3}: bound {}  mu {}  {verdict}",
                    k + 1,
                    format_sig9(*b),
                    format_sig9(mu)
                );
            }
            Err(e) => {
                let _ = writeln!(s, "  node {:>3}: unavailable ({e})", k + 1);
            }
        }
    }

    let _ = writeln!(s);
    let _ = writeln!(
        s,
        "steady-state MSD in dB (linear mean over the final {}% of iterations):",
        (STEADY_STATE_FRACTION * 100.0) as u32
    );
    for trace in &result.traces {
        let (g, l) = trace.steady_state(STEADY_STATE_FRACTION);
        let _ = writeln!(
            s,
            "  {:<20} global {:>12}  local {:>12}  ({} runs)",
            trace.algorithm.name(),
            format_sig9(g),
            format_sig9(l),
            trace.n_runs
        );
    }

    let _ = writeln!(s);
    if result.divergences.is_empty() {
        let _ = writeln!(s, "divergence incidents: none");
    } else {
        let _ = writeln!(s, "divergence incidents: {}", result.divergences.len());
        for d in &result.divergences {
            let _ = writeln!(
                s,
                "  {} run {}: node {} at iteration {}",
                d.algorithm,
                d.run,
                d.node + 1,
                d.iteration
            );
        }
    }
    s
}

/// Writes `<dir>/<name>.csv` and `<dir>/<name>.summary.txt`.
pub fn write_outputs(
    result: &ExperimentResult,
    dir: &Path,
) -> Result<(PathBuf, PathBuf), ExperimentError> {
    let io_err = |path: &Path| {
        let path = path.to_path_buf();
        move |source| ExperimentError::Io { path, source }
    };
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let csv = dir.join(format!("{}.csv", result.config.name));
    fs::write(&csv, render_csv(&result.traces)).map_err(io_err(&csv))?;
    let summary = dir.join(format!("{}.summary.txt", result.config.name));
    fs::write(&summary, summary_text(result)).map_err(io_err(&summary))?;
    Ok((csv, summary))
}
