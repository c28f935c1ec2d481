//! Network mean-square deviation and Monte Carlo learning curves.
//!
//! Runs are averaged on the linear scale and converted to dB afterwards, so
//! a curve estimates `E{MSD}` rather than the mean of log-MSD.

use nalgebra::DVector;

use crate::algorithms::{
    run_simulation, AlgoError, AlgorithmKind, GlobalEstimate, RunSeed, Simulation,
};
use crate::model::NodeState;

/// Reported instead of `-inf` for an exactly zero deviation.
pub const DB_FLOOR: f64 = -320.0;

pub fn to_db(linear: f64) -> f64 {
    if linear <= 0.0 {
        DB_FLOOR
    } else {
        (10.0 * linear.log10()).max(DB_FLOOR)
    }
}

pub fn from_db(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

fn estimate(state: &NodeState, which: GlobalEstimate) -> &DVector<f64> {
    match which {
        GlobalEstimate::Psi => &state.psi_global,
        GlobalEstimate::Phi => &state.phi_global,
    }
}

/// `(1/N) sum_k ||est_k - w||^2` on the linear scale.
pub fn network_msd_global_linear(
    states: &[NodeState],
    which: GlobalEstimate,
    w_true: &DVector<f64>,
) -> f64 {
    let total: f64 = states
        .iter()
        .map(|s| (estimate(s, which) - w_true).norm_squared())
        .sum();
    total / states.len() as f64
}

/// `(1/N) sum_k ||xi_k - xi_k^true||^2` on the linear scale.
pub fn network_msd_local_linear(states: &[NodeState], xi_true: &[DVector<f64>]) -> f64 {
    let total: f64 = states
        .iter()
        .zip(xi_true)
        .map(|(s, truth)| (&s.xi - truth).norm_squared())
        .sum();
    total / states.len() as f64
}

/// Network MSD of the global estimates, in dB.
pub fn network_msd_global(
    states: &[NodeState],
    which: GlobalEstimate,
    w_true: &DVector<f64>,
) -> f64 {
    to_db(network_msd_global_linear(states, which, w_true))
}

/// Network MSD of the local estimates, in dB.
pub fn network_msd_local(states: &[NodeState], xi_true: &[DVector<f64>]) -> f64 {
    to_db(network_msd_local_linear(states, xi_true))
}

/// Linear-scale MSD per iteration of a single run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub algorithm: AlgorithmKind,
    pub global: Vec<f64>,
    pub local: Vec<f64>,
}

/// Runs `sim` once and records both network MSDs after every iteration.
pub fn trace_run(sim: &Simulation<'_>, seed: RunSeed) -> Result<RunTrace, AlgoError> {
    let which = sim.kind.operative();
    let mut global = Vec::with_capacity(sim.iterations);
    let mut local = Vec::with_capacity(sim.iterations);
    run_simulation(sim, seed, |_, states| {
        global.push(network_msd_global_linear(
            states,
            which,
            &sim.scenario.w_global,
        ));
        local.push(network_msd_local_linear(states, &sim.scenario.xi_local));
    })?;
    Ok(RunTrace {
        algorithm: sim.kind,
        global,
        local,
    })
}

/// Monte Carlo learning curve, in dB.
#[derive(Debug, Clone, PartialEq)]
pub struct MsdTrace {
    pub algorithm: AlgorithmKind,
    pub iterations: usize,
    pub msd_global_db: Vec<f64>,
    pub msd_local_db: Vec<f64>,
    pub n_runs: usize,
}

impl MsdTrace {
    /// Mean over the final `fraction` of iterations (at least one),
    /// averaged on the linear scale: `(global_db, local_db)`.
    pub fn steady_state(&self, fraction: f64) -> (f64, f64) {
        if self.iterations == 0 {
            return (f64::NAN, f64::NAN);
        }
        let tail = ((self.iterations as f64 * fraction).ceil() as usize).clamp(1, self.iterations);
        let mean_db = |v: &[f64]| {
            let s = &v[v.len() - tail..];
            to_db(s.iter().map(|&x| from_db(x)).sum::<f64>() / s.len() as f64)
        };
        (mean_db(&self.msd_global_db), mean_db(&self.msd_local_db))
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricsError {
    #[error("no runs to average")]
    NoRuns,
    #[error("run {run} is for {found}, expected {expected}")]
    MixedAlgorithms {
        run: usize,
        expected: AlgorithmKind,
        found: AlgorithmKind,
    },
    #[error("run {run} has {found} iterations, expected {expected}")]
    MixedLengths {
        run: usize,
        expected: usize,
        found: usize,
    },
}

/// Averages per-run linear MSDs iteration by iteration, then converts to dB.
pub fn monte_carlo_average(runs: &[RunTrace]) -> Result<MsdTrace, MetricsError> {
    let first = runs.first().ok_or(MetricsError::NoRuns)?;
    let t = first.global.len();
    for (run, r) in runs.iter().enumerate() {
        if r.algorithm != first.algorithm {
            return Err(MetricsError::MixedAlgorithms {
                run,
                expected: first.algorithm,
                found: r.algorithm,
            });
        }
        for found in [r.global.len(), r.local.len()] {
            if found != t {
                return Err(MetricsError::MixedLengths {
                    run,
                    expected: t,
                    found,
                });
            }
        }
    }
    let average = |pick: fn(&RunTrace) -> &[f64]| -> Vec<f64> {
        let mut acc = vec![0.0; t];
        for r in runs {
            for (a, v) in acc.iter_mut().zip(pick(r)) {
                *a += v;
            }
        }
        acc.into_iter()
            .map(|s| to_db(s / runs.len() as f64))
            .collect()
    };
    Ok(MsdTrace {
        algorithm: first.algorithm,
        iterations: t,
        msd_global_db: average(|r| &r.global),
        msd_local_db: average(|r| &r.local),
        n_runs: runs.len(),
    })
}
