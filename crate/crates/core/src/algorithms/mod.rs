//! Estimation engines.
//!
//! Every node runs an LMS filter over its full parameter vector
//! `col{w, xi_k}`. The cooperative variants additionally fuse the global
//! part with neighbours' estimates, either before adapting (CTA) or after
//! (ATC). Local parts are never exchanged.

mod bound;
mod centralized;
mod diffusion;
mod simulation;

pub use bound::step_size_bound;
pub use centralized::{centralized_solve, NormalEquations};
pub use diffusion::{atc_step, cta_step, non_cooperative_step, NodeTraffic, Traffic};
pub use simulation::{run_simulation, InitialGuess, RunSeed, Simulation, Stream};

use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;

use crate::model::{ModelError, Observation};
use crate::topology::CombinationViolation;

/// A state vector whose norm exceeds this is treated as diverged.
pub const DIVERGENCE_NORM: f64 = 1e8;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AlgoError {
    #[error("node {} diverged", .node + 1)]
    Diverged { node: usize },
    #[error("node {} diverged at iteration {iteration}", .node + 1)]
    DivergedAt { node: usize, iteration: usize },
    #[error("normal equations are singular: rank {rank} of {dim}")]
    Singular { rank: usize, dim: usize },
    #[error("regressor covariance has no positive eigenvalue (lambda_max = {0})")]
    DegenerateRegressors(f64),
    #[error("regressor covariance is not symmetric (max asymmetry {0})")]
    NotSymmetric(f64),
    #[error("step size of node {} must be positive and finite, got {value}", .node + 1)]
    StepSize { node: usize, value: f64 },
    #[error("expected {expected} {what}, got {got}")]
    Count {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("observation {index} belongs to node {}", .node + 1)]
    ObservationOrder { index: usize, node: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("invalid combination matrix: {0}")]
    Combination(#[from] CombinationViolation),
}

/// Which estimator to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AlgorithmKind {
    CtaDnspe,
    AtcDnspe,
    NonCooperative,
    CentralizedOracle,
}

impl AlgorithmKind {
    pub const ALL: [AlgorithmKind; 4] = [
        AlgorithmKind::CtaDnspe,
        AlgorithmKind::AtcDnspe,
        AlgorithmKind::NonCooperative,
        AlgorithmKind::CentralizedOracle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AlgorithmKind::CtaDnspe => "cta_dnspe",
            AlgorithmKind::AtcDnspe => "atc_dnspe",
            AlgorithmKind::NonCooperative => "non_cooperative",
            AlgorithmKind::CentralizedOracle => "centralized_oracle",
        }
    }

    /// Which buffer holds the node's working global estimate. ATC carries
    /// the combiner output between iterations; everything else the adapted
    /// vector.
    pub fn operative(self) -> GlobalEstimate {
        match self {
            AlgorithmKind::AtcDnspe => GlobalEstimate::Phi,
            _ => GlobalEstimate::Psi,
        }
    }
}

impl fmt::Display for AlgorithmKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown algorithm `{0}` (expected cta_dnspe, atc_dnspe, non_cooperative or centralized_oracle)")]
pub struct UnknownAlgorithm(pub String);

impl FromStr for AlgorithmKind {
    type Err = UnknownAlgorithm;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| UnknownAlgorithm(s.to_owned()))
    }
}

/// Selects `psi` or `phi` from a [`crate::model::NodeState`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GlobalEstimate {
    Psi,
    Phi,
}

/// Per-node LMS step sizes.
#[derive(Debug, Clone, PartialEq)]
pub struct StepSizes(Vec<f64>);

impl StepSizes {
    pub fn new(mu: Vec<f64>) -> Result<Self, AlgoError> {
        if let Some((node, &value)) = mu
            .iter()
            .enumerate()
            .find(|(_, m)| !(m.is_finite() && **m > 0.0))
        {
            return Err(AlgoError::StepSize { node, value });
        }
        Ok(Self(mu))
    }

    pub fn uniform(n_nodes: usize, mu: f64) -> Result<Self, AlgoError> {
        Self::new(vec![mu; n_nodes])
    }

    pub fn get(&self, k: usize) -> f64 {
        self.0[k]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// One LMS update of a node's stacked estimate `col{phi, xi}`:
///
/// ```text
/// e       = d - U_global phi - U_local xi
/// psi     = phi + mu U_global^T e
/// xi_new  = xi  + mu U_local^T e
/// ```
///
/// Inputs or outputs that are not finite are reported as divergence of
/// `obs.node`.
pub fn lms_adapt(
    phi_global: &DVector<f64>,
    xi: &DVector<f64>,
    obs: &Observation,
    mu: f64,
) -> Result<(DVector<f64>, DVector<f64>), AlgoError> {
    let diverged = AlgoError::Diverged { node: obs.node };
    if !(phi_global.iter().chain(xi.iter()).all(|v| v.is_finite()) && mu.is_finite()) {
        return Err(diverged);
    }
    let mut e = obs.d.clone();
    e.gemv(-1.0, &obs.u_global, phi_global, 1.0);
    e.gemv(-1.0, &obs.u_local, xi, 1.0);
    let mut psi = phi_global.clone();
    psi.gemv_tr(mu, &obs.u_global, &e, 1.0);
    let mut xi_new = xi.clone();
    xi_new.gemv_tr(mu, &obs.u_local, &e, 1.0);
    if psi.iter().chain(xi_new.iter()).all(|v| v.is_finite()) {
        Ok((psi, xi_new))
    } else {
        Err(diverged)
    }
}
