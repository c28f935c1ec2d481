//! Node-specific parameter estimation over adaptive networks.
//!
//! Each node `k` observes `d_k = U_global w + U_local xi_k + v_k`, where `w`
//! is shared by the whole network and `xi_k` is private to the node. The
//! diffusion estimators in [`algorithms`] let nodes cooperate on `w` while
//! each node tracks its own `xi_k` alone:
//!
//! * **CTA** (combine then adapt): fuse neighbours' global estimates, then
//!   take an LMS step.
//! * **ATC** (adapt then combine): take an LMS step, then fuse.
//!
//! [`datagen`] synthesises observations, including a cognitive-radio
//! spectrum-sensing scenario; [`metrics`] turns Monte Carlo runs into
//! mean-square-deviation learning curves.

pub mod algorithms;
pub mod datagen;
pub mod linalg;
pub mod metrics;
pub mod model;
pub mod topology;

pub use algorithms::{
    atc_step, centralized_solve, cta_step, lms_adapt, non_cooperative_step, run_simulation,
    step_size_bound, AlgoError, AlgorithmKind, GlobalEstimate, InitialGuess, RunSeed, Simulation,
    StepSizes, Traffic,
};
pub use datagen::{make_scenario, sample_observation, RegressorSpec, SpectrumSpec};
pub use metrics::{monte_carlo_average, trace_run, MsdTrace, RunTrace};
pub use model::{
    augmented_regressor, augmented_truth, Dimensions, NodeState, Observation, Scenario,
};
pub use topology::{
    metropolis_weights, ring_topology, validate_combination, CombinationMatrix, Topology,
};
