use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{
    atc_step, cta_step, non_cooperative_step, AlgoError, AlgorithmKind, NormalEquations, StepSizes,
    Traffic,
};
use crate::datagen::sample_observation;
use crate::model::{NodeState, Observation, Scenario};
use crate::topology::{neighborhood, validate_combination, CombinationMatrix, Topology};

/// Independent random streams of one Monte Carlo run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Observations = 0,
    Links = 1,
    Init = 2,
}

/// `(master seed, run index)`. Every stream of a run is a distinct ChaCha
/// stream under the master seed, so runs are independent and any subset can
/// be replayed alone.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunSeed {
    pub master: u64,
    pub run: u64,
}

impl RunSeed {
    pub fn new(master: u64, run: u64) -> Self {
        Self { master, run }
    }

    pub fn rng(&self, stream: Stream) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master);
        rng.set_stream(1 + self.run.wrapping_mul(3).wrapping_add(stream as u64));
        rng
    }

    /// Stream for drawing the ground truth, shared by all runs under `master`.
    pub fn scenario_rng(master: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(master);
        rng.set_stream(0);
        rng
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum InitialGuess {
    #[default]
    Zero,
    /// i.i.d. `N(0, stddev^2)` entries; `psi` and `phi` start equal.
    Gaussian { stddev: f64 },
}

/// Everything needed to run one estimator over `iterations` time instants.
#[derive(Debug, Clone, Copy)]
pub struct Simulation<'a> {
    pub scenario: &'a Scenario,
    pub topology: &'a Topology,
    pub combination: &'a CombinationMatrix,
    pub kind: AlgorithmKind,
    pub step_sizes: &'a StepSizes,
    pub iterations: usize,
    pub init: InitialGuess,
    /// The centralized oracle re-solves its normal equations every this many
    /// iterations (and at the last one), holding the estimate in between.
    pub oracle_stride: usize,
}

impl Simulation<'_> {
    fn validate(&self) -> Result<(), AlgoError> {
        let n = self.scenario.dims.n_nodes;
        for (what, got) in [
            ("topology nodes", self.topology.n_nodes()),
            ("step sizes", self.step_sizes.len()),
        ] {
            if got != n {
                return Err(AlgoError::Count {
                    what,
                    expected: n,
                    got,
                });
            }
        }
        validate_combination(self.combination, self.topology)?;
        Ok(())
    }

    fn initial_states(&self, seed: RunSeed) -> Vec<NodeState> {
        let dims = &self.scenario.dims;
        match self.init {
            InitialGuess::Zero => vec![NodeState::zeros(dims); dims.n_nodes],
            InitialGuess::Gaussian { stddev } => {
                let mut rng = seed.rng(Stream::Init);
                let normal = Normal::new(0.0, stddev).expect("finite initial spread");
                (0..dims.n_nodes)
                    .map(|_| {
                        let psi = nalgebra::DVector::from_fn(dims.m_global, |_, _| {
                            normal.sample(&mut rng)
                        });
                        let xi = nalgebra::DVector::from_fn(dims.m_local, |_, _| {
                            normal.sample(&mut rng)
                        });
                        NodeState {
                            phi_global: psi.clone(),
                            psi_global: psi,
                            xi,
                        }
                    })
                    .collect()
            }
        }
    }
}

/// Runs one estimator for `sim.iterations` synchronous iterations.
///
/// `observer` sees the network state after every iteration `i = 1..=T`.
/// Observations and link failures come from separate streams, so every
/// algorithm sees the same data under the same seed.
pub fn run_simulation<F>(
    sim: &Simulation<'_>,
    seed: RunSeed,
    mut observer: F,
) -> Result<Traffic, AlgoError>
where
    F: FnMut(usize, &[NodeState]),
{
    sim.validate()?;
    let scenario = sim.scenario;
    let dims = scenario.dims;
    let n = dims.n_nodes;
    let mut obs_rng = seed.rng(Stream::Observations);
    let mut link_rng = seed.rng(Stream::Links);
    let mut states = sim.initial_states(seed);
    let mut traffic = Traffic::new(n);
    let mut normal_eq =
        (sim.kind == AlgorithmKind::CentralizedOracle).then(|| NormalEquations::new(dims));
    let stride = sim.oracle_stride.max(1);

    for iteration in 1..=sim.iterations {
        let neighborhoods: Vec<Vec<usize>> = (0..n)
            .map(|k| neighborhood(sim.topology, k, &mut link_rng))
            .collect();
        let observations: Vec<Observation> = (0..n)
            .map(|k| sample_observation(scenario, k, &mut obs_rng))
            .collect();
        let at = |e: AlgoError| match e {
            AlgoError::Diverged { node } => AlgoError::DivergedAt { node, iteration },
            other => other,
        };
        states = match sim.kind {
            AlgorithmKind::CtaDnspe => cta_step(
                &states,
                sim.combination,
                sim.topology,
                &observations,
                sim.step_sizes,
                &neighborhoods,
                &mut traffic,
            )
            .map_err(at)?,
            AlgorithmKind::AtcDnspe => atc_step(
                &states,
                sim.combination,
                sim.topology,
                &observations,
                sim.step_sizes,
                &neighborhoods,
                &mut traffic,
            )
            .map_err(at)?,
            AlgorithmKind::NonCooperative => {
                non_cooperative_step(&states, &observations, sim.step_sizes, &mut traffic)
                    .map_err(at)?
            }
            AlgorithmKind::CentralizedOracle => {
                let ne = normal_eq.as_mut().expect("oracle accumulator");
                for obs in &observations {
                    ne.add(obs)?;
                }
                if iteration % stride == 0 || iteration == sim.iterations {
                    match ne.solve() {
                        Ok(est) => states = split_augmented(&est, &dims),
                        Err(AlgoError::Singular { .. }) => {}
                        Err(other) => return Err(other),
                    }
                }
                states
            }
        };
        observer(iteration, &states);
    }
    Ok(traffic)
}

fn split_augmented(
    est: &nalgebra::DVector<f64>,
    dims: &crate::model::Dimensions,
) -> Vec<NodeState> {
    let global = est.rows(0, dims.m_global).into_owned();
    (0..dims.n_nodes)
        .map(|k| NodeState {
            psi_global: global.clone(),
            phi_global: global.clone(),
            xi: est.rows(dims.local_offset(k), dims.m_local).into_owned(),
        })
        .collect()
}
