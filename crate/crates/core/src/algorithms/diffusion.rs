use nalgebra::DVector;

use super::{lms_adapt, AlgoError, StepSizes, DIVERGENCE_NORM};
use crate::model::{NodeState, Observation};
use crate::topology::{CombinationMatrix, Topology};

/// Work done by one node, accumulated over iterations.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct NodeTraffic {
    /// Scalar parameters written by adaptation or combination.
    pub params_updated: u64,
    /// Vectors broadcast to neighbours.
    pub messages_sent: u64,
    /// Scalars carried by those broadcasts.
    pub floats_sent: u64,
}

/// Per-node instrumentation counters.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Traffic {
    pub nodes: Vec<NodeTraffic>,
}

impl Traffic {
    pub fn new(n_nodes: usize) -> Self {
        Self {
            nodes: vec![NodeTraffic::default(); n_nodes],
        }
    }

    fn node(&mut self, k: usize) -> &mut NodeTraffic {
        if self.nodes.len() <= k {
            self.nodes.resize(k + 1, NodeTraffic::default());
        }
        &mut self.nodes[k]
    }
}

/// The only channel between nodes: each node publishes its adapted global
/// estimate once per iteration and combiners read from here.
struct Broadcast<'a> {
    outbox: Vec<&'a DVector<f64>>,
}

impl<'a> Broadcast<'a> {
    fn publish(vectors: impl Iterator<Item = &'a DVector<f64>>, traffic: &mut Traffic) -> Self {
        let outbox: Vec<_> = vectors.collect();
        for (k, v) in outbox.iter().enumerate() {
            let t = traffic.node(k);
            t.messages_sent += 1;
            t.floats_sent += v.len() as u64;
        }
        Self { outbox }
    }

    fn combine(&self, row: &[(usize, f64)]) -> DVector<f64> {
        let (first, rest) = row
            .split_first()
            .expect("a neighbourhood contains its own node");
        let mut phi = self.outbox[first.0] * first.1;
        for &(j, w) in rest {
            phi.axpy(w, self.outbox[j], 1.0);
        }
        phi
    }
}

fn check_inputs(
    states: &[NodeState],
    combination: &CombinationMatrix,
    topology: &Topology,
    observations: &[Observation],
    mu: &StepSizes,
    neighborhoods: &[Vec<usize>],
) -> Result<(), AlgoError> {
    let n = states.len();
    for (what, got) in [
        ("combination matrix rows", combination.n_nodes()),
        ("topology nodes", topology.n_nodes()),
        ("observations", observations.len()),
        ("step sizes", mu.len()),
        ("neighbourhoods", neighborhoods.len()),
    ] {
        if got != n {
            return Err(AlgoError::Count {
                what,
                expected: n,
                got,
            });
        }
    }
    check_observation_order(observations)
}

fn check_observation_order(observations: &[Observation]) -> Result<(), AlgoError> {
    match observations.iter().enumerate().find(|(k, o)| o.node != *k) {
        Some((index, o)) => Err(AlgoError::ObservationOrder {
            index,
            node: o.node,
        }),
        None => Ok(()),
    }
}

fn check_divergence(states: &[NodeState]) -> Result<(), AlgoError> {
    match states
        .iter()
        .position(|s| !s.is_finite() || s.max_norm() > DIVERGENCE_NORM)
    {
        Some(node) => Err(AlgoError::Diverged { node }),
        None => Ok(()),
    }
}

/// One synchronous Combine-then-Adapt iteration.
///
/// Every node fuses the previous iteration's broadcast `psi_j` over its
/// current neighbourhood, then runs LMS from the fused vector and its own
/// local estimate. Dropped links rescale the surviving weights.
pub fn cta_step(
    states: &[NodeState],
    combination: &CombinationMatrix,
    topology: &Topology,
    observations: &[Observation],
    mu: &StepSizes,
    neighborhoods: &[Vec<usize>],
    traffic: &mut Traffic,
) -> Result<Vec<NodeState>, AlgoError> {
    check_inputs(
        states,
        combination,
        topology,
        observations,
        mu,
        neighborhoods,
    )?;
    let broadcast = Broadcast::publish(states.iter().map(|s| &s.psi_global), traffic);
    let next = states
        .iter()
        .enumerate()
        .map(|(k, state)| {
            let row = combination.active_row(k, &neighborhoods[k], topology);
            let phi = broadcast.combine(&row);
            let (psi, xi) = lms_adapt(&phi, &state.xi, &observations[k], mu.get(k))?;
            traffic.node(k).params_updated += (2 * phi.len() + xi.len()) as u64;
            Ok(NodeState {
                psi_global: psi,
                xi,
                phi_global: phi,
            })
        })
        .collect::<Result<Vec<_>, AlgoError>>()?;
    check_divergence(&next)?;
    Ok(next)
}

/// One synchronous Adapt-then-Combine iteration.
///
/// Every node runs LMS from its carried combiner output `phi_k`, broadcasts
/// the adapted `psi_k`, then fuses the fresh `psi_j` over its neighbourhood
/// into the next `phi_k`.
pub fn atc_step(
    states: &[NodeState],
    combination: &CombinationMatrix,
    topology: &Topology,
    observations: &[Observation],
    mu: &StepSizes,
    neighborhoods: &[Vec<usize>],
    traffic: &mut Traffic,
) -> Result<Vec<NodeState>, AlgoError> {
    check_inputs(
        states,
        combination,
        topology,
        observations,
        mu,
        neighborhoods,
    )?;
    let adapted = states
        .iter()
        .enumerate()
        .map(|(k, state)| lms_adapt(&state.phi_global, &state.xi, &observations[k], mu.get(k)))
        .collect::<Result<Vec<_>, AlgoError>>()?;
    let broadcast = Broadcast::publish(adapted.iter().map(|(psi, _)| psi), traffic);
    let next: Vec<NodeState> = adapted
        .iter()
        .enumerate()
        .map(|(k, (psi, xi))| {
            let row = combination.active_row(k, &neighborhoods[k], topology);
            let phi = broadcast.combine(&row);
            traffic.node(k).params_updated += (2 * phi.len() + xi.len()) as u64;
            NodeState {
                psi_global: psi.clone(),
                xi: xi.clone(),
                phi_global: phi,
            }
        })
        .collect();
    check_divergence(&next)?;
    Ok(next)
}

/// Independent LMS at every node, no communication. `phi` mirrors `psi`.
pub fn non_cooperative_step(
    states: &[NodeState],
    observations: &[Observation],
    mu: &StepSizes,
    traffic: &mut Traffic,
) -> Result<Vec<NodeState>, AlgoError> {
    if observations.len() != states.len() {
        return Err(AlgoError::Count {
            what: "observations",
            expected: states.len(),
            got: observations.len(),
        });
    }
    check_observation_order(observations)?;
    let next = states
        .iter()
        .enumerate()
        .map(|(k, state)| {
            let (psi, xi) = lms_adapt(&state.psi_global, &state.xi, &observations[k], mu.get(k))?;
            traffic.node(k).params_updated += (psi.len() + xi.len()) as u64;
            Ok(NodeState {
                phi_global: psi.clone(),
                psi_global: psi,
                xi,
            })
        })
        .collect::<Result<Vec<_>, AlgoError>>()?;
    check_divergence(&next)?;
    Ok(next)
}
