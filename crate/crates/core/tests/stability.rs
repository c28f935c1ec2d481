mod oracles;

use nalgebra::DVector;
use nspe_core::datagen::regressor_covariance;
use nspe_core::{
    make_scenario, ring_topology, run_simulation, step_size_bound, AlgoError, AlgorithmKind,
    CombinationMatrix, Dimensions, InitialGuess, NodeState, RegressorSpec, RunSeed, Scenario,
    Simulation, StepSizes, Topology,
};
use oracles::{dense_step_bound, gaussian_matrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn bound_matches_dense_eigensolver() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..50 {
        let m = rng.gen_range(1..12);
        let a = gaussian_matrix(m + rng.gen_range(0..6), m, &mut rng);
        let r = a.transpose() * &a;
        let got = step_size_bound(&r).unwrap();
        let expected = dense_step_bound(&r);
        assert!(
            ((got - expected) / expected).abs() < 1e-8,
            "{got} vs {expected}"
        );
    }
}

fn gaussian_setup(n: usize) -> (Scenario, Topology, CombinationMatrix, f64) {
    let dims = Dimensions::new(n, 2, 1, 12).unwrap();
    let scenario = make_scenario(
        RegressorSpec::Gaussian { stddev: 1.0 },
        dims,
        vec![0.1; n],
        &mut RunSeed::scenario_rng(3),
    )
    .unwrap();
    let topology = ring_topology(n, 2).unwrap();
    let combination = CombinationMatrix::uniform(&topology);
    let bound = step_size_bound(&regressor_covariance(&scenario, 0)).unwrap();
    (scenario, topology, combination, bound)
}

fn trajectory(sim: &Simulation<'_>, seed: RunSeed) -> Result<Vec<Vec<NodeState>>, AlgoError> {
    let mut out = Vec::new();
    run_simulation(sim, seed, |_, s| out.push(s.to_vec()))?;
    Ok(out)
}

#[test]
fn mean_error_shrinks_monotonically() {
    let (scenario, topology, combination, bound) = gaussian_setup(5);
    let mu = StepSizes::uniform(5, 0.1 * bound).unwrap();
    let sim = Simulation {
        scenario: &scenario,
        topology: &topology,
        combination: &combination,
        kind: AlgorithmKind::CtaDnspe,
        step_sizes: &mu,
        iterations: 60,
        init: InitialGuess::Zero,
        oracle_stride: 1,
    };
    let checkpoints = [0usize, 5, 10, 20, 30, 45, 59];
    let mut mean_err = vec![DVector::<f64>::zeros(2); checkpoints.len()];
    let runs = 200;
    for run in 0..runs {
        let traj = trajectory(&sim, RunSeed::new(1, run)).unwrap();
        for (c, &i) in checkpoints.iter().enumerate() {
            mean_err[c] += (&traj[i][0].psi_global - &scenario.w_global) / runs as f64;
        }
    }
    let norms: Vec<f64> = mean_err.iter().map(|e| e.norm()).collect();
    assert!(norms.windows(2).all(|w| w[1] < w[0]), "{norms:?}");
}

#[test]
fn step_beyond_bound_diverges() {
    let (scenario, topology, combination, bound) = gaussian_setup(5);
    let mu = StepSizes::uniform(5, 3.0 * bound).unwrap();
    let sim = Simulation {
        scenario: &scenario,
        topology: &topology,
        combination: &combination,
        kind: AlgorithmKind::AtcDnspe,
        step_sizes: &mu,
        iterations: 10_000,
        init: InitialGuess::Zero,
        oracle_stride: 1,
    };
    for run in 0..10 {
        assert!(matches!(
            run_simulation(&sim, RunSeed::new(2, run), |_, _| {}),
            Err(AlgoError::DivergedAt { .. })
        ));
    }
}

#[test]
fn identity_combination_reduces_to_non_cooperative() {
    let (scenario, topology, _, bound) = gaussian_setup(4);
    let identity = CombinationMatrix::identity(4);
    let mu = StepSizes::uniform(4, 0.3 * bound).unwrap();
    let sim = |kind| Simulation {
        scenario: &scenario,
        topology: &topology,
        combination: &identity,
        kind,
        step_sizes: &mu,
        iterations: 200,
        init: InitialGuess::Gaussian { stddev: 1.0 },
        oracle_stride: 1,
    };
    let seed = RunSeed::new(7, 0);
    let reference = trajectory(&sim(AlgorithmKind::NonCooperative), seed).unwrap();
    for kind in [AlgorithmKind::CtaDnspe, AlgorithmKind::AtcDnspe] {
        let t = trajectory(&sim(kind), seed).unwrap();
        for (a, b) in t.iter().zip(&reference) {
            for (x, y) in a.iter().zip(b) {
                assert_eq!(x.psi_global, y.psi_global);
                assert_eq!(x.xi, y.xi);
            }
        }
    }
}

#[test]
fn isolated_nodes_ignore_each_others_truth() {
    // With C = I, node 0's trajectory cannot depend on node 1's local truth.
    let (scenario, topology, _, bound) = gaussian_setup(3);
    let mut other = scenario.clone();
    other.xi_local[1] = DVector::from_element(1, 40.0);
    let identity = CombinationMatrix::identity(3);
    let mu = StepSizes::uniform(3, 0.3 * bound).unwrap();
    let sim = |s| Simulation {
        scenario: s,
        topology: &topology,
        combination: &identity,
        kind: AlgorithmKind::CtaDnspe,
        step_sizes: &mu,
        iterations: 100,
        init: InitialGuess::Zero,
        oracle_stride: 1,
    };
    let a = trajectory(&sim(&scenario), RunSeed::new(1, 0)).unwrap();
    let b = trajectory(&sim(&other), RunSeed::new(1, 0)).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x[0], y[0]);
        assert_eq!(x[2], y[2]);
        assert_ne!(x[1], y[1]);
    }
}
