//! Reference implementations used to check the library. They work on the
//! dense augmented vector `[w; xi_1; ...; xi_N]` with plain loops and share
//! no numerical code with the estimators under test.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use nspe_core::{Dimensions, NodeState, Observation};
use rand::Rng;
use rand_distr::StandardNormal;

/// `[U_global | 0 | U_local in block k | 0]`, built entry by entry.
pub fn dense_augmented_regressor(obs: &Observation, dims: &Dimensions) -> DMatrix<f64> {
    let (mg, ml) = (dims.m_global, dims.m_local);
    let mut u = DMatrix::zeros(dims.l_obs, mg + dims.n_nodes * ml);
    for r in 0..dims.l_obs {
        for c in 0..mg {
            u[(r, c)] = obs.u_global[(r, c)];
        }
        for c in 0..ml {
            u[(r, mg + obs.node * ml + c)] = obs.u_local[(r, c)];
        }
    }
    u
}

/// Node `k`'s state embedded in the augmented space: global block from
/// `global`, its own local block from `xi`, other local blocks zero.
pub fn embed(
    global: &DVector<f64>,
    xi: &DVector<f64>,
    k: usize,
    dims: &Dimensions,
) -> DVector<f64> {
    let mut v = DVector::zeros(dims.m_global + dims.n_nodes * dims.m_local);
    for i in 0..dims.m_global {
        v[i] = global[i];
    }
    for i in 0..dims.m_local {
        v[dims.m_global + k * dims.m_local + i] = xi[i];
    }
    v
}

/// One combine-then-adapt iteration of the augmented recursion.
///
/// The combiner acting on node `k` uses `c_kj` on the global block, keeps
/// node `k`'s own local block (weight 1 on itself) and assigns weight 0 to
/// every other local block. Returns the augmented vector of every node.
pub fn augmented_cta_step(
    states: &[NodeState],
    c: &DMatrix<f64>,
    observations: &[Observation],
    mu: &[f64],
    dims: &Dimensions,
) -> Vec<DVector<f64>> {
    let n = dims.n_nodes;
    let m = dims.m_global + n * dims.m_local;
    let embedded: Vec<DVector<f64>> = states
        .iter()
        .enumerate()
        .map(|(j, s)| embed(&s.psi_global, &s.xi, j, dims))
        .collect();
    (0..n)
        .map(|k| {
            let mut w = DVector::zeros(m);
            for (j, e) in embedded.iter().enumerate() {
                for i in 0..m {
                    let local_block =
                        (i >= dims.m_global).then(|| (i - dims.m_global) / dims.m_local);
                    let weight = match local_block {
                        None => c[(k, j)],
                        Some(b) if b == k && j == k => 1.0,
                        Some(_) => 0.0,
                    };
                    w[i] += weight * e[i];
                }
            }
            let u = dense_augmented_regressor(&observations[k], dims);
            let mut err = vec![0.0; dims.l_obs];
            for (r, e) in err.iter_mut().enumerate() {
                let mut pred = 0.0;
                for i in 0..m {
                    pred += u[(r, i)] * w[i];
                }
                *e = observations[k].d[r] - pred;
            }
            let mut next = w.clone();
            for i in 0..m {
                let mut g = 0.0;
                for (r, e) in err.iter().enumerate() {
                    g += u[(r, i)] * e;
                }
                next[i] += mu[k] * g;
            }
            next
        })
        .collect()
}

/// Brute-force least squares on the stacked system, solved by SVD.
pub fn stacked_least_squares(observations: &[Observation], dims: &Dimensions) -> DVector<f64> {
    let rows = observations.len() * dims.l_obs;
    let m = dims.m_global + dims.n_nodes * dims.m_local;
    let mut a = DMatrix::zeros(rows, m);
    let mut b = DVector::zeros(rows);
    for (s, obs) in observations.iter().enumerate() {
        let u = dense_augmented_regressor(obs, dims);
        for r in 0..dims.l_obs {
            for i in 0..m {
                a[(s * dims.l_obs + r, i)] = u[(r, i)];
            }
            b[s * dims.l_obs + r] = obs.d[r];
        }
    }
    a.svd(true, true)
        .solve(&b, 1e-14)
        .expect("SVD with vectors")
}

/// `2 / lambda_max` from a full symmetric eigendecomposition.
pub fn dense_step_bound(r: &DMatrix<f64>) -> f64 {
    let lambda_max = SymmetricEigen::new(r.clone()).eigenvalues.max();
    2.0 / lambda_max
}

pub fn gaussian_matrix<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

pub fn gaussian_vector<R: Rng>(len: usize, rng: &mut R) -> DVector<f64> {
    DVector::from_fn(len, |_, _| rng.sample(StandardNormal))
}

pub fn random_observation<R: Rng>(k: usize, dims: &Dimensions, rng: &mut R) -> Observation {
    Observation {
        node: k,
        u_global: gaussian_matrix(dims.l_obs, dims.m_global, rng),
        u_local: gaussian_matrix(dims.l_obs, dims.m_local, rng),
        d: gaussian_vector(dims.l_obs, rng),
    }
}

pub fn random_state<R: Rng>(dims: &Dimensions, rng: &mut R) -> NodeState {
    let psi = gaussian_vector(dims.m_global, rng);
    NodeState {
        phi_global: gaussian_vector(dims.m_global, rng),
        xi: gaussian_vector(dims.m_local, rng),
        psi_global: psi,
    }
}

/// Undirected edge list of a random connected graph: a random spanning
/// tree plus extra edges with probability `p`.
pub fn random_connected_edges<R: Rng>(n: usize, p: f64, rng: &mut R) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    for k in 1..n {
        edges.push((rng.gen_range(0..k), k));
    }
    for a in 0..n {
        for b in a + 1..n {
            if rng.gen::<f64>() < p && !edges.contains(&(a, b)) {
                edges.push((a, b));
            }
        }
    }
    edges
}

/// Row-stochastic, nonnegative weights on the support `adjacency` (which
/// includes the diagonal), drawn at random.
pub fn random_stochastic<R: Rng>(adjacency: &[Vec<usize>], rng: &mut R) -> DMatrix<f64> {
    let n = adjacency.len();
    let mut c = DMatrix::zeros(n, n);
    for (k, nb) in adjacency.iter().enumerate() {
        let raw: Vec<f64> = nb.iter().map(|_| rng.gen_range(0.1..1.0)).collect();
        let total: f64 = raw.iter().sum();
        for (&j, w) in nb.iter().zip(raw) {
            c[(k, j)] = w / total;
        }
    }
    c
}
