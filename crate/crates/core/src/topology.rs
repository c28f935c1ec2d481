//! Network graphs and the row-stochastic matrix that weights neighbours'
//! global estimates.
//!
//! Only the global parameters are ever combined. Each node's local estimate
//! is its own business, so there is deliberately no combination matrix for
//! local parameters anywhere in this crate.

use std::collections::VecDeque;
use std::fmt;

use nalgebra::DMatrix;
use rand::Rng;

/// Row sums may deviate from one by at most this much.
pub const ROW_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TopologyError {
    #[error("a network needs at least one node")]
    Empty,
    #[error("ring degree must be even, got {0}")]
    OddDegree(usize),
    #[error("ring degree {degree} must be smaller than the node count {n_nodes}")]
    DegreeTooLarge { degree: usize, n_nodes: usize },
    #[error("edge ({}, {}) references a node outside 1..={n_nodes}", .0 + 1, .1 + 1, n_nodes = .2)]
    EdgeOutOfRange(usize, usize, usize),
    #[error("link drop probability must lie in [0, 1), got {0}")]
    DropProbability(f64),
    #[error("Metropolis weights need a static topology (link drop probability is {0})")]
    TimeVarying(f64),
    #[error("combination matrix must be {expected}x{expected}, got {rows}x{cols}")]
    Dimension {
        expected: usize,
        rows: usize,
        cols: usize,
    },
    #[error(transparent)]
    Invalid(#[from] CombinationViolation),
}

/// Undirected graph with self-loops, plus an i.i.d. per-iteration link
/// failure probability.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    neighbors: Vec<Vec<usize>>,
    link_drop_prob: f64,
}

impl Topology {
    /// Builds a graph from undirected edges. Self-loops are implied.
    pub fn from_edges(
        n_nodes: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self, TopologyError> {
        if n_nodes == 0 {
            return Err(TopologyError::Empty);
        }
        let mut neighbors: Vec<Vec<usize>> = (0..n_nodes).map(|k| vec![k]).collect();
        for (a, b) in edges {
            if a >= n_nodes || b >= n_nodes {
                return Err(TopologyError::EdgeOutOfRange(a, b, n_nodes));
            }
            neighbors[a].push(b);
            neighbors[b].push(a);
        }
        for list in &mut neighbors {
            list.sort_unstable();
            list.dedup();
        }
        Ok(Self {
            neighbors,
            link_drop_prob: 0.0,
        })
    }

    pub fn complete(n_nodes: usize) -> Result<Self, TopologyError> {
        Self::from_edges(
            n_nodes,
            (0..n_nodes).flat_map(|a| (a + 1..n_nodes).map(move |b| (a, b))),
        )
    }

    pub fn with_link_drop_prob(mut self, p: f64) -> Result<Self, TopologyError> {
        if !(0.0..1.0).contains(&p) {
            return Err(TopologyError::DropProbability(p));
        }
        self.link_drop_prob = p;
        Ok(self)
    }

    pub fn n_nodes(&self) -> usize {
        self.neighbors.len()
    }

    pub fn link_drop_prob(&self) -> f64 {
        self.link_drop_prob
    }

    pub fn is_static(&self) -> bool {
        self.link_drop_prob == 0.0
    }

    /// Static neighbourhood of `k`, including `k`, ascending.
    pub fn neighbors(&self, k: usize) -> &[usize] {
        &self.neighbors[k]
    }

    /// Neighbourhood size including the node itself.
    pub fn degree(&self, k: usize) -> usize {
        self.neighbors[k].len()
    }

    pub fn is_neighbor(&self, k: usize, j: usize) -> bool {
        self.neighbors[k].binary_search(&j).is_ok()
    }

    /// Breadth-first reachability from node 0.
    pub fn is_connected(&self) -> bool {
        let n = self.n_nodes();
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        let mut count = 1;
        while let Some(k) = queue.pop_front() {
            for &j in &self.neighbors[k] {
                if !seen[j] {
                    seen[j] = true;
                    count += 1;
                    queue.push_back(j);
                }
            }
        }
        count == n
    }
}

/// Circulant graph: node `k` links to `degree / 2` nodes on each side.
pub fn ring_topology(n_nodes: usize, degree: usize) -> Result<Topology, TopologyError> {
    if n_nodes == 0 {
        return Err(TopologyError::Empty);
    }
    if !degree.is_multiple_of(2) {
        return Err(TopologyError::OddDegree(degree));
    }
    if degree >= n_nodes {
        return Err(TopologyError::DegreeTooLarge { degree, n_nodes });
    }
    let half = degree / 2;
    Topology::from_edges(
        n_nodes,
        (0..n_nodes).flat_map(|k| (1..=half).map(move |s| (k, (k + s) % n_nodes))),
    )
}

/// Neighbourhood of `k` for one iteration: every static link other than the
/// self-loop survives independently with probability `1 - link_drop_prob`.
/// A static topology consumes no randomness.
pub fn neighborhood<R: Rng + ?Sized>(topology: &Topology, k: usize, rng: &mut R) -> Vec<usize> {
    let p = topology.link_drop_prob;
    if p == 0.0 {
        return topology.neighbors[k].clone();
    }
    topology.neighbors[k]
        .iter()
        .copied()
        .filter(|&j| j == k || rng.gen::<f64>() >= p)
        .collect()
}

/// Averaging row: `1 / |neighbors|` on the neighbourhood, zero elsewhere.
pub fn uniform_weights(neighbors: &[usize], k: usize, n_nodes: usize) -> Vec<f64> {
    debug_assert!(neighbors.contains(&k));
    let mut row = vec![0.0; n_nodes];
    let w = 1.0 / neighbors.len() as f64;
    for &j in neighbors {
        row[j] = w;
    }
    row
}

/// First constraint a candidate combination matrix breaks.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CombinationViolation {
    #[error("matrix is {rows}x{cols} but the network has {n_nodes} nodes")]
    Dimension {
        rows: usize,
        cols: usize,
        n_nodes: usize,
    },
    #[error("support: weight {value} on non-edge ({}, {})", .row + 1, .col + 1)]
    Support { row: usize, col: usize, value: f64 },
    #[error("negative weight {value} at ({}, {})", .row + 1, .col + 1)]
    Negative { row: usize, col: usize, value: f64 },
    #[error("non-finite weight at ({}, {})", .row + 1, .col + 1)]
    NonFinite { row: usize, col: usize },
    #[error("row {} sums to {sum}", .row + 1)]
    RowSum { row: usize, sum: f64 },
}

/// Weights `c_{k,j}` used by node `k` for node `j`'s global estimate.
#[derive(Clone, PartialEq)]
pub struct CombinationMatrix {
    weights: DMatrix<f64>,
}

impl fmt::Debug for CombinationMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("CombinationMatrix")
            .field(&self.weights)
            .finish()
    }
}

impl CombinationMatrix {
    /// Wraps a matrix and checks it against `topology`.
    pub fn new(weights: DMatrix<f64>, topology: &Topology) -> Result<Self, TopologyError> {
        let c = Self::new_unchecked(weights);
        validate_combination(&c, topology)?;
        Ok(c)
    }

    /// Wraps a matrix without checking; see [`validate_combination`].
    pub fn new_unchecked(weights: DMatrix<f64>) -> Self {
        Self { weights }
    }

    pub fn identity(n_nodes: usize) -> Self {
        Self::new_unchecked(DMatrix::identity(n_nodes, n_nodes))
    }

    /// Simple averaging over each static neighbourhood.
    pub fn uniform(topology: &Topology) -> Self {
        let n = topology.n_nodes();
        let mut weights = DMatrix::zeros(n, n);
        for k in 0..n {
            let row = uniform_weights(topology.neighbors(k), k, n);
            for (j, w) in row.into_iter().enumerate() {
                weights[(k, j)] = w;
            }
        }
        Self::new_unchecked(weights)
    }

    pub fn n_nodes(&self) -> usize {
        self.weights.nrows()
    }

    pub fn weight(&self, k: usize, j: usize) -> f64 {
        self.weights[(k, j)]
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.weights
    }

    /// Nonzero weights of row `k` restricted to `neighborhood`.
    ///
    /// When some static links are missing from `neighborhood`, the surviving
    /// weights are rescaled to sum to one. A full neighbourhood returns the
    /// stored weights untouched.
    pub fn active_row(
        &self,
        k: usize,
        neighborhood: &[usize],
        topology: &Topology,
    ) -> Vec<(usize, f64)> {
        let mut row: Vec<(usize, f64)> = neighborhood
            .iter()
            .map(|&j| (j, self.weights[(k, j)]))
            .filter(|&(_, w)| w != 0.0)
            .collect();
        if neighborhood.len() < topology.degree(k) {
            let total: f64 = row.iter().map(|(_, w)| w).sum();
            if total > 0.0 {
                for (_, w) in &mut row {
                    *w /= total;
                }
            } else {
                row = vec![(k, 1.0)];
            }
        }
        row
    }
}

/// Metropolis rule: `c_{k,j} = 1 / max(n_k, n_j)` for neighbours `j != k`,
/// where `n` counts the neighbourhood including the node itself; the
/// diagonal takes the remainder. The result is symmetric and doubly
/// stochastic.
pub fn metropolis_weights(topology: &Topology) -> Result<CombinationMatrix, TopologyError> {
    if !topology.is_static() {
        return Err(TopologyError::TimeVarying(topology.link_drop_prob));
    }
    let n = topology.n_nodes();
    let mut weights = DMatrix::zeros(n, n);
    for k in 0..n {
        let mut off = 0.0;
        for &j in topology.neighbors(k).iter().filter(|&&j| j != k) {
            let w = 1.0 / topology.degree(k).max(topology.degree(j)) as f64;
            weights[(k, j)] = w;
            off += w;
        }
        weights[(k, k)] = 1.0 - off;
    }
    Ok(CombinationMatrix::new_unchecked(weights))
}

/// Checks dimensions, finiteness, support on the static graph,
/// nonnegativity, and unit row sums (within [`ROW_SUM_TOLERANCE`]), in that
/// order, reporting the first violation in row-major order.
pub fn validate_combination(
    c: &CombinationMatrix,
    topology: &Topology,
) -> Result<(), CombinationViolation> {
    let n = topology.n_nodes();
    let w = &c.weights;
    if w.nrows() != n || w.ncols() != n {
        return Err(CombinationViolation::Dimension {
            rows: w.nrows(),
            cols: w.ncols(),
            n_nodes: n,
        });
    }
    for row in 0..n {
        let mut sum = 0.0;
        for col in 0..n {
            let value = w[(row, col)];
            if !value.is_finite() {
                return Err(CombinationViolation::NonFinite { row, col });
            }
            if value != 0.0 && !topology.is_neighbor(row, col) {
                return Err(CombinationViolation::Support { row, col, value });
            }
            if value < 0.0 {
                return Err(CombinationViolation::Negative { row, col, value });
            }
            sum += value;
        }
        if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
            return Err(CombinationViolation::RowSum { row, sum });
        }
    }
    Ok(())
}
