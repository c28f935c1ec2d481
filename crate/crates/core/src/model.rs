//! Domain types shared by every other module: network dimensions, ground
//! truth, per-node observations and per-node estimator state.
//!
//! Node indices are 0-based in code. Human-readable messages (errors,
//! violation reports) print them 1-based, `node 1` being index 0.

use nalgebra::{DMatrix, DVector};

use crate::datagen::{self, RegressorSpec};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("dimension `{name}` must be at least 1")]
    ZeroDimension { name: &'static str },
    #[error("expected {expected} local parameter vectors, got {got}")]
    LocalCount { expected: usize, got: usize },
    #[error("{what}: expected length {expected}, got {got}")]
    Length {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("{what}: expected {rows}x{cols}, got {got_rows}x{got_cols}")]
    Shape {
        what: &'static str,
        rows: usize,
        cols: usize,
        got_rows: usize,
        got_cols: usize,
    },
    #[error("node {} is out of range for a network of {n_nodes} nodes", .node + 1)]
    NodeOutOfRange { node: usize, n_nodes: usize },
    #[error("noise standard deviation of node {} must be finite and nonnegative, got {value}", .node + 1)]
    NoiseStddev { node: usize, value: f64 },
    #[error(transparent)]
    Regressor(#[from] datagen::DatagenError),
}

/// Problem sizes, uniform across nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Dimensions {
    /// Number of nodes, `N`.
    pub n_nodes: usize,
    /// Length of the global parameter vector, `M_g`.
    pub m_global: usize,
    /// Length of each node's local parameter vector, `M_l`.
    pub m_local: usize,
    /// Rows per observation, `L`.
    pub l_obs: usize,
}

impl Dimensions {
    pub fn new(
        n_nodes: usize,
        m_global: usize,
        m_local: usize,
        l_obs: usize,
    ) -> Result<Self, ModelError> {
        for (name, value) in [
            ("n_nodes", n_nodes),
            ("m_global", m_global),
            ("m_local", m_local),
            ("l_obs", l_obs),
        ] {
            if value == 0 {
                return Err(ModelError::ZeroDimension { name });
            }
        }
        Ok(Self {
            n_nodes,
            m_global,
            m_local,
            l_obs,
        })
    }

    /// Length of the augmented vector `[w; xi_1; ...; xi_N]`.
    pub fn augmented_len(&self) -> usize {
        self.m_global + self.n_nodes * self.m_local
    }

    /// Parameters of interest to a single node, `M_g + M_l`.
    pub fn node_params(&self) -> usize {
        self.m_global + self.m_local
    }

    /// Offset of node `k`'s local block inside the augmented vector.
    pub fn local_offset(&self, k: usize) -> usize {
        self.m_global + k * self.m_local
    }

    pub fn check_node(&self, k: usize) -> Result<(), ModelError> {
        if k < self.n_nodes {
            Ok(())
        } else {
            Err(ModelError::NodeOutOfRange {
                node: k,
                n_nodes: self.n_nodes,
            })
        }
    }
}

/// Ground truth and data-generating parameters of one estimation problem.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub dims: Dimensions,
    /// Global parameter vector shared by all nodes.
    pub w_global: DVector<f64>,
    /// One local parameter vector per node.
    pub xi_local: Vec<DVector<f64>>,
    /// Per-node white-noise standard deviation.
    pub noise_stddev: Vec<f64>,
    pub regressor_spec: RegressorSpec,
    basis: Option<DMatrix<f64>>,
}

impl Scenario {
    pub fn new(
        dims: Dimensions,
        w_global: DVector<f64>,
        xi_local: Vec<DVector<f64>>,
        noise_stddev: Vec<f64>,
        regressor_spec: RegressorSpec,
    ) -> Result<Self, ModelError> {
        if w_global.len() != dims.m_global {
            return Err(ModelError::Length {
                what: "global parameter vector",
                expected: dims.m_global,
                got: w_global.len(),
            });
        }
        if xi_local.len() != dims.n_nodes {
            return Err(ModelError::LocalCount {
                expected: dims.n_nodes,
                got: xi_local.len(),
            });
        }
        if let Some(xi) = xi_local.iter().find(|xi| xi.len() != dims.m_local) {
            return Err(ModelError::Length {
                what: "local parameter vector",
                expected: dims.m_local,
                got: xi.len(),
            });
        }
        if noise_stddev.len() != dims.n_nodes {
            return Err(ModelError::Length {
                what: "noise standard deviations",
                expected: dims.n_nodes,
                got: noise_stddev.len(),
            });
        }
        if let Some((node, &value)) = noise_stddev
            .iter()
            .enumerate()
            .find(|(_, s)| !(s.is_finite() && **s >= 0.0))
        {
            return Err(ModelError::NoiseStddev { node, value });
        }
        regressor_spec.check_dimensions(&dims)?;
        let basis = match &regressor_spec {
            RegressorSpec::Gaussian { .. } => None,
            RegressorSpec::Spectrum(spec) => Some(datagen::gaussian_basis_matrix(spec)?),
        };
        Ok(Self {
            dims,
            w_global,
            xi_local,
            noise_stddev,
            regressor_spec,
            basis,
        })
    }

    /// The `L x J` basis matrix of a spectrum scenario.
    pub fn basis(&self) -> Option<&DMatrix<f64>> {
        self.basis.as_ref()
    }

    /// Full parameter vector of node `k`: `col{w, xi_k}`.
    pub fn node_truth(&self, k: usize) -> DVector<f64> {
        let mut out = DVector::zeros(self.dims.node_params());
        out.rows_mut(0, self.dims.m_global)
            .copy_from(&self.w_global);
        out.rows_mut(self.dims.m_global, self.dims.m_local)
            .copy_from(&self.xi_local[k]);
        out
    }
}

/// Data available at node `node` at one time instant.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub node: usize,
    /// `L x M_g` columns multiplying the global parameters.
    pub u_global: DMatrix<f64>,
    /// `L x M_l` columns multiplying the node's local parameters.
    pub u_local: DMatrix<f64>,
    /// Measurement vector of length `L`.
    pub d: DVector<f64>,
}

impl Observation {
    pub fn check(&self, dims: &Dimensions) -> Result<(), ModelError> {
        dims.check_node(self.node)?;
        check_shape(
            "global regressor",
            &self.u_global,
            dims.l_obs,
            dims.m_global,
        )?;
        check_shape("local regressor", &self.u_local, dims.l_obs, dims.m_local)?;
        if self.d.len() != dims.l_obs {
            return Err(ModelError::Length {
                what: "measurement vector",
                expected: dims.l_obs,
                got: self.d.len(),
            });
        }
        Ok(())
    }

    /// The node's full regressor `[U_global | U_local]`.
    pub fn regressor(&self) -> DMatrix<f64> {
        let (l, mg, ml) = (self.d.len(), self.u_global.ncols(), self.u_local.ncols());
        let mut u = DMatrix::zeros(l, mg + ml);
        u.columns_mut(0, mg).copy_from(&self.u_global);
        u.columns_mut(mg, ml).copy_from(&self.u_local);
        u
    }
}

fn check_shape(
    what: &'static str,
    m: &DMatrix<f64>,
    rows: usize,
    cols: usize,
) -> Result<(), ModelError> {
    if m.nrows() == rows && m.ncols() == cols {
        Ok(())
    } else {
        Err(ModelError::Shape {
            what,
            rows,
            cols,
            got_rows: m.nrows(),
            got_cols: m.ncols(),
        })
    }
}

/// Estimator state held by one node.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeState {
    /// Intermediate (adapted) estimate of the global vector, `psi_k`.
    pub psi_global: DVector<f64>,
    /// Estimate of the node's local vector.
    pub xi: DVector<f64>,
    /// Combiner output for the global vector, `phi_k`.
    pub phi_global: DVector<f64>,
}

impl NodeState {
    pub fn zeros(dims: &Dimensions) -> Self {
        Self {
            psi_global: DVector::zeros(dims.m_global),
            xi: DVector::zeros(dims.m_local),
            phi_global: DVector::zeros(dims.m_global),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.psi_global
            .iter()
            .chain(self.xi.iter())
            .chain(self.phi_global.iter())
            .all(|v| v.is_finite())
    }

    /// Largest Euclidean norm among the three held vectors.
    pub fn max_norm(&self) -> f64 {
        self.psi_global
            .norm()
            .max(self.xi.norm())
            .max(self.phi_global.norm())
    }
}

/// Concatenation `[w; xi_1; ...; xi_N]`.
pub fn augmented_truth(scenario: &Scenario) -> DVector<f64> {
    let dims = &scenario.dims;
    let mut out = DVector::zeros(dims.augmented_len());
    out.rows_mut(0, dims.m_global).copy_from(&scenario.w_global);
    for (k, xi) in scenario.xi_local.iter().enumerate() {
        out.rows_mut(dims.local_offset(k), dims.m_local)
            .copy_from(xi);
    }
    out
}

/// Embeds node `obs.node`'s regressor into the augmented column space:
/// `[U_global | 0 | U_local | 0]` with the local block at the node's offset.
pub fn augmented_regressor(
    obs: &Observation,
    dims: &Dimensions,
) -> Result<DMatrix<f64>, ModelError> {
    obs.check(dims)?;
    let mut u = DMatrix::zeros(dims.l_obs, dims.augmented_len());
    u.columns_mut(0, dims.m_global).copy_from(&obs.u_global);
    u.columns_mut(dims.local_offset(obs.node), dims.m_local)
        .copy_from(&obs.u_local);
    Ok(u)
}
