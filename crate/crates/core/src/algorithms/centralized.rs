use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::AlgoError;
use crate::model::{Dimensions, Observation};

/// Eigenvalues below this fraction of `dim * lambda_max` count as zero.
const RANK_TOLERANCE: f64 = 1e-12;

/// Running sample moments of the augmented linear model:
/// `sum_k sum_i U~^T U~` and `sum_k sum_i U~^T d`, accumulated block-wise
/// without materialising the zero-padded augmented regressors.
#[derive(Debug, Clone)]
pub struct NormalEquations {
    dims: Dimensions,
    gram: DMatrix<f64>,
    rhs: DVector<f64>,
    samples: usize,
}

impl NormalEquations {
    pub fn new(dims: Dimensions) -> Self {
        let m = dims.augmented_len();
        Self {
            dims,
            gram: DMatrix::zeros(m, m),
            rhs: DVector::zeros(m),
            samples: 0,
        }
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn add(&mut self, obs: &Observation) -> Result<(), AlgoError> {
        obs.check(&self.dims)?;
        let (mg, ml) = (self.dims.m_global, self.dims.m_local);
        let off = self.dims.local_offset(obs.node);
        let ug = &obs.u_global;
        let ul = &obs.u_local;
        let cross = ug.transpose() * ul;
        let mut gg = self.gram.view_mut((0, 0), (mg, mg));
        gg.gemm_tr(1.0, ug, ug, 1.0);
        let mut gl = self.gram.view_mut((0, off), (mg, ml));
        gl += &cross;
        let mut lg = self.gram.view_mut((off, 0), (ml, mg));
        lg += cross.transpose();
        let mut ll = self.gram.view_mut((off, off), (ml, ml));
        ll.gemm_tr(1.0, ul, ul, 1.0);
        self.rhs.rows_mut(0, mg).gemv_tr(1.0, ug, &obs.d, 1.0);
        self.rhs.rows_mut(off, ml).gemv_tr(1.0, ul, &obs.d, 1.0);
        self.samples += 1;
        Ok(())
    }

    /// Numerical rank of the accumulated Gram matrix.
    pub fn rank(&self) -> usize {
        let eig = SymmetricEigen::new(self.gram.clone()).eigenvalues;
        let max = eig.amax();
        if max == 0.0 {
            return 0;
        }
        let tol = max * RANK_TOLERANCE * eig.len() as f64;
        eig.iter().filter(|&&l| l > tol).count()
    }

    /// Solves the sample normal equations for the augmented estimate
    /// `[w; xi_1; ...; xi_N]`.
    pub fn solve(&self) -> Result<DVector<f64>, AlgoError> {
        let dim = self.dims.augmented_len();
        let singular = |rank| AlgoError::Singular { rank, dim };
        let rank = self.rank();
        if rank < dim {
            return Err(singular(rank));
        }
        let chol = self.gram.clone().cholesky().ok_or_else(|| singular(rank))?;
        Ok(chol.solve(&self.rhs))
    }
}

/// Least-squares estimate of the augmented vector from an ensemble of
/// observations (any mix of nodes and time instants).
pub fn centralized_solve(
    observations: &[Observation],
    dims: Dimensions,
) -> Result<DVector<f64>, AlgoError> {
    let mut ne = NormalEquations::new(dims);
    for obs in observations {
        ne.add(obs)?;
    }
    ne.solve()
}
