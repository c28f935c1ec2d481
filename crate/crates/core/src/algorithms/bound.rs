use nalgebra::DMatrix;

use super::AlgoError;
use crate::linalg::{asymmetry, symmetric_eigenvalues};

/// Mean-stability limit `2 / lambda_max(R_U)` for a node's LMS step size,
/// where `R_U` is the second-order moment of its full regressor.
pub fn step_size_bound(regressor_covariance: &DMatrix<f64>) -> Result<f64, AlgoError> {
    let scale = regressor_covariance.amax().max(f64::MIN_POSITIVE);
    let skew = asymmetry(regressor_covariance);
    if !regressor_covariance.is_square() || skew > 1e-10 * scale {
        return Err(AlgoError::NotSymmetric(skew));
    }
    let lambda_max = symmetric_eigenvalues(regressor_covariance)
        .last()
        .copied()
        .unwrap_or(0.0);
    if lambda_max.is_nan() || lambda_max <= 0.0 {
        return Err(AlgoError::DegenerateRegressors(lambda_max));
    }
    Ok(2.0 / lambda_max)
}
