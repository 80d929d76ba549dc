//! Regression trees, random forests and gradient-boosted trees.

mod boost;
mod forest;
mod tree;

pub use boost::{fit_gbm, predict_gbm, BoostModel, BoostParams};
pub use forest::{fit_rf, predict_rf, ForestModel, ForestParams};
pub use tree::{fit_tree, FeatureRule, RegressionTree, TreeParams};

use crate::{Error, Result};

/// Check a row-major design against a response.
pub(crate) fn check_design(x: &[Vec<f64>], y: &[f64]) -> Result<usize> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), actual: y.len() });
    }
    if x.is_empty() {
        return Err(Error::InvalidInput("empty training set".into()));
    }
    let p = x[0].len();
    for row in x {
        if row.len() != p {
            return Err(Error::DimensionMismatch { expected: p, actual: row.len() });
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite regressor".into()));
        }
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite response".into()));
    }
    Ok(p)
}
