use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::check_design;
use super::tree::{fit_rows, FeatureRule, RegressionTree, TreeParams};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoostParams {
    pub n_rounds: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub min_leaf: usize,
}

impl Default for BoostParams {
    fn default() -> Self {
        BoostParams { n_rounds: 100, learning_rate: 0.1, max_depth: 3, min_leaf: 1 }
    }
}

/// Squared-loss gradient boosting: `init + lr * sum_m tree_m(x)`.
///
/// Each stage tree stores its per-leaf step (the leaf mean of the residuals),
/// which is the exact minimiser of the squared loss within the leaf.
#[derive(Debug, Clone, PartialEq)]
pub struct BoostModel {
    pub init: f64,
    pub learning_rate: f64,
    stages: Vec<RegressionTree>,
    n_features: usize,
    train_loss: Vec<f64>,
}

impl BoostModel {
    pub fn n_stages(&self) -> usize {
        self.stages.len()
    }

    pub fn stages(&self) -> &[RegressionTree] {
        &self.stages
    }

    /// In-sample `sum (y - g^m)^2` for `m = 0..=M`.
    pub fn training_loss(&self) -> &[f64] {
        &self.train_loss
    }

    /// Prediction after the first `m` stages (`m = 0` is the initial constant).
    pub fn predict_stage(&self, x: &[f64], m: usize) -> Result<f64> {
        if x.len() != self.n_features {
            return Err(Error::DimensionMismatch { expected: self.n_features, actual: x.len() });
        }
        let mut g = self.init;
        for t in self.stages.iter().take(m) {
            g += self.learning_rate * t.predict_unchecked(x);
        }
        Ok(g)
    }
}

/// Fit `params.n_rounds` boosting stages under squared loss.
///
/// The algorithm is deterministic (no row subsampling); `seed` is accepted so
/// all tree learners share a signature.
pub fn fit_gbm(x: &[Vec<f64>], y: &[f64], params: &BoostParams, seed: u64) -> Result<BoostModel> {
    let p = check_design(x, y)?;
    if params.n_rounds == 0 {
        return Err(Error::InvalidInput("boosting needs at least one round".into()));
    }
    if !(params.learning_rate > 0.0 && params.learning_rate <= 1.0) {
        return Err(Error::InvalidInput(format!("learning rate must lie in (0, 1], got {}", params.learning_rate)));
    }
    let n = y.len();
    let init = y.iter().sum::<f64>() / n as f64;
    let mut g = vec![init; n];
    let rows: Vec<usize> = (0..n).collect();
    let tree_params = TreeParams { max_depth: Some(params.max_depth), min_leaf: params.min_leaf };
    let mut stages = Vec::with_capacity(params.n_rounds);
    let loss = |g: &[f64]| y.iter().zip(g).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
    let mut train_loss = vec![loss(&g)];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..params.n_rounds {
        // negative gradient of 0.5 (y - g)^2
        let resid: Vec<f64> = y.iter().zip(&g).map(|(a, b)| a - b).collect();
        let tree = fit_rows(x, &resid, &rows, &tree_params, FeatureRule::All, &mut rng)?;
        for i in 0..n {
            g[i] += params.learning_rate * tree.predict_unchecked(&x[i]);
        }
        train_loss.push(loss(&g));
        stages.push(tree);
    }
    Ok(BoostModel { init, learning_rate: params.learning_rate, stages, n_features: p, train_loss })
}

pub fn predict_gbm(model: &BoostModel, x_new: &[f64]) -> Result<f64> {
    model.predict_stage(x_new, model.stages.len())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data() -> (Vec<Vec<f64>>, Vec<f64>) {
        let x: Vec<Vec<f64>> = (0..30).map(|i| vec![i as f64 * 0.37 % 5.0, (i as f64).sqrt()]).collect();
        let y = x.iter().map(|r| r[0].sin() * 3.0 + r[1]).collect();
        (x, y)
    }

    #[test]
    fn full_fit_limit_reproduces_targets() {
        let (x, y) = data();
        let p = BoostParams { n_rounds: 1, learning_rate: 1.0, max_depth: 64, min_leaf: 1 };
        let m = fit_gbm(&x, &y, &p, 0).unwrap();
        assert!(m.stages()[0].leaves().iter().all(|l| l.1 == 1));
        for (row, t) in x.iter().zip(&y) {
            assert!((predict_gbm(&m, row).unwrap() - t).abs() < 1e-10);
        }
    }

    #[test]
    fn stage_zero_is_mean_and_zero_rounds_rejected() {
        let (x, y) = data();
        let m = fit_gbm(&x, &y, &BoostParams::default(), 0).unwrap();
        let mean = y.iter().sum::<f64>() / y.len() as f64;
        assert!((m.predict_stage(&[9.0, -1.0], 0).unwrap() - mean).abs() < 1e-12);
        let zero = BoostParams { n_rounds: 0, ..Default::default() };
        assert!(fit_gbm(&x, &y, &zero, 0).is_err());
    }

    #[test]
    fn loss_non_increasing_recomputed_per_stage() {
        let (x, y) = data();
        let m = fit_gbm(&x, &y, &BoostParams { n_rounds: 40, ..Default::default() }, 0).unwrap();
        let mut prev = f64::INFINITY;
        for s in 0..=m.n_stages() {
            let l: f64 = x.iter().zip(&y).map(|(r, t)| (t - m.predict_stage(r, s).unwrap()).powi(2)).sum();
            assert!((l - m.training_loss()[s]).abs() < 1e-9 * (1.0 + l));
            assert!(l <= prev + 1e-12);
            prev = l;
        }
    }

    #[test]
    fn staged_sum_by_hand() {
        let m = BoostModel {
            init: 1.0,
            learning_rate: 0.5,
            stages: vec![RegressionTree::constant(2.0, 1), RegressionTree::constant(-4.0, 1)],
            n_features: 1,
            train_loss: vec![],
        };
        assert_eq!(predict_gbm(&m, &[0.0]).unwrap(), 1.0 + 0.5 * 2.0 - 0.5 * 4.0);
        let flat = BoostModel { stages: vec![RegressionTree::constant(0.0, 1); 3], ..m.clone() };
        assert_eq!(predict_gbm(&flat, &[3.0]).unwrap(), 1.0);
        assert!(predict_gbm(&m, &[0.0, 1.0]).is_err());
    }
}
