use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::check_design;
use super::tree::{fit_rows, FeatureRule, RegressionTree, TreeParams};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForestParams {
    pub n_trees: usize,
    /// Candidate variables per node; `None` means `ceil(p / 3)`.
    pub mtry: Option<usize>,
    pub min_leaf: usize,
    pub max_depth: Option<usize>,
    /// Turning this off fits every tree on the full sample (test hook).
    pub bootstrap: bool,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams { n_trees: 500, mtry: None, min_leaf: 5, max_depth: None, bootstrap: true }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForestModel {
    trees: Vec<RegressionTree>,
    mtry: usize,
    seed: u64,
    oob: Vec<Option<f64>>,
}

impl ForestModel {
    pub fn trees(&self) -> &[RegressionTree] {
        &self.trees
    }

    pub fn mtry(&self) -> usize {
        self.mtry
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Out-of-bag prediction per training row (`None` if the row was in every bag).
    pub fn oob_predictions(&self) -> &[Option<f64>] {
        &self.oob
    }

    /// Same forest with trees in a different order.
    pub fn with_tree_order(&self, order: &[usize]) -> ForestModel {
        ForestModel { trees: order.iter().map(|&i| self.trees[i].clone()).collect(), ..self.clone() }
    }
}

/// Random forest: `n_trees` CART trees, each on a with-replacement bootstrap of
/// the rows and with `mtry` candidate variables drawn at every node.
///
/// Tree `b` uses its own ChaCha stream derived from `seed`, so the fit is
/// reproducible and independent of thread scheduling.
pub fn fit_rf(x: &[Vec<f64>], y: &[f64], params: &ForestParams, seed: u64) -> Result<ForestModel> {
    let p = check_design(x, y)?;
    if params.n_trees == 0 {
        return Err(Error::InvalidInput("a forest needs at least one tree".into()));
    }
    let mtry = params.mtry.unwrap_or_else(|| p.div_ceil(3)).clamp(1, p.max(1));
    let n = y.len();
    let tree_params = TreeParams { max_depth: params.max_depth, min_leaf: params.min_leaf };
    let rule = if mtry == p { FeatureRule::All } else { FeatureRule::Sample(mtry) };

    let fitted: Vec<(RegressionTree, Vec<bool>)> = (0..params.n_trees)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b as u64);
            let (rows, inbag) = if params.bootstrap {
                let mut inbag = vec![false; n];
                let rows: Vec<usize> = (0..n)
                    .map(|_| {
                        let r = rng.random_range(0..n);
                        inbag[r] = true;
                        r
                    })
                    .collect();
                (rows, inbag)
            } else {
                ((0..n).collect(), vec![true; n])
            };
            fit_rows(x, y, &rows, &tree_params, rule, &mut rng).map(|t| (t, inbag))
        })
        .collect::<Result<_>>()?;

    let mut oob_sum = vec![0.0; n];
    let mut oob_cnt = vec![0usize; n];
    for (tree, inbag) in &fitted {
        for i in (0..n).filter(|&i| !inbag[i]) {
            oob_sum[i] += tree.predict_unchecked(&x[i]);
            oob_cnt[i] += 1;
        }
    }
    let oob = oob_sum
        .iter()
        .zip(&oob_cnt)
        .map(|(&s, &c)| (c > 0).then(|| s / c as f64))
        .collect();
    Ok(ForestModel { trees: fitted.into_iter().map(|(t, _)| t).collect(), mtry, seed, oob })
}

/// Average of the individual tree predictions.
pub fn predict_rf(model: &ForestModel, x_new: &[f64]) -> Result<f64> {
    let mut sum = 0.0;
    for t in &model.trees {
        sum += t.predict(x_new)?;
    }
    Ok(sum / model.trees.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trees::fit_tree;

    fn friedman1(n: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<f64>) {
        use rand_distr::{Distribution, Normal};
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, 1.0).unwrap();
        let x: Vec<Vec<f64>> = (0..n).map(|_| (0..10).map(|_| rng.random::<f64>()).collect()).collect();
        let y = x
            .iter()
            .map(|r| {
                10.0 * (std::f64::consts::PI * r[0] * r[1]).sin()
                    + 20.0 * (r[2] - 0.5).powi(2)
                    + 10.0 * r[3]
                    + 5.0 * r[4]
                    + noise.sample(&mut rng)
            })
            .collect();
        (x, y)
    }

    #[test]
    fn degenerate_forest_equals_single_tree() {
        let (x, y) = friedman1(80, 1);
        let params = ForestParams { n_trees: 1, mtry: Some(10), min_leaf: 3, max_depth: None, bootstrap: false };
        let f = fit_rf(&x, &y, &params, 99).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let t = fit_tree(&x, &y, &TreeParams { max_depth: None, min_leaf: 3 }, FeatureRule::All, &mut rng).unwrap();
        for row in &x {
            assert_eq!(predict_rf(&f, row).unwrap(), t.predict(row).unwrap());
        }
    }

    #[test]
    fn same_seed_same_model() {
        let (x, y) = friedman1(60, 2);
        let p = ForestParams { n_trees: 20, ..Default::default() };
        assert_eq!(fit_rf(&x, &y, &p, 5).unwrap(), fit_rf(&x, &y, &p, 5).unwrap());
        assert_ne!(fit_rf(&x, &y, &p, 5).unwrap(), fit_rf(&x, &y, &p, 6).unwrap());
    }

    #[test]
    fn friedman_oob_beats_mean() {
        let (x, y) = friedman1(200, 3);
        let f = fit_rf(&x, &y, &ForestParams { n_trees: 200, ..Default::default() }, 11).unwrap();
        let mean = y.iter().sum::<f64>() / y.len() as f64;
        let mut se_rf = 0.0;
        let mut se_mean = 0.0;
        let mut cnt = 0;
        for (i, p) in f.oob_predictions().iter().enumerate() {
            if let Some(p) = p {
                se_rf += (y[i] - p).powi(2);
                se_mean += (y[i] - mean).powi(2);
                cnt += 1;
            }
        }
        assert!(cnt > 190);
        assert!(se_rf < se_mean, "oob rmse {} vs mean {}", (se_rf / cnt as f64).sqrt(), (se_mean / cnt as f64).sqrt());
    }

    #[test]
    fn prediction_is_average_of_trees_and_order_free() {
        let (x, y) = friedman1(50, 4);
        let f = fit_rf(&x, &y, &ForestParams { n_trees: 15, ..Default::default() }, 3).unwrap();
        let probe = vec![0.3; 10];
        let manual = f.trees().iter().map(|t| t.predict(&probe).unwrap()).sum::<f64>() / 15.0;
        assert!((predict_rf(&f, &probe).unwrap() - manual).abs() < 1e-12);
        let rev: Vec<usize> = (0..15).rev().collect();
        let g = f.with_tree_order(&rev);
        assert!((predict_rf(&g, &probe).unwrap() - manual).abs() < 1e-12);
        assert!(matches!(predict_rf(&f, &[0.0; 3]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn constant_trees_average() {
        let c = |v| RegressionTree::constant(v, 2);
        let f = ForestModel { trees: vec![c(2.0), c(2.0)], mtry: 1, seed: 0, oob: vec![] };
        assert_eq!(predict_rf(&f, &[0.0, 0.0]).unwrap(), 2.0);
        let g = ForestModel { trees: vec![c(1.0), c(3.0)], mtry: 1, seed: 0, oob: vec![] };
        assert_eq!(predict_rf(&g, &[0.0, 0.0]).unwrap(), 2.0);
    }
}
