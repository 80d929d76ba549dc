use rand::seq::index::sample;
use rand::Rng;

use super::check_design;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeParams {
    /// `None` grows until leaves are pure or `min_leaf` binds.
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams { max_depth: None, min_leaf: 5 }
    }
}

/// Which variables a node may split on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureRule {
    All,
    /// Draw this many candidate variables afresh at every node.
    Sample(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Node {
    Leaf { value: f64, n: usize },
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

/// A binary regression tree; `x[feature] <= threshold` goes left.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionTree {
    nodes: Vec<Node>,
    n_features: usize,
}

impl RegressionTree {
    pub fn n_features(&self) -> usize {
        self.n_features
    }

    /// Constant tree, used for the boosting initialisation.
    pub fn constant(value: f64, n_features: usize) -> Self {
        RegressionTree { nodes: vec![Node::Leaf { value, n: 0 }], n_features }
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.n_features {
            return Err(Error::DimensionMismatch { expected: self.n_features, actual: x.len() });
        }
        Ok(self.predict_unchecked(x))
    }

    pub(crate) fn predict_unchecked(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { value, .. } => return value,
                Node::Split { feature, threshold, left, right } => {
                    i = if x[feature] <= threshold { left } else { right };
                }
            }
        }
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(nodes, left).max(go(nodes, right)),
            }
        }
        go(&self.nodes, 0)
    }

    /// Feature and threshold of the root split, if any.
    pub fn root_split(&self) -> Option<(usize, f64)> {
        match self.nodes[0] {
            Node::Split { feature, threshold, .. } => Some((feature, threshold)),
            Node::Leaf { .. } => None,
        }
    }

    /// Leaf values with their training counts.
    pub fn leaves(&self) -> Vec<(f64, usize)> {
        self.nodes
            .iter()
            .filter_map(|n| match *n {
                Node::Leaf { value, n } => Some((value, n)),
                _ => None,
            })
            .collect()
    }
}

/// Fit a CART regression tree by greedy variance reduction.
///
/// Leaves predict the mean of their training targets. Ties between candidate
/// splits go to the lowest variable index, then the lowest threshold. Nodes
/// with fewer than `2 * min_leaf` rows stay leaves.
pub fn fit_tree<R: Rng + ?Sized>(
    x: &[Vec<f64>],
    y: &[f64],
    params: &TreeParams,
    rule: FeatureRule,
    rng: &mut R,
) -> Result<RegressionTree> {
    check_design(x, y)?;
    let rows: Vec<usize> = (0..y.len()).collect();
    fit_rows(x, y, &rows, params, rule, rng)
}

/// Fit on a multiset of row indices (bootstrap samples repeat rows).
pub(crate) fn fit_rows<R: Rng + ?Sized>(
    x: &[Vec<f64>],
    y: &[f64],
    rows: &[usize],
    params: &TreeParams,
    rule: FeatureRule,
    rng: &mut R,
) -> Result<RegressionTree> {
    let p = x.first().map_or(0, |r| r.len());
    if let FeatureRule::Sample(m) = rule {
        if m == 0 || m > p {
            return Err(Error::InvalidInput(format!("mtry must lie in 1..={p}, got {m}")));
        }
    }
    if params.min_leaf == 0 {
        return Err(Error::InvalidInput("min_leaf must be at least 1".into()));
    }
    let mut builder = Builder { x, y, params, rule, nodes: Vec::new(), p };
    let mut idx = rows.to_vec();
    builder.grow(&mut idx, 0, rng);
    Ok(RegressionTree { nodes: builder.nodes, n_features: p })
}

struct Builder<'a> {
    x: &'a [Vec<f64>],
    y: &'a [f64],
    params: &'a TreeParams,
    rule: FeatureRule,
    nodes: Vec<Node>,
    p: usize,
}

struct Best {
    feature: usize,
    threshold: f64,
    gain: f64,
}

impl Builder<'_> {
    fn grow<R: Rng + ?Sized>(&mut self, rows: &mut [usize], depth: usize, rng: &mut R) -> usize {
        let n = rows.len();
        let sum: f64 = rows.iter().map(|&r| self.y[r]).sum();
        let mean = sum / n as f64;
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf { value: mean, n });

        let depth_ok = self.params.max_depth.is_none_or(|d| depth < d);
        if !depth_ok || n < 2 * self.params.min_leaf || self.p == 0 {
            return id;
        }
        let sse: f64 = rows.iter().map(|&r| (self.y[r] - mean).powi(2)).sum();
        if sse <= 1e-24 * (1.0 + sum * sum) {
            return id;
        }

        let candidates: Vec<usize> = match self.rule {
            FeatureRule::All => (0..self.p).collect(),
            FeatureRule::Sample(m) => {
                let mut c = sample(rng, self.p, m).into_vec();
                c.sort_unstable();
                c
            }
        };

        let Some(best) = self.best_split(rows, &candidates, sum, sse) else {
            return id;
        };
        // partition in place: left rows first
        let mut split = 0;
        for i in 0..n {
            if self.x[rows[i]][best.feature] <= best.threshold {
                rows.swap(i, split);
                split += 1;
            }
        }
        let (l, r) = rows.split_at_mut(split);
        let left = self.grow(l, depth + 1, rng);
        let right = self.grow(r, depth + 1, rng);
        self.nodes[id] = Node::Split { feature: best.feature, threshold: best.threshold, left, right };
        id
    }

    fn best_split(&self, rows: &[usize], candidates: &[usize], sum: f64, sse: f64) -> Option<Best> {
        let n = rows.len();
        let min_leaf = self.params.min_leaf;
        let parent = sum * sum / n as f64;
        let mut best: Option<Best> = None;
        let mut order: Vec<usize> = rows.to_vec();
        for &f in candidates {
            order.sort_by(|&a, &b| self.x[a][f].total_cmp(&self.x[b][f]));
            let mut left_sum = 0.0;
            for i in 0..n - 1 {
                left_sum += self.y[order[i]];
                let nl = i + 1;
                let nr = n - nl;
                let xv = self.x[order[i]][f];
                let xn = self.x[order[i + 1]][f];
                if nl < min_leaf || nr < min_leaf || xv == xn {
                    continue;
                }
                let right_sum = sum - left_sum;
                let gain = left_sum * left_sum / nl as f64 + right_sum * right_sum / nr as f64 - parent;
                if gain > 1e-12 * sse && best.as_ref().is_none_or(|b| gain > b.gain) {
                    best = Some(Best { feature: f, threshold: 0.5 * (xv + xn), gain });
                }
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(7)
    }

    #[test]
    fn constant_response_gives_single_leaf() {
        let x: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64, (i * i) as f64]).collect();
        let y = vec![3.5; 20];
        let t = fit_tree(&x, &y, &TreeParams { max_depth: None, min_leaf: 1 }, FeatureRule::All, &mut rng()).unwrap();
        assert_eq!(t.depth(), 0);
        assert_eq!(t.predict(&[100.0, -3.0]).unwrap(), 3.5);
    }

    #[test]
    fn min_leaf_equal_to_n_is_mean() {
        let x: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
        let y: Vec<f64> = (0..10).map(|i| (i * 3 % 7) as f64).collect();
        let t = fit_tree(&x, &y, &TreeParams { max_depth: None, min_leaf: 10 }, FeatureRule::All, &mut rng()).unwrap();
        assert_eq!(t.n_leaves(), 1);
        let mean = y.iter().sum::<f64>() / 10.0;
        assert!((t.predict(&[4.0]).unwrap() - mean).abs() < 1e-12);
    }

    #[test]
    fn step_function_root_threshold_brackets_jump() {
        // uneven grid so the midpoint is not trivially 0.5
        let xs: Vec<f64> = (0..100).map(|i| (i as f64 / 99.0).powf(1.3)).collect();
        let x: Vec<Vec<f64>> = xs.iter().map(|&v| vec![v]).collect();
        let y: Vec<f64> = xs.iter().map(|&v| if v > 0.5 { 1.0 } else { 0.0 }).collect();
        // enumerate all split gains as the oracle
        let mut sorted = xs.clone();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len();
        let mut best = (f64::NEG_INFINITY, 0.0);
        for i in 0..n - 1 {
            let (l, r) = (&y[..=i], &y[i + 1..]);
            let sl: f64 = l.iter().sum();
            let sr: f64 = r.iter().sum();
            let gain = sl * sl / l.len() as f64 + sr * sr / r.len() as f64;
            if gain > best.0 {
                best = (gain, 0.5 * (sorted[i] + sorted[i + 1]));
            }
        }
        let t = fit_tree(&x, &y, &TreeParams { max_depth: Some(1), min_leaf: 1 }, FeatureRule::All, &mut rng()).unwrap();
        let (f, thr) = t.root_split().unwrap();
        assert_eq!(f, 0);
        assert!((thr - best.1).abs() < 1e-15);
        let lo = xs.iter().copied().filter(|&v| v <= 0.5).fold(f64::MIN, f64::max);
        let hi = xs.iter().copied().filter(|&v| v > 0.5).fold(f64::MAX, f64::min);
        assert!(thr > lo && thr <= hi);
    }

    #[test]
    fn ties_prefer_lowest_feature() {
        // two identical columns produce identical gains
        let x: Vec<Vec<f64>> = (0..8).map(|i| vec![i as f64, i as f64]).collect();
        let y: Vec<f64> = (0..8).map(|i| if i < 4 { 0.0 } else { 1.0 }).collect();
        let t = fit_tree(&x, &y, &TreeParams { max_depth: Some(1), min_leaf: 1 }, FeatureRule::All, &mut rng()).unwrap();
        assert_eq!(t.root_split().unwrap().0, 0);
    }

    #[test]
    fn every_training_point_reaches_a_finite_leaf() {
        let x: Vec<Vec<f64>> = (0..40).map(|i| vec![(i as f64).sin(), (i as f64 * 0.7).cos()]).collect();
        let y: Vec<f64> = x.iter().map(|r| r[0] * 2.0 - r[1]).collect();
        let t = fit_tree(&x, &y, &TreeParams { max_depth: Some(4), min_leaf: 2 }, FeatureRule::All, &mut rng()).unwrap();
        let total: usize = t.leaves().iter().map(|l| l.1).sum();
        assert_eq!(total, 40);
        assert!(t.leaves().iter().all(|l| l.0.is_finite() && l.1 >= 2));
        assert!(t.depth() <= 4);
        assert!(matches!(t.predict(&[0.0]), Err(Error::DimensionMismatch { .. })));
    }
}
