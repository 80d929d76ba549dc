//! OLS bridge regressions and Lasso variable selection.

use nalgebra::{DMatrix, DVector};

use crate::trees::check_design;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct OLSFit {
    pub intercept: f64,
    pub coef: Vec<f64>,
    /// `RSS / (n - k - 1)`.
    pub sigma2: f64,
    pub n: usize,
}

impl OLSFit {
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.coef.len() {
            return Err(Error::DimensionMismatch { expected: self.coef.len(), actual: x.len() });
        }
        Ok(self.intercept + self.coef.iter().zip(x).map(|(b, v)| b * v).sum::<f64>())
    }
}

fn design_with_intercept(x: &[Vec<f64>], p: usize) -> DMatrix<f64> {
    DMatrix::from_fn(x.len(), p + 1, |i, j| if j == 0 { 1.0 } else { x[i][j - 1] })
}

/// Ordinary least squares of `y` on an intercept and the columns of `x`.
///
/// A rank-deficient design is reported with every regressor column (0-based)
/// that takes part in an exact linear dependence.
pub fn fit_ols(x: &[Vec<f64>], y: &[f64]) -> Result<OLSFit> {
    let p = check_design(x, y)?;
    let n = y.len();
    if n <= p + 1 {
        return Err(Error::InsufficientHistory { series: "ols design".into(), required: p + 2, actual: n });
    }
    let a = design_with_intercept(x, p);
    let b = DVector::from_column_slice(y);
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let tol = smax * 1e-10 * n as f64;
    let v_t = svd.v_t.as_ref().expect("requested V");
    let mut offending = Vec::new();
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s <= tol {
            for j in 1..=p {
                if v_t[(k, j)].abs() > 1e-6 && !offending.contains(&(j - 1)) {
                    offending.push(j - 1);
                }
            }
        }
    }
    if !offending.is_empty() {
        offending.sort_unstable();
        return Err(Error::RankDeficient(offending));
    }
    let beta = svd.solve(&b, tol).map_err(|e| Error::InvalidInput(e.to_string()))?;
    let rss = (&b - &a * &beta).norm_squared();
    Ok(OLSFit {
        intercept: beta[0],
        coef: beta.iter().skip(1).copied().collect(),
        sigma2: rss / (n - p - 1) as f64,
        n,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LassoFit {
    pub lambda: f64,
    pub intercept: f64,
    pub coef: Vec<f64>,
    pub active_set: Vec<usize>,
    pub sweeps: usize,
}

impl LassoFit {
    pub fn predict(&self, x: &[f64]) -> f64 {
        self.intercept + self.coef.iter().zip(x).map(|(b, v)| b * v).sum::<f64>()
    }
}

/// Objective `(1/2n) sum r^2 + lambda sum |beta_j|`.
pub fn lasso_objective(x: &[Vec<f64>], y: &[f64], intercept: f64, coef: &[f64], lambda: f64) -> f64 {
    let n = y.len() as f64;
    let rss: f64 = x
        .iter()
        .zip(y)
        .map(|(row, t)| (t - intercept - row.iter().zip(coef).map(|(a, b)| a * b).sum::<f64>()).powi(2))
        .sum();
    rss / (2.0 * n) + lambda * coef.iter().map(|b| b.abs()).sum::<f64>()
}

/// Gradient `(1/n) X_j' r` of the smooth part at a fit, per column.
pub fn lasso_gradient(x: &[Vec<f64>], y: &[f64], fit: &LassoFit) -> Vec<f64> {
    let n = y.len() as f64;
    let p = fit.coef.len();
    let mut g = vec![0.0; p];
    for (row, t) in x.iter().zip(y) {
        let r = t - fit.predict(row);
        for j in 0..p {
            g[j] += row[j] * r / n;
        }
    }
    g
}

/// Largest KKT violation of a Lasso fit.
pub fn kkt_residual(x: &[Vec<f64>], y: &[f64], fit: &LassoFit) -> f64 {
    lasso_gradient(x, y, fit)
        .iter()
        .zip(&fit.coef)
        .map(|(g, b)| if *b == 0.0 { (g.abs() - fit.lambda).max(0.0) } else { (g - fit.lambda * b.signum()).abs() })
        .fold(0.0, f64::max)
}

/// `max_j |X_j' (y - ybar)| / n`, the smallest penalty that zeroes every coefficient.
pub fn lambda_max(x: &[Vec<f64>], y: &[f64]) -> f64 {
    let n = y.len() as f64;
    let ybar = y.iter().sum::<f64>() / n;
    let p = x.first().map_or(0, Vec::len);
    (0..p)
        .map(|j| (x.iter().zip(y).map(|(row, t)| row[j] * (t - ybar)).sum::<f64>() / n).abs())
        .fold(0.0, f64::max)
}

fn soft(z: f64, g: f64) -> f64 {
    if z > g {
        z - g
    } else if z < -g {
        z + g
    } else {
        0.0
    }
}

const LASSO_TOL: f64 = 1e-7;
const LASSO_MAX_SWEEPS: usize = 100_000;

/// Lasso by cyclic coordinate descent with an unpenalised intercept.
pub fn fit_lasso(x: &[Vec<f64>], y: &[f64], lambda: f64) -> Result<LassoFit> {
    fit_lasso_warm(x, y, lambda, None)
}

/// [`fit_lasso`] started from `warm` coefficients.
pub fn fit_lasso_warm(x: &[Vec<f64>], y: &[f64], lambda: f64, warm: Option<&[f64]>) -> Result<LassoFit> {
    let p = check_design(x, y)?;
    if !(lambda > 0.0) {
        return Err(Error::InvalidInput(format!("lasso penalty must be positive, got {lambda}")));
    }
    let n = y.len();
    let nf = n as f64;
    let cols: Vec<Vec<f64>> = (0..p).map(|j| x.iter().map(|r| r[j]).collect()).collect();
    let sq: Vec<f64> = cols.iter().map(|c| c.iter().map(|v| v * v).sum::<f64>() / nf).collect();
    let mut beta = warm.map_or_else(|| vec![0.0; p], <[f64]>::to_vec);
    if beta.len() != p {
        return Err(Error::DimensionMismatch { expected: p, actual: beta.len() });
    }
    let mut resid: Vec<f64> = (0..n)
        .map(|i| y[i] - (0..p).map(|j| cols[j][i] * beta[j]).sum::<f64>())
        .collect();
    let mut intercept = resid.iter().sum::<f64>() / nf;
    resid.iter_mut().for_each(|r| *r -= intercept);

    let mut sweeps = 0;
    loop {
        sweeps += 1;
        let mut max_change: f64 = 0.0;
        for j in 0..p {
            if sq[j] == 0.0 {
                continue;
            }
            let old = beta[j];
            let z = cols[j].iter().zip(&resid).map(|(a, r)| a * r).sum::<f64>() / nf + sq[j] * old;
            let new = soft(z, lambda) / sq[j];
            if new != old {
                let d = new - old;
                for (r, a) in resid.iter_mut().zip(&cols[j]) {
                    *r -= d * a;
                }
                beta[j] = new;
                max_change = max_change.max(d.abs());
            }
        }
        let shift = resid.iter().sum::<f64>() / nf;
        intercept += shift;
        resid.iter_mut().for_each(|r| *r -= shift);
        max_change = max_change.max(shift.abs());
        if max_change < LASSO_TOL || sweeps >= LASSO_MAX_SWEEPS {
            break;
        }
    }
    let active_set = (0..p).filter(|&j| beta[j] != 0.0).collect();
    Ok(LassoFit { lambda, intercept, coef: beta, active_set, sweeps })
}

/// Outcome of BIC-tuned Lasso selection.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    /// Selected columns (all columns when `fallback` is set).
    pub active: Vec<usize>,
    pub lambda: f64,
    pub bic: f64,
    /// True when the chosen penalty kept no variable.
    pub fallback: bool,
}

pub const SELECTION_GRID: usize = 50;
pub const SELECTION_MIN_OBS: usize = 12;

/// Standardise columns (population sd); constant columns are left at zero.
fn standardize_columns(x: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = x.len() as f64;
    let p = x.first().map_or(0, Vec::len);
    let mut out = x.to_vec();
    for j in 0..p {
        let m = x.iter().map(|r| r[j]).sum::<f64>() / n;
        let sd = (x.iter().map(|r| (r[j] - m).powi(2)).sum::<f64>() / n).sqrt();
        for (o, r) in out.iter_mut().zip(x) {
            o[j] = if sd > 0.0 { (r[j] - m) / sd } else { 0.0 };
        }
    }
    out
}

/// Lasso pre-selection with the penalty chosen by BIC.
///
/// The design is standardised and `y` centred; the penalty runs over a
/// log-spaced grid from `lambda_max` down to `lambda_max / 1000`, with warm
/// starts, and the grid point minimising `n log(RSS/n) + df log n` wins.
pub fn select_variables(x: &[Vec<f64>], y: &[f64]) -> Result<Selection> {
    let p = check_design(x, y)?;
    let n = y.len();
    if n < SELECTION_MIN_OBS {
        return Err(Error::InsufficientHistory { series: "lasso selection".into(), required: SELECTION_MIN_OBS, actual: n });
    }
    let xs = standardize_columns(x);
    let ybar = y.iter().sum::<f64>() / n as f64;
    let yc: Vec<f64> = y.iter().map(|v| v - ybar).collect();
    let lmax = lambda_max(&xs, &yc);
    let all: Vec<usize> = (0..p).collect();
    if lmax <= 0.0 {
        return Ok(Selection { active: all, lambda: 0.0, bic: f64::NAN, fallback: true });
    }
    let nf = n as f64;
    let mut best: Option<(f64, f64, Vec<usize>)> = None;
    let mut warm = vec![0.0; p];
    for g in 0..SELECTION_GRID {
        let lambda = lmax * 1e-3_f64.powf(g as f64 / (SELECTION_GRID - 1) as f64);
        let fit = fit_lasso_warm(&xs, &yc, lambda, Some(&warm))?;
        let rss: f64 = xs.iter().zip(&yc).map(|(r, t)| (t - fit.predict(r)).powi(2)).sum();
        let df = fit.active_set.len() as f64;
        let bic = nf * (rss / nf).max(f64::MIN_POSITIVE).ln() + df * nf.ln();
        if best.as_ref().is_none_or(|b| bic < b.0) {
            best = Some((bic, lambda, fit.active_set.clone()));
        }
        warm = fit.coef;
    }
    let (bic, lambda, active) = best.expect("non-empty grid");
    if active.is_empty() {
        return Ok(Selection { active: all, lambda, bic, fallback: true });
    }
    Ok(Selection { active, lambda, bic, fallback: false })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn random_design(n: usize, p: usize, seed: u64) -> (Vec<Vec<f64>>, ChaCha8Rng) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = (0..n).map(|_| (0..p).map(|_| rng.sample(StandardNormal)).collect()).collect();
        (x, rng)
    }

    #[test]
    fn exact_line() {
        let x: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
        let y: Vec<f64> = (0..10).map(|i| 2.0 * i as f64).collect();
        let f = fit_ols(&x, &y).unwrap();
        assert!((f.coef[0] - 2.0).abs() < 1e-10);
        assert!(f.intercept.abs() < 1e-10);
    }

    #[test]
    fn orthogonal_response() {
        let x: Vec<Vec<f64>> = [-1.0, 1.0, -1.0, 1.0].iter().map(|v| vec![*v]).collect();
        let y = [1.0, 1.0, 3.0, 3.0];
        let f = fit_ols(&x, &y).unwrap();
        assert!(f.coef[0].abs() < 1e-12);
        assert!((f.intercept - 2.0).abs() < 1e-12);
    }

    #[test]
    fn residuals_orthogonal_to_columns() {
        let (x, mut rng) = random_design(30, 5, 1);
        let y: Vec<f64> = x.iter().map(|r| r[0] - 0.5 * r[3] + rng.sample::<f64, _>(StandardNormal)).collect();
        let f = fit_ols(&x, &y).unwrap();
        let res: Vec<f64> = x.iter().zip(&y).map(|(r, t)| t - f.predict(r).unwrap()).collect();
        assert!(res.iter().sum::<f64>().abs() < 1e-8);
        for j in 0..5 {
            let dot: f64 = x.iter().zip(&res).map(|(r, e)| r[j] * e).sum();
            assert!(dot.abs() < 1e-8, "column {j}: {dot}");
        }
    }

    #[test]
    fn collinear_columns_named() {
        let (mut x, _) = random_design(20, 3, 2);
        for r in &mut x {
            r[2] = 2.0 * r[0];
        }
        let y = vec![1.0; 20];
        match fit_ols(&x, &y) {
            Err(Error::RankDeficient(cols)) => assert_eq!(cols, vec![0, 2]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn lasso_kills_at_lambda_max() {
        let (x, mut rng) = random_design(40, 4, 3);
        let y: Vec<f64> = x.iter().map(|r| r[1] + 0.1 * rng.sample::<f64, _>(StandardNormal)).collect();
        let lm = lambda_max(&x, &y);
        let f = fit_lasso(&x, &y, lm * 1.0001).unwrap();
        assert!(f.active_set.is_empty());
        assert!(fit_lasso(&x, &y, 0.0).is_err());
    }

    #[test]
    fn lasso_tiny_penalty_matches_ols() {
        let (x, mut rng) = random_design(60, 4, 4);
        let y: Vec<f64> = x.iter().map(|r| 1.0 + r[0] - 2.0 * r[2] + rng.sample::<f64, _>(StandardNormal)).collect();
        let ols = fit_ols(&x, &y).unwrap();
        let l = fit_lasso(&x, &y, 1e-9).unwrap();
        for j in 0..4 {
            assert!((ols.coef[j] - l.coef[j]).abs() < 1e-4);
        }
        assert!((ols.intercept - l.intercept).abs() < 1e-4);
    }

    #[test]
    fn orthonormal_design_soft_thresholds() {
        // columns with (1/n) X'X = I and zero means
        let x: Vec<Vec<f64>> = vec![
            vec![1.0, 1.0],
            vec![1.0, -1.0],
            vec![-1.0, 1.0],
            vec![-1.0, -1.0],
        ];
        let y = [3.0, 1.0, 0.5, -2.0];
        let ols = fit_ols(&x, &y).unwrap();
        let lambda = 0.6;
        let l = fit_lasso(&x, &y, lambda).unwrap();
        for j in 0..2 {
            assert!((l.coef[j] - soft(ols.coef[j], lambda)).abs() < 1e-7);
        }
        assert!(kkt_residual(&x, &y, &l) < 1e-5);
    }

    #[test]
    fn selection_falls_back_on_empty() {
        let x: Vec<Vec<f64>> = (0..12).map(|i| vec![(i % 2) as f64, 0.0]).collect();
        let y = vec![1.0; 12];
        let s = select_variables(&x, &y).unwrap();
        assert!(s.fallback);
        assert_eq!(s.active, vec![0, 1]);
    }
}
