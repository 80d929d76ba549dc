//! Tail filling with AIC-selected autoregressions and head filling with an
//! iterative random-forest imputer.

use nalgebra::{DMatrix, DVector};

use crate::series::{Frequency, Month, MonthlyFrame, PanelDataset, TimeSeries};
use crate::trees::{fit_rf, predict_rf, ForestParams};
use crate::{Error, Result};

/// Longest tail gap an AR extrapolation is allowed to bridge.
pub const MAX_TAIL_GAP: usize = 12;

/// Extra observations beyond `p_max` an AR fit needs.
pub const MIN_EXTRA_HISTORY: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct ARFit {
    pub p: usize,
    pub intercept: f64,
    /// `phi[i]` multiplies the value `i + 1` periods back.
    pub phi: Vec<f64>,
    pub aic: f64,
    pub rss: f64,
    /// Number of observations in the common estimation sample.
    pub n: usize,
}

impl ARFit {
    /// One-step prediction from `history` (most recent value last).
    pub fn predict_next(&self, history: &[f64]) -> f64 {
        let k = history.len();
        self.intercept + self.phi.iter().enumerate().map(|(i, f)| f * history[k - 1 - i]).sum::<f64>()
    }

    /// Iterated `h`-step forecasts.
    pub fn forecast(&self, history: &[f64], h: usize) -> Vec<f64> {
        let mut path = history.to_vec();
        for _ in 0..h {
            let next = self.predict_next(&path);
            path.push(next);
        }
        path.split_off(history.len())
    }
}

/// AIC in the `n log(RSS/n) + 2(p+1)` convention.
pub fn aic(rss: f64, n: usize, p: usize) -> f64 {
    let n_f = n as f64;
    n_f * (rss / n_f).max(f64::MIN_POSITIVE).ln() + 2.0 * (p as f64 + 1.0)
}

/// Least-squares AR(p) fit on the sample `values[start..]` as dependent.
fn fit_ar_order(values: &[f64], p: usize, start: usize) -> ARFit {
    let n = values.len() - start;
    let mut x = DMatrix::zeros(n, p + 1);
    let mut y = DVector::zeros(n);
    for (r, t) in (start..values.len()).enumerate() {
        y[r] = values[t];
        x[(r, 0)] = 1.0;
        for i in 1..=p {
            x[(r, i)] = values[t - i];
        }
    }
    let scale = y.amax().max(1.0);
    let beta = x
        .clone()
        .svd(true, true)
        .solve(&y, 1e-12 * scale)
        .unwrap_or_else(|_| DVector::zeros(p + 1));
    let rss = (&y - &x * &beta).norm_squared();
    ARFit {
        p,
        intercept: beta[0],
        phi: beta.iter().skip(1).copied().collect(),
        aic: aic(rss, n, p),
        rss,
        n,
    }
}

/// Fit AR(1)..AR(p_max) on a common sample and return every fit.
///
/// The first `p_max` values serve as presample, so all orders are compared on
/// the same `len - p_max` observations.
pub fn fit_ar_orders(values: &[f64], p_max: usize) -> Result<Vec<ARFit>> {
    if p_max == 0 {
        return Err(Error::InvalidInput("p_max must be at least 1".into()));
    }
    if values.len() < p_max + MIN_EXTRA_HISTORY {
        return Err(Error::InsufficientHistory {
            series: String::new(),
            required: p_max + MIN_EXTRA_HISTORY,
            actual: values.len(),
        });
    }
    Ok((1..=p_max).map(|p| fit_ar_order(values, p, p_max)).collect())
}

/// AIC-minimising AR fit (ties go to the smaller order).
pub fn fit_ar(values: &[f64], p_max: usize) -> Result<ARFit> {
    let fits = fit_ar_orders(values, p_max)?;
    let mut best = 0;
    for (i, f) in fits.iter().enumerate() {
        if f.aic < fits[best].aic {
            best = i;
        }
    }
    Ok(fits.into_iter().nth(best).expect("p_max >= 1"))
}

/// Fill the trailing `None`s of a column with iterated AR forecasts.
///
/// The AR model is estimated on the last contiguous observed run before the
/// gap. Entries before the tail are never touched.
pub fn ar_fill_column(name: &str, col: &[Option<f64>], p_max: usize) -> Result<Vec<Option<f64>>> {
    let last = col
        .iter()
        .rposition(Option::is_some)
        .ok_or_else(|| Error::AllMissing(name.to_string()))?;
    let gap = col.len() - 1 - last;
    if gap == 0 {
        return Ok(col.to_vec());
    }
    if gap > MAX_TAIL_GAP {
        return Err(Error::InvalidInput(format!(
            "`{name}`: tail gap of {gap} periods exceeds the {MAX_TAIL_GAP}-period limit"
        )));
    }
    let first = col[..=last].iter().rposition(Option::is_none).map_or(0, |i| i + 1);
    let history: Vec<f64> = col[first..=last].iter().map(|v| v.expect("contiguous run")).collect();
    let fit = fit_ar(&history, p_max).map_err(|e| match e {
        Error::InsufficientHistory { required, actual, .. } => {
            Error::InsufficientHistory { series: name.to_string(), required, actual }
        }
        other => other,
    })?;
    let mut out = col.to_vec();
    for (k, v) in fit.forecast(&history, gap).into_iter().enumerate() {
        out[last + 1 + k] = Some(v);
    }
    Ok(out)
}

/// Extend a monthly series with AR forecasts through month `until`.
///
/// A series already reaching `until` is returned unchanged.
pub fn ar_fill_tail(s: &TimeSeries, p_max: usize, until: Month) -> Result<TimeSeries> {
    if s.freq() != Frequency::Monthly {
        return Err(Error::InvalidInput(format!("`{}`: AR tail fill expects a monthly series", s.name())));
    }
    let first = s.first_date().ok_or_else(|| Error::AllMissing(s.name().to_string()))?;
    let start = Month::from_date(first);
    let last = Month::from_date(s.last_date().expect("non-empty"));
    if until <= last {
        return Ok(s.clone());
    }
    let col = s.monthly_column(start, (until - start + 1) as usize);
    let filled = ar_fill_column(s.name(), &col, p_max)?;
    TimeSeries::from_monthly(s.name(), start, &filled, s.units())
}

/// Fill the tail of every indicator column of a frame.
pub fn ar_fill_frame(frame: &MonthlyFrame, p_max: usize) -> Result<MonthlyFrame> {
    let mut out = frame.clone();
    for (j, col) in frame.columns.iter().enumerate() {
        out.columns[j] = ar_fill_column(&frame.names[j], col, p_max)?;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeadImputeParams {
    pub forest: ForestParams,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for HeadImputeParams {
    fn default() -> Self {
        HeadImputeParams { forest: ForestParams::default(), max_iter: 10, seed: 0 }
    }
}

/// Number of leading `None`s in a column.
pub fn head_gap(col: &[Option<f64>]) -> usize {
    col.iter().take_while(|v| v.is_none()).count()
}

fn tail_gap(col: &[Option<f64>]) -> usize {
    col.iter().rev().take_while(|v| v.is_none()).count()
}

/// Iterative random-forest imputation of the leading gaps of each column.
///
/// Head gaps start at the column mean; each sweep regresses every gappy
/// column on all others with a forest and overwrites its head entries. The
/// sweep stops once the relative change `sum (new-old)^2 / sum new^2` rises,
/// keeping the previous imputation, or after `max_iter` sweeps. Interior and
/// tail gaps are left as they are.
pub fn rf_impute_head(frame: &MonthlyFrame, params: &HeadImputeParams) -> Result<MonthlyFrame> {
    let k = frame.n_series();
    let t_len = frame.len();
    for (j, col) in frame.columns.iter().enumerate() {
        if col.iter().all(Option::is_none) {
            return Err(Error::AllMissing(frame.names[j].clone()));
        }
    }
    let heads: Vec<usize> = frame.columns.iter().map(|c| head_gap(c)).collect();
    let window = heads.iter().copied().max().unwrap_or(0);
    if window == 0 {
        return Ok(frame.clone());
    }
    if k < 2 {
        return Err(Error::InvalidInput("head imputation needs at least two series".into()));
    }
    if !frame.columns.iter().any(|c| c[..window].iter().all(Option::is_some)) {
        return Err(Error::InvalidInput(
            "no series is fully observed over the head window".into(),
        ));
    }

    // working matrix: every gap starts at the column mean
    let means: Vec<f64> = frame
        .columns
        .iter()
        .map(|c| {
            let obs: Vec<f64> = c.iter().flatten().copied().collect();
            obs.iter().sum::<f64>() / obs.len() as f64
        })
        .collect();
    let mut work: Vec<Vec<f64>> = frame
        .columns
        .iter()
        .zip(&means)
        .map(|(c, m)| c.iter().map(|v| v.unwrap_or(*m)).collect())
        .collect();
    let tail_start: Vec<usize> = frame.columns.iter().map(|c| t_len - tail_gap(c)).collect();
    // a row is usable as training data when no column is extrapolated there
    let row_usable: Vec<bool> = (0..t_len).map(|t| tail_start.iter().all(|&s| t < s)).collect();

    let mut order: Vec<usize> = (0..k).filter(|&j| heads[j] > 0).collect();
    order.sort_by_key(|&j| (heads[j], j));

    let mut prev_delta = f64::INFINITY;
    let mut previous = work.clone();
    for iter in 0..params.max_iter.max(1) {
        let before = work.clone();
        for &j in &order {
            let mut x = Vec::new();
            let mut y = Vec::new();
            for t in (heads[j]..t_len).filter(|&t| row_usable[t] && frame.columns[j][t].is_some()) {
                x.push((0..k).filter(|&i| i != j).map(|i| work[i][t]).collect::<Vec<f64>>());
                y.push(work[j][t]);
            }
            if y.is_empty() {
                return Err(Error::InvalidInput(format!(
                    "`{}` has no usable training rows for head imputation",
                    frame.names[j]
                )));
            }
            let seed = params.seed.wrapping_add((iter * k + j) as u64);
            let model = fit_rf(&x, &y, &params.forest, seed)?;
            for t in 0..heads[j] {
                let row: Vec<f64> = (0..k).filter(|&i| i != j).map(|i| work[i][t]).collect();
                work[j][t] = predict_rf(&model, &row)?;
            }
        }
        let (mut num, mut den) = (0.0, 0.0);
        for &j in &order {
            for t in 0..heads[j] {
                num += (work[j][t] - before[j][t]).powi(2);
                den += work[j][t].powi(2);
            }
        }
        let delta = if den > 0.0 { num / den } else { 0.0 };
        if delta > prev_delta {
            work = previous;
            break;
        }
        prev_delta = delta;
        previous = work.clone();
        if delta == 0.0 {
            break;
        }
    }

    let mut out = frame.clone();
    for &j in &order {
        for t in 0..heads[j] {
            out.columns[j][t] = Some(work[j][t]);
        }
    }
    Ok(out)
}

/// Head-fill a vintage panel so every indicator starts at the panel start.
pub fn rf_impute_head_panel(panel: &PanelDataset, params: &HeadImputeParams) -> Result<PanelDataset> {
    let frame = panel.frame()?;
    let filled = rf_impute_head(&frame, params)?;
    let mut out = panel.clone();
    for (j, s) in panel.indicators.iter().enumerate() {
        out.indicators[j] = TimeSeries::from_monthly(s.name(), filled.start, &filled.columns[j], s.units())?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn ar1(phi: f64, sigma: f64, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let e = Normal::new(0.0, sigma).unwrap();
        let mut x = vec![0.0; n + 100];
        for t in 1..x.len() {
            x[t] = phi * x[t - 1] + e.sample(&mut rng);
        }
        x.split_off(100)
    }

    #[test]
    fn constant_series_fills_constant() {
        let mut col: Vec<Option<f64>> = vec![Some(3.5); 20];
        col.push(None);
        let out = ar_fill_column("c", &col, 6).unwrap();
        assert!((out[20].unwrap() - 3.5).abs() < 1e-9);
    }

    #[test]
    fn no_gap_is_noop() {
        let col: Vec<Option<f64>> = (0..20).map(|i| Some(i as f64)).collect();
        assert_eq!(ar_fill_column("c", &col, 6).unwrap(), col);
    }

    #[test]
    fn guards() {
        let mut col: Vec<Option<f64>> = vec![Some(1.0); 10];
        col.push(None);
        assert!(matches!(ar_fill_column("s", &col, 6), Err(Error::InsufficientHistory { .. })));
        let mut long: Vec<Option<f64>> = ar1(0.5, 1.0, 40, 1).into_iter().map(Some).collect();
        long.extend(std::iter::repeat_n(None, 13));
        assert!(ar_fill_column("s", &long, 6).is_err());
    }

    #[test]
    fn aic_matches_formula_on_common_sample() {
        let x = ar1(0.6, 1.0, 120, 3);
        let fits = fit_ar_orders(&x, 6).unwrap();
        for f in &fits {
            assert_eq!(f.n, 114);
            let expected = 114.0 * (f.rss / 114.0).ln() + 2.0 * (f.p as f64 + 1.0);
            assert!((f.aic - expected).abs() < 1e-9);
        }
        // nested least squares: RSS cannot rise with the order
        for w in fits.windows(2) {
            assert!(w[1].rss <= w[0].rss + 1e-9);
        }
    }

    #[test]
    fn observed_entries_untouched_and_series_fill() {
        let x = ar1(0.8, 0.1, 60, 4);
        let s = TimeSeries::from_monthly(
            "x",
            Month::new(2015, 1),
            &x.iter().map(|v| Some(*v)).collect::<Vec<_>>(),
            crate::series::Units::Percent,
        )
        .unwrap();
        let until = Month::new(2015, 1) + 62;
        let f = ar_fill_tail(&s, 6, until).unwrap();
        assert_eq!(f.len(), 63);
        assert_eq!(&f.observations()[..60], s.observations());
        assert_eq!(ar_fill_tail(&s, 6, Month::new(2015, 3)).unwrap(), s);
    }

    fn collinear_frame(n: usize, masked: usize) -> (MonthlyFrame, Vec<f64>) {
        let a = ar1(0.7, 1.0, n, 9);
        let b: Vec<f64> = a.iter().map(|v| 2.0 * v + 1.0).collect();
        let mut bm: Vec<Option<f64>> = b.iter().map(|v| Some(*v)).collect();
        for v in bm.iter_mut().take(masked) {
            *v = None;
        }
        let frame = MonthlyFrame::new(
            Month::new(2010, 1),
            vec!["a".into(), "b".into()],
            vec![a.iter().map(|v| Some(*v)).collect(), bm],
            vec![None; n],
        )
        .unwrap();
        (frame, b)
    }

    fn small_forest() -> HeadImputeParams {
        HeadImputeParams { forest: ForestParams { n_trees: 100, ..Default::default() }, ..Default::default() }
    }

    #[test]
    fn collinear_head_recovered() {
        let (frame, truth) = collinear_frame(600, 12);
        let out = rf_impute_head(&frame, &small_forest()).unwrap();
        let sd = {
            let m = truth.iter().sum::<f64>() / truth.len() as f64;
            (truth.iter().map(|v| (v - m).powi(2)).sum::<f64>() / truth.len() as f64).sqrt()
        };
        for t in 0..12 {
            let err = (out.columns[1][t].unwrap() - truth[t]).abs();
            assert!(err < 0.15 * sd, "t={t} err={err} sd={sd}");
        }
        assert_eq!(out.columns[0], frame.columns[0]);
        assert_eq!(out.columns[1][12..], frame.columns[1][12..]);
    }

    #[test]
    fn complete_panel_is_unchanged() {
        let (frame, _) = collinear_frame(50, 0);
        assert_eq!(rf_impute_head(&frame, &small_forest()).unwrap(), frame);
    }

    #[test]
    fn constant_column_gap_gets_constant() {
        let a = ar1(0.5, 1.0, 40, 2);
        let mut c = vec![Some(4.0); 40];
        c[0] = None;
        let frame = MonthlyFrame::new(
            Month::new(2010, 1),
            vec!["a".into(), "c".into()],
            vec![a.into_iter().map(Some).collect(), c],
            vec![None; 40],
        )
        .unwrap();
        let out = rf_impute_head(&frame, &small_forest()).unwrap();
        assert_eq!(out.columns[1][0], Some(4.0));
    }

    #[test]
    fn all_missing_column_errors() {
        let frame = MonthlyFrame::new(
            Month::new(2010, 1),
            vec!["a".into(), "z".into()],
            vec![vec![Some(1.0); 5], vec![None; 5]],
            vec![None; 5],
        )
        .unwrap();
        assert!(matches!(rf_impute_head(&frame, &small_forest()), Err(Error::AllMissing(_))));
    }
}
