//! Forecast combination: simple average, median, relative-performance
//! weights and rank weights from a rolling window of settled quarters.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::series::Quarter;
use crate::{Error, Result};

/// Trailing window for rolling MAEs, in settled quarters.
pub const DEFAULT_WINDOW: usize = 8;
/// Below this many settled quarters the weighted schemes use equal weights.
pub const MIN_HISTORY: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scheme {
    Simple,
    Median,
    Rpw,
    Rank,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [Scheme::Simple, Scheme::Median, Scheme::Rpw, Scheme::Rank];

    pub fn id(self) -> &'static str {
        match self {
            Scheme::Simple => "simple",
            Scheme::Median => "median",
            Scheme::Rpw => "rpw",
            Scheme::Rank => "rank",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|c| c.id() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| Error::Parse(format!("unknown combination scheme `{s}`")))
    }
}

/// Per-model weights at one horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightSet {
    pub horizon: usize,
    pub scheme: Scheme,
    pub models: Vec<String>,
    pub weights: Vec<f64>,
    /// Equal weights because the rolling history was too short.
    pub fallback: bool,
}

impl WeightSet {
    pub fn equal(horizon: usize, scheme: Scheme, models: Vec<String>) -> Self {
        let n = models.len();
        WeightSet { horizon, scheme, models, weights: vec![1.0 / n as f64; n], fallback: true }
    }

    pub fn apply(&self, nowcasts: &[f64]) -> Result<f64> {
        if nowcasts.len() != self.weights.len() {
            return Err(Error::DimensionMismatch { expected: self.weights.len(), actual: nowcasts.len() });
        }
        if nowcasts.is_empty() {
            return Err(Error::InvalidInput("no nowcasts to combine".into()));
        }
        Ok(self.weights.iter().zip(nowcasts).map(|(w, x)| w * x).sum())
    }
}

fn nonempty(nowcasts: &[f64]) -> Result<()> {
    if nowcasts.is_empty() {
        return Err(Error::InvalidInput("no nowcasts to combine".into()));
    }
    if nowcasts.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite nowcast".into()));
    }
    Ok(())
}

pub fn combine_simple(nowcasts: &[f64]) -> Result<f64> {
    nonempty(nowcasts)?;
    Ok(nowcasts.iter().sum::<f64>() / nowcasts.len() as f64)
}

/// Sample median; an even count averages the middle two.
pub fn combine_median(nowcasts: &[f64]) -> Result<f64> {
    nonempty(nowcasts)?;
    let mut v = nowcasts.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Ok(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}

fn check_maes(maes: &[f64]) -> Result<()> {
    if maes.is_empty() {
        return Err(Error::InvalidInput("no models to weight".into()));
    }
    if let Some(m) = maes.iter().find(|m| !(m.is_finite() && **m >= 0.0)) {
        return Err(Error::InvalidInput(format!("rolling MAE must be finite and non-negative, got {m}")));
    }
    Ok(())
}

/// Inverse-MAE weights. Models with an MAE of exactly zero share all weight.
pub fn rpw_weights(maes: &[f64]) -> Result<Vec<f64>> {
    check_maes(maes)?;
    let zeros = maes.iter().filter(|m| **m == 0.0).count();
    if zeros > 0 {
        return Ok(maes.iter().map(|m| if *m == 0.0 { 1.0 / zeros as f64 } else { 0.0 }).collect());
    }
    let inv: Vec<f64> = maes.iter().map(|m| 1.0 / m).collect();
    let total: f64 = inv.iter().sum();
    Ok(inv.iter().map(|v| v / total).collect())
}

/// Ranks with 1 = lowest MAE; tied models share the average of their ranks.
pub fn average_ranks(maes: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..maes.len()).collect();
    order.sort_by(|&a, &b| maes[a].total_cmp(&maes[b]));
    let mut ranks = vec![0.0; maes.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && maes[order[j + 1]] == maes[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &o in &order[i..=j] {
            ranks[o] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Inverse-rank weights.
pub fn rank_weights(maes: &[f64]) -> Result<Vec<f64>> {
    check_maes(maes)?;
    let inv: Vec<f64> = average_ranks(maes).iter().map(|r| 1.0 / r).collect();
    let total: f64 = inv.iter().sum();
    Ok(inv.iter().map(|v| v / total).collect())
}

/// Past forecast error of one model for one quarter and horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct PastError {
    pub quarter: Quarter,
    pub horizon: usize,
    pub model: String,
    pub error: f64,
}

/// Rolling MAEs at one horizon, or `None` when the history is too short.
#[derive(Debug, Clone, PartialEq)]
pub struct RollingMae {
    pub horizon: usize,
    pub models: Vec<String>,
    pub mae: Option<Vec<f64>>,
    /// Quarters in the window.
    pub quarters: Vec<Quarter>,
}

/// MAE per model over the last `window` quarters at `horizon` that are
/// settled (`<= last_settled`) and scored for every model.
pub fn rolling_mae(
    errors: &[PastError],
    models: &[String],
    horizon: usize,
    last_settled: Option<Quarter>,
    window: usize,
    min_history: usize,
) -> RollingMae {
    let mut by_quarter: BTreeMap<Quarter, BTreeMap<&str, f64>> = BTreeMap::new();
    if let Some(last) = last_settled {
        for e in errors.iter().filter(|e| e.horizon == horizon && e.quarter <= last) {
            by_quarter.entry(e.quarter).or_default().insert(e.model.as_str(), e.error.abs());
        }
    }
    let complete: Vec<(&Quarter, &BTreeMap<&str, f64>)> =
        by_quarter.iter().filter(|(_, m)| models.iter().all(|name| m.contains_key(name.as_str()))).collect();
    let take = complete.len().min(window);
    let recent = &complete[complete.len() - take..];
    let quarters: Vec<Quarter> = recent.iter().map(|(q, _)| **q).collect();
    let mae = (take >= min_history.max(1)).then(|| {
        models
            .iter()
            .map(|name| recent.iter().map(|(_, m)| m[name.as_str()]).sum::<f64>() / take as f64)
            .collect()
    });
    RollingMae { horizon, models: models.to_vec(), mae, quarters }
}

pub fn weights_rpw(history: &RollingMae) -> Result<WeightSet> {
    weighted(history, Scheme::Rpw, rpw_weights)
}

pub fn weights_rank(history: &RollingMae) -> Result<WeightSet> {
    weighted(history, Scheme::Rank, rank_weights)
}

fn weighted(history: &RollingMae, scheme: Scheme, f: fn(&[f64]) -> Result<Vec<f64>>) -> Result<WeightSet> {
    match &history.mae {
        None => Ok(WeightSet::equal(history.horizon, scheme, history.models.clone())),
        Some(m) => Ok(WeightSet {
            horizon: history.horizon,
            scheme,
            models: history.models.clone(),
            weights: f(m)?,
            fallback: false,
        }),
    }
}

/// Combine nowcasts (ordered as `history.models`) with the given scheme.
pub fn combine(scheme: Scheme, nowcasts: &[f64], history: &RollingMae) -> Result<f64> {
    match scheme {
        Scheme::Simple => combine_simple(nowcasts),
        Scheme::Median => combine_median(nowcasts),
        Scheme::Rpw => weights_rpw(history)?.apply(nowcasts),
        Scheme::Rank => weights_rank(history)?.apply(nowcasts),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &[f64], b: &[f64]) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12)
    }

    #[test]
    fn simple_and_median() {
        assert_eq!(combine_simple(&[1.0, 2.0, 3.0]).unwrap(), 2.0);
        assert_eq!(combine_simple(&[4.5]).unwrap(), 4.5);
        assert_eq!(combine_median(&[1.0, 2.0, 100.0]).unwrap(), 2.0);
        assert_eq!(combine_median(&[1.0, 3.0]).unwrap(), 2.0);
        assert!(combine_simple(&[]).is_err());
        assert!(combine_median(&[]).is_err());
    }

    #[test]
    fn weight_formulas() {
        assert!(close(&rpw_weights(&[1.0, 2.0]).unwrap(), &[2.0 / 3.0, 1.0 / 3.0]));
        assert!(close(&rpw_weights(&[0.7, 0.7, 0.7]).unwrap(), &[1.0 / 3.0; 3]));
        assert!(close(&rank_weights(&[0.1, 0.5, 0.9]).unwrap(), &[6.0 / 11.0, 3.0 / 11.0, 2.0 / 11.0]));
        assert!(close(&rank_weights(&[2.0, 2.0]).unwrap(), &[0.5, 0.5]));
        assert!(close(&rpw_weights(&[0.0, 1.0, 0.0]).unwrap(), &[0.5, 0.0, 0.5]));
        assert_eq!(average_ranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
    }

    #[test]
    fn three_model_rpw_by_hand() {
        let w = rpw_weights(&[0.5, 1.0, 2.0]).unwrap();
        // inverses 2, 1, 0.5 over 3.5
        assert!(close(&w, &[2.0 / 3.5, 1.0 / 3.5, 0.5 / 3.5]));
    }

    #[test]
    fn five_ranks_are_harmonic() {
        let w = rank_weights(&[5.0, 4.0, 3.0, 2.0, 1.0]).unwrap();
        let h5: f64 = (1..=5).map(|i| 1.0 / i as f64).sum();
        for (l, wl) in w.iter().enumerate() {
            let rank = 5 - l;
            assert!((wl - 1.0 / rank as f64 / h5).abs() < 1e-12);
        }
    }

    fn err(q: Quarter, model: &str, e: f64) -> PastError {
        PastError { quarter: q, horizon: 1, model: model.into(), error: e }
    }

    #[test]
    fn rolling_window_respects_settlement() {
        let models = vec!["a".to_string(), "b".to_string()];
        let q0 = Quarter::new(2010, 1);
        let mut errors = Vec::new();
        for i in 0..12 {
            errors.push(err(q0 + i, "a", 1.0));
            errors.push(err(q0 + i, "b", if i >= 10 { 100.0 } else { -2.0 }));
        }
        // only quarters up to q0+9 are settled: the large errors are invisible
        let h = rolling_mae(&errors, &models, 1, Some(q0 + 9), DEFAULT_WINDOW, MIN_HISTORY);
        assert_eq!(h.quarters.len(), 8);
        assert_eq!(*h.quarters.last().unwrap(), q0 + 9);
        assert_eq!(h.mae, Some(vec![1.0, 2.0]));
        let short = rolling_mae(&errors, &models, 1, Some(q0 + 2), DEFAULT_WINDOW, MIN_HISTORY);
        assert!(short.mae.is_none());
        let w = weights_rank(&short).unwrap();
        assert!(w.fallback && close(&w.weights, &[0.5, 0.5]));
        assert!(rolling_mae(&errors, &models, 1, None, 8, 4).mae.is_none());
        assert!(rolling_mae(&errors, &models, 2, Some(q0 + 11), 8, 4).mae.is_none());
    }

    #[test]
    fn scheme_parsing() {
        for s in Scheme::ALL {
            assert_eq!(s.id().parse::<Scheme>().unwrap(), s);
        }
        assert!("mean".parse::<Scheme>().is_err());
    }
}
