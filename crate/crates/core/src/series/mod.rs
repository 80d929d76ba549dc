//! Time series containers, transforms and pseudo-real-time vintages.

mod calendar;
pub mod io;
mod vintage;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use calendar::{synthetic_day, AsOf, Month, Quarter, SYNTHETIC_MONTH_DAYS};
pub use vintage::{
    vintage_at, AnnounceDay, Dataset, PanelDataset, SeriesKind, SeriesMeta, Transform, VintageView,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Frequency {
    Daily,
    Weekly,
    Monthly,
    Quarterly,
}

impl Frequency {
    pub fn periods_per_year(self) -> Option<usize> {
        match self {
            Frequency::Daily => None,
            Frequency::Weekly => Some(52),
            Frequency::Monthly => Some(12),
            Frequency::Quarterly => Some(4),
        }
    }
}

impl FromStr for Frequency {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "daily" | "d" => Ok(Frequency::Daily),
            "weekly" | "w" => Ok(Frequency::Weekly),
            "monthly" | "m" => Ok(Frequency::Monthly),
            "quarterly" | "q" => Ok(Frequency::Quarterly),
            other => Err(Error::Parse(format!("unknown frequency `{other}`"))),
        }
    }
}

impl fmt::Display for Frequency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Frequency::Daily => "daily",
            Frequency::Weekly => "weekly",
            Frequency::Monthly => "monthly",
            Frequency::Quarterly => "quarterly",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Units {
    Percent,
    Level,
}

/// A named, frequency-tagged, strictly date-ordered sequence of finite values.
///
/// Monthly and quarterly observations are dated at the last day of their
/// period; quarterly dates always fall on March, June, September or December.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    name: String,
    freq: Frequency,
    units: Units,
    obs: Vec<(NaiveDate, f64)>,
}

impl TimeSeries {
    pub fn new(
        name: impl Into<String>,
        freq: Frequency,
        units: Units,
        obs: Vec<(NaiveDate, f64)>,
    ) -> Result<Self> {
        let name = name.into();
        let mut out = Vec::with_capacity(obs.len());
        for (d, v) in obs {
            if !v.is_finite() {
                return Err(Error::InvalidInput(format!("`{name}` has a non-finite value at {d}")));
            }
            let d = match freq {
                Frequency::Monthly => Month::from_date(d).last_day(),
                Frequency::Quarterly => {
                    let m = Month::from_date(d);
                    if !m.is_quarter_end() {
                        return Err(Error::InvalidInput(format!(
                            "`{name}`: quarterly date {d} is not in a quarter-end month"
                        )));
                    }
                    m.last_day()
                }
                _ => d,
            };
            if let Some(&(prev, _)) = out.last() {
                if d <= prev {
                    return Err(Error::InvalidInput(format!(
                        "`{name}`: dates must be strictly increasing ({prev} then {d})"
                    )));
                }
            }
            out.push((d, v));
        }
        Ok(TimeSeries { name, freq, units, obs: out })
    }

    /// Monthly series from a start month and a column with absent markers.
    pub fn from_monthly(
        name: impl Into<String>,
        start: Month,
        values: &[Option<f64>],
        units: Units,
    ) -> Result<Self> {
        let obs = values
            .iter()
            .enumerate()
            .filter_map(|(i, v)| v.map(|x| ((start + i as i32).last_day(), x)))
            .collect();
        TimeSeries::new(name, Frequency::Monthly, units, obs)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn freq(&self) -> Frequency {
        self.freq
    }

    pub fn units(&self) -> Units {
        self.units
    }

    pub fn observations(&self) -> &[(NaiveDate, f64)] {
        &self.obs
    }

    pub fn len(&self) -> usize {
        self.obs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.obs.is_empty()
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.obs.iter().map(|&(_, v)| v)
    }

    pub fn first_date(&self) -> Option<NaiveDate> {
        self.obs.first().map(|&(d, _)| d)
    }

    pub fn last_date(&self) -> Option<NaiveDate> {
        self.obs.last().map(|&(d, _)| d)
    }

    /// Value observed in month `m` (monthly and quarterly series).
    pub fn at_month(&self, m: Month) -> Option<f64> {
        let d = m.last_day();
        self.obs
            .binary_search_by(|(x, _)| x.cmp(&d))
            .ok()
            .map(|i| self.obs[i].1)
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Keep observations for which `keep(date)` holds.
    pub fn filter_dates(&self, keep: impl Fn(NaiveDate) -> bool) -> TimeSeries {
        TimeSeries {
            name: self.name.clone(),
            freq: self.freq,
            units: self.units,
            obs: self.obs.iter().copied().filter(|&(d, _)| keep(d)).collect(),
        }
    }

    /// Map every value, keeping dates.
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> TimeSeries {
        TimeSeries {
            name: self.name.clone(),
            freq: self.freq,
            units: self.units,
            obs: self.obs.iter().map(|&(d, v)| (d, f(v))).collect(),
        }
    }

    /// Dense monthly column from `start` covering `len` months.
    pub fn monthly_column(&self, start: Month, len: usize) -> Vec<Option<f64>> {
        let mut col = vec![None; len];
        for &(d, v) in &self.obs {
            let i = Month::from_date(d) - start;
            if i >= 0 && (i as usize) < len {
                col[i as usize] = Some(v);
            }
        }
        col
    }
}

/// Year-on-year percentage growth `100 (s_t / s_{t-k} - 1)` with `k` periods per year.
///
/// Monthly and quarterly bases are matched by calendar; weekly bases by position.
pub fn yoy_growth(s: &TimeSeries) -> Result<TimeSeries> {
    let k = s.freq.periods_per_year().ok_or_else(|| {
        Error::InvalidInput(format!("`{}`: YoY growth undefined for daily data", s.name))
    })?;
    if s.len() <= k {
        return Err(Error::InsufficientHistory {
            series: s.name.clone(),
            required: k + 1,
            actual: s.len(),
        });
    }
    let mut out = Vec::with_capacity(s.len() - k);
    match s.freq {
        Frequency::Monthly | Frequency::Quarterly => {
            let step = 12 / k as i32;
            let by_month: BTreeMap<Month, f64> =
                s.obs.iter().map(|&(d, v)| (Month::from_date(d), v)).collect();
            for &(d, v) in &s.obs {
                let base_month = Month::from_date(d) - step * k as i32;
                if let Some(&base) = by_month.get(&base_month) {
                    out.push((d, ratio_growth(&s.name, base_month.last_day(), base, d, v, 1.0)?));
                }
            }
        }
        _ => {
            for i in k..s.len() {
                let (bd, base) = s.obs[i - k];
                let (d, v) = s.obs[i];
                out.push((d, ratio_growth(&s.name, bd, base, d, v, 1.0)?));
            }
        }
    }
    TimeSeries::new(s.name.clone(), s.freq, Units::Percent, out)
}

/// Annualised growth over a trailing window of `window` periods, e.g. the
/// 13-week trend of a weekly series: `100 ((s_t / s_{t-w})^(ppy / w) - 1)`.
pub fn annualized_growth(s: &TimeSeries, window: usize) -> Result<TimeSeries> {
    let ppy = s.freq.periods_per_year().ok_or_else(|| {
        Error::InvalidInput(format!("`{}`: annualised growth undefined for daily data", s.name))
    })?;
    if window == 0 || s.len() <= window {
        return Err(Error::InsufficientHistory {
            series: s.name.clone(),
            required: window + 1,
            actual: s.len(),
        });
    }
    let power = ppy as f64 / window as f64;
    let mut out = Vec::with_capacity(s.len() - window);
    for i in window..s.len() {
        let (bd, base) = s.obs[i - window];
        let (d, v) = s.obs[i];
        out.push((d, ratio_growth(&s.name, bd, base, d, v, power)?));
    }
    TimeSeries::new(s.name.clone(), s.freq, Units::Percent, out)
}

fn ratio_growth(name: &str, base_date: NaiveDate, base: f64, date: NaiveDate, v: f64, power: f64) -> Result<f64> {
    if base <= 0.0 || v <= 0.0 {
        let at = if base <= 0.0 { base_date } else { date };
        return Err(Error::NonPositiveBase { series: name.to_string(), date: at.to_string() });
    }
    Ok(100.0 * ((v / base).powf(power) - 1.0))
}

/// Convert to monthly frequency: daily data are averaged over the days
/// present, weekly data keep the last observation of each month.
pub fn to_monthly(s: &TimeSeries) -> Result<TimeSeries> {
    match s.freq {
        Frequency::Monthly => Ok(s.clone()),
        Frequency::Quarterly => Err(Error::InvalidInput(format!(
            "`{}`: cannot convert quarterly data to monthly",
            s.name
        ))),
        Frequency::Weekly => {
            let mut last: BTreeMap<Month, f64> = BTreeMap::new();
            for &(d, v) in &s.obs {
                last.insert(Month::from_date(d), v);
            }
            let obs = last.into_iter().map(|(m, v)| (m.last_day(), v)).collect();
            TimeSeries::new(s.name.clone(), Frequency::Monthly, s.units, obs)
        }
        Frequency::Daily => {
            let mut acc: BTreeMap<Month, (f64, usize)> = BTreeMap::new();
            for &(d, v) in &s.obs {
                let e = acc.entry(Month::from_date(d)).or_insert((0.0, 0));
                e.0 += v;
                e.1 += 1;
            }
            let obs = acc.into_iter().map(|(m, (s, n))| (m.last_day(), s / n as f64)).collect();
            TimeSeries::new(s.name.clone(), Frequency::Monthly, s.units, obs)
        }
    }
}

/// Quarterly averages of the available months; quarters with no month are absent.
pub fn to_quarterly(s: &TimeSeries) -> Result<TimeSeries> {
    if s.freq != Frequency::Monthly {
        return Err(Error::InvalidInput(format!("`{}`: to_quarterly expects monthly data", s.name)));
    }
    let mut acc: BTreeMap<Quarter, (f64, usize)> = BTreeMap::new();
    for &(d, v) in &s.obs {
        let e = acc.entry(Month::from_date(d).quarter()).or_insert((0.0, 0));
        e.0 += v;
        e.1 += 1;
    }
    let obs = acc
        .into_iter()
        .map(|(q, (sum, n))| (q.last_month().last_day(), sum / n as f64))
        .collect();
    TimeSeries::new(s.name.clone(), Frequency::Quarterly, s.units, obs)
}

/// Quarterly means of a monthly column starting at `start`.
///
/// Returns `(first quarter, values)`; the first entry covers the quarter that
/// contains `start`, partial quarters average what is present.
pub fn column_to_quarterly(start: Month, col: &[Option<f64>]) -> (Quarter, Vec<Option<f64>>) {
    let q0 = start.quarter();
    if col.is_empty() {
        return (q0, Vec::new());
    }
    let q_last = (start + col.len() as i32 - 1).quarter();
    let nq = (q_last - q0 + 1) as usize;
    let mut acc = vec![(0.0, 0usize); nq];
    for (i, v) in col.iter().enumerate() {
        if let Some(x) = v {
            let q = (start + i as i32).quarter() - q0;
            acc[q as usize].0 += x;
            acc[q as usize].1 += 1;
        }
    }
    let vals = acc.into_iter().map(|(s, n)| (n > 0).then(|| s / n as f64)).collect();
    (q0, vals)
}

/// Location and scale of a standardised series (population sd).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub mean: f64,
    pub sd: f64,
}

impl Moments {
    pub fn of(name: &str, values: impl Iterator<Item = f64>) -> Result<Self> {
        let v: Vec<f64> = values.collect();
        if v.len() < 2 {
            return Err(Error::InsufficientHistory { series: name.to_string(), required: 2, actual: v.len() });
        }
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        let sd = var.sqrt();
        if !(sd > 1e-12 * mean.abs().max(1.0)) {
            return Err(Error::ZeroVariance(name.to_string()));
        }
        Ok(Moments { mean, sd })
    }

    pub fn standardize(&self, x: f64) -> f64 {
        (x - self.mean) / self.sd
    }

    pub fn destandardize(&self, z: f64) -> f64 {
        self.mean + self.sd * z
    }
}

/// A dense monthly grid of indicators plus a quarterly target placed in the
/// third month of each quarter. Missing entries are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct MonthlyFrame {
    pub start: Month,
    pub names: Vec<String>,
    /// Column-major: `columns[series][t]`.
    pub columns: Vec<Vec<Option<f64>>>,
    /// Target observed only at quarter-end months.
    pub target: Vec<Option<f64>>,
}

impl MonthlyFrame {
    pub fn new(start: Month, names: Vec<String>, columns: Vec<Vec<Option<f64>>>, target: Vec<Option<f64>>) -> Result<Self> {
        if names.len() != columns.len() {
            return Err(Error::DimensionMismatch { expected: names.len(), actual: columns.len() });
        }
        let t = target.len();
        for c in &columns {
            if c.len() != t {
                return Err(Error::DimensionMismatch { expected: t, actual: c.len() });
            }
        }
        for (i, v) in target.iter().enumerate() {
            if v.is_some() && !(start + i as i32).is_quarter_end() {
                return Err(Error::InvalidInput(format!(
                    "target value at {} is not in a quarter-end month",
                    start + i as i32
                )));
            }
        }
        Ok(MonthlyFrame { start, names, columns, target })
    }

    pub fn len(&self) -> usize {
        self.target.len()
    }

    pub fn is_empty(&self) -> bool {
        self.target.is_empty()
    }

    pub fn n_series(&self) -> usize {
        self.columns.len()
    }

    pub fn end(&self) -> Month {
        self.start + self.len() as i32 - 1
    }

    pub fn month_at(&self, t: usize) -> Month {
        self.start + t as i32
    }

    pub fn index_of(&self, m: Month) -> Option<usize> {
        let i = m - self.start;
        (i >= 0 && (i as usize) < self.len()).then_some(i as usize)
    }

    /// Extend (with missing entries) or truncate so the frame ends at `end`.
    pub fn with_end(&self, end: Month) -> MonthlyFrame {
        let len = (end - self.start + 1).max(0) as usize;
        let mut f = self.clone();
        for c in &mut f.columns {
            c.resize(len, None);
        }
        f.target.resize(len, None);
        f
    }

    /// Restrict to the listed indicator columns (in the given order).
    pub fn select(&self, cols: &[usize]) -> MonthlyFrame {
        MonthlyFrame {
            start: self.start,
            names: cols.iter().map(|&c| self.names[c].clone()).collect(),
            columns: cols.iter().map(|&c| self.columns[c].clone()).collect(),
            target: self.target.clone(),
        }
    }

    /// Target values by quarter, for quarters whose third month is in the frame.
    pub fn target_quarterly(&self) -> Vec<(Quarter, f64)> {
        self.target
            .iter()
            .enumerate()
            .filter_map(|(i, v)| v.map(|x| (self.month_at(i).quarter(), x)))
            .collect()
    }
}

/// Standardise every indicator column over its observed entries.
///
/// The target is left untouched; its moments are reported separately by
/// [`target_moments`].
pub fn standardize(frame: &MonthlyFrame) -> Result<(MonthlyFrame, Vec<Moments>)> {
    let mut out = frame.clone();
    let mut moments = Vec::with_capacity(frame.n_series());
    for (j, col) in frame.columns.iter().enumerate() {
        let m = Moments::of(&frame.names[j], col.iter().flatten().copied())?;
        out.columns[j] = col.iter().map(|v| v.map(|x| m.standardize(x))).collect();
        moments.push(m);
    }
    Ok((out, moments))
}

/// Moments of the observed quarterly target.
pub fn target_moments(frame: &MonthlyFrame) -> Result<Moments> {
    Moments::of("target", frame.target.iter().flatten().copied())
}

/// The quarter a date belongs to.
pub fn quarter_of(d: NaiveDate) -> Quarter {
    Quarter::new(d.year(), (d.month() - 1) / 3 + 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn monthly(name: &str, start: Month, v: &[f64]) -> TimeSeries {
        let col: Vec<Option<f64>> = v.iter().map(|&x| Some(x)).collect();
        TimeSeries::from_monthly(name, start, &col, Units::Level).unwrap()
    }

    #[test]
    fn yoy_identity_is_zero() {
        let v: Vec<f64> = (0..36).map(|i| 100.0 + (i % 12) as f64).collect();
        let g = yoy_growth(&monthly("x", Month::new(2018, 1), &v)).unwrap();
        assert_eq!(g.len(), 24);
        assert!(g.values().all(|x| x.abs() < 1e-12));
    }

    #[test]
    fn yoy_ten_percent() {
        let mut v = vec![100.0; 12];
        v.push(110.0);
        let g = yoy_growth(&monthly("x", Month::new(2018, 1), &v)).unwrap();
        assert_eq!(g.len(), 1);
        assert!((g.values().next().unwrap() - 10.0).abs() < 1e-12);
    }

    #[test]
    fn yoy_quarterly_matches_direct_ratios() {
        let levels = [100.0, 102.0, 98.0, 105.0, 107.0, 103.0, 101.0, 110.0, 112.0];
        let obs: Vec<_> = (0..9)
            .map(|i| (Quarter::new(2015, 1).first_month().quarter().last_month() + 3 * i).last_day())
            .zip(levels)
            .collect();
        let s = TimeSeries::new("gdp", Frequency::Quarterly, Units::Level, obs).unwrap();
        let g = yoy_growth(&s).unwrap();
        assert_eq!(g.len(), 5);
        for (i, x) in g.values().enumerate() {
            let direct = 100.0 * (levels[i + 4] / levels[i] - 1.0);
            assert!((x - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn yoy_errors() {
        let short = monthly("x", Month::new(2018, 1), &[1.0; 12]);
        assert!(matches!(yoy_growth(&short), Err(Error::InsufficientHistory { .. })));
        let mut v = vec![1.0; 13];
        v[0] = 0.0;
        let err = yoy_growth(&monthly("x", Month::new(2018, 1), &v)).unwrap_err();
        match err {
            Error::NonPositiveBase { date, .. } => assert_eq!(date, "2018-01-31"),
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn quarterly_means() {
        let s = monthly("x", Month::new(2020, 1), &[2.0, 4.0, 6.0, 5.0]);
        let q = to_quarterly(&s).unwrap();
        let v: Vec<f64> = q.values().collect();
        assert_eq!(v, vec![4.0, 5.0]);
        assert_eq!(q.observations()[1].0, Month::new(2020, 6).last_day());
    }

    #[test]
    fn quarterly_linear_trend_brute_force() {
        let v: Vec<f64> = (0..24).map(|i| 0.5 * i as f64 - 3.0).collect();
        let q = to_quarterly(&monthly("x", Month::new(2019, 1), &v)).unwrap();
        assert_eq!(q.len(), 8);
        for (k, x) in q.values().enumerate() {
            let brute = v[3 * k..3 * k + 3].iter().sum::<f64>() / 3.0;
            assert!((x - brute).abs() < 1e-12);
        }
    }

    #[test]
    fn weekly_and_daily_to_monthly() {
        let d = |m: u32, dd: u32| NaiveDate::from_ymd_opt(2021, m, dd).unwrap();
        let w = TimeSeries::new(
            "loans",
            Frequency::Weekly,
            Units::Level,
            vec![(d(1, 7), 1.0), (d(1, 28), 2.0), (d(2, 4), 3.0)],
        )
        .unwrap();
        let m = to_monthly(&w).unwrap();
        assert_eq!(m.values().collect::<Vec<_>>(), vec![2.0, 3.0]);
        let daily = TimeSeries::new(
            "bd",
            Frequency::Daily,
            Units::Level,
            vec![(d(1, 1), 1.0), (d(1, 2), 3.0), (d(2, 1), 5.0)],
        )
        .unwrap();
        let m = to_monthly(&daily).unwrap();
        assert_eq!(m.values().collect::<Vec<_>>(), vec![2.0, 5.0]);
    }

    #[test]
    fn standardize_population_sd() {
        let f = MonthlyFrame::new(
            Month::new(2020, 1),
            vec!["a".into()],
            vec![vec![Some(1.0), Some(3.0)]],
            vec![None, None],
        )
        .unwrap();
        let (z, m) = standardize(&f).unwrap();
        assert_eq!(z.columns[0], vec![Some(-1.0), Some(1.0)]);
        assert!((m[0].mean - 2.0).abs() < 1e-15);
        assert!((m[0].sd - 1.0).abs() < 1e-15);
        // idempotent
        let (zz, _) = standardize(&z).unwrap();
        for (a, b) in zz.columns[0].iter().zip(&z.columns[0]) {
            assert!((a.unwrap() - b.unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn standardize_masked_entries() {
        let col = vec![Some(1.0), None, Some(4.0), Some(7.0), None];
        let f = MonthlyFrame::new(Month::new(2020, 1), vec!["a".into()], vec![col.clone()], vec![None; 5]).unwrap();
        let (z, m) = standardize(&f).unwrap();
        // masked-mean oracle
        let obs: Vec<f64> = col.iter().flatten().copied().collect();
        let mean = obs.iter().sum::<f64>() / obs.len() as f64;
        let sd = (obs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / obs.len() as f64).sqrt();
        assert!((m[0].mean - mean).abs() < 1e-14 && (m[0].sd - sd).abs() < 1e-14);
        assert_eq!(z.columns[0][1], None);
        assert!((z.columns[0][2].unwrap() - (4.0 - mean) / sd).abs() < 1e-14);
    }

    #[test]
    fn standardize_zero_variance_names_series() {
        let f = MonthlyFrame::new(
            Month::new(2020, 1),
            vec!["flat".into()],
            vec![vec![Some(2.0), Some(2.0), Some(2.0)]],
            vec![None; 3],
        )
        .unwrap();
        match standardize(&f) {
            Err(Error::ZeroVariance(n)) => assert_eq!(n, "flat"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_unordered_dates() {
        let d = |dd: u32| NaiveDate::from_ymd_opt(2021, 1, dd).unwrap();
        assert!(TimeSeries::new("x", Frequency::Daily, Units::Level, vec![(d(2), 1.0), (d(1), 1.0)]).is_err());
        assert!(TimeSeries::new("x", Frequency::Daily, Units::Level, vec![(d(1), f64::NAN)]).is_err());
        assert!(TimeSeries::new("q", Frequency::Quarterly, Units::Level, vec![(d(1), 1.0)]).is_err());
    }
}
