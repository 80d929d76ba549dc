//! Announcement calendar metadata and pseudo-real-time vintage construction.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::{annualized_growth, to_monthly, yoy_growth, AsOf, Frequency, Month, MonthlyFrame, TimeSeries};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeriesKind {
    Hard,
    Soft,
    #[serde(rename = "bigdata")]
    BigData,
}

impl FromStr for SeriesKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "hard" => Ok(SeriesKind::Hard),
            "soft" => Ok(SeriesKind::Soft),
            "bigdata" | "big_data" => Ok(SeriesKind::BigData),
            other => Err(Error::Parse(format!("unknown series kind `{other}`"))),
        }
    }
}

impl fmt::Display for SeriesKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SeriesKind::Hard => "hard",
            SeriesKind::Soft => "soft",
            SeriesKind::BigData => "bigdata",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transform {
    YoyGrowth,
    Level,
    /// Annualised 13-week growth trend of a weekly series.
    Ann13wGrowth,
}

impl FromStr for Transform {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "yoy_growth" | "yoy" => Ok(Transform::YoyGrowth),
            "level" => Ok(Transform::Level),
            "ann_13w_growth" => Ok(Transform::Ann13wGrowth),
            other => Err(Error::Parse(format!("unknown transform `{other}`"))),
        }
    }
}

impl fmt::Display for Transform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Transform::YoyGrowth => "yoy_growth",
            Transform::Level => "level",
            Transform::Ann13wGrowth => "ann_13w_growth",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AnnounceDay {
    Day(u32),
    Daily,
}

impl fmt::Display for AnnounceDay {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AnnounceDay::Day(d) => write!(f, "{d}"),
            AnnounceDay::Daily => f.write_str("daily"),
        }
    }
}

impl FromStr for AnnounceDay {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("daily") {
            return Ok(AnnounceDay::Daily);
        }
        s.parse::<u32>()
            .map(AnnounceDay::Day)
            .map_err(|_| Error::Parse(format!("announce_day must be 1..30 or `daily`, got `{s}`")))
    }
}

/// Publication metadata of one series.
///
/// A value referring to month `m` becomes public on day `announce_day` of
/// month `m + announce_lag_months`. Quarterly values refer to the quarter's
/// last month.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeriesMeta {
    pub name: String,
    pub kind: SeriesKind,
    pub transform: Transform,
    pub announce_lag_months: u32,
    pub announce_day: AnnounceDay,
}

impl SeriesMeta {
    pub fn new(
        name: impl Into<String>,
        kind: SeriesKind,
        transform: Transform,
        announce_lag_months: u32,
        announce_day: AnnounceDay,
    ) -> Result<Self> {
        let m = SeriesMeta { name: name.into(), kind, transform, announce_lag_months, announce_day };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        match self.announce_day {
            AnnounceDay::Day(d) if !(1..=30).contains(&d) => Err(Error::InvalidInput(format!(
                "`{}`: announce_day {d} outside 1..30",
                self.name
            ))),
            AnnounceDay::Daily if self.announce_lag_months != 0 => Err(Error::InvalidInput(format!(
                "`{}`: daily releases require a zero announcement lag",
                self.name
            ))),
            AnnounceDay::Day(_) if self.kind == SeriesKind::BigData => Err(Error::InvalidInput(format!(
                "`{}`: big-data series are released daily",
                self.name
            ))),
            _ => Ok(()),
        }
    }

    /// Publication month and day of the value referring to `month`.
    /// Daily releases are reported as the reference month's day 30.
    pub fn release_of(&self, month: Month) -> (Month, u32) {
        match self.announce_day {
            AnnounceDay::Day(d) => (month + self.announce_lag_months as i32, d),
            AnnounceDay::Daily => (month, super::SYNTHETIC_MONTH_DAYS),
        }
    }

    /// Whether an observation dated `date` is public at `as_of`.
    pub fn is_released(&self, date: NaiveDate, as_of: &AsOf) -> bool {
        match self.announce_day {
            AnnounceDay::Daily => as_of.knows_date(date),
            AnnounceDay::Day(d) => {
                as_of.knows_release(Month::from_date(date) + self.announce_lag_months as i32, d)
            }
        }
    }

    pub fn apply_transform(&self, s: &TimeSeries) -> Result<TimeSeries> {
        match self.transform {
            Transform::Level => Ok(s.clone()),
            Transform::YoyGrowth => yoy_growth(s),
            Transform::Ann13wGrowth => annualized_growth(s, 13),
        }
    }
}

/// The complete (final-vintage) data: indicators at native frequency, the
/// quarterly target and per-series publication metadata.
#[derive(Debug, Clone)]
pub struct Dataset {
    indicators: Vec<TimeSeries>,
    target: TimeSeries,
    meta: BTreeMap<String, SeriesMeta>,
    prepared: Vec<TimeSeries>,
    prepared_target: TimeSeries,
}

impl Dataset {
    /// Validates metadata coverage and applies each series' transform once.
    pub fn new(indicators: Vec<TimeSeries>, target: TimeSeries, meta: Vec<SeriesMeta>) -> Result<Self> {
        let meta: BTreeMap<String, SeriesMeta> = meta.into_iter().map(|m| (m.name.clone(), m)).collect();
        for m in meta.values() {
            m.validate()?;
        }
        if target.freq() != Frequency::Quarterly {
            return Err(Error::InvalidInput(format!("target `{}` must be quarterly", target.name())));
        }
        let mut seen = std::collections::BTreeSet::new();
        let mut prepared = Vec::with_capacity(indicators.len());
        for s in &indicators {
            if !seen.insert(s.name().to_string()) {
                return Err(Error::InvalidInput(format!("duplicate series `{}`", s.name())));
            }
            let m = meta.get(s.name()).ok_or_else(|| Error::UnknownSeries(s.name().to_string()))?;
            if s.freq() == Frequency::Daily && m.transform != Transform::Level {
                return Err(Error::InvalidInput(format!(
                    "`{}`: daily series must use the level transform",
                    s.name()
                )));
            }
            if s.freq() == Frequency::Quarterly {
                return Err(Error::InvalidInput(format!("indicator `{}` must be sub-quarterly", s.name())));
            }
            prepared.push(m.apply_transform(s)?);
        }
        let tm = meta.get(target.name()).ok_or_else(|| Error::UnknownSeries(target.name().to_string()))?;
        let prepared_target = tm.apply_transform(&target)?;
        Ok(Dataset { indicators, target, meta, prepared, prepared_target })
    }

    pub fn indicators(&self) -> &[TimeSeries] {
        &self.indicators
    }

    pub fn target(&self) -> &TimeSeries {
        &self.target
    }

    /// Target after its transform (the quantity being nowcast).
    pub fn target_transformed(&self) -> &TimeSeries {
        &self.prepared_target
    }

    pub fn meta(&self, name: &str) -> Option<&SeriesMeta> {
        self.meta.get(name)
    }

    pub fn all_meta(&self) -> impl Iterator<Item = &SeriesMeta> {
        self.meta.values()
    }

    pub fn target_meta(&self) -> &SeriesMeta {
        &self.meta[self.target.name()]
    }

    pub fn indicator_names(&self) -> Vec<String> {
        self.indicators.iter().map(|s| s.name().to_string()).collect()
    }

    /// Drop every indicator of the given kind (e.g. the big-data ablation).
    pub fn without_kind(&self, kind: SeriesKind) -> Result<Dataset> {
        let keep: Vec<TimeSeries> = self
            .indicators
            .iter()
            .filter(|s| self.meta[s.name()].kind != kind)
            .cloned()
            .collect();
        Dataset::new(keep, self.target.clone(), self.meta.values().cloned().collect())
    }

    /// Keep only the named indicators, in dataset order.
    pub fn restrict(&self, names: &[String]) -> Result<Dataset> {
        for n in names {
            if !self.meta.contains_key(n) {
                return Err(Error::UnknownSeries(n.clone()));
            }
        }
        let keep = self.indicators.iter().filter(|s| names.iter().any(|n| n == s.name())).cloned().collect();
        Dataset::new(keep, self.target.clone(), self.meta.values().cloned().collect())
    }

    /// Final target value for a quarter.
    pub fn truth(&self, q: super::Quarter) -> Option<f64> {
        self.prepared_target.at_month(q.last_month())
    }

    /// Whether the target for `q` is published at `as_of`.
    pub fn target_released(&self, q: super::Quarter, as_of: &AsOf) -> bool {
        self.target_meta().is_released(q.last_month().last_day(), as_of)
    }
}

/// Snapshot of what was public at a vintage date.
///
/// Indicators are monthly (daily data averaged over the days already
/// published, weekly data sampled at the last published week).
#[derive(Debug, Clone)]
pub struct PanelDataset {
    pub indicators: Vec<TimeSeries>,
    pub target: TimeSeries,
    pub meta: Vec<SeriesMeta>,
    pub as_of: AsOf,
}

impl PanelDataset {
    /// First month with any indicator observation.
    pub fn start(&self) -> Option<Month> {
        self.indicators
            .iter()
            .filter_map(|s| s.first_date())
            .map(Month::from_date)
            .min()
    }

    /// Dense monthly frame from the first observed month through `end`.
    pub fn frame_until(&self, end: Month) -> Result<MonthlyFrame> {
        let start = self
            .start()
            .ok_or_else(|| Error::InvalidInput("vintage has no indicator data".into()))?;
        let len = (end - start + 1).max(0) as usize;
        let names = self.indicators.iter().map(|s| s.name().to_string()).collect();
        let columns = self.indicators.iter().map(|s| s.monthly_column(start, len)).collect();
        let target = self.target.monthly_column(start, len);
        MonthlyFrame::new(start, names, columns, target)
    }

    /// Dense monthly frame through the as-of month.
    pub fn frame(&self) -> Result<MonthlyFrame> {
        self.frame_until(self.as_of.month())
    }
}

/// A vintage plus its ragged-edge bookkeeping.
#[derive(Debug, Clone)]
pub struct VintageView {
    pub panel: PanelDataset,
    /// Trailing months without data up to the as-of month, per indicator.
    pub ragged_tail: Vec<usize>,
    /// Leading months without data from the panel start, per indicator.
    pub head_missing: Vec<usize>,
}

/// Build the vintage of `data` known at `as_of`.
pub fn vintage_at(data: &Dataset, as_of: AsOf) -> Result<VintageView> {
    let mut indicators = Vec::with_capacity(data.prepared.len());
    let mut meta = Vec::with_capacity(data.prepared.len());
    for s in &data.prepared {
        let m = data.meta.get(s.name()).ok_or_else(|| Error::UnknownSeries(s.name().to_string()))?;
        let known = s.filter_dates(|d| m.is_released(d, &as_of));
        indicators.push(to_monthly(&known)?);
        meta.push(m.clone());
    }
    let tm = data.target_meta();
    let target = data.prepared_target.filter_dates(|d| tm.is_released(d, &as_of));
    meta.push(tm.clone());

    let end = as_of.month();
    let start = indicators
        .iter()
        .filter_map(|s| s.first_date())
        .map(Month::from_date)
        .min();
    let mut ragged_tail = Vec::with_capacity(indicators.len());
    let mut head_missing = Vec::with_capacity(indicators.len());
    for s in &indicators {
        match (s.first_date(), s.last_date(), start) {
            (Some(first), Some(last), Some(start)) => {
                ragged_tail.push((end - Month::from_date(last)).max(0) as usize);
                head_missing.push((Month::from_date(first) - start) as usize);
            }
            (_, _, start) => {
                let span = start.map_or(0, |s| (end - s + 1).max(0) as usize);
                ragged_tail.push(span);
                head_missing.push(0);
            }
        }
    }
    Ok(VintageView {
        panel: PanelDataset { indicators, target, meta, as_of },
        ragged_tail,
        head_missing,
    })
}
