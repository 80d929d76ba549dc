//! Daily exercise: a 150-day window per reference quarter on the synthetic
//! 30-day calendar, averaging the models' nowcasts each day.

use crate::dfm::{fit_dfm_from, DfmModel};
use crate::series::{synthetic_day, AsOf, Dataset, Frequency, Month, Quarter, SeriesKind};
use crate::statespace::KalmanOutput;
use crate::{Error, Result};

use super::models::{make_model, FittedBridge, ModelId, ModelSettings, NowcastModel, Vintage};

pub const DEFAULT_DAYS: u32 = 150;
pub const MA_WINDOW: usize = 7;

#[derive(Debug, Clone, PartialEq)]
pub struct DailyConfig {
    /// Reference quarters; each window starts on day 1 of the quarter.
    pub quarters: Vec<Quarter>,
    pub models: Vec<ModelId>,
    pub settings: ModelSettings,
    pub days: u32,
    /// Drop big-data series from every daily vintage (the calendar still
    /// runs on the full dataset).
    pub ablate_bigdata: bool,
}

impl DailyConfig {
    pub fn new(quarters: Vec<Quarter>, models: Vec<ModelId>) -> Self {
        DailyConfig { quarters, models, settings: ModelSettings::default(), days: DEFAULT_DAYS, ablate_bigdata: false }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DailyRecord {
    pub quarter: Quarter,
    pub day: u32,
    /// Model id, or `average` for the model average.
    pub model: String,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DailyPoint {
    pub day: u32,
    /// MAE of the model average across windows.
    pub raw: f64,
    /// Trailing 7-day mean of `raw` (fewer days at the start).
    pub ma7: f64,
}

#[derive(Debug, Clone, Default)]
pub struct DailyOutput {
    pub records: Vec<DailyRecord>,
    /// `(quarter, day, average, truth)` per window and day.
    pub windows: Vec<(Quarter, u32, f64, f64)>,
    pub curve: Vec<DailyPoint>,
}

/// Trailing moving average; the first `w - 1` points average what exists.
pub fn moving_average(x: &[f64], w: usize) -> Vec<f64> {
    (0..x.len())
        .map(|i| {
            let lo = (i + 1).saturating_sub(w);
            x[lo..=i].iter().sum::<f64>() / (i + 1 - lo) as f64
        })
        .collect()
}

/// First synthetic day of `q`'s window on which `series` has a value for the
/// quarter's first month.
pub fn first_arrival_day(data: &Dataset, series: &str, q: Quarter, days: u32) -> Result<Option<u32>> {
    let m = q.first_month();
    for d in 1..=days {
        let view = crate::series::vintage_at(data, synthetic_day(m, d))?;
        let s = view
            .panel
            .indicators
            .iter()
            .find(|s| s.name() == series)
            .ok_or_else(|| Error::UnknownSeries(series.to_string()))?;
        if s.at_month(m).is_some() {
            return Ok(Some(d));
        }
    }
    Ok(None)
}

/// DFM re-estimated at each synthetic month start; days in between only
/// re-run the filter, resuming from the rows that cannot change inside the
/// window.
struct DailyDfm {
    model: Option<(Month, DfmModel)>,
    prefix: Option<(Month, KalmanOutput)>,
}

impl DailyDfm {
    fn nowcast(&mut self, v: &Vintage, q: Quarter) -> Result<f64> {
        let month = v.as_of.month();
        if self.model.as_ref().is_none_or(|(m, _)| *m != month) {
            let warm = self.model.as_ref().filter(|(_, p)| p.names == v.frame.names).map(|(_, p)| &p.params);
            let fitted = fit_dfm_from(&v.frame, &v.settings.dfm, warm)?;
            self.model = Some((month, fitted));
            self.prefix = None;
        }
        let (_, model) = self.model.as_ref().expect("fitted above");
        let prefix = self.prefix.as_ref().filter(|(start, _)| *start == v.frame.start).map(|(_, p)| p.clone());
        let fresh = prefix.is_none();
        let (value, filt) = model.nowcast_resumed(&v.frame, q, prefix)?;
        if fresh {
            // all data for months up to q.first - 4 are public before day 1
            let stable = (q.first_month() - 4 - v.frame.start + 1).max(0) as usize;
            self.prefix = Some((v.frame.start, filt.truncated(stable)));
        }
        Ok(value)
    }
}

/// Bridge refitted when the month or the set of published quarters changes.
struct DailyBridge {
    kind: ModelId,
    fitted: Option<((Month, usize), FittedBridge)>,
}

impl DailyBridge {
    fn nowcast(&mut self, v: &Vintage, q: Quarter) -> Result<f64> {
        let b = v.bridge()?;
        let key = (v.as_of.month(), b.train_y.len());
        if self.fitted.as_ref().is_none_or(|(k, _)| *k != key) {
            self.fitted = Some((key, FittedBridge::fit(self.kind, b, v.settings, v.seed(self.kind))?));
        }
        self.fitted.as_ref().expect("fitted above").1.predict(b.row(q)?)
    }
}

/// Models whose draws are costly are re-run once per synthetic month.
struct Monthly {
    inner: Box<dyn NowcastModel>,
    cached: Option<(Month, f64)>,
}

impl Monthly {
    fn nowcast(&mut self, v: &Vintage, q: Quarter) -> Result<f64> {
        let month = v.as_of.month();
        if let Some((m, value)) = self.cached {
            if m == month {
                return Ok(value);
            }
        }
        let value = self.inner.nowcast(v, &[q])?[0];
        self.cached = Some((month, value));
        Ok(value)
    }
}

enum DailyModel {
    Dfm(DailyDfm),
    Bridge(DailyBridge),
    Monthly(Monthly),
    Every(Box<dyn NowcastModel>),
}

impl DailyModel {
    fn new(id: ModelId, settings: &ModelSettings) -> Self {
        match id {
            ModelId::Dfm => DailyModel::Dfm(DailyDfm { model: None, prefix: None }),
            ModelId::Lm | ModelId::Rf | ModelId::Gbm => DailyModel::Bridge(DailyBridge { kind: id, fitted: None }),
            ModelId::Bvar => DailyModel::Monthly(Monthly { inner: make_model(id, settings), cached: None }),
            ModelId::Ar | ModelId::Oracle => DailyModel::Every(make_model(id, settings)),
        }
    }

    fn nowcast(&mut self, v: &Vintage, q: Quarter) -> Result<f64> {
        match self {
            DailyModel::Dfm(m) => m.nowcast(v, q),
            DailyModel::Bridge(m) => m.nowcast(v, q),
            DailyModel::Monthly(m) => m.nowcast(v, q),
            DailyModel::Every(m) => Ok(m.nowcast(v, &[q])?[0]),
        }
    }
}

pub fn daily_exercise(data: &Dataset, config: &DailyConfig) -> Result<DailyOutput> {
    if !data.indicators().iter().any(|s| s.freq() == Frequency::Daily) {
        return Err(Error::InvalidInput("the daily exercise needs at least one daily series".into()));
    }
    if config.models.is_empty() || config.quarters.is_empty() || config.days == 0 {
        return Err(Error::InvalidInput("daily exercise needs models, reference quarters and days".into()));
    }
    let reduced;
    let data = if config.ablate_bigdata {
        reduced = data.without_kind(SeriesKind::BigData)?;
        &reduced
    } else {
        data
    };
    let mut out = DailyOutput::default();
    let mut abs_err = vec![0.0; config.days as usize];
    for &q in &config.quarters {
        let truth = data.truth(q).ok_or_else(|| Error::Calendar(format!("no final value for {q}")))?;
        let mut models: Vec<(ModelId, DailyModel)> =
            config.models.iter().map(|&m| (m, DailyModel::new(m, &config.settings))).collect();
        for d in 1..=config.days {
            let as_of: AsOf = synthetic_day(q.first_month(), d);
            if data.target_released(q, &as_of) {
                return Err(Error::Calendar(format!("{q} is published by day {d} of its window")));
            }
            let frame = crate::series::vintage_at(data, as_of)?.panel.frame()?;
            let vintage = Vintage::new(data, as_of, frame, &config.settings, &[q]);
            let mut sum = 0.0;
            for (id, model) in models.iter_mut() {
                let value = model.nowcast(&vintage, q)?;
                sum += value;
                out.records.push(DailyRecord { quarter: q, day: d, model: id.to_string(), value });
            }
            let avg = sum / models.len() as f64;
            out.records.push(DailyRecord { quarter: q, day: d, model: "average".into(), value: avg });
            out.windows.push((q, d, avg, truth));
            abs_err[(d - 1) as usize] += (avg - truth).abs();
        }
    }
    let raw: Vec<f64> = abs_err.iter().map(|e| e / config.quarters.len() as f64).collect();
    let ma = moving_average(&raw, MA_WINDOW);
    out.curve = (0..raw.len()).map(|i| DailyPoint { day: i as u32 + 1, raw: raw[i], ma7: ma[i] }).collect();
    Ok(out)
}
