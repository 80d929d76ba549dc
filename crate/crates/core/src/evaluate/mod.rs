//! Pseudo-real-time evaluation: end-of-month vintages, five nowcasts per
//! reference quarter, MAE and MAED scoring, Lasso selection logs,
//! combinations and the daily exercise.

mod daily;
mod models;
mod output;

use std::collections::{BTreeMap, BTreeSet};

pub use daily::{
    daily_exercise, first_arrival_day, moving_average, DailyConfig, DailyOutput, DailyPoint, DailyRecord, DEFAULT_DAYS, MA_WINDOW,
};
pub use models::{
    bridge_data, make_model, ArBenchmark, BridgeData, BvarNowcaster, DfmNowcaster, FittedBridge, ModelId, ModelSettings,
    NowcastModel, PerfectForesight, Vintage, TAIL_AR_MAX,
};
pub use output::{
    daily_mae_csv, daily_nowcasts_csv, daily_windows_csv, nowcasts_csv, scores_csv, selection_csv, selection_dates_csv,
};

use crate::combine::{combine, rolling_mae, PastError, Scheme, DEFAULT_WINDOW, MIN_HISTORY};
use crate::linear::select_variables;
use crate::series::{vintage_at, AsOf, Dataset, Month, MonthlyFrame, Quarter, SeriesKind};
use crate::{Error, Result};

/// Longest a reference quarter is tracked after it ends.
const MAX_TRACK_MONTHS: i32 = 12;

#[derive(Debug, Clone, PartialEq)]
pub struct NowcastRecord {
    pub quarter: Quarter,
    /// 1-based months since the start of the reference quarter.
    pub horizon: usize,
    /// Model id, or `comb_<scheme>` for combinations.
    pub model: String,
    pub combination: Option<Scheme>,
    pub value: f64,
    pub vintage: AsOf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionEntry {
    pub vintage: AsOf,
    pub candidates: Vec<String>,
    pub selected: Vec<String>,
    pub big_data: Vec<String>,
    pub fallback: bool,
}

impl SelectionEntry {
    pub fn big_data_chosen(&self) -> bool {
        self.selected.iter().any(|s| self.big_data.contains(s))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExerciseConfig {
    /// First and last reference quarter.
    pub eval_start: Quarter,
    pub eval_end: Quarter,
    pub models: Vec<ModelId>,
    pub settings: ModelSettings,
    /// Lasso pre-selection of indicators at every vintage.
    pub preselect: bool,
    /// Add combination records (needs at least two models).
    pub combinations: bool,
    pub window: usize,
    pub min_history: usize,
}

impl ExerciseConfig {
    pub fn new(eval_start: Quarter, eval_end: Quarter, models: Vec<ModelId>) -> Self {
        ExerciseConfig {
            eval_start,
            eval_end,
            models,
            settings: ModelSettings::default(),
            preselect: false,
            combinations: true,
            window: DEFAULT_WINDOW,
            min_history: MIN_HISTORY,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct ExerciseOutput {
    pub records: Vec<NowcastRecord>,
    pub selection: Vec<SelectionEntry>,
}

/// Quarters to nowcast at `as_of`: started, unpublished, inside the span.
pub fn target_quarters(data: &Dataset, as_of: &AsOf, start: Quarter, end: Quarter) -> Vec<Quarter> {
    let m = as_of.month();
    let mut out = Vec::new();
    let mut q = start;
    while q <= end && q.first_month() <= m {
        if m - q.last_month() <= MAX_TRACK_MONTHS && !data.target_released(q, as_of) {
            out.push(q);
        }
        q = q + 1;
    }
    out
}

/// End-of-month vintages covering the evaluation span.
pub fn vintage_months(data: &Dataset, start: Quarter, end: Quarter) -> Vec<Month> {
    let mut out = Vec::new();
    let mut m = start.first_month();
    while m <= end.last_month() + MAX_TRACK_MONTHS {
        if !target_quarters(data, &AsOf::end_of_month(m), start, end).is_empty() {
            out.push(m);
        }
        m = m + 1;
    }
    out
}

fn horizon_of(q: Quarter, as_of: &AsOf) -> usize {
    (as_of.month() - q.first_month() + 1) as usize
}

/// Run the monthly exercise.
pub fn run_exercise(data: &Dataset, config: &ExerciseConfig) -> Result<ExerciseOutput> {
    if config.models.is_empty() {
        return Err(Error::InvalidInput("no models configured".into()));
    }
    if config.eval_end < config.eval_start {
        return Err(Error::InvalidInput("evaluation span ends before it starts".into()));
    }
    let mut models: Vec<Box<dyn NowcastModel>> = config.models.iter().map(|&m| make_model(m, &config.settings)).collect();
    let mut out = ExerciseOutput::default();
    for month in vintage_months(data, config.eval_start, config.eval_end) {
        let as_of = AsOf::end_of_month(month);
        let quarters = target_quarters(data, &as_of, config.eval_start, config.eval_end);
        vintage_records(data, as_of, &quarters, &mut models, &config.settings, config.preselect, &mut out)?;
    }
    if config.combinations {
        let combos = combination_records(data, &out.records, config)?;
        out.records.extend(combos);
    }
    Ok(out)
}

/// Nowcasts from a single vintage for every quarter still open at `as_of`
/// (the current quarter and unpublished earlier ones).
pub fn nowcast_at(
    data: &Dataset,
    as_of: AsOf,
    models: &[ModelId],
    settings: &ModelSettings,
    preselect: bool,
) -> Result<ExerciseOutput> {
    if models.is_empty() {
        return Err(Error::InvalidInput("no models configured".into()));
    }
    let current = as_of.month().quarter();
    let quarters = target_quarters(data, &as_of, current - 4, current);
    if quarters.is_empty() {
        return Err(Error::Calendar(format!("no unpublished quarter to nowcast at {as_of}")));
    }
    let mut boxed: Vec<Box<dyn NowcastModel>> = models.iter().map(|&m| make_model(m, settings)).collect();
    let mut out = ExerciseOutput::default();
    vintage_records(data, as_of, &quarters, &mut boxed, settings, preselect, &mut out)?;
    Ok(out)
}

fn vintage_records(
    data: &Dataset,
    as_of: AsOf,
    quarters: &[Quarter],
    models: &mut [Box<dyn NowcastModel>],
    settings: &ModelSettings,
    preselect: bool,
    out: &mut ExerciseOutput,
) -> Result<()> {
    let view = vintage_at(data, as_of)?;
    let mut frame = view.panel.frame()?;
    if preselect {
        let (entry, active) = select_at(data, as_of, &frame, settings, quarters)?;
        out.selection.push(entry);
        frame = frame.select(&active);
    }
    let vintage = Vintage::new(data, as_of, frame, settings, quarters);
    for model in models.iter_mut() {
        let values = model.nowcast(&vintage, quarters)?;
        for (&q, value) in quarters.iter().zip(values) {
            out.records.push(NowcastRecord {
                quarter: q,
                horizon: horizon_of(q, &as_of),
                model: model.id().to_string(),
                combination: None,
                value,
                vintage: as_of,
            });
        }
    }
    Ok(())
}

fn select_at(
    data: &Dataset,
    as_of: AsOf,
    frame: &MonthlyFrame,
    settings: &ModelSettings,
    quarters: &[Quarter],
) -> Result<(SelectionEntry, Vec<usize>)> {
    let full = Vintage::new(data, as_of, frame.clone(), settings, quarters);
    let b = full.bridge()?;
    let sel = select_variables(&b.train_x, &b.train_y)?;
    let entry = SelectionEntry {
        vintage: as_of,
        candidates: frame.names.clone(),
        selected: sel.active.iter().map(|&j| frame.names[j].clone()).collect(),
        big_data: data.all_meta().filter(|m| m.kind == SeriesKind::BigData).map(|m| m.name.clone()).collect(),
        fallback: sel.fallback,
    };
    Ok((entry, sel.active))
}

/// Lasso selection log over the evaluation span, without running any model.
pub fn run_selection(data: &Dataset, config: &ExerciseConfig) -> Result<Vec<SelectionEntry>> {
    if config.eval_end < config.eval_start {
        return Err(Error::InvalidInput("evaluation span ends before it starts".into()));
    }
    let mut log = Vec::new();
    for month in vintage_months(data, config.eval_start, config.eval_end) {
        let as_of = AsOf::end_of_month(month);
        let quarters = target_quarters(data, &as_of, config.eval_start, config.eval_end);
        let frame = vintage_at(data, as_of)?.panel.frame()?;
        log.push(select_at(data, as_of, &frame, &config.settings, &quarters)?.0);
    }
    Ok(log)
}

/// Combination records for every (vintage, quarter) cell, weighting the
/// configured models (the oracle stub excluded) by their rolling MAEs over
/// quarters already published at that vintage.
pub fn combination_records(data: &Dataset, records: &[NowcastRecord], config: &ExerciseConfig) -> Result<Vec<NowcastRecord>> {
    let members: Vec<String> =
        config.models.iter().filter(|m| **m != ModelId::Oracle).map(|m| m.to_string()).collect();
    if members.len() < 2 {
        return Ok(Vec::new());
    }
    let errors: Vec<PastError> = records
        .iter()
        .filter(|r| r.combination.is_none() && members.contains(&r.model))
        .filter_map(|r| {
            data.truth(r.quarter).map(|y| PastError { quarter: r.quarter, horizon: r.horizon, model: r.model.clone(), error: y - r.value })
        })
        .collect();
    let mut cells: BTreeMap<(Month, Quarter), BTreeMap<&str, &NowcastRecord>> = BTreeMap::new();
    for r in records.iter().filter(|r| r.combination.is_none() && members.contains(&r.model)) {
        cells.entry((r.vintage.month(), r.quarter)).or_default().insert(r.model.as_str(), r);
    }
    let mut out = Vec::new();
    for ((month, q), by_model) in cells {
        if by_model.len() != members.len() {
            continue;
        }
        let as_of = AsOf::end_of_month(month);
        let horizon = horizon_of(q, &as_of);
        let last_settled = latest_published(data, &as_of);
        let history = rolling_mae(&errors, &members, horizon, last_settled, config.window, config.min_history);
        let values: Vec<f64> = members.iter().map(|m| by_model[m.as_str()].value).collect();
        for scheme in Scheme::ALL {
            out.push(NowcastRecord {
                quarter: q,
                horizon,
                model: format!("comb_{scheme}"),
                combination: Some(scheme),
                value: combine(scheme, &values, &history)?,
                vintage: as_of,
            });
        }
    }
    Ok(out)
}

/// Latest quarter whose target is published at `as_of`.
pub fn latest_published(data: &Dataset, as_of: &AsOf) -> Option<Quarter> {
    let target = data.target_transformed();
    target
        .observations()
        .iter()
        .map(|(d, _)| crate::series::quarter_of(*d))
        .filter(|q| data.target_released(*q, as_of))
        .max()
}

/// Mean absolute error of one model at one horizon over quarters with a
/// final target value.
pub fn mae(records: &[NowcastRecord], data: &Dataset, model: &str, horizon: usize) -> Result<f64> {
    let errs: Vec<f64> = records
        .iter()
        .filter(|r| r.model == model && r.horizon == horizon)
        .filter_map(|r| data.truth(r.quarter).map(|y| (y - r.value).abs()))
        .collect();
    if errs.is_empty() {
        return Err(Error::InvalidInput(format!("no scored nowcasts for `{model}` at horizon {horizon}")));
    }
    Ok(errs.iter().sum::<f64>() / errs.len() as f64)
}

/// `MAE_reduced - MAE_full`: positive when the full dataset (with big data)
/// nowcasts better.
pub fn maed(full: &[NowcastRecord], reduced: &[NowcastRecord], data: &Dataset, model: &str, horizon: usize) -> Result<f64> {
    let cells = |rs: &[NowcastRecord]| -> BTreeSet<(Quarter, Month)> {
        rs.iter().filter(|r| r.model == model && r.horizon == horizon).map(|r| (r.quarter, r.vintage.month())).collect()
    };
    if cells(full) != cells(reduced) {
        return Err(Error::InvalidInput(format!("full and reduced runs cover different cells for `{model}` at horizon {horizon}")));
    }
    Ok(mae(reduced, data, model, horizon)? - mae(full, data, model, horizon)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreRow {
    pub model: String,
    pub horizon: usize,
    pub mae: f64,
    pub maed: Option<f64>,
}

/// One row per (model, horizon) in first-appearance model order.
pub fn score_table(full: &[NowcastRecord], reduced: Option<&[NowcastRecord]>, data: &Dataset) -> Result<Vec<ScoreRow>> {
    let mut models: Vec<&str> = Vec::new();
    for r in full {
        if !models.contains(&r.model.as_str()) {
            models.push(&r.model);
        }
    }
    let horizons: BTreeSet<usize> = full.iter().map(|r| r.horizon).collect();
    let mut rows = Vec::new();
    for m in models {
        for &h in &horizons {
            let Ok(v) = mae(full, data, m, h) else { continue };
            let d = match reduced {
                Some(red) => Some(maed(full, red, data, m, h)?),
                None => None,
            };
            rows.push(ScoreRow { model: m.to_string(), horizon: h, mae: v, maed: d });
        }
    }
    Ok(rows)
}

/// Share of vintages in which each candidate was selected, in first-seen order.
pub fn selection_ratios(log: &[SelectionEntry]) -> Vec<(String, f64)> {
    let mut names: Vec<String> = Vec::new();
    for e in log {
        for c in &e.candidates {
            if !names.contains(c) {
                names.push(c.clone());
            }
        }
    }
    names
        .into_iter()
        .map(|n| {
            let eligible = log.iter().filter(|e| e.candidates.contains(&n)).count();
            let chosen = log.iter().filter(|e| e.selected.contains(&n)).count();
            let ratio = if eligible == 0 { 0.0 } else { chosen as f64 / eligible as f64 };
            (n, ratio)
        })
        .collect()
}

/// Run the exercise with and without big-data indicators.
pub fn run_ablation(data: &Dataset, config: &ExerciseConfig) -> Result<(ExerciseOutput, ExerciseOutput)> {
    let full = run_exercise(data, config)?;
    let reduced = run_exercise(&data.without_kind(SeriesKind::BigData)?, config)?;
    Ok((full, reduced))
}

#[cfg(test)]
mod tests;
