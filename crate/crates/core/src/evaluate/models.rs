//! Models as seen by the evaluation harness.

use std::cell::OnceCell;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::bvar::{build_minnesota, gibbs_run, nowcast_bvar, BvarConfig};
use crate::dfm::{fit_dfm_from, DfmConfig, DfmParams};
use crate::impute::{ar_fill_frame, fit_ar_orders, rf_impute_head, HeadImputeParams};
use crate::linear::fit_ols;
use crate::series::{AsOf, Dataset, Month, MonthlyFrame, Quarter};
use crate::trees::{fit_gbm, fit_rf, predict_gbm, predict_rf, BoostParams, ForestParams};
use crate::{Error, Result};

/// AR order cap for tail filling of monthly indicators.
pub const TAIL_AR_MAX: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModelId {
    Ar,
    Dfm,
    Bvar,
    Lm,
    Rf,
    Gbm,
    /// Returns the final target value; checks the harness itself.
    Oracle,
}

impl ModelId {
    pub const DEFAULT_SET: [ModelId; 6] = [ModelId::Ar, ModelId::Dfm, ModelId::Bvar, ModelId::Lm, ModelId::Rf, ModelId::Gbm];

    pub fn id(self) -> &'static str {
        match self {
            ModelId::Ar => "ar",
            ModelId::Dfm => "dfm",
            ModelId::Bvar => "bvar",
            ModelId::Lm => "lm",
            ModelId::Rf => "rf",
            ModelId::Gbm => "gbm",
            ModelId::Oracle => "oracle",
        }
    }

    /// Parse a comma-separated list such as `ar,dfm,lm`.
    pub fn parse_list(s: &str) -> Result<Vec<ModelId>> {
        let mut out = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let m: ModelId = part.parse()?;
            if !out.contains(&m) {
                out.push(m);
            }
        }
        if out.is_empty() {
            return Err(Error::Parse("model list is empty".into()));
        }
        Ok(out)
    }
}

impl fmt::Display for ModelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for ModelId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let all = [ModelId::Ar, ModelId::Dfm, ModelId::Bvar, ModelId::Lm, ModelId::Rf, ModelId::Gbm, ModelId::Oracle];
        all.into_iter()
            .find(|m| m.id() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| Error::Parse(format!("unknown model `{s}` (expected ar, dfm, bvar, lm, rf, gbm or oracle)")))
    }
}

/// Hyperparameters for every model the harness can run.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSettings {
    pub dfm: DfmConfig,
    pub bvar: BvarConfig,
    pub forest: ForestParams,
    pub boost: BoostParams,
    pub head: HeadImputeParams,
    pub tail_ar_max: usize,
    pub seed: u64,
}

impl Default for ModelSettings {
    fn default() -> Self {
        ModelSettings {
            dfm: DfmConfig::default(),
            bvar: BvarConfig::default(),
            forest: ForestParams::default(),
            boost: BoostParams::default(),
            head: HeadImputeParams::default(),
            tail_ar_max: TAIL_AR_MAX,
            seed: 0,
        }
    }
}

/// Quarterly bridge regressors built from a balanced, tail-filled frame.
#[derive(Debug, Clone)]
pub struct BridgeData {
    pub train_x: Vec<Vec<f64>>,
    pub train_y: Vec<f64>,
    pub train_quarters: Vec<Quarter>,
    /// Regressors for every complete quarter of the frame.
    pub rows: BTreeMap<Quarter, Vec<f64>>,
}

impl BridgeData {
    pub fn row(&self, q: Quarter) -> Result<&[f64]> {
        self.rows.get(&q).map(Vec::as_slice).ok_or_else(|| Error::Calendar(format!("no bridge regressors for {q}")))
    }
}

/// Quarterly means of every indicator; training rows are the quarters with
/// a published target.
pub fn bridge_data(filled: &MonthlyFrame) -> BridgeData {
    let mut rows = BTreeMap::new();
    let mut train_x = Vec::new();
    let mut train_y = Vec::new();
    let mut train_quarters = Vec::new();
    for t in 2..filled.len() {
        let m = filled.month_at(t);
        if !m.is_quarter_end() {
            continue;
        }
        let row: Option<Vec<f64>> = filled
            .columns
            .iter()
            .map(|c| Some((c[t - 2]? + c[t - 1]? + c[t]?) / 3.0))
            .collect();
        let Some(row) = row else { continue };
        if let Some(y) = filled.target[t] {
            train_x.push(row.clone());
            train_y.push(y);
            train_quarters.push(m.quarter());
        }
        rows.insert(m.quarter(), row);
    }
    BridgeData { train_x, train_y, train_quarters, rows }
}

/// Everything the models see at one vintage.
pub struct Vintage<'a> {
    pub dataset: &'a Dataset,
    pub as_of: AsOf,
    /// Raw ragged panel through the as-of month.
    pub frame: MonthlyFrame,
    pub settings: &'a ModelSettings,
    /// Last month any requested quarter needs.
    pub horizon_end: Month,
    balanced: OnceCell<MonthlyFrame>,
    filled: OnceCell<MonthlyFrame>,
    bridge: OnceCell<BridgeData>,
}

impl<'a> Vintage<'a> {
    pub fn new(dataset: &'a Dataset, as_of: AsOf, frame: MonthlyFrame, settings: &'a ModelSettings, quarters: &[Quarter]) -> Self {
        let horizon_end = quarters.iter().map(|q| q.last_month()).max().unwrap_or(frame.end()).max(frame.end());
        Vintage {
            dataset,
            as_of,
            frame,
            settings,
            horizon_end,
            balanced: OnceCell::new(),
            filled: OnceCell::new(),
            bridge: OnceCell::new(),
        }
    }

    /// Deterministic seed for a model fitted at this vintage.
    pub fn seed(&self, model: ModelId) -> u64 {
        let m = self.as_of.month().index() as u64;
        let d = self.as_of.day() as u64;
        self.settings.seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(m * 64 + d).wrapping_add((model as u64) << 40)
    }

    /// Head-imputed panel through the as-of month.
    pub fn balanced(&self) -> Result<&MonthlyFrame> {
        if let Some(f) = self.balanced.get() {
            return Ok(f);
        }
        let mut params = self.settings.head;
        params.seed = self.settings.head.seed.wrapping_add(self.seed(ModelId::Ar));
        let f = rf_impute_head(&self.frame, &params)?;
        Ok(self.balanced.get_or_init(|| f))
    }

    /// Balanced panel with AR-filled tails through `horizon_end`.
    pub fn filled(&self) -> Result<&MonthlyFrame> {
        if let Some(f) = self.filled.get() {
            return Ok(f);
        }
        let f = ar_fill_frame(&self.balanced()?.with_end(self.horizon_end), self.settings.tail_ar_max)?;
        Ok(self.filled.get_or_init(|| f))
    }

    pub fn bridge(&self) -> Result<&BridgeData> {
        if let Some(b) = self.bridge.get() {
            return Ok(b);
        }
        let b = bridge_data(self.filled()?);
        Ok(self.bridge.get_or_init(|| b))
    }

    fn check_quarter(&self, q: Quarter) -> Result<()> {
        if self.dataset.target_released(q, &self.as_of) {
            return Err(Error::Calendar(format!("{q} is already published at {}", self.as_of)));
        }
        Ok(())
    }
}

/// A nowcasting model driven by the harness. Implementations may keep state
/// across vintages (warm starts), so calls must come in vintage order.
pub trait NowcastModel {
    fn id(&self) -> ModelId;
    fn nowcast(&mut self, v: &Vintage, quarters: &[Quarter]) -> Result<Vec<f64>>;
}

pub fn make_model(id: ModelId, settings: &ModelSettings) -> Box<dyn NowcastModel> {
    match id {
        ModelId::Ar => Box::new(ArBenchmark),
        ModelId::Dfm => Box::new(DfmNowcaster { config: settings.dfm.clone(), previous: None }),
        ModelId::Bvar => Box::new(BvarNowcaster { config: settings.bvar }),
        ModelId::Lm | ModelId::Rf | ModelId::Gbm => Box::new(Bridge { kind: id }),
        ModelId::Oracle => Box::new(PerfectForesight),
    }
}

/// AR(1) with intercept on the published quarterly target.
pub struct ArBenchmark;

impl NowcastModel for ArBenchmark {
    fn id(&self) -> ModelId {
        ModelId::Ar
    }

    fn nowcast(&mut self, v: &Vintage, quarters: &[Quarter]) -> Result<Vec<f64>> {
        let released = v.frame.target_quarterly();
        let (last_q, _) = *released.last().ok_or_else(|| Error::AllMissing("target".into()))?;
        let y: Vec<f64> = released.iter().map(|(_, y)| *y).collect();
        let fit = fit_ar_orders(&y, 1)?.remove(0);
        quarters
            .iter()
            .map(|&q| {
                v.check_quarter(q)?;
                let h = q - last_q;
                if h < 1 {
                    return Err(Error::Calendar(format!("{q} is not after the last published quarter {last_q}")));
                }
                Ok(*fit.forecast(&y, h as usize).last().expect("h >= 1"))
            })
            .collect()
    }
}

pub struct DfmNowcaster {
    pub config: DfmConfig,
    previous: Option<(Vec<String>, DfmParams)>,
}

impl NowcastModel for DfmNowcaster {
    fn id(&self) -> ModelId {
        ModelId::Dfm
    }

    fn nowcast(&mut self, v: &Vintage, quarters: &[Quarter]) -> Result<Vec<f64>> {
        let warm = self.previous.as_ref().filter(|(names, _)| *names == v.frame.names).map(|(_, p)| p);
        let model = fit_dfm_from(&v.frame, &self.config, warm)?;
        let out = quarters
            .iter()
            .map(|&q| {
                v.check_quarter(q)?;
                model.nowcast(&v.frame, q)
            })
            .collect();
        self.previous = Some((model.names.clone(), model.params));
        out
    }
}

pub struct BvarNowcaster {
    pub config: BvarConfig,
}

impl NowcastModel for BvarNowcaster {
    fn id(&self) -> ModelId {
        ModelId::Bvar
    }

    fn nowcast(&mut self, v: &Vintage, quarters: &[Quarter]) -> Result<Vec<f64>> {
        for &q in quarters {
            v.check_quarter(q)?;
        }
        // balanced through the vintage month; later months are sampled
        let frame = ar_fill_frame(v.balanced()?, v.settings.tail_ar_max)?;
        let c = &self.config;
        let prior = build_minnesota(&frame, c.lambda1, c.lambda2, c.lambda3, c.lags)?;
        let draws = gibbs_run(&frame, &prior, c, v.horizon_end, v.seed(ModelId::Bvar))?;
        quarters.iter().map(|&q| nowcast_bvar(&draws, q)).collect()
    }
}

/// Bridge equation on quarterly means: OLS, random forest or boosting.
pub struct Bridge {
    kind: ModelId,
}

impl NowcastModel for Bridge {
    fn id(&self) -> ModelId {
        self.kind
    }

    fn nowcast(&mut self, v: &Vintage, quarters: &[Quarter]) -> Result<Vec<f64>> {
        for &q in quarters {
            v.check_quarter(q)?;
        }
        let b = v.bridge()?;
        let fitted = FittedBridge::fit(self.kind, b, v.settings, v.seed(self.kind))?;
        quarters.iter().map(|&q| fitted.predict(b.row(q)?)).collect()
    }
}

/// A fitted bridge equation, reusable across vintages.
pub enum FittedBridge {
    Ols(crate::linear::OLSFit),
    Forest(crate::trees::ForestModel),
    Boost(crate::trees::BoostModel),
}

impl FittedBridge {
    pub fn fit(kind: ModelId, b: &BridgeData, settings: &ModelSettings, seed: u64) -> Result<Self> {
        match kind {
            ModelId::Lm => Ok(FittedBridge::Ols(fit_ols(&b.train_x, &b.train_y)?)),
            ModelId::Rf => Ok(FittedBridge::Forest(fit_rf(&b.train_x, &b.train_y, &settings.forest, seed)?)),
            ModelId::Gbm => Ok(FittedBridge::Boost(fit_gbm(&b.train_x, &b.train_y, &settings.boost, seed)?)),
            other => Err(Error::InvalidInput(format!("`{other}` is not a bridge model"))),
        }
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        match self {
            FittedBridge::Ols(f) => f.predict(x),
            FittedBridge::Forest(f) => predict_rf(f, x),
            FittedBridge::Boost(f) => predict_gbm(f, x),
        }
    }
}

pub struct PerfectForesight;

impl NowcastModel for PerfectForesight {
    fn id(&self) -> ModelId {
        ModelId::Oracle
    }

    fn nowcast(&mut self, v: &Vintage, quarters: &[Quarter]) -> Result<Vec<f64>> {
        quarters
            .iter()
            .map(|&q| {
                v.check_quarter(q)?;
                v.dataset.truth(q).ok_or_else(|| Error::Calendar(format!("no final value for {q}")))
            })
            .collect()
    }
}
