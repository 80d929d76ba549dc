//! TOML run configuration.
//!
//! Every section is optional. Paths are relative to the config file.
//!
//! ```toml
//! seed = 7
//! jobs = 1
//! output_dir = "out"
//!
//! [data]
//! meta = "data/meta.txt"
//! transactions = "data/transactions.csv"
//! inflation = "data/inflation.csv"
//! mapping = "data/mapping.csv"        # optional, default per purpose
//!
//! [synth]
//! economy = "table_a1"                # or "simple"
//! indicators = 10                     # simple economy only
//! start = "2000-01"
//! months = 168
//! transactions = true
//! txn_start = "2016-01"
//! txn_months = 48
//! inflation = 8.0
//!
//! [models]
//! list = ["ar", "dfm", "bvar", "lm", "rf", "gbm"]
//! preselect = false
//! tail_ar_max = 6
//! [models.dfm]    # factors, factor_lags, max_iter, tol
//! [models.bvar]   # lags, lambda1, lambda2, lambda3, n_burn, n_draws, thin
//! [models.forest] # n_trees, mtry, min_leaf, max_depth
//! [models.boost]  # n_rounds, learning_rate, max_depth, min_leaf
//! [models.head]   # n_trees, max_iter
//!
//! [evaluate]
//! start = "2010Q1"
//! end = "2012Q4"
//! ablate_bigdata = false
//! combinations = true
//! window = 8
//! min_history = 4
//!
//! [nowcast]
//! as_of = "2012-05-31"
//!
//! [daily]
//! quarters = ["2011Q1", "2011Q3"]     # default: every quarter of the span
//! days = 150
//!
//! [index]
//! purpose = "consumption"
//! weights = "lagged_shares"           # or "fixed" with fixed_weights
//! fixed_weights = [0.6, 0.4]
//! winsorize = [0.01, 0.99]
//! ```

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::NaiveDate;
use nowcast::evaluate::{ModelId, ModelSettings, DEFAULT_DAYS};
use nowcast::series::{Month, Quarter};
use nowcast::txn::Purpose;
use serde::Deserialize;

#[derive(Debug, Clone, PartialEq)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub data: RawData,
    #[serde(default)]
    pub synth: RawSynth,
    #[serde(default)]
    pub models: RawModels,
    #[serde(default)]
    pub evaluate: RawEvaluate,
    #[serde(default)]
    pub nowcast: RawNowcast,
    #[serde(default)]
    pub daily: RawDaily,
    #[serde(default)]
    pub index: RawIndex,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawData {
    pub meta: Option<PathBuf>,
    pub transactions: Option<PathBuf>,
    pub inflation: Option<PathBuf>,
    pub mapping: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawSynth {
    pub economy: Option<String>,
    pub indicators: Option<usize>,
    pub start: Option<String>,
    pub months: Option<usize>,
    pub transactions: Option<bool>,
    pub txn_start: Option<String>,
    pub txn_months: Option<usize>,
    pub inflation: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawModels {
    pub list: Option<Vec<String>>,
    pub preselect: Option<bool>,
    pub tail_ar_max: Option<usize>,
    #[serde(default)]
    pub dfm: RawDfm,
    #[serde(default)]
    pub bvar: RawBvar,
    #[serde(default)]
    pub forest: RawForest,
    #[serde(default)]
    pub boost: RawBoost,
    #[serde(default)]
    pub head: RawHead,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawDfm {
    pub factors: Option<usize>,
    pub factor_lags: Option<usize>,
    pub max_iter: Option<usize>,
    pub tol: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawBvar {
    pub lags: Option<usize>,
    pub lambda1: Option<f64>,
    pub lambda2: Option<f64>,
    pub lambda3: Option<f64>,
    pub n_burn: Option<usize>,
    pub n_draws: Option<usize>,
    pub thin: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawForest {
    pub n_trees: Option<usize>,
    pub mtry: Option<usize>,
    pub min_leaf: Option<usize>,
    pub max_depth: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawBoost {
    pub n_rounds: Option<usize>,
    pub learning_rate: Option<f64>,
    pub max_depth: Option<usize>,
    pub min_leaf: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawHead {
    pub n_trees: Option<usize>,
    pub max_iter: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawEvaluate {
    pub start: Option<String>,
    pub end: Option<String>,
    pub ablate_bigdata: Option<bool>,
    pub combinations: Option<bool>,
    pub window: Option<usize>,
    pub min_history: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawNowcast {
    pub as_of: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawDaily {
    pub quarters: Option<Vec<String>>,
    pub days: Option<u32>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawIndex {
    pub purpose: Option<String>,
    pub weights: Option<String>,
    pub fixed_weights: Option<Vec<f64>>,
    pub winsorize: Option<Vec<f64>>,
}

/// Command-line values that override the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub output_dir: Option<PathBuf>,
    pub models: Option<String>,
    pub preselect: Option<bool>,
    pub ablate_bigdata: bool,
    pub as_of: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Economy {
    TableA1,
    Simple(usize),
}

#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub economy: Economy,
    pub start: Month,
    pub months: usize,
    pub transactions: bool,
    pub txn_start: Month,
    pub txn_months: usize,
    pub inflation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum IndexWeights {
    LaggedShares,
    Fixed(Vec<f64>),
}

#[derive(Debug, Clone)]
pub struct IndexConfig {
    pub purpose: Purpose,
    pub weights: IndexWeights,
    pub winsorize: Option<(f64, f64)>,
}

#[derive(Debug, Clone)]
pub struct Config {
    pub seed: u64,
    pub jobs: Option<usize>,
    pub output_dir: PathBuf,
    pub meta: Option<PathBuf>,
    pub transactions: Option<PathBuf>,
    pub inflation: Option<PathBuf>,
    pub mapping: Option<PathBuf>,
    pub synth: SynthConfig,
    pub models: Vec<ModelId>,
    pub settings: ModelSettings,
    pub preselect: bool,
    pub eval_start: Quarter,
    pub eval_end: Quarter,
    pub ablate_bigdata: bool,
    pub combinations: bool,
    pub window: usize,
    pub min_history: usize,
    pub as_of: Option<NaiveDate>,
    pub daily_quarters: Option<Vec<Quarter>>,
    pub days: u32,
    pub index: IndexConfig,
}

pub const DEFAULT_SYNTH_START: &str = "2000-01";
pub const DEFAULT_SYNTH_MONTHS: usize = 168;
pub const DEFAULT_TXN_START: &str = "2016-01";
pub const DEFAULT_TXN_MONTHS: usize = 48;
pub const DEFAULT_INFLATION: f64 = 8.0;
pub const DEFAULT_EVAL_START: &str = "2010Q1";
pub const DEFAULT_EVAL_END: &str = "2012Q4";

/// Read and validate a config file (or defaults when `path` is `None`).
pub fn load(path: Option<&Path>, ov: &Overrides) -> Result<Config, Vec<FieldError>> {
    let (raw, base) = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| vec![FieldError { field: "config".into(), message: format!("{}: {e}", p.display()) }])?;
            let raw = parse_raw(&text)?;
            (raw, p.parent().map(Path::to_path_buf).unwrap_or_default())
        }
        None => (RawConfig::default(), PathBuf::new()),
    };
    resolve(raw, &base, ov)
}

fn parse_raw(text: &str) -> Result<RawConfig, Vec<FieldError>> {
    let syntax = |e: toml::de::Error| vec![FieldError { field: "config".into(), message: e.message().trim().to_string() }];
    let de = toml::de::Deserializer::parse(text).map_err(syntax)?;
    serde_path_to_error::deserialize(de).map_err(|e| {
        // unknown keys report their parent table; the message names the key
        let field = match e.path().to_string() {
            p if p == "." => "config".to_string(),
            p => p,
        };
        vec![FieldError { field, message: e.inner().message().trim().to_string() }]
    })
}

struct Errors(Vec<FieldError>);

impl Errors {
    fn push(&mut self, field: &str, message: impl Into<String>) {
        self.0.push(FieldError { field: field.into(), message: message.into() });
    }

    fn parse<T: FromStr>(&mut self, field: &str, text: &str, fallback: T) -> T
    where
        T::Err: fmt::Display,
    {
        match text.parse() {
            Ok(v) => v,
            Err(e) => {
                self.push(field, e.to_string());
                fallback
            }
        }
    }

    fn positive(&mut self, field: &str, v: Option<usize>, default: usize) -> usize {
        match v {
            Some(0) => {
                self.push(field, "must be at least 1");
                default
            }
            Some(v) => v,
            None => default,
        }
    }

    fn positive_f(&mut self, field: &str, v: Option<f64>, default: f64) -> f64 {
        match v {
            Some(x) if !(x > 0.0 && x.is_finite()) => {
                self.push(field, format!("must be a positive number, got {x}"));
                default
            }
            Some(x) => x,
            None => default,
        }
    }
}

fn resolve(raw: RawConfig, base: &Path, ov: &Overrides) -> Result<Config, Vec<FieldError>> {
    let mut errs = Errors(Vec::new());
    let rel = |p: Option<PathBuf>| p.map(|p| if p.is_absolute() { p } else { base.join(p) });

    let seed = ov.seed.or(raw.seed).unwrap_or(0);
    let jobs = ov.jobs.or(raw.jobs);
    if jobs == Some(0) {
        errs.push("jobs", "must be at least 1");
    }
    let output_dir = ov.output_dir.clone().or_else(|| rel(raw.output_dir)).unwrap_or_else(|| PathBuf::from("out"));

    let s = raw.synth;
    let economy = match s.economy.as_deref().unwrap_or("table_a1") {
        "table_a1" => {
            if s.indicators.is_some() {
                errs.push("synth.indicators", "only used with economy = \"simple\"");
            }
            Economy::TableA1
        }
        "simple" => Economy::Simple(errs.positive("synth.indicators", s.indicators, 10)),
        other => {
            errs.push("synth.economy", format!("expected \"table_a1\" or \"simple\", got \"{other}\""));
            Economy::TableA1
        }
    };
    let default_start = Month::new(2000, 1);
    let synth = SynthConfig {
        economy,
        start: errs.parse("synth.start", s.start.as_deref().unwrap_or(DEFAULT_SYNTH_START), default_start),
        months: errs.positive("synth.months", s.months, DEFAULT_SYNTH_MONTHS),
        transactions: s.transactions.unwrap_or(true),
        txn_start: errs.parse("synth.txn_start", s.txn_start.as_deref().unwrap_or(DEFAULT_TXN_START), default_start),
        txn_months: errs.positive("synth.txn_months", s.txn_months, DEFAULT_TXN_MONTHS),
        inflation: match s.inflation {
            Some(x) if !(x > -100.0 && x.is_finite()) => {
                errs.push("synth.inflation", format!("must exceed -100, got {x}"));
                DEFAULT_INFLATION
            }
            Some(x) => x,
            None => DEFAULT_INFLATION,
        },
    };
    if synth.txn_months < 13 {
        errs.push("synth.txn_months", "needs at least 13 months for a YoY index");
    }

    let m = raw.models;
    let list: Vec<String> = match (&ov.models, m.list) {
        (Some(flag), _) => flag.split(',').map(str::to_string).collect(),
        (None, Some(l)) => l,
        (None, None) => ModelId::DEFAULT_SET.iter().map(|m| m.to_string()).collect(),
    };
    let field = if ov.models.is_some() { "--models" } else { "models.list" };
    let mut models = Vec::new();
    for name in &list {
        match name.parse::<ModelId>() {
            Ok(id) if models.contains(&id) => errs.push(field, format!("`{id}` listed twice")),
            Ok(id) => models.push(id),
            Err(e) => errs.push(field, e.to_string()),
        }
    }
    if list.is_empty() {
        errs.push(field, "needs at least one model");
    }

    let mut settings = ModelSettings { seed, ..ModelSettings::default() };
    settings.tail_ar_max = errs.positive("models.tail_ar_max", m.tail_ar_max, settings.tail_ar_max);
    let d = &mut settings.dfm;
    d.factors = errs.positive("models.dfm.factors", m.dfm.factors, d.factors);
    d.factor_lags = match m.dfm.factor_lags {
        Some(l @ (1 | 2)) => l,
        Some(l) => {
            errs.push("models.dfm.factor_lags", format!("must be 1 or 2, got {l}"));
            d.factor_lags
        }
        None => d.factor_lags,
    };
    d.max_iter = errs.positive("models.dfm.max_iter", m.dfm.max_iter, d.max_iter);
    d.tol = errs.positive_f("models.dfm.tol", m.dfm.tol, d.tol);
    let b = &mut settings.bvar;
    b.lags = errs.positive("models.bvar.lags", m.bvar.lags, b.lags);
    b.lambda1 = errs.positive_f("models.bvar.lambda1", m.bvar.lambda1, b.lambda1);
    b.lambda2 = errs.positive_f("models.bvar.lambda2", m.bvar.lambda2, b.lambda2);
    b.lambda3 = match m.bvar.lambda3 {
        Some(x) if !(x >= 0.0 && x.is_finite()) => {
            errs.push("models.bvar.lambda3", format!("must be non-negative, got {x}"));
            b.lambda3
        }
        Some(x) => x,
        None => b.lambda3,
    };
    b.n_burn = m.bvar.n_burn.unwrap_or(b.n_burn);
    b.n_draws = errs.positive("models.bvar.n_draws", m.bvar.n_draws, b.n_draws);
    b.thin = errs.positive("models.bvar.thin", m.bvar.thin, b.thin);
    let f = &mut settings.forest;
    f.n_trees = errs.positive("models.forest.n_trees", m.forest.n_trees, f.n_trees);
    if m.forest.mtry.is_some() {
        f.mtry = Some(errs.positive("models.forest.mtry", m.forest.mtry, 1));
    }
    f.min_leaf = errs.positive("models.forest.min_leaf", m.forest.min_leaf, f.min_leaf);
    if m.forest.max_depth.is_some() {
        f.max_depth = Some(errs.positive("models.forest.max_depth", m.forest.max_depth, 1));
    }
    let g = &mut settings.boost;
    g.n_rounds = errs.positive("models.boost.n_rounds", m.boost.n_rounds, g.n_rounds);
    g.learning_rate = match m.boost.learning_rate {
        Some(x) if !(x > 0.0 && x <= 1.0) => {
            errs.push("models.boost.learning_rate", format!("must lie in (0, 1], got {x}"));
            g.learning_rate
        }
        Some(x) => x,
        None => g.learning_rate,
    };
    g.max_depth = errs.positive("models.boost.max_depth", m.boost.max_depth, g.max_depth);
    g.min_leaf = errs.positive("models.boost.min_leaf", m.boost.min_leaf, g.min_leaf);
    let h = &mut settings.head;
    h.forest.n_trees = errs.positive("models.head.n_trees", m.head.n_trees, h.forest.n_trees);
    h.max_iter = errs.positive("models.head.max_iter", m.head.max_iter, h.max_iter);
    h.seed = seed;
    settings.dfm.init_impute = settings.head.clone();

    let e = raw.evaluate;
    let q0 = Quarter::new(2010, 1);
    let eval_start = errs.parse("evaluate.start", e.start.as_deref().unwrap_or(DEFAULT_EVAL_START), q0);
    let eval_end = errs.parse("evaluate.end", e.end.as_deref().unwrap_or(DEFAULT_EVAL_END), q0);
    if eval_end < eval_start {
        errs.push("evaluate.end", format!("{eval_end} is before evaluate.start {eval_start}"));
    }
    let window = errs.positive("evaluate.window", e.window, nowcast::combine::DEFAULT_WINDOW);
    let min_history = errs.positive("evaluate.min_history", e.min_history, nowcast::combine::MIN_HISTORY);

    let as_of_text = ov.as_of.clone().or(raw.nowcast.as_of);
    let as_of = as_of_text.map(|t| {
        let field = if ov.as_of.is_some() { "--as-of" } else { "nowcast.as_of" };
        NaiveDate::parse_from_str(t.trim(), "%Y-%m-%d")
            .map_err(|err| errs.push(field, format!("expected a date like 2012-05-31, got `{t}`: {err}")))
            .ok()
    });

    let daily_quarters = raw.daily.quarters.map(|qs| {
        if qs.is_empty() {
            errs.push("daily.quarters", "must list at least one quarter");
        }
        qs.iter().map(|q| errs.parse("daily.quarters", q, q0)).collect::<Vec<_>>()
    });
    let days = match raw.daily.days {
        Some(0) => {
            errs.push("daily.days", "must be at least 1");
            DEFAULT_DAYS
        }
        Some(d) => d,
        None => DEFAULT_DAYS,
    };

    let ix = raw.index;
    let purpose = errs.parse("index.purpose", ix.purpose.as_deref().unwrap_or("consumption"), Purpose::Consumption);
    let weights = match (ix.weights.as_deref().unwrap_or("lagged_shares"), ix.fixed_weights) {
        ("lagged_shares", None) => IndexWeights::LaggedShares,
        ("lagged_shares", Some(_)) => {
            errs.push("index.fixed_weights", "only used with weights = \"fixed\"");
            IndexWeights::LaggedShares
        }
        ("fixed", Some(w)) => {
            if w.is_empty() || w.iter().any(|x| !(*x >= 0.0)) || !(w.iter().sum::<f64>() > 0.0) {
                errs.push("index.fixed_weights", "must be non-negative with a positive sum");
            }
            IndexWeights::Fixed(w)
        }
        ("fixed", None) => {
            errs.push("index.fixed_weights", "required when weights = \"fixed\"");
            IndexWeights::LaggedShares
        }
        (other, _) => {
            errs.push("index.weights", format!("expected \"lagged_shares\" or \"fixed\", got \"{other}\""));
            IndexWeights::LaggedShares
        }
    };
    let winsorize = match ix.winsorize.as_deref() {
        None => None,
        Some([lo, hi]) if 0.0 <= *lo && lo < hi && *hi <= 1.0 => Some((*lo, *hi)),
        Some(_) => {
            errs.push("index.winsorize", "expected [lower, upper] quantiles with 0 <= lower < upper <= 1");
            None
        }
    };

    if !errs.0.is_empty() {
        return Err(errs.0);
    }
    Ok(Config {
        seed,
        jobs,
        output_dir,
        meta: rel(raw.data.meta),
        transactions: rel(raw.data.transactions),
        inflation: rel(raw.data.inflation),
        mapping: rel(raw.data.mapping),
        synth,
        models,
        settings,
        preselect: ov.preselect.or(m.preselect).unwrap_or(false),
        eval_start,
        eval_end,
        ablate_bigdata: ov.ablate_bigdata || e.ablate_bigdata.unwrap_or(false),
        combinations: e.combinations.unwrap_or(true),
        window,
        min_history,
        as_of: as_of.flatten(),
        daily_quarters,
        days,
        index: IndexConfig { purpose, weights, winsorize },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Config, Vec<FieldError>> {
        let raw = parse_raw(text)?;
        resolve(raw, Path::new("/base"), &Overrides::default())
    }

    #[test]
    fn defaults_validate() {
        let c = parse("").unwrap();
        assert_eq!(c.models, ModelId::DEFAULT_SET.to_vec());
        assert_eq!(c.days, 150);
        assert_eq!(c.eval_start, Quarter::new(2010, 1));
    }

    #[test]
    fn errors_name_fields() {
        let errs = parse("[evaluate]\nstart = \"2010Q7\"\n[models]\nlist = [\"dfm\", \"svm\"]\n[models.bvar]\nlambda1 = -1.0\n")
            .unwrap_err();
        let fields: Vec<&str> = errs.iter().map(|e| e.field.as_str()).collect();
        assert_eq!(fields, vec!["models.list", "models.bvar.lambda1", "evaluate.start"]);
        let errs = parse("[evaluate]\nstrat = \"2010Q1\"\n").unwrap_err();
        assert!(errs[0].message.contains("strat"), "{}", errs[0].message);
        assert_eq!(parse("seed = \"x\"\n").unwrap_err()[0].field, "seed");
    }

    #[test]
    fn paths_are_relative_to_the_config() {
        let c = parse("output_dir = \"o\"\n[data]\nmeta = \"d/meta.txt\"\n").unwrap();
        assert_eq!(c.meta.unwrap(), Path::new("/base/d/meta.txt"));
        assert_eq!(c.output_dir, Path::new("/base/o"));
    }

    #[test]
    fn flags_override_the_file() {
        let raw: RawConfig = toml::from_str("seed = 3\n[models]\nlist = [\"dfm\"]\n").unwrap();
        let ov = Overrides { seed: Some(9), models: Some("ar,lm".into()), ..Overrides::default() };
        let c = resolve(raw, Path::new(""), &ov).unwrap();
        assert_eq!(c.seed, 9);
        assert_eq!(c.settings.seed, 9);
        assert_eq!(c.models, vec![ModelId::Ar, ModelId::Lm]);
    }
}
