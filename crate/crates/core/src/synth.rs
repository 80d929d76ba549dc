//! Synthetic economies with known latent factors.
//!
//! A factor VAR drives monthly indicators (loading plus AR(1) noise), a
//! monthly latent GDP growth whose quarterly value is the three-month mean,
//! and daily big-data proxies that interpolate the factor inside each month.

use std::collections::BTreeMap;

use chrono::{Datelike, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::series::{
    AnnounceDay, Dataset, Frequency, Month, Quarter, SeriesKind, SeriesMeta, TimeSeries, Transform, Units,
};
use crate::txn::{Channel, FilterRule, Payer, Purpose, TransactionRecord};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorSpec {
    pub meta: SeriesMeta,
    /// Loading on each factor.
    pub loadings: Vec<f64>,
    pub idio_ar: f64,
    pub noise_sd: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FactorSpec {
    pub start: Month,
    pub months: usize,
    /// Diagonal factor AR coefficients (one per factor).
    pub factor_ar: Vec<f64>,
    pub factor_sd: f64,
    pub indicators: Vec<IndicatorSpec>,
    /// Target: monthly latent growth `mean + loadings . f_t + noise`.
    pub gdp_name: String,
    pub gdp_mean: f64,
    pub gdp_loadings: Vec<f64>,
    pub gdp_noise_sd: f64,
    pub gdp_lag_months: u32,
    /// Standard deviation of the daily noise on big-data proxies.
    pub daily_noise_sd: f64,
}

/// A generated economy and its latent truth.
#[derive(Debug, Clone)]
pub struct SynthData {
    pub dataset: Dataset,
    /// `factors[t][k]`, monthly from `spec.start`.
    pub factors: Vec<Vec<f64>>,
    pub gdp_monthly: Vec<f64>,
    pub gdp_quarterly: Vec<(Quarter, f64)>,
}

fn meta(name: &str, kind: SeriesKind, lag: u32, day: AnnounceDay) -> SeriesMeta {
    SeriesMeta { name: name.into(), kind, transform: Transform::Level, announce_lag_months: lag, announce_day: day }
}

/// A one-factor economy shaped like the thirteen-indicator publication
/// calendar: strong hard data, noisy car series, soft surveys, and two
/// daily big-data proxies loading 0.8 on the factor.
pub fn table_a1_spec(start: Month, months: usize) -> FactorSpec {
    use AnnounceDay::{Daily, Day};
    use SeriesKind::{BigData, Hard, Soft};
    let ind = |name: &str, kind, lag, day, loading: f64, noise_sd: f64| IndicatorSpec {
        meta: meta(name, kind, lag, day),
        loadings: vec![loading],
        idio_ar: 0.3,
        noise_sd,
    };
    FactorSpec {
        start,
        months,
        factor_ar: vec![0.8],
        factor_sd: 1.0,
        indicators: vec![
            ind("ip", Hard, 2, Day(13), 0.9, 0.3),
            ind("car_imports", Hard, 2, Day(15), 0.4, 1.0),
            ind("ip_non_metallic", Hard, 2, Day(13), 0.7, 0.5),
            ind("car_sales", Hard, 2, Day(15), 0.4, 1.0),
            ind("electricity", Hard, 0, Day(30), 0.4, 1.0),
            ind("employed", Hard, 3, Day(12), 0.6, 0.5),
            ind("unemployed", Hard, 3, Day(12), -0.6, 0.5),
            ind("car_exports", Hard, 2, Day(15), 0.4, 1.0),
            ind("pmi", Soft, 1, Day(1), 0.6, 0.6),
            ind("loans_13w", Soft, 1, Day(10), 0.5, 0.7),
            ind("real_sector_confidence", Soft, 0, Day(26), 0.4, 1.0),
            ind("bigdata_consumption", BigData, 0, Daily, 0.8, 0.2),
            ind("bigdata_investment", BigData, 0, Daily, 0.8, 0.2),
        ],
        gdp_name: "gdp".into(),
        gdp_mean: 4.0,
        gdp_loadings: vec![2.0],
        gdp_noise_sd: 0.5,
        gdp_lag_months: 3,
        daily_noise_sd: 0.5,
    }
}

/// `n` monthly hard indicators with loadings spread over `[0.5, 1.0]`, all
/// published two months after the reference month.
pub fn simple_spec(n: usize, start: Month, months: usize) -> FactorSpec {
    let indicators = (0..n)
        .map(|i| IndicatorSpec {
            meta: meta(&format!("x{:02}", i + 1), SeriesKind::Hard, 2, AnnounceDay::Day(15)),
            loadings: vec![0.5 + 0.5 * i as f64 / (n.max(2) - 1) as f64],
            idio_ar: 0.3,
            noise_sd: 0.5,
        })
        .collect();
    FactorSpec {
        start,
        months,
        factor_ar: vec![0.8],
        factor_sd: 1.0,
        indicators,
        gdp_name: "gdp".into(),
        gdp_mean: 3.0,
        gdp_loadings: vec![1.5],
        gdp_noise_sd: 0.5,
        gdp_lag_months: 3,
        daily_noise_sd: 0.5,
    }
}

/// The [`simple_spec`] economy with indicator `i` published on the calendar
/// of the `i`-th monthly series of [`table_a1_spec`] (cycling when `n` is
/// larger than eleven).
pub fn a1_calendar_spec(n: usize, start: Month, months: usize) -> FactorSpec {
    let calendar: Vec<SeriesMeta> = table_a1_spec(start, months)
        .indicators
        .into_iter()
        .filter(|s| s.meta.kind != SeriesKind::BigData)
        .map(|s| s.meta)
        .collect();
    let mut spec = simple_spec(n, start, months);
    for (i, ind) in spec.indicators.iter_mut().enumerate() {
        let c = &calendar[i % calendar.len()];
        ind.meta = SeriesMeta { name: format!("{}_{:02}", c.name, i + 1), ..c.clone() };
    }
    spec
}

fn validate(spec: &FactorSpec) -> Result<()> {
    let r = spec.factor_ar.len();
    if r == 0 {
        return Err(Error::InvalidInput("synthetic economy needs at least one factor".into()));
    }
    if spec.factor_ar.iter().any(|a| a.abs() >= 1.0) {
        return Err(Error::NonStationary("factor AR coefficient on or outside the unit circle".into()));
    }
    if spec.indicators.iter().any(|s| s.idio_ar.abs() >= 1.0) {
        return Err(Error::NonStationary("idiosyncratic AR coefficient on or outside the unit circle".into()));
    }
    if spec.indicators.iter().any(|s| s.loadings.len() != r) || spec.gdp_loadings.len() != r {
        return Err(Error::DimensionMismatch { expected: r, actual: spec.gdp_loadings.len() });
    }
    if spec.months < 24 || spec.start.month() != 1 && spec.start.month() != 4 && spec.start.month() != 7 && spec.start.month() != 10 {
        return Err(Error::InvalidInput("synthetic sample must start a quarter and span at least two years".into()));
    }
    let sds = [spec.factor_sd, spec.gdp_noise_sd, spec.daily_noise_sd];
    if sds.iter().chain(spec.indicators.iter().map(|s| &s.noise_sd)).any(|s| !(*s >= 0.0)) {
        return Err(Error::InvalidInput("noise standard deviations must be non-negative".into()));
    }
    Ok(())
}

/// Simulate an economy; fully determined by `(spec, seed)`.
pub fn gen_factor_panel(spec: &FactorSpec, seed: u64) -> Result<SynthData> {
    validate(spec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = spec.factor_ar.len();
    let t_len = spec.months;
    let burn = 50;

    let mut f = vec![0.0; r];
    let mut factors = Vec::with_capacity(t_len + 1);
    for t in 0..burn + t_len + 1 {
        for k in 0..r {
            f[k] = spec.factor_ar[k] * f[k] + spec.factor_sd * rng.sample::<f64, _>(StandardNormal);
        }
        if t >= burn {
            factors.push(f.clone());
        }
    }
    // factors[0] is the month before the sample, kept for interpolation
    let pre = factors.remove(0);
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();

    let mut indicators = Vec::with_capacity(spec.indicators.len());
    let mut metas = Vec::with_capacity(spec.indicators.len() + 1);
    for ind in &spec.indicators {
        let noise = Normal::new(0.0, ind.noise_sd.max(0.0)).map_err(|e| Error::InvalidInput(e.to_string()))?;
        let stationary_sd = if ind.noise_sd > 0.0 { ind.noise_sd / (1.0 - ind.idio_ar * ind.idio_ar).sqrt() } else { 0.0 };
        let mut e = stationary_sd * rng.sample::<f64, _>(StandardNormal);
        let series = if ind.meta.announce_day == AnnounceDay::Daily {
            let daily = Normal::new(0.0, spec.daily_noise_sd).map_err(|e| Error::InvalidInput(e.to_string()))?;
            let mut obs = Vec::new();
            for t in 0..t_len {
                e = ind.idio_ar * e + noise.sample(&mut rng);
                let month = spec.start + t as i32;
                let prev = if t == 0 { dot(&ind.loadings, &pre) } else { dot(&ind.loadings, &factors[t - 1]) };
                let cur = dot(&ind.loadings, &factors[t]);
                let mut d = month.first_day();
                while d.month() == month.month() {
                    let k = d.day() as f64;
                    let level = if k <= 15.0 { prev + (cur - prev) * k / 15.0 } else { cur };
                    obs.push((d, level + e + daily.sample(&mut rng)));
                    d = d.succ_opt().expect("in range");
                }
            }
            TimeSeries::new(&ind.meta.name, Frequency::Daily, Units::Level, obs)?
        } else {
            let col: Vec<Option<f64>> = (0..t_len)
                .map(|t| {
                    e = ind.idio_ar * e + noise.sample(&mut rng);
                    Some(dot(&ind.loadings, &factors[t]) + e)
                })
                .collect();
            TimeSeries::from_monthly(&ind.meta.name, spec.start, &col, Units::Percent)?
        };
        indicators.push(series);
        metas.push(ind.meta.clone());
    }

    let gdp_noise = Normal::new(0.0, spec.gdp_noise_sd).map_err(|e| Error::InvalidInput(e.to_string()))?;
    let gdp_monthly: Vec<f64> = (0..t_len)
        .map(|t| spec.gdp_mean + dot(&spec.gdp_loadings, &factors[t]) + gdp_noise.sample(&mut rng))
        .collect();
    let gdp_quarterly: Vec<(Quarter, f64)> = gdp_monthly
        .chunks_exact(3)
        .enumerate()
        .map(|(i, c)| (spec.start.quarter() + i as i32, (c[0] + c[1] + c[2]) / 3.0))
        .collect();
    let target_obs: Vec<(NaiveDate, f64)> = gdp_quarterly.iter().map(|(q, v)| (q.last_month().last_day(), *v)).collect();
    let target = TimeSeries::new(&spec.gdp_name, Frequency::Quarterly, Units::Percent, target_obs)?;
    metas.push(meta(&spec.gdp_name, SeriesKind::Hard, spec.gdp_lag_months, AnnounceDay::Day(1)));

    Ok(SynthData { dataset: Dataset::new(indicators, target, metas)?, factors, gdp_monthly, gdp_quarterly })
}

/// Target nominal path for one sector bucket of transaction data.
#[derive(Debug, Clone, PartialEq)]
pub struct BucketTarget {
    pub bucket: String,
    pub purpose: Purpose,
    /// Sector codes mapped to this bucket.
    pub codes: Vec<String>,
    /// Average monthly nominal sum in the first year.
    pub base_level: f64,
    /// Nominal YoY growth in percent for months 12, 13, ...
    pub growth: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TxnSpec {
    pub start: Month,
    pub buckets: Vec<BucketTarget>,
    /// Valid records per bucket and month, drawn uniformly from this range.
    pub records_per_month: (usize, usize),
    /// Expected number of rule-violating records per valid record.
    pub violation_rate: f64,
}

impl TxnSpec {
    pub fn months(&self) -> usize {
        self.buckets.iter().map(|b| 12 + b.growth.len()).max().unwrap_or(0)
    }
}

#[derive(Debug, Clone)]
pub struct SynthTransactions {
    pub records: Vec<TransactionRecord>,
    /// Monthly nominal level per bucket (the exact sum of its valid records).
    pub levels: Vec<Vec<f64>>,
    /// Planted violations per purpose and rule.
    pub planted: BTreeMap<(Purpose, FilterRule), usize>,
}

impl SynthTransactions {
    pub fn planted_for(&self, purpose: Purpose) -> usize {
        self.planted.iter().filter(|((p, _), _)| *p == purpose).map(|(_, n)| n).sum()
    }
}

/// Default two-purpose target: goods and services for consumption,
/// machinery and construction for investment, with smooth growth paths.
pub fn default_txn_spec(start: Month, months: usize) -> TxnSpec {
    let path = |amp: f64, trend: f64, phase: f64| -> Vec<f64> {
        (12..months).map(|t| trend + amp * (t as f64 / 9.0 + phase).sin()).collect()
    };
    let bucket = |name: &str, purpose, codes: &[&str], base, growth| BucketTarget {
        bucket: name.into(),
        purpose,
        codes: codes.iter().map(|c| c.to_string()).collect(),
        base_level: base,
        growth,
    };
    TxnSpec {
        start,
        buckets: vec![
            bucket("goods", Purpose::Consumption, &["5311", "5411", "5651", "5732"], 5.0e5, path(6.0, 12.0, 0.0)),
            bucket("services", Purpose::Consumption, &["4111", "5812", "7011", "8062"], 3.0e5, path(8.0, 9.0, 1.0)),
            bucket("machinery", Purpose::Investment, &["28.1", "28.2", "28.9", "29.1"], 8.0e5, path(10.0, 7.0, 2.0)),
            bucket("construction", Purpose::Investment, &["41.2", "42.1", "43.2"], 6.0e5, path(12.0, 5.0, 3.0)),
        ],
        records_per_month: (20, 40),
        violation_rate: 0.1,
    }
}

/// Transaction records whose valid monthly bucket sums follow the target
/// nominal growth exactly, plus planted rule violations.
pub fn gen_transactions(spec: &TxnSpec, seed: u64) -> Result<SynthTransactions> {
    let (lo, hi) = spec.records_per_month;
    if lo == 0 || hi < lo {
        return Err(Error::InvalidInput("records per month range must be non-empty and positive".into()));
    }
    if !(0.0..=1.0).contains(&spec.violation_rate) {
        return Err(Error::InvalidInput("violation rate must lie in [0, 1]".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut levels = Vec::with_capacity(spec.buckets.len());
    for b in &spec.buckets {
        if !(b.base_level > 0.0) || b.codes.is_empty() {
            return Err(Error::InvalidInput(format!("bucket `{}` needs a positive base level and sector codes", b.bucket)));
        }
        let mut l: Vec<f64> =
            (0..12).map(|t| b.base_level * (1.0 + 0.1 * (2.0 * std::f64::consts::PI * t as f64 / 12.0).sin())).collect();
        for (i, g) in b.growth.iter().enumerate() {
            let next = l[i] * (1.0 + g / 100.0);
            if !(next > 0.0) {
                return Err(Error::InvalidInput(format!(
                    "bucket `{}` growth {g}% at month {} gives a non-positive level",
                    b.bucket,
                    12 + i
                )));
            }
            l.push(next);
        }
        levels.push(l);
    }

    let mut records = Vec::new();
    let mut planted = BTreeMap::new();
    for (b, target) in spec.buckets.iter().enumerate() {
        for (t, level) in levels[b].iter().enumerate() {
            let month = spec.start + t as i32;
            let n = rng.random_range(lo..=hi);
            let u: Vec<f64> = (0..n).map(|_| 0.05 + rng.sample::<f64, _>(rand_distr::Exp1)).collect();
            let total: f64 = u.iter().sum();
            for ui in &u {
                let mut rec = TransactionRecord {
                    date: month.day(rng.random_range(1..=month.days())),
                    payer: Payer::Individual,
                    channel: Channel::Pos,
                    sector_code: target.codes[rng.random_range(0..target.codes.len())].clone(),
                    city: Some(rng.random_range(1..=81)),
                    active: true,
                    amount: level * ui / total,
                };
                match target.purpose {
                    Purpose::Consumption => {
                        rec.channel = [Channel::Pos, Channel::Ecommerce, Channel::MailPhone][rng.random_range(0..3)];
                    }
                    Purpose::Investment => {
                        rec.payer = Payer::Firm;
                        rec.channel = Channel::Transfer;
                        if target.bucket == "construction" && rng.random::<f64>() < 0.2 {
                            rec.payer = Payer::Individual;
                            rec.channel = Channel::HousePurchase;
                        }
                    }
                }
                if rng.random::<f64>() < spec.violation_rate {
                    let mut bad = rec.clone();
                    bad.amount = level / n as f64 * (0.5 + rng.random::<f64>());
                    bad.date = month.day(rng.random_range(1..=month.days()));
                    let rule = match (target.purpose, rng.random::<bool>()) {
                        (Purpose::Consumption, true) => {
                            bad.payer = Payer::Firm;
                            FilterRule::NotIndividual
                        }
                        (Purpose::Consumption, false) => {
                            // a non-card transfer with no city, rejected by both filters
                            bad.channel = Channel::Transfer;
                            bad.city = None;
                            FilterRule::CardChannel
                        }
                        (Purpose::Investment, true) => {
                            bad.payer = Payer::Firm;
                            bad.channel = Channel::Transfer;
                            bad.active = false;
                            FilterRule::InactiveFirm
                        }
                        (Purpose::Investment, false) => {
                            bad.city = None;
                            FilterRule::MissingCity
                        }
                    };
                    debug_assert_eq!(crate::txn::violation(&bad, target.purpose), Some(rule));
                    *planted.entry((target.purpose, rule)).or_insert(0) += 1;
                    records.push(bad);
                }
                records.push(rec);
            }
        }
    }
    Ok(SynthTransactions { records, levels, planted })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_noise_indicators_are_factor_multiples() {
        let mut spec = simple_spec(4, Month::new(2000, 1), 36);
        for s in &mut spec.indicators {
            s.noise_sd = 0.0;
        }
        let d = gen_factor_panel(&spec, 1).unwrap();
        for (s, ind) in d.dataset.indicators().iter().zip(&spec.indicators) {
            for (t, v) in s.values().enumerate() {
                assert!((v - ind.loadings[0] * d.factors[t][0]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn quarterly_gdp_is_mean_of_months() {
        let d = gen_factor_panel(&table_a1_spec(Month::new(2010, 1), 60), 3).unwrap();
        for (i, (q, v)) in d.gdp_quarterly.iter().enumerate() {
            let m = &d.gdp_monthly[3 * i..3 * i + 3];
            assert!((v - (m[0] + m[1] + m[2]) / 3.0).abs() < 1e-12);
            assert_eq!(d.dataset.truth(*q), Some(*v));
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let spec = table_a1_spec(Month::new(2010, 1), 36);
        let a = gen_factor_panel(&spec, 9).unwrap();
        let b = gen_factor_panel(&spec, 9).unwrap();
        assert_eq!(a.gdp_monthly, b.gdp_monthly);
        assert_eq!(a.dataset.indicators(), b.dataset.indicators());
    }

    #[test]
    fn explosive_factor_rejected() {
        let mut spec = simple_spec(3, Month::new(2000, 1), 36);
        spec.factor_ar = vec![1.0];
        assert!(matches!(gen_factor_panel(&spec, 0), Err(Error::NonStationary(_))));
    }
}
