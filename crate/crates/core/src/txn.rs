//! Activity indices from transaction records: filter, group by sector
//! bucket, take nominal YoY growth, deflate, and share-weight.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::series::Month;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Payer {
    Individual,
    Firm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    Pos,
    Ecommerce,
    MailPhone,
    Transfer,
    /// Household transfer for a dwelling purchase; counted as construction.
    HousePurchase,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Purpose {
    Consumption,
    Investment,
}

impl FromStr for Purpose {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "consumption" => Ok(Purpose::Consumption),
            "investment" => Ok(Purpose::Investment),
            _ => Err(Error::Parse(format!("unknown index purpose `{s}`"))),
        }
    }
}

impl fmt::Display for Purpose {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Purpose::Consumption => "consumption",
            Purpose::Investment => "investment",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransactionRecord {
    pub date: NaiveDate,
    pub payer: Payer,
    pub channel: Channel,
    pub sector_code: String,
    /// City of the receiving party, if identified.
    pub city: Option<u32>,
    /// Whether the receiving firm is an active entity.
    pub active: bool,
    pub amount: f64,
}

/// Reason a record was dropped by [`filter_transactions`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FilterRule {
    /// Consumption uses individual payers only.
    NotIndividual,
    /// Consumption uses POS, e-commerce and mail/phone only.
    CardChannel,
    /// Investment uses transfers only.
    NotTransfer,
    InactiveFirm,
    MissingCity,
    MissingSector,
}

impl fmt::Display for FilterRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FilterRule::NotIndividual => "not_individual",
            FilterRule::CardChannel => "card_channel",
            FilterRule::NotTransfer => "not_transfer",
            FilterRule::InactiveFirm => "inactive_firm",
            FilterRule::MissingCity => "missing_city",
            FilterRule::MissingSector => "missing_sector",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterReport {
    pub kept: Vec<TransactionRecord>,
    /// Dropped records per first violated rule.
    pub removed: BTreeMap<FilterRule, usize>,
}

impl FilterReport {
    pub fn removed_total(&self) -> usize {
        self.removed.values().sum()
    }
}

/// First rule `r` violates for `purpose`, if any.
pub fn violation(r: &TransactionRecord, purpose: Purpose) -> Option<FilterRule> {
    match purpose {
        Purpose::Consumption => {
            if r.payer != Payer::Individual {
                Some(FilterRule::NotIndividual)
            } else if !matches!(r.channel, Channel::Pos | Channel::Ecommerce | Channel::MailPhone) {
                Some(FilterRule::CardChannel)
            } else {
                None
            }
        }
        Purpose::Investment => {
            if !matches!(r.channel, Channel::Transfer | Channel::HousePurchase) {
                Some(FilterRule::NotTransfer)
            } else if r.channel == Channel::Transfer && !r.active {
                Some(FilterRule::InactiveFirm)
            } else if r.city.is_none() {
                Some(FilterRule::MissingCity)
            } else if r.sector_code.trim().is_empty() {
                Some(FilterRule::MissingSector)
            } else {
                None
            }
        }
    }
}

pub fn filter_transactions(records: &[TransactionRecord], purpose: Purpose) -> FilterReport {
    let mut kept = Vec::with_capacity(records.len());
    let mut removed = BTreeMap::new();
    for r in records {
        match violation(r, purpose) {
            None => kept.push(r.clone()),
            Some(rule) => *removed.entry(rule).or_insert(0) += 1,
        }
    }
    FilterReport { kept, removed }
}

/// Clamp amounts to the given empirical quantiles (e.g. 0.005 and 0.995).
pub fn winsorize(records: &mut [TransactionRecord], lower: f64, upper: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&lower) || !(lower..=1.0).contains(&upper) {
        return Err(Error::InvalidInput(format!("bad winsorization quantiles {lower}, {upper}")));
    }
    if records.is_empty() {
        return Ok(());
    }
    let mut a: Vec<f64> = records.iter().map(|r| r.amount).collect();
    a.sort_by(f64::total_cmp);
    let q = |p: f64| a[((a.len() - 1) as f64 * p).round() as usize];
    let (lo, hi) = (q(lower), q(upper));
    for r in records {
        r.amount = r.amount.clamp(lo, hi);
    }
    Ok(())
}

/// Sector code to bucket name.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SectorMapping {
    pub codes: BTreeMap<String, String>,
}

impl SectorMapping {
    pub fn new<I, A, B>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (A, B)>,
        A: Into<String>,
        B: Into<String>,
    {
        SectorMapping { codes: pairs.into_iter().map(|(a, b)| (a.into(), b.into())).collect() }
    }

    /// Bucket names in sorted order.
    pub fn buckets(&self) -> Vec<String> {
        self.codes.values().cloned().collect::<BTreeSet<_>>().into_iter().collect()
    }

    pub fn codes_of(&self, bucket: &str) -> Vec<String> {
        self.codes.iter().filter(|(_, b)| b.as_str() == bucket).map(|(c, _)| c.clone()).collect()
    }

    /// Parse `sector_code,bucket` lines (a header line is allowed).
    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(text.as_bytes());
        let mut codes = BTreeMap::new();
        for row in rdr.records() {
            let row = row?;
            if row.len() != 2 {
                return Err(Error::Parse(format!("sector mapping rows need 2 fields, got {}", row.len())));
            }
            codes.insert(row[0].to_string(), row[1].to_string());
        }
        Ok(SectorMapping { codes })
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("sector_code,bucket\n");
        for (c, b) in &self.codes {
            s.push_str(&format!("{c},{b}\n"));
        }
        s
    }
}

/// Merchant-category style codes split into goods and services.
pub fn default_consumption_mapping() -> SectorMapping {
    SectorMapping::new([
        ("5311", "goods"),
        ("5411", "goods"),
        ("5651", "goods"),
        ("5732", "goods"),
        ("4111", "services"),
        ("5812", "services"),
        ("7011", "services"),
        ("8062", "services"),
    ])
}

/// Industry-classification style codes split into machinery and construction.
pub fn default_investment_mapping() -> SectorMapping {
    SectorMapping::new([
        ("28.1", "machinery"),
        ("28.2", "machinery"),
        ("28.9", "machinery"),
        ("29.1", "machinery"),
        ("41.2", "construction"),
        ("42.1", "construction"),
        ("43.2", "construction"),
    ])
}

/// Monthly nominal sums per bucket.
#[derive(Debug, Clone, PartialEq)]
pub struct BucketSums {
    pub start: Month,
    pub buckets: Vec<String>,
    /// `sums[b][t]`.
    pub sums: Vec<Vec<f64>>,
}

impl BucketSums {
    pub fn months(&self) -> usize {
        self.sums.first().map_or(0, Vec::len)
    }
}

/// Sum amounts per bucket and month over the full month range of `records`.
pub fn aggregate_by_sector(records: &[TransactionRecord], mapping: &SectorMapping) -> Result<BucketSums> {
    let unmapped: BTreeSet<&str> =
        records.iter().map(|r| r.sector_code.as_str()).filter(|c| !mapping.codes.contains_key(*c)).collect();
    if !unmapped.is_empty() {
        return Err(Error::UnmappedSectors(unmapped.into_iter().map(str::to_string).collect()));
    }
    let buckets = mapping.buckets();
    let Some(start) = records.iter().map(|r| Month::from_date(r.date)).min() else {
        let sums = vec![Vec::new(); buckets.len()];
        return Ok(BucketSums { start: Month::new(2000, 1), buckets, sums });
    };
    let end = records.iter().map(|r| Month::from_date(r.date)).max().expect("non-empty");
    let len = (end - start + 1) as usize;
    let pos: BTreeMap<&str, usize> = buckets.iter().enumerate().map(|(i, b)| (b.as_str(), i)).collect();
    let mut sums = vec![vec![0.0; len]; buckets.len()];
    for r in records {
        let b = pos[mapping.codes[&r.sector_code].as_str()];
        sums[b][(Month::from_date(r.date) - start) as usize] += r.amount;
    }
    Ok(BucketSums { start, buckets, sums })
}

/// How buckets are weighted into the combined index.
#[derive(Debug, Clone, PartialEq)]
pub enum Weights {
    /// Each bucket's nominal share in the same month one year earlier.
    LaggedShares,
    /// Fixed weights per bucket.
    Fixed(Vec<f64>),
    /// Explicit weights per month (rows aligned with the growth months).
    PerMonth(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndexSeries {
    pub name: String,
    /// First month with a YoY growth value (12 months after the sums start).
    pub start: Month,
    pub buckets: Vec<String>,
    pub nominal: BucketSums,
    /// `nominal_growth[b][t]`, percent.
    pub nominal_growth: Vec<Vec<f64>>,
    /// `real_growth[b][t]`, percent.
    pub real_growth: Vec<Vec<f64>>,
    /// `weights[t][b]`.
    pub weights: Vec<Vec<f64>>,
    pub combined: Vec<f64>,
}

impl IndexSeries {
    pub fn months(&self) -> usize {
        self.combined.len()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("date,value");
        for b in &self.buckets {
            s.push_str(&format!(",{b}_real,{b}_weight"));
        }
        s.push('\n');
        for t in 0..self.months() {
            let m = self.start + t as i32;
            s.push_str(&format!("{},{}", m.last_day(), self.combined[t]));
            for b in 0..self.buckets.len() {
                s.push_str(&format!(",{},{}", self.real_growth[b][t], self.weights[t][b]));
            }
            s.push('\n');
        }
        s
    }
}

/// Real growth from nominal growth and deflator inflation, both in percent.
pub fn deflate(nominal_growth: f64, inflation: f64) -> Result<f64> {
    if inflation <= -100.0 {
        return Err(Error::InvalidInput(format!("deflator inflation {inflation}% is at or below -100%")));
    }
    Ok(100.0 * ((1.0 + nominal_growth / 100.0) / (1.0 + inflation / 100.0) - 1.0))
}

/// Percent YoY growth of a monthly level path, starting at index 12.
pub fn yoy(name: &str, start: Month, levels: &[f64]) -> Result<Vec<f64>> {
    (12..levels.len())
        .map(|t| {
            let base = levels[t - 12];
            if !(base > 0.0) {
                return Err(Error::NonPositiveBase { series: name.to_string(), date: (start + t as i32 - 12).to_string() });
            }
            Ok(100.0 * (levels[t] / base - 1.0))
        })
        .collect()
}

/// Build the real YoY index.
///
/// `inflation[b][t]` is the deflator's YoY inflation in percent, aligned with
/// the growth months (month 12 of the sums onward); a shorter vector is an
/// error.
pub fn real_yoy_index(name: &str, nominal: &BucketSums, inflation: &[Vec<f64>], weights: &Weights) -> Result<IndexSeries> {
    let nb = nominal.buckets.len();
    if nominal.months() < 13 {
        return Err(Error::InsufficientHistory { series: name.to_string(), required: 13, actual: nominal.months() });
    }
    if inflation.len() != nb {
        return Err(Error::DimensionMismatch { expected: nb, actual: inflation.len() });
    }
    let n = nominal.months() - 12;
    let nominal_growth: Vec<Vec<f64>> = nominal
        .sums
        .iter()
        .zip(&nominal.buckets)
        .map(|(s, b)| yoy(b, nominal.start, s))
        .collect::<Result<_>>()?;
    let mut real_growth = vec![vec![0.0; n]; nb];
    for b in 0..nb {
        if inflation[b].len() < n {
            return Err(Error::DimensionMismatch { expected: n, actual: inflation[b].len() });
        }
        for t in 0..n {
            real_growth[b][t] = deflate(nominal_growth[b][t], inflation[b][t])?;
        }
    }
    let w: Vec<Vec<f64>> = match weights {
        Weights::LaggedShares => (0..n)
            .map(|t| {
                let total: f64 = (0..nb).map(|b| nominal.sums[b][t]).sum();
                (0..nb).map(|b| nominal.sums[b][t] / total).collect()
            })
            .collect(),
        Weights::Fixed(v) => {
            if v.len() != nb {
                return Err(Error::DimensionMismatch { expected: nb, actual: v.len() });
            }
            vec![normalized(v)?; n]
        }
        Weights::PerMonth(rows) => {
            if rows.len() < n {
                return Err(Error::DimensionMismatch { expected: n, actual: rows.len() });
            }
            rows[..n]
                .iter()
                .map(|r| if r.len() == nb { normalized(r) } else { Err(Error::DimensionMismatch { expected: nb, actual: r.len() }) })
                .collect::<Result<_>>()?
        }
    };
    let combined = (0..n).map(|t| (0..nb).map(|b| w[t][b] * real_growth[b][t]).sum()).collect();
    Ok(IndexSeries {
        name: name.to_string(),
        start: nominal.start + 12,
        buckets: nominal.buckets.clone(),
        nominal: nominal.clone(),
        nominal_growth,
        real_growth,
        weights: w,
        combined,
    })
}

fn normalized(v: &[f64]) -> Result<Vec<f64>> {
    let total: f64 = v.iter().sum();
    if v.iter().any(|x| !(*x >= 0.0)) || !(total > 0.0) {
        return Err(Error::InvalidInput("index weights must be non-negative with a positive sum".into()));
    }
    Ok(v.iter().map(|x| x / total).collect())
}

/// Full pipeline for one purpose.
pub fn build_index(
    records: &[TransactionRecord],
    purpose: Purpose,
    mapping: &SectorMapping,
    inflation: &[Vec<f64>],
    weights: &Weights,
) -> Result<(IndexSeries, FilterReport)> {
    let report = filter_transactions(records, purpose);
    let sums = aggregate_by_sector(&report.kept, mapping)?;
    let index = real_yoy_index(&purpose.to_string(), &sums, inflation, weights)?;
    Ok((index, report))
}

/// Same pipeline with the deflator looked up by bucket and month.
pub fn build_index_deflated(
    records: &[TransactionRecord],
    purpose: Purpose,
    mapping: &SectorMapping,
    inflation: &InflationTable,
    weights: &Weights,
) -> Result<(IndexSeries, FilterReport)> {
    let report = filter_transactions(records, purpose);
    let sums = aggregate_by_sector(&report.kept, mapping)?;
    let index = real_yoy_index(&purpose.to_string(), &sums, &inflation.aligned(&sums)?, weights)?;
    Ok((index, report))
}

/// Deflator YoY inflation in percent, per bucket and month.
///
/// CSV layout: a `month` column (`YYYY-MM`) then one column per bucket;
/// empty cells are missing.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct InflationTable {
    pub rates: BTreeMap<String, BTreeMap<Month, f64>>,
}

impl InflationTable {
    pub fn constant(buckets: &[String], start: Month, months: usize, rate: f64) -> Self {
        let path: BTreeMap<Month, f64> = (0..months).map(|t| (start + t as i32, rate)).collect();
        InflationTable { rates: buckets.iter().map(|b| (b.clone(), path.clone())).collect() }
    }

    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
        let headers = rdr.headers()?.clone();
        if headers.get(0) != Some("month") || headers.len() < 2 {
            return Err(Error::Parse("inflation table needs a `month` column followed by bucket columns".into()));
        }
        let mut rates: BTreeMap<String, BTreeMap<Month, f64>> =
            headers.iter().skip(1).map(|b| (b.to_string(), BTreeMap::new())).collect();
        for (i, row) in rdr.records().enumerate() {
            let row = row?;
            let month: Month = row[0].parse()?;
            for (b, cell) in headers.iter().zip(row.iter()).skip(1) {
                if cell.is_empty() {
                    continue;
                }
                let v: f64 = cell
                    .parse()
                    .map_err(|_| Error::Parse(format!("inflation row {}: bad value `{cell}` for `{b}`", i + 2)))?;
                rates.get_mut(b).expect("header bucket").insert(month, v);
            }
        }
        Ok(InflationTable { rates })
    }

    pub fn to_csv(&self) -> String {
        let months: BTreeSet<Month> = self.rates.values().flat_map(|r| r.keys().copied()).collect();
        let mut s = String::from("month");
        for b in self.rates.keys() {
            s.push(',');
            s.push_str(b);
        }
        s.push('\n');
        for m in months {
            s.push_str(&m.to_string());
            for r in self.rates.values() {
                s.push(',');
                if let Some(v) = r.get(&m) {
                    s.push_str(&v.to_string());
                }
            }
            s.push('\n');
        }
        s
    }

    /// `[b][t]` over the growth months of `sums` (from `sums.start + 12`).
    pub fn aligned(&self, sums: &BucketSums) -> Result<Vec<Vec<f64>>> {
        let n = sums.months().saturating_sub(12);
        sums.buckets
            .iter()
            .map(|b| {
                let r = self.rates.get(b).ok_or_else(|| Error::UnknownSeries(format!("inflation for bucket `{b}`")))?;
                (0..n)
                    .map(|t| {
                        let m = sums.start + 12 + t as i32;
                        r.get(&m).copied().ok_or_else(|| Error::InvalidInput(format!("no inflation for `{b}` in {m}")))
                    })
                    .collect()
            })
            .collect()
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    date: NaiveDate,
    payer: Payer,
    channel: Channel,
    sector_code: String,
    city: Option<u32>,
    active: bool,
    amount: f64,
}

pub fn read_transactions_csv<R: Read>(reader: R) -> Result<Vec<TransactionRecord>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut out = Vec::new();
    for (i, row) in rdr.deserialize::<Row>().enumerate() {
        let row = row?;
        if !(row.amount > 0.0) {
            return Err(Error::Parse(format!("transaction row {}: amount must be positive, got {}", i + 1, row.amount)));
        }
        out.push(TransactionRecord {
            date: row.date,
            payer: row.payer,
            channel: row.channel,
            sector_code: row.sector_code,
            city: row.city,
            active: row.active,
            amount: row.amount,
        });
    }
    Ok(out)
}

pub fn write_transactions_csv<W: Write>(writer: W, records: &[TransactionRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in records {
        w.serialize(Row {
            date: r.date,
            payer: r.payer,
            channel: r.channel,
            sector_code: r.sector_code.clone(),
            city: r.city,
            active: r.active,
            amount: r.amount,
        })?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(payer: Payer, channel: Channel, code: &str, city: Option<u32>, active: bool) -> TransactionRecord {
        TransactionRecord {
            date: NaiveDate::from_ymd_opt(2020, 1, 5).unwrap(),
            payer,
            channel,
            sector_code: code.into(),
            city,
            active,
            amount: 10.0,
        }
    }

    #[test]
    fn filter_rules() {
        let pos = rec(Payer::Individual, Channel::Pos, "5411", Some(1), true);
        assert_eq!(violation(&pos, Purpose::Consumption), None);
        let inactive = rec(Payer::Firm, Channel::Transfer, "28.1", Some(1), false);
        assert_eq!(violation(&inactive, Purpose::Investment), Some(FilterRule::InactiveFirm));
        let no_city = rec(Payer::Firm, Channel::Transfer, "28.1", None, true);
        assert_eq!(violation(&no_city, Purpose::Investment), Some(FilterRule::MissingCity));
        let house = rec(Payer::Individual, Channel::HousePurchase, "41.2", Some(3), false);
        assert_eq!(violation(&house, Purpose::Investment), None);
        let firm_card = rec(Payer::Firm, Channel::Pos, "5411", Some(1), true);
        assert_eq!(violation(&firm_card, Purpose::Consumption), Some(FilterRule::NotIndividual));
        let rep = filter_transactions(&[pos.clone(), firm_card], Purpose::Consumption);
        assert_eq!(rep.kept, vec![pos]);
        assert_eq!(rep.removed_total(), 1);
        let again = filter_transactions(&rep.kept, Purpose::Consumption);
        assert_eq!(again.kept, rep.kept);
    }

    #[test]
    fn deflation_is_an_exact_ratio() {
        assert!((deflate(10.0, 10.0).unwrap()).abs() < 1e-12);
        assert!((deflate(7.0, 0.0).unwrap() - 7.0).abs() < 1e-12);
        assert!(deflate(5.0, -100.0).is_err());
    }

    #[test]
    fn two_bucket_weighted_sum() {
        let sums = BucketSums {
            start: Month::new(2019, 1),
            buckets: vec!["a".into(), "b".into()],
            sums: vec![
                (0..13).map(|t| if t < 12 { 100.0 } else { 105.0 }).collect(),
                (0..13).map(|t| if t < 12 { 100.0 } else { 95.0 }).collect(),
            ],
        };
        let idx = real_yoy_index("x", &sums, &[vec![0.0], vec![0.0]], &Weights::Fixed(vec![0.6, 0.4])).unwrap();
        assert!((idx.combined[0] - 1.0).abs() < 1e-12);
        assert_eq!(idx.start, Month::new(2020, 1));
    }

    #[test]
    fn unmapped_codes_are_listed() {
        let r = vec![
            rec(Payer::Individual, Channel::Pos, "9999", Some(1), true),
            rec(Payer::Individual, Channel::Pos, "0001", Some(1), true),
            rec(Payer::Individual, Channel::Pos, "5411", Some(1), true),
        ];
        match aggregate_by_sector(&r, &default_consumption_mapping()) {
            Err(Error::UnmappedSectors(c)) => assert_eq!(c, vec!["0001".to_string(), "9999".to_string()]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn csv_round_trip() {
        let r = vec![
            rec(Payer::Individual, Channel::MailPhone, "5411", None, true),
            rec(Payer::Firm, Channel::HousePurchase, "41.2", Some(34), false),
        ];
        let mut buf = Vec::new();
        write_transactions_csv(&mut buf, &r).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("date,payer,channel,sector_code,city,active,amount\n"));
        assert_eq!(read_transactions_csv(buf.as_slice()).unwrap(), r);
        let bad = text.replace(",10.0", ",-1.0").replace(",10\n", ",-1\n");
        assert!(read_transactions_csv(bad.as_bytes()).is_err());
    }

    #[test]
    fn mapping_csv() {
        let m = default_investment_mapping();
        assert_eq!(SectorMapping::parse_csv(&m.to_csv()).unwrap(), m);
        assert_eq!(m.buckets(), vec!["construction".to_string(), "machinery".to_string()]);
    }

    #[test]
    fn inflation_table_roundtrip_and_alignment() {
        let buckets = vec!["goods".to_string(), "services".to_string()];
        let mut t = InflationTable::constant(&buckets, Month::new(2020, 1), 24, 5.0);
        t.rates.get_mut("services").unwrap().insert(Month::new(2021, 6), 7.5);
        let back = InflationTable::parse_csv(&t.to_csv()).unwrap();
        assert_eq!(back, t);
        let sums = BucketSums { start: Month::new(2020, 1), buckets: buckets.clone(), sums: vec![vec![1.0; 24]; 2] };
        let a = t.aligned(&sums).unwrap();
        assert_eq!(a[0], vec![5.0; 12]);
        assert_eq!(a[1][5], 7.5);
        let late = BucketSums { start: Month::new(2020, 2), ..sums.clone() };
        assert!(t.aligned(&late).is_err());
        let other = BucketSums { buckets: vec!["goods".into(), "fuel".into()], ..sums };
        assert!(t.aligned(&other).is_err());
    }
}
