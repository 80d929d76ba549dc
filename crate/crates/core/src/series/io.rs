//! Series CSV files and the plain-text metadata file.
//!
//! Each series lives in its own CSV with a `date,value` header and ISO-8601
//! dates. The metadata file is a list of `[name]` sections with `key = value`
//! lines; `#` starts a comment:
//!
//! ```text
//! [ip]
//! role = indicator            # or `target`
//! kind = hard                 # hard | soft | bigdata
//! frequency = monthly         # daily | weekly | monthly | quarterly
//! transform = yoy_growth      # yoy_growth | level | ann_13w_growth
//! announce_lag_months = 2
//! announce_day = 13           # 1..30 or `daily`
//! file = ip.csv               # optional, defaults to <name>.csv
//! ```

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;

use super::{AnnounceDay, Dataset, Frequency, SeriesKind, SeriesMeta, TimeSeries, Transform, Units};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Indicator,
    Target,
}

/// One section of the metadata file.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesEntry {
    pub meta: SeriesMeta,
    pub frequency: Frequency,
    pub role: Role,
    pub file: Option<String>,
}

impl SeriesEntry {
    pub fn file_name(&self) -> String {
        self.file.clone().unwrap_or_else(|| format!("{}.csv", self.meta.name))
    }
}

pub fn parse_meta(text: &str) -> Result<Vec<SeriesEntry>> {
    let mut sections: Vec<(String, Vec<(usize, String, String)>)> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            sections.push((name.trim().to_string(), Vec::new()));
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("line {}: expected key = value", lineno + 1)))?;
        let section = sections
            .last_mut()
            .ok_or_else(|| Error::Parse(format!("line {}: key outside a [series] section", lineno + 1)))?;
        section.1.push((lineno + 1, k.trim().to_string(), v.trim().to_string()));
    }
    sections.into_iter().map(|(name, kv)| entry_from(name, kv)).collect()
}

fn entry_from(name: String, kv: Vec<(usize, String, String)>) -> Result<SeriesEntry> {
    let get = |key: &str| kv.iter().find(|(_, k, _)| k == key).map(|(_, _, v)| v.as_str());
    let need = |key: &str| get(key).ok_or_else(|| Error::Parse(format!("[{name}]: missing `{key}`")));
    for (lineno, k, _) in &kv {
        if !matches!(
            k.as_str(),
            "role" | "kind" | "frequency" | "transform" | "announce_lag_months" | "announce_day" | "file"
        ) {
            return Err(Error::Parse(format!("line {lineno}: unknown key `{k}` in [{name}]")));
        }
    }
    let role = match get("role").unwrap_or("indicator") {
        "indicator" => Role::Indicator,
        "target" => Role::Target,
        other => return Err(Error::Parse(format!("[{name}]: unknown role `{other}`"))),
    };
    let kind: SeriesKind = need("kind")?.parse()?;
    let frequency: Frequency = need("frequency")?.parse()?;
    let transform: Transform = need("transform")?.parse()?;
    let lag: u32 = need("announce_lag_months")?
        .parse()
        .map_err(|_| Error::Parse(format!("[{name}]: announce_lag_months must be a non-negative integer")))?;
    let day: AnnounceDay = need("announce_day")?.parse()?;
    let meta = SeriesMeta::new(name, kind, transform, lag, day)?;
    Ok(SeriesEntry { meta, frequency, role, file: get("file").map(str::to_string) })
}

pub fn write_meta(entries: &[SeriesEntry]) -> String {
    let mut out = String::from("# series metadata: one [name] section per series\n");
    for e in entries {
        out.push_str(&format!("\n[{}]\n", e.meta.name));
        out.push_str(&format!(
            "role = {}\n",
            if e.role == Role::Target { "target" } else { "indicator" }
        ));
        out.push_str(&format!("kind = {}\n", e.meta.kind));
        out.push_str(&format!("frequency = {}\n", e.frequency));
        out.push_str(&format!("transform = {}\n", e.meta.transform));
        out.push_str(&format!("announce_lag_months = {}\n", e.meta.announce_lag_months));
        out.push_str(&format!("announce_day = {}\n", e.meta.announce_day));
        if let Some(f) = &e.file {
            out.push_str(&format!("file = {f}\n"));
        }
    }
    out
}

pub fn read_series_csv(path: &Path, name: &str, freq: Frequency, units: Units) -> Result<TimeSeries> {
    let mut rdr = csv::Reader::from_path(path)?;
    let headers = rdr.headers()?.clone();
    let col = |h: &str| headers.iter().position(|x| x.trim() == h);
    let (di, vi) = match (col("date"), col("value")) {
        (Some(d), Some(v)) => (d, v),
        _ => return Err(Error::Parse(format!("{}: expected `date,value` columns", path.display()))),
    };
    let mut obs = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let d = rec.get(di).unwrap_or("").trim();
        let v = rec.get(vi).unwrap_or("").trim();
        if v.is_empty() {
            continue;
        }
        let date = NaiveDate::parse_from_str(d, "%Y-%m-%d")
            .map_err(|e| Error::Parse(format!("{} row {}: bad date `{d}`: {e}", path.display(), i + 2)))?;
        let value: f64 = v
            .parse()
            .map_err(|_| Error::Parse(format!("{} row {}: bad value `{v}`", path.display(), i + 2)))?;
        obs.push((date, value));
    }
    TimeSeries::new(name, freq, units, obs)
}

pub fn series_csv(s: &TimeSeries) -> String {
    let mut out = String::from("date,value\n");
    for (d, v) in s.observations() {
        out.push_str(&format!("{d},{v}\n"));
    }
    out
}

/// Write `contents` to `path` via a temporary file and rename.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let file_name = path.file_name().and_then(|f| f.to_str()).unwrap_or("out");
    let tmp: PathBuf = dir.join(format!(".{file_name}.tmp{}", std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Load every series listed in a metadata file; CSV paths are relative to it.
pub fn load_dataset(meta_path: &Path) -> Result<Dataset> {
    let text = fs::read_to_string(meta_path)?;
    let entries = parse_meta(&text)?;
    let dir = meta_path.parent().unwrap_or(Path::new("."));
    let mut indicators = Vec::new();
    let mut target = None;
    for e in &entries {
        let s = read_series_csv(&dir.join(e.file_name()), &e.meta.name, e.frequency, Units::Level)?;
        match e.role {
            Role::Indicator => indicators.push(s),
            Role::Target => {
                if target.replace(s).is_some() {
                    return Err(Error::Parse("more than one target series".into()));
                }
            }
        }
    }
    let target = target.ok_or_else(|| Error::Parse("metadata lists no target series".into()))?;
    Dataset::new(indicators, target, entries.into_iter().map(|e| e.meta).collect())
}

/// Write every series of `data` as CSV next to a metadata file `meta.txt` in
/// `dir`; returns the metadata path. [`load_dataset`] reads it back.
pub fn save_dataset(dir: &Path, data: &Dataset) -> Result<PathBuf> {
    let mut entries = Vec::new();
    let series = data.indicators().iter().map(|s| (s, Role::Indicator)).chain([(data.target(), Role::Target)]);
    for (s, role) in series {
        let meta = data.meta(s.name()).ok_or_else(|| Error::UnknownSeries(s.name().to_string()))?.clone();
        let entry = SeriesEntry { meta, frequency: s.freq(), role, file: None };
        write_atomic(&dir.join(entry.file_name()), series_csv(s).as_bytes())?;
        entries.push(entry);
    }
    let meta_path = dir.join("meta.txt");
    write_atomic(&meta_path, write_meta(&entries).as_bytes())?;
    Ok(meta_path)
}
