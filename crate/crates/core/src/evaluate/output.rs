//! CSV renderings of harness results.

use std::fmt::Write;

use super::daily::DailyOutput;
use super::{NowcastRecord, ScoreRow, SelectionEntry};

fn vintage_date(r: &NowcastRecord) -> String {
    r.vintage.to_string()
}

/// Records sorted by vintage date, then model id, then quarter.
pub fn nowcasts_csv(records: &[NowcastRecord]) -> String {
    let mut rs: Vec<&NowcastRecord> = records.iter().collect();
    rs.sort_by(|a, b| {
        (a.vintage.cutoff_date(), a.vintage.day(), &a.model, a.quarter).cmp(&(b.vintage.cutoff_date(), b.vintage.day(), &b.model, b.quarter))
    });
    let mut s = String::from("ref_quarter,horizon,model,value,vintage_date\n");
    for r in rs {
        writeln!(s, "{},{},{},{},{}", r.quarter, r.horizon, r.model, r.value, vintage_date(r)).expect("string write");
    }
    s
}

pub fn scores_csv(rows: &[ScoreRow]) -> String {
    let mut s = String::from("model,horizon,mae,maed\n");
    for r in rows {
        let maed = r.maed.map(|v| v.to_string()).unwrap_or_default();
        writeln!(s, "{},{},{},{}", r.model, r.horizon, r.mae, maed).expect("string write");
    }
    s
}

pub fn selection_csv(ratios: &[(String, f64)]) -> String {
    let mut s = String::from("variable,ratio\n");
    for (n, r) in ratios {
        writeln!(s, "{n},{r}").expect("string write");
    }
    s
}

/// Per vintage: whether any big-data series was selected.
pub fn selection_dates_csv(log: &[SelectionEntry]) -> String {
    let mut s = String::from("vintage_date,n_selected,big_data_chosen,fallback\n");
    for e in log {
        writeln!(s, "{},{},{},{}", e.vintage, e.selected.len(), u8::from(e.big_data_chosen()), u8::from(e.fallback))
            .expect("string write");
    }
    s
}

pub fn daily_mae_csv(out: &DailyOutput) -> String {
    let mut s = String::from("day,raw,ma7\n");
    for p in &out.curve {
        writeln!(s, "{},{},{}", p.day, p.raw, p.ma7).expect("string write");
    }
    s
}

/// One row per window and day with the model average and the final value.
pub fn daily_windows_csv(out: &DailyOutput) -> String {
    let mut s = String::from("ref_quarter,day,average,truth,abs_error\n");
    for (q, d, avg, truth) in &out.windows {
        writeln!(s, "{q},{d},{avg},{truth},{}", (avg - truth).abs()).expect("string write");
    }
    s
}

/// Every model's daily nowcast, plus the `average` row.
pub fn daily_nowcasts_csv(out: &DailyOutput) -> String {
    let mut s = String::from("ref_quarter,day,model,value\n");
    for r in &out.records {
        writeln!(s, "{},{},{},{}", r.quarter, r.day, r.model, r.value).expect("string write");
    }
    s
}
