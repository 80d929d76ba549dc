use super::*;
use crate::series::{synthetic_day, vintage_at};
use crate::synth::{gen_factor_panel, table_a1_spec};

fn economy(seed: u64) -> Dataset {
    gen_factor_panel(&table_a1_spec(Month::new(2000, 1), 120), seed).unwrap().dataset
}

fn rec(q: Quarter, h: usize, model: &str, value: f64) -> NowcastRecord {
    NowcastRecord {
        quarter: q,
        horizon: h,
        model: model.into(),
        combination: None,
        value,
        vintage: AsOf::end_of_month(q.first_month() + h as i32 - 1),
    }
}

#[test]
fn five_vintages_per_quarter() {
    let d = economy(1);
    let (q0, q1) = (Quarter::new(2007, 1), Quarter::new(2008, 4));
    let mut counts: BTreeMap<Quarter, Vec<usize>> = BTreeMap::new();
    for m in vintage_months(&d, q0, q1) {
        let as_of = AsOf::end_of_month(m);
        for q in target_quarters(&d, &as_of, q0, q1) {
            counts.entry(q).or_default().push(horizon_of(q, &as_of));
        }
    }
    assert_eq!(counts.len(), 8);
    for h in counts.values() {
        assert_eq!(h, &vec![1, 2, 3, 4, 5]);
    }
}

#[test]
fn oracle_and_ar_through_the_harness() {
    let d = economy(2);
    let mut cfg = ExerciseConfig::new(Quarter::new(2008, 1), Quarter::new(2008, 2), vec![ModelId::Oracle, ModelId::Ar, ModelId::Lm]);
    cfg.combinations = true;
    let out = run_exercise(&d, &cfg).unwrap();
    for m in ["oracle", "ar", "lm"] {
        assert_eq!(out.records.iter().filter(|r| r.model == m).count(), 10);
    }
    // two members: ar and lm
    assert_eq!(out.records.iter().filter(|r| r.combination.is_some()).count(), 10 * 4);
    for h in 1..=5 {
        assert_eq!(mae(&out.records, &d, "oracle", h).unwrap(), 0.0);
        assert_eq!(maed(&out.records, &out.records, &d, "lm", h).unwrap(), 0.0);
    }
    let scores = score_table(&out.records, None, &d).unwrap();
    assert_eq!(scores.iter().filter(|s| s.model == "ar").count(), 5);
}

#[test]
fn released_quarter_is_a_calendar_error() {
    let d = economy(3);
    let as_of = AsOf::end_of_month(Month::new(2008, 12));
    let frame = vintage_at(&d, as_of).unwrap().panel.frame().unwrap();
    let settings = ModelSettings::default();
    let q = Quarter::new(2008, 1);
    let v = Vintage::new(&d, as_of, frame, &settings, &[q]);
    assert!(matches!(PerfectForesight.nowcast(&v, &[q]), Err(Error::Calendar(_))));
}

#[test]
fn mae_and_maed_arithmetic() {
    let d = economy(4);
    let q = Quarter::new(2005, 1);
    let y = d.truth(q).unwrap();
    let q2 = Quarter::new(2005, 2);
    let y2 = d.truth(q2).unwrap();
    let full = vec![rec(q, 1, "m", y + 1.0), rec(q2, 1, "m", y2 - 1.0)];
    assert!((mae(&full, &d, "m", 1).unwrap() - 1.0).abs() < 1e-12);
    assert!(mae(&full, &d, "m", 2).is_err());
    let reduced = vec![rec(q, 1, "m", y + 2.0), rec(q2, 1, "m", y2 - 3.0)];
    assert!((maed(&full, &reduced, &d, "m", 1).unwrap() - 1.5).abs() < 1e-12);
    assert!(maed(&full, &reduced[..1], &d, "m", 1).is_err());
}

#[test]
fn selection_ratio_counts() {
    let e = |sel: &[&str]| SelectionEntry {
        vintage: AsOf::end_of_month(Month::new(2010, 1)),
        candidates: vec!["a".into(), "b".into(), "c".into()],
        selected: sel.iter().map(|s| s.to_string()).collect(),
        big_data: vec!["c".into()],
        fallback: false,
    };
    let log = vec![e(&["a"]), e(&["a", "c"]), e(&["a"]), e(&["a", "b"])];
    let r = selection_ratios(&log);
    assert_eq!(r, vec![("a".into(), 1.0), ("b".into(), 0.25), ("c".into(), 0.25)]);
    assert!(log[1].big_data_chosen() && !log[0].big_data_chosen());
}

#[test]
fn moving_average_definition() {
    let x: Vec<f64> = (1..=10).map(f64::from).collect();
    let ma = moving_average(&x, 7);
    assert_eq!(ma[0], 1.0);
    assert_eq!(ma[2], 2.0);
    assert_eq!(ma[9], (4..=10).sum::<i32>() as f64 / 7.0);
}

#[test]
fn daily_calendar() {
    let d = economy(5);
    let q = Quarter::new(2006, 2);
    assert_eq!(first_arrival_day(&d, "ip", q, 150).unwrap(), Some(73));
    // day 1: only series released within the last two months
    let view = vintage_at(&d, synthetic_day(q.first_month(), 1)).unwrap();
    let recent: BTreeSet<&str> = view
        .panel
        .indicators
        .iter()
        .filter(|s| s.last_date().is_some_and(|l| Month::from_date(l) >= q.first_month() - 2))
        .map(|s| s.name())
        .collect();
    let expected: BTreeSet<&str> = ["bigdata_consumption", "bigdata_investment", "pmi", "real_sector_confidence", "loans_13w", "electricity"]
        .into_iter()
        .collect();
    assert_eq!(recent, expected);
    // day 30 of a month is the end-of-month vintage
    for k in 1..=5u32 {
        let a = vintage_at(&d, synthetic_day(q.first_month(), 30 * k)).unwrap().panel.frame().unwrap();
        let b = vintage_at(&d, AsOf::end_of_month(q.first_month() + k as i32 - 1)).unwrap().panel.frame().unwrap();
        assert_eq!(a, b);
    }
    assert!(!d.target_released(q, &synthetic_day(q.first_month(), 150)));
    assert!(d.target_released(q, &synthetic_day(q.first_month(), 151)));
}

#[test]
fn daily_oracle_is_exact() {
    let d = economy(6);
    let mut cfg = DailyConfig::new(vec![Quarter::new(2008, 1)], vec![ModelId::Oracle]);
    let out = daily_exercise(&d, &cfg).unwrap();
    assert_eq!(out.curve.len(), 150);
    assert!(out.curve.iter().all(|p| p.raw == 0.0 && p.ma7 == 0.0));
    let no_daily = d.without_kind(SeriesKind::BigData).unwrap();
    assert!(daily_exercise(&no_daily, &cfg).is_err());
    cfg.ablate_bigdata = true;
    assert_eq!(daily_exercise(&d, &cfg).unwrap().curve.len(), 150);
}

#[test]
fn single_vintage_matches_the_exercise() {
    let d = economy(7);
    let mut cfg = ExerciseConfig::new(Quarter::new(2008, 1), Quarter::new(2008, 4), vec![ModelId::Ar, ModelId::Lm]);
    cfg.preselect = true;
    cfg.combinations = false;
    let out = run_exercise(&d, &cfg).unwrap();
    assert_eq!(run_selection(&d, &cfg).unwrap(), out.selection);

    let as_of = AsOf::end_of_month(Month::new(2008, 5));
    let one = nowcast_at(&d, as_of, &cfg.models, &cfg.settings, true).unwrap();
    // 2008Q1 is still unpublished at the end of May; 2007Q4 came out on 1 March.
    let qs: BTreeSet<Quarter> = one.records.iter().map(|r| r.quarter).collect();
    assert_eq!(qs.into_iter().collect::<Vec<_>>(), vec![Quarter::new(2008, 1), Quarter::new(2008, 2)]);
    for r in &one.records {
        let same = out.records.iter().find(|x| x.vintage == as_of && x.quarter == r.quarter && x.model == r.model).unwrap();
        assert_eq!(same.value, r.value);
        assert_eq!(same.horizon, r.horizon);
    }
}
