use nowcast::series::Month;
use nowcast::synth::{default_txn_spec, gen_transactions, BucketTarget, TxnSpec};
use nowcast::txn::{
    aggregate_by_sector, build_index, default_consumption_mapping, default_investment_mapping, filter_transactions,
    real_yoy_index, BucketSums, Purpose, SectorMapping, Weights,
};
use proptest::prelude::*;

fn only(spec: &TxnSpec, purpose: Purpose) -> TxnSpec {
    TxnSpec { buckets: spec.buckets.iter().filter(|b| b.purpose == purpose).cloned().collect(), ..spec.clone() }
}

#[test]
fn round_trip_recovers_nominal_growth() {
    let spec = default_txn_spec(Month::new(2018, 1), 36);
    for (purpose, mapping) in
        [(Purpose::Consumption, default_consumption_mapping()), (Purpose::Investment, default_investment_mapping())]
    {
        let sub = only(&spec, purpose);
        let data = gen_transactions(&sub, 42).unwrap();
        let zero = vec![vec![0.0; 24]; 2];
        let (index, report) = build_index(&data.records, purpose, &mapping, &zero, &Weights::LaggedShares).unwrap();
        assert_eq!(report.removed_total(), data.planted_for(purpose));
        for target in &sub.buckets {
            let bi = index.buckets.iter().position(|n| *n == target.bucket).unwrap();
            for (t, g) in target.growth.iter().enumerate() {
                assert!((index.nominal_growth[bi][t] - g).abs() < 1e-8, "{} month {t}", target.bucket);
                assert!((index.real_growth[bi][t] - g).abs() < 1e-8);
            }
        }
    }
}

#[test]
fn zero_growth_gives_equal_sums_across_years() {
    let spec = TxnSpec {
        start: Month::new(2019, 1),
        buckets: vec![BucketTarget {
            bucket: "goods".into(),
            purpose: Purpose::Consumption,
            codes: vec!["5411".into()],
            base_level: 1000.0,
            growth: vec![0.0; 12],
        }],
        records_per_month: (5, 9),
        violation_rate: 0.0,
    };
    let data = gen_transactions(&spec, 1).unwrap();
    let sums = aggregate_by_sector(&data.records, &SectorMapping::new([("5411", "goods")])).unwrap();
    for t in 0..12 {
        assert!((sums.sums[0][t + 12] - sums.sums[0][t]).abs() < 1e-9);
    }
}

#[test]
fn violation_rate_matches_removed_share() {
    let mut spec = only(&default_txn_spec(Month::new(2018, 1), 24), Purpose::Consumption);
    spec.violation_rate = 0.1;
    let data = gen_transactions(&spec, 3).unwrap();
    let rep = filter_transactions(&data.records, Purpose::Consumption);
    let share = rep.removed_total() as f64 / (data.records.len() - rep.removed_total()) as f64;
    assert!((share - 0.1).abs() < 0.02, "share {share}");
    assert!(gen_transactions(
        &TxnSpec { buckets: vec![BucketTarget { growth: vec![-150.0], ..spec.buckets[0].clone() }], ..spec.clone() },
        0
    )
    .is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn index_invariants(seed in 0u64..1000, scale in 0.1f64..10.0) {
        let spec = only(&default_txn_spec(Month::new(2018, 1), 26), Purpose::Investment);
        let data = gen_transactions(&spec, seed).unwrap();
        let mapping = default_investment_mapping();
        let once = filter_transactions(&data.records, Purpose::Investment);
        let twice = filter_transactions(&once.kept, Purpose::Investment);
        prop_assert_eq!(&once.kept, &twice.kept);

        let sums = aggregate_by_sector(&once.kept, &mapping).unwrap();
        let infl = vec![vec![3.0; 14]; 2];
        let idx = real_yoy_index("inv", &sums, &infl, &Weights::LaggedShares).unwrap();
        let scaled = BucketSums { sums: sums.sums.iter().map(|s| s.iter().map(|v| v * scale).collect()).collect(), ..sums.clone() };
        let idx2 = real_yoy_index("inv", &scaled, &infl, &Weights::LaggedShares).unwrap();
        for t in 0..idx.months() {
            prop_assert!((idx.combined[t] - idx2.combined[t]).abs() < 1e-9);
            let lo = idx.real_growth.iter().map(|g| g[t]).fold(f64::INFINITY, f64::min);
            let hi = idx.real_growth.iter().map(|g| g[t]).fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(idx.combined[t] >= lo - 1e-9 && idx.combined[t] <= hi + 1e-9);
            prop_assert!((idx.weights[t].iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}
