use nowcast::combine::{
    combine, combine_median, rank_weights, rpw_weights, RollingMae, Scheme,
};
use proptest::prelude::*;

fn history(maes: Vec<f64>) -> RollingMae {
    let models = (0..maes.len()).map(|i| format!("m{i}")).collect();
    RollingMae { horizon: 1, models, mae: Some(maes), quarters: vec![] }
}

fn maes_and_nowcasts() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (1usize..7).prop_flat_map(|n| (prop::collection::vec(0.01f64..10.0, n), prop::collection::vec(-20.0f64..20.0, n)))
}

proptest! {
    #[test]
    fn weights_are_a_simplex((maes, _) in maes_and_nowcasts()) {
        for w in [rpw_weights(&maes).unwrap(), rank_weights(&maes).unwrap()] {
            prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!(w.iter().all(|x| *x >= 0.0));
        }
    }

    #[test]
    fn weights_ignore_common_scale((maes, _) in maes_and_nowcasts(), c in 0.01f64..100.0) {
        let scaled: Vec<f64> = maes.iter().map(|m| m * c).collect();
        for (a, b) in rpw_weights(&maes).unwrap().iter().zip(rpw_weights(&scaled).unwrap()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
        prop_assert_eq!(rank_weights(&maes).unwrap(), rank_weights(&scaled).unwrap());
    }

    #[test]
    fn combined_within_members((maes, x) in maes_and_nowcasts()) {
        let lo = x.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let h = history(maes);
        for s in Scheme::ALL {
            let v = combine(s, &x, &h).unwrap();
            prop_assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
        }
    }

    #[test]
    fn identical_members_give_simple_average(n in 1usize..7, mae in 0.01f64..5.0, v in -10.0f64..10.0) {
        let h = history(vec![mae; n]);
        let x = vec![v; n];
        for s in Scheme::ALL {
            prop_assert!((combine(s, &x, &h).unwrap() - v).abs() < 1e-12);
        }
        // equal histories alone already make the weighted schemes equal-weight
        let y: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let avg = y.iter().sum::<f64>() / n as f64;
        prop_assert!((combine(Scheme::Rpw, &y, &h).unwrap() - avg).abs() < 1e-12);
        prop_assert!((combine(Scheme::Rank, &y, &h).unwrap() - avg).abs() < 1e-12);
    }

    #[test]
    fn median_matches_sort_oracle(x in prop::collection::vec(-50.0f64..50.0, 5)) {
        let mut s = x.clone();
        s.sort_by(|a, b| a.partial_cmp(b).unwrap());
        prop_assert_eq!(combine_median(&x).unwrap(), s[2]);
    }
}
