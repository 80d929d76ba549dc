use nowcast::series::io::{load_dataset, save_dataset};
use nowcast::series::{vintage_at, AsOf, Month, Quarter};
use nowcast::synth::{gen_factor_panel, table_a1_spec};

#[test]
fn saved_dataset_loads_back_identically() {
    let d = gen_factor_panel(&table_a1_spec(Month::new(2005, 1), 60), 3).unwrap().dataset;
    let dir = tempfile::tempdir().unwrap();
    let meta = save_dataset(dir.path(), &d).unwrap();
    let back = load_dataset(&meta).unwrap();
    assert_eq!(back.indicator_names(), d.indicator_names());
    for (a, b) in d.indicators().iter().zip(back.indicators()) {
        assert_eq!(a.observations(), b.observations(), "{}", a.name());
        assert_eq!(d.meta(a.name()), back.meta(b.name()));
    }
    assert_eq!(d.target().observations(), back.target().observations());
    let as_of = AsOf::end_of_month(Month::new(2008, 5));
    let f1 = vintage_at(&d, as_of).unwrap().panel.frame().unwrap();
    let f2 = vintage_at(&back, as_of).unwrap().panel.frame().unwrap();
    assert_eq!(f1, f2);
    assert_eq!(d.truth(Quarter::new(2007, 2)), back.truth(Quarter::new(2007, 2)));
}
