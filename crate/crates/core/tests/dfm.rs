use std::time::Instant;

use nowcast::dfm::{fit_dfm, DfmConfig};
use nowcast::series::{vintage_at, AsOf, Month, MonthlyFrame};
use nowcast::synth::{gen_factor_panel, simple_spec};

fn complete_frame(seed: u64, n: usize, months: usize) -> (MonthlyFrame, Vec<f64>) {
    let spec = simple_spec(n, Month::new(1990, 1), months);
    let d = gen_factor_panel(&spec, seed).unwrap();
    let end = spec.start + months as i32 - 1;
    let v = vintage_at(&d.dataset, AsOf::end_of_month(end + 12)).unwrap();
    let frame = v.panel.frame_until(end).unwrap();
    (frame, d.factors.iter().map(|f| f[0]).collect())
}

fn corr(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

#[test]
fn recovers_factor_and_em_is_monotone() {
    let t0 = Instant::now();
    for seed in 0..5 {
        let (frame, truth) = complete_frame(seed, 10, 300);
        let model = fit_dfm(&frame, &DfmConfig::default()).unwrap();
        let f: Vec<f64> = model.smoothed_factors(&frame).unwrap().iter().map(|v| v[0]).collect();
        let c = corr(&f, &truth).abs();
        assert!(c >= 0.95, "seed {seed}: corr {c}");
        for w in model.loglik_path.windows(2) {
            assert!(w[1] >= w[0] - 1e-8, "seed {seed}: {} -> {}", w[0], w[1]);
        }
        eprintln!("seed {seed}: iters {} corr {c:.4} ll {:?}", model.iterations, model.loglik_path.last());
    }
    eprintln!("elapsed {:?}", t0.elapsed());
}
