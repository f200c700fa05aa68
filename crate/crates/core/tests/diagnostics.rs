use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tvp_core::diagnostics::{inefficiency_factor, posterior_summary, sim_study_metrics};
use tvp_core::dists::std_normal;

#[test]
fn independent_draws_are_efficient() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let v: Vec<f64> = (0..100_000).map(|_| std_normal(&mut rng)).collect();
    let f = inefficiency_factor(&v).unwrap().factor;
    assert!((0.8..=1.3).contains(&f), "{f}");
}

#[test]
fn autoregressive_chain_matches_its_autocorrelation_time() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let rho: f64 = 0.9;
    let mut x = 0.0;
    let v: Vec<f64> = (0..1_000_000)
        .map(|_| {
            x = rho * x + (1.0 - rho * rho).sqrt() * std_normal(&mut rng);
            x
        })
        .collect();
    let f = inefficiency_factor(&v).unwrap().factor;
    let want = (1.0 + rho) / (1.0 - rho);
    assert!((f / want - 1.0).abs() < 0.2, "{f}");
}

#[test]
fn short_chains_are_rejected() {
    assert!(inefficiency_factor(&[1.0; 50]).is_err());
    assert!(posterior_summary(&[1.0], &[0.5]).is_err());
    assert!(posterior_summary(&[], &[0.5]).is_err());
    assert!(sim_study_metrics(&[]).is_err());
}

#[test]
fn large_normal_sample_mean() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n = 1_000_000;
    let v: Vec<f64> = (0..n).map(|_| std_normal(&mut rng)).collect();
    let s = posterior_summary(&v, &[0.025, 0.5, 0.975]).unwrap();
    assert!(s.mean.abs() < 4.0 / (n as f64).sqrt());
    assert!((s.sd - 1.0).abs() < 0.01);
    assert!((s.quantiles[2].1 - 1.959_964).abs() < 0.01);
}

proptest! {
    #[test]
    fn quantiles_are_monotone(v in prop::collection::vec(-1e3f64..1e3, 2..200)) {
        let levels: Vec<f64> = (0..=20).map(|i| i as f64 / 20.0).collect();
        let s = posterior_summary(&v, &levels).unwrap();
        for w in s.quantiles.windows(2) {
            prop_assert!(w[0].1 <= w[1].1);
        }
        prop_assert_eq!(s.quantiles[0].1, v.iter().copied().fold(f64::INFINITY, f64::min));
    }

    #[test]
    fn mse_splits_into_variance_and_bias(
        series in prop::collection::vec((prop::collection::vec(-10.0f64..10.0, 1..50), -10.0f64..10.0), 1..20)
    ) {
        let refs: Vec<(&[f64], f64)> = series.iter().map(|(d, t)| (d.as_slice(), *t)).collect();
        let m = sim_study_metrics(&refs).unwrap();
        // Independent route: average of per-series mean squared deviations from the truth.
        let direct = series
            .iter()
            .map(|(d, t)| d.iter().map(|v| (v - t).powi(2)).sum::<f64>() / d.len() as f64)
            .sum::<f64>()
            / series.len() as f64;
        prop_assert!((m.av_mse - (m.av_var + m.av_bias2)).abs() <= 1e-12 * (1.0 + m.av_mse));
        prop_assert!((m.av_mse - direct).abs() <= 1e-10 * (1.0 + direct));
    }
}
