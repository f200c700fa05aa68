//! Successive-conditional checks: replicates started from the prior must stay at the prior.
mod common;

use nalgebra::DMatrix;
use tvp_core::{PriorConfig, SamplerSettings};

use common::{forward_prior_draws, ks_two_sample, successive_conditional};

const NAMES: [&str; 6] = ["theta_1", "kappa2", "a_xi", "lambda2", "a_tau", "beta_1"];

// Proper, moderately informative hyperpriors. The defaults put mass on scales that
// overflow when drawn forward.
fn prior(sigma2: f64) -> PriorConfig {
    PriorConfig {
        b_xi: 1.0,
        b_tau: 1.0,
        d1: 2.0,
        d2: 2.0,
        e1: 2.0,
        e2: 2.0,
        fixed_sigma2: Some(sigma2),
        ..PriorConfig::default()
    }
}

fn check(settings: SamplerSettings, sigma2: f64, seed: u64) {
    let prior = prior(sigma2);
    let x = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 1.0, -1.2]);
    let chain = successive_conditional(&prior, &settings, &x, 20_000, 10, seed);
    let fwd = forward_prior_draws(&prior, 2, 100_000, seed + 1);
    for (k, name) in NAMES.iter().enumerate() {
        let a: Vec<f64> = chain.iter().map(|r| r[k]).collect();
        let f: Vec<f64> = fwd.iter().map(|r| r[k]).collect();
        let p = ks_two_sample(&a, &f);
        assert!(p > 1e-3, "{name}: KS p = {p:.2e}");
    }
}

#[test]
fn prior_is_invariant_with_interweaving() {
    check(SamplerSettings::default(), 1.0, 11);
}

#[test]
fn prior_is_invariant_without_interweaving() {
    check(
        SamplerSettings {
            interweave: false,
            ..SamplerSettings::default()
        },
        1.0,
        12,
    );
}

#[test]
fn prior_is_invariant_with_uninformative_data() {
    check(SamplerSettings::default(), 1e8, 13);
}
