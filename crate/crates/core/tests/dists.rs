// Oracle values are kept exactly as computed.
#![allow(clippy::excessive_precision)]

mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tvp_core::dists::{
    draw_double_gamma_theta, gig_draw, gig_moment, log_gig_moment, log_marginal_sqrt_theta, GigParams,
};
use tvp_core::special::log_bessel_k;

#[test]
fn bessel_matches_quadrature() {
    let cases = [
        (3.0, 2.0),
        (0.3, 1e-5),
        (10.7, 0.01),
        (2.2, 25.0),
        (0.0, 0.5),
        (0.49, 1.999),
        (0.51, 2.001),
        (-7.25, 0.5),
        (15.0, 40.0),
    ];
    for (p, x) in cases {
        let got = log_bessel_k(p, x).unwrap();
        let oracle = common::log_bessel_k_quad(p, x);
        assert!(
            (got - oracle).abs() < 1e-10 * oracle.abs().max(1.0),
            "p={p} x={x}: {got} vs {oracle}"
        );
    }
}

#[test]
fn bessel_frozen_values() {
    // High-precision reference values of log K_p(x).
    let frozen = [
        (3.0, 2.0, -0.434_813_503_471_148_86),
        (0.3, 1e-5, 4.063_517_918_284_104_4),
        (10.7, 0.01, 70.402_056_660_483_353),
        (2.2, 25.0, -26.293_663_223_094_319),
        (0.0, 1e-300, 6.537_982_733_881_034_2),
        (50.0, 3.0, 123.553_444_927_977_05),
        (-7.25, 0.5, 16.399_681_882_393_057),
    ];
    for (p, x, v) in frozen {
        let got = log_bessel_k(p, x).unwrap();
        assert!(
            (got - v).abs() < 1e-12 * v.abs().max(1.0),
            "p={p} x={x}: {got} vs {v}"
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn bessel_recurrence(p in -20.0f64..20.0, lx in (1e-3f64).ln()..(50f64).ln()) {
        let x = lx.exp();
        let lm = log_bessel_k(p - 1.0, x).unwrap();
        let l0 = log_bessel_k(p, x).unwrap();
        let lp = log_bessel_k(p + 1.0, x).unwrap();
        // K_{p+1} = K_{p-1} + (2p/x) K_p, arranged so that every term on the right is positive.
        let (lhs, a, b) = if p >= 0.0 { (lp, lm, l0) } else { (lm, lp, l0) };
        let rhs = (a - lhs).exp() + 2.0 * p.abs() / x * (b - lhs).exp();
        prop_assert!((rhs - 1.0).abs() < 1e-9, "p={} x={} rel={}", p, x, rhs - 1.0);
    }

    #[test]
    fn bessel_is_even_in_order(p in 0.0f64..100.0, x in 1e-6f64..100.0) {
        prop_assert_eq!(log_bessel_k(p, x).unwrap(), log_bessel_k(-p, x).unwrap());
    }

    #[test]
    fn bessel_decreasing_in_argument(p in -30.0f64..30.0, x in 1e-4f64..60.0) {
        prop_assert!(log_bessel_k(p, x * 1.01).unwrap() < log_bessel_k(p, x).unwrap());
    }
}

#[test]
fn gig_moment_matches_quadrature() {
    let cases = [
        (-100.0, 1e-6, 3.2),
        (0.4, 2.0, 1e-10),
        (0.9, 1.0, 1.0),
        (-3.3, 0.7, 12.0),
        (2.5, 40.0, 0.01),
        (0.05, 1e-5, 1e-15),
        (-50.0, 1e4, 1e3),
    ];
    for (p, a, b) in cases {
        let params = GigParams::new(p, a, b).unwrap();
        for k in [1, 2] {
            let got = log_gig_moment(&params, k).unwrap();
            let oracle = common::log_gig_moment_quad(p, a, b, k as f64);
            assert!(
                (got - oracle).abs() < 1e-8,
                "({p},{a},{b}) k={k}: {got} vs {oracle}"
            );
        }
    }
}

#[test]
fn gig_moment_frozen_values() {
    let frozen = [
        (
            -100.0,
            1e-6,
            3.2,
            0.016_161_616_160_283_52,
            2.638_631_209_620_147_3e-4,
        ),
        (
            0.4,
            2.0,
            1e-10,
            0.400_050_886_258_881_85,
            0.560_071_240_812_434_56,
        ),
        (0.9, 1.0, 1.0, 2.550_479_623_757_747_7, 10.691_822_570_279_441),
        (0.5, 1e-10, 1e-10, 10_000_000_001.0, 3.000_000_000_3e20),
        (
            -12.0,
            1e-10,
            1e-10,
            4.545_454_545_454_545_6e-12,
            2.272_727_272_727_272_9e-23,
        ),
        (
            -50.0,
            1e4,
            1e3,
            0.311_317_275_575_311_37,
            0.096_949_090_699_361_949,
        ),
    ];
    for (p, a, b, m1, m2) in frozen {
        let params = GigParams::new(p, a, b).unwrap();
        let g1 = gig_moment(&params, 1).unwrap();
        let g2 = gig_moment(&params, 2).unwrap();
        assert!((g1 / m1 - 1.0).abs() < 1e-10, "({p},{a},{b}) m1 {g1} vs {m1}");
        assert!((g2 / m2 - 1.0).abs() < 1e-10, "({p},{a},{b}) m2 {g2} vs {m2}");
    }
}

/// z-score of the empirical k-th moment, with the standard error taken from the exact moments.
fn moment_z(params: &GigParams, draws: &[f64], k: i32) -> f64 {
    let n = draws.len() as f64;
    let emp = draws.iter().map(|y| y.powi(k)).sum::<f64>() / n;
    let mk = gig_moment(params, k).unwrap();
    let m2k = gig_moment(params, 2 * k).unwrap();
    let se = ((m2k - mk * mk).max(0.0) / n).sqrt();
    (emp - mk) / se
}

#[test]
fn gig_grid_draws_match_moments() {
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_601);
    for p in [-50.0, -0.5, 0.9] {
        for a in [1e-8, 1.0, 1e4] {
            for b in [1e-10, 1.0, 1e3] {
                let params = GigParams::new(p, a, b).unwrap();
                let draws: Vec<f64> = (0..200_000)
                    .map(|_| gig_draw(&params, &mut rng).unwrap())
                    .collect();
                assert!(draws.iter().all(|y| *y > 0.0 && y.is_finite()));
                for k in [1, 2] {
                    let z = moment_z(&params, &draws, k);
                    assert!(z.abs() < 4.0, "({p},{a},{b}) k={k}: z={z}");
                }
            }
        }
    }
}

#[test]
fn gig_inverse_gaussian_case() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (a, b) = (2.0, 0.5);
    let params = GigParams::new(-0.5, a, b).unwrap();
    let draws: Vec<f64> = (0..1_000_000)
        .map(|_| gig_draw(&params, &mut rng).unwrap())
        .collect();
    let (mean, se) = common::mean_se(&draws);
    let target = (b / a).sqrt();
    assert!((mean - target).abs() < 4.0 * se, "{mean} vs {target} (se {se})");
}

#[test]
fn gig_shrinkage_regime_tiny_scale() {
    // sqrt(ab) = 1e-12 for several orders below one.
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for p in [0.0, 0.05, 0.5, 0.95, -0.05, -0.45] {
        let params = GigParams::new(p, 1e-12, 1e-12).unwrap();
        let draws: Vec<f64> = (0..100_000)
            .map(|_| gig_draw(&params, &mut rng).unwrap())
            .collect();
        assert!(draws.iter().all(|y| *y > 0.0 && y.is_finite()));
        if p > 0.0 {
            let z = moment_z(&params, &draws, 1);
            assert!(z.abs() < 4.0, "p={p}: z={z}");
        }
    }
}

#[test]
fn marginal_matches_mixture_quadrature() {
    for x in [0.001, 0.01, 0.1, 0.5, 2.0] {
        for (a, k2) in [
            (0.1, 20.0),
            (0.1, 200.0),
            (1.0 / 3.0, 20.0),
            (1.0, 2.0),
            (2.5, 5.0),
        ] {
            let got = log_marginal_sqrt_theta(x, a, k2).unwrap();
            let oracle = common::log_marginal_quad(x, a, k2);
            assert!(
                (got - oracle).abs() < 1e-6,
                "x={x} a={a} k2={k2}: {got} vs {oracle}"
            );
        }
    }
}

#[test]
fn marginal_frozen_values() {
    let frozen = [
        (0.01, 0.1, 20.0, 1.554_033_866_184_273_8),
        (0.5, 1.0 / 3.0, 20.0, -1.795_163_441_219_558_4),
        (2.0, 0.1, 200.0, -11.745_122_483_518_442),
        (0.001, 1.0, 2.0, -0.347_987_803_842_345_75),
    ];
    for (x, a, k2, v) in frozen {
        let got = log_marginal_sqrt_theta(x, a, k2).unwrap();
        assert!((got - v).abs() < 1e-11, "x={x} a={a} k2={k2}: {got} vs {v}");
    }
}

#[test]
fn lasso_marginal_goodness_of_fit() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let kappa2: f64 = 2.0;
    let rate = kappa2.sqrt();
    // Random sign: the marginal of sqrt(theta) is symmetric.
    let draws: Vec<f64> = (0..100_000)
        .map(|i| {
            let (theta, _) = draw_double_gamma_theta(1.0, kappa2, &mut rng);
            if i % 2 == 0 {
                theta.sqrt()
            } else {
                -theta.sqrt()
            }
        })
        .collect();
    let cdf = |x: f64| {
        if x < 0.0 {
            0.5 * (rate * x).exp()
        } else {
            1.0 - 0.5 * (-rate * x).exp()
        }
    };
    let p = common::ks_pvalue(&draws, cdf);
    assert!(p > 1e-3, "KS p-value {p}");
}

#[test]
fn gig_draws_pass_ks_in_every_regime() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let cases = [
        (0.3, 1e-6, 1e-6),   // small order, tiny sqrt(ab)
        (0.0, 1e-4, 1e-4),   // order zero
        (-0.2, 0.5, 1e-9),   // negative order, reciprocal path
        (0.9, 1.0, 0.01),    // order near one
        (1.5, 0.5, 0.5),     // ratio-of-uniforms without shift
        (-7.0, 2.0, 3.0),    // with mode shift
        (0.2, 30.0, 30.0),   // large sqrt(ab)
        (-0.5, 1e-3, 4.0),   // inverse Gaussian
        (2.0, 1e-12, 1e-12), // gamma-like limit for larger orders
    ];
    for (p, a, b) in cases {
        let params = GigParams::new(p, a, b).unwrap();
        let draws: Vec<f64> = (0..100_000)
            .map(|_| gig_draw(&params, &mut rng).unwrap())
            .collect();
        let pv = common::ks_pvalue(&draws, common::gig_cdf(p, a, b));
        assert!(pv > 1e-3, "({p},{a},{b}): KS p-value {pv}");
    }
}

#[test]
fn gig_ks_far_below_double_range() {
    // sqrt(ab) underflows or one parameter sits at the bottom of the double range
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for &(p, a, b) in &[
        (0.001, 1.0, 1e-300),
        (-0.45, 1e-300, 1e-300),
        (0.0, 1e-250, 1e-250),
        (-0.9, 2.0, 1e-305),
        (0.3, 1e-200, 1e-200),
        (-1.0, 1e200, 1e-300),
        (-0.5, 1.0, 1e-300),
        (-1.0, 3.0, 1e-20),
    ] {
        let g = GigParams::new(p, a, b).unwrap();
        let xs: Vec<f64> = (0..100_000).map(|_| gig_draw(&g, &mut rng).unwrap()).collect();
        let pv = common::ks_pvalue(&xs, common::gig_cdf(p, a, b));
        assert!(pv > 1e-3, "GIG({p}, {a:e}, {b:e}): KS p = {pv:e}");
    }
}
