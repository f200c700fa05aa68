//! Independent reference computations shared by the integration and acceptance suites.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};

/// `log integral exp(g(w)) dw` by the trapezoid rule in log space.
///
/// The peak is located on a coarse grid over `[lo, hi]`; the fine pass covers the region
/// where `g` is within 60 nats of the peak.
pub fn log_integrate(g: impl Fn(f64) -> f64, lo: f64, hi: f64, h: f64) -> f64 {
    let coarse = 0.01_f64.max(h);
    let n = ((hi - lo) / coarse).ceil() as usize;
    let mut best = f64::NEG_INFINITY;
    let mut keep_lo = hi;
    let mut keep_hi = lo;
    let vals: Vec<(f64, f64)> = (0..=n)
        .map(|i| {
            let w = lo + i as f64 * coarse;
            (w, g(w))
        })
        .collect();
    for &(_, v) in &vals {
        if v > best {
            best = v;
        }
    }
    for &(w, v) in &vals {
        if v > best - 60.0 {
            keep_lo = keep_lo.min(w);
            keep_hi = keep_hi.max(w);
        }
    }
    let a = (keep_lo - 2.0 * coarse).max(lo);
    let b = (keep_hi + 2.0 * coarse).min(hi);
    let m = ((b - a) / h).ceil() as usize;
    let step = (b - a) / m as f64;
    let terms: Vec<f64> = (0..=m)
        .map(|i| {
            let v = g(a + i as f64 * step);
            if i == 0 || i == m {
                v - std::f64::consts::LN_2
            } else {
                v
            }
        })
        .collect();
    log_sum_exp(&terms) + step.ln()
}

pub fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// `log K_p(x)` from `K_p(x) = int_0^inf exp(-x cosh t) cosh(p t) dt`.
pub fn log_bessel_k_quad(p: f64, x: f64) -> f64 {
    let g = |t: f64| {
        let lc = if (p * t).abs() > 30.0 {
            (p * t).abs() - std::f64::consts::LN_2
        } else {
            (p * t).cosh().ln()
        };
        -x * t.cosh() + lc
    };
    // Integrand is even in t; integrate over the whole line and halve.
    log_integrate(g, -60.0, 60.0, 0.002) - std::f64::consts::LN_2
}

/// `log E[Y^k]` for `Y ~ GIG(p, a, b)` via substitution `y = e^w`.
pub fn log_gig_moment_quad(p: f64, a: f64, b: f64, k: f64) -> f64 {
    let g = |q: f64| move |w: f64| q * w - 0.5 * (a * w.exp() + b * (-w).exp());
    log_integrate(g(p + k), -800.0, 800.0, 0.002) - log_integrate(g(p), -800.0, 800.0, 0.002)
}

/// Log density at `x` of the scale mixture `N(0, v)` with `v ~ Gamma(a, a kappa2 / 2)`.
pub fn log_marginal_quad(x: f64, a: f64, kappa2: f64) -> f64 {
    let rate = a * kappa2 / 2.0;
    let lg = ln_gamma(a);
    let g = |w: f64| {
        let v = w.exp();
        -0.5 * (2.0 * std::f64::consts::PI * v).ln() - x * x / (2.0 * v) + a * rate.ln() - lg + a * w
            - rate * v
    };
    log_integrate(g, -80.0, 20.0, 0.005)
}

/// Lanczos log-gamma, kept independent of the library's special functions.
pub fn ln_gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const C: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut s = C[0];
    for (i, c) in C.iter().enumerate().skip(1) {
        s += c / (x + i as f64);
    }
    let t = x + G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + s.ln()
}

/// Dense precision of `(b_0, ..., b_T)` with `b_0 ~ N(0, diag(P0))`, `b_t = b_{t-1} + N(0, I)`,
/// and observations `y_t = x_t beta + (x_t o sqrt_theta) b_t + N(0, sigma2_t)`.
///
/// Built from the joint covariance and a dense inverse, independent of the block assembly.
pub fn dense_state_posterior(
    x: &DMatrix<f64>,
    beta: &DVector<f64>,
    sqrt_theta: &DVector<f64>,
    sigma2: &DVector<f64>,
    p0: &DVector<f64>,
    y: &DVector<f64>,
) -> (DMatrix<f64>, DVector<f64>) {
    let (t_len, d) = x.shape();
    let n = (t_len + 1) * d;
    let mut cov = DMatrix::zeros(n, n);
    for s in 0..=t_len {
        for t in 0..=t_len {
            for j in 0..d {
                cov[(s * d + j, t * d + j)] = p0[j] + s.min(t) as f64;
            }
        }
    }
    let prior_prec = cov.clone().cholesky().expect("prior covariance is PD").inverse();
    // Observation operator H: y = x beta + H b + noise.
    let mut h = DMatrix::zeros(t_len, n);
    for t in 0..t_len {
        for j in 0..d {
            h[(t, (t + 1) * d + j)] = x[(t, j)] * sqrt_theta[j];
        }
    }
    let r_inv = DMatrix::from_diagonal(&sigma2.map(|s| 1.0 / s));
    let prec = &prior_prec + h.transpose() * &r_inv * &h;
    let resid = y - x * beta;
    let c = h.transpose() * r_inv * resid;
    (prec, c)
}

/// Log density of `y` under the joint Gaussian implied by the same state space model.
pub fn dense_log_likelihood(
    x: &DMatrix<f64>,
    beta: &DVector<f64>,
    sqrt_theta: &DVector<f64>,
    sigma2: &DVector<f64>,
    p0: &DVector<f64>,
    y: &DVector<f64>,
) -> f64 {
    let (t_len, d) = x.shape();
    let mut cov = DMatrix::from_diagonal(sigma2);
    for s in 0..t_len {
        for t in 0..t_len {
            let mut v = 0.0;
            for j in 0..d {
                // Cov(b_{s+1,j}, b_{t+1,j}) = P0_j + min(s+1, t+1)
                let k = p0[j] + (s.min(t) + 1) as f64;
                v += x[(s, j)] * sqrt_theta[j] * k * x[(t, j)] * sqrt_theta[j];
            }
            cov[(s, t)] += v;
        }
    }
    let mean = x * beta;
    let chol = cov.cholesky().expect("marginal covariance is PD");
    let resid = y - mean;
    let z = chol.l().solve_lower_triangular(&resid).unwrap();
    let logdet: f64 = chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>() * 2.0;
    -0.5 * (t_len as f64 * (2.0 * std::f64::consts::PI).ln() + logdet + z.norm_squared())
}

/// Kolmogorov survival function `P(K > lambda)`.
pub fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..200 {
        let term = (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        sum += sign * term;
        sign = -sign;
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// One-sample Kolmogorov-Smirnov p-value against a continuous CDF.
pub fn ks_pvalue(sample: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut s = sample.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = s.len() as f64;
    let mut dmax: f64 = 0.0;
    for (i, v) in s.iter().enumerate() {
        let f = cdf(*v);
        dmax = dmax.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    let sq = n.sqrt();
    kolmogorov_q((sq + 0.12 + 0.11 / sq) * dmax)
}

/// Two-sample Kolmogorov-Smirnov p-value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(|x, y| x.partial_cmp(y).unwrap());
    b.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut dmax: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let v = a[i].min(b[j]);
        while i < a.len() && a[i] <= v {
            i += 1;
        }
        while j < b.len() && b[j] <= v {
            j += 1;
        }
        dmax = dmax.max((i as f64 / n - j as f64 / m).abs());
    }
    let ne = (n * m / (n + m)).sqrt();
    kolmogorov_q((ne + 0.12 + 0.11 / ne) * dmax)
}

/// Sample mean and its standard error, treating the draws as independent.
pub fn mean_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Sample variance and a standard error for it (from the fourth central moment).
pub fn var_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let m2 = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let m4 = v.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
    (m2 * n / (n - 1.0), ((m4 - m2 * m2) / n).sqrt())
}

/// CDF of `GIG(p, a, b)` tabulated on a fine grid in `log y` and linearly interpolated.
pub fn gig_cdf(p: f64, a: f64, b: f64) -> impl Fn(f64) -> f64 {
    let g = move |w: f64| p * w - 0.5 * (a * w.exp() + b * (-w).exp());
    let (lo, hi, h) = (-800.0, 800.0, 0.01);
    let n = ((hi - lo) / h) as usize;
    let vals: Vec<f64> = (0..=n).map(|i| g(lo + i as f64 * h)).collect();
    let peak = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    // Refine: integrate with a 50x finer step inside each cell.
    let sub = 50;
    let mut cum = vec![0.0; n + 1];
    for i in 0..n {
        let w0 = lo + i as f64 * h;
        let mut s = 0.0;
        if vals[i].max(vals[i + 1]) > peak - 80.0 {
            for k in 0..sub {
                let wa = w0 + k as f64 * h / sub as f64;
                let wb = wa + h / sub as f64;
                s += 0.5 * ((g(wa) - peak).exp() + (g(wb) - peak).exp()) * h / sub as f64;
            }
        }
        cum[i + 1] = cum[i] + s;
    }
    let total = cum[n];
    move |y: f64| {
        let w = y.ln();
        if w <= lo {
            return 0.0;
        }
        if w >= hi {
            return 1.0;
        }
        let pos = (w - lo) / h;
        let i = pos.floor() as usize;
        let f = pos - i as f64;
        (cum[i] * (1.0 - f) + cum[(i + 1).min(n)] * f) / total
    }
}

/// Forward draws from the hierarchical prior, one row per draw:
/// `(theta_1, kappa2, a_xi, lambda2, a_tau, beta_1)`.
pub fn forward_prior_draws(prior: &tvp_core::PriorConfig, d: usize, n: usize, seed: u64) -> Vec<[f64; 6]> {
    use rand::SeedableRng;
    use tvp_core::dists::{gamma_draw, std_normal};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let a_xi = prior
                .a_xi_fixed()
                .unwrap_or_else(|| gamma_draw(1.0, prior.b_xi, &mut rng));
            let a_tau = prior
                .a_tau_fixed()
                .unwrap_or_else(|| gamma_draw(1.0, prior.b_tau, &mut rng));
            let kappa2 = prior
                .fixed_kappa2
                .unwrap_or_else(|| gamma_draw(prior.d1, prior.d2, &mut rng));
            let lambda2 = prior
                .fixed_lambda2
                .unwrap_or_else(|| gamma_draw(prior.e1, prior.e2, &mut rng));
            let xi2 = gamma_draw(a_xi, a_xi * kappa2 / 2.0, &mut rng);
            let st = xi2.sqrt() * std_normal(&mut rng);
            let tau2 = gamma_draw(a_tau, a_tau * lambda2 / 2.0, &mut rng);
            let beta = tau2.sqrt() * std_normal(&mut rng);
            let _ = d;
            [st * st, kappa2, a_xi, lambda2, a_tau, beta]
        })
        .collect()
}

/// One exact draw of the full state from the prior, with `sigma2` taken from `fixed_sigma2`.
pub fn prior_state<R: rand::Rng + ?Sized>(
    prior: &tvp_core::PriorConfig,
    data: &tvp_core::Dataset,
    rng: &mut R,
) -> tvp_core::ChainState {
    use tvp_core::dists::{gamma_draw, inv_gamma_draw, std_normal};
    let mut st = tvp_core::ChainState::initial(data, prior);
    let d = data.n_cov();
    st.a_xi = prior
        .a_xi_fixed()
        .unwrap_or_else(|| gamma_draw(1.0, prior.b_xi, rng));
    st.a_tau = prior
        .a_tau_fixed()
        .unwrap_or_else(|| gamma_draw(1.0, prior.b_tau, rng));
    st.kappa2 = prior
        .fixed_kappa2
        .unwrap_or_else(|| gamma_draw(prior.d1, prior.d2, rng));
    st.lambda2 = prior
        .fixed_lambda2
        .unwrap_or_else(|| gamma_draw(prior.e1, prior.e2, rng));
    for j in 0..d {
        st.xi2[j] = gamma_draw(st.a_xi, st.a_xi * st.kappa2 / 2.0, rng);
        st.tau2[j] = gamma_draw(st.a_tau, st.a_tau * st.lambda2 / 2.0, rng);
        st.sqrt_theta[j] = st.xi2[j].sqrt() * std_normal(rng);
        st.beta[j] = st.tau2[j].sqrt() * std_normal(rng);
        st.p0[j] = prior
            .fixed_p0
            .unwrap_or_else(|| inv_gamma_draw(prior.nu_p, (prior.nu_p - 1.0) * prior.c_p, rng));
        let mut v = st.p0[j].sqrt() * std_normal(rng);
        st.beta_tilde[(0, j)] = v;
        for t in 1..=data.n_obs() {
            v += std_normal(rng);
            st.beta_tilde[(t, j)] = v;
        }
    }
    st.error = tvp_core::ErrorVariance::Constant {
        sigma2: prior
            .fixed_sigma2
            .expect("prior draw needs a fixed error variance"),
        c0: 1.0,
    };
    st
}

/// A response drawn from the observation equation given the state.
pub fn model_response<R: rand::Rng + ?Sized>(
    st: &tvp_core::ChainState,
    x: &DMatrix<f64>,
    sigma2: f64,
    rng: &mut R,
) -> DVector<f64> {
    let (t_len, d) = x.shape();
    DVector::from_fn(t_len, |t, _| {
        let mut m = 0.0;
        for j in 0..d {
            m += x[(t, j)] * (st.beta[j] + st.sqrt_theta[j] * st.beta_tilde[(t + 1, j)]);
        }
        m + sigma2.sqrt() * tvp_core::dists::std_normal(rng)
    })
}

/// Successive-conditional check on independent replicates. Each replicate starts from an exact
/// joint draw of state and response, then alternates a sweep with a fresh response `sweeps`
/// times. The final states are an iid sample from the prior when the sampler is correct.
/// Rows are `(theta_1, kappa2, a_xi, lambda2, a_tau, beta_1)`.
pub fn successive_conditional(
    prior: &tvp_core::PriorConfig,
    settings: &tvp_core::SamplerSettings,
    x: &DMatrix<f64>,
    n_rep: usize,
    sweeps: usize,
    seed: u64,
) -> Vec<[f64; 6]> {
    use rand::SeedableRng;
    use tvp_core::{Dataset, Sampler};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let sigma2 = prior.fixed_sigma2.expect("check needs a fixed error variance");
    let template = Dataset::new(DVector::zeros(x.nrows()), x.clone()).unwrap();
    (0..n_rep)
        .map(|_| {
            let st = prior_state(prior, &template, &mut rng);
            let y = model_response(&st, x, sigma2, &mut rng);
            let data = Dataset::new(y, x.clone()).unwrap();
            let mut s = Sampler::with_state(data, prior.clone(), settings.clone(), st).unwrap();
            for _ in 0..sweeps {
                s.sweep(&mut rng, true).unwrap();
                let y = model_response(s.state(), x, sigma2, &mut rng);
                s.set_response(y).unwrap();
            }
            let st = s.state();
            [
                st.sqrt_theta[0].powi(2),
                st.kappa2,
                st.a_xi,
                st.lambda2,
                st.a_tau,
                st.beta[0],
            ]
        })
        .collect()
}

/// Largest z-score of the sample mean and covariance of `draws` against `(mean, cov)`,
/// using the Gaussian standard errors `sqrt(S_ii / n)` and `sqrt((S_ii S_jj + S_ij^2) / n)`.
pub fn gaussian_moment_z(draws: &[DVector<f64>], mean: &DVector<f64>, cov: &DMatrix<f64>) -> f64 {
    let n = draws.len() as f64;
    let k = mean.len();
    let mut m = DVector::zeros(k);
    for v in draws {
        m += v;
    }
    m /= n;
    let mut s = DMatrix::zeros(k, k);
    for v in draws {
        let c = v - &m;
        s += &c * c.transpose();
    }
    s /= n - 1.0;
    let mut worst: f64 = 0.0;
    for i in 0..k {
        worst = worst.max((m[i] - mean[i]).abs() / (cov[(i, i)] / n).sqrt());
        for j in 0..=i {
            let se = ((cov[(i, i)] * cov[(j, j)] + cov[(i, j)].powi(2)) / n).sqrt();
            worst = worst.max((s[(i, j)] - cov[(i, j)]).abs() / se);
        }
    }
    worst
}
