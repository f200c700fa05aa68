//! The individual conditional updates of one sweep. Each step mutates the chain state in place.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;

use crate::banded::{awol_draw, band_cholesky, build_precision};
use crate::dists::{
    gamma_draw, gig_draw, inv_gamma_draw, log_exponential, log_marginal_sqrt_theta, std_normal, GigParams,
};
use crate::error::{Error, Result};
use crate::model::{ChainState, Dataset, ErrorVariance, PriorConfig, PriorVariant};
use crate::sampler::store::Counters;
use crate::sv::sample_sv_block;

/// `y_t - x_t beta - sum_j x_tj sqrt_theta_j beta_tilde_tj` for `t = 1..T`.
pub fn residuals(state: &ChainState, data: &Dataset) -> DVector<f64> {
    let (t_len, d) = data.x.shape();
    DVector::from_fn(t_len, |t, _| {
        let mut fit = 0.0;
        for j in 0..d {
            fit += data.x[(t, j)] * (state.beta[j] + state.sqrt_theta[j] * state.beta_tilde[(t + 1, j)]);
        }
        data.y[t] - fit
    })
}

/// Step (a): joint draw of all non-centered states from their Gaussian full conditional.
pub fn step_a_states<R: Rng + ?Sized>(state: &mut ChainState, data: &Dataset, rng: &mut R) -> Result<()> {
    let sys = build_precision(
        &data.x,
        &state.beta,
        &state.sqrt_theta,
        &state.sigma2_t(),
        &state.p0,
        &data.y,
    )?;
    let sys = band_cholesky(sys)?;
    let d = data.n_cov();
    let n = (data.n_obs() + 1) * d;
    let eps: Vec<f64> = (0..n).map(|_| std_normal(rng)).collect();
    let draw = awol_draw(&sys, &eps)?;
    for (i, v) in draw.iter().enumerate() {
        state.beta_tilde[(i / d, i % d)] = *v;
    }
    Ok(())
}

/// Factor of `M`, right-hand side and prior standard deviations.
type ScaledSystem = (Cholesky<f64, Dyn>, DVector<f64>, DVector<f64>);

/// Gaussian regression `y = W alpha + e`, `e_t ~ N(0, sigma2_t)`, `alpha ~ N(0, diag(a0))`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpandedRegression {
    pub w: DMatrix<f64>,
    pub y: DVector<f64>,
    pub sigma2: DVector<f64>,
    pub a0: DVector<f64>,
}

impl ExpandedRegression {
    /// Design with rows `z_t = (x_t, x_t o beta_tilde_t)` and prior variances `(tau2, xi2)`.
    pub fn joint(state: &ChainState, data: &Dataset) -> Self {
        let (t_len, d) = data.x.shape();
        let w = DMatrix::from_fn(t_len, 2 * d, |t, k| {
            if k < d {
                data.x[(t, k)]
            } else {
                data.x[(t, k - d)] * state.beta_tilde[(t + 1, k - d)]
            }
        });
        let a0 = DVector::from_fn(2 * d, |k, _| if k < d { state.tau2[k] } else { state.xi2[k - d] });
        Self {
            w,
            y: data.y.clone(),
            sigma2: state.sigma2_t(),
            a0,
        }
    }

    /// Regression of `y - (x o beta_tilde) sqrt_theta` on `x` alone, prior variance `tau2`.
    pub fn beta_only(state: &ChainState, data: &Dataset) -> Self {
        let (t_len, d) = data.x.shape();
        let y = DVector::from_fn(t_len, |t, _| {
            let mut v = data.y[t];
            for j in 0..d {
                v -= data.x[(t, j)] * state.sqrt_theta[j] * state.beta_tilde[(t + 1, j)];
            }
            v
        });
        Self {
            w: data.x.clone(),
            y,
            sigma2: state.sigma2_t(),
            a0: state.tau2.clone(),
        }
    }

    /// Factor of `M = A0^{1/2} W' S^{-1} W A0^{1/2} + I` and the vector `A0^{1/2} W' S^{-1} y`.
    fn system(&self) -> Result<ScaledSystem> {
        let k = self.w.ncols();
        let sd = self.a0.map(f64::sqrt);
        let mut g = DMatrix::zeros(k, k);
        let mut r = DVector::zeros(k);
        for t in 0..self.w.nrows() {
            let wt = 1.0 / self.sigma2[t];
            for i in 0..k {
                let zi = self.w[(t, i)] * sd[i] * wt;
                r[i] += zi * self.y[t];
                for j in 0..=i {
                    g[(i, j)] += zi * self.w[(t, j)] * sd[j];
                }
            }
        }
        for i in 0..k {
            g[(i, i)] += 1.0;
            for j in 0..i {
                g[(j, i)] = g[(i, j)];
            }
        }
        let chol = g.cholesky().ok_or(Error::NotPositiveDefinite { block: 0 })?;
        Ok((chol, r, sd))
    }

    /// Posterior mean `a_T` and covariance `A_T`, computed in the stable form
    /// `A_T = A0^{1/2} M^{-1} A0^{1/2}`.
    pub fn posterior(&self) -> Result<(DVector<f64>, DMatrix<f64>)> {
        let (chol, r, sd) = self.system()?;
        let mean = chol.solve(&r).component_mul(&sd);
        let minv = chol.inverse();
        let cov = DMatrix::from_fn(sd.len(), sd.len(), |i, j| sd[i] * minv[(i, j)] * sd[j]);
        Ok((mean, cov))
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<DVector<f64>> {
        let (chol, r, sd) = self.system()?;
        let k = sd.len();
        let l = chol.l();
        // a = L^{-1} r, then L' u = a + eps gives u ~ N(M^{-1} r, M^{-1})
        let mut a = l
            .solve_lower_triangular(&r)
            .ok_or_else(|| Error::Numerical("singular factor in expanded regression".into()))?;
        for i in 0..k {
            a[i] += std_normal(rng);
        }
        let u = l
            .tr_solve_lower_triangular(&a)
            .ok_or_else(|| Error::Numerical("singular factor in expanded regression".into()))?;
        Ok(u.component_mul(&sd))
    }
}

/// Step (b): joint draw of `(beta, sqrt_theta)`; for the inverted gamma variant only `beta`.
pub fn step_b_alpha<R: Rng + ?Sized>(
    state: &mut ChainState,
    data: &Dataset,
    prior: &PriorConfig,
    rng: &mut R,
) -> Result<()> {
    let d = data.n_cov();
    if prior.variant == PriorVariant::InvertedGamma {
        let mut reg = ExpandedRegression::beta_only(state, data);
        reg.a0 = DVector::from_element(d, prior.a0_beta);
        let alpha = reg.draw(rng)?;
        state.beta.copy_from(&alpha);
    } else {
        let alpha = ExpandedRegression::joint(state, data).draw(rng)?;
        state.beta.copy_from(&alpha.rows(0, d));
        state.sqrt_theta.copy_from(&alpha.rows(d, d));
    }
    Ok(())
}

fn sign_of(x: f64) -> f64 {
    if x < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// Redraws `(theta_j, beta_j)` given the centered path of coefficient `j` and maps the path
/// back to the non-centered states. `draw_theta` receives the centered sum of squares
/// `sum_t (beta_jt - beta_j,t-1)^2 + (beta_j0 - beta_j)^2 / P0_j`.
///
/// Everything is computed from the non-centered states, so a path whose deviations fall
/// below the resolution of `beta_j` keeps its information. The new `|sqrt_theta_j|` is held
/// at or above `floor` times the largest centered deviation, which caps `|beta_tilde|` at
/// `1 / floor`; smaller scales only occur once `theta_j` has underflowed relative to the path.
fn recenter<R: Rng + ?Sized>(
    state: &mut ChainState,
    j: usize,
    prior_var: f64,
    floor: f64,
    counters: &mut Counters,
    rng: &mut R,
    draw_theta: impl FnOnce(f64, &mut R) -> Result<f64>,
) -> Result<()> {
    let st_old = state.sqrt_theta[j];
    let beta_old = state.beta[j];
    let p0 = state.p0[j];
    let col: Vec<f64> = state.beta_tilde.column(j).iter().copied().collect();
    let mut q = col[0] * col[0] / p0;
    for t in 1..col.len() {
        q += (col[t] - col[t - 1]).powi(2);
    }
    let ss = st_old * st_old * q;
    // A constant path makes the GIG conditional improper at zero.
    let ss = if ss > 0.0 {
        ss
    } else {
        counters.degenerate_theta += 1;
        f64::MIN_POSITIVE
    };
    let theta = draw_theta(ss, rng)?;
    let beta0 = beta_old + st_old * col[0];
    let tp = theta * p0;
    let denom = prior_var + tp;
    let beta_new = beta0 * prior_var / denom + (prior_var * tp / denom).sqrt() * std_normal(rng);
    let shift = beta_old - beta_new;
    let spread = col.iter().fold(0.0f64, |m, b| m.max((shift + st_old * b).abs()));
    let min_scale = (floor * spread).max(f64::MIN_POSITIVE);
    let mut s = theta.sqrt();
    if s < min_scale {
        counters.floored_sqrt_theta += 1;
        s = min_scale;
    }
    let s = s * sign_of(st_old);
    state.beta[j] = beta_new;
    state.sqrt_theta[j] = s;
    for (t, b) in col.iter().enumerate() {
        state.beta_tilde[(t, j)] = (shift + st_old * b) / s;
    }
    Ok(())
}

/// Random sign flip of each `(sqrt_theta_j, beta_tilde_j)` pair.
pub fn step_sign_flip<R: Rng + ?Sized>(state: &mut ChainState, rng: &mut R) {
    for j in 0..state.n_cov() {
        if rng.random::<bool>() {
            state.sqrt_theta[j] = -state.sqrt_theta[j];
            state.beta_tilde.column_mut(j).neg_mut();
        }
    }
}

/// Step (c): redraw `(theta_j, beta_j)` in the centered parameterization and map back.
pub fn step_c_interweave<R: Rng + ?Sized>(
    state: &mut ChainState,
    floor: f64,
    counters: &mut Counters,
    rng: &mut R,
) -> Result<()> {
    let n = state.n_obs() as f64;
    for j in 0..state.n_cov() {
        let a = 1.0 / state.xi2[j];
        let tau2 = state.tau2[j];
        recenter(state, j, tau2, floor, counters, rng, |ss, rng| {
            gig_draw(&GigParams::new(-n / 2.0, a, ss)?, rng)
        })?;
    }
    Ok(())
}

/// Inverted gamma variant: `theta_j` and `beta_j` in the centered parameterization.
pub fn step_theta_inverted_gamma<R: Rng + ?Sized>(
    state: &mut ChainState,
    prior: &PriorConfig,
    floor: f64,
    counters: &mut Counters,
    rng: &mut R,
) -> Result<()> {
    let shape = prior.s0 + (state.n_obs() as f64 + 1.0) / 2.0;
    for j in 0..state.n_cov() {
        recenter(state, j, prior.a0_beta, floor, counters, rng, |ss, rng| {
            Ok(inv_gamma_draw(shape, prior.big_s0 + 0.5 * ss, rng))
        })?;
    }
    Ok(())
}

fn log_marginal_sum(values: &DVector<f64>, a: f64, scale: f64) -> Result<f64> {
    let mut s = 0.0;
    for v in values.iter() {
        let x = if *v == 0.0 { f64::MIN_POSITIVE } else { *v };
        s += log_marginal_sqrt_theta(x, a, scale)?;
    }
    Ok(s)
}

/// Log acceptance ratio of a move `a -> a_new` on the log scale.
pub fn log_accept_ratio(a: f64, a_new: f64, rate: f64, values: &DVector<f64>, scale: f64) -> Result<f64> {
    Ok(
        log_exponential(a_new, rate) + a_new.ln() - log_exponential(a, rate) - a.ln()
            + log_marginal_sum(values, a_new, scale)?
            - log_marginal_sum(values, a, scale)?,
    )
}

fn mh_exponent<R: Rng + ?Sized>(
    a: f64,
    c: f64,
    rate: f64,
    values: &DVector<f64>,
    scale: f64,
    rng: &mut R,
) -> Result<(f64, bool)> {
    let a_new = (a.ln() + c * std_normal(rng)).exp();
    if !(a_new > 0.0) || !a_new.is_finite() {
        return Ok((a, false));
    }
    let log_r = log_accept_ratio(a, a_new, rate, values, scale)?;
    if rng.random::<f64>().ln() < log_r {
        Ok((a_new, true))
    } else {
        Ok((a, false))
    }
}

/// Step (d): random-walk Metropolis-Hastings on `log a^xi` and `log a^tau`, with the local
/// variances integrated out. Returns acceptance flags, `None` where the exponent is fixed.
pub fn step_d_mh_exponents<R: Rng + ?Sized>(
    state: &mut ChainState,
    prior: &PriorConfig,
    c_xi: f64,
    c_tau: f64,
    rng: &mut R,
) -> Result<(Option<bool>, Option<bool>)> {
    if prior.variant == PriorVariant::InvertedGamma {
        return Ok((None, None));
    }
    let xi = if prior.a_xi_fixed().is_none() {
        let (a, acc) = mh_exponent(state.a_xi, c_xi, prior.b_xi, &state.sqrt_theta, state.kappa2, rng)?;
        state.a_xi = a;
        Some(acc)
    } else {
        None
    };
    let tau = if prior.a_tau_fixed().is_none() {
        let (a, acc) = mh_exponent(state.a_tau, c_tau, prior.b_tau, &state.beta, state.lambda2, rng)?;
        state.a_tau = a;
        Some(acc)
    } else {
        None
    };
    Ok((xi, tau))
}

fn gig_local<R: Rng + ?Sized>(p: f64, a: f64, b: f64, rng: &mut R) -> Result<f64> {
    // An exact zero with p <= 0 has no proper limit; use the smallest positive value.
    let b = if b == 0.0 && p <= 0.0 {
        f64::MIN_POSITIVE
    } else {
        b
    };
    gig_draw(&GigParams::new(p, a, b)?, rng)
}

/// Step (e): local variances from their GIG conditionals, then the global scales.
pub fn step_e_prior_variances<R: Rng + ?Sized>(
    state: &mut ChainState,
    prior: &PriorConfig,
    rng: &mut R,
) -> Result<()> {
    if prior.variant == PriorVariant::InvertedGamma {
        return Ok(());
    }
    let d = state.n_cov();
    for j in 0..d {
        let b2 = state.beta[j] * state.beta[j];
        state.tau2[j] = gig_local(state.a_tau - 0.5, state.a_tau * state.lambda2, b2, rng)?;
        let th = state.sqrt_theta[j] * state.sqrt_theta[j];
        state.xi2[j] = gig_local(state.a_xi - 0.5, state.a_xi * state.kappa2, th, rng)?;
    }
    let df = d as f64;
    if prior.fixed_lambda2.is_none() {
        let shape = prior.e1 + state.a_tau * df;
        let rate = prior.e2 + 0.5 * state.a_tau * state.tau2.sum();
        state.lambda2 = gamma_draw(shape, rate, rng);
    }
    if prior.fixed_kappa2.is_none() {
        let shape = prior.d1 + state.a_xi * df;
        let rate = prior.d2 + 0.5 * state.a_xi * state.xi2.sum();
        state.kappa2 = gamma_draw(shape, rate, rng);
    }
    Ok(())
}

/// Step (f): homoscedastic error variance and its hyperparameter `C0`.
pub fn step_f_sigma2<R: Rng + ?Sized>(
    state: &mut ChainState,
    data: &Dataset,
    prior: &PriorConfig,
    rng: &mut R,
) -> Result<()> {
    if prior.fixed_sigma2.is_some() {
        return Ok(());
    }
    let ssr = residuals(state, data).norm_squared();
    let n = data.n_obs() as f64;
    if let ErrorVariance::Constant { sigma2, c0 } = &mut state.error {
        *sigma2 = inv_gamma_draw(prior.c0 + n / 2.0, *c0 + 0.5 * ssr, rng);
        *c0 = gamma_draw(prior.g0 + prior.c0, prior.big_g0() + 1.0 / *sigma2, rng);
    }
    Ok(())
}

/// Stochastic volatility replacement for step (f). Returns the number of clamped `h_t`.
pub fn step_sv<R: Rng + ?Sized>(
    state: &mut ChainState,
    data: &Dataset,
    prior: &PriorConfig,
    rng: &mut R,
) -> Result<usize> {
    let sv_prior = prior
        .sv
        .as_ref()
        .ok_or_else(|| Error::InvalidParameter("stochastic volatility prior missing".into()))?;
    let resid = residuals(state, data);
    if let ErrorVariance::Stochastic(sv) = &state.error {
        let (next, clamped) = sample_sv_block(resid.as_slice(), sv, sv_prior, rng)?;
        state.error = ErrorVariance::Stochastic(next);
        return Ok(clamped);
    }
    Err(Error::InvalidParameter("state has no volatility path".into()))
}

/// Step (g): variances of the initial states.
pub fn step_g_p0<R: Rng + ?Sized>(state: &mut ChainState, prior: &PriorConfig, rng: &mut R) {
    if prior.fixed_p0.is_some() {
        return;
    }
    for j in 0..state.n_cov() {
        let b0 = state.beta_tilde[(0, j)];
        state.p0[j] = inv_gamma_draw(
            prior.nu_p + 0.5,
            (prior.nu_p - 1.0) * prior.c_p + 0.5 * b0 * b0,
            rng,
        );
    }
}
