//! One-step-ahead predictive densities and rolling-origin scoring.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dists::{split_seed, std_normal};
use crate::error::{Error, Result};
use crate::model::{ChainState, Dataset, PriorConfig};
use crate::sampler::{DrawError, DrawStore, DrawView, Sampler, SamplerSettings};
use crate::special::log_mean_exp;
use crate::sv::forecast_h;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

fn log_normal_density(y: f64, mean: f64, var: f64) -> f64 {
    -0.5 * (LN_2PI + var.ln() + (y - mean) * (y - mean) / var)
}

/// Filter moments for the non-centered states after one observation.
#[derive(Debug, Clone, PartialEq)]
pub struct KalmanState {
    pub m: DVector<f64>,
    pub c: DMatrix<f64>,
    /// Propagated covariance `C_{t-1} + I`.
    pub r: DMatrix<f64>,
    pub y_hat: f64,
    pub s: f64,
    pub k: DVector<f64>,
}

impl KalmanState {
    /// `m_0 = 0`, `C_0 = diag(P0)`.
    pub fn initial(p0: &DVector<f64>) -> Self {
        let d = p0.len();
        Self {
            m: DVector::zeros(d),
            c: DMatrix::from_diagonal(p0),
            r: DMatrix::zeros(d, d),
            y_hat: f64::NAN,
            s: f64::NAN,
            k: DVector::zeros(d),
        }
    }

    /// Predictive mean and variance of the next observation.
    pub fn predict(
        &self,
        x_t: &DVector<f64>,
        beta: &DVector<f64>,
        sqrt_theta: &DVector<f64>,
        sigma2_t: f64,
    ) -> (f64, f64) {
        let f = x_t.component_mul(sqrt_theta);
        let r = &self.c + DMatrix::identity(self.m.len(), self.m.len());
        let rf = &r * &f;
        (x_t.dot(beta) + f.dot(&self.m), f.dot(&rf) + sigma2_t)
    }
}

/// Propagation, prediction and correction for one time point.
pub fn kalman_step(
    ks: &KalmanState,
    x_t: &DVector<f64>,
    beta: &DVector<f64>,
    sqrt_theta: &DVector<f64>,
    sigma2_t: f64,
    y_t: f64,
) -> Result<KalmanState> {
    let d = ks.m.len();
    if x_t.len() != d || beta.len() != d || sqrt_theta.len() != d {
        return Err(Error::Dimension(format!(
            "filter has {d} states, got x_t {}, beta {}, sqrt_theta {}",
            x_t.len(),
            beta.len(),
            sqrt_theta.len()
        )));
    }
    let f = x_t.component_mul(sqrt_theta);
    let r = &ks.c + DMatrix::identity(d, d);
    let rf = &r * &f;
    let y_hat = x_t.dot(beta) + f.dot(&ks.m);
    let s = f.dot(&rf) + sigma2_t;
    if !(s > 0.0) || !s.is_finite() {
        return Err(Error::Numerical(format!(
            "predictive variance {s} is not positive"
        )));
    }
    let k = &rf / s;
    let m = &ks.m + &k * (y_t - y_hat);
    // C = (I - K F) R = R - K S K', symmetrized against rounding.
    let mut c = &r - &k * k.transpose() * s;
    c = (&c + c.transpose()) * 0.5;
    Ok(KalmanState { m, c, r, y_hat, s, k })
}

/// Runs the filter over a sample and returns the log-likelihood and the final state.
pub fn kalman_filter(
    data: &Dataset,
    beta: &DVector<f64>,
    sqrt_theta: &DVector<f64>,
    sigma2_t: &DVector<f64>,
    p0: &DVector<f64>,
) -> Result<(f64, KalmanState)> {
    if sigma2_t.len() != data.n_obs() {
        return Err(Error::Dimension(format!(
            "{} variances for {} observations",
            sigma2_t.len(),
            data.n_obs()
        )));
    }
    let mut ks = KalmanState::initial(p0);
    let mut ll = 0.0;
    for t in 0..data.n_obs() {
        let x_t = data.x.row(t).transpose();
        ks = kalman_step(&ks, &x_t, beta, sqrt_theta, sigma2_t[t], data.y[t])?;
        ll += log_normal_density(data.y[t], ks.y_hat, ks.s);
    }
    Ok((ll, ks))
}

fn forecast_variance<R: Rng + ?Sized>(view: &DrawView, rng: &mut R) -> f64 {
    match &view.error {
        DrawError::Constant(s2) => *s2,
        DrawError::Stochastic(sv) => forecast_h(sv, rng),
    }
}

fn history_variances(view: &DrawView, n: usize) -> DVector<f64> {
    match &view.error {
        DrawError::Constant(s2) => DVector::from_element(n, *s2),
        DrawError::Stochastic(sv) => sv.variances(),
    }
}

fn check_draws(draws: &DrawStore, history: &Dataset, x_t: &DVector<f64>) -> Result<()> {
    if draws.is_empty() {
        return Err(Error::EmptyDraws);
    }
    if draws.n_obs() != history.n_obs() || draws.n_cov() != history.n_cov() || x_t.len() != draws.n_cov() {
        return Err(Error::Dimension(format!(
            "draws fitted on T = {}, d = {}; history has T = {}, d = {}; x_t has {}",
            draws.n_obs(),
            draws.n_cov(),
            history.n_obs(),
            history.n_cov(),
            x_t.len()
        )));
    }
    Ok(())
}

/// Log predictive density of `y_t` averaged over exact per-draw Kalman predictives.
///
/// `history` must be the sample the draws were fitted on. In volatility mode the next
/// variance is simulated once per draw.
pub fn lpds_kalman_mixture<R: Rng + ?Sized>(
    draws: &DrawStore,
    history: &Dataset,
    x_t: &DVector<f64>,
    y_t: f64,
    rng: &mut R,
) -> Result<f64> {
    check_draws(draws, history, x_t)?;
    let mut logs = Vec::with_capacity(draws.len());
    for m in 0..draws.len() {
        let view = draws.draw(m);
        let s2 = history_variances(&view, history.n_obs());
        let (_, ks) = kalman_filter(history, &view.beta, &view.sqrt_theta, &s2, &view.p0)?;
        let (mean, var) = ks.predict(x_t, &view.beta, &view.sqrt_theta, forecast_variance(&view, rng));
        logs.push(log_normal_density(y_t, mean, var));
    }
    Ok(log_mean_exp(&logs))
}

/// Log predictive density from one simulated coefficient vector per draw.
pub fn lpds_naive_mixture<R: Rng + ?Sized>(
    draws: &DrawStore,
    x_t: &DVector<f64>,
    y_t: f64,
    rng: &mut R,
) -> Result<f64> {
    if draws.is_empty() {
        return Err(Error::EmptyDraws);
    }
    if x_t.len() != draws.n_cov() {
        return Err(Error::Dimension(format!(
            "x_t has {} entries, draws have {} covariates",
            x_t.len(),
            draws.n_cov()
        )));
    }
    let mut logs = Vec::with_capacity(draws.len());
    for m in 0..draws.len() {
        let view = draws.draw(m);
        let mut mean = 0.0;
        for j in 0..x_t.len() {
            let bt = view.beta_tilde_last[j] + std_normal(rng);
            mean += x_t[j] * (view.beta[j] + view.sqrt_theta[j] * bt);
        }
        let var = forecast_variance(&view, rng);
        logs.push(log_normal_density(y_t, mean, var));
    }
    Ok(log_mean_exp(&logs))
}

/// Running sums of per-period scores.
pub fn cumulative_lpds(scores: &[f64]) -> Vec<f64> {
    scores
        .iter()
        .scan(0.0, |acc, s| {
            *acc += s;
            Some(*acc)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RollingOptions {
    /// Training sample size; the first scored observation has index `t0`.
    pub t0: usize,
    /// Also compute the naive mixture score.
    pub naive: bool,
    /// Start each origin from the previous origin's last state.
    pub warm_start: bool,
    /// Burn-in for warm-started origins after the first.
    pub warm_burnin: usize,
}

impl Default for RollingOptions {
    fn default() -> Self {
        Self {
            t0: 0,
            naive: false,
            warm_start: false,
            warm_burnin: 200,
        }
    }
}

/// Scores for one forecast origin. `t` is the 0-based index of the predicted observation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OriginScore {
    pub t: usize,
    pub kalman: f64,
    pub naive: Option<f64>,
}

fn score_origin<R: Rng + ?Sized>(
    data: &Dataset,
    t: usize,
    draws: &DrawStore,
    naive: bool,
    rng: &mut R,
) -> Result<OriginScore> {
    let history = data.head(t);
    let x_t = data.x.row(t).transpose();
    let y_t = data.y[t];
    let kalman = lpds_kalman_mixture(draws, &history, &x_t, y_t, rng)?;
    let naive = if naive {
        Some(lpds_naive_mixture(draws, &x_t, y_t, rng)?)
    } else {
        None
    };
    Ok(OriginScore { t, kalman, naive })
}

/// Re-fits the model on `y_1..y_t` for every origin `t0 <= t < T` and scores `y_{t+1}`.
///
/// Cold-start origins run in parallel with seeds split from `seed`; warm starts are sequential.
pub fn rolling_lpds(
    data: &Dataset,
    prior: &PriorConfig,
    settings: &SamplerSettings,
    opts: &RollingOptions,
    seed: u64,
) -> Result<Vec<OriginScore>> {
    let n = data.n_obs();
    if opts.t0 >= n {
        return Err(Error::InvalidParameter(format!(
            "training size t0 = {} leaves nothing to forecast (T = {n})",
            opts.t0
        )));
    }
    if opts.t0 < 2 {
        return Err(Error::InvalidParameter(
            "training size t0 must be at least 2".into(),
        ));
    }
    if !opts.warm_start {
        return (opts.t0..n)
            .into_par_iter()
            .map(|t| {
                let mut rng = ChaCha8Rng::seed_from_u64(split_seed(seed, t as u64));
                let draws = crate::sampler::run_chain(&data.head(t), prior, settings, &mut rng)?;
                score_origin(data, t, &draws, opts.naive, &mut rng)
            })
            .collect();
    }
    let mut out = Vec::with_capacity(n - opts.t0);
    let mut state: Option<ChainState> = None;
    for t in opts.t0..n {
        let mut rng = ChaCha8Rng::seed_from_u64(split_seed(seed, t as u64));
        let history = data.head(t);
        let (draws, last) = match state.take() {
            None => {
                let mut s = Sampler::new(history, prior.clone(), settings.clone())?;
                let draws = s.run(&mut rng)?;
                (draws, s.into_state())
            }
            Some(init) => {
                let warm = SamplerSettings {
                    n_burnin: opts.warm_burnin,
                    ..settings.clone()
                };
                crate::sampler::run_chain_from(&history, prior, &warm, init, &mut rng)?
            }
        };
        out.push(score_origin(data, t, &draws, opts.naive, &mut rng)?);
        state = Some(last);
    }
    Ok(out)
}
