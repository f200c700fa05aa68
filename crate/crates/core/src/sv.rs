//! Auxiliary-mixture sampler for the AR(1) log-variance process.
//!
//! `log(e_t^2)` is written as `h_t` plus log chi-square(1) noise, and the noise is
//! replaced by a ten-component normal mixture. Given the indicators, the whole path is
//! drawn jointly from its tridiagonal precision, followed by the AR parameters with one
//! centered/non-centered interweaving move for `(mu, sigma_eta)`.

use rand::Rng;

use crate::banded::{awol_draw, band_cholesky, PrecisionSystem};
use crate::dists::{gig_draw, std_normal, GigParams};
use crate::error::{Error, Result};
use crate::model::{SvPrior, SvState};

pub const MIX_PROB: [f64; 10] = [
    0.00609, 0.04775, 0.13057, 0.20674, 0.22715, 0.18842, 0.12047, 0.05591, 0.01575, 0.00115,
];
pub const MIX_MEAN: [f64; 10] = [
    1.92677, 1.34744, 0.73504, 0.02266, -0.85173, -1.97278, -3.46788, -5.55246, -8.68384, -14.65,
];
pub const MIX_VAR: [f64; 10] = [
    0.11265, 0.17788, 0.26768, 0.40611, 0.62699, 0.98583, 1.57469, 2.54498, 4.16591, 7.33342,
];

/// Offset guarding `log(e^2)` against exact zeros.
pub const LOG_OFFSET: f64 = 1e-8;
pub const H_BOUND: f64 = 700.0;

/// `log(e_t^2 + offset)` for each residual.
pub fn log_squares(residuals: &[f64]) -> Vec<f64> {
    residuals.iter().map(|e| (e * e + LOG_OFFSET).ln()).collect()
}

/// One update of the volatility block given residuals `e_1..e_T`.
///
/// Returns the new state and the number of `h_t` values clamped to `[-700, 700]`.
pub fn sample_sv_block<R: Rng + ?Sized>(
    residuals: &[f64],
    sv: &SvState,
    prior: &SvPrior,
    rng: &mut R,
) -> Result<(SvState, usize)> {
    sample_sv_given_log_squares(&log_squares(residuals), sv, prior, rng)
}

/// Same as [`sample_sv_block`], starting from the transformed observations.
pub fn sample_sv_given_log_squares<R: Rng + ?Sized>(
    ystar: &[f64],
    sv: &SvState,
    prior: &SvPrior,
    rng: &mut R,
) -> Result<(SvState, usize)> {
    let t_len = ystar.len();
    if sv.h.len() != t_len + 1 {
        return Err(Error::Dimension(format!(
            "h has length {}, expected {}",
            sv.h.len(),
            t_len + 1
        )));
    }
    let mut next = sv.clone();
    let (s, clamped) = update_path(ystar, &mut next, rng)?;
    draw_phi(&mut next, prior, rng);
    draw_sigma2_eta(&mut next, prior, rng)?;
    draw_mu(&mut next, prior, rng);
    interweave_noncentered(ystar, &s, &mut next, prior, rng)?;
    Ok((next, clamped))
}

/// Redraws the indicators and then the path `h`, holding `(mu, phi, sigma2_eta)` fixed.
/// Returns the indicators and the number of clamped values.
pub fn update_path<R: Rng + ?Sized>(
    ystar: &[f64],
    sv: &mut SvState,
    rng: &mut R,
) -> Result<(Vec<usize>, usize)> {
    if sv.h.len() != ystar.len() + 1 {
        return Err(Error::Dimension(format!(
            "h has length {}, expected {}",
            sv.h.len(),
            ystar.len() + 1
        )));
    }
    let s = draw_indicators(ystar, sv.h.as_slice(), rng);
    let clamped = draw_path(ystar, &s, sv, rng)?;
    Ok((s, clamped))
}

/// Mixture component of each `ystar_t` given `h_t`.
pub fn draw_indicators<R: Rng + ?Sized>(ystar: &[f64], h: &[f64], rng: &mut R) -> Vec<usize> {
    let mut logw = [0.0; 10];
    ystar
        .iter()
        .enumerate()
        .map(|(t, ys)| {
            let z = ys - h[t + 1];
            let mut top = f64::NEG_INFINITY;
            for k in 0..10 {
                let d = z - MIX_MEAN[k];
                logw[k] = MIX_PROB[k].ln() - 0.5 * MIX_VAR[k].ln() - 0.5 * d * d / MIX_VAR[k];
                top = top.max(logw[k]);
            }
            let mut total = 0.0;
            for w in logw.iter_mut() {
                *w = (*w - top).exp();
                total += *w;
            }
            let mut u = rng.random::<f64>() * total;
            for (k, w) in logw.iter().enumerate() {
                if u < *w {
                    return k;
                }
                u -= w;
            }
            9
        })
        .collect()
}

fn draw_path<R: Rng + ?Sized>(ystar: &[f64], s: &[usize], sv: &mut SvState, rng: &mut R) -> Result<usize> {
    let t_len = ystar.len();
    let (mu, phi, s2) = (sv.mu, sv.phi, sv.sigma2_eta);
    let mut diag = vec![(1.0 + phi * phi) / s2; t_len + 1];
    diag[0] = 1.0 / s2;
    diag[t_len] = 1.0 / s2;
    let sub = vec![-phi / s2; t_len];
    let mut cov = vec![0.0; t_len + 1];
    for t in 1..=t_len {
        let k = s[t - 1];
        diag[t] += 1.0 / MIX_VAR[k];
        cov[t] = (ystar[t - 1] - MIX_MEAN[k] - mu) / MIX_VAR[k];
    }
    let sys = band_cholesky(PrecisionSystem::tridiagonal(diag, sub, cov)?)?;
    let eps: Vec<f64> = (0..=t_len).map(|_| std_normal(rng)).collect();
    let u = awol_draw(&sys, &eps)?;
    let mut clamped = 0;
    for (h, ut) in sv.h.iter_mut().zip(u.iter()) {
        let v = mu + ut;
        if v.abs() > H_BOUND {
            clamped += 1;
        }
        *h = v.clamp(-H_BOUND, H_BOUND);
    }
    Ok(clamped)
}

/// Log of the beta prior on `(phi + 1) / 2`, up to a constant.
fn log_phi_prior(phi: f64, prior: &SvPrior) -> f64 {
    (prior.a0 - 1.0) * (1.0 + phi).ln() + (prior.b0 - 1.0) * (1.0 - phi).ln()
}

/// Log density of `h_0 - mu` under the stationary distribution, up to a constant.
fn log_initial(u0: f64, phi: f64, s2: f64) -> f64 {
    let var = s2 / (1.0 - phi * phi);
    -0.5 * var.ln() - 0.5 * u0 * u0 / var
}

/// Independence Metropolis-Hastings with the AR(1) regression posterior, truncated to (-1, 1), as proposal.
fn draw_phi<R: Rng + ?Sized>(sv: &mut SvState, prior: &SvPrior, rng: &mut R) {
    let u: Vec<f64> = sv.h.iter().map(|h| h - sv.mu).collect();
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for t in 1..u.len() {
        sxx += u[t - 1] * u[t - 1];
        sxy += u[t - 1] * u[t];
    }
    if !(sxx > 0.0) {
        return;
    }
    let mean = sxy / sxx;
    let sd = (sv.sigma2_eta / sxx).sqrt();
    let mut proposal = None;
    for _ in 0..10_000 {
        let cand = mean + sd * std_normal(rng);
        if cand.abs() < 1.0 {
            proposal = Some(cand);
            break;
        }
    }
    let Some(cand) = proposal else { return };
    let target = |phi: f64| log_phi_prior(phi, prior) + log_initial(u[0], phi, sv.sigma2_eta);
    let log_ratio = target(cand) - target(sv.phi);
    if rng.random::<f64>().ln() < log_ratio {
        sv.phi = cand;
    }
}

fn draw_sigma2_eta<R: Rng + ?Sized>(sv: &mut SvState, prior: &SvPrior, rng: &mut R) -> Result<()> {
    let u: Vec<f64> = sv.h.iter().map(|h| h - sv.mu).collect();
    let t_len = u.len() - 1;
    let mut ss = u[0] * u[0] * (1.0 - sv.phi * sv.phi);
    for t in 1..=t_len {
        let e = u[t] - sv.phi * u[t - 1];
        ss += e * e;
    }
    // (T+1) Gaussian terms and the Gamma(1/2, 1/(2 B_sigma)) prior.
    let params = GigParams::new(-(t_len as f64) / 2.0, 1.0 / prior.big_b_sigma, ss)?;
    sv.sigma2_eta = gig_draw(&params, rng)?;
    Ok(())
}

fn draw_mu<R: Rng + ?Sized>(sv: &mut SvState, prior: &SvPrior, rng: &mut R) {
    let (phi, s2) = (sv.phi, sv.sigma2_eta);
    let h = &sv.h;
    let t_len = h.len() - 1;
    let mut prec = (1.0 - phi * phi) / s2 + 1.0 / prior.big_b_mu;
    let mut lin = h[0] * (1.0 - phi * phi) / s2 + prior.b_mu / prior.big_b_mu;
    let w = 1.0 - phi;
    prec += t_len as f64 * w * w / s2;
    for t in 1..=t_len {
        lin += w * (h[t] - phi * h[t - 1]) / s2;
    }
    let mu_new = lin / prec + std_normal(rng) / prec.sqrt();
    sv.mu = mu_new;
}

/// Joint draw of `(mu, sigma_eta)` given the standardized path `(h - mu) / sigma_eta`.
fn interweave_noncentered<R: Rng + ?Sized>(
    ystar: &[f64],
    s: &[usize],
    sv: &mut SvState,
    prior: &SvPrior,
    rng: &mut R,
) -> Result<()> {
    let sd = sv.sigma2_eta.sqrt();
    let htilde: Vec<f64> = sv.h.iter().map(|h| (h - sv.mu) / sd).collect();
    // Normal equations for y*_t - m_{s_t} = mu + sigma_eta * htilde_t + N(0, v_{s_t}).
    let mut p = [[1.0 / prior.big_b_mu, 0.0], [0.0, 1.0 / prior.big_b_sigma]];
    let mut r = [prior.b_mu / prior.big_b_mu, 0.0];
    for (t, ys) in ystar.iter().enumerate() {
        let k = s[t];
        let w = 1.0 / MIX_VAR[k];
        let z = htilde[t + 1];
        let obs = ys - MIX_MEAN[k];
        p[0][0] += w;
        p[0][1] += w * z;
        p[1][1] += w * z * z;
        r[0] += w * obs;
        r[1] += w * z * obs;
    }
    p[1][0] = p[0][1];
    let l00 = p[0][0].sqrt();
    let l10 = p[1][0] / l00;
    let d = p[1][1] - l10 * l10;
    if !(d > 0.0) {
        return Err(Error::NotPositiveDefinite { block: 0 });
    }
    let l11 = d.sqrt();
    // mean = P^{-1} r, draw = mean + L'^{-1} eps
    let a0 = r[0] / l00;
    let a1 = (r[1] - l10 * a0) / l11;
    let b1 = (a1 + std_normal(rng)) / l11;
    let b0 = (a0 + std_normal(rng) - l10 * b1) / l00;
    let (mu, sig) = (b0, b1);
    if sig == 0.0 {
        return Ok(());
    }
    sv.mu = mu;
    sv.sigma2_eta = sig * sig;
    for (h, ht) in sv.h.iter_mut().zip(&htilde) {
        *h = (mu + sig * ht).clamp(-H_BOUND, H_BOUND);
    }
    Ok(())
}

/// Draws `exp(h_{T+1})` with `h_{T+1} ~ N(mu + phi (h_T - mu), sigma2_eta)`.
pub fn forecast_h<R: Rng + ?Sized>(sv: &SvState, rng: &mut R) -> f64 {
    let h_last = sv.h[sv.h.len() - 1];
    forecast_h_from(h_last, sv.mu, sv.phi, sv.sigma2_eta, rng)
}

pub fn forecast_h_from<R: Rng + ?Sized>(h_last: f64, mu: f64, phi: f64, sigma2_eta: f64, rng: &mut R) -> f64 {
    let h = mu + phi * (h_last - mu) + sigma2_eta.sqrt() * std_normal(rng);
    h.clamp(-H_BOUND, H_BOUND).exp()
}
