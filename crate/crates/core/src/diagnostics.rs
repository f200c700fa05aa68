//! Posterior summaries, inefficiency factors and simulation-study metrics.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub mean: f64,
    /// Standard deviation with divisor `n - 1`.
    pub sd: f64,
    /// `(level, value)` pairs in the requested order.
    pub quantiles: Vec<(f64, f64)>,
}

/// Empirical quantile with linear interpolation between order statistics (type 7).
/// `sorted` must be ascending and non-empty.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn posterior_summary(draws: &[f64], levels: &[f64]) -> Result<Summary> {
    if draws.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least two draws for a summary, got {}",
            draws.len()
        )));
    }
    if let Some(p) = levels.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::InvalidParameter(format!(
            "quantile level {p} outside [0, 1]"
        )));
    }
    let n = draws.len() as f64;
    let mean = draws.iter().sum::<f64>() / n;
    let var = draws.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let mut sorted = draws.to_vec();
    sorted.sort_by(f64::total_cmp);
    let quantiles = levels.iter().map(|&p| (p, quantile_sorted(&sorted, p))).collect();
    Ok(Summary {
        mean,
        sd: var.sqrt(),
        quantiles,
    })
}

/// Inefficiency factor `N / ESS`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Inefficiency {
    pub factor: f64,
    /// Set for chains with zero variance, where the factor is reported as infinite.
    pub constant: bool,
}

/// Autocorrelations at lags `0..n` via zero-padded FFT.
pub fn autocorrelation(chain: &[f64]) -> Vec<f64> {
    let n = chain.len();
    let mean = chain.iter().sum::<f64>() / n as f64;
    let len = (2 * n).next_power_of_two();
    let mut buf: Vec<Complex<f64>> = chain
        .iter()
        .map(|v| Complex::new(v - mean, 0.0))
        .chain(std::iter::repeat(Complex::new(0.0, 0.0)))
        .take(len)
        .collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(len).process(&mut buf);
    for z in buf.iter_mut() {
        *z = Complex::new(z.norm_sqr(), 0.0);
    }
    planner.plan_fft_inverse(len).process(&mut buf);
    let c0 = buf[0].re;
    buf[..n].iter().map(|z| z.re / c0).collect()
}

/// Geyer's initial monotone sequence estimate of the integrated autocorrelation time.
pub fn inefficiency_factor(chain: &[f64]) -> Result<Inefficiency> {
    if chain.len() < 100 {
        return Err(Error::InvalidParameter(format!(
            "need at least 100 draws for an inefficiency factor, got {}",
            chain.len()
        )));
    }
    let first = chain[0];
    if chain.iter().all(|v| *v == first) {
        return Ok(Inefficiency {
            factor: f64::INFINITY,
            constant: true,
        });
    }
    let rho = autocorrelation(chain);
    let mut sum = 0.0;
    let mut prev = f64::INFINITY;
    let mut k = 0;
    while 2 * k + 1 < rho.len() {
        let pair = rho[2 * k] + rho[2 * k + 1];
        if pair <= 0.0 {
            break;
        }
        let pair = pair.min(prev);
        sum += pair;
        prev = pair;
        k += 1;
    }
    Ok(Inefficiency {
        factor: (2.0 * sum - 1.0).max(f64::MIN_POSITIVE),
        constant: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimMetrics {
    pub av_mse: f64,
    pub av_var: f64,
    pub av_bias2: f64,
}

/// Averages over series of the draw variance (divisor `M`) and squared bias of the draw mean.
/// Each entry is `(draws, truth)`.
pub fn sim_study_metrics(series: &[(&[f64], f64)]) -> Result<SimMetrics> {
    if series.is_empty() {
        return Err(Error::InvalidParameter("no series to average".into()));
    }
    let mut av_var = 0.0;
    let mut av_bias2 = 0.0;
    for (draws, truth) in series {
        if draws.is_empty() {
            return Err(Error::EmptyDraws);
        }
        let m = draws.len() as f64;
        let e = draws.iter().sum::<f64>() / m;
        av_var += draws.iter().map(|v| (v - e).powi(2)).sum::<f64>() / m;
        av_bias2 += (e - truth).powi(2);
    }
    let n = series.len() as f64;
    let (av_var, av_bias2) = (av_var / n, av_bias2 / n);
    Ok(SimMetrics {
        av_mse: av_var + av_bias2,
        av_var,
        av_bias2,
    })
}
