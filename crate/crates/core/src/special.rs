use statrs::function::gamma::ln_gamma;
use std::f64::consts::PI;

use crate::error::{Error, Result};

const EPS: f64 = 1e-16;
const MAX_ITER: usize = 100_000;

// Chebyshev expansions of gamma1(mu) and gamma2(mu) on |mu| <= 1/2.
const C1: [f64; 7] = [
    -1.142022680371168e0,
    6.5165112670737e-3,
    3.087090173086e-4,
    -3.4706269649e-6,
    6.9437664e-9,
    3.67795e-11,
    -1.356e-13,
];
const C2: [f64; 8] = [
    1.843740587300905e0,
    -7.68528408447867e-2,
    1.2719271366546e-3,
    -4.9717367042e-6,
    -3.31261198e-8,
    2.423096e-10,
    -1.702e-13,
    -1.49e-15,
];

fn chebev(c: &[f64], x: f64) -> f64 {
    let (mut d, mut dd) = (0.0, 0.0);
    for &cj in c[1..].iter().rev() {
        let sv = d;
        d = 2.0 * x * d - dd + cj;
        dd = sv;
    }
    x * d - dd + 0.5 * c[0]
}

/// Returns `(log K_mu(x), x K_{mu+1}(x) / K_mu(x))` for `|mu| <= 1/2`.
fn bessel_k_low_order(mu: f64, x: f64) -> (f64, f64) {
    if x <= 2.0 {
        // Temme's series.
        let x2 = 0.5 * x;
        let pimu = PI * mu;
        let fact = if pimu.abs() < EPS { 1.0 } else { pimu / pimu.sin() };
        let d = -x2.ln();
        let e = mu * d;
        let fact2 = if e.abs() < EPS { 1.0 } else { e.sinh() / e };
        let xx = 8.0 * mu * mu - 1.0;
        let gam1 = chebev(&C1, xx);
        let gam2 = chebev(&C2, xx);
        let gampl = gam2 - mu * gam1;
        let gammi = gam2 + mu * gam1;
        let mut ff = fact * (gam1 * e.cosh() + gam2 * fact2 * d);
        let mut sum = ff;
        let ee = e.exp();
        let mut p = 0.5 * ee / gampl;
        let mut q = 0.5 / (ee * gammi);
        let mut c = 1.0;
        let dsq = x2 * x2;
        let mut sum1 = p;
        let mu2 = mu * mu;
        for i in 1..MAX_ITER {
            let fi = i as f64;
            ff = (fi * ff + p + q) / (fi * fi - mu2);
            c *= dsq / fi;
            p /= fi - mu;
            q /= fi + mu;
            let del = c * ff;
            sum += del;
            sum1 += c * (p - fi * ff);
            if del.abs() < sum.abs() * EPS {
                break;
            }
        }
        (sum.ln(), 2.0 * sum1 / sum)
    } else {
        // Steed's continued fraction.
        let mut b = 2.0 * (1.0 + x);
        let mut d = 1.0 / b;
        let mut h = d;
        let mut delh = d;
        let (mut q1, mut q2) = (0.0, 1.0);
        let a1 = 0.25 - mu * mu;
        let mut q = a1;
        let mut c = a1;
        let mut a = -a1;
        let mut s = 1.0 + q * delh;
        for i in 2..MAX_ITER {
            let fi = i as f64;
            a -= 2.0 * (fi - 1.0);
            c = -a * c / fi;
            let qnew = (q1 - b * q2) / a;
            q1 = q2;
            q2 = qnew;
            q += c * qnew;
            b += 2.0;
            d = 1.0 / (b + a * d);
            delh *= b * d - 1.0;
            h += delh;
            let dels = q * delh;
            s += dels;
            if (dels / s).abs() < EPS {
                break;
            }
        }
        h *= a1;
        let log_k = 0.5 * (PI / (2.0 * x)).ln() - x - s.ln();
        (log_k, mu + x + 0.5 - h)
    }
}

/// Logarithm of the modified Bessel function of the second kind, `log K_p(x)`.
///
/// Works in log scale throughout, so it stays finite for `x` down to the smallest
/// positive doubles and for orders in the thousands.
pub fn log_bessel_k(p: f64, x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("log_bessel_k needs x > 0, got {x}")));
    }
    if !p.is_finite() {
        return Err(Error::Domain(format!(
            "log_bessel_k needs a finite order, got {p}"
        )));
    }
    let nu = p.abs();
    let n = (nu + 0.5).floor();
    let mu = nu - n;
    let (mut log_k, mut q) = bessel_k_low_order(mu, x);
    let log_x = x.ln();
    let x2 = x * x;
    let n = n as usize;
    for k in 0..n {
        // q_k = x K_{mu+k+1} / K_{mu+k}
        if k > 0 {
            q = x2 / q + 2.0 * (mu + k as f64);
        }
        log_k += q.ln() - log_x;
    }
    Ok(log_k)
}

/// `log K_p(x)` given `log x`, for arguments that would underflow as doubles.
///
/// Below `log x = -700` the leading terms of the small-argument expansion are exact to
/// double precision.
pub fn log_bessel_k_log_arg(p: f64, log_x: f64) -> Result<f64> {
    if log_x > -700.0 {
        return log_bessel_k(p, log_x.exp());
    }
    if !p.is_finite() || log_x.is_nan() {
        return Err(Error::Domain(format!(
            "log_bessel_k needs finite arguments, got {p} and {log_x}"
        )));
    }
    const EULER: f64 = 0.577_215_664_901_532_9;
    let nu = p.abs();
    let log_u = log_x - 2f64.ln();
    if nu < 1e-12 {
        return Ok((-log_u - EULER).ln());
    }
    if nu < 1.0 {
        // K = pi / (2 sin(nu pi)) * (I_{-nu} - I_nu) with both I at their leading term.
        let w = 2.0 * nu * log_u + ln_gamma(1.0 - nu) - ln_gamma(1.0 + nu);
        return Ok(
            (PI / (2.0 * (nu * PI).sin())).ln() - nu * log_u - ln_gamma(1.0 - nu) + (-w.exp_m1()).ln(),
        );
    }
    Ok(ln_gamma(nu) - 2f64.ln() - nu * log_u)
}

/// `log(sum(exp(v)))` without overflow. Returns `-inf` for an empty slice.
pub fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// `log(mean(exp(v)))`.
pub fn log_mean_exp(v: &[f64]) -> f64 {
    log_sum_exp(v) - (v.len() as f64).ln()
}
