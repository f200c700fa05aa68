use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::special::{log_bessel_k, log_bessel_k_log_arg};

/// Seed for stream `index` derived from a master seed (one SplitMix64 step).
pub fn split_seed(master: u64, index: u64) -> u64 {
    let mut z = master.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn std_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// Natural log of a `Gamma(shape, rate)` draw. Stays finite for tiny shapes, where the
/// draw itself can underflow.
pub fn log_gamma_draw<R: Rng + ?Sized>(shape: f64, rate: f64, rng: &mut R) -> f64 {
    debug_assert!(shape > 0.0 && rate > 0.0, "shape {shape}, rate {rate}");
    if shape >= 1.0 {
        let g: f64 = Gamma::new(shape, 1.0).expect("valid gamma shape").sample(rng);
        g.ln() - rate.ln()
    } else {
        // G(a) = G(a + 1) U^{1/a}
        let g: f64 = Gamma::new(shape + 1.0, 1.0)
            .expect("valid gamma shape")
            .sample(rng);
        let u: f64 = rng.random::<f64>();
        let u = if u > 0.0 { u } else { f64::MIN_POSITIVE };
        g.ln() + u.ln() / shape - rate.ln()
    }
}

/// `Gamma(shape, rate)`, kept inside the positive normal range.
pub fn gamma_draw<R: Rng + ?Sized>(shape: f64, rate: f64, rng: &mut R) -> f64 {
    clamp_positive(log_gamma_draw(shape, rate, rng).exp())
}

/// `InvGamma(shape, scale)`, density proportional to `x^{-shape-1} exp(-scale / x)`.
pub fn inv_gamma_draw<R: Rng + ?Sized>(shape: f64, scale: f64, rng: &mut R) -> f64 {
    clamp_positive((scale.ln() - log_gamma_draw(shape, 1.0, rng)).exp())
}

fn clamp_positive(x: f64) -> f64 {
    x.clamp(f64::MIN_POSITIVE, f64::MAX)
}

/// Parameters of the generalized inverse Gaussian density `y^{p-1} exp(-(a y + b / y) / 2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GigParams {
    pub p: f64,
    pub a: f64,
    pub b: f64,
}

impl GigParams {
    /// Validates the triple. `a` may vanish only for `p < 0` and `b` only for `p > 0`.
    pub fn new(p: f64, a: f64, b: f64) -> Result<Self> {
        let params = Self { p, a, b };
        params.validate()?;
        Ok(params)
    }

    fn validate(&self) -> Result<()> {
        let Self { p, a, b } = *self;
        let bad = |reason: &str| Error::Gig {
            p,
            a,
            b,
            reason: reason.to_string(),
        };
        if !p.is_finite() || !(a >= 0.0) || !(b >= 0.0) || !a.is_finite() || !b.is_finite() {
            return Err(bad("parameters must be finite with a, b >= 0"));
        }
        if a == 0.0 && !(p < 0.0) {
            return Err(bad("a = 0 requires p < 0"));
        }
        if b == 0.0 && !(p > 0.0) {
            return Err(bad("b = 0 requires p > 0"));
        }
        Ok(())
    }
}

/// Draws from `GIG(p, a, b)`.
///
/// Uses ratio-of-uniforms (with and without mode shift) for moderate parameters, a
/// dedicated rejection scheme for `|p| < 1` with small `sqrt(ab)`, and the inverse
/// Gaussian for `p = -1/2`. Vanishing `a` or `b` fall back to the exact inverse gamma
/// and gamma limits.
pub fn gig_draw<R: Rng + ?Sized>(params: &GigParams, rng: &mut R) -> Result<f64> {
    params.validate()?;
    let GigParams { p, a, b } = *params;
    if b == 0.0 {
        return Ok(gamma_draw(p, a / 2.0, rng));
    }
    if a == 0.0 {
        return Ok(inv_gamma_draw(-p, b / 2.0, rng));
    }
    let lambda = p.abs();
    // Work with log(sqrt(ab)) so that products below the double range stay usable.
    let log_omega = 0.5 * (a.ln() + b.ln());
    let omega = log_omega.exp();
    let log_alpha = 0.5 * (b.ln() - a.ln());
    if p == -0.5 && omega > 1e-8 {
        return Ok(clamp_positive(inverse_gaussian(log_alpha.exp(), b, rng)));
    }
    let log_x = if lambda >= 1.0 && omega < 1e-8 {
        // The 1/x term only cuts the density below x ~ omega, where a gamma with shape >= 1
        // has mass of order omega^2.
        log_gamma_draw(lambda, 0.5, rng) - log_omega
    } else if lambda > 2.0 || omega > 3.0 {
        rou_shift(lambda, omega, rng).ln()
    } else if lambda >= 1.0 - 2.25 * omega * omega || omega > 0.2 {
        rou_noshift(lambda, omega, rng).ln()
    } else {
        new_approach(lambda, log_omega, rng)
    };
    let log_y = if p < 0.0 {
        log_alpha - log_x
    } else {
        log_alpha + log_x
    };
    let y = log_y.exp();
    if y.is_nan() {
        return Err(Error::Gig {
            p,
            a,
            b,
            reason: "sampler produced NaN".into(),
        });
    }
    Ok(clamp_positive(y))
}

/// Mode of the standardized density `x^{lambda-1} exp(-omega (x + 1/x) / 2)`.
fn gig_mode(lambda: f64, omega: f64) -> f64 {
    if lambda >= 1.0 {
        ((lambda - 1.0).hypot(omega) + (lambda - 1.0)) / omega
    } else {
        omega / ((1.0 - lambda).hypot(omega) + (1.0 - lambda))
    }
}

fn rou_noshift<R: Rng + ?Sized>(lambda: f64, omega: f64, rng: &mut R) -> f64 {
    let t = 0.5 * (lambda - 1.0);
    let s = 0.25 * omega;
    let xm = gig_mode(lambda, omega);
    let nc = t * xm.ln() - s * (xm + 1.0 / xm);
    let ym = ((lambda + 1.0) + (lambda + 1.0).hypot(omega)) / omega;
    let um = (0.5 * (lambda + 1.0) * ym.ln() - s * (ym + 1.0 / ym) - nc).exp();
    loop {
        let u = um * rng.random::<f64>();
        let v: f64 = rng.random();
        let x = u / v;
        if x > 0.0 && x.is_finite() && v.ln() <= t * x.ln() - s * (x + 1.0 / x) - nc {
            return x;
        }
    }
}

fn rou_shift<R: Rng + ?Sized>(lambda: f64, omega: f64, rng: &mut R) -> f64 {
    let t = 0.5 * (lambda - 1.0);
    let s = 0.25 * omega;
    let xm = gig_mode(lambda, omega);
    let nc = t * xm.ln() - s * (xm + 1.0 / xm);
    // Roots of the cubic locating the bounding rectangle.
    let a = -(2.0 * (lambda + 1.0) / omega + xm);
    let b = 2.0 * (lambda - 1.0) * xm / omega - 1.0;
    let c = xm;
    let p = b - a * a / 3.0;
    let q = (2.0 * a * a * a) / 27.0 - (a * b) / 3.0 + c;
    let fi = (-q / (2.0 * (-(p * p * p) / 27.0).sqrt()))
        .clamp(-1.0, 1.0)
        .acos();
    let fak = 2.0 * (-p / 3.0).sqrt();
    let y1 = fak * (fi / 3.0).cos() - a / 3.0;
    let y2 = fak * (fi / 3.0 + 4.0 / 3.0 * PI).cos() - a / 3.0;
    let uplus = (y1 - xm) * (t * y1.ln() - s * (y1 + 1.0 / y1) - nc).exp();
    let uminus = (y2 - xm) * (t * y2.ln() - s * (y2 + 1.0 / y2) - nc).exp();
    loop {
        let u = uminus + rng.random::<f64>() * (uplus - uminus);
        let v: f64 = rng.random();
        let x = u / v + xm;
        if x > 0.0 && x.is_finite() && v.ln() <= t * x.ln() - s * (x + 1.0 / x) - nc {
            return x;
        }
    }
}

/// `ln(U e^z + 1 - U)` for `z >= 0` without overflow.
fn log_mix_exp(u: f64, z: f64) -> f64 {
    z + (-(1.0 - u) * -(-z).exp_m1()).ln_1p()
}

/// Rejection from a three-piece hat for `0 <= lambda < 1` and small `omega`, everything in
/// log space so `omega` may lie far below the double range. Returns the log of the draw.
fn new_approach<R: Rng + ?Sized>(lambda: f64, log_omega: f64, rng: &mut R) -> f64 {
    let om = |lx: f64| (log_omega + lx).exp();
    let log_f = |lx: f64| (lambda - 1.0) * lx - 0.5 * (om(lx) + om(-lx));
    let omega = log_omega.exp();
    let lam1 = 1.0 - lambda;
    let lx0 = log_omega - lam1.ln();
    let l2w = std::f64::consts::LN_2 - log_omega;
    let lxm = log_omega - (lam1.hypot(omega) + lam1).ln();
    let log_k0 = log_f(lxm);
    let log_a0 = log_k0 + lx0;
    // Middle piece k1 x^{lambda-1} on (x0, 2/omega), k1 = exp(-omega).
    let width = (l2w - lx0).max(0.0);
    let log_k1 = -omega;
    let z = lambda * width;
    let log_a1 = if width == 0.0 {
        f64::NEG_INFINITY
    } else if lambda == 0.0 {
        log_k1 + width.ln()
    } else {
        log_k1 + lambda * lx0 + z + (-(-z).exp_m1()).ln() - lambda.ln()
    };
    // Exponential tail k2 exp(-omega x / 2) beyond max(x0, 2/omega).
    let lxs = lx0.max(l2w);
    let log_k2 = (lambda - 1.0) * lxs;
    let half_ws = 0.5 * om(lxs);
    let log_a2 = log_k2 + l2w - half_ws;
    let top = log_a0.max(log_a1).max(log_a2);
    let (w0, w1, w2) = ((log_a0 - top).exp(), (log_a1 - top).exp(), (log_a2 - top).exp());
    let total = w0 + w1 + w2;
    loop {
        let v = total * rng.random::<f64>();
        let u: f64 = rng.random();
        let (lx, log_h) = if v < w0 {
            (lx0 + u.ln(), log_k0)
        } else if v < w0 + w1 {
            let lx = if lambda == 0.0 {
                lx0 + u * width
            } else {
                lx0 + log_mix_exp(u, z) / lambda
            };
            (lx, log_k1 + (lambda - 1.0) * lx)
        } else {
            let e = -(1.0 - u).ln();
            // x = x_s + 2 e / omega, with omega x_s >= 2
            let lx = lxs + (e / half_ws).ln_1p();
            (lx, log_k2 - half_ws - e)
        };
        if !lx.is_finite() {
            continue;
        }
        let acc: f64 = rng.random();
        if acc.ln() + log_h <= log_f(lx) {
            return lx;
        }
    }
}

/// Inverse Gaussian with mean `mu` and shape `shape`.
pub fn inverse_gaussian<R: Rng + ?Sized>(mu: f64, shape: f64, rng: &mut R) -> f64 {
    let n = std_normal(rng);
    let u = mu * n * n / (2.0 * shape);
    // Smaller root of the quadratic, in a cancellation-free form.
    let x1 = mu / (1.0 + u + u.sqrt() * (2.0 + u).sqrt());
    if rng.random::<f64>() * (mu + x1) <= mu {
        x1
    } else {
        mu * (mu / x1)
    }
}

/// `E[Y^k]` for `Y ~ GIG(p, a, b)`.
pub fn gig_moment(params: &GigParams, k: i32) -> Result<f64> {
    Ok(log_gig_moment(params, k)?.exp())
}

pub fn log_gig_moment(params: &GigParams, k: i32) -> Result<f64> {
    params.validate()?;
    let GigParams { p, a, b } = *params;
    let kf = k as f64;
    if b == 0.0 {
        // Gamma(p, a/2)
        if p + kf <= 0.0 {
            return Ok(f64::INFINITY);
        }
        return Ok(ln_gamma(p + kf) - ln_gamma(p) + kf * (2.0 / a).ln());
    }
    if a == 0.0 {
        // InvGamma(-p, b/2)
        if -p - kf <= 0.0 {
            return Ok(f64::INFINITY);
        }
        return Ok(ln_gamma(-p - kf) - ln_gamma(-p) + kf * (b / 2.0).ln());
    }
    let omega = (0.5 * (a.ln() + b.ln())).exp();
    if omega == 0.0 {
        return Err(Error::Gig {
            p,
            a,
            b,
            reason: "sqrt(ab) underflows".into(),
        });
    }
    Ok(log_bessel_k(p + kf, omega)? - log_bessel_k(p, omega)? + 0.5 * kf * (b.ln() - a.ln()))
}

/// Log density of `sqrt(theta)` (or `beta`) under the double gamma prior with exponent
/// `a` and global scale `kappa2`.
///
/// At `x = 0` this has a finite limit only when `a > 1/2`.
pub fn log_marginal_sqrt_theta(x: f64, a: f64, kappa2: f64) -> Result<f64> {
    if !(a > 0.0) || !(kappa2 > 0.0) {
        return Err(Error::Domain(format!(
            "need a > 0 and kappa2 > 0, got {a} and {kappa2}"
        )));
    }
    let log_c = 0.5 * (a * kappa2).ln();
    let nu = a - 0.5;
    let base = (a + 0.5) * log_c - 0.5 * PI.ln() - nu * 2f64.ln() - ln_gamma(a);
    let ax = x.abs();
    if ax == 0.0 {
        if a <= 0.5 {
            return Err(Error::InfiniteDensity { shape: a });
        }
        return Ok(log_c - 0.5 * PI.ln() - 2f64.ln() - ln_gamma(a) + ln_gamma(nu));
    }
    Ok(base + nu * ax.ln() + log_bessel_k_log_arg(nu, log_c + ax.ln())?)
}

/// The marginal of `beta_j` has the same form with `(a^tau, lambda2)`.
pub fn log_marginal_beta(x: f64, a_tau: f64, lambda2: f64) -> Result<f64> {
    log_marginal_sqrt_theta(x, a_tau, lambda2)
}

/// Forward draw from the double gamma prior: `xi2 ~ Gamma(a, a kappa2 / 2)`, then
/// `theta ~ Gamma(1/2, 1 / (2 xi2))`. Returns `(theta, xi2)`.
pub fn draw_double_gamma_theta<R: Rng + ?Sized>(a_xi: f64, kappa2: f64, rng: &mut R) -> (f64, f64) {
    let xi2 = gamma_draw(a_xi, a_xi * kappa2 / 2.0, rng);
    let theta = gamma_draw(0.5, 1.0 / (2.0 * xi2), rng);
    (theta, xi2)
}

/// Log density of an exponential with the given rate.
pub fn log_exponential(x: f64, rate: f64) -> f64 {
    if x < 0.0 {
        f64::NEG_INFINITY
    } else {
        rate.ln() - rate * x
    }
}

/// Log density of `N(mean, var)`.
pub fn log_normal_density(x: f64, mean: f64, var: f64) -> f64 {
    -0.5 * ((2.0 * PI * var).ln() + (x - mean) * (x - mean) / var)
}
