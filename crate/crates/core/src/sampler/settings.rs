use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SamplerSettings {
    pub n_burnin: usize,
    /// Number of draws kept after thinning.
    pub n_draws: usize,
    pub thin: usize,
    /// Random-walk standard deviations on `log a^tau` and `log a^xi`.
    pub c_tau: f64,
    pub c_xi: f64,
    /// Relative floor on `|sqrt_theta|` after interweaving; caps `|beta_tilde|` at its inverse.
    pub sqrt_theta_floor: f64,
    /// Robbins-Monro tuning of `c_tau`, `c_xi` during burn-in.
    pub adapt_mh: bool,
    /// Run the centered interweaving step.
    pub interweave: bool,
    /// Flip the sign of `(sqrt_theta_j, beta_tilde_j)` with probability 1/2 each sweep.
    /// The posterior is invariant under the flip, and the chain rarely crosses zero otherwise.
    pub sign_flip: bool,
    /// Keep full state paths (needed for covariance reconstruction).
    pub store_states: bool,
}

impl Default for SamplerSettings {
    fn default() -> Self {
        Self {
            n_burnin: 2_000,
            n_draws: 10_000,
            thin: 1,
            c_tau: 1.0,
            c_xi: 1.0,
            sqrt_theta_floor: 1e-6,
            adapt_mh: false,
            interweave: true,
            sign_flip: true,
            store_states: false,
        }
    }
}

impl SamplerSettings {
    pub fn validate(&self) -> Result<()> {
        if self.thin == 0 {
            return Err(Error::InvalidParameter("thin must be at least 1".into()));
        }
        if !(self.c_tau > 0.0) || !(self.c_xi > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "MH scales must be positive, got c_tau = {}, c_xi = {}",
                self.c_tau, self.c_xi
            )));
        }
        if !(self.sqrt_theta_floor > 0.0) {
            return Err(Error::InvalidParameter(
                "sqrt_theta_floor must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Total number of sweeps, burn-in included.
    pub fn n_sweeps(&self) -> usize {
        self.n_burnin + self.n_draws * self.thin
    }
}
