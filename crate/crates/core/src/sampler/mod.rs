//! Gibbs sampler for the time-varying parameter model.

mod settings;
pub mod steps;
mod store;

use rand::Rng;

pub use settings::SamplerSettings;
pub use store::{Counters, DrawError, DrawStore, DrawView, MhStats};

use crate::error::{Error, Result};
use crate::model::{ChainState, Dataset, ErrorVariance, PriorConfig, PriorVariant};

/// One chain: data, prior, tuning and the current state.
#[derive(Debug, Clone)]
pub struct Sampler {
    data: Dataset,
    prior: PriorConfig,
    settings: SamplerSettings,
    state: ChainState,
    counters: Counters,
    c_xi: f64,
    c_tau: f64,
    sweeps_done: usize,
}

impl Sampler {
    pub fn new(data: Dataset, prior: PriorConfig, settings: SamplerSettings) -> Result<Self> {
        let state = ChainState::initial(&data, &prior);
        Self::with_state(data, prior, settings, state)
    }

    /// Starts from a given state, e.g. the last state of a previous run.
    pub fn with_state(
        data: Dataset,
        prior: PriorConfig,
        settings: SamplerSettings,
        state: ChainState,
    ) -> Result<Self> {
        prior.validate()?;
        settings.validate()?;
        if state.n_cov() != data.n_cov() {
            return Err(Error::Dimension(format!(
                "state has {} covariates, data has {}",
                state.n_cov(),
                data.n_cov()
            )));
        }
        let sv_state = matches!(state.error, ErrorVariance::Stochastic(_));
        if sv_state != prior.sv.is_some() {
            return Err(Error::InvalidParameter(
                "state error variance does not match the prior's volatility setting".into(),
            ));
        }
        let state = if state.n_obs() == data.n_obs() {
            state
        } else {
            extend_state(state, &data, &prior)
        };
        Ok(Self {
            c_xi: settings.c_xi,
            c_tau: settings.c_tau,
            data,
            prior,
            settings,
            state,
            counters: Counters::default(),
            sweeps_done: 0,
        })
    }

    pub fn state(&self) -> &ChainState {
        &self.state
    }

    pub fn data(&self) -> &Dataset {
        &self.data
    }

    /// Replaces the response, keeping the covariates. Used by successive-conditional checks.
    pub fn set_response(&mut self, y: nalgebra::DVector<f64>) -> Result<()> {
        if y.len() != self.data.n_obs() {
            return Err(Error::Dimension(format!(
                "response has {} rows, expected {}",
                y.len(),
                self.data.n_obs()
            )));
        }
        self.data.y = y;
        Ok(())
    }

    pub fn counters(&self) -> &Counters {
        &self.counters
    }

    /// Current random-walk scales `(c_xi, c_tau)`.
    pub fn mh_scales(&self) -> (f64, f64) {
        (self.c_xi, self.c_tau)
    }

    /// One full sweep. `record` controls whether MH acceptances enter the counters.
    pub fn sweep<R: Rng + ?Sized>(&mut self, rng: &mut R, record: bool) -> Result<()> {
        let n = self.sweeps_done;
        self.sweeps_done += 1;
        self.sweep_inner(rng, record).map_err(|e| Error::Sweep {
            sweep: n,
            source: Box::new(e),
            snapshot: Box::new(self.state.clone()),
        })
    }

    fn sweep_inner<R: Rng + ?Sized>(&mut self, rng: &mut R, record: bool) -> Result<()> {
        let st = &mut self.state;
        let prior = &self.prior;
        let floor = self.settings.sqrt_theta_floor;
        if st.n_cov() == 0 {
            // Pure error-variance model, e.g. the first row of a Cholesky system.
            return self.sweep_error_variance(rng);
        }
        steps::step_a_states(st, &self.data, rng)?;
        steps::step_b_alpha(st, &self.data, prior, rng)?;
        if self.settings.sign_flip {
            steps::step_sign_flip(st, rng);
        }
        if prior.variant == PriorVariant::InvertedGamma {
            steps::step_theta_inverted_gamma(st, prior, floor, &mut self.counters, rng)?;
        } else {
            if self.settings.interweave {
                steps::step_c_interweave(st, floor, &mut self.counters, rng)?;
            }
            let (xi, tau) = steps::step_d_mh_exponents(st, prior, self.c_xi, self.c_tau, rng)?;
            if record {
                if let Some(a) = xi {
                    self.counters.a_xi.record(a);
                }
                if let Some(a) = tau {
                    self.counters.a_tau.record(a);
                }
            } else if self.settings.adapt_mh {
                // Robbins-Monro towards 30% acceptance on the log scale of c.
                let gain = (self.sweeps_done as f64).powf(-0.6);
                if let Some(a) = xi {
                    self.c_xi *= (gain * (a as u8 as f64 - 0.3)).exp();
                }
                if let Some(a) = tau {
                    self.c_tau *= (gain * (a as u8 as f64 - 0.3)).exp();
                }
            }
            steps::step_e_prior_variances(st, prior, rng)?;
        }
        self.sweep_error_variance(rng)?;
        steps::step_g_p0(&mut self.state, &self.prior, rng);
        Ok(())
    }

    fn sweep_error_variance<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<()> {
        if self.prior.sv.is_some() {
            let clamped = steps::step_sv(&mut self.state, &self.data, &self.prior, rng)?;
            self.counters.clamped_h += clamped as u64;
        } else {
            steps::step_f_sigma2(&mut self.state, &self.data, &self.prior, rng)?;
        }
        Ok(())
    }

    /// Burn-in followed by thinned draws.
    pub fn run<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<DrawStore> {
        let s = &self.settings;
        let mut store = DrawStore::new(
            self.data.n_obs(),
            self.data.n_cov(),
            self.prior.sv.is_some(),
            s.store_states,
        );
        let (burn, draws, thin) = (s.n_burnin, s.n_draws, s.thin);
        for _ in 0..burn {
            self.sweep(rng, false)?;
        }
        for _ in 0..draws {
            for _ in 0..thin {
                self.sweep(rng, true)?;
            }
            store.push(&self.state);
        }
        store.counters = self.counters.clone();
        Ok(store)
    }

    pub fn into_state(self) -> ChainState {
        self.state
    }
}

/// Pads a state fitted on a shorter sample: new non-centered states continue as random walks
/// from the last one and new log-variances repeat the last value.
fn extend_state(mut state: ChainState, data: &Dataset, prior: &PriorConfig) -> ChainState {
    let t_new = data.n_obs();
    let t_old = state.n_obs();
    if t_new < t_old {
        return ChainState::initial(data, prior);
    }
    let d = state.n_cov();
    let mut bt = nalgebra::DMatrix::zeros(t_new + 1, d);
    bt.rows_mut(0, t_old + 1).copy_from(&state.beta_tilde);
    for t in t_old + 1..=t_new {
        for j in 0..d {
            bt[(t, j)] = bt[(t_old, j)];
        }
    }
    state.beta_tilde = bt;
    if let ErrorVariance::Stochastic(sv) = &mut state.error {
        let last = sv.h[t_old];
        let mut h = nalgebra::DVector::from_element(t_new + 1, last);
        h.rows_mut(0, t_old + 1).copy_from(&sv.h);
        sv.h = h;
    }
    state
}

/// Runs a single chain from the default initial state.
pub fn run_chain<R: Rng + ?Sized>(
    data: &Dataset,
    prior: &PriorConfig,
    settings: &SamplerSettings,
    rng: &mut R,
) -> Result<DrawStore> {
    Sampler::new(data.clone(), prior.clone(), settings.clone())?.run(rng)
}

/// Runs a chain from `init` and also returns the final state for later warm starts.
pub fn run_chain_from<R: Rng + ?Sized>(
    data: &Dataset,
    prior: &PriorConfig,
    settings: &SamplerSettings,
    init: ChainState,
    rng: &mut R,
) -> Result<(DrawStore, ChainState)> {
    let mut s = Sampler::with_state(data.clone(), prior.clone(), settings.clone(), init)?;
    let store = s.run(rng)?;
    Ok((store, s.into_state()))
}
