use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::{path_centered, ChainState, ErrorVariance, SvState};

/// Acceptance bookkeeping for one Metropolis-Hastings move.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MhStats {
    pub proposed: u64,
    pub accepted: u64,
}

impl MhStats {
    pub fn record(&mut self, accepted: bool) {
        self.proposed += 1;
        self.accepted += accepted as u64;
    }

    pub fn rate(&self) -> f64 {
        if self.proposed == 0 {
            f64::NAN
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }

    fn merge(&mut self, other: &MhStats) {
        self.proposed += other.proposed;
        self.accepted += other.accepted;
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Counters {
    /// Post burn-in acceptance of the `a^xi` and `a^tau` moves.
    pub a_xi: MhStats,
    pub a_tau: MhStats,
    /// Interweaving draws where the centered path was exactly constant.
    pub degenerate_theta: u64,
    /// `sqrt_theta` draws replaced by the floor.
    pub floored_sqrt_theta: u64,
    /// Log-variances clamped to `[-700, 700]`.
    pub clamped_h: u64,
}

impl Counters {
    fn merge(&mut self, other: &Counters) {
        self.a_xi.merge(&other.a_xi);
        self.a_tau.merge(&other.a_tau);
        self.degenerate_theta += other.degenerate_theta;
        self.floored_sqrt_theta += other.floored_sqrt_theta;
        self.clamped_h += other.clamped_h;
    }
}

/// Thinned posterior draws, one column per scalar parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct DrawStore {
    n_obs: usize,
    n_cov: usize,
    sv: bool,
    names: Vec<String>,
    columns: Vec<Vec<f64>>,
    /// `beta_tilde_T` per draw, `d` entries each.
    beta_tilde_last: Vec<f64>,
    /// Full `h_0..h_T` paths per draw (stochastic volatility only).
    h_paths: Vec<f64>,
    /// Full `(T+1) x d` non-centered paths per draw, column-major, when requested.
    state_paths: Option<Vec<f64>>,
    pub counters: Counters,
}

/// One stored draw, unpacked.
#[derive(Debug, Clone, PartialEq)]
pub struct DrawView {
    pub beta: DVector<f64>,
    pub sqrt_theta: DVector<f64>,
    pub p0: DVector<f64>,
    pub beta_tilde_last: DVector<f64>,
    pub error: DrawError,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DrawError {
    Constant(f64),
    Stochastic(SvState),
}

impl DrawStore {
    pub fn new(n_obs: usize, n_cov: usize, sv: bool, store_states: bool) -> Self {
        let mut names = Vec::new();
        for prefix in ["beta", "sqrt_theta", "tau2", "xi2", "P0"] {
            for j in 1..=n_cov {
                names.push(format!("{prefix}_{j}"));
            }
        }
        names.extend(["a_xi", "a_tau", "kappa2", "lambda2"].map(String::from));
        if sv {
            names.extend(["sv_mu", "sv_phi", "sv_sigma2_eta"].map(String::from));
        } else {
            names.extend(["sigma2", "C0"].map(String::from));
        }
        let columns = vec![Vec::new(); names.len()];
        Self {
            n_obs,
            n_cov,
            sv,
            names,
            columns,
            beta_tilde_last: Vec::new(),
            h_paths: Vec::new(),
            state_paths: store_states.then(Vec::new),
            counters: Counters::default(),
        }
    }

    pub fn len(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn n_obs(&self) -> usize {
        self.n_obs
    }

    pub fn n_cov(&self) -> usize {
        self.n_cov
    }

    pub fn is_sv(&self) -> bool {
        self.sv
    }

    pub fn has_state_paths(&self) -> bool {
        self.state_paths.is_some()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn param(&self, name: &str) -> Option<&[f64]> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.columns[i].as_slice())
    }

    pub fn columns(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.names
            .iter()
            .map(String::as_str)
            .zip(self.columns.iter().map(Vec::as_slice))
    }

    pub fn push(&mut self, state: &ChainState) {
        let d = self.n_cov;
        let mut i = 0;
        let mut put = |v: f64, cols: &mut Vec<Vec<f64>>| {
            cols[i].push(v);
            i += 1;
        };
        for vec in [&state.beta, &state.sqrt_theta, &state.tau2, &state.xi2, &state.p0] {
            for j in 0..d {
                put(vec[j], &mut self.columns);
            }
        }
        for v in [state.a_xi, state.a_tau, state.kappa2, state.lambda2] {
            put(v, &mut self.columns);
        }
        match &state.error {
            ErrorVariance::Constant { sigma2, c0 } => {
                put(*sigma2, &mut self.columns);
                put(*c0, &mut self.columns);
            }
            ErrorVariance::Stochastic(sv) => {
                put(sv.mu, &mut self.columns);
                put(sv.phi, &mut self.columns);
                put(sv.sigma2_eta, &mut self.columns);
                self.h_paths.extend(sv.h.iter());
            }
        }
        let last = state.beta_tilde.nrows() - 1;
        self.beta_tilde_last.extend(state.beta_tilde.row(last).iter());
        if let Some(paths) = &mut self.state_paths {
            paths.extend(state.beta_tilde.iter());
        }
    }

    fn column(&self, prefix: &str, j: usize) -> &[f64] {
        self.param(&format!("{prefix}_{}", j + 1)).expect("known column")
    }

    /// Unpacks draw `m`.
    pub fn draw(&self, m: usize) -> DrawView {
        let d = self.n_cov;
        let get = |prefix: &str| DVector::from_fn(d, |j, _| self.column(prefix, j)[m]);
        let error = if self.sv {
            let t1 = self.n_obs + 1;
            DrawError::Stochastic(SvState {
                h: DVector::from_column_slice(&self.h_paths[m * t1..(m + 1) * t1]),
                mu: self.param("sv_mu").unwrap()[m],
                phi: self.param("sv_phi").unwrap()[m],
                sigma2_eta: self.param("sv_sigma2_eta").unwrap()[m],
            })
        } else {
            DrawError::Constant(self.param("sigma2").unwrap()[m])
        };
        DrawView {
            beta: get("beta"),
            sqrt_theta: get("sqrt_theta"),
            p0: get("P0"),
            beta_tilde_last: DVector::from_column_slice(&self.beta_tilde_last[m * d..(m + 1) * d]),
            error,
        }
    }

    /// Non-centered state path of draw `m`, if paths were kept.
    pub fn beta_tilde_path(&self, m: usize) -> Option<DMatrix<f64>> {
        let n = (self.n_obs + 1) * self.n_cov;
        self.state_paths
            .as_ref()
            .map(|p| DMatrix::from_column_slice(self.n_obs + 1, self.n_cov, &p[m * n..(m + 1) * n]))
    }

    /// Centered coefficient paths of draw `m`, rebuilt from the stored pieces.
    pub fn centered_path(&self, m: usize) -> Option<DMatrix<f64>> {
        let view = self.draw(m);
        self.beta_tilde_path(m)
            .map(|bt| path_centered(&view.beta, &view.sqrt_theta, &bt))
    }

    /// Log-variance path of draw `m` (stochastic volatility only).
    pub fn h_path(&self, m: usize) -> Option<DVector<f64>> {
        let t1 = self.n_obs + 1;
        self.sv
            .then(|| DVector::from_column_slice(&self.h_paths[m * t1..(m + 1) * t1]))
    }

    /// Concatenates stores from chains with identical layout.
    pub fn merge(stores: &[DrawStore]) -> Result<DrawStore> {
        let first = stores.first().ok_or(Error::EmptyDraws)?;
        let mut out = first.clone();
        for s in &stores[1..] {
            if s.names != out.names
                || s.n_obs != out.n_obs
                || s.state_paths.is_some() != out.state_paths.is_some()
            {
                return Err(Error::Dimension(
                    "cannot merge draw stores with different layouts".into(),
                ));
            }
            for (dst, src) in out.columns.iter_mut().zip(&s.columns) {
                dst.extend_from_slice(src);
            }
            out.beta_tilde_last.extend_from_slice(&s.beta_tilde_last);
            out.h_paths.extend_from_slice(&s.h_paths);
            if let (Some(dst), Some(src)) = (&mut out.state_paths, &s.state_paths) {
                dst.extend_from_slice(src);
            }
            out.counters.merge(&s.counters);
        }
        Ok(out)
    }
}
