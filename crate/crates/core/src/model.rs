use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Response vector, design matrix and an optional training cutoff.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub y: DVector<f64>,
    pub x: DMatrix<f64>,
    pub t0: Option<usize>,
}

impl Dataset {
    pub fn new(y: DVector<f64>, x: DMatrix<f64>) -> Result<Self> {
        if y.len() != x.nrows() {
            return Err(Error::Dimension(format!(
                "y has {} rows but X has {}",
                y.len(),
                x.nrows()
            )));
        }
        if y.len() < 2 {
            return Err(Error::Dimension(format!("need T >= 2, got {}", y.len())));
        }
        if y.iter().chain(x.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("data contain non-finite values".into()));
        }
        Ok(Self { y, x, t0: None })
    }

    /// Number of observations.
    pub fn n_obs(&self) -> usize {
        self.y.len()
    }

    /// Number of covariates.
    pub fn n_cov(&self) -> usize {
        self.x.ncols()
    }

    /// The first `t` observations.
    pub fn head(&self, t: usize) -> Dataset {
        Dataset {
            y: self.y.rows(0, t).into_owned(),
            x: self.x.rows(0, t).into_owned(),
            t0: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PriorVariant {
    #[default]
    DoubleGamma,
    BayesianLasso,
    InvertedGamma,
}

/// Hyperparameters of the stochastic volatility block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvPrior {
    /// Prior mean of the level `mu`.
    pub b_mu: f64,
    /// Prior variance of the level `mu`.
    pub big_b_mu: f64,
    /// Beta prior on `(phi + 1) / 2`.
    pub a0: f64,
    pub b0: f64,
    /// `sigma2_eta ~ Gamma(1/2, 1/(2 B_sigma))`.
    pub big_b_sigma: f64,
}

impl Default for SvPrior {
    fn default() -> Self {
        Self {
            b_mu: 0.0,
            big_b_mu: 100.0,
            a0: 20.0,
            b0: 1.5,
            big_b_sigma: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PriorConfig {
    pub variant: PriorVariant,
    pub d1: f64,
    pub d2: f64,
    pub e1: f64,
    pub e2: f64,
    pub b_xi: f64,
    pub b_tau: f64,
    pub fixed_a_xi: Option<f64>,
    pub fixed_a_tau: Option<f64>,
    /// Inverted gamma variant: `theta_j ~ InvGamma(s0, big_s0)`.
    pub s0: f64,
    pub big_s0: f64,
    /// Inverted gamma variant: `beta_j ~ N(0, a0_beta)`.
    pub a0_beta: f64,
    pub nu_p: f64,
    pub c_p: f64,
    pub c0: f64,
    pub g0: f64,
    pub sigma2_guess: f64,
    pub sv: Option<SvPrior>,
    /// Hold the global scales fixed instead of sampling them.
    pub fixed_kappa2: Option<f64>,
    pub fixed_lambda2: Option<f64>,
    /// Hold the error variance fixed (homoscedastic mode only).
    pub fixed_sigma2: Option<f64>,
    pub fixed_p0: Option<f64>,
}

impl Default for PriorConfig {
    fn default() -> Self {
        Self {
            variant: PriorVariant::DoubleGamma,
            d1: 0.001,
            d2: 0.001,
            e1: 0.001,
            e2: 0.001,
            b_xi: 10.0,
            b_tau: 10.0,
            fixed_a_xi: None,
            fixed_a_tau: None,
            s0: 0.1,
            big_s0: 0.001,
            a0_beta: 10.0,
            nu_p: 20.0,
            c_p: 1.0,
            c0: 2.5,
            g0: 5.0,
            sigma2_guess: 1.0,
            sv: None,
            fixed_kappa2: None,
            fixed_lambda2: None,
            fixed_sigma2: None,
            fixed_p0: None,
        }
    }
}

impl PriorConfig {
    pub fn double_gamma() -> Self {
        Self::default()
    }

    pub fn lasso() -> Self {
        Self {
            variant: PriorVariant::BayesianLasso,
            ..Self::default()
        }
    }

    pub fn inverted_gamma() -> Self {
        Self {
            variant: PriorVariant::InvertedGamma,
            ..Self::default()
        }
    }

    /// Rate `G0` of the gamma prior on `C0`, set from the prior guess of the error variance.
    pub fn big_g0(&self) -> f64 {
        self.g0 / (self.sigma2_guess * (self.c0 - 1.0))
    }

    /// Fixed value of `a^xi`, if any. The Lasso pins both exponents to one.
    pub fn a_xi_fixed(&self) -> Option<f64> {
        match self.variant {
            PriorVariant::BayesianLasso => Some(1.0),
            _ => self.fixed_a_xi,
        }
    }

    pub fn a_tau_fixed(&self) -> Option<f64> {
        match self.variant {
            PriorVariant::BayesianLasso => Some(1.0),
            _ => self.fixed_a_tau,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("d1", self.d1),
            ("d2", self.d2),
            ("e1", self.e1),
            ("e2", self.e2),
            ("s0", self.s0),
            ("S0", self.big_s0),
            ("A0_beta", self.a0_beta),
            ("nu_P", self.nu_p),
            ("c_P", self.c_p),
            ("c0", self.c0),
            ("g0", self.g0),
            ("sigma2_guess", self.sigma2_guess),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if !(self.b_xi >= 1.0) || !(self.b_tau >= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "b_xi and b_tau must be >= 1, got {} and {}",
                self.b_xi, self.b_tau
            )));
        }
        if self.c0 <= 1.0 {
            return Err(Error::InvalidParameter(format!(
                "c0 must exceed 1, got {}",
                self.c0
            )));
        }
        let optional = [
            ("fixed_a_xi", self.fixed_a_xi),
            ("fixed_a_tau", self.fixed_a_tau),
            ("fixed_kappa2", self.fixed_kappa2),
            ("fixed_lambda2", self.fixed_lambda2),
            ("fixed_sigma2", self.fixed_sigma2),
            ("fixed_p0", self.fixed_p0),
        ];
        for (name, v) in optional {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(Error::InvalidParameter(format!(
                        "{name} must be positive, got {v}"
                    )));
                }
            }
        }
        if let Some(sv) = &self.sv {
            if self.fixed_sigma2.is_some() {
                return Err(Error::InvalidParameter(
                    "fixed_sigma2 and stochastic volatility are mutually exclusive".into(),
                ));
            }
            for (name, v) in [
                ("B_mu", sv.big_b_mu),
                ("a0", sv.a0),
                ("b0", sv.b0),
                ("B_sigma", sv.big_b_sigma),
            ] {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(Error::InvalidParameter(format!(
                        "sv.{name} must be positive, got {v}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Log-volatility path and its AR(1) parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SvState {
    /// `h_0, ..., h_T`.
    pub h: DVector<f64>,
    pub mu: f64,
    pub phi: f64,
    pub sigma2_eta: f64,
}

impl SvState {
    /// Observation variances `exp(h_1), ..., exp(h_T)`.
    pub fn variances(&self) -> DVector<f64> {
        DVector::from_iterator(self.h.len() - 1, self.h.iter().skip(1).map(|h| h.exp()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ErrorVariance {
    Constant { sigma2: f64, c0: f64 },
    Stochastic(SvState),
}

/// One complete set of latent states and parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainState {
    /// Non-centered states, `(T+1) x d`, row 0 is the initial state.
    pub beta_tilde: DMatrix<f64>,
    pub beta: DVector<f64>,
    pub sqrt_theta: DVector<f64>,
    pub xi2: DVector<f64>,
    pub tau2: DVector<f64>,
    pub a_xi: f64,
    pub a_tau: f64,
    pub kappa2: f64,
    pub lambda2: f64,
    pub p0: DVector<f64>,
    pub error: ErrorVariance,
}

impl ChainState {
    /// Default starting values for a dataset.
    pub fn initial(data: &Dataset, prior: &PriorConfig) -> Self {
        let t = data.n_obs();
        let d = data.n_cov();
        let n = t as f64;
        let mean = data.y.mean();
        let var = data.y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let var = if var > 0.0 { var } else { 1.0 };
        let error = match &prior.sv {
            Some(sv) => SvState {
                h: DVector::from_element(t + 1, var.ln()),
                mu: var.ln(),
                phi: 2.0 * sv.a0 / (sv.a0 + sv.b0) - 1.0,
                sigma2_eta: 0.1,
            }
            .into(),
            None => ErrorVariance::Constant {
                sigma2: prior.fixed_sigma2.unwrap_or(var),
                c0: prior.g0 / prior.big_g0(),
            },
        };
        let ig = prior.variant == PriorVariant::InvertedGamma;
        let p0 = prior.fixed_p0.unwrap_or(1.0);
        Self {
            beta_tilde: DMatrix::zeros(t + 1, d),
            beta: DVector::zeros(d),
            sqrt_theta: DVector::from_element(d, 0.1),
            xi2: DVector::from_element(d, 1.0),
            tau2: DVector::from_element(d, if ig { prior.a0_beta } else { 1.0 }),
            a_xi: prior.a_xi_fixed().unwrap_or(0.1),
            a_tau: prior.a_tau_fixed().unwrap_or(0.1),
            kappa2: prior.fixed_kappa2.unwrap_or(20.0),
            lambda2: prior.fixed_lambda2.unwrap_or(20.0),
            p0: DVector::from_element(d, p0),
            error,
        }
    }

    pub fn n_obs(&self) -> usize {
        self.beta_tilde.nrows() - 1
    }

    pub fn n_cov(&self) -> usize {
        self.beta.len()
    }

    /// `theta_j = sqrt_theta_j^2`.
    pub fn theta(&self) -> DVector<f64> {
        self.sqrt_theta.map(|s| s * s)
    }

    /// Observation variances `sigma2_1..sigma2_T`.
    pub fn sigma2_t(&self) -> DVector<f64> {
        match &self.error {
            ErrorVariance::Constant { sigma2, .. } => DVector::from_element(self.n_obs(), *sigma2),
            ErrorVariance::Stochastic(sv) => sv.variances(),
        }
    }

    /// Centered coefficient paths.
    pub fn centered(&self) -> DMatrix<f64> {
        path_centered(&self.beta, &self.sqrt_theta, &self.beta_tilde)
    }
}

impl From<SvState> for ErrorVariance {
    fn from(sv: SvState) -> Self {
        ErrorVariance::Stochastic(sv)
    }
}

/// `beta_jt = beta_j + sqrt_theta_j * beta_tilde_jt`.
pub fn path_centered(
    beta: &DVector<f64>,
    sqrt_theta: &DVector<f64>,
    beta_tilde: &DMatrix<f64>,
) -> DMatrix<f64> {
    let mut out = beta_tilde.clone();
    for (j, mut col) in out.column_iter_mut().enumerate() {
        col.apply(|v| *v = beta[j] + sqrt_theta[j] * *v);
    }
    out
}

/// `beta_tilde_jt = (beta_jt - beta_j) / sqrt_theta_j`.
pub fn path_noncentered(
    beta_path: &DMatrix<f64>,
    beta_new: &DVector<f64>,
    sqrt_theta_new: &DVector<f64>,
) -> Result<DMatrix<f64>> {
    if let Some(index) = sqrt_theta_new.iter().position(|s| *s == 0.0) {
        return Err(Error::ZeroScale { index });
    }
    let mut out = beta_path.clone();
    for (j, mut col) in out.column_iter_mut().enumerate() {
        col.apply(|v| *v = (*v - beta_new[j]) / sqrt_theta_new[j]);
    }
    Ok(out)
}

/// Centers and scales every column except the intercept to unit sample variance.
///
/// Returns the standardized matrix, column means and column standard deviations.
/// The intercept column reports mean 0 and sd 1.
pub fn standardize_covariates(
    x: &DMatrix<f64>,
    intercept_col: Option<usize>,
) -> Result<(DMatrix<f64>, DVector<f64>, DVector<f64>)> {
    let n = x.nrows();
    if n < 2 {
        return Err(Error::Dimension("need at least two rows to standardize".into()));
    }
    let d = x.ncols();
    let mut out = x.clone();
    let mut means = DVector::zeros(d);
    let mut sds = DVector::from_element(d, 1.0);
    for j in 0..d {
        if Some(j) == intercept_col {
            continue;
        }
        let col = x.column(j);
        let mean = col.mean();
        let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        if !(var > 0.0) {
            return Err(Error::DegenerateCovariate { column: j });
        }
        let sd = var.sqrt();
        out.column_mut(j).apply(|v| *v = (*v - mean) / sd);
        means[j] = mean;
        sds[j] = sd;
    }
    Ok((out, means, sds))
}

/// Parameters of a synthetic TVP data set.
#[derive(Debug, Clone, PartialEq)]
pub struct SimSpec {
    pub n_obs: usize,
    pub beta: Vec<f64>,
    pub theta: Vec<f64>,
    pub sigma2: f64,
}

impl SimSpec {
    /// Three covariates with one time-varying intercept, one static and one zero coefficient.
    pub fn reference() -> Self {
        Self {
            n_obs: 200,
            beta: vec![1.5, -0.3, 0.0],
            theta: vec![0.02, 0.0, 0.0],
            sigma2: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimTruth {
    pub beta_true: DVector<f64>,
    pub theta_true: DVector<f64>,
    pub sigma2_true: f64,
    /// `(T+1) x d` coefficient paths, row 0 is the initial state.
    pub paths: DMatrix<f64>,
}

/// Draws a data set with an intercept in column 0 and standard normal covariates elsewhere.
///
/// Initial states are drawn as `beta_j0 ~ N(beta_j, theta_j)`.
pub fn simulate_tvp<R: Rng + ?Sized>(spec: &SimSpec, rng: &mut R) -> Result<(Dataset, SimTruth)> {
    let d = spec.beta.len();
    let t = spec.n_obs;
    if d == 0 || spec.theta.len() != d {
        return Err(Error::Dimension(format!(
            "beta has {} entries, theta has {}",
            d,
            spec.theta.len()
        )));
    }
    if spec.theta.iter().any(|v| !(*v >= 0.0)) {
        return Err(Error::InvalidParameter("theta must be non-negative".into()));
    }
    if !(spec.sigma2 > 0.0) {
        return Err(Error::InvalidParameter("sigma2 must be positive".into()));
    }
    let mut paths = DMatrix::zeros(t + 1, d);
    for j in 0..d {
        let sd = spec.theta[j].sqrt();
        let z: f64 = StandardNormal.sample(rng);
        paths[(0, j)] = spec.beta[j] + sd * z;
        for s in 1..=t {
            let z: f64 = StandardNormal.sample(rng);
            paths[(s, j)] = paths[(s - 1, j)] + sd * z;
        }
    }
    let mut x = DMatrix::zeros(t, d);
    for s in 0..t {
        x[(s, 0)] = 1.0;
        for j in 1..d {
            x[(s, j)] = StandardNormal.sample(rng);
        }
    }
    let noise_sd = spec.sigma2.sqrt();
    let y = DVector::from_fn(t, |s, _| {
        let mean: f64 = (0..d).map(|j| x[(s, j)] * paths[(s + 1, j)]).sum();
        let z: f64 = StandardNormal.sample(rng);
        mean + noise_sd * z
    });
    let truth = SimTruth {
        beta_true: DVector::from_column_slice(&spec.beta),
        theta_true: DVector::from_column_slice(&spec.theta),
        sigma2_true: spec.sigma2,
        paths,
    };
    Ok((Dataset::new(y, x)?, truth))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn centered_path_substitution() {
        let beta = DVector::from_vec(vec![1.5]);
        let st = DVector::from_vec(vec![0.1]);
        let bt = DMatrix::from_element(2, 1, 2.0);
        let c = path_centered(&beta, &st, &bt);
        assert!((c[(1, 0)] - 1.7).abs() < 1e-15);
        let back = path_noncentered(&c, &beta, &st).unwrap();
        assert!((back[(1, 0)] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn zero_scale_gives_constant_path() {
        let beta = DVector::from_vec(vec![0.7]);
        let st = DVector::from_vec(vec![0.0]);
        let bt = DMatrix::from_vec(3, 1, vec![1.0, -4.0, 9.0]);
        let c = path_centered(&beta, &st, &bt);
        assert!(c.iter().all(|v| *v == 0.7));
        assert!(matches!(
            path_noncentered(&c, &beta, &st),
            Err(Error::ZeroScale { index: 0 })
        ));
    }

    #[test]
    fn negative_scale_flips_sign() {
        let path = DMatrix::from_vec(1, 1, vec![1.7]);
        let beta = DVector::from_vec(vec![1.5]);
        let pos = path_noncentered(&path, &beta, &DVector::from_vec(vec![0.1])).unwrap();
        let neg = path_noncentered(&path, &beta, &DVector::from_vec(vec![-0.1])).unwrap();
        assert_eq!(pos[(0, 0)], -neg[(0, 0)]);
    }

    #[test]
    fn standardize_small_column() {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 1.0, 1.0, 2.0, 1.0, 3.0]);
        let (xs, means, sds) = standardize_covariates(&x, Some(0)).unwrap();
        assert_eq!(xs.column(0), x.column(0));
        assert_eq!(xs.column(1).as_slice(), &[-1.0, 0.0, 1.0]);
        assert_eq!(means[1], 2.0);
        assert_eq!(sds[1], 1.0);
    }

    #[test]
    fn standardize_rejects_constant_column() {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 5.0, 1.0, 5.0, 1.0, 5.0]);
        assert!(matches!(
            standardize_covariates(&x, Some(0)),
            Err(Error::DegenerateCovariate { column: 1 })
        ));
    }

    #[test]
    fn zero_theta_paths_are_constant() {
        let spec = SimSpec {
            n_obs: 50,
            beta: vec![1.0, 2.0],
            theta: vec![0.0, 0.0],
            sigma2: 1.0,
        };
        let (_, truth) = simulate_tvp(&spec, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        for j in 0..2 {
            assert!(truth.paths.column(j).iter().all(|v| *v == spec.beta[j]));
        }
    }

    #[test]
    fn simulation_is_deterministic() {
        let spec = SimSpec::reference();
        let a = simulate_tvp(&spec, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = simulate_tvp(&spec, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn initial_state_defaults() {
        let spec = SimSpec::reference();
        let (data, _) = simulate_tvp(&spec, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        let s = ChainState::initial(&data, &PriorConfig::default());
        assert_eq!(s.a_xi, 0.1);
        assert_eq!(s.kappa2, 20.0);
        assert!(s.sqrt_theta.iter().all(|v| *v == 0.1));
        let lasso = ChainState::initial(&data, &PriorConfig::lasso());
        assert_eq!((lasso.a_xi, lasso.a_tau), (1.0, 1.0));
    }
}
