//! Run configuration. One TOML table per library module; every key is optional except the seed.

use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use tvp_core::{PriorConfig, PriorVariant, SamplerSettings, SimSpec, SvPrior};

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub seed: Option<u64>,
    pub prior: PriorSection,
    pub sv: SvSection,
    pub sampler: SamplerSection,
    pub data: DataSection,
    pub forecast: ForecastSection,
    pub simulate: SimulateSection,
    pub simstudy: SimstudySection,
    pub output: OutputSection,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    #[default]
    DoubleGamma,
    Lasso,
    InvertedGamma,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::DoubleGamma => "double_gamma",
            Variant::Lasso => "lasso",
            Variant::InvertedGamma => "inverted_gamma",
        }
    }
}

/// Overrides on top of the library defaults.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PriorSection {
    pub variant: Variant,
    pub d1: Option<f64>,
    pub d2: Option<f64>,
    pub e1: Option<f64>,
    pub e2: Option<f64>,
    pub b_xi: Option<f64>,
    pub b_tau: Option<f64>,
    /// Fix the shrinkage exponents instead of sampling them.
    pub a_xi: Option<f64>,
    pub a_tau: Option<f64>,
    pub nu_p: Option<f64>,
    pub c_p: Option<f64>,
    pub c0: Option<f64>,
    pub g0: Option<f64>,
    pub sigma2_guess: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvSection {
    pub enabled: bool,
    pub b_mu: Option<f64>,
    pub big_b_mu: Option<f64>,
    pub a0: Option<f64>,
    pub b0: Option<f64>,
    pub big_b_sigma: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerSection {
    pub burnin: Option<usize>,
    pub draws: Option<usize>,
    pub thin: Option<usize>,
    pub c_xi: Option<f64>,
    pub c_tau: Option<f64>,
    pub adapt_mh: Option<bool>,
    pub interweave: Option<bool>,
    pub sign_flip: Option<bool>,
    pub sqrt_theta_floor: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    #[default]
    Univariate,
    /// Every data column is a series of the triangular system.
    Cholesky,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSection {
    pub model: ModelKind,
    /// Response column; defaults to the first data column.
    pub response: Option<String>,
    /// Treat the first column as a time index. Auto-detected from its header when unset.
    pub time_index: Option<bool>,
    /// Prepend a column of ones unless one is already present.
    pub add_intercept: bool,
    pub standardize: bool,
}

impl Default for DataSection {
    fn default() -> Self {
        Self {
            model: ModelKind::Univariate,
            response: None,
            time_index: None,
            add_intercept: false,
            standardize: true,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Approximation {
    #[default]
    Kalman,
    Naive,
    Both,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForecastSection {
    pub t0: Option<usize>,
    pub approximation: Approximation,
    pub warm_start: bool,
    pub warm_burnin: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateSection {
    pub n_series: usize,
    pub n_obs: usize,
    pub beta: Vec<f64>,
    pub theta: Vec<f64>,
    pub sigma2: f64,
}

impl Default for SimulateSection {
    fn default() -> Self {
        let spec = SimSpec::reference();
        Self {
            n_series: 100,
            n_obs: spec.n_obs,
            beta: spec.beta,
            theta: spec.theta,
            sigma2: spec.sigma2,
        }
    }
}

impl SimulateSection {
    pub fn spec(&self) -> SimSpec {
        SimSpec {
            n_obs: self.n_obs,
            beta: self.beta.clone(),
            theta: self.theta.clone(),
            sigma2: self.sigma2,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimstudySection {
    pub n_series: usize,
    pub priors: Vec<Variant>,
}

impl Default for SimstudySection {
    fn default() -> Self {
        Self {
            n_series: 20,
            priors: vec![Variant::DoubleGamma, Variant::Lasso],
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DrawFormat {
    #[default]
    Csv,
    Binary,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub draw_format: DrawFormat,
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<(Self, String)> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        let cfg = Self::from_toml(&text).with_context(|| format!("invalid config {}", path.display()))?;
        Ok((cfg, text))
    }

    /// The command-line seed wins over the config.
    pub fn seed(&self, cli: Option<u64>) -> Result<u64> {
        match cli.or(self.seed) {
            Some(s) => Ok(s),
            None => bail!("missing key `seed`: set it at the top of the config or pass --seed"),
        }
    }

    pub fn prior(&self) -> Result<PriorConfig> {
        self.prior_for(self.prior.variant)
    }

    pub fn prior_for(&self, variant: Variant) -> Result<PriorConfig> {
        let p = &self.prior;
        let mut out = match variant {
            Variant::DoubleGamma => PriorConfig::double_gamma(),
            Variant::Lasso => PriorConfig::lasso(),
            Variant::InvertedGamma => PriorConfig::inverted_gamma(),
        };
        debug_assert!(matches!(
            (variant, out.variant),
            (Variant::DoubleGamma, PriorVariant::DoubleGamma)
                | (Variant::Lasso, PriorVariant::BayesianLasso)
                | (Variant::InvertedGamma, PriorVariant::InvertedGamma)
        ));
        let set = |dst: &mut f64, v: Option<f64>| {
            if let Some(v) = v {
                *dst = v;
            }
        };
        set(&mut out.d1, p.d1);
        set(&mut out.d2, p.d2);
        set(&mut out.e1, p.e1);
        set(&mut out.e2, p.e2);
        set(&mut out.b_xi, p.b_xi);
        set(&mut out.b_tau, p.b_tau);
        set(&mut out.nu_p, p.nu_p);
        set(&mut out.c_p, p.c_p);
        set(&mut out.c0, p.c0);
        set(&mut out.g0, p.g0);
        set(&mut out.sigma2_guess, p.sigma2_guess);
        if p.a_xi.is_some() {
            out.fixed_a_xi = p.a_xi;
        }
        if p.a_tau.is_some() {
            out.fixed_a_tau = p.a_tau;
        }
        if self.sv.enabled {
            let mut sv = SvPrior::default();
            let s = &self.sv;
            set(&mut sv.b_mu, s.b_mu);
            set(&mut sv.big_b_mu, s.big_b_mu);
            set(&mut sv.a0, s.a0);
            set(&mut sv.b0, s.b0);
            set(&mut sv.big_b_sigma, s.big_b_sigma);
            out.sv = Some(sv);
        }
        out.validate().context("invalid [prior] or [sv] table")?;
        Ok(out)
    }

    pub fn sampler(&self) -> Result<SamplerSettings> {
        let s = &self.sampler;
        let mut out = SamplerSettings::default();
        if let Some(v) = s.burnin {
            out.n_burnin = v;
        }
        if let Some(v) = s.draws {
            out.n_draws = v;
        }
        if let Some(v) = s.thin {
            out.thin = v;
        }
        if let Some(v) = s.c_xi {
            out.c_xi = v;
        }
        if let Some(v) = s.c_tau {
            out.c_tau = v;
        }
        if let Some(v) = s.adapt_mh {
            out.adapt_mh = v;
        }
        if let Some(v) = s.interweave {
            out.interweave = v;
        }
        if let Some(v) = s.sign_flip {
            out.sign_flip = v;
        }
        if let Some(v) = s.sqrt_theta_floor {
            out.sqrt_theta_floor = v;
        }
        out.validate().context("invalid [sampler] table")?;
        Ok(out)
    }
}
