//! Multivariate model with a time-varying Cholesky factor: row `i` regresses `y_i` on
//! `y_1..y_{i-1}` with stochastic volatility.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dists::split_seed;
use crate::error::{Error, Result};
use crate::forecast::{rolling_lpds, OriginScore, RollingOptions};
use crate::model::{Dataset, PriorConfig};
use crate::sampler::{run_chain, DrawStore, SamplerSettings};

#[derive(Debug, Clone, PartialEq)]
pub struct CholeskySystem {
    /// `T x r` observations, columns in model order.
    pub y: DMatrix<f64>,
    pub names: Vec<String>,
    /// Row `i` has `i` regressors and no intercept.
    pub rows: Vec<Dataset>,
}

impl CholeskySystem {
    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }
}

/// Splits `y` into the triangular system of univariate regressions.
pub fn build_row_regressions(y: &DMatrix<f64>, names: Vec<String>) -> Result<CholeskySystem> {
    let (t, r) = y.shape();
    if r == 0 {
        return Err(Error::Dimension("need at least one series".into()));
    }
    if names.len() != r {
        return Err(Error::Dimension(format!("{} names for {r} series", names.len())));
    }
    let rows = (0..r)
        .map(|i| Dataset::new(y.column(i).into_owned(), y.columns(0, i).into_owned()))
        .collect::<Result<Vec<_>>>()?;
    debug_assert!(rows.iter().all(|d| d.n_obs() == t));
    Ok(CholeskySystem {
        y: y.clone(),
        names,
        rows,
    })
}

#[derive(Debug, Clone)]
pub struct CholeskyFit {
    pub system: CholeskySystem,
    pub row_draws: Vec<DrawStore>,
}

fn check_sv(prior: &PriorConfig) -> Result<()> {
    if prior.sv.is_none() {
        return Err(Error::InvalidParameter(
            "the Cholesky model needs stochastic volatility in every row".into(),
        ));
    }
    Ok(())
}

/// Fits every row with its own generator seeded from `split_seed(seed, row)`.
///
/// State paths are always kept since covariance reconstruction needs them.
pub fn fit_cholesky_sv(
    system: CholeskySystem,
    prior: &PriorConfig,
    settings: &SamplerSettings,
    seed: u64,
    parallel: bool,
) -> Result<CholeskyFit> {
    check_sv(prior)?;
    let settings = SamplerSettings {
        store_states: true,
        ..settings.clone()
    };
    let fit_row = |(i, data): (usize, &Dataset)| {
        let mut rng = ChaCha8Rng::seed_from_u64(split_seed(seed, i as u64));
        run_chain(data, prior, &settings, &mut rng).map_err(|e| Error::Row {
            row: i,
            source: Box::new(e),
        })
    };
    let row_draws = if parallel {
        system
            .rows
            .par_iter()
            .enumerate()
            .map(fit_row)
            .collect::<Result<Vec<_>>>()?
    } else {
        system
            .rows
            .iter()
            .enumerate()
            .map(fit_row)
            .collect::<Result<Vec<_>>>()?
    };
    Ok(CholeskyFit { system, row_draws })
}

impl CholeskyFit {
    pub fn n_draws(&self) -> usize {
        self.row_draws.iter().map(DrawStore::len).min().unwrap_or(0)
    }

    /// `Sigma_t = A_t D_t A_t'` for observation `t` (1-based) and draw `m`.
    pub fn sigma(&self, t: usize, m: usize) -> Result<DMatrix<f64>> {
        let r = self.system.n_rows();
        let n_obs = self.system.y.nrows();
        if t == 0 || t > n_obs {
            return Err(Error::InvalidParameter(format!(
                "time index {t} outside 1..={n_obs}"
            )));
        }
        if m >= self.n_draws() {
            return Err(Error::InvalidParameter(format!(
                "draw {m} out of range ({} draws)",
                self.n_draws()
            )));
        }
        let mut a_inv = DMatrix::identity(r, r);
        let mut dvar = DVector::zeros(r);
        for (i, store) in self.row_draws.iter().enumerate() {
            let h = store
                .h_path(m)
                .ok_or_else(|| Error::InvalidParameter(format!("row {i} was fitted without volatility")))?;
            dvar[i] = h[t].exp();
            if i > 0 {
                let path = store
                    .centered_path(m)
                    .ok_or_else(|| Error::InvalidParameter(format!("row {i} has no state paths")))?;
                for j in 0..i {
                    a_inv[(i, j)] = -path[(t, j)];
                }
            }
        }
        Ok(sigma_from_factors(&a_inv, &dvar))
    }

    /// `Sigma_1..Sigma_T` for draw `m`, rebuilding each row's paths once.
    pub fn sigma_path(&self, m: usize) -> Result<Vec<DMatrix<f64>>> {
        let r = self.system.n_rows();
        let n_obs = self.system.y.nrows();
        if m >= self.n_draws() {
            return Err(Error::InvalidParameter(format!(
                "draw {m} out of range ({} draws)",
                self.n_draws()
            )));
        }
        let mut h = Vec::with_capacity(r);
        let mut paths = Vec::with_capacity(r);
        for (i, store) in self.row_draws.iter().enumerate() {
            h.push(
                store.h_path(m).ok_or_else(|| {
                    Error::InvalidParameter(format!("row {i} was fitted without volatility"))
                })?,
            );
            paths.push(if i > 0 {
                Some(
                    store
                        .centered_path(m)
                        .ok_or_else(|| Error::InvalidParameter(format!("row {i} has no state paths")))?,
                )
            } else {
                None
            });
        }
        Ok((1..=n_obs)
            .map(|t| {
                let mut a_inv = DMatrix::identity(r, r);
                for (i, path) in paths.iter().enumerate() {
                    if let Some(path) = path {
                        for j in 0..i {
                            a_inv[(i, j)] = -path[(t, j)];
                        }
                    }
                }
                let dvar = DVector::from_fn(r, |i, _| h[i][t].exp());
                sigma_from_factors(&a_inv, &dvar)
            })
            .collect())
    }
}

/// `A D A'` with `A` the inverse of the unit lower triangular `a_inv`.
pub fn sigma_from_factors(a_inv: &DMatrix<f64>, dvar: &DVector<f64>) -> DMatrix<f64> {
    let r = dvar.len();
    let mut a = DMatrix::identity(r, r);
    // Forward substitution column by column; unit diagonal.
    for c in 0..r {
        for i in c + 1..r {
            let mut s = 0.0;
            for k in c..i {
                s += a_inv[(i, k)] * a[(k, c)];
            }
            a[(i, c)] = -s;
        }
    }
    let mut sigma = DMatrix::zeros(r, r);
    for i in 0..r {
        for j in 0..=i {
            let v: f64 = (0..=j).map(|k| a[(i, k)] * dvar[k] * a[(j, k)]).sum();
            sigma[(i, j)] = v;
            sigma[(j, i)] = v;
        }
    }
    sigma
}

/// Joint score of one time point as the sum of the row scores.
pub fn multivariate_lpds(row_scores: &[f64]) -> Result<f64> {
    if row_scores.is_empty() {
        return Err(Error::InvalidParameter("no row scores to combine".into()));
    }
    Ok(row_scores.iter().sum())
}

/// Row-wise rolling scores plus their per-origin sum.
#[derive(Debug, Clone, PartialEq)]
pub struct MultivariateScores {
    pub rows: Vec<Vec<OriginScore>>,
    pub total: Vec<OriginScore>,
}

pub fn rolling_multivariate_lpds(
    system: &CholeskySystem,
    prior: &PriorConfig,
    settings: &SamplerSettings,
    opts: &RollingOptions,
    seed: u64,
) -> Result<MultivariateScores> {
    check_sv(prior)?;
    let rows = system
        .rows
        .iter()
        .enumerate()
        .map(|(i, data)| {
            rolling_lpds(data, prior, settings, opts, split_seed(seed, i as u64)).map_err(|e| Error::Row {
                row: i,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let total = (0..rows[0].len())
        .map(|k| {
            let kalman = multivariate_lpds(&rows.iter().map(|r| r[k].kalman).collect::<Vec<_>>())?;
            let naive = rows.iter().map(|r| r[k].naive).sum::<Option<f64>>();
            Ok(OriginScore {
                t: rows[0][k].t,
                kalman,
                naive,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MultivariateScores { rows, total })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two() {
        let (b, d1, d2) = (0.7, 2.0, 0.5);
        let a_inv = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, -b, 1.0]);
        let s = sigma_from_factors(&a_inv, &DVector::from_vec(vec![d1, d2]));
        let want = DMatrix::from_row_slice(2, 2, &[d1, b * d1, b * d1, b * b * d1 + d2]);
        assert!((s - want).abs().max() < 1e-15);
    }

    #[test]
    fn triangular_rows() {
        let y = DMatrix::from_fn(5, 3, |i, j| (i * 3 + j) as f64);
        let sys = build_row_regressions(&y, vec!["a".into(), "b".into(), "c".into()]).unwrap();
        let dims: Vec<usize> = sys.rows.iter().map(Dataset::n_cov).collect();
        assert_eq!(dims, vec![0, 1, 2]);
        assert_eq!(sys.rows[2].x.column(1), y.column(1));
    }
}
