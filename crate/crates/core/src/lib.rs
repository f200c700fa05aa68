#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod banded;
pub mod cholesky;
pub mod diagnostics;
pub mod dists;
pub mod error;
pub mod forecast;
pub mod model;
pub mod sampler;
pub mod special;
pub mod sv;

pub use error::{Error, Result};
pub use model::{
    path_centered, path_noncentered, simulate_tvp, standardize_covariates, ChainState, Dataset,
    ErrorVariance, PriorConfig, PriorVariant, SimSpec, SimTruth, SvPrior, SvState,
};
pub use sampler::{run_chain, run_chain_from, DrawStore, Sampler, SamplerSettings};
