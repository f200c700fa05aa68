use anyhow::{bail, ensure, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::json;
use tvp_core::diagnostics::sim_study_metrics;
use tvp_core::dists::split_seed;
use tvp_core::{run_chain, simulate_tvp, PriorConfig, SamplerSettings, SimSpec};

use super::{setup, write_run_json, write_text, RunArgs};
use crate::config::Variant;
use crate::output::fmt_sig4;

/// Draws of `beta_j` and `|sqrt_theta_j|` with their true values, in parameter order.
type Tracked = Vec<(String, Vec<f64>, f64)>;

/// One replicate: simulate with the replicate's data seed (shared by all priors), fit on the raw scale.
pub fn replicate(
    spec: &SimSpec,
    prior: &PriorConfig,
    settings: &SamplerSettings,
    data_seed: u64,
    chain_seed: u64,
) -> tvp_core::Result<Tracked> {
    let (data, truth) = simulate_tvp(spec, &mut ChaCha8Rng::seed_from_u64(data_seed))?;
    let store = run_chain(&data, prior, settings, &mut ChaCha8Rng::seed_from_u64(chain_seed))?;
    let d = spec.beta.len();
    let mut out = Vec::with_capacity(2 * d);
    for j in 0..d {
        let beta = store.param(&format!("beta_{}", j + 1)).expect("beta column");
        out.push((format!("beta_{}", j + 1), beta.to_vec(), truth.beta_true[j]));
    }
    for j in 0..d {
        let st = store
            .param(&format!("sqrt_theta_{}", j + 1))
            .expect("sqrt_theta column");
        out.push((
            format!("abs_sqrt_theta_{}", j + 1),
            st.iter().map(|v| v.abs()).collect(),
            truth.theta_true[j].sqrt(),
        ));
    }
    Ok(out)
}

/// Replicate `i` uses data seed `split_seed(split_seed(seed, 0), i)` and, for prior `p`,
/// chain seed `split_seed(split_seed(seed, p + 1), i)`.
pub fn simstudy(args: &RunArgs) -> Result<()> {
    let s = setup(args)?;
    let study = &s.cfg.simstudy;
    ensure!(study.n_series > 0, "simstudy.n_series must be positive");
    ensure!(!study.priors.is_empty(), "simstudy.priors is empty");
    let spec = s.cfg.simulate.spec();
    let settings = s.cfg.sampler()?;
    let priors = study
        .priors
        .iter()
        .map(|v| Ok((*v, s.cfg.prior_for(*v)?)))
        .collect::<Result<Vec<_>>>()?;
    let data_master = split_seed(s.seed, 0);
    let tasks: Vec<(usize, usize)> = (0..priors.len())
        .flat_map(|p| (0..study.n_series).map(move |i| (p, i)))
        .collect();
    let results: Vec<_> = tasks
        .par_iter()
        .map(|&(p, i)| {
            let chain_seed = split_seed(split_seed(s.seed, p as u64 + 1), i as u64);
            replicate(
                &spec,
                &priors[p].1,
                &settings,
                split_seed(data_master, i as u64),
                chain_seed,
            )
        })
        .collect();

    let mut metrics = String::from("prior,parameter,n_series,av_mse,av_var,av_bias2\n");
    let mut failures = String::from("prior,replicate,error\n");
    let mut n_failed = 0;
    let mut ok_counts = Vec::new();
    for (p, (variant, _)) in priors.iter().enumerate() {
        let ok: Vec<&Tracked> = tasks
            .iter()
            .zip(&results)
            .filter(|((tp, _), _)| *tp == p)
            .filter_map(|((_, i), r)| match r {
                Ok(t) => Some(t),
                Err(e) => {
                    n_failed += 1;
                    failures.push_str(&format!(
                        "{},{},\"{}\"\n",
                        variant.name(),
                        i + 1,
                        e.to_string().replace('"', "'")
                    ));
                    None
                }
            })
            .collect();
        ok_counts.push(json!({ "prior": variant.name(), "succeeded": ok.len() }));
        if ok.is_empty() {
            continue;
        }
        for k in 0..ok[0].len() {
            let series: Vec<(&[f64], f64)> = ok.iter().map(|t| (t[k].1.as_slice(), t[k].2)).collect();
            let m = sim_study_metrics(&series)?;
            metrics.push_str(&format!(
                "{},{},{},{},{},{}\n",
                variant.name(),
                ok[0][k].0,
                ok.len(),
                fmt_sig4(m.av_mse),
                fmt_sig4(m.av_var),
                fmt_sig4(m.av_bias2)
            ));
        }
    }
    write_text(&args.out.join("metrics.csv"), &metrics)?;
    if n_failed > 0 {
        write_text(&args.out.join("failures.csv"), &failures)?;
    }
    let names: Vec<&str> = priors.iter().map(|(v, _)| Variant::name(*v)).collect();
    write_run_json(
        args,
        "simstudy",
        &s,
        json!({ "n_series": study.n_series, "priors": names, "completed": ok_counts }),
    )?;
    if n_failed > 0 {
        bail!(
            "{n_failed} of {} replicates failed; see failures.csv",
            tasks.len()
        );
    }
    Ok(())
}
