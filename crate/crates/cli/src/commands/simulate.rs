use anyhow::{ensure, Context, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::json;
use tvp_core::dists::split_seed;
use tvp_core::simulate_tvp;

use super::{setup, write_run_json, write_text, RunArgs};
use crate::output::fmt_full;

/// Writes `series_NNN.csv` (time index, `y`, `x1..xd` with `x1` the intercept) and `truth.csv`.
pub fn simulate(args: &RunArgs) -> Result<()> {
    let s = setup(args)?;
    let sim = &s.cfg.simulate;
    ensure!(sim.n_series > 0, "simulate.n_series must be positive");
    let spec = sim.spec();
    let width = sim.n_series.to_string().len().max(3);
    let series = (0..sim.n_series)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(split_seed(s.seed, i as u64));
            simulate_tvp(&spec, &mut rng).with_context(|| format!("series {}", i + 1))
        })
        .collect::<Result<Vec<_>>>()?;
    let d = spec.beta.len();
    let mut truth = String::from("series");
    for p in ["beta", "theta"] {
        for j in 1..=d {
            truth.push_str(&format!(",{p}_{j}"));
        }
    }
    truth.push_str(",sigma2\n");
    for (i, (data, tr)) in series.iter().enumerate() {
        let mut text = String::from("t,y");
        for j in 1..=d {
            text.push_str(&format!(",x{j}"));
        }
        text.push('\n');
        for t in 0..data.n_obs() {
            text.push_str(&format!("{},{}", t + 1, fmt_full(data.y[t])));
            for j in 0..d {
                text.push(',');
                text.push_str(&fmt_full(data.x[(t, j)]));
            }
            text.push('\n');
        }
        write_text(&args.out.join(format!("series_{:0width$}.csv", i + 1)), &text)?;
        truth.push_str(&(i + 1).to_string());
        for v in tr.beta_true.iter().chain(tr.theta_true.iter()) {
            truth.push(',');
            truth.push_str(&fmt_full(*v));
        }
        truth.push(',');
        truth.push_str(&fmt_full(tr.sigma2_true));
        truth.push('\n');
    }
    write_text(&args.out.join("truth.csv"), &truth)?;
    write_run_json(args, "simulate", &s, json!({ "n_series": sim.n_series }))
}
