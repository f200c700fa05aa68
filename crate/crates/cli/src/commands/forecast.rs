use anyhow::{ensure, Context, Result};
use serde_json::json;
use tvp_core::cholesky::{build_row_regressions, rolling_multivariate_lpds};
use tvp_core::forecast::{cumulative_lpds, rolling_lpds, OriginScore, RollingOptions};

use super::{setup, write_run_json, write_text, RunArgs};
use crate::config::{Approximation, ModelKind};
use crate::data::{prepare_univariate, read_table, series_matrix};
use crate::output::fmt_full;

/// Column blocks of `lpds.csv`: a header and one value per origin.
struct Block {
    name: String,
    values: Vec<f64>,
}

fn score_blocks(prefix: &str, scores: &[OriginScore], approx: Approximation, cumulative: bool) -> Vec<Block> {
    let mut out = Vec::new();
    let mut push = |kind: &str, values: Vec<f64>| {
        let cum = cumulative.then(|| cumulative_lpds(&values));
        out.push(Block {
            name: format!("lpds_{prefix}{kind}"),
            values,
        });
        if let Some(values) = cum {
            out.push(Block {
                name: format!("cum_{prefix}{kind}"),
                values,
            });
        }
    };
    if approx != Approximation::Naive {
        push("kalman", scores.iter().map(|s| s.kalman).collect());
    }
    if approx != Approximation::Kalman {
        push(
            "naive",
            scores
                .iter()
                .map(|s| s.naive.expect("naive scores requested"))
                .collect(),
        );
    }
    out
}

/// Rolling one-step-ahead scores from origin `t0`. Column `t` of `lpds.csv` holds the time label of the
/// scored row, or its 1-based index when the input has no time column.
pub fn forecast(args: &RunArgs) -> Result<()> {
    let s = setup(args)?;
    let data_path = args.data_path()?;
    let table = read_table(data_path, s.cfg.data.time_index)?;
    let prior = s.cfg.prior()?;
    let settings = s.cfg.sampler()?;
    let fc = &s.cfg.forecast;
    let t0 = args
        .t0
        .or(fc.t0)
        .context("missing key `forecast.t0`: set it in the config or pass --t0")?;
    let n = table.n_rows();
    ensure!(
        t0 < n,
        "t0 = {t0} must be smaller than the number of observations ({n})"
    );
    let mut opts = RollingOptions {
        t0,
        naive: fc.approximation != Approximation::Kalman,
        warm_start: fc.warm_start,
        ..RollingOptions::default()
    };
    if let Some(b) = fc.warm_burnin {
        opts.warm_burnin = b;
    }
    let (origins, blocks) = match s.cfg.data.model {
        ModelKind::Univariate => {
            let prep = prepare_univariate(&table, &s.cfg.data, Some(t0))?;
            let scores = rolling_lpds(&prep.dataset, &prior, &settings, &opts, s.seed)?;
            let blocks = score_blocks("", &scores, fc.approximation, true);
            (scores.iter().map(|o| o.t).collect::<Vec<_>>(), blocks)
        }
        ModelKind::Cholesky => {
            let system = build_row_regressions(&series_matrix(&table), table.names.clone())?;
            let scores = rolling_multivariate_lpds(&system, &prior, &settings, &opts, s.seed)?;
            let mut blocks = Vec::new();
            for (name, row) in table.names.iter().zip(&scores.rows) {
                blocks.extend(score_blocks(&format!("{name}_"), row, fc.approximation, false));
            }
            blocks.extend(score_blocks("total_", &scores.total, fc.approximation, true));
            (scores.total.iter().map(|o| o.t).collect(), blocks)
        }
    };
    let mut text = String::from("t");
    for b in &blocks {
        text.push(',');
        text.push_str(&b.name);
    }
    text.push('\n');
    for (k, t) in origins.iter().enumerate() {
        match &table.time {
            Some(time) => text.push_str(&time[*t]),
            None => text.push_str(&(t + 1).to_string()),
        }
        for b in &blocks {
            text.push(',');
            text.push_str(&fmt_full(b.values[k]));
        }
        text.push('\n');
    }
    write_text(&args.out.join("lpds.csv"), &text)?;
    let totals: serde_json::Map<_, _> = blocks
        .iter()
        .filter(|b| b.name.starts_with("lpds_"))
        .map(|b| (b.name.clone(), json!(b.values.iter().sum::<f64>())))
        .collect();
    write_run_json(
        args,
        "forecast",
        &s,
        json!({ "t0": t0, "n_origins": origins.len(), "totals": totals }),
    )
}
