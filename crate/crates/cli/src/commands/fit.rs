use anyhow::{Context, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use tvp_core::cholesky::{build_row_regressions, fit_cholesky_sv};
use tvp_core::diagnostics::quantile_sorted;
use tvp_core::{run_chain, DrawStore};

use super::{counters_json, setup, write_run_json, write_text, RunArgs};
use crate::config::{DrawFormat, ModelKind};
use crate::data::{prepare_univariate, read_table, series_matrix};
use crate::output::{
    file_stem, fmt_sig4, ineff_header, ineff_rows, summary_header, summary_rows, write_draws_bin,
    write_draws_csv, DrawTable, LEVELS,
};

/// Per-series output files; returns the draw file name.
fn emit_series(
    args: &RunArgs,
    format: DrawFormat,
    series: &str,
    store: &DrawStore,
    summary: &mut String,
    ineff: &mut String,
    hq: &mut Option<String>,
) -> Result<String> {
    let table = DrawTable::from_store(store);
    let file = match format {
        DrawFormat::Csv => format!("draws_{}.csv", file_stem(series)),
        DrawFormat::Binary => format!("draws_{}.bin", file_stem(series)),
    };
    let path = args.out.join(&file);
    match format {
        DrawFormat::Csv => write_draws_csv(&path, &table)?,
        DrawFormat::Binary => write_draws_bin(&path, &table)?,
    }
    summary.push_str(&summary_rows(series, &table).with_context(|| format!("summarizing {series}"))?);
    ineff.push_str(&ineff_rows(series, &table));
    if store.is_sv() {
        let out = hq.get_or_insert_with(|| "series,t,q2.5,q50,q97.5\n".to_string());
        let paths: Vec<_> = (0..store.len())
            .map(|m| store.h_path(m).expect("sv store"))
            .collect();
        for t in 0..=store.n_obs() {
            let mut v: Vec<f64> = paths.iter().map(|h| h[t]).collect();
            v.sort_by(f64::total_cmp);
            out.push_str(&format!("{series},{t}"));
            for p in LEVELS {
                out.push(',');
                out.push_str(&fmt_sig4(quantile_sorted(&v, p)));
            }
            out.push('\n');
        }
    }
    Ok(file)
}

pub fn fit(args: &RunArgs) -> Result<()> {
    let s = setup(args)?;
    let data_path = args.data_path()?;
    let table = read_table(data_path, s.cfg.data.time_index)?;
    let prior = s.cfg.prior()?;
    let settings = s.cfg.sampler()?;
    let format = s.cfg.output.draw_format;
    let mut summary = summary_header();
    let mut ineff = ineff_header();
    let mut hq = None;
    let results: Value = match s.cfg.data.model {
        ModelKind::Univariate => {
            let prep = prepare_univariate(&table, &s.cfg.data, None)?;
            let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
            let store = run_chain(&prep.dataset, &prior, &settings, &mut rng)?;
            let file = emit_series(
                args,
                format,
                &prep.response,
                &store,
                &mut summary,
                &mut ineff,
                &mut hq,
            )?;
            json!({
                "model": "univariate",
                "response": prep.response,
                "covariates": prep.covariates,
                "intercept": prep.intercept,
                "standardization": { "means": prep.means, "sds": prep.sds },
                "draw_files": [file],
                "column_order": store.names(),
                "n_draws": store.len(),
                "diagnostics": counters_json(&store),
            })
        }
        ModelKind::Cholesky => {
            let system = build_row_regressions(&series_matrix(&table), table.names.clone())?;
            let fit = fit_cholesky_sv(system, &prior, &settings, s.seed, true)?;
            let mut files = Vec::new();
            let mut rows = Vec::new();
            for (name, store) in table.names.iter().zip(&fit.row_draws) {
                files.push(emit_series(
                    args,
                    format,
                    name,
                    store,
                    &mut summary,
                    &mut ineff,
                    &mut hq,
                )?);
                rows.push(json!({
                    "series": name,
                    "column_order": store.names(),
                    "diagnostics": counters_json(store),
                }));
            }
            json!({
                "model": "cholesky",
                "series_order": table.names,
                "draw_files": files,
                "rows": rows,
                "n_draws": fit.n_draws(),
            })
        }
    };
    write_text(&args.out.join("summary.csv"), &summary)?;
    write_text(&args.out.join("ineff.csv"), &ineff)?;
    if let Some(hq) = hq {
        write_text(&args.out.join("h_quantiles.csv"), &hq)?;
    }
    write_run_json(args, "fit", &s, results)
}
