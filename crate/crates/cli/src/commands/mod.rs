mod fit;
mod forecast;
mod simstudy;
mod simulate;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use tvp_core::DrawStore;

use crate::config::Config;

pub use fit::fit;
pub use forecast::forecast;
pub use simstudy::{replicate, simstudy};
pub use simulate::simulate;

/// Arguments shared by all subcommands.
#[derive(Debug, Clone, Default)]
pub struct RunArgs {
    pub config: PathBuf,
    pub data: Option<PathBuf>,
    pub out: PathBuf,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub t0: Option<usize>,
}

impl RunArgs {
    fn data_path(&self) -> Result<&Path> {
        self.data.as_deref().context("this command needs --data <path>")
    }
}

/// Loaded config, raw text and the resolved seed.
struct Setup {
    cfg: Config,
    text: String,
    seed: u64,
}

fn setup(args: &RunArgs) -> Result<Setup> {
    let (cfg, text) = Config::load(&args.config)?;
    let seed = cfg.seed(args.seed)?;
    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("cannot create output directory {}", args.out.display()))?;
    Ok(Setup { cfg, text, seed })
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    let digest = Sha256::digest(&bytes);
    let mut s = String::with_capacity(64);
    for b in digest {
        write!(s, "{b:02x}").unwrap();
    }
    Ok(s)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

/// Everything needed to rerun: the seed, the exact config text and its parsed form, and a hash of the data.
fn write_run_json(args: &RunArgs, command: &str, s: &Setup, extra: Value) -> Result<()> {
    let data = match &args.data {
        Some(p) => json!({ "path": p.display().to_string(), "sha256": sha256_file(p)? }),
        None => Value::Null,
    };
    let meta = json!({
        "tool": "tvp",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "seed": s.seed,
        "threads": args.threads,
        "t0": args.t0,
        "config_text": s.text,
        "config": s.cfg,
        "data": data,
        "results": extra,
    });
    let text = serde_json::to_string_pretty(&meta)? + "\n";
    write_text(&args.out.join("run.json"), &text)
}

fn counters_json(store: &DrawStore) -> Value {
    let c = &store.counters;
    json!({
        "a_xi_acceptance": c.a_xi.rate(),
        "a_xi_proposed": c.a_xi.proposed,
        "a_tau_acceptance": c.a_tau.rate(),
        "a_tau_proposed": c.a_tau.proposed,
        "degenerate_theta": c.degenerate_theta,
        "floored_sqrt_theta": c.floored_sqrt_theta,
        "clamped_h": c.clamped_h,
    })
}
