//! Draw files, summary tables and number formatting.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use tvp_core::diagnostics::{inefficiency_factor, posterior_summary};
use tvp_core::DrawStore;

pub const LEVELS: [f64; 3] = [0.025, 0.5, 0.975];
const MAGIC: &[u8; 8] = b"TVPDRAW1";

/// Exact decimal form: 17 significant digits round-trip every `f64`.
pub fn fmt_full(v: f64) -> String {
    format!("{v:.16e}")
}

/// Four significant digits, plain notation for moderate magnitudes.
pub fn fmt_sig4(v: f64) -> String {
    if !v.is_finite() {
        return format!("{v}");
    }
    let r: f64 = format!("{v:.3e}").parse().expect("formatted float parses");
    if r == 0.0 || (1e-4..1e7).contains(&r.abs()) {
        format!("{r}")
    } else {
        format!("{r:.3e}")
    }
}

/// Named columns of draws, one entry per kept iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct DrawTable {
    pub names: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

impl DrawTable {
    pub fn from_store(store: &DrawStore) -> Self {
        let (names, columns) = store.columns().map(|(n, c)| (n.to_string(), c.to_vec())).unzip();
        Self { names, columns }
    }

    pub fn n_draws(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    /// Every stored column, with `abs_sqrt_theta_j` inserted after each `sqrt_theta_j`.
    pub fn reported(&self) -> Vec<(String, Vec<f64>)> {
        let mut out = Vec::with_capacity(self.names.len() * 2);
        for (n, c) in self.names.iter().zip(&self.columns) {
            out.push((n.clone(), c.clone()));
            if let Some(j) = n.strip_prefix("sqrt_theta_") {
                out.push((format!("abs_sqrt_theta_{j}"), c.iter().map(|v| v.abs()).collect()));
            }
        }
        out
    }
}

pub fn write_draws_csv(path: &Path, table: &DrawTable) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("cannot create {}", path.display()))?;
    w.write_record(&table.names)?;
    for m in 0..table.n_draws() {
        w.write_record(table.columns.iter().map(|c| fmt_full(c[m])))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_draws_csv(path: &Path) -> Result<DrawTable> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("cannot open {}", path.display()))?;
    let names: Vec<String> = r.headers()?.iter().map(String::from).collect();
    let mut columns = vec![Vec::new(); names.len()];
    for rec in r.records() {
        let rec = rec?;
        for (c, cell) in columns.iter_mut().zip(rec.iter()) {
            c.push(
                cell.parse::<f64>()
                    .with_context(|| format!("bad draw value `{cell}`"))?,
            );
        }
    }
    Ok(DrawTable { names, columns })
}

/// Layout: magic, `u64` draw count, `u64` column count, then per column a `u32` name length and
/// UTF-8 name, then the values row by row. All integers and floats little-endian.
pub fn write_draws_bin(path: &Path, table: &DrawTable) -> Result<()> {
    let mut w =
        BufWriter::new(File::create(path).with_context(|| format!("cannot create {}", path.display()))?);
    w.write_all(MAGIC)?;
    w.write_all(&(table.n_draws() as u64).to_le_bytes())?;
    w.write_all(&(table.names.len() as u64).to_le_bytes())?;
    for n in &table.names {
        w.write_all(&(n.len() as u32).to_le_bytes())?;
        w.write_all(n.as_bytes())?;
    }
    for m in 0..table.n_draws() {
        for c in &table.columns {
            w.write_all(&c[m].to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_draws_bin(path: &Path) -> Result<DrawTable> {
    let mut r = BufReader::new(File::open(path).with_context(|| format!("cannot open {}", path.display()))?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    ensure!(&magic == MAGIC, "{} is not a draw file", path.display());
    let mut u64buf = [0u8; 8];
    let mut next_u64 = |r: &mut BufReader<File>| -> Result<u64> {
        r.read_exact(&mut u64buf)?;
        Ok(u64::from_le_bytes(u64buf))
    };
    let n_draws = next_u64(&mut r)? as usize;
    let n_cols = next_u64(&mut r)? as usize;
    let mut names = Vec::with_capacity(n_cols);
    for _ in 0..n_cols {
        let mut len = [0u8; 4];
        r.read_exact(&mut len)?;
        let mut name = vec![0u8; u32::from_le_bytes(len) as usize];
        r.read_exact(&mut name)?;
        names.push(String::from_utf8(name).context("column name is not UTF-8")?);
    }
    let mut columns = vec![Vec::with_capacity(n_draws); n_cols];
    let mut buf = [0u8; 8];
    for _ in 0..n_draws {
        for c in columns.iter_mut() {
            r.read_exact(&mut buf)?;
            c.push(f64::from_le_bytes(buf));
        }
    }
    if r.read(&mut buf)? != 0 {
        bail!("trailing bytes in {}", path.display());
    }
    Ok(DrawTable { names, columns })
}

pub fn summary_header() -> String {
    "series,parameter,mean,sd,q2.5,q50,q97.5\n".into()
}

/// Summary rows for one series, formatted as in `summary.csv`.
pub fn summary_rows(series: &str, table: &DrawTable) -> Result<String> {
    let mut out = String::new();
    for (name, draws) in table.reported() {
        let s = posterior_summary(&draws, &LEVELS)?;
        out.push_str(&format!(
            "{series},{name},{},{}",
            fmt_sig4(s.mean),
            fmt_sig4(s.sd)
        ));
        for (_, q) in s.quantiles {
            out.push(',');
            out.push_str(&fmt_sig4(q));
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn ineff_header() -> String {
    "series,parameter,inefficiency\n".into()
}

/// Inefficiency factors; `NA` when the chain is too short, `inf` when it never moved.
pub fn ineff_rows(series: &str, table: &DrawTable) -> String {
    let mut out = String::new();
    for (name, draws) in table.reported() {
        let v = match inefficiency_factor(&draws) {
            Ok(f) if f.constant => "inf".to_string(),
            Ok(f) => fmt_sig4(f.factor),
            Err(_) => "NA".to_string(),
        };
        out.push_str(&format!("{series},{name},{v}\n"));
    }
    out
}

/// Safe file-name fragment for a column name.
pub fn file_stem(name: &str) -> String {
    name.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}
