//! CSV ingestion and design-matrix assembly.

use std::io::Read;
use std::path::Path;

use anyhow::{bail, Context, Result};
use nalgebra::{DMatrix, DVector};
use tvp_core::{standardize_covariates, Dataset};

use crate::config::DataSection;

/// Numeric columns of an input file plus the optional time labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub time: Option<Vec<String>>,
    pub names: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

impl Table {
    pub fn n_rows(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.columns[i].as_slice())
    }
}

const TIME_HEADERS: [&str; 5] = ["", "t", "time", "date", "index"];

pub fn read_table(path: &Path, time_index: Option<bool>) -> Result<Table> {
    let file = std::fs::File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    parse_table(file, time_index).with_context(|| format!("in {}", path.display()))
}

/// Line numbers in errors count the header as line 1.
pub fn parse_table<R: Read>(input: R, time_index: Option<bool>) -> Result<Table> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let headers: Vec<String> = rdr
        .headers()
        .context("cannot read header row")?
        .iter()
        .map(String::from)
        .collect();
    if headers.is_empty() {
        bail!("empty header row");
    }
    let has_time = time_index.unwrap_or_else(|| TIME_HEADERS.contains(&headers[0].to_lowercase().as_str()));
    let skip = usize::from(has_time);
    let names: Vec<String> = headers[skip..].to_vec();
    if names.is_empty() {
        bail!("no data columns after the time index");
    }
    for (i, n) in names.iter().enumerate() {
        if n.is_empty() {
            bail!("column {} has an empty header", i + skip + 1);
        }
        if names[..i].contains(n) {
            bail!("duplicate column name `{n}`");
        }
    }
    let mut time = has_time.then(Vec::new);
    let mut columns = vec![Vec::new(); names.len()];
    for rec in rdr.records() {
        let rec = rec.map_err(|e| match e.kind() {
            csv::ErrorKind::UnequalLengths {
                pos,
                expected_len,
                len,
            } => anyhow::anyhow!(
                "dimension mismatch: line {} has {len} fields, header has {expected_len}",
                pos.as_ref().map_or(0, |p| p.line())
            ),
            _ => anyhow::Error::new(e),
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        if let Some(t) = &mut time {
            t.push(rec[0].to_string());
        }
        for (j, cell) in rec.iter().skip(skip).enumerate() {
            if cell.is_empty() {
                bail!("missing value at line {line}, column `{}`", names[j]);
            }
            let v: f64 = cell.parse().map_err(|_| {
                anyhow::anyhow!("non-numeric cell `{cell}` at line {line}, column `{}`", names[j])
            })?;
            if !v.is_finite() {
                bail!("non-finite value `{cell}` at line {line}, column `{}`", names[j]);
            }
            columns[j].push(v);
        }
    }
    if columns[0].is_empty() {
        bail!("no data rows");
    }
    Ok(Table { time, names, columns })
}

/// A univariate regression ready for the sampler, with the column bookkeeping needed to report it.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub dataset: Dataset,
    pub response: String,
    pub covariates: Vec<String>,
    pub intercept: Option<usize>,
    /// Column means and standard deviations used for standardization (0 and 1 when unscaled).
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
}

/// `train_rows` limits the rows used for the standardization moments (for out-of-sample scoring).
pub fn prepare_univariate(table: &Table, opts: &DataSection, train_rows: Option<usize>) -> Result<Prepared> {
    let response = opts.response.clone().unwrap_or_else(|| table.names[0].clone());
    let y = table
        .column(&response)
        .with_context(|| format!("response column `{response}` not found"))?;
    let mut covariates: Vec<String> = table.names.iter().filter(|n| **n != response).cloned().collect();
    let mut cols: Vec<Vec<f64>> = covariates
        .iter()
        .map(|n| table.column(n).unwrap().to_vec())
        .collect();
    let mut intercept = cols.iter().position(|c| c.iter().all(|v| *v == 1.0));
    if intercept.is_none() && opts.add_intercept {
        covariates.insert(0, "intercept".into());
        cols.insert(0, vec![1.0; y.len()]);
        intercept = Some(0);
    }
    if cols.is_empty() {
        bail!("no covariates: add columns or set data.add_intercept = true");
    }
    let n = y.len();
    let x = DMatrix::from_fn(n, cols.len(), |i, j| cols[j][i]);
    let d = x.ncols();
    let (x, means, sds) = if opts.standardize {
        let rows = train_rows.unwrap_or(n).min(n);
        let (_, m, s) =
            standardize_covariates(&x.rows(0, rows).into_owned(), intercept).map_err(|e| match e {
                tvp_core::Error::DegenerateCovariate { column } => {
                    anyhow::anyhow!(
                        "covariate `{}` is constant and cannot be standardized",
                        covariates[column]
                    )
                }
                e => e.into(),
            })?;
        let x = DMatrix::from_fn(n, d, |i, j| (x[(i, j)] - m[j]) / s[j]);
        (x, m.iter().copied().collect(), s.iter().copied().collect())
    } else {
        (x, vec![0.0; d], vec![1.0; d])
    };
    let dataset = Dataset::new(DVector::from_column_slice(y), x)?;
    Ok(Prepared {
        dataset,
        response,
        covariates,
        intercept,
        means,
        sds,
    })
}

/// All data columns as a `T x r` matrix in file order.
pub fn series_matrix(table: &Table) -> DMatrix<f64> {
    DMatrix::from_fn(table.n_rows(), table.names.len(), |i, j| table.columns[j][i])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<Table> {
        parse_table(s.as_bytes(), None)
    }

    #[test]
    fn time_column_detected() {
        let t = parse("date,y,x\n2001-01,1.0,2\n2001-02,3,4e0\n").unwrap();
        assert_eq!(t.names, vec!["y", "x"]);
        assert_eq!(t.time.unwrap(), vec!["2001-01", "2001-02"]);
        assert_eq!(t.columns[1], vec![2.0, 4.0]);
        let t = parse("y,x\n1,2\n3,4\n").unwrap();
        assert!(t.time.is_none());
    }

    #[test]
    fn bad_cell_reports_position() {
        let err = parse("y,x\n1,2\n3,abc\n").unwrap_err().to_string();
        assert!(
            err.contains("line 3") && err.contains("`x`") && err.contains("abc"),
            "{err}"
        );
        let err = parse("y,x\n1,2\n3,\n").unwrap_err().to_string();
        assert!(err.contains("missing value"), "{err}");
    }

    #[test]
    fn ragged_row_is_a_dimension_error() {
        let err = parse("y,x\n1,2\n3,4,5\n").unwrap_err().to_string();
        assert!(
            err.contains("dimension mismatch") && err.contains("line 3"),
            "{err}"
        );
    }

    #[test]
    fn intercept_is_found_and_left_alone() {
        let t = parse("y,one,x\n1,1,2\n2,1,4\n3,1,9\n").unwrap();
        let p = prepare_univariate(&t, &DataSection::default(), None).unwrap();
        assert_eq!(p.intercept, Some(0));
        assert!(p.dataset.x.column(0).iter().all(|v| *v == 1.0));
        assert!(p.dataset.x.column(1).mean().abs() < 1e-15);
    }

    #[test]
    fn constant_covariate_is_named() {
        let t = parse("y,c\n1,2\n2,2\n3,2\n").unwrap();
        let err = prepare_univariate(&t, &DataSection::default(), None)
            .unwrap_err()
            .to_string();
        assert!(err.contains("`c`"), "{err}");
    }
}
