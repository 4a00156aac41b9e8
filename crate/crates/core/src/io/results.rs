//! CSV result tables.

use std::fs::File;
use std::path::Path;

use ndarray::Array2;

use super::format_float;
use crate::error::{Error, Result};
use crate::evaluation::RollingReport;
use crate::series::FactorSeries;

/// An in-memory CSV table of already formatted cells.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        Table { header: header.iter().map(|h| h.as_ref().to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    /// Cell `name` of every row parsed as a float (empty cells become NaN).
    pub fn floats(&self, name: &str) -> Result<Vec<f64>> {
        let col = self.column(name).ok_or_else(|| Error::InvalidInput(format!("no column {name:?}")))?;
        self.rows
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let cell = r[col].trim();
                if cell.is_empty() {
                    return Ok(f64::NAN);
                }
                cell.parse()
                    .map_err(|_| Error::Parse { line: i + 2, message: format!("non-numeric {name} value {cell:?}") })
            })
            .collect()
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let io_err = |e: csv::Error| match e.into_kind() {
            csv::ErrorKind::Io(e) => Error::io(path, e),
            other => Error::InvalidInput(format!("{}: {other:?}", path.display())),
        };
        let mut w = csv::Writer::from_path(path).map_err(io_err)?;
        w.write_record(&self.header).map_err(io_err)?;
        for r in &self.rows {
            w.write_record(r).map_err(io_err)?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Table> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut r = csv::Reader::from_reader(file);
        let parse_err = |e: csv::Error| Error::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: format!("{}: {e}", path.display()),
        };
        let header = r.headers().map_err(parse_err)?.iter().map(str::to_string).collect();
        let mut table = Table { header, rows: Vec::new() };
        for rec in r.records() {
            table.rows.push(rec.map_err(parse_err)?.iter().map(str::to_string).collect());
        }
        Ok(table)
    }
}

/// `rolling.csv`: `period,mse,rho,v` with an empty `v` for the first period.
pub fn rolling_table(report: &RollingReport) -> Table {
    let mut t = Table::new(&["period", "mse", "rho", "v"]);
    for p in &report.periods {
        t.push(vec![
            p.period.to_string(),
            format_float(p.mse),
            format_float(p.rho),
            p.v.map(format_float).unwrap_or_default(),
        ]);
    }
    t
}

/// Loading matrix with one row per id: `id,f1,..,fk`.
pub fn loadings_table(loadings: &Array2<f64>, ids: &[String]) -> Result<Table> {
    if ids.len() != loadings.nrows() {
        return Err(Error::Dimension(format!("{} ids for a loading matrix with {} rows", ids.len(), loadings.nrows())));
    }
    let mut header = vec!["id".to_string()];
    header.extend((1..=loadings.ncols()).map(|j| format!("f{j}")));
    let mut t = Table::new(&header);
    for (id, row) in ids.iter().zip(loadings.rows()) {
        let mut cells = vec![id.clone()];
        cells.extend(row.iter().map(|v| format_float(*v)));
        t.push(cells);
    }
    Ok(t)
}

/// Inverse of [`loadings_table`].
pub fn read_loadings(path: &Path) -> Result<(Vec<String>, Array2<f64>)> {
    let t = Table::read(path)?;
    if t.header.first().map(String::as_str) != Some("id") || t.header.len() < 2 {
        return Err(Error::Parse { line: 1, message: format!("{}: expected header id,f1,..", path.display()) });
    }
    let k = t.header.len() - 1;
    let mut m = Array2::<f64>::zeros((t.rows.len(), k));
    let mut ids = Vec::with_capacity(t.rows.len());
    for (i, row) in t.rows.iter().enumerate() {
        ids.push(row[0].clone());
        for j in 0..k {
            m[[i, j]] = row[j + 1].trim().parse().map_err(|_| Error::Parse {
                line: i + 2,
                message: format!("{}: non-numeric loading {:?}", path.display(), row[j + 1]),
            })?;
        }
    }
    Ok((ids, m))
}

/// Estimated factors in long form: `t,factor_row,factor_col,value`.
pub fn factors_table(factors: &FactorSeries<f64>, periods: &[String]) -> Table {
    let (t, k1, k2) = factors.dims();
    let mut table = Table::new(&["t", "factor_row", "factor_col", "value"]);
    for (s, period) in periods.iter().enumerate().take(t) {
        let f = factors.slice(s);
        for i in 0..k1 {
            for j in 0..k2 {
                table.push(vec![period.clone(), (i + 1).to_string(), (j + 1).to_string(), format_float(f[[i, j]])]);
            }
        }
    }
    table
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluation::RollingPeriod;

    #[test]
    fn rolling_table_round_trips_exactly() {
        let report = RollingReport {
            periods: vec![
                RollingPeriod { period: 3, mse: 0.1 + 0.2, rho: 1.0 / 3.0, v: None },
                RollingPeriod { period: 4, mse: 2.0f64.sqrt(), rho: 1e-310, v: Some(std::f64::consts::PI / 10.0) },
            ],
            mean_mse: 0.0,
            mean_rho: 0.0,
            mean_v: 0.0,
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rolling.csv");
        rolling_table(&report).write(&path).unwrap();
        let back = Table::read(&path).unwrap();
        assert_eq!(back.header, vec!["period", "mse", "rho", "v"]);
        assert_eq!(back.floats("mse").unwrap(), vec![0.1 + 0.2, 2.0f64.sqrt()]);
        assert_eq!(back.floats("rho").unwrap()[1], 1e-310);
        let v = back.floats("v").unwrap();
        assert!(v[0].is_nan());
        assert_eq!(v[1], std::f64::consts::PI / 10.0);
    }

    #[test]
    fn loadings_round_trip_with_ids() {
        let m = Array2::from_shape_fn((3, 2), |(i, j)| (i as f64 - j as f64) / 3.0);
        let ids: Vec<String> = ["US", "UK", "JP"].iter().map(|s| s.to_string()).collect();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("loadings_R.csv");
        loadings_table(&m, &ids).unwrap().write(&path).unwrap();
        let (back_ids, back) = read_loadings(&path).unwrap();
        assert_eq!(back_ids, ids);
        assert_eq!(back, m);
    }
}
