//! Matrix panels on disk.
//!
//! Long format: a header `t,row,col,value` followed by one line per cell.
//! Stacked format: a `# T=..,p1=..,p2=..` line followed by `T` blocks of
//! `p1` lines with `p2` comma-separated values each (blank lines ignored).

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use ndarray::Array3;
use serde::{Deserialize, Serialize};

use super::format_float;
use crate::error::{Error, Result};
use crate::series::MatrixSeries;

const LONG_HEADER: [&str; 4] = ["t", "row", "col", "value"];
const MISSING_LISTED: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PanelFormat {
    #[default]
    #[serde(alias = "long_csv")]
    Long,
    #[serde(alias = "stacked_csv")]
    Stacked,
}

impl fmt::Display for PanelFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PanelFormat::Long => "long",
            PanelFormat::Stacked => "stacked",
        })
    }
}

impl FromStr for PanelFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "long" | "long_csv" => Ok(PanelFormat::Long),
            "stacked" | "stacked_csv" => Ok(PanelFormat::Stacked),
            _ => Err(Error::Config(format!("unknown panel format {s:?} (expected long or stacked)"))),
        }
    }
}

/// Labels of the time, row and column axes in tensor order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdMaps {
    pub periods: Vec<String>,
    pub rows: Vec<String>,
    pub cols: Vec<String>,
}

impl IdMaps {
    /// `0..T`, `0..p1`, `0..p2` as labels.
    pub fn positional(t: usize, p1: usize, p2: usize) -> Self {
        let seq = |n: usize| (0..n).map(|i| i.to_string()).collect();
        IdMaps { periods: seq(t), rows: seq(p1), cols: seq(p2) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Panel {
    pub series: MatrixSeries<f64>,
    pub ids: IdMaps,
}

/// Sorts labels numerically when every label is an integer, otherwise
/// lexicographically.
pub fn sort_ids(ids: &mut [String]) {
    let numeric: Option<Vec<i128>> = ids.iter().map(|s| s.parse::<i128>().ok()).collect();
    if let Some(keys) = numeric {
        let mut paired: Vec<(i128, String)> = keys.into_iter().zip(ids.iter().cloned()).collect();
        paired.sort();
        for (slot, (_, s)) in ids.iter_mut().zip(paired) {
            *slot = s;
        }
    } else {
        ids.sort();
    }
}

fn index_of(ids: &[String]) -> HashMap<&str, usize> {
    ids.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect()
}

fn parse_value(field: &str, line: usize) -> Result<f64> {
    let v: f64 =
        field.trim().parse().map_err(|_| Error::Parse { line, message: format!("non-numeric value {field:?}") })?;
    if !v.is_finite() {
        return Err(Error::Parse { line, message: format!("non-finite value {field:?}") });
    }
    Ok(v)
}

/// Reads a long-format panel.
pub fn read_long<R: Read>(reader: R) -> Result<Panel> {
    let mut csv = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let header = csv.headers().map_err(|e| csv_error(e, 1))?.clone();
    if header.iter().ne(LONG_HEADER) {
        return Err(Error::Parse {
            line: 1,
            message: format!(
                "expected header t,row,col,value, found {:?}",
                header.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }
    let mut cells: Vec<(String, String, String, f64, usize)> = Vec::new();
    for record in csv.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            csv_error(e, line)
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != 4 {
            return Err(Error::Parse { line, message: format!("expected 4 fields, found {}", record.len()) });
        }
        let value = parse_value(&record[3], line)?;
        cells.push((record[0].to_string(), record[1].to_string(), record[2].to_string(), value, line));
    }
    if cells.is_empty() {
        return Err(Error::InvalidInput("panel file has no data rows".into()));
    }
    let distinct = |pick: fn(&(String, String, String, f64, usize)) -> &String| {
        let mut ids: Vec<String> =
            cells.iter().map(|c| pick(c).clone()).collect::<std::collections::BTreeSet<_>>().into_iter().collect();
        sort_ids(&mut ids);
        ids
    };
    let ids = IdMaps { periods: distinct(|c| &c.0), rows: distinct(|c| &c.1), cols: distinct(|c| &c.2) };
    let (t_idx, r_idx, c_idx) = (index_of(&ids.periods), index_of(&ids.rows), index_of(&ids.cols));
    let shape = (ids.periods.len(), ids.rows.len(), ids.cols.len());
    let mut data = Array3::<f64>::zeros(shape);
    let mut seen = Array3::<bool>::from_elem(shape, false);
    for (t, r, c, v, line) in &cells {
        let at = (t_idx[t.as_str()], r_idx[r.as_str()], c_idx[c.as_str()]);
        if seen[at] {
            return Err(Error::Duplicate(format!("({t},{r},{c}) repeated at line {line}")));
        }
        seen[at] = true;
        data[at] = *v;
    }
    let missing: Vec<String> = seen
        .indexed_iter()
        .filter(|(_, present)| !**present)
        .map(|((a, b, c), _)| format!("({},{},{})", ids.periods[a], ids.rows[b], ids.cols[c]))
        .collect();
    if !missing.is_empty() {
        return Err(Error::Incomplete {
            count: missing.len(),
            first: missing.into_iter().take(MISSING_LISTED).collect::<Vec<_>>().join(" "),
        });
    }
    Ok(Panel { series: MatrixSeries::new(data)?, ids })
}

fn csv_error(e: csv::Error, line: usize) -> Error {
    Error::Parse { line, message: e.to_string() }
}

fn parse_stacked_header(line: &str) -> Result<(usize, usize, usize)> {
    let body = line.trim().strip_prefix('#').ok_or_else(|| Error::Parse {
        line: 1,
        message: "stacked panel must start with '# T=..,p1=..,p2=..'".into(),
    })?;
    let mut fields = BTreeMap::new();
    for part in body.split(',') {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| Error::Parse { line: 1, message: format!("malformed header field {part:?}") })?;
        let n: usize =
            v.trim().parse().map_err(|_| Error::Parse { line: 1, message: format!("malformed header value {v:?}") })?;
        fields.insert(k.trim().to_string(), n);
    }
    let get = |k: &str| {
        fields
            .get(k)
            .copied()
            .filter(|n| *n > 0)
            .ok_or_else(|| Error::Parse { line: 1, message: format!("header needs a positive {k}") })
    };
    Ok((get("T")?, get("p1")?, get("p2")?))
}

/// Reads a stacked-format panel; ids are positional.
pub fn read_stacked<R: Read>(reader: R) -> Result<Panel> {
    let mut lines = BufReader::new(reader).lines().enumerate();
    let header = match lines.next() {
        Some((_, line)) => line.map_err(|e| Error::Parse { line: 1, message: e.to_string() })?,
        None => return Err(Error::InvalidInput("empty panel file".into())),
    };
    let (t, p1, p2) = parse_stacked_header(&header)?;
    let mut data = Array3::<f64>::zeros((t, p1, p2));
    let mut filled = 0usize;
    for (idx, line) in lines {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::Parse { line: lineno, message: e.to_string() })?;
        if line.trim().is_empty() {
            continue;
        }
        if filled == t * p1 {
            return Err(Error::Parse { line: lineno, message: format!("more than T·p1 = {} data lines", t * p1) });
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != p2 {
            return Err(Error::Parse {
                line: lineno,
                message: format!("expected {p2} values, found {}", fields.len()),
            });
        }
        let (s, i) = (filled / p1, filled % p1);
        for (j, f) in fields.iter().enumerate() {
            data[[s, i, j]] = parse_value(f, lineno)?;
        }
        filled += 1;
    }
    if filled < t * p1 {
        let (s, i) = (filled / p1, filled % p1);
        return Err(Error::Incomplete {
            count: (t * p1 - filled) * p2,
            first: format!("rows from ({s},{i},0) onward"),
        });
    }
    Ok(Panel { series: MatrixSeries::new(data)?, ids: IdMaps::positional(t, p1, p2) })
}

pub fn load_panel(path: &Path, format: PanelFormat) -> Result<Panel> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let located = |e: Error| match e {
        Error::Parse { line, message } => Error::Parse { line, message: format!("{}: {message}", path.display()) },
        Error::Incomplete { count, first } => {
            Error::Incomplete { count, first: format!("{first} in {}", path.display()) }
        }
        Error::Duplicate(cell) => Error::Duplicate(format!("{cell} in {}", path.display())),
        other => other,
    };
    match format {
        PanelFormat::Long => read_long(file),
        PanelFormat::Stacked => read_stacked(file),
    }
    .map_err(located)
}

/// Writes `series`; `ids` label the axes of long-format output and default
/// to positions.
pub fn write_panel<W: Write>(
    out: W,
    series: &MatrixSeries<f64>,
    ids: Option<&IdMaps>,
    format: PanelFormat,
) -> std::io::Result<()> {
    let (t, p1, p2) = series.dims();
    let mut out = BufWriter::new(out);
    match format {
        PanelFormat::Long => {
            let positional;
            let ids = match ids {
                Some(ids) => ids,
                None => {
                    positional = IdMaps::positional(t, p1, p2);
                    &positional
                }
            };
            writeln!(out, "{}", LONG_HEADER.join(","))?;
            for s in 0..t {
                let slice = series.slice(s);
                for i in 0..p1 {
                    for j in 0..p2 {
                        writeln!(
                            out,
                            "{},{},{},{}",
                            ids.periods[s],
                            ids.rows[i],
                            ids.cols[j],
                            format_float(slice[[i, j]])
                        )?;
                    }
                }
            }
        }
        PanelFormat::Stacked => {
            writeln!(out, "# T={t},p1={p1},p2={p2}")?;
            for s in 0..t {
                for row in series.slice(s).rows() {
                    let fields: Vec<String> = row.iter().map(|v| format_float(*v)).collect();
                    writeln!(out, "{}", fields.join(","))?;
                }
            }
        }
    }
    out.flush()
}

pub fn save_panel(path: &Path, series: &MatrixSeries<f64>, ids: Option<&IdMaps>, format: PanelFormat) -> Result<()> {
    if let Some(ids) = ids {
        let (t, p1, p2) = series.dims();
        if (ids.periods.len(), ids.rows.len(), ids.cols.len()) != (t, p1, p2) {
            return Err(Error::Dimension("id maps do not match the panel dimensions".into()));
        }
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_panel(file, series, ids, format).map_err(|e| Error::io(path, e))
}
