//! Canonical dataset files.
//!
//! One UTF-8 file per split, LF line endings, comma-delimited, one row per
//! timestep:
//!
//! ```text
//! series_id,label,t,x1,...,xV
//! s0,walk,0,0.25,-1.5
//! s0,walk,1,0.5,NaN
//! ```
//!
//! Rows of a series are contiguous, `t` counts 0, 1, 2, ... without gaps, and
//! missing values are the literal `NaN`. Floats are written in the shortest
//! decimal form that parses back to the same bits.

use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::data_io::{Dataset, TimeSeries};
use crate::error::{Error, Result};

pub const CSV_MISSING: &str = "NaN";

/// Parses one split. `source` names the input in error messages.
pub fn parse_split<R: BufRead>(reader: R, source: &str) -> Result<Vec<TimeSeries>> {
    let fail = |line: usize, message: String| Error::Format {
        path: source.to_string(),
        line,
        message,
    };

    let mut lines = reader.lines();
    let header = match lines.next() {
        Some(h) => h.map_err(|e| fail(1, e.to_string()))?,
        None => return Err(Error::Input(format!("{source}: empty file"))),
    };
    let n_vars = parse_header(&header).map_err(|m| fail(1, m))?;

    let mut out: Vec<TimeSeries> = Vec::new();
    let mut current: Option<(String, String, Vec<f64>)> = None;
    let mut next_t = 0usize;
    let mut seen = std::collections::HashSet::new();

    for (k, line) in lines.enumerate() {
        let lineno = k + 2;
        let line = line.map_err(|e| fail(lineno, e.to_string()))?;
        if line.is_empty() {
            return Err(fail(lineno, "blank line".into()));
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != n_vars + 3 {
            return Err(fail(
                lineno,
                format!("expected {} fields (3 + {n_vars} variables), found {}", n_vars + 3, fields.len()),
            ));
        }
        let (id, label) = (fields[0], fields[1]);
        if id.is_empty() {
            return Err(fail(lineno, "empty series_id".into()));
        }
        if label.is_empty() {
            return Err(fail(lineno, "empty label".into()));
        }
        let t: usize = fields[2]
            .parse()
            .map_err(|_| fail(lineno, format!("time index {:?} is not a non-negative integer", fields[2])))?;

        let continues = matches!(&current, Some((cid, _, _)) if cid == id);
        if !continues {
            if let Some((cid, clabel, values)) = current.take() {
                out.push(TimeSeries::new(cid, clabel, n_vars, values)?);
            }
            if !seen.insert(id.to_string()) {
                return Err(fail(lineno, format!("rows of series {id:?} are not contiguous")));
            }
            current = Some((id.to_string(), label.to_string(), Vec::new()));
            next_t = 0;
        }
        let (_, clabel, values) = current.as_mut().unwrap();
        if clabel != label {
            return Err(fail(lineno, format!("series {id:?} changes label from {clabel:?} to {label:?}")));
        }
        if t != next_t {
            return Err(fail(lineno, format!("series {id:?}: expected t = {next_t}, found {t}")));
        }
        next_t += 1;
        for (j, field) in fields[3..].iter().enumerate() {
            values.push(parse_value(field).map_err(|m| fail(lineno, format!("x{}: {m}", j + 1)))?);
        }
    }
    if let Some((cid, clabel, values)) = current {
        out.push(TimeSeries::new(cid, clabel, n_vars, values)?);
    }
    if out.is_empty() {
        return Err(Error::Input(format!("{source}: no series")));
    }
    Ok(out)
}

fn parse_header(header: &str) -> std::result::Result<usize, String> {
    let fields: Vec<&str> = header.split(',').collect();
    if fields.len() < 4 || fields[..3] != ["series_id", "label", "t"] {
        return Err("header must start with series_id,label,t and name at least one variable".into());
    }
    for (j, name) in fields[3..].iter().enumerate() {
        if *name != format!("x{}", j + 1) {
            return Err(format!("variable column {} must be named x{}, found {name:?}", j + 1, j + 1));
        }
    }
    Ok(fields.len() - 3)
}

fn parse_value(field: &str) -> std::result::Result<f64, String> {
    if field == CSV_MISSING {
        return Ok(f64::NAN);
    }
    match field.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(format!("{field:?} is not a finite decimal number or {CSV_MISSING}")),
    }
}

pub fn load_split(path: impl AsRef<Path>) -> Result<Vec<TimeSeries>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_split(BufReader::new(file), &path.display().to_string())
}

/// Loads a train/test pair. The dataset name is the training file's stem
/// with any `_TRAIN` suffix removed.
pub fn load_dataset(train_path: impl AsRef<Path>, test_path: impl AsRef<Path>) -> Result<Dataset> {
    let train_path = train_path.as_ref();
    let train = load_split(train_path)?;
    let test = load_split(test_path)?;
    let stem = train_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let name = stem
        .strip_suffix("_TRAIN")
        .or_else(|| stem.strip_suffix("_train"))
        .unwrap_or(&stem)
        .to_string();
    Dataset::new(name, train, test)
}

pub fn write_split<W: Write>(mut out: W, series: &[TimeSeries]) -> Result<()> {
    let n_vars = match series.first() {
        Some(s) => s.n_vars(),
        None => return Err(Error::Input("cannot write an empty split".into())),
    };
    let io_err = |e: std::io::Error| Error::Input(format!("write failed: {e}"));
    let mut header = String::from("series_id,label,t");
    for j in 1..=n_vars {
        header.push_str(&format!(",x{j}"));
    }
    writeln!(out, "{header}").map_err(io_err)?;
    for s in series {
        if s.n_vars() != n_vars {
            return Err(Error::Input(format!("series {} has {} variables, expected {n_vars}", s.id, s.n_vars())));
        }
        for field in [&s.id, &s.label] {
            if field.is_empty() || field.contains([',', '\n', '\r']) {
                return Err(Error::Input(format!(
                    "series id or label {field:?} is empty or contains a delimiter"
                )));
            }
        }
        for t in 0..s.len() {
            let mut row = format!("{},{},{t}", s.id, s.label);
            for v in s.step(t) {
                if v.is_nan() {
                    row.push(',');
                    row.push_str(CSV_MISSING);
                } else {
                    row.push_str(&format!(",{v}"));
                }
            }
            writeln!(out, "{row}").map_err(io_err)?;
        }
    }
    Ok(())
}

pub fn save_split(path: impl AsRef<Path>, series: &[TimeSeries]) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_split(&mut w, series)?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn save_dataset(ds: &Dataset, train_path: impl AsRef<Path>, test_path: impl AsRef<Path>) -> Result<()> {
    save_split(train_path, &ds.train)?;
    save_split(test_path, &ds.test)
}
