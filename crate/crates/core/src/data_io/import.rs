//! One-way converters from public archive formats into [`Dataset`]s, which
//! can then be written in the canonical CSV format.
//!
//! Supported inputs:
//!
//! * UEA/sktime `.ts` files (`@`-prefixed header, then one case per line with
//!   dimensions separated by `:` and the class label last; `?` is missing).
//! * UCR 2018 `.tsv` files (univariate; label first, then values; trailing
//!   `NaN` padding of variable-length series is dropped).
//! * The raw UCI Japanese Vowels files `ae.train` / `ae.test` (12 LPC
//!   coefficients per line, utterances separated by blank lines). Speaker
//!   labels follow from block order: 30 training blocks per speaker and
//!   [`JAPANESE_VOWELS_TEST_COUNTS`] test blocks.

use std::io::{BufRead, BufReader};
use std::path::Path;
use std::str::FromStr;

use crate::data_io::{Dataset, TimeSeries};
use crate::error::{Error, Result};

pub const JAPANESE_VOWELS_TEST_COUNTS: [usize; 9] = [31, 35, 88, 44, 29, 24, 40, 50, 29];
const JAPANESE_VOWELS_TRAIN_PER_SPEAKER: usize = 30;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArchiveFormat {
    Ts,
    UcrTsv,
    UciJapaneseVowels,
}

impl FromStr for ArchiveFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ts" | "uea" => Ok(ArchiveFormat::Ts),
            "ucr" | "tsv" => Ok(ArchiveFormat::UcrTsv),
            "uci-japanese-vowels" => Ok(ArchiveFormat::UciJapaneseVowels),
            other => Err(Error::Parameter(format!(
                "unknown archive format {other:?} (expected ts, ucr or uci-japanese-vowels)"
            ))),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Split {
    Train,
    Test,
}

impl Split {
    fn prefix(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }
}

pub fn import_archive(format: ArchiveFormat, train_path: &Path, test_path: &Path, name: &str) -> Result<Dataset> {
    let read = |path: &Path, split: Split| -> Result<Vec<TimeSeries>> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let reader = BufReader::new(file);
        let source = path.display().to_string();
        match format {
            ArchiveFormat::Ts => parse_ts(reader, &source, split.prefix()),
            ArchiveFormat::UcrTsv => parse_ucr(reader, &source, split.prefix()),
            ArchiveFormat::UciJapaneseVowels => parse_uci_japanese_vowels(reader, &source, split == Split::Train),
        }
    };
    Dataset::new(name, read(train_path, Split::Train)?, read(test_path, Split::Test)?)
}

fn format_error(source: &str, line: usize, message: impl Into<String>) -> Error {
    Error::Format {
        path: source.to_string(),
        line,
        message: message.into(),
    }
}

fn parse_number(token: &str, missing: &[&str]) -> std::result::Result<f64, String> {
    let token = token.trim();
    if missing.contains(&token) {
        return Ok(f64::NAN);
    }
    match token.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(format!("{token:?} is not a finite number")),
    }
}

pub fn parse_ts<R: BufRead>(reader: R, source: &str, id_prefix: &str) -> Result<Vec<TimeSeries>> {
    let mut in_data = false;
    let mut out = Vec::new();
    for (k, line) in reader.lines().enumerate() {
        let lineno = k + 1;
        let line = line.map_err(|e| format_error(source, lineno, e.to_string()))?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !in_data {
            let lower = line.to_ascii_lowercase();
            if lower.starts_with("@timestamps") && lower.split_whitespace().nth(1) == Some("true") {
                return Err(format_error(source, lineno, "time-stamped .ts files are not supported"));
            }
            if lower == "@data" {
                in_data = true;
            }
            continue;
        }
        let mut dims: Vec<&str> = line.split(':').collect();
        let label = dims.pop().unwrap().trim();
        if dims.is_empty() || label.is_empty() {
            return Err(format_error(source, lineno, "expected dimensions followed by a class label"));
        }
        let columns = dims
            .iter()
            .map(|d| {
                d.split(',')
                    .map(|tok| parse_number(tok, &["?", "NaN"]))
                    .collect::<std::result::Result<Vec<f64>, String>>()
            })
            .collect::<std::result::Result<Vec<_>, String>>()
            .map_err(|m| format_error(source, lineno, m))?;
        let len = columns[0].len();
        if columns.iter().any(|c| c.len() != len) {
            return Err(format_error(source, lineno, "dimensions of one case differ in length"));
        }
        let n_vars = columns.len();
        let mut values = Vec::with_capacity(len * n_vars);
        for t in 0..len {
            values.extend(columns.iter().map(|c| c[t]));
        }
        out.push(TimeSeries::new(format!("{id_prefix}{}", out.len()), label, n_vars, values)?);
    }
    if !in_data {
        return Err(format_error(source, 0, "no @data section"));
    }
    if out.is_empty() {
        return Err(Error::Input(format!("{source}: no cases")));
    }
    Ok(out)
}

pub fn parse_ucr<R: BufRead>(reader: R, source: &str, id_prefix: &str) -> Result<Vec<TimeSeries>> {
    let mut out = Vec::new();
    for (k, line) in reader.lines().enumerate() {
        let lineno = k + 1;
        let line = line.map_err(|e| format_error(source, lineno, e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let mut tokens = line.split(['\t', ',']).map(str::trim);
        let label = tokens.next().unwrap_or_default();
        let label = match label.parse::<f64>() {
            // UCR writes integer labels as floats in some files.
            Ok(v) if v.fract() == 0.0 => format!("{}", v as i64),
            _ => label.to_string(),
        };
        let mut values = tokens
            .map(|tok| parse_number(tok, &["NaN", "nan"]))
            .collect::<std::result::Result<Vec<f64>, String>>()
            .map_err(|m| format_error(source, lineno, m))?;
        while values.last().is_some_and(|v| v.is_nan()) {
            values.pop();
        }
        if values.is_empty() {
            return Err(format_error(source, lineno, "series has no values"));
        }
        out.push(TimeSeries::new(format!("{id_prefix}{}", out.len()), label, 1, values)?);
    }
    if out.is_empty() {
        return Err(Error::Input(format!("{source}: no series")));
    }
    Ok(out)
}

pub fn parse_uci_japanese_vowels<R: BufRead>(reader: R, source: &str, train: bool) -> Result<Vec<TimeSeries>> {
    let mut blocks: Vec<Vec<f64>> = Vec::new();
    let mut current: Vec<f64> = Vec::new();
    for (k, line) in reader.lines().enumerate() {
        let lineno = k + 1;
        let line = line.map_err(|e| format_error(source, lineno, e.to_string()))?;
        if line.trim().is_empty() {
            if !current.is_empty() {
                blocks.push(std::mem::take(&mut current));
            }
            continue;
        }
        let row = line
            .split_whitespace()
            .map(|tok| parse_number(tok, &[]))
            .collect::<std::result::Result<Vec<f64>, String>>()
            .map_err(|m| format_error(source, lineno, m))?;
        if row.len() != 12 {
            return Err(format_error(source, lineno, format!("expected 12 coefficients, found {}", row.len())));
        }
        current.extend(row);
    }
    if !current.is_empty() {
        blocks.push(current);
    }

    let counts: Vec<usize> = if train {
        vec![JAPANESE_VOWELS_TRAIN_PER_SPEAKER; 9]
    } else {
        JAPANESE_VOWELS_TEST_COUNTS.to_vec()
    };
    let expected: usize = counts.iter().sum();
    if blocks.len() != expected {
        return Err(Error::Input(format!(
            "{source}: expected {expected} utterances, found {}",
            blocks.len()
        )));
    }
    let prefix = if train { "train" } else { "test" };
    let labels = counts
        .iter()
        .enumerate()
        .flat_map(|(speaker, &n)| std::iter::repeat_n(speaker + 1, n));
    blocks
        .into_iter()
        .zip(labels)
        .enumerate()
        .map(|(i, (values, speaker))| TimeSeries::new(format!("{prefix}{i}"), speaker.to_string(), 12, values))
        .collect()
}
