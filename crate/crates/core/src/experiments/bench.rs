use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::data_io::{metrics_by_label, Dataset};
use crate::error::{Error, Result};
use crate::experiments::ModelConfig;
use crate::pipeline::ModelKind;
use crate::readout::TrainLog;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run: usize,
    pub seed: u64,
    pub accuracy: Option<f64>,
    pub f1: Option<f64>,
    /// Wall-clock seconds spent in fitting.
    pub train_seconds: Option<f64>,
    pub error: Option<String>,
    #[serde(skip)]
    pub log: Option<TrainLog>,
}

impl RunRecord {
    pub fn succeeded(&self) -> bool {
        self.error.is_none()
    }
}

/// Mean and unbiased standard deviation. `std` is absent with fewer than two
/// values.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub std: Option<f64>,
}

impl Summary {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = (values.len() >= 2)
            .then(|| (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt());
        Some(Self { mean, std })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub model: ModelKind,
    pub dataset: String,
    pub runs: Vec<RunRecord>,
    pub accuracy: Option<Summary>,
    pub f1: Option<Summary>,
    pub mean_train_minutes: Option<f64>,
}

impl BenchmarkReport {
    pub fn successful_runs(&self) -> usize {
        self.runs.iter().filter(|r| r.succeeded()).count()
    }
}

/// Trains and tests `config` `n_runs` times; run `i` uses seed `base_seed + i`.
/// Only the fit is timed. Failed runs stay in the report with their error.
pub fn run_benchmark(
    ds: &Dataset,
    config: &ModelConfig,
    n_runs: usize,
    base_seed: u64,
    positive: Option<&str>,
) -> Result<BenchmarkReport> {
    if n_runs == 0 {
        return Err(Error::Parameter("benchmark needs at least one run".into()));
    }
    let actual: Vec<String> = ds.test.iter().map(|s| s.label.clone()).collect();
    let mut runs = Vec::with_capacity(n_runs);
    for run in 0..n_runs {
        let seed = base_seed.wrapping_add(run as u64);
        let cfg = config.with_seed(seed);
        let start = Instant::now();
        let fitted = cfg.fit(&ds.train);
        let train_seconds = start.elapsed().as_secs_f64();
        let outcome = fitted.and_then(|(model, log)| {
            let predicted = model.predict_batch(&ds.test)?;
            Ok((metrics_by_label(&predicted, &actual, ds.classes(), positive)?, log))
        });
        runs.push(match outcome {
            Ok((m, log)) => RunRecord {
                run,
                seed,
                accuracy: Some(m.accuracy),
                f1: Some(m.f1),
                train_seconds: Some(train_seconds),
                error: None,
                log,
            },
            Err(e) => RunRecord {
                run,
                seed,
                accuracy: None,
                f1: None,
                train_seconds: None,
                error: Some(e.to_string()),
                log: None,
            },
        });
    }
    let collect = |f: fn(&RunRecord) -> Option<f64>| runs.iter().filter_map(f).collect::<Vec<f64>>();
    let accuracy = Summary::of(&collect(|r| r.accuracy));
    let f1 = Summary::of(&collect(|r| r.f1));
    let mean_train_minutes = Summary::of(&collect(|r| r.train_seconds)).map(|s| s.mean / 60.0);
    Ok(BenchmarkReport {
        model: config.kind(),
        dataset: ds.name.clone(),
        runs,
        accuracy,
        f1,
        mean_train_minutes,
    })
}

pub const RUNS_CSV_HEADER: &str = "model,dataset,run,seed,status,accuracy,f1,train_seconds";

/// One row per run, header [`RUNS_CSV_HEADER`]. Failed runs have empty
/// metric fields.
pub fn runs_csv(reports: &[BenchmarkReport]) -> String {
    let mut out = format!("{RUNS_CSV_HEADER}\n");
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for rep in reports {
        for r in &rep.runs {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                rep.model,
                rep.dataset,
                r.run,
                r.seed,
                if r.succeeded() { "ok" } else { "failed" },
                opt(r.accuracy),
                opt(r.f1),
                r.train_seconds.map(|t| format!("{t:.6}")).unwrap_or_default()
            ));
        }
    }
    out
}

fn pct(s: Option<Summary>) -> String {
    match s {
        None => "n/a".into(),
        Some(Summary { mean, std: None }) => format!("{:.2}", 100.0 * mean),
        Some(Summary { mean, std: Some(sd) }) => format!("{:.2} ± {:.2}", 100.0 * mean, 100.0 * sd),
    }
}

/// Aligned plain-text table, one row per model. Accuracy and F1 are in
/// percent as mean ± sample std over successful runs.
pub fn report_table(reports: &[BenchmarkReport]) -> String {
    let header = ["model", "dataset", "runs ok", "accuracy %", "F1 %", "train min"];
    let rows: Vec<[String; 6]> = reports
        .iter()
        .map(|r| {
            [
                r.model.to_string(),
                r.dataset.clone(),
                format!("{}/{}", r.successful_runs(), r.runs.len()),
                pct(r.accuracy),
                pct(r.f1),
                r.mean_train_minutes.map(|m| format!("{m:.4}")).unwrap_or_else(|| "n/a".into()),
            ]
        })
        .collect();
    let mut widths = header.map(|h| h.chars().count());
    for row in &rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: &[String]| {
        cells
            .iter()
            .zip(&widths)
            .map(|(c, &w)| format!("{c:<w$}"))
            .collect::<Vec<_>>()
            .join("  ")
            .trim_end()
            .to_string()
    };
    let mut out = line(&header.map(String::from));
    out.push('\n');
    out.push_str(&widths.iter().map(|&w| "-".repeat(w)).collect::<Vec<_>>().join("  "));
    out.push('\n');
    for row in &rows {
        out.push_str(&line(row));
        out.push('\n');
    }
    let failures: Vec<String> = reports
        .iter()
        .flat_map(|rep| {
            rep.runs
                .iter()
                .filter_map(move |r| r.error.as_ref().map(|e| format!("{} run {} (seed {}): {e}", rep.model, r.run, r.seed)))
        })
        .collect();
    if !failures.is_empty() {
        out.push_str("\nfailed runs:\n");
        for f in failures {
            out.push_str(&format!("  {f}\n"));
        }
    }
    out
}

/// Writes `report.txt`, `runs.csv` and one `logs/<model>_run<i>.csv` per
/// logged run into `dir`.
pub fn write_reports(dir: &Path, reports: &[BenchmarkReport]) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let write = |name: &str, text: String| {
        let path = dir.join(name);
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))
    };
    write("report.txt", report_table(reports))?;
    write("runs.csv", runs_csv(reports))?;
    for rep in reports {
        for r in &rep.runs {
            if let Some(log) = &r.log {
                let logs = dir.join("logs");
                std::fs::create_dir_all(&logs).map_err(|e| Error::io(&logs, e))?;
                log.save_csv(&logs.join(format!("{}_run{}.csv", rep.model, r.run)))?;
            }
        }
    }
    Ok(())
}
