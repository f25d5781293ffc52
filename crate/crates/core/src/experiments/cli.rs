use std::ffi::OsString;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};

use crate::data_io::{
    import_archive, load_dataset, load_split, metrics_by_label, save_dataset, synth_task, ArchiveFormat, SynthKind,
};
use crate::experiments::{
    random_search, report_table, run_benchmark, write_reports, ConfigFile, SearchSpace, SelectionMetric,
};
use crate::pipeline::{Model, ModelKind};

#[derive(Parser, Debug)]
#[command(name = "bdesn", version, about = "Reservoir-based time-series classifiers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum KindArg {
    Esn,
    Bdesn,
}

impl From<KindArg> for ModelKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Esn => ModelKind::Esn,
            KindArg::Bdesn => ModelKind::Bdesn,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FormatArg {
    Ts,
    Ucr,
    UciJapaneseVowels,
}

impl From<FormatArg> for ArchiveFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Ts => ArchiveFormat::Ts,
            FormatArg::Ucr => ArchiveFormat::UcrTsv,
            FormatArg::UciJapaneseVowels => ArchiveFormat::UciJapaneseVowels,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum TaskArg {
    TwoFreqSinusoid,
    FirstStepMemory,
}

impl From<TaskArg> for SynthKind {
    fn from(t: TaskArg) -> Self {
        match t {
            TaskArg::TwoFreqSinusoid => SynthKind::TwoFreqSinusoid,
            TaskArg::FirstStepMemory => SynthKind::FirstStepMemory,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MetricArg {
    Accuracy,
    F1,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Convert a public archive split pair into canonical CSV files.
    Import {
        #[arg(long, value_enum)]
        format: FormatArg,
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        test: PathBuf,
        #[arg(long)]
        name: String,
        /// Output directory; receives <name>_TRAIN.csv and <name>_TEST.csv.
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a synthetic two-class task.
    Synth {
        #[arg(long, value_enum)]
        task: TaskArg,
        #[arg(long, default_value_t = 100)]
        n_train: usize,
        #[arg(long, default_value_t = 100)]
        n_test: usize,
        #[arg(long, default_value_t = 100)]
        length: usize,
        #[arg(long, default_value_t = 0.2)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory; receives <task>_TRAIN.csv and <task>_TEST.csv.
        #[arg(long)]
        out: PathBuf,
    },
    /// Random hyperparameter search on a training split.
    Search {
        #[arg(long)]
        train: PathBuf,
        #[arg(long, value_enum)]
        model: KindArg,
        /// Search space file; built-in ranges when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "accuracy")]
        metric: MetricArg,
        /// Positive class label for binary F1.
        #[arg(long)]
        positive: Option<String>,
        /// Best configuration, written as a config file.
        #[arg(long)]
        out: PathBuf,
        /// Optional per-trial CSV.
        #[arg(long)]
        trials_out: Option<PathBuf>,
    },
    /// Fit one model and save it.
    Train {
        #[arg(long)]
        train: PathBuf,
        #[arg(long, value_enum)]
        model: KindArg,
        /// Config file; built-in defaults when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Training-loss CSV (BDESN only).
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Score a saved model on a test split.
    Eval {
        #[arg(long)]
        model_file: PathBuf,
        #[arg(long)]
        test: PathBuf,
        #[arg(long)]
        positive: Option<String>,
        /// Optional JSON metrics file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Repeated train/test runs with timing.
    Bench {
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        test: PathBuf,
        /// Model kinds to run; both when omitted.
        #[arg(long, value_enum)]
        model: Vec<KindArg>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 10)]
        runs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        positive: Option<String>,
        /// Output directory for report.txt, runs.csv and logs/.
        #[arg(long)]
        out: PathBuf,
    },
}

/// Runs the command line and returns the process exit code: 0 on success,
/// 2 for usage errors, 1 for any other failure.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}

fn config_file(path: Option<&Path>) -> anyhow::Result<ConfigFile> {
    match path {
        Some(p) => Ok(ConfigFile::load(p)?),
        None => Ok(ConfigFile::default()),
    }
}

fn write_text(path: &Path, text: &str) -> anyhow::Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn execute(command: Command) -> anyhow::Result<()> {
    match command {
        Command::Import {
            format,
            train,
            test,
            name,
            out,
        } => {
            let ds = import_archive(format.into(), &train, &test, &name)?;
            std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
            let (tr, te) = (out.join(format!("{name}_TRAIN.csv")), out.join(format!("{name}_TEST.csv")));
            save_dataset(&ds, &tr, &te)?;
            println!(
                "{name}: {} train / {} test series, {} variables, {} classes -> {}, {}",
                ds.train.len(),
                ds.test.len(),
                ds.n_vars(),
                ds.n_classes(),
                tr.display(),
                te.display()
            );
        }
        Command::Synth {
            task,
            n_train,
            n_test,
            length,
            noise,
            seed,
            out,
        } => {
            let kind: SynthKind = task.into();
            let ds = synth_task(kind, n_train, n_test, length, noise, seed)?;
            std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
            let (tr, te) = (
                out.join(format!("{}_TRAIN.csv", kind.name())),
                out.join(format!("{}_TEST.csv", kind.name())),
            );
            save_dataset(&ds, &tr, &te)?;
            println!("wrote {} and {}", tr.display(), te.display());
        }
        Command::Search {
            train,
            model,
            config,
            trials,
            seed,
            metric,
            positive,
            out,
            trials_out,
        } => {
            let space = match &config {
                Some(p) => SearchSpace::load(p)?,
                None => SearchSpace::default(),
            };
            let series = load_split(&train)?;
            let metric = match metric {
                MetricArg::Accuracy => {
                    if positive.is_some() {
                        bail!("--positive only applies to --metric f1");
                    }
                    SelectionMetric::Accuracy
                }
                MetricArg::F1 => SelectionMetric::F1 { positive },
            };
            let outcome = random_search(space.for_kind(model.into()), trials, &series, seed, &metric)?;
            write_text(&out, &ConfigFile::from(outcome.best.clone()).to_toml()?)?;
            if let Some(path) = trials_out {
                write_text(&path, &outcome.trials_csv())?;
            }
            let best = outcome.best_trial();
            let failed = outcome.trials.iter().filter(|t| t.error.is_some()).count();
            println!(
                "best trial {} of {trials} (validation score {:.4}, {failed} failed): {}",
                best.index,
                best.score.unwrap_or(f64::NAN),
                best.config.describe()
            );
        }
        Command::Train {
            train,
            model,
            config,
            seed,
            out,
            log,
        } => {
            let cfg = config_file(config.as_deref())?.get_or_default(model.into()).with_seed(seed);
            let series = load_split(&train)?;
            let (fitted, train_log) = cfg.fit(&series)?;
            fitted.save(&out)?;
            match (log, train_log) {
                (Some(path), Some(l)) => l.save_csv(&path)?,
                (Some(_), None) => bail!("--log is only available for bdesn models"),
                _ => {}
            }
            println!("saved {} model to {}", fitted.kind(), out.display());
        }
        Command::Eval {
            model_file,
            test,
            positive,
            out,
        } => {
            let model = Model::load(&model_file)?;
            let series = load_split(&test)?;
            let predicted = model.predict_batch(&series)?;
            let actual: Vec<String> = series.iter().map(|s| s.label.clone()).collect();
            let m = metrics_by_label(&predicted, &actual, model.classes(), positive.as_deref())?;
            println!("accuracy {}", m.accuracy);
            println!("f1 {}", m.f1);
            println!("confusion (rows actual, columns predicted; classes {:?})", model.classes());
            for row in &m.confusion {
                println!("  {}", row.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(" "));
            }
            if let Some(path) = out {
                write_text(&path, &serde_json::to_string_pretty(&m)?)?;
            }
        }
        Command::Bench {
            train,
            test,
            model,
            config,
            runs,
            seed,
            positive,
            out,
        } => {
            let configs = config_file(config.as_deref())?;
            let ds = load_dataset(&train, &test)?;
            let kinds: Vec<ModelKind> = if model.is_empty() {
                vec![ModelKind::Esn, ModelKind::Bdesn]
            } else {
                model.into_iter().map(Into::into).collect()
            };
            let reports = kinds
                .into_iter()
                .map(|k| run_benchmark(&ds, &configs.get_or_default(k), runs, seed, positive.as_deref()))
                .collect::<crate::Result<Vec<_>>>()?;
            write_reports(&out, &reports)?;
            print!("{}", report_table(&reports));
        }
    }
    Ok(())
}
