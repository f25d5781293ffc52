//! Random search, repeated benchmark runs, reports and the command line.

mod bench;
pub mod cli;
mod config;
mod search;
mod space;

pub use bench::{report_table, run_benchmark, runs_csv, write_reports, BenchmarkReport, RunRecord, Summary, RUNS_CSV_HEADER};
pub use config::{ConfigFile, ModelConfig};
pub use search::{random_search, stratified_split, SearchOutcome, SelectionMetric, TrialResult};
pub use space::{BdesnSpace, CandidateList, ConfigSpace, EsnSpace, HiddenLayersDist, IntDist, RealDist, SearchSpace};
