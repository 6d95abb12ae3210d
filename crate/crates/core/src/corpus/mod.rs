//! File discovery, the per-file pipeline and the on-disk record store.

mod scan;
mod store;

use std::fmt;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::dataflow::{build_dataflow_with, DataflowError, DataflowOptions, DEFAULT_NODE_CAP};
use crate::features::{extract_features_with, FeatureOptions, FeatureReport, SCHEMA_VERSION};
use crate::syntax::failure::failure_record;
use crate::syntax::{parse_with, FailureRecord, ParseFailure, ParseOptions, DEFAULT_MAX_DEPTH};

pub use scan::{scan, scan_with, ScanOptions};
pub use store::{
    read_index, read_record, record_name, run_corpus, CategoryTotals, IndexEntry, RunIndex, RunOptions, RunOutcome, Totals,
    FAILURES_FILE, INDEX_FILE, RECORDS_DIR,
};

pub const DEFAULT_TIME_BUDGET: Duration = Duration::from_secs(60);

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Archive { path: PathBuf, message: String },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("{0}")]
    Other(String),
}

impl CorpusError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CorpusError::Io { path: path.into(), source }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Category {
    Default,
    Example,
    Test,
}

impl Category {
    pub const ALL: [Category; 3] = [Category::Default, Category::Example, Category::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::Default => "Default",
            Category::Example => "Example",
            Category::Test => "Test",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Example if any segment mentions "example"; Test if a directory segment
/// or the file stem starts with "test" once a leading package name is cut
/// off (so `testthat/R/utils.R` stays Default); Default otherwise.
pub fn categorize_file(path: &str, package_name: Option<&str>) -> Category {
    let segments: Vec<String> =
        path.split(['/', '\\']).filter(|s| !s.is_empty()).map(str::to_lowercase).collect();
    if segments.iter().any(|s| s.contains("example")) {
        return Category::Example;
    }
    let Some((file, dirs)) = segments.split_last() else {
        return Category::Default;
    };
    let stem = file.rsplit_once('.').map_or(file.as_str(), |(s, _)| s);
    let package = package_name.map(str::to_lowercase);
    let is_test = |seg: &str| {
        let rest = match &package {
            Some(p) if !p.is_empty() => seg.strip_prefix(p.as_str()).unwrap_or(seg),
            _ => seg,
        };
        rest.starts_with("test")
    };
    if dirs.iter().map(String::as_str).chain([stem]).any(is_test) {
        Category::Test
    } else {
        Category::Default
    }
}

/// Where a listed file's bytes come from.
#[derive(Debug, Clone)]
pub enum FileSource {
    Disk(PathBuf),
    /// Archive members are read once at scan time.
    Memory(Arc<[u8]>),
}

#[derive(Debug, Clone, Serialize)]
pub struct ManifestEntry {
    pub path: String,
    pub category: Category,
    pub bytes: u64,
    pub package: Option<String>,
    /// Set when the file could not be opened during the scan.
    pub read_error: Option<String>,
    #[serde(skip)]
    pub source: FileSource,
}

#[derive(Debug, Clone, Serialize)]
pub struct CorpusManifest {
    pub roots: Vec<PathBuf>,
    pub files: Vec<ManifestEntry>,
    pub dataset_label: String,
    /// Directories or archive members that could not be listed.
    pub skipped: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "reason")]
pub enum DataflowFailure {
    /// Nesting depth or graph node cap exceeded.
    ResourceLimit { limit: usize },
    Timeout { budget_secs: u64 },
    /// A fault inside the pipeline, contained to this file.
    Crash { message: String },
    Unreadable { message: String },
}

impl DataflowFailure {
    pub fn kind(&self) -> &'static str {
        match self {
            DataflowFailure::ResourceLimit { .. } => "ResourceLimit",
            DataflowFailure::Timeout { .. } => "Timeout",
            DataflowFailure::Crash { .. } => "Crash",
            DataflowFailure::Unreadable { .. } => "Unreadable",
        }
    }

    pub const KINDS: [&'static str; 4] = ["Crash", "ResourceLimit", "Timeout", "Unreadable"];
}

impl fmt::Display for DataflowFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DataflowFailure::ResourceLimit { limit } => write!(f, "resource limit exceeded ({limit})"),
            DataflowFailure::Timeout { budget_secs } => write!(f, "time budget of {budget_secs}s exceeded"),
            DataflowFailure::Crash { message } => write!(f, "pipeline crash: {message}"),
            DataflowFailure::Unreadable { message } => write!(f, "unreadable: {message}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FileStatus {
    Ok,
    ParseFailed(FailureRecord),
    DataflowFailed(DataflowFailure),
}

impl FileStatus {
    pub fn is_ok(&self) -> bool {
        matches!(self, FileStatus::Ok)
    }
}

/// Stage durations in microseconds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Timings {
    pub read_us: u64,
    pub parse_us: u64,
    pub dataflow_us: u64,
    pub extract_us: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileRecord {
    pub schema_version: u32,
    pub path: String,
    pub category: Category,
    pub bytes: u64,
    pub status: FileStatus,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub report: Option<FeatureReport>,
    /// Only kept when asked for; wall-clock numbers would make records
    /// differ between otherwise identical runs.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub timings: Option<Timings>,
}

#[derive(Debug, Clone)]
pub struct ProcessOptions {
    pub max_depth: usize,
    pub node_cap: usize,
    pub time_budget: Duration,
    pub features: FeatureOptions,
    pub record_timings: bool,
    #[doc(hidden)]
    pub fault_injection: Option<fn(&[u8])>,
}

impl Default for ProcessOptions {
    fn default() -> Self {
        Self {
            max_depth: DEFAULT_MAX_DEPTH,
            node_cap: DEFAULT_NODE_CAP,
            time_budget: DEFAULT_TIME_BUDGET,
            features: FeatureOptions::default(),
            record_timings: false,
            fault_injection: None,
        }
    }
}

fn micros(since: Instant) -> u64 {
    since.elapsed().as_micros().min(u64::MAX as u128) as u64
}

fn read_source(entry: &ManifestEntry) -> Result<Arc<[u8]>, String> {
    if let Some(e) = &entry.read_error {
        return Err(e.clone());
    }
    match &entry.source {
        FileSource::Memory(bytes) => Ok(bytes.clone()),
        FileSource::Disk(p) => std::fs::read(p).map(Arc::from).map_err(|e| e.to_string()),
    }
}

/// Run parse, dataflow and extraction on one listed file. Every failure,
/// including a panic, ends up in the record's status.
pub fn process_file(entry: &ManifestEntry, opts: &ProcessOptions) -> FileRecord {
    let mut timings = Timings::default();
    let start = Instant::now();
    let result = match read_source(entry) {
        Err(message) => Err(FileStatus::DataflowFailed(DataflowFailure::Unreadable { message })),
        Ok(src) => {
            timings.read_us = micros(start);
            catch_unwind(AssertUnwindSafe(|| pipeline(&src, opts, &mut timings))).unwrap_or_else(|payload| {
                Err(FileStatus::DataflowFailed(DataflowFailure::Crash { message: panic_message(&*payload) }))
            })
        }
    };
    let (status, report) = match result {
        Ok(report) => (FileStatus::Ok, Some(report)),
        Err(status) => (status, None),
    };
    FileRecord {
        schema_version: SCHEMA_VERSION,
        path: entry.path.clone(),
        category: entry.category,
        bytes: entry.bytes,
        status,
        report,
        timings: opts.record_timings.then_some(timings),
    }
}

fn pipeline(src: &[u8], opts: &ProcessOptions, timings: &mut Timings) -> Result<FeatureReport, FileStatus> {
    if let Some(fault) = opts.fault_injection {
        fault(src);
    }
    let started = Instant::now();
    let deadline = started + opts.time_budget;
    let timeout = || FileStatus::DataflowFailed(DataflowFailure::Timeout { budget_secs: opts.time_budget.as_secs() });
    let t = Instant::now();
    let ast = parse_with(src, ParseOptions { max_depth: opts.max_depth, deadline: Some(deadline) });
    timings.parse_us = micros(t);
    let ast = match ast {
        Ok(ast) => ast,
        Err(ParseFailure::TooDeep { limit, .. }) => {
            return Err(FileStatus::DataflowFailed(DataflowFailure::ResourceLimit { limit }))
        }
        Err(ParseFailure::Timeout) => return Err(timeout()),
        Err(f @ ParseFailure::Syntax(_)) => return Err(FileStatus::ParseFailed(failure_record(src, f))),
    };
    let t = Instant::now();
    let graph = build_dataflow_with(&ast, DataflowOptions { node_cap: opts.node_cap }).map_err(
        |DataflowError::ResourceLimit { limit }| FileStatus::DataflowFailed(DataflowFailure::ResourceLimit { limit }),
    )?;
    timings.dataflow_us = micros(t);
    if Instant::now() > deadline {
        return Err(timeout());
    }
    let t = Instant::now();
    let report = extract_features_with(&ast, &graph, src, &opts.features);
    timings.extract_us = micros(t);
    Ok(report)
}

fn panic_message(payload: &(dyn std::any::Any + Send)) -> String {
    if let Some(s) = payload.downcast_ref::<&str>() {
        s.to_string()
    } else if let Some(s) = payload.downcast_ref::<String>() {
        s.clone()
    } else {
        "panic".to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn categories() {
        assert_eq!(categorize_file("pkg/man/examples/demo.R", None), Category::Example);
        assert_eq!(categorize_file("testthat/test-parse.R", Some("testthat")), Category::Test);
        assert_eq!(categorize_file("R/utils.R", None), Category::Default);
        assert_eq!(categorize_file("testthat/R/utils.R", Some("testthat")), Category::Default);
        assert_eq!(categorize_file("pkg/tests/testthat/test-x.R", Some("pkg")), Category::Test);
        assert_eq!(categorize_file("pkg/inst/Examples/run.r", Some("pkg")), Category::Example);
        assert_eq!(categorize_file("pkg/R/testing.R", Some("pkg")), Category::Test);
        assert_eq!(categorize_file("pkg/R/attest.R", Some("pkg")), Category::Default);
    }

    fn entry(src: &str) -> ManifestEntry {
        ManifestEntry {
            path: "mem.R".into(),
            category: Category::Default,
            bytes: src.len() as u64,
            package: None,
            read_error: None,
            source: FileSource::Memory(Arc::from(src.as_bytes())),
        }
    }

    #[test]
    fn statuses() {
        let opts = ProcessOptions::default();
        let ok = process_file(&entry("x <- 1\n"), &opts);
        assert!(ok.status.is_ok() && ok.report.is_some() && ok.timings.is_none());

        let doc = process_file(&entry("f <- function() 1\n\\donttest{\nf(\n"), &opts);
        match doc.status {
            FileStatus::ParseFailed(r) => assert_eq!(r.category.as_str(), "DocumentationCommand"),
            s => panic!("{s:?}"),
        }
        assert!(doc.report.is_none());

        let deep = format!("{}1{}", "(".repeat(2000), ")".repeat(2000));
        let rec = process_file(&entry(&deep), &opts);
        assert!(matches!(rec.status, FileStatus::DataflowFailed(DataflowFailure::ResourceLimit { .. })));

        let small = ProcessOptions { node_cap: 10, ..ProcessOptions::default() };
        let rec = process_file(&entry("a <- b + c + d + e + f + g"), &small);
        assert_eq!(rec.status, FileStatus::DataflowFailed(DataflowFailure::ResourceLimit { limit: 10 }));
    }

    #[test]
    fn panics_are_contained() {
        let opts = ProcessOptions {
            fault_injection: Some(|src| assert!(!src.starts_with(b"boom"), "injected")),
            ..ProcessOptions::default()
        };
        let rec = process_file(&entry("boom()"), &opts);
        match rec.status {
            FileStatus::DataflowFailed(DataflowFailure::Crash { message }) => assert!(message.contains("injected")),
            s => panic!("{s:?}"),
        }
        assert!(process_file(&entry("fine()"), &opts).status.is_ok());
    }

    #[test]
    fn zero_budget_times_out() {
        let opts = ProcessOptions { time_budget: Duration::ZERO, ..ProcessOptions::default() };
        let src = "x <- 1\n".repeat(5000);
        let rec = process_file(&entry(&src), &opts);
        assert_eq!(rec.status, FileStatus::DataflowFailed(DataflowFailure::Timeout { budget_secs: 0 }));
    }
}
