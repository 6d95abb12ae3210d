use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{process_file, Category, CorpusError, CorpusManifest, FileRecord, FileStatus, ProcessOptions};
use crate::features::SCHEMA_VERSION;
use crate::syntax::FailureCategory;

pub const INDEX_FILE: &str = "index.json";
pub const FAILURES_FILE: &str = "failures.csv";
pub const RECORDS_DIR: &str = "records";

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub jobs: usize,
    /// Keep records that already exist with the current schema version.
    pub resume: bool,
    pub process: ProcessOptions,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { jobs: 1, resume: false, process: ProcessOptions::default() }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Totals {
    pub ok: u64,
    pub parse_failed: BTreeMap<String, u64>,
    pub parse_failed_total: u64,
    pub dataflow_failed: BTreeMap<String, u64>,
    pub dataflow_failed_total: u64,
}

impl Totals {
    fn zeroed() -> Self {
        Totals {
            parse_failed: FailureCategory::ALL.iter().map(|c| (c.as_str().to_string(), 0)).collect(),
            dataflow_failed: super::DataflowFailure::KINDS.iter().map(|k| (k.to_string(), 0)).collect(),
            ..Totals::default()
        }
    }

    pub fn files(&self) -> u64 {
        self.ok + self.parse_failed_total + self.dataflow_failed_total
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryTotals {
    pub files: u64,
    pub ok: u64,
    pub parse_failed: u64,
    pub dataflow_failed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexEntry {
    pub path: String,
    pub category: Category,
    /// Relative to the output directory.
    pub record: String,
    /// "Ok", a parse failure category, or "DataflowFailed:<reason>".
    pub status: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunIndex {
    pub schema_version: u32,
    pub tool_version: String,
    pub dataset_label: String,
    /// False while a run is in progress or after it was interrupted.
    pub complete: bool,
    pub roots: Vec<String>,
    pub manifest_size: u64,
    pub totals: Totals,
    pub by_category: BTreeMap<Category, CategoryTotals>,
    pub files: Vec<IndexEntry>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub index: RunIndex,
    /// Records written by this run; the rest were kept by `resume`.
    pub recomputed: usize,
}

/// Stable record file name for a listed path.
pub fn record_name(path: &str) -> String {
    let digest = Sha256::digest(path.as_bytes());
    let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
    format!("{hex}.json")
}

fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), CorpusError> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, contents).map_err(|e| CorpusError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| CorpusError::io(path, e))
}

fn to_json_line<T: Serialize>(value: &T, pretty: bool) -> Vec<u8> {
    let mut out = if pretty {
        serde_json::to_vec_pretty(value).expect("serializable")
    } else {
        serde_json::to_vec(value).expect("serializable")
    };
    out.push(b'\n');
    out
}

pub fn read_record(path: &Path) -> Result<FileRecord, CorpusError> {
    let bytes = fs::read(path).map_err(|e| CorpusError::io(path, e))?;
    serde_json::from_slice(&bytes).map_err(|source| CorpusError::Json { path: path.to_path_buf(), source })
}

pub fn read_index(out: &Path) -> Result<RunIndex, CorpusError> {
    let path = out.join(INDEX_FILE);
    let bytes = fs::read(&path).map_err(|e| CorpusError::io(&path, e))?;
    serde_json::from_slice(&bytes).map_err(|source| CorpusError::Json { path, source })
}

fn current_record(path: &Path) -> Option<FileRecord> {
    #[derive(Deserialize)]
    struct Version {
        schema_version: u32,
    }
    let bytes = fs::read(path).ok()?;
    let v: Version = serde_json::from_slice(&bytes).ok()?;
    if v.schema_version != SCHEMA_VERSION {
        return None;
    }
    serde_json::from_slice(&bytes).ok()
}

fn status_label(status: &FileStatus) -> String {
    match status {
        FileStatus::Ok => "Ok".to_string(),
        FileStatus::ParseFailed(f) => f.category.as_str().to_string(),
        FileStatus::DataflowFailed(r) => format!("DataflowFailed:{}", r.kind()),
    }
}

/// What the index and failure table need from one record.
struct Outcome {
    entry: IndexEntry,
    failure: Option<(String, String)>,
    recomputed: bool,
}

/// Process every listed file and write records, `index.json` and
/// `failures.csv` under `out`. Output does not depend on `jobs`.
pub fn run_corpus(manifest: &CorpusManifest, out: &Path, opts: &RunOptions) -> Result<RunOutcome, CorpusError> {
    let records_dir = out.join(RECORDS_DIR);
    fs::create_dir_all(&records_dir).map_err(|e| CorpusError::io(&records_dir, e))?;

    let mut index = RunIndex {
        schema_version: SCHEMA_VERSION,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        dataset_label: manifest.dataset_label.clone(),
        complete: false,
        roots: manifest.roots.iter().map(|r| r.to_string_lossy().replace('\\', "/")).collect(),
        manifest_size: manifest.files.len() as u64,
        totals: Totals::zeroed(),
        by_category: Category::ALL.iter().map(|&c| (c, CategoryTotals::default())).collect(),
        files: Vec::new(),
    };
    write_atomic(&out.join(INDEX_FILE), &to_json_line(&index, true))?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs.max(1))
        .build()
        .map_err(|e| CorpusError::Other(e.to_string()))?;
    let outcomes: Vec<Outcome> = pool.install(|| {
        manifest
            .files
            .par_iter()
            .map(|entry| {
                let name = record_name(&entry.path);
                let path = records_dir.join(&name);
                let kept = if opts.resume { current_record(&path) } else { None };
                let recomputed = kept.is_none();
                let record = match kept {
                    Some(r) => r,
                    None => {
                        let r = process_file(entry, &opts.process);
                        write_atomic(&path, &to_json_line(&r, false))?;
                        r
                    }
                };
                let failure = match &record.status {
                    FileStatus::Ok => None,
                    FileStatus::ParseFailed(f) => Some((f.category.as_str().to_string(), f.message.clone())),
                    FileStatus::DataflowFailed(r) => Some(("DataflowFailed".to_string(), r.to_string())),
                };
                Ok(Outcome {
                    entry: IndexEntry {
                        path: entry.path.clone(),
                        category: entry.category,
                        record: format!("{RECORDS_DIR}/{name}"),
                        status: status_label(&record.status),
                    },
                    failure,
                    recomputed,
                })
            })
            .collect::<Result<_, CorpusError>>()
    })?;

    let mut failures = csv::Writer::from_writer(Vec::new());
    failures.write_record(["path", "category", "message"]).map_err(csv_err)?;
    let mut recomputed = 0;
    for o in outcomes {
        let t = &mut index.totals;
        let cat = index.by_category.entry(o.entry.category).or_default();
        cat.files += 1;
        let status = o.entry.status.as_str();
        if status == "Ok" {
            t.ok += 1;
            cat.ok += 1;
        } else if let Some(reason) = status.strip_prefix("DataflowFailed:") {
            *t.dataflow_failed.entry(reason.to_string()).or_default() += 1;
            t.dataflow_failed_total += 1;
            cat.dataflow_failed += 1;
        } else {
            *t.parse_failed.entry(status.to_string()).or_default() += 1;
            t.parse_failed_total += 1;
            cat.parse_failed += 1;
        }
        if let Some((category, message)) = &o.failure {
            failures.write_record([o.entry.path.as_str(), category, message]).map_err(csv_err)?;
        }
        recomputed += o.recomputed as usize;
        index.files.push(o.entry);
    }
    let csv = failures.into_inner().map_err(|e| CorpusError::Other(e.to_string()))?;
    write_atomic(&out.join(FAILURES_FILE), &csv)?;

    index.complete = true;
    write_atomic(&out.join(INDEX_FILE), &to_json_line(&index, true))?;
    Ok(RunOutcome { index, recomputed })
}

fn csv_err(e: csv::Error) -> CorpusError {
    CorpusError::Other(e.to_string())
}
