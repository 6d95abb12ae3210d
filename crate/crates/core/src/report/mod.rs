//! Corpus summaries, two-dataset comparison and their CSV/JSON emission.

mod compare;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::corpus::{read_index, read_record, Category, CategoryTotals, CorpusError, FileRecord, RunIndex, Totals};
use crate::features::{FeatureReport, SCHEMA_VERSION};

pub use compare::{compare, compare_dirs, CompareOptions, ComparisonReport, ComparisonRow, GroupStat, RowKind};

pub const SUMMARY_JSON: &str = "summary.json";
pub const PERCENTILES: [u32; 9] = [1, 5, 10, 25, 50, 75, 90, 95, 99];
pub const DEFAULT_TOP_N: usize = 20;

/// Nearest-rank percentile: the ⌈q/100·n⌉-th smallest value.
///
/// Panics on an empty slice or `q` outside (0, 100].
pub fn percentile(values: &[f64], q: f64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    percentile_sorted(&sorted, q)
}

pub fn percentile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "percentile of an empty sequence");
    assert!(q > 0.0 && q <= 100.0, "percentile q must be in (0, 100]");
    let rank = (q / 100.0 * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

/// One scalar leaf of a flattened report.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Leaf {
    Count(u64),
    Flag(bool),
    Real(f64),
}

impl Leaf {
    pub(crate) fn value(self) -> f64 {
        match self {
            Leaf::Count(n) => n as f64,
            Leaf::Flag(b) => b as u8 as f64,
            Leaf::Real(x) => x,
        }
    }
}

/// Dotted keys for every scalar in a report; lists count as their length.
pub(crate) fn flatten(report: &FeatureReport) -> Vec<(String, Leaf)> {
    let mut out = Vec::new();
    if let Value::Object(m) = serde_json::to_value(report).expect("serializable") {
        for (k, v) in &m {
            if k != "schema_version" {
                flatten_into(k, v, &mut out);
            }
        }
    }
    out
}

fn flatten_into(prefix: &str, v: &Value, out: &mut Vec<(String, Leaf)>) {
    match v {
        Value::Object(m) => {
            for (k, v) in m {
                flatten_into(&format!("{prefix}.{k}"), v, out);
            }
        }
        Value::Array(a) => out.push((prefix.to_string(), Leaf::Count(a.len() as u64))),
        Value::Bool(b) => out.push((prefix.to_string(), Leaf::Flag(*b))),
        Value::Number(n) => {
            let leaf = n.as_u64().map(Leaf::Count).unwrap_or_else(|| Leaf::Real(n.as_f64().unwrap_or(0.0)));
            out.push((prefix.to_string(), leaf))
        }
        _ => {}
    }
}

/// Per-name call counts are reported through `top_functions` instead.
const RANKED_PREFIX: &str = "fun_calls.by_name.";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRow {
    pub feature: String,
    /// Ok files where the counter is nonzero (or the flag set).
    pub files_with: u64,
    pub presence_pct: f64,
    pub total: u64,
    /// Over Ok files.
    pub mean_per_file: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedName {
    pub name: String,
    pub files_with: u64,
    pub presence_pct: f64,
    /// Call count for functions; omitted for packages.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub count: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeRow {
    pub metric: String,
    pub percentile: u32,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Funnel {
    pub manifest_size: u64,
    pub complete: bool,
    pub totals: Totals,
    pub by_category: BTreeMap<Category, CategoryTotals>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryTables {
    pub schema_version: u32,
    pub dataset_label: String,
    pub funnel: Funnel,
    pub ok_files: u64,
    pub totals: Vec<FeatureRow>,
    pub per_category: BTreeMap<Category, Vec<FeatureRow>>,
    /// Operator set joined by "," → number of Ok files with at least one
    /// assignment using exactly that set.
    pub operator_combination_matrix: BTreeMap<String, u64>,
    pub top_functions: Vec<RankedName>,
    pub top_packages: Vec<RankedName>,
    pub size_distribution: Vec<SizeRow>,
}

#[derive(Debug, Clone, Copy)]
pub struct SummaryOptions {
    pub top_n: usize,
}

impl Default for SummaryOptions {
    fn default() -> Self {
        Self { top_n: DEFAULT_TOP_N }
    }
}

#[derive(Default)]
struct Acc {
    files_with: u64,
    total: u64,
}

#[derive(Default)]
struct Scope {
    ok_files: u64,
    features: BTreeMap<String, Acc>,
}

impl Scope {
    fn seeded() -> Self {
        let features = flatten(&FeatureReport::default())
            .into_iter()
            .filter(|(_, l)| !matches!(l, Leaf::Real(_)))
            .map(|(k, _)| (k, Acc::default()))
            .collect();
        Scope { ok_files: 0, features }
    }

    fn add(&mut self, leaves: &[(String, Leaf)]) {
        self.ok_files += 1;
        for (k, leaf) in leaves {
            let n = match *leaf {
                Leaf::Count(n) => n,
                Leaf::Flag(b) => b as u64,
                Leaf::Real(_) => continue,
            };
            if k.starts_with(RANKED_PREFIX) {
                continue;
            }
            let acc = self.features.entry(k.clone()).or_default();
            acc.total += n;
            acc.files_with += (n > 0) as u64;
        }
    }

    fn rows(&self) -> Vec<FeatureRow> {
        self.features
            .iter()
            .map(|(k, a)| FeatureRow {
                feature: k.clone(),
                files_with: a.files_with,
                presence_pct: pct(a.files_with, self.ok_files),
                total: a.total,
                mean_per_file: ratio(a.total, self.ok_files),
            })
            .collect()
    }
}

fn pct(part: u64, whole: u64) -> f64 {
    100.0 * ratio(part, whole)
}

fn ratio(part: u64, whole: u64) -> f64 {
    if whole == 0 {
        0.0
    } else {
        part as f64 / whole as f64
    }
}

const SIZE_METRICS: [&str; 4] = ["bytes", "lines", "max_line_length", "mean_line_length"];

/// Folds records one at a time; nothing but counters and one size sample
/// per Ok file is kept.
pub struct Summarizer {
    opts: SummaryOptions,
    all: Scope,
    by_category: BTreeMap<Category, Scope>,
    combos: BTreeMap<String, u64>,
    functions: BTreeMap<String, Acc>,
    packages: BTreeMap<String, u64>,
    sizes: [Vec<f64>; 4],
}

impl Summarizer {
    pub fn new(opts: SummaryOptions) -> Self {
        Self {
            opts,
            all: Scope::seeded(),
            by_category: Category::ALL.iter().map(|&c| (c, Scope::seeded())).collect(),
            combos: BTreeMap::new(),
            functions: BTreeMap::new(),
            packages: BTreeMap::new(),
            sizes: Default::default(),
        }
    }

    pub fn add(&mut self, record: &FileRecord) {
        let Some(report) = record.report.as_ref().filter(|_| record.status.is_ok()) else {
            return;
        };
        let leaves = flatten(report);
        self.all.add(&leaves);
        self.by_category.entry(record.category).or_insert_with(Scope::seeded).add(&leaves);
        if report.assignments.total > 0 {
            *self.combos.entry(report.assignments.operator_set.join(",")).or_default() += 1;
        }
        for (name, &n) in &report.fun_calls.by_name {
            if name == "<dynamic>" || n == 0 {
                continue;
            }
            let acc = self.functions.entry(name.clone()).or_default();
            acc.files_with += 1;
            acc.total += n;
        }
        for name in &report.packages.loaded_names {
            *self.packages.entry(name.clone()).or_default() += 1;
        }
        let m = &report.metadata;
        let sample = [m.bytes as f64, m.lines as f64, m.max_line_length as f64, m.mean_line_length];
        for (dst, v) in self.sizes.iter_mut().zip(sample) {
            dst.push(v);
        }
    }

    pub fn finish(mut self, index: &RunIndex) -> SummaryTables {
        let ok = self.all.ok_files;
        let mut functions: Vec<RankedName> = self
            .functions
            .iter()
            .map(|(name, a)| RankedName {
                name: name.clone(),
                files_with: a.files_with,
                presence_pct: pct(a.files_with, ok),
                count: Some(a.total),
            })
            .collect();
        functions.sort_by(|x, y| y.count.cmp(&x.count).then_with(|| x.name.cmp(&y.name)));
        functions.truncate(self.opts.top_n);
        let mut packages: Vec<RankedName> = self
            .packages
            .iter()
            .map(|(name, &n)| RankedName { name: name.clone(), files_with: n, presence_pct: pct(n, ok), count: None })
            .collect();
        packages.sort_by(|x, y| y.files_with.cmp(&x.files_with).then_with(|| x.name.cmp(&y.name)));
        packages.truncate(self.opts.top_n);

        let mut size_distribution = Vec::new();
        for (metric, values) in SIZE_METRICS.iter().zip(self.sizes.iter_mut()) {
            if values.is_empty() {
                continue;
            }
            values.sort_by(f64::total_cmp);
            for q in PERCENTILES {
                size_distribution.push(SizeRow {
                    metric: metric.to_string(),
                    percentile: q,
                    value: percentile_sorted(values, q as f64),
                });
            }
        }
        SummaryTables {
            schema_version: SCHEMA_VERSION,
            dataset_label: index.dataset_label.clone(),
            funnel: Funnel {
                manifest_size: index.manifest_size,
                complete: index.complete,
                totals: index.totals.clone(),
                by_category: index.by_category.clone(),
            },
            ok_files: ok,
            totals: self.all.rows(),
            per_category: self.by_category.iter().map(|(c, s)| (*c, s.rows())).collect(),
            operator_combination_matrix: self.combos,
            top_functions: functions,
            top_packages: packages,
            size_distribution,
        }
    }
}

pub fn summarize<'a>(
    index: &RunIndex,
    records: impl IntoIterator<Item = &'a FileRecord>,
    opts: SummaryOptions,
) -> SummaryTables {
    let mut s = Summarizer::new(opts);
    for r in records {
        s.add(r);
    }
    s.finish(index)
}

/// Stream the records of an `extract` output directory in index order.
pub fn for_each_record(dir: &Path, mut f: impl FnMut(FileRecord)) -> Result<RunIndex, CorpusError> {
    let index = read_index(dir)?;
    for entry in &index.files {
        f(read_record(&dir.join(&entry.record))?);
    }
    Ok(index)
}

pub fn summarize_dir(dir: &Path, opts: SummaryOptions) -> Result<SummaryTables, CorpusError> {
    let mut s = Summarizer::new(opts);
    let index = for_each_record(dir, |r| s.add(&r))?;
    Ok(s.finish(&index))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

pub(crate) fn json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("serializable");
    out.push(b'\n');
    out
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CorpusError> {
    fs::write(path, bytes).map_err(|e| CorpusError::io(path, e))
}

pub(crate) fn csv_bytes<T: Serialize>(rows: impl IntoIterator<Item = T>) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row).expect("csv row");
    }
    w.into_inner().expect("in-memory writer")
}

#[derive(Serialize)]
struct ScopedRow<'a> {
    scope: &'a str,
    feature: &'a str,
    files_with: u64,
    presence_pct: f64,
    total: u64,
    mean_per_file: f64,
}

impl<'a> ScopedRow<'a> {
    fn new(scope: &'a str, r: &'a FeatureRow) -> Self {
        ScopedRow {
            scope,
            feature: &r.feature,
            files_with: r.files_with,
            presence_pct: r.presence_pct,
            total: r.total,
            mean_per_file: r.mean_per_file,
        }
    }
}

#[derive(Serialize)]
struct FunnelRow<'a> {
    group: &'a str,
    key: &'a str,
    count: u64,
}

#[derive(Serialize)]
struct ComboRow<'a> {
    operators: &'a str,
    files: u64,
}

#[derive(Serialize)]
struct RankRow<'a> {
    rank: usize,
    name: &'a str,
    files_with: u64,
    presence_pct: f64,
    count: Option<u64>,
}

impl SummaryTables {
    /// File name → contents for the chosen format.
    pub fn render(&self, format: Format) -> Vec<(&'static str, Vec<u8>)> {
        match format {
            Format::Json => vec![(SUMMARY_JSON, json_bytes(self))],
            Format::Csv => self.render_csv(),
        }
    }

    pub fn write(&self, out: &Path, format: Format) -> Result<(), CorpusError> {
        fs::create_dir_all(out).map_err(|e| CorpusError::io(out, e))?;
        for (name, bytes) in self.render(format) {
            write_file(&out.join(name), &bytes)?;
        }
        Ok(())
    }

    fn render_csv(&self) -> Vec<(&'static str, Vec<u8>)> {
        let f = &self.funnel;
        let mut funnel = vec![
            FunnelRow { group: "manifest", key: "files", count: f.manifest_size },
            FunnelRow { group: "manifest", key: "complete", count: f.complete as u64 },
            FunnelRow { group: "ok", key: "files", count: f.totals.ok },
        ];
        funnel.extend(f.totals.parse_failed.iter().map(|(k, &n)| FunnelRow { group: "parse_failed", key: k, count: n }));
        funnel.extend(
            f.totals.dataflow_failed.iter().map(|(k, &n)| FunnelRow { group: "dataflow_failed", key: k, count: n }),
        );
        for (cat, t) in &f.by_category {
            let group = cat.as_str();
            for (key, count) in [("files", t.files), ("ok", t.ok), ("parse_failed", t.parse_failed), ("dataflow_failed", t.dataflow_failed)] {
                funnel.push(FunnelRow { group, key, count });
            }
        }
        let mut features: Vec<ScopedRow> = self.totals.iter().map(|r| ScopedRow::new("all", r)).collect();
        for (cat, rows) in &self.per_category {
            features.extend(rows.iter().map(|r| ScopedRow::new(cat.as_str(), r)));
        }
        let combos = self.operator_combination_matrix.iter().map(|(k, &n)| ComboRow { operators: k, files: n });
        let rank = |v: &'_ [RankedName]| -> Vec<u8> {
            csv_bytes(v.iter().enumerate().map(|(i, r)| RankRow {
                rank: i + 1,
                name: &r.name,
                files_with: r.files_with,
                presence_pct: r.presence_pct,
                count: r.count,
            }))
        };
        vec![
            ("funnel.csv", csv_bytes(funnel)),
            ("features.csv", csv_bytes(features)),
            ("operator_combinations.csv", with_header(csv_bytes(combos), "operators,files\n")),
            ("top_functions.csv", with_header(rank(&self.top_functions), "rank,name,files_with,presence_pct,count\n")),
            ("top_packages.csv", with_header(rank(&self.top_packages), "rank,name,files_with,presence_pct,count\n")),
            ("size_distribution.csv", with_header(csv_bytes(&self.size_distribution), "metric,percentile,value\n")),
        ]
    }
}

/// Header row for tables that came out empty.
fn with_header(bytes: Vec<u8>, header: &str) -> Vec<u8> {
    if bytes.is_empty() {
        header.as_bytes().to_vec()
    } else {
        bytes
    }
}
