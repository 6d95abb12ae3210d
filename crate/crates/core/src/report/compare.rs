use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{csv_bytes, flatten, for_each_record, json_bytes, Leaf};
use crate::corpus::{CorpusError, FileRecord};
use crate::features::{FeatureReport, SCHEMA_VERSION};
use crate::stats::{fisher_result, mann_whitney_grouped_result, ContingencyTable2x2, Effect, StatResult};

pub const COMPARISON_JSON: &str = "comparison.json";
pub const COMPARISON_CSV: &str = "comparison.csv";

#[derive(Debug, Clone, Copy, Default)]
pub struct CompareOptions {
    /// Bonferroni factor; defaults to the number of rows.
    pub k: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RowKind {
    /// Files with vs without the feature: Fisher and phi.
    Presence,
    /// Per-file counts: Mann-Whitney and Cohen's d.
    Count,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupStat {
    pub files: u64,
    pub files_with: u64,
    pub presence_pct: f64,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub feature: String,
    pub kind: RowKind,
    pub a: GroupStat,
    pub b: GroupStat,
    /// Set when the feature is zero in every file of both datasets.
    pub untestable: bool,
    pub result: Option<StatResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub schema_version: u32,
    pub label_a: String,
    pub label_b: String,
    pub k: usize,
    pub rows: Vec<ComparisonRow>,
    pub notes: Vec<String>,
}

/// Per-feature value histograms of one dataset. Zeros are implied by the
/// file count, so memory grows with distinct nonzero values only.
#[derive(Default)]
struct Sample {
    label: String,
    files: u64,
    hist: BTreeMap<String, BTreeMap<u64, u64>>,
}

impl Sample {
    fn add(&mut self, record: &FileRecord) {
        let Some(report) = record.report.as_ref().filter(|_| record.status.is_ok()) else {
            return;
        };
        self.files += 1;
        for (k, leaf) in flatten(report) {
            let v = leaf.value();
            if v > 0.0 {
                *self.hist.entry(k).or_default().entry(v.to_bits()).or_default() += 1;
            }
        }
    }

    fn grouped(&self, key: &str) -> Vec<(f64, u64)> {
        let nonzero = self.hist.get(key);
        let with: u64 = nonzero.map_or(0, |h| h.values().sum());
        let mut out = vec![(0.0, self.files - with)];
        out.extend(nonzero.into_iter().flatten().map(|(&bits, &n)| (f64::from_bits(bits), n)));
        out
    }

    fn stat(&self, key: &str) -> GroupStat {
        let g = self.grouped(key);
        let with = self.files - g[0].1;
        let sum: f64 = g.iter().map(|&(v, n)| v * n as f64).sum();
        let files = self.files.max(1) as f64;
        GroupStat { files: self.files, files_with: with, presence_pct: 100.0 * with as f64 / files, mean: sum / files }
    }
}

/// Closed feature keys, in report order, with the test kinds that apply.
fn features() -> Vec<(String, RowKind)> {
    let mut out = Vec::new();
    for (key, leaf) in flatten(&FeatureReport::default()) {
        let meta = key.starts_with("metadata.");
        if !meta {
            out.push((key.clone(), RowKind::Presence));
        }
        if !matches!(leaf, Leaf::Flag(_)) {
            out.push((key, RowKind::Count));
        }
    }
    out
}

fn build(a: &Sample, b: &Sample, opts: CompareOptions) -> Result<ComparisonReport, CorpusError> {
    for s in [a, b] {
        if s.files == 0 {
            return Err(CorpusError::Other(format!("dataset {:?} has no Ok files to compare", s.label)));
        }
    }
    let features = features();
    let k = opts.k.unwrap_or(features.len()).max(1);
    let mut rows = Vec::new();
    let mut notes = Vec::new();
    for (feature, kind) in features {
        let (sa, sb) = (a.stat(&feature), b.stat(&feature));
        let untestable = sa.files_with == 0 && sb.files_with == 0;
        let result = if untestable {
            notes.push(format!("{feature} ({kind:?}): zero in every file of both datasets"));
            None
        } else {
            let r = match kind {
                RowKind::Presence => fisher_result(
                    ContingencyTable2x2::new(sa.files_with, sa.files - sa.files_with, sb.files_with, sb.files - sb.files_with),
                    k,
                ),
                RowKind::Count => mann_whitney_grouped_result(&a.grouped(&feature), &b.grouped(&feature), k),
            };
            if r.effect.is_none() {
                notes.push(format!("{feature} ({kind:?}): effect size undefined"));
            }
            Some(r)
        };
        rows.push(ComparisonRow { feature, kind, a: sa, b: sb, untestable, result });
    }
    Ok(ComparisonReport {
        schema_version: SCHEMA_VERSION,
        label_a: a.label.clone(),
        label_b: b.label.clone(),
        k,
        rows,
        notes,
    })
}

/// Per-feature tests between two record sets. Only Ok records count.
pub fn compare<'a, 'b>(
    label_a: &str,
    a: impl IntoIterator<Item = &'a FileRecord>,
    label_b: &str,
    b: impl IntoIterator<Item = &'b FileRecord>,
    opts: CompareOptions,
) -> Result<ComparisonReport, CorpusError> {
    let mut sa = Sample { label: label_a.to_string(), ..Sample::default() };
    a.into_iter().for_each(|r| sa.add(r));
    let mut sb = Sample { label: label_b.to_string(), ..Sample::default() };
    b.into_iter().for_each(|r| sb.add(r));
    build(&sa, &sb, opts)
}

pub fn compare_dirs(a: &Path, b: &Path, opts: CompareOptions) -> Result<ComparisonReport, CorpusError> {
    let mut sa = Sample::default();
    sa.label = for_each_record(a, |r| sa.add(&r))?.dataset_label;
    let mut sb = Sample::default();
    sb.label = for_each_record(b, |r| sb.add(&r))?.dataset_label;
    build(&sa, &sb, opts)
}

#[derive(Serialize)]
struct CsvRow<'a> {
    feature: &'a str,
    kind: RowKind,
    a_files: u64,
    a_files_with: u64,
    a_presence_pct: f64,
    a_mean: f64,
    b_files: u64,
    b_files_with: u64,
    b_presence_pct: f64,
    b_mean: f64,
    untestable: bool,
    p_value: Option<f64>,
    p_adjusted: Option<f64>,
    k: usize,
    effect: Option<&'static str>,
    effect_value: Option<f64>,
    ci_low: Option<f64>,
    ci_high: Option<f64>,
    effect_word: Option<&'a str>,
}

impl ComparisonReport {
    pub fn render_csv(&self) -> Vec<u8> {
        csv_bytes(self.rows.iter().map(|r| {
            let res = r.result.as_ref();
            let (effect, value, lo, hi) = match res.and_then(|s| s.effect) {
                Some(Effect::Phi(phi)) => (Some("phi"), Some(phi), None, None),
                Some(Effect::CohensD(d)) => (Some("cohens_d"), Some(d.d), Some(d.ci_low), Some(d.ci_high)),
                None => (None, None, None, None),
            };
            CsvRow {
                feature: &r.feature,
                kind: r.kind,
                a_files: r.a.files,
                a_files_with: r.a.files_with,
                a_presence_pct: r.a.presence_pct,
                a_mean: r.a.mean,
                b_files: r.b.files,
                b_files_with: r.b.files_with,
                b_presence_pct: r.b.presence_pct,
                b_mean: r.b.mean,
                untestable: r.untestable,
                p_value: res.map(|s| s.p_value),
                p_adjusted: res.map(|s| s.p_adjusted),
                k: self.k,
                effect,
                effect_value: value,
                ci_low: lo,
                ci_high: hi,
                effect_word: res.map(|s| s.effect_word.as_str()),
            }
        }))
    }

    pub fn write(&self, out: &Path) -> Result<(), CorpusError> {
        fs::create_dir_all(out).map_err(|e| CorpusError::io(out, e))?;
        for (name, bytes) in [(COMPARISON_JSON, json_bytes(self)), (COMPARISON_CSV, self.render_csv())] {
            let path = out.join(name);
            fs::write(&path, bytes).map_err(|e| CorpusError::io(&path, e))?;
        }
        Ok(())
    }
}
