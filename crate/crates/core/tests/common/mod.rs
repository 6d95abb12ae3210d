#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fmt::Write;
use std::fs;
use std::path::{Path, PathBuf};

use ranatomy::dataflow::DataflowGraph;
use ranatomy::features::FeatureReport;
use serde_json::Value;

pub fn fixture_dir(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(rel)
}

/// Sorted `.R` files directly under a fixture directory.
pub fn r_files(rel: &str) -> Vec<PathBuf> {
    let mut files: Vec<PathBuf> = fs::read_dir(fixture_dir(rel))
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "R"))
        .collect();
    files.sort();
    files
}

pub fn line_col(src: &[u8], offset: usize) -> (usize, usize) {
    let before = &src[..offset];
    let line = before.iter().filter(|&&b| b == b'\n').count() + 1;
    let line_start = before.iter().rposition(|&b| b == b'\n').map_or(0, |p| p + 1);
    let col = String::from_utf8_lossy(&src[line_start..offset]).chars().count() + 1;
    (line, col)
}

pub fn render(g: &DataflowGraph, src: &[u8]) -> String {
    let mut out = String::from("nodes:\n");
    for n in &g.nodes {
        let (line, col) = line_col(src, n.span.start);
        let _ = write!(out, "  {} {:?} {} {line}:{col} frame={} depth={}", n.id, n.role, n.name, n.frame, n.scope_depth);
        if let Some(d) = n.definer {
            let _ = write!(out, " via={}", d.as_str());
        }
        if n.value_is_function {
            out.push_str(" fn");
        }
        out.push('\n');
    }
    out.push_str("edges:\n");
    for e in &g.edges {
        let _ = writeln!(out, "  {:?} {} -> {}", e.kind, e.from, e.to);
    }
    out.push_str("unresolved:");
    for id in &g.unresolved_calls {
        let _ = write!(out, " {id}");
    }
    out.push('\n');
    out
}

/// Dotted keys for every nonzero, true or non-empty leaf.
pub fn flatten(report: &FeatureReport) -> BTreeMap<String, Value> {
    let mut out = BTreeMap::new();
    let v = serde_json::to_value(report).unwrap();
    for (k, v) in v.as_object().unwrap() {
        if k != "schema_version" {
            flatten_into(k, v, &mut out);
        }
    }
    out
}

pub fn flatten_into(prefix: &str, v: &Value, out: &mut BTreeMap<String, Value>) {
    match v {
        Value::Object(m) => {
            for (k, v) in m {
                flatten_into(&format!("{prefix}.{k}"), v, out);
            }
        }
        Value::Bool(false) => {}
        Value::Number(n) if n.as_f64() == Some(0.0) => {}
        Value::Array(a) if a.is_empty() => {}
        other => {
            out.insert(prefix.to_string(), other.clone());
        }
    }
}

pub fn same(a: &Value, b: &Value) -> bool {
    match (a.as_f64(), b.as_f64()) {
        (Some(x), Some(y)) if a.is_f64() || b.is_f64() => (x - y).abs() < 1e-9,
        _ => a == b,
    }
}

pub fn choose(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let mut r: u128 = 1;
    for i in 0..k as u128 {
        r = r * (n as u128 - i) / (i + 1);
    }
    r
}

/// Exact enumeration with integer point weights (common denominator).
pub fn fisher_oracle(a: u64, b: u64, c: u64, d: u64) -> f64 {
    let (r1, r2, c1) = (a + b, c + d, a + c);
    if r1 == 0 || r2 == 0 || c1 == 0 || b + d == 0 {
        return 1.0;
    }
    let weight = |x: u64| choose(r1, x) * choose(r2, c1 - x);
    let observed = weight(a);
    let total = choose(r1 + r2, c1);
    let lo = c1.saturating_sub(r2);
    let hit: u128 = (lo..=r1.min(c1)).map(weight).filter(|&w| w <= observed).sum();
    hit as f64 / total as f64
}

/// Two-sided permutation p over all relabelings of the pooled sample.
pub fn mw_oracle(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let pooled: Vec<f64> = xs.iter().chain(ys).copied().collect();
    let n = pooled.len();
    let u_of = |mask: u32| {
        let mut u = 0.0;
        for i in (0..n).filter(|i| mask >> i & 1 == 1) {
            for j in (0..n).filter(|j| mask >> j & 1 == 0) {
                u += if pooled[i] > pooled[j] { 1.0 } else if pooled[i] == pooled[j] { 0.5 } else { 0.0 };
            }
        }
        u
    };
    let observed = u_of((1u32 << xs.len()) - 1);
    let mean = (xs.len() * ys.len()) as f64 / 2.0;
    let (mut hits, mut total) = (0u32, 0u32);
    for mask in 0..1u32 << n {
        if mask.count_ones() as usize != xs.len() {
            continue;
        }
        total += 1;
        if (u_of(mask) - mean).abs() >= (observed - mean).abs() - 1e-9 {
            hits += 1;
        }
    }
    (observed, hits as f64 / total as f64)
}
