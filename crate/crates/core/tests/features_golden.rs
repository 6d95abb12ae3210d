mod common;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use ranatomy::dataflow::build_dataflow;
use ranatomy::features::{extract_features, FeatureReport};
use ranatomy::syntax::{parse, SyntaxKind, SyntaxNode};
use common::{flatten, same};
use serde_json::Value;

fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/features")
}

fn fixtures() -> Vec<PathBuf> {
    let mut files: Vec<PathBuf> = fs::read_dir(fixture_dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "R"))
        .collect();
    files.sort();
    files
}

fn analyse(src: &[u8]) -> (SyntaxNode, FeatureReport) {
    let ast = parse(src).ast().cloned().unwrap_or_else(|| panic!("parse failed: {:?}", String::from_utf8_lossy(src)));
    let graph = build_dataflow(&ast).unwrap();
    let report = extract_features(&ast, &graph, src);
    (ast, report)
}

#[test]
fn census_matches_hand_tallies() {
    let files = fixtures();
    assert_eq!(files.len(), 20);
    let mut problems = Vec::new();
    for path in &files {
        let (_, report) = analyse(&fs::read(path).unwrap());
        let actual = flatten(&report);
        let expected: BTreeMap<String, Value> =
            serde_json::from_str(&fs::read_to_string(path.with_extension("json")).unwrap()).unwrap();
        let keys: std::collections::BTreeSet<&String> = actual.keys().chain(expected.keys()).collect();
        for k in keys {
            match (expected.get(k), actual.get(k)) {
                (Some(e), Some(a)) if same(e, a) => {}
                (e, a) => problems.push(format!(
                    "{}: {k}: expected {}, got {}",
                    path.file_name().unwrap().to_string_lossy(),
                    e.map_or("-".into(), |v| v.to_string()),
                    a.map_or("-".into(), |v| v.to_string()),
                )),
            }
        }
    }
    assert!(problems.is_empty(), "\n{}", problems.join("\n"));
}

#[test]
fn operator_combination_matrix() {
    let mut matrix: BTreeMap<Vec<String>, usize> = BTreeMap::new();
    for path in fixtures() {
        let (_, r) = analyse(&fs::read(path).unwrap());
        *matrix.entry(r.assignments.operator_set.clone()).or_default() += 1;
    }
    let v = |ops: &[&str]| ops.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    let expected = BTreeMap::from([
        (v(&[]), 5),
        (v(&["<-"]), 11),
        (v(&["<-", "="]), 2),
        (v(&["<-", "<<-"]), 1),
        (v(&["<-", "<<-", "=", "->", "->>", ":="]), 1),
    ]);
    assert_eq!(matrix, expected);
}

fn count_kind(ast: &SyntaxNode, pred: impl Fn(&SyntaxKind) -> bool) -> u64 {
    let mut n = 0;
    ast.walk(&mut |x| n += pred(&x.kind) as u64);
    n
}

#[test]
fn sums_are_consistent() {
    for path in fixtures() {
        let (ast, r) = analyse(&fs::read(&path).unwrap());
        let a = &r.assignments;
        let assigns = count_kind(&ast, |k| matches!(k, SyntaxKind::Assign(_)));
        assert_eq!(a.by_operator.values().sum::<u64>(), assigns, "{}", path.display());
        assert_eq!(a.total, assigns);
        assert_eq!(a.assigned_value_kind.values().sum::<u64>(), assigns);
        let c = &r.conditionals;
        assert_eq!(c.if_with_else + c.if_without_else, count_kind(&ast, |k| *k == SyntaxKind::If));
        assert_eq!(c.condition_root_kind.values().sum::<u64>(), c.if_with_else + c.if_without_else);
        assert_eq!(c.body_arity.values().sum::<u64>(), 2 * c.if_with_else + c.if_without_else);
        let l = &r.loops;
        assert_eq!(l.for_vector_kind.values().sum::<u64>(), l.for_count);
        assert!(l.degenerate_for <= l.for_count && l.nested_for <= l.for_count);
        let lint = r.lint.generalized_constant_conditions.len() as u64;
        assert_eq!(lint, c.constant_condition_count + l.degenerate_for + l.degenerate_while);
        assert!(r.fun_calls.by_name.values().sum::<u64>() == r.fun_calls.total_calls);
        assert!(r.data_access.plain_symbol_uses <= r.variables.uses);
    }
}

#[test]
fn rightward_assignment_normalizes() {
    let (_, left) = analyse(b"x <- 3");
    let (_, right) = analyse(b"3 -> x");
    assert_eq!(left.assignments.assigned_value_kind, right.assignments.assigned_value_kind);
    assert_eq!(right.assignments.assigned_value_kind["Constant"], 1);
    assert_eq!(left.variables, right.variables);
    assert_eq!(left.assignments.by_operator["<-"], 1);
    assert_eq!(right.assignments.by_operator["->"], 1);
    let (_, f) = analyse(b"(function(a) a) -> g");
    assert_eq!(f.fun_defs.assigned_defs, 1);
}

const NONLINEAR: [&str; 7] = [
    "metadata.",
    "comments.",
    "lint.",
    "packages.roxygen_imports",
    "variables.uses_without_definition",
    "assignments.redefinition_count",
    "assignments.files_redefining",
];

#[test]
fn counters_are_linear_over_statements() {
    for path in fixtures() {
        let src = fs::read(&path).unwrap();
        let (ast, whole) = analyse(&src);
        let mut sum = FeatureReport::default();
        for stmt in ast.children.iter().filter(|c| c.kind != SyntaxKind::Comment) {
            let (_, part) = analyse(&src[stmt.span.start..stmt.span.end]);
            sum.merge(&part);
        }
        let keep = |m: BTreeMap<String, Value>| -> BTreeMap<String, Value> {
            m.into_iter().filter(|(k, _)| !NONLINEAR.iter().any(|p| k.starts_with(p))).collect()
        };
        assert_eq!(keep(flatten(&whole)), keep(flatten(&sum)), "{}", path.display());
    }
}

#[test]
fn namespaced_calls_match_bare_names() {
    let (_, r) = analyse(b"base::eval(x)\nbase:::do.call(f, list())\nrlang::quote(y)");
    assert_eq!(r.fun_calls.reflective["eval"], 1);
    assert_eq!(r.fun_calls.reflective["do.call"], 1);
    assert_eq!(r.fun_calls.reflective["quote"], 1);
    assert_eq!(r.lint.strict_mode_flags.len(), 1);
}

#[test]
fn extraction_is_deterministic_and_serializes() {
    for path in fixtures() {
        let src = fs::read(&path).unwrap();
        let (_, a) = analyse(&src);
        let (_, b) = analyse(&src);
        assert_eq!(a, b);
        let json = a.to_json();
        let v: Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["schema_version"], 1);
        let back: FeatureReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, a);
    }
}
