use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn fixtures(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(rel)
}

fn ranatomy(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ranatomy")).args(args).env_remove("RANATOMY_JOBS").output().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn extract_writes_index_with_conserved_funnel() {
    let out = TempDir::new().unwrap();
    let o = ranatomy(&["extract", s(&fixtures("corpus/research")), "--label", "research", "--out", s(out.path())]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).starts_with("research: 6 files, 5 ok, 1 parse failed, 0 dataflow failed"));
    let index: serde_json::Value = serde_json::from_slice(&fs::read(out.path().join("index.json")).unwrap()).unwrap();
    let t = &index["totals"];
    let sum = t["ok"].as_u64().unwrap() + t["parse_failed_total"].as_u64().unwrap() + t["dataflow_failed_total"].as_u64().unwrap();
    assert_eq!(sum, index["manifest_size"].as_u64().unwrap());
    assert_eq!(index["complete"], true);
    assert_eq!(index["schema_version"], 1);
    assert!(out.path().join("failures.csv").is_file());
}

#[test]
fn failures_prints_breakdown() {
    let out = TempDir::new().unwrap();
    ranatomy(&["extract", s(&fixtures("failures")), "--label", "f", "--out", s(out.path()), "--jobs", "2"]);
    let o = ranatomy(&["failures", s(out.path())]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    for line in ["DocumentationCommand: 1", "EncodingError: 1", "NotRCode: 1", "RawSyntaxError: 1", "Ok: 0"] {
        assert!(text.lines().any(|l| l == line), "missing {line:?} in\n{text}");
    }
}

#[test]
fn lint_reports_one_mixed_assignment() {
    let dir = TempDir::new().unwrap();
    let file = dir.path().join("mixed.R");
    fs::write(&file, "a <- 1\nb = 2\nc <- a + b\n").unwrap();
    let o = ranatomy(&["lint", s(&file)]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let mixed: Vec<&str> = text.lines().filter(|l| l.contains("mixed-assignment")).collect();
    assert_eq!(mixed.len(), 1, "{text}");
    assert!(mixed[0].starts_with(&format!("{}:2:1:", s(&file))));
}

#[test]
fn lint_flags_and_parse_failures() {
    let o = ranatomy(&["lint", s(&fixtures("features/16_degenerate.R")), s(&fixtures("failures/syntax_error.R"))]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("constant-condition"));
    assert!(text.contains("parse-failure: RawSyntaxError"));
    let custom = ranatomy(&["lint", "--forbid", "print", s(&fixtures("corpus/research/study3/model.R"))]);
    let text = stdout(&custom);
    assert!(text.contains("forbidden-call: print") && !text.contains("forbidden-call: eval"), "{text}");
}

#[test]
fn usage_errors_exit_one() {
    for args in [
        vec!["extract", "--bogus"],
        vec!["extract", "x"],
        vec!["frobnicate"],
        vec![],
        vec!["summarize", "d", "--out", "o", "--format", "xml"],
        vec!["extract", "x", "--label", "l", "--out", "o", "--jobs", "0"],
        vec!["compare", "a", "b", "--out", "o", "--k", "0"],
    ] {
        let o = ranatomy(&args);
        assert_eq!(o.status.code(), Some(1), "{args:?}");
        assert!(!o.stderr.is_empty());
    }
    assert_eq!(ranatomy(&["--help"]).status.code(), Some(0));
    assert_eq!(ranatomy(&["--version"]).status.code(), Some(0));
}

#[test]
fn io_errors_exit_two() {
    let out = TempDir::new().unwrap();
    let missing = out.path().join("missing");
    assert_eq!(ranatomy(&["extract", s(&missing), "--label", "x", "--out", s(out.path())]).status.code(), Some(2));
    assert_eq!(ranatomy(&["failures", s(&missing)]).status.code(), Some(2));
    assert_eq!(ranatomy(&["summarize", s(&missing), "--out", s(out.path())]).status.code(), Some(2));
    assert_eq!(ranatomy(&["lint", s(&missing)]).status.code(), Some(2));
}

#[test]
fn jobs_come_from_environment() {
    let out = TempDir::new().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_ranatomy"))
        .args(["extract", s(&fixtures("corpus/cran")), "--label", "cran", "--out", s(out.path())])
        .env("RANATOMY_JOBS", "3")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    let bad = Command::new(env!("CARGO_BIN_EXE_ranatomy"))
        .args(["extract", s(&fixtures("corpus/cran")), "--label", "cran", "--out", s(out.path())])
        .env("RANATOMY_JOBS", "zero")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(1));
}

fn read_tree(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    v.sort();
    v
}

#[test]
fn summarize_and_compare_write_tables() {
    let work = TempDir::new().unwrap();
    let (a, b) = (work.path().join("a"), work.path().join("b"));
    assert!(ranatomy(&["extract", s(&fixtures("corpus/research")), "--label", "research", "--out", s(&a)]).status.success());
    assert!(ranatomy(&["extract", s(&fixtures("corpus/cran")), "--label", "cran", "--out", s(&b)]).status.success());

    let json = work.path().join("sj");
    assert!(ranatomy(&["summarize", s(&a), "--out", s(&json)]).status.success());
    assert_eq!(read_tree(&json).iter().map(|f| f.0.as_str()).collect::<Vec<_>>(), ["summary.json"]);
    let csv = work.path().join("sc");
    assert!(ranatomy(&["summarize", s(&a), "--out", s(&csv), "--format", "csv"]).status.success());
    assert_eq!(read_tree(&csv).len(), 6);

    let cmp = work.path().join("cmp");
    assert!(ranatomy(&["compare", s(&a), s(&b), "--out", s(&cmp), "--k", "10"]).status.success());
    let report: serde_json::Value = serde_json::from_slice(&fs::read(cmp.join("comparison.json")).unwrap()).unwrap();
    assert_eq!(report["k"], 10);
    assert_eq!((report["label_a"].as_str(), report["label_b"].as_str()), (Some("research"), Some("cran")));
    assert!(cmp.join("comparison.csv").is_file());
}

#[test]
fn extract_summary_round_trip_is_stable() {
    let work = TempDir::new().unwrap();
    let mut outputs = Vec::new();
    for (i, jobs) in ["1", "8", "3"].iter().enumerate() {
        let out = work.path().join(format!("x{i}"));
        let sum = work.path().join(format!("s{i}"));
        assert!(ranatomy(&["extract", s(&fixtures("corpus")), "--label", "all", "--out", s(&out), "--jobs", jobs]).status.success());
        assert!(ranatomy(&["summarize", s(&out), "--out", s(&sum), "--format", "csv"]).status.success());
        assert!(ranatomy(&["summarize", s(&out), "--out", s(&sum)]).status.success());
        outputs.push((fs::read(out.join("index.json")).unwrap(), read_tree(&sum)));
    }
    assert!(outputs.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn resume_flag_keeps_records() {
    let work = TempDir::new().unwrap();
    let out = work.path().join("x");
    let root = fixtures("corpus/cran");
    ranatomy(&["extract", s(&root), "--label", "c", "--out", s(&out)]);
    let o = ranatomy(&["extract", s(&root), "--label", "c", "--out", s(&out), "--resume"]);
    assert!(stdout(&o).contains("(0 recomputed)"), "{}", stdout(&o));
}

#[test]
fn archives_flag() {
    let work = TempDir::new().unwrap();
    let zip_path = work.path().join("study.zip");
    let mut w = zip::ZipWriter::new(fs::File::create(&zip_path).unwrap());
    w.start_file("a.R", zip::write::SimpleFileOptions::default()).unwrap();
    std::io::Write::write_all(&mut w, b"x <- 1\n").unwrap();
    w.finish().unwrap();
    let out = work.path().join("x");
    let o = ranatomy(&["extract", s(work.path()), "--label", "z", "--out", s(&out), "--archives"]);
    assert!(stdout(&o).starts_with("z: 1 files, 1 ok"), "{}", stdout(&o));
    let o = ranatomy(&["extract", s(work.path()), "--label", "z", "--out", s(&out)]);
    assert!(stdout(&o).starts_with("z: 0 files"), "{}", stdout(&o));
}
