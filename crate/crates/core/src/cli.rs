//! The `ranatomy` command line.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};

use crate::corpus::{
    read_index, run_corpus, scan_with, CorpusError, DataflowFailure, ProcessOptions, RunOptions, ScanOptions,
};
use crate::dataflow::build_dataflow;
use crate::features::{extract_features_with, FeatureOptions, DEFAULT_FORBIDDEN_CALLS, STYLE_OPERATORS};
use crate::report::{compare_dirs, summarize_dir, CompareOptions, Format, SummaryOptions, DEFAULT_TOP_N};
use crate::syntax::{parse, AssignOp, FailureCategory, ParseOutcome, Span, SyntaxKind, SyntaxNode};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_IO: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "ranatomy", version, about = "Static feature census for R source corpora")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse and analyse every R file under the roots, writing per-file records.
    Extract {
        #[arg(required = true)]
        roots: Vec<PathBuf>,
        #[arg(long)]
        label: String,
        #[arg(long)]
        out: PathBuf,
        /// Worker threads [default: available cores]
        #[arg(long, env = "RANATOMY_JOBS", value_parser = clap::value_parser!(u32).range(1..))]
        jobs: Option<u32>,
        /// Also read R files inside .tar.gz, .tgz and .zip archives.
        #[arg(long)]
        archives: bool,
        /// Keep existing records written with the current schema.
        #[arg(long)]
        resume: bool,
        /// Per-file time budget in seconds.
        #[arg(long, default_value_t = 60)]
        time_budget: u64,
        /// Store per-stage timings in records (makes output run-dependent).
        #[arg(long)]
        timings: bool,
    },
    /// Aggregate an extract directory into summary tables.
    Summarize {
        dir: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = FormatArg::Json)]
        format: FormatArg,
        /// Length of the ranked function and package lists.
        #[arg(long, default_value_t = DEFAULT_TOP_N)]
        top: usize,
    },
    /// Test every feature for a difference between two extract directories.
    Compare {
        dir_a: PathBuf,
        dir_b: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Bonferroni factor [default: number of rows]
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        k: Option<u64>,
    },
    /// Print the failure breakdown of an extract directory.
    Failures { dir: PathBuf },
    /// Report mixed assignment operators, constant conditions and forbidden calls.
    Lint {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        /// Calls flagged by the strict-mode rule (repeatable).
        #[arg(long = "forbid", default_values_t = DEFAULT_FORBIDDEN_CALLS.map(String::from))]
        forbid: Vec<String>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

/// Parse `args` (including the program name) and run; returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { write!(err, "{text}") } else { write!(out, "{text}") };
            return code;
        }
    };
    match dispatch(cli.command, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "ranatomy: {e}");
            match e {
                CorpusError::Other(_) => EXIT_USAGE,
                _ => EXIT_IO,
            }
        }
    }
}

fn stdout_err(e: std::io::Error) -> CorpusError {
    CorpusError::io("<stdout>", e)
}

fn dispatch(command: Command, out: &mut dyn Write) -> Result<(), CorpusError> {
    match command {
        Command::Extract { roots, label, out: dir, jobs, archives, resume, time_budget, timings } => {
            let jobs = jobs.map(|j| j as usize).unwrap_or_else(|| {
                std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
            });
            let manifest = scan_with(&roots, &label, ScanOptions { archives })?;
            let opts = RunOptions {
                jobs,
                resume,
                process: ProcessOptions {
                    time_budget: Duration::from_secs(time_budget),
                    record_timings: timings,
                    ..ProcessOptions::default()
                },
            };
            let run = run_corpus(&manifest, &dir, &opts)?;
            let t = &run.index.totals;
            writeln!(
                out,
                "{label}: {} files, {} ok, {} parse failed, {} dataflow failed ({} recomputed)",
                run.index.manifest_size, t.ok, t.parse_failed_total, t.dataflow_failed_total, run.recomputed
            )
            .map_err(stdout_err)?;
            for (path, why) in &manifest.skipped {
                writeln!(out, "skipped {path}: {why}").map_err(stdout_err)?;
            }
            Ok(())
        }
        Command::Summarize { dir, out: dest, format, top } => {
            let tables = summarize_dir(&dir, SummaryOptions { top_n: top })?;
            let format = match format {
                FormatArg::Csv => Format::Csv,
                FormatArg::Json => Format::Json,
            };
            tables.write(&dest, format)
        }
        Command::Compare { dir_a, dir_b, out: dest, k } => {
            let report = compare_dirs(&dir_a, &dir_b, CompareOptions { k: k.map(|k| k as usize) })?;
            report.write(&dest)
        }
        Command::Failures { dir } => failures(&dir, out),
        Command::Lint { files, forbid } => {
            let opts = FeatureOptions { forbidden_calls: forbid };
            for file in files {
                let src = std::fs::read(&file).map_err(|e| CorpusError::io(&file, e))?;
                for line in lint_source(&file.to_string_lossy(), &src, &opts) {
                    writeln!(out, "{line}").map_err(stdout_err)?;
                }
            }
            Ok(())
        }
    }
}

fn failures(dir: &Path, out: &mut dyn Write) -> Result<(), CorpusError> {
    let index = read_index(dir)?;
    let t = &index.totals;
    let mut text = format!(
        "{}: {} files{}\nOk: {}\nParseFailed: {}\n",
        index.dataset_label,
        index.manifest_size,
        if index.complete { "" } else { " (incomplete run)" },
        t.ok,
        t.parse_failed_total
    );
    for c in FailureCategory::ALL {
        let n = t.parse_failed.get(c.as_str()).copied().unwrap_or(0);
        text.push_str(&format!("{}: {n}\n", c.as_str()));
    }
    text.push_str(&format!("DataflowFailed: {}\n", t.dataflow_failed_total));
    for kind in DataflowFailure::KINDS {
        let n = t.dataflow_failed.get(kind).copied().unwrap_or(0);
        text.push_str(&format!("  {kind}: {n}\n"));
    }
    out.write_all(text.as_bytes()).map_err(stdout_err)
}

/// 1-based line and column (in characters) of a byte offset.
pub fn line_col(src: &[u8], offset: usize) -> (usize, usize) {
    let before = &src[..offset.min(src.len())];
    let line_start = before.iter().rposition(|&b| b == b'\n').map_or(0, |i| i + 1);
    let line = before.iter().filter(|&&b| b == b'\n').count() + 1;
    let col = String::from_utf8_lossy(&before[line_start..]).chars().count() + 1;
    (line, col)
}

/// The first assignment whose operator differs from the first style
/// operator seen in source order.
fn mixing_site(ast: &SyntaxNode) -> Option<(Span, AssignOp, AssignOp)> {
    let mut sites = Vec::new();
    ast.walk(&mut |n| {
        if let SyntaxKind::Assign(op) = n.kind {
            if STYLE_OPERATORS.contains(&op) {
                sites.push((n.span, op));
            }
        }
    });
    sites.sort_by_key(|(s, _)| s.start);
    let first = sites.first()?.1;
    sites.iter().find(|(_, op)| *op != first).map(|&(s, op)| (s, first, op))
}

/// Findings as `path:line:col: rule: message` lines.
pub fn lint_source(path: &str, src: &[u8], opts: &FeatureOptions) -> Vec<String> {
    let at = |span: Span| {
        let (l, c) = line_col(src, span.start);
        format!("{path}:{l}:{c}")
    };
    let ast = match parse(src) {
        ParseOutcome::Ast(ast) => ast,
        ParseOutcome::Failure(f) => {
            return vec![format!("{}: parse-failure: {}: {}", at(f.first_error_span), f.category.as_str(), f.message)]
        }
    };
    let graph = match build_dataflow(&ast) {
        Ok(g) => g,
        Err(e) => return vec![format!("{path}:1:1: resource-limit: {e}")],
    };
    let report = extract_features_with(&ast, &graph, src, opts);
    let lint = &report.lint;
    let mut findings: Vec<(usize, String)> = Vec::new();
    if lint.mixed_assignment_operators {
        if let Some((span, first, other)) = mixing_site(&ast) {
            findings.push((
                span.start,
                format!(
                    "{}: mixed-assignment: `{}` after `{}` (file uses {})",
                    at(span),
                    other.as_str(),
                    first.as_str(),
                    lint.mixed_operator_set.join(", ")
                ),
            ));
        }
    }
    for f in &lint.generalized_constant_conditions {
        findings.push((f.span.start, format!("{}: constant-condition: {:?}", at(f.span), f.kind)));
    }
    for f in &lint.strict_mode_flags {
        findings.push((f.span.start, format!("{}: forbidden-call: {}", at(f.span), f.name)));
    }
    findings.sort();
    findings.into_iter().map(|(_, s)| s).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn positions() {
        let src = "ab\nc\u{e9}d\n".as_bytes();
        assert_eq!(line_col(src, 0), (1, 1));
        assert_eq!(line_col(src, 3), (2, 1));
        assert_eq!(line_col(src, 6), (2, 3));
    }

    #[test]
    fn lint_lines() {
        let src = b"x <- 1\ny = 2\nif (TRUE) x\neval(y)\n";
        let lines = lint_source("m.R", src, &FeatureOptions::default());
        assert_eq!(
            lines,
            [
                "m.R:2:1: mixed-assignment: `=` after `<-` (file uses <-, =)",
                "m.R:3:1: constant-condition: ConstantIf",
                "m.R:4:1: forbidden-call: eval",
            ]
        );
    }
}
