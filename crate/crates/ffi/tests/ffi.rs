use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use ranatomy_ffi::*;

fn analyze(src: &[u8]) -> (RanatomyStatus, *mut RanatomyAnalysis) {
    let mut handle = ptr::null_mut();
    let status = unsafe { ranatomy_analyze(src.as_ptr(), src.len(), &mut handle) };
    (status, handle)
}

fn get(h: *const RanatomyAnalysis, pointer: &str) -> Result<f64, RanatomyStatus> {
    let p = CString::new(pointer).unwrap();
    let mut v = f64::NAN;
    match unsafe { ranatomy_analysis_get(h, p.as_ptr(), &mut v) } {
        RanatomyStatus::Ok => Ok(v),
        s => Err(s),
    }
}

#[test]
fn analyze_ok_and_read_counters() {
    let (status, h) = analyze(b"for (i in 1:3) print(i)\nf <- function(x) x\n");
    assert_eq!(status, RanatomyStatus::Ok);
    assert!(!h.is_null());
    assert_eq!(unsafe { ranatomy_analysis_outcome(h) }, RanatomyOutcome::Ok);
    assert_eq!(get(h, "/loops/for_count"), Ok(1.0));
    assert_eq!(get(h, "/nope"), Err(RanatomyStatus::NotFound));
    let json = unsafe { CStr::from_ptr(ranatomy_analysis_json(h)) }.to_str().unwrap();
    let v: serde_json::Value = serde_json::from_str(json).unwrap();
    assert_eq!(v["status"], "Ok");
    assert_eq!(v["report"]["schema_version"], 1);
    unsafe { ranatomy_analysis_free(h) };
}

#[test]
fn parse_failures_still_give_a_handle() {
    let (status, h) = analyze(b"x <- (1 +\n");
    assert_eq!(status, RanatomyStatus::ParseFailed);
    assert_eq!(unsafe { ranatomy_analysis_outcome(h) }, RanatomyOutcome::RawSyntaxError);
    assert_eq!(get(h, "/loops/for_count"), Err(RanatomyStatus::NotFound));
    unsafe { ranatomy_analysis_free(h) };

    let (status, h) = analyze(b"\\dontrun{\nx <- 1\n}\n");
    assert_eq!(status, RanatomyStatus::ParseFailed);
    assert_eq!(unsafe { ranatomy_analysis_outcome(h) }, RanatomyOutcome::DocumentationCommand);
    unsafe { ranatomy_analysis_free(h) };
}

#[test]
fn deep_input_is_a_resource_limit() {
    let src = format!("x <- {}1{}\n", "(".repeat(5000), ")".repeat(5000));
    let (status, h) = analyze(src.as_bytes());
    assert_eq!(status, RanatomyStatus::DataflowFailed);
    assert_eq!(unsafe { ranatomy_analysis_outcome(h) }, RanatomyOutcome::ResourceLimit);
    unsafe { ranatomy_analysis_free(h) };
}

#[test]
fn null_arguments() {
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { ranatomy_analyze(ptr::null(), 3, &mut h) }, RanatomyStatus::NullArgument);
    assert_eq!(unsafe { ranatomy_analyze(b"x".as_ptr(), 1, ptr::null_mut()) }, RanatomyStatus::NullArgument);
    let (status, h) = unsafe {
        let mut h = ptr::null_mut();
        (ranatomy_analyze(ptr::null(), 0, &mut h), h)
    };
    assert_eq!(status, RanatomyStatus::Ok);
    assert_eq!(get(ptr::null(), "/x"), Err(RanatomyStatus::NullArgument));
    assert!(unsafe { ranatomy_analysis_json(ptr::null()) }.is_null());
    unsafe {
        ranatomy_analysis_free(h);
        ranatomy_analysis_free(ptr::null_mut());
    }
    let mut p = 0.0;
    assert_eq!(unsafe { ranatomy_fisher_exact(1, 2, 3, 4, &mut p, ptr::null_mut()) }, RanatomyStatus::NullArgument);
}

#[test]
fn statistics() {
    let (mut p, mut phi) = (0.0, 0.0);
    assert_eq!(unsafe { ranatomy_fisher_exact(3, 0, 0, 3, &mut p, &mut phi) }, RanatomyStatus::Ok);
    assert!((p - 0.1).abs() < 1e-12 && (phi - 1.0).abs() < 1e-12, "{p} {phi}");
    assert_eq!(unsafe { ranatomy_fisher_exact(0, 0, 2, 3, &mut p, &mut phi) }, RanatomyStatus::Ok);
    assert!(phi.is_nan());

    let xs = [1.0, 2.0, 3.0];
    let ys = [4.0, 5.0, 6.0];
    let (mut u, mut pv) = (0.0, 0.0);
    assert_eq!(unsafe { ranatomy_mann_whitney(xs.as_ptr(), 3, ys.as_ptr(), 3, &mut u, &mut pv) }, RanatomyStatus::Ok);
    assert_eq!(u, 0.0);
    assert!((pv - 0.1).abs() < 1e-12, "{pv}");
    assert_eq!(
        unsafe { ranatomy_mann_whitney(xs.as_ptr(), 0, ys.as_ptr(), 3, &mut u, &mut pv) },
        RanatomyStatus::InvalidArgument
    );
    let bad = [f64::NAN];
    assert_eq!(
        unsafe { ranatomy_mann_whitney(bad.as_ptr(), 1, ys.as_ptr(), 3, &mut u, &mut pv) },
        RanatomyStatus::InvalidArgument
    );
}

#[test]
fn messages_and_version() {
    let v = unsafe { CStr::from_ptr(ranatomy_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
    let m = unsafe { CStr::from_ptr(ranatomy_status_message(RanatomyStatus::NotFound)) };
    assert_eq!(m.to_str().unwrap(), "not found");
}

fn header() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("include/ranatomy.h")
}

#[test]
fn header_declares_api() {
    let h = std::fs::read_to_string(header()).unwrap();
    for name in [
        "ranatomy_version",
        "ranatomy_status_message",
        "ranatomy_analyze",
        "ranatomy_analysis_outcome",
        "ranatomy_analysis_json",
        "ranatomy_analysis_get",
        "ranatomy_analysis_free",
        "ranatomy_fisher_exact",
        "ranatomy_mann_whitney",
        "typedef struct RanatomyAnalysis RanatomyAnalysis",
        "RANATOMY_STATUS_PARSE_FAILED = 3",
    ] {
        assert!(h.contains(name), "{name} missing from header");
    }
}

const C_PROGRAM: &str = r#"
#include <stdio.h>
#include <string.h>
#include "ranatomy.h"

int main(void) {
    const char *src = "while (TRUE) break\n";
    RanatomyAnalysis *a = NULL;
    if (ranatomy_analyze((const uint8_t *)src, strlen(src), &a) != RANATOMY_STATUS_OK) return 1;
    double n = -1;
    if (ranatomy_analysis_get(a, "/loops/while_count", &n) != RANATOMY_STATUS_OK) return 2;
    ranatomy_analysis_free(a);
    double p, phi;
    ranatomy_fisher_exact(3, 0, 0, 3, &p, &phi);
    printf("%s %g %.6f\n", ranatomy_version(), n, p);
    return 0;
}
"#;

/// Compiles a C program against the header and the shared library.
#[test]
fn c_program_links_and_runs() {
    let Some(cc) = ["cc", "gcc", "clang"].into_iter().find(|c| Command::new(c).arg("--version").output().is_ok()) else {
        eprintln!("no C compiler, skipping");
        return;
    };
    // target/<profile>/deps/ffi-<hash> -> target/<profile>
    let lib_dir = std::env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf();
    if !lib_dir.join("libranatomy_ffi.so").exists() {
        eprintln!("shared library not built, skipping");
        return;
    }
    let work = tempfile::TempDir::new().unwrap();
    let c = work.path().join("main.c");
    std::fs::write(&c, C_PROGRAM).unwrap();
    let exe = work.path().join("main");
    let o = Command::new(cc)
        .arg(&c)
        .arg("-I")
        .arg(header().parent().unwrap())
        .arg("-L")
        .arg(&lib_dir)
        .arg("-lranatomy_ffi")
        .arg(format!("-Wl,-rpath,{}", lib_dir.display()))
        .arg("-o")
        .arg(&exe)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let run = Command::new(&exe).output().unwrap();
    assert!(run.status.success(), "exit {:?}", run.status);
    assert_eq!(String::from_utf8_lossy(&run.stdout), format!("{} 1 0.100000\n", env!("CARGO_PKG_VERSION")));
}
