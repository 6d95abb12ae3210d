mod common;

use std::fs;
use std::path::{Path, PathBuf};

use common::render;
use ranatomy::dataflow::{build_dataflow, redefinitions, DataflowGraph, EdgeKind, Role};
use ranatomy::syntax::parse;

fn fixtures() -> Vec<PathBuf> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/dataflow");
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "R"))
        .collect();
    files.sort();
    files
}

fn graph_of(path: &Path) -> (Vec<u8>, DataflowGraph) {
    let src = fs::read(path).unwrap();
    let ast = parse(&src).ast().cloned().expect("fixture parses");
    let g = build_dataflow(&ast).unwrap();
    (src, g)
}

#[test]
fn graphs_match_hand_derived_goldens() {
    let files = fixtures();
    assert_eq!(files.len(), 15);
    let mut failures = Vec::new();
    for path in &files {
        let (src, g) = graph_of(path);
        let actual = render(&g, &src);
        let expected = fs::read_to_string(path.with_extension("graph")).unwrap();
        if actual != expected {
            failures.push(format!("{}\n--- expected\n{expected}--- actual\n{actual}", path.display()));
        }
    }
    assert!(failures.is_empty(), "{}", failures.join("\n"));
}

#[test]
fn structural_invariants_hold_on_goldens() {
    for path in fixtures() {
        let (_, g) = graph_of(&path);
        for e in &g.edges {
            let (from, to) = (&g.nodes[e.from], &g.nodes[e.to]);
            match e.kind {
                EdgeKind::ReadsFrom => {
                    assert_eq!(from.role, Role::Use);
                    assert_ne!(to.role, Role::Use);
                }
                EdgeKind::CallsTarget => {
                    assert_eq!(from.role, Role::FunctionCallSite);
                    assert!(to.value_is_function);
                    assert!(!g.unresolved_calls.contains(&e.from));
                }
                EdgeKind::Redefines => {
                    assert_eq!(from.name, to.name);
                    assert_eq!(from.frame, to.frame);
                    assert!(from.id < to.id);
                }
            }
            if e.kind != EdgeKind::Redefines {
                assert!(to.span.start < from.span.start, "{}: forward edge {e:?}", path.display());
            }
        }
        for site in g.nodes.iter().filter(|n| n.role == Role::FunctionCallSite) {
            let resolved = g.edges.iter().any(|e| e.kind == EdgeKind::CallsTarget && e.from == site.id);
            assert_ne!(resolved, g.unresolved_calls.contains(&site.id));
        }
    }
}

#[test]
fn stateful_closure_super_assignment_crosses_frames() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/dataflow");
    let (_, g) = graph_of(&dir.join("07_stateful_closure.R"));
    let sup = g.nodes.iter().find(|n| n.definer.is_some_and(|d| d.as_str() == "<<-")).unwrap();
    assert_eq!(sup.frame, 1);
    let uses: Vec<_> = g.nodes.iter().filter(|n| n.role == Role::Use).collect();
    assert!(uses.iter().all(|u| u.frame == 2));
    assert_eq!(redefinitions(&g).len(), 1);
}
