use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

use proptest::prelude::*;
use ranatomy::syntax::{
    lex, parse, tokenize, AssignOp, FailureCategory, ParseOutcome, SyntaxKind, SyntaxNode, TokenKind,
};

fn ast(src: &str) -> SyntaxNode {
    match parse(src.as_bytes()) {
        ParseOutcome::Ast(a) => a,
        ParseOutcome::Failure(f) => panic!("{src:?}: {f:?}"),
    }
}

fn first(src: &str) -> SyntaxNode {
    ast(src).children.into_iter().next().unwrap()
}

fn failure_fixture(name: &str) -> FailureCategory {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/failures").join(name);
    match parse(&fs::read(path).unwrap()) {
        ParseOutcome::Failure(f) => f.category,
        ParseOutcome::Ast(_) => panic!("{name} parsed"),
    }
}

#[test]
fn failure_taxonomy_fixtures() {
    assert_eq!(failure_fixture("documentation_command.R"), FailureCategory::DocumentationCommand);
    assert_eq!(failure_fixture("encoding_confusable.R"), FailureCategory::EncodingError);
    assert_eq!(failure_fixture("not_r_code.R"), FailureCategory::NotRCode);
    assert_eq!(failure_fixture("syntax_error.R"), FailureCategory::RawSyntaxError);
}

#[test]
fn syntax_error_reports_first_error_position() {
    let src = "data <- read.csv(\"input.csv\")\nplot(data$x, data$y\nabline(h = 0)\n";
    let f = parse(src.as_bytes()).failure().cloned().unwrap();
    assert_eq!(&src[f.first_error_span.start..f.first_error_span.end], "abline");
}

#[test]
fn tokenize_example() {
    let toks = tokenize(b"x <- 2 # note").unwrap();
    let kinds: Vec<_> = toks.iter().map(|t| t.kind).collect();
    assert_eq!(kinds, [TokenKind::Symbol, TokenKind::LeftAssign, TokenKind::Number, TokenKind::Comment]);
    assert!(tokenize(b"").unwrap().is_empty());
    assert_eq!(tokenize(b"x <- \"\xff\"").unwrap_err().offset, 6);
}

#[test]
fn six_operators_give_six_assign_variants() {
    let srcs = ["a <- 1", "a <<- 1", "a = 1", "1 -> a", "1 ->> a", "a := 1"];
    let kinds: Vec<_> = srcs.iter().map(|s| first(s).kind).collect();
    let expected: Vec<_> = AssignOp::ALL.iter().map(|op| SyntaxKind::Assign(*op)).collect();
    assert_eq!(kinds, expected);
}

#[test]
fn named_arguments_are_not_assignments() {
    let call = first("f(x = 1, y = g(z = 2))");
    let mut assigns = 0;
    call.walk(&mut |n| assigns += matches!(n.kind, SyntaxKind::Assign(_)) as usize);
    assert_eq!(assigns, 0);
    assert_eq!(call.children[1].kind, SyntaxKind::NamedArg);
    // A parenthesised `=` inside an argument list is an assignment again.
    let call = first("f((x = 1))");
    assert_eq!(call.children[1].children[0].kind, SyntaxKind::Assign(AssignOp::Equals));
}

#[test]
fn precedence_invariants() {
    let a = first("a <- b + c * d");
    assert_eq!(a.children[1].children[1].kind.to_string(), "BinaryOp(*)");
    let d = first("x$y$z");
    assert_eq!(d.children[0].kind, SyntaxKind::DollarAccess);
    assert_eq!(d.children[1].name().as_deref(), Some("z"));
    let c = first("a:b + 1");
    assert_eq!(c.kind.to_string(), "BinaryOp(+)");
    assert_eq!(c.children[0].kind, SyntaxKind::ColonOp);
    let u = first("-1:3");
    assert_eq!(u.kind, SyntaxKind::ColonOp);
    let f = first("y ~ a | b");
    assert_eq!(f.kind, SyntaxKind::Tilde);
    let q = first("x <- y = 2");
    assert_eq!(q.kind, SyntaxKind::Assign(AssignOp::Equals));
}

#[test]
fn newline_rules() {
    // Top level: a complete expression ends at the newline.
    assert_eq!(ast("x\n-1").children.len(), 2);
    // Inside parentheses the expression continues.
    assert_eq!(ast("(x\n-1)").children.len(), 1);
    // An `else` on a new line is only legal inside braces.
    assert!(parse(b"if (a) 1\nelse 2").failure().is_some());
    assert!(parse(b"{\nif (a) 1\nelse 2\n}").ast().is_some());
    // Trailing operator continues onto the next line.
    assert_eq!(ast("x <-\n  5").children.len(), 1);
}

#[test]
fn spec_shapes() {
    let i = first("if (x > 1) y <- 2 else y <- 3");
    assert_eq!(i.kind, SyntaxKind::If);
    assert_eq!(i.children.len(), 3);
    let f = first("for(i in 1:10) print(i)");
    assert_eq!(f.children[1].kind, SyntaxKind::ColonOp);
    assert_eq!(f.children[2].kind, SyntaxKind::Call);
    let r = first("x <- r\"(raw \\ text)\"");
    assert_eq!(r.children[1].kind, SyntaxKind::RawString);
}

#[test]
fn deep_nesting_is_a_failure_not_a_crash() {
    let src = format!("{}1{}", "(".repeat(100_000), ")".repeat(100_000));
    assert!(parse(src.as_bytes()).failure().is_some());
    let src = format!("x <- {}", "-".repeat(200_000));
    assert!(parse(src.as_bytes()).failure().is_some());
    let src = format!("{}x", "!".repeat(200_000));
    assert!(parse(src.as_bytes()).failure().is_some());
}

#[test]
fn long_flat_chains_parse() {
    let src = format!("x <- {}1", "1 + ".repeat(100));
    assert!(parse(src.as_bytes()).ast().is_some());
    let src = (0..20_000).map(|i| format!("v{i} <- {i}\n")).collect::<String>();
    assert_eq!(ast(&src).children.len(), 20_000);
}

#[test]
fn megabyte_of_noise_terminates_quickly() {
    let mut state = 0x2545_f491_4f6c_dd1du64;
    let alphabet = b"(){}[]<-=+*/^%$@:;,\"'`\\#\n xyz019.!&|~?";
    let bytes: Vec<u8> = (0..1 << 20)
        .map(|_| {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            alphabet[(state % alphabet.len() as u64) as usize]
        })
        .collect();
    let started = Instant::now();
    let _ = parse(&bytes);
    assert!(started.elapsed() < Duration::from_secs(10));
}

fn check_leaves(node: &SyntaxNode, src: &[u8], cursor: &mut usize) {
    assert!(node.span.end <= src.len());
    for child in &node.children {
        assert!(node.span.contains(&child.span), "{:?} outside {:?}", child.span, node.span);
    }
    if node.is_leaf() && !node.span.is_empty() {
        assert!(node.span.start >= *cursor, "leaf {:?} overlaps previous", node.span);
        *cursor = node.span.end;
        let text = String::from_utf8_lossy(&src[node.span.start..node.span.end]);
        assert_eq!(node.text.as_deref(), Some(&*text));
    }
    for child in &node.children {
        check_leaves(child, src, cursor);
    }
}

fn r_fragment() -> impl Strategy<Value = String> {
    let atoms = prop::sample::select(vec![
        "x", "y", "1", "2.5", "'s'", "TRUE", "NULL", "f(x)", "a$b", "m[1, 2]", "l[[\"k\"]]",
        "pkg::g(1)", "`q r`", "NA", "-z", "!p", "(x + 1)", "function(a, b = 2) a * b", "\\(k) k",
        "{ x; y }", "c(1, 2, 3)", "r\"(raw)\"", "a %in% b", "x |> f()", "~ w",
    ]);
    let ops = prop::sample::select(vec![
        " + ", " - ", " * ", " / ", " ^ ", " < ", " == ", " & ", " || ", ":", " %>% ", " <- ", " = ",
        " -> ", " <<- ",
    ]);
    (atoms.clone(), prop::collection::vec((ops, atoms), 0..6)).prop_map(|(head, rest)| {
        let mut s = head.to_string();
        for (op, atom) in rest {
            s.push_str(op);
            s.push_str(atom);
        }
        s
    })
}

fn r_program() -> impl Strategy<Value = String> {
    let stmt = prop_oneof![
        r_fragment(),
        r_fragment().prop_map(|e| format!("if (({e})) {{\n  {e}\n}} else {e}")),
        r_fragment().prop_map(|e| format!("for (i in 1:n) {e}")),
        r_fragment().prop_map(|e| format!("while (ok) {{ {e} }}")),
        r_fragment().prop_map(|e| format!("{e} # trailing comment")),
    ];
    prop::collection::vec(stmt, 0..8).prop_map(|v| v.join("\n"))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn tokens_and_trivia_reconstruct_input(bytes in prop::collection::vec(any::<u8>(), 0..400)) {
        let toks = lex(&bytes);
        let mut rebuilt = Vec::new();
        let mut cursor = 0;
        for t in &toks {
            prop_assert!(t.span.start >= cursor);
            prop_assert!(t.span.end > t.span.start);
            let gap = &bytes[cursor..t.span.start];
            let bom = cursor == 0 && gap.starts_with(b"\xef\xbb\xbf");
            let gap_ws = if bom { &gap[3..] } else { gap };
            prop_assert!(gap_ws.iter().all(|b| b" \t\r\x0c".contains(b)), "non-trivia gap {:?}", gap);
            rebuilt.extend_from_slice(gap);
            rebuilt.extend_from_slice(&bytes[t.span.start..t.span.end]);
            cursor = t.span.end;
        }
        rebuilt.extend_from_slice(&bytes[cursor..]);
        prop_assert!(bytes[cursor..].iter().all(|b| b" \t\r\x0c".contains(b)));
        prop_assert_eq!(rebuilt, bytes);
    }

    #[test]
    fn arbitrary_bytes_never_panic(bytes in prop::collection::vec(any::<u8>(), 0..2000)) {
        let a = parse(&bytes);
        let b = parse(&bytes);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn generated_programs_parse_with_nested_spans(src in r_program()) {
        let tree = ast(&src);
        prop_assert_eq!(tree.span.end, src.len());
        let mut cursor = 0;
        check_leaves(&tree, src.as_bytes(), &mut cursor);
        // Every name, number and string token appears as a leaf.
        let leaf_starts: std::collections::BTreeSet<usize> = {
            let mut s = std::collections::BTreeSet::new();
            tree.walk(&mut |n| { if n.is_leaf() { s.insert(n.span.start); } });
            s
        };
        for t in lex(src.as_bytes()) {
            if matches!(t.kind, TokenKind::Symbol | TokenKind::Number | TokenKind::String | TokenKind::RawString) {
                prop_assert!(leaf_starts.contains(&t.span.start), "token at {:?} lost", t.span);
            }
        }
    }
}
