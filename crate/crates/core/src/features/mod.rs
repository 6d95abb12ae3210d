//! Per-file usage census: the counters behind every characteristic plus a
//! few lint findings.

mod census;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::dataflow::{static_callee, DataflowGraph, EdgeKind, Role};
use crate::syntax::{lex, AssignOp, Span, SyntaxKind, SyntaxNode, Token, TokenKind, UnaryOperator};

pub use census::detect_degenerate_control;

pub const SCHEMA_VERSION: u32 = 1;

pub type Counts = BTreeMap<String, u64>;

pub const VALUE_KINDS: [&str; 9] = [
    "FunctionCall",
    "Constant",
    "Symbol",
    "BinaryOp",
    "UnaryOp",
    "FunctionDef",
    "AnonymousCall",
    "IndexExpr",
    "Other",
];
pub const ASSIGN_FUNCTIONS: [&str; 6] =
    ["assign", "assignInNamespace", "setGeneric", "setMethod", "setValidity", "delayedAssign"];
pub const LOCK_FUNCTIONS: [&str; 2] = ["lockEnvironment", "lockBinding"];
pub const GET_FAMILY: [&str; 4] = ["get", "mget", "get0", "exists"];
pub const BODY_ARITIES: [&str; 3] = ["Empty", "Single", "Multiple"];
pub const FOR_VECTOR_KINDS: [&str; 7] =
    ["ColonRange", "SeqCall", "SeqAlongLen", "SymbolVector", "ConstantVector", "OtherCall", "Other"];
pub const APPLY_FAMILY: [&str; 7] = ["lapply", "sapply", "apply", "vapply", "mapply", "tapply", "Map"];
pub const HOOKS: [&str; 4] = [".onAttach", ".onLoad", ".onUnload", ".onDetach"];
pub const REFLECTIVE: [&str; 16] = [
    "eval", "evalq", "body", "formals", "environment", "parse", "deparse", "substitute", "quote",
    "bquote", "load", "attach", "sys.call", "sys.function", "match.call", "do.call",
];
pub const FFI: [&str; 5] = [".C", ".Call", ".Fortran", ".External", ".External2"];
pub const LOAD_FUNCTIONS: [&str; 5] =
    ["library", "require", "requireNamespace", "loadNamespace", "attachNamespace"];
pub const ROXYGEN_TAGS: [&str; 2] = ["@import", "@importFrom"];
pub const LITERAL_KINDS: [&str; 7] =
    ["Number", "String", "RawString", "LogicalConst", "NullConst", "NAConst", "InfConst"];
/// Base operators and keywords whose rebinding is reported.
pub const BASE_OPERATORS: [&str; 33] = [
    ":", "==", "<-", "if", "for", "(", "{", "[", "[[", "$", "@", "=", "<<-", "while", "repeat",
    "function", "::", "+", "-", "*", "/", "^", "<", ">", "<=", ">=", "!=", "!", "&", "&&", "|",
    "||", "%%",
];
/// Operators compared by the mixed-operator lint.
pub const STYLE_OPERATORS: [AssignOp; 3] = [AssignOp::Left, AssignOp::Equals, AssignOp::Right];
pub const DEFAULT_FORBIDDEN_CALLS: [&str; 2] = ["eval", "assignInNamespace"];

fn zeroed(keys: &[&str]) -> Counts {
    keys.iter().map(|k| (k.to_string(), 0)).collect()
}

fn add_counts(into: &mut Counts, from: &Counts) {
    for (k, v) in from {
        *into.entry(k.clone()).or_insert(0) += v;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssignStats {
    pub total: u64,
    pub by_operator: Counts,
    pub operator_set: Vec<String>,
    pub assigned_value_kind: Counts,
    pub assign_functions: Counts,
    pub lock_functions: Counts,
    pub files_redefining: bool,
    pub redefinition_count: u64,
}

impl Default for AssignStats {
    fn default() -> Self {
        let ops: Vec<&str> = AssignOp::ALL.iter().map(|o| o.as_str()).collect();
        Self {
            total: 0,
            by_operator: zeroed(&ops),
            operator_set: Vec::new(),
            assigned_value_kind: zeroed(&VALUE_KINDS),
            assign_functions: zeroed(&ASSIGN_FUNCTIONS),
            lock_functions: zeroed(&LOCK_FUNCTIONS),
            files_redefining: false,
            redefinition_count: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccessStats {
    pub single_bracket: u64,
    pub double_bracket: u64,
    pub dollar: u64,
    pub at: u64,
    pub get_family: Counts,
    pub plain_symbol_uses: u64,
}

impl Default for AccessStats {
    fn default() -> Self {
        Self {
            single_bracket: 0,
            double_bracket: 0,
            dollar: 0,
            at: 0,
            get_family: zeroed(&GET_FAMILY),
            plain_symbol_uses: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CondStats {
    pub if_without_else: u64,
    pub if_with_else: u64,
    pub constant_condition_count: u64,
    /// Keyed by the condition's node kind, e.g. `BinaryOp(>)`.
    pub condition_root_kind: Counts,
    pub body_arity: Counts,
    pub ifelse_calls: u64,
    pub switch_calls: u64,
}

impl Default for CondStats {
    fn default() -> Self {
        Self {
            if_without_else: 0,
            if_with_else: 0,
            constant_condition_count: 0,
            condition_root_kind: Counts::new(),
            body_arity: zeroed(&BODY_ARITIES),
            ifelse_calls: 0,
            switch_calls: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoopStats {
    pub for_count: u64,
    pub while_count: u64,
    pub repeat_count: u64,
    pub for_vector_kind: Counts,
    pub nested_for: u64,
    pub degenerate_for: u64,
    pub degenerate_while: u64,
    pub while_single_expr_body: u64,
    pub break_count: u64,
    pub next_count: u64,
    pub apply_family: Counts,
}

impl Default for LoopStats {
    fn default() -> Self {
        Self {
            for_count: 0,
            while_count: 0,
            repeat_count: 0,
            for_vector_kind: zeroed(&FOR_VECTOR_KINDS),
            nested_for: 0,
            degenerate_for: 0,
            degenerate_while: 0,
            while_single_expr_body: 0,
            break_count: 0,
            next_count: 0,
            apply_family: zeroed(&APPLY_FAMILY),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunDefStats {
    pub total_defs: u64,
    pub assigned_defs: u64,
    pub lambda_defs: u64,
    pub hook_defs: Counts,
    pub infix_defs: BTreeSet<String>,
    pub infix_count: u64,
    pub replacement_defs: u64,
    pub operator_redefs: BTreeSet<String>,
    pub operator_redef_count: u64,
}

impl Default for FunDefStats {
    fn default() -> Self {
        Self {
            total_defs: 0,
            assigned_defs: 0,
            lambda_defs: 0,
            hook_defs: zeroed(&HOOKS),
            infix_defs: BTreeSet::new(),
            infix_count: 0,
            replacement_defs: 0,
            operator_redefs: BTreeSet::new(),
            operator_redef_count: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CallStats {
    pub total_calls: u64,
    pub by_name: Counts,
    pub reflective: Counts,
    pub ffi: Counts,
    pub testing: u64,
    pub anonymous_calls: u64,
}

impl Default for CallStats {
    fn default() -> Self {
        Self {
            total_calls: 0,
            by_name: Counts::new(),
            reflective: zeroed(&REFLECTIVE),
            ffi: zeroed(&FFI),
            testing: 0,
            anonymous_calls: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PackageStats {
    pub load_calls: Counts,
    pub loaded_names: BTreeSet<String>,
    pub unknown_loads: u64,
    pub ns_access: u64,
    pub internal_ns_access: u64,
    pub roxygen_imports: Counts,
    pub vectorized_load_pattern: u64,
}

impl Default for PackageStats {
    fn default() -> Self {
        Self {
            load_calls: zeroed(&LOAD_FUNCTIONS),
            loaded_names: BTreeSet::new(),
            unknown_loads: 0,
            ns_access: 0,
            internal_ns_access: 0,
            roxygen_imports: zeroed(&ROXYGEN_TAGS),
            vectorized_load_pattern: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueStats {
    /// `T` and `F` count as logical constants.
    pub literals: Counts,
}

impl Default for ValueStats {
    fn default() -> Self {
        Self { literals: zeroed(&LITERAL_KINDS) }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CommentStats {
    pub total: u64,
    /// Comments starting with `#'`.
    pub roxygen: u64,
    /// Comments following code on the same line.
    pub inline: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct VarStats {
    /// Operator assignments to a plain name.
    pub definitions: u64,
    pub parameter_defs: u64,
    pub loop_var_defs: u64,
    pub uses: u64,
    pub uses_without_definition: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FileMetrics {
    pub bytes: u64,
    pub lines: u64,
    pub max_line_length: u64,
    pub mean_line_length: f64,
    pub comment_lines: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConstantKind {
    ConstantIf,
    DegenerateFor,
    DegenerateWhile,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ControlFinding {
    pub kind: ConstantKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallFlag {
    pub name: String,
    pub span: Span,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LintFindings {
    pub mixed_assignment_operators: bool,
    /// Which of `<-`, `=`, `->` the file uses.
    pub mixed_operator_set: Vec<String>,
    pub generalized_constant_conditions: Vec<ControlFinding>,
    pub strict_mode_flags: Vec<CallFlag>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureReport {
    pub schema_version: u32,
    pub assignments: AssignStats,
    pub data_access: AccessStats,
    pub conditionals: CondStats,
    pub loops: LoopStats,
    pub fun_defs: FunDefStats,
    pub fun_calls: CallStats,
    pub packages: PackageStats,
    pub values: ValueStats,
    pub comments: CommentStats,
    pub variables: VarStats,
    pub metadata: FileMetrics,
    pub lint: LintFindings,
}

impl Default for FeatureReport {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            assignments: AssignStats::default(),
            data_access: AccessStats::default(),
            conditionals: CondStats::default(),
            loops: LoopStats::default(),
            fun_defs: FunDefStats::default(),
            fun_calls: CallStats::default(),
            packages: PackageStats::default(),
            values: ValueStats::default(),
            comments: CommentStats::default(),
            variables: VarStats::default(),
            metadata: FileMetrics::default(),
            lint: LintFindings::default(),
        }
    }
}

impl FeatureReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }

    /// Field-wise sum of counters; sets are unioned and flags or-ed.
    /// Line metrics are summed except the maximum line length, and the mean
    /// is recomputed from the combined totals.
    pub fn merge(&mut self, other: &FeatureReport) {
        let a = &mut self.assignments;
        let b = &other.assignments;
        a.total += b.total;
        add_counts(&mut a.by_operator, &b.by_operator);
        a.operator_set = operator_set(&a.by_operator, &AssignOp::ALL);
        add_counts(&mut a.assigned_value_kind, &b.assigned_value_kind);
        add_counts(&mut a.assign_functions, &b.assign_functions);
        add_counts(&mut a.lock_functions, &b.lock_functions);
        a.files_redefining |= b.files_redefining;
        a.redefinition_count += b.redefinition_count;

        let a = &mut self.data_access;
        let b = &other.data_access;
        a.single_bracket += b.single_bracket;
        a.double_bracket += b.double_bracket;
        a.dollar += b.dollar;
        a.at += b.at;
        add_counts(&mut a.get_family, &b.get_family);
        a.plain_symbol_uses += b.plain_symbol_uses;

        let a = &mut self.conditionals;
        let b = &other.conditionals;
        a.if_without_else += b.if_without_else;
        a.if_with_else += b.if_with_else;
        a.constant_condition_count += b.constant_condition_count;
        add_counts(&mut a.condition_root_kind, &b.condition_root_kind);
        add_counts(&mut a.body_arity, &b.body_arity);
        a.ifelse_calls += b.ifelse_calls;
        a.switch_calls += b.switch_calls;

        let a = &mut self.loops;
        let b = &other.loops;
        a.for_count += b.for_count;
        a.while_count += b.while_count;
        a.repeat_count += b.repeat_count;
        add_counts(&mut a.for_vector_kind, &b.for_vector_kind);
        a.nested_for += b.nested_for;
        a.degenerate_for += b.degenerate_for;
        a.degenerate_while += b.degenerate_while;
        a.while_single_expr_body += b.while_single_expr_body;
        a.break_count += b.break_count;
        a.next_count += b.next_count;
        add_counts(&mut a.apply_family, &b.apply_family);

        let a = &mut self.fun_defs;
        let b = &other.fun_defs;
        a.total_defs += b.total_defs;
        a.assigned_defs += b.assigned_defs;
        a.lambda_defs += b.lambda_defs;
        add_counts(&mut a.hook_defs, &b.hook_defs);
        a.infix_defs.extend(b.infix_defs.iter().cloned());
        a.infix_count += b.infix_count;
        a.replacement_defs += b.replacement_defs;
        a.operator_redefs.extend(b.operator_redefs.iter().cloned());
        a.operator_redef_count += b.operator_redef_count;

        let a = &mut self.fun_calls;
        let b = &other.fun_calls;
        a.total_calls += b.total_calls;
        add_counts(&mut a.by_name, &b.by_name);
        add_counts(&mut a.reflective, &b.reflective);
        add_counts(&mut a.ffi, &b.ffi);
        a.testing += b.testing;
        a.anonymous_calls += b.anonymous_calls;

        let a = &mut self.packages;
        let b = &other.packages;
        add_counts(&mut a.load_calls, &b.load_calls);
        a.loaded_names.extend(b.loaded_names.iter().cloned());
        a.unknown_loads += b.unknown_loads;
        a.ns_access += b.ns_access;
        a.internal_ns_access += b.internal_ns_access;
        add_counts(&mut a.roxygen_imports, &b.roxygen_imports);
        a.vectorized_load_pattern += b.vectorized_load_pattern;

        add_counts(&mut self.values.literals, &other.values.literals);

        let a = &mut self.comments;
        let b = &other.comments;
        a.total += b.total;
        a.roxygen += b.roxygen;
        a.inline += b.inline;

        let a = &mut self.variables;
        let b = &other.variables;
        a.definitions += b.definitions;
        a.parameter_defs += b.parameter_defs;
        a.loop_var_defs += b.loop_var_defs;
        a.uses += b.uses;
        a.uses_without_definition += b.uses_without_definition;

        let a = &mut self.metadata;
        let b = &other.metadata;
        let chars = a.mean_line_length * a.lines as f64 + b.mean_line_length * b.lines as f64;
        a.bytes += b.bytes;
        a.lines += b.lines;
        a.max_line_length = a.max_line_length.max(b.max_line_length);
        a.mean_line_length = if a.lines == 0 { 0.0 } else { chars / a.lines as f64 };
        a.comment_lines += b.comment_lines;

        let a = &mut self.lint;
        let b = &other.lint;
        let mut style: BTreeSet<&str> = a.mixed_operator_set.iter().map(String::as_str).collect();
        style.extend(b.mixed_operator_set.iter().map(String::as_str));
        let merged: Vec<String> = STYLE_OPERATORS
            .iter()
            .map(|o| o.as_str())
            .filter(|o| style.contains(o))
            .map(str::to_string)
            .collect();
        a.mixed_assignment_operators = merged.len() >= 2;
        a.mixed_operator_set = merged;
        a.generalized_constant_conditions.extend(b.generalized_constant_conditions.iter().cloned());
        a.strict_mode_flags.extend(b.strict_mode_flags.iter().cloned());
    }
}

fn operator_set(by_operator: &Counts, ops: &[AssignOp]) -> Vec<String> {
    ops.iter()
        .map(|o| o.as_str())
        .filter(|o| by_operator.get(*o).copied().unwrap_or(0) > 0)
        .map(str::to_string)
        .collect()
}

#[derive(Debug, Clone)]
pub struct FeatureOptions {
    /// Callees reported by the strict-mode lint, matched after `pkg::`
    /// stripping.
    pub forbidden_calls: Vec<String>,
}

impl Default for FeatureOptions {
    fn default() -> Self {
        Self { forbidden_calls: DEFAULT_FORBIDDEN_CALLS.iter().map(|s| s.to_string()).collect() }
    }
}

pub fn extract_features(ast: &SyntaxNode, graph: &DataflowGraph, source: &[u8]) -> FeatureReport {
    extract_features_with(ast, graph, source, &FeatureOptions::default())
}

pub fn extract_features_with(
    ast: &SyntaxNode,
    graph: &DataflowGraph,
    source: &[u8],
    opts: &FeatureOptions,
) -> FeatureReport {
    let mut report = FeatureReport::default();
    census::Census::new(&mut report, opts).run(ast);

    let a = &mut report.assignments;
    a.operator_set = operator_set(&a.by_operator, &AssignOp::ALL);
    let lint = &mut report.lint;
    lint.mixed_operator_set = operator_set(&a.by_operator, &STYLE_OPERATORS);
    lint.mixed_assignment_operators = lint.mixed_operator_set.len() >= 2;

    graph_counts(ast, graph, &mut report);

    let tokens = lex(source);
    report.packages.roxygen_imports = scan_roxygen_imports(&tokens, source);
    comment_counts(&tokens, source, &mut report.comments);
    report.metadata = file_metrics(source, &tokens);
    report
}

fn graph_counts(ast: &SyntaxNode, graph: &DataflowGraph, report: &mut FeatureReport) {
    let mut objects = BTreeSet::new();
    ast.walk(&mut |n| {
        if matches!(
            n.kind,
            SyntaxKind::IndexBracket | SyntaxKind::IndexDoubleBracket | SyntaxKind::DollarAccess | SyntaxKind::AtAccess
        ) {
            if let Some(obj) = n.children.first() {
                objects.insert(obj.span);
            }
        }
    });
    let mut read = vec![false; graph.nodes.len()];
    for e in graph.edges_of(EdgeKind::ReadsFrom) {
        read[e.from] = true;
    }
    let v = &mut report.variables;
    for node in &graph.nodes {
        match node.role {
            Role::Definition => v.definitions += 1,
            Role::ParameterDef => v.parameter_defs += 1,
            Role::LoopVarDef => v.loop_var_defs += 1,
            Role::Use => {
                v.uses += 1;
                if !read[node.id] {
                    v.uses_without_definition += 1;
                }
                if !objects.contains(&node.span) {
                    report.data_access.plain_symbol_uses += 1;
                }
            }
            Role::FunctionCallSite => {}
        }
    }
    let redefs = graph
        .edges_of(EdgeKind::Redefines)
        .filter(|e| graph.node(e.from).role == Role::Definition && graph.node(e.to).role == Role::Definition)
        .count() as u64;
    report.assignments.redefinition_count = redefs;
    report.assignments.files_redefining = redefs > 0;
}

fn is_word_byte(b: u8) -> bool {
    b.is_ascii_alphanumeric() || b == b'_'
}

/// Count `@import` and `@importFrom` tags in `#'` comments.
pub fn scan_roxygen_imports(tokens: &[Token], source: &[u8]) -> Counts {
    let mut counts = zeroed(&ROXYGEN_TAGS);
    for tok in tokens.iter().filter(|t| t.kind == TokenKind::Comment) {
        let text = &source[tok.span.start..tok.span.end];
        if !text.starts_with(b"#'") {
            continue;
        }
        for tag in ROXYGEN_TAGS {
            let pat = tag.as_bytes();
            let mut i = 0;
            while i + pat.len() <= text.len() {
                let before_ok = i == 0 || !is_word_byte(text[i - 1]);
                let after_ok = text.get(i + pat.len()).is_none_or(|&b| !is_word_byte(b));
                if &text[i..i + pat.len()] == pat && before_ok && after_ok {
                    *counts.get_mut(tag).unwrap() += 1;
                    i += pat.len();
                } else {
                    i += 1;
                }
            }
        }
    }
    counts
}

fn comment_counts(tokens: &[Token], source: &[u8], out: &mut CommentStats) {
    let mut code_on_line = None;
    for tok in tokens {
        match tok.kind {
            TokenKind::Comment => {
                out.total += 1;
                if source[tok.span.start..].starts_with(b"#'") {
                    out.roxygen += 1;
                }
                if code_on_line == Some(tok.line) {
                    out.inline += 1;
                }
            }
            TokenKind::Newline => {}
            _ => code_on_line = Some(tok.line),
        }
    }
}

fn file_metrics(source: &[u8], tokens: &[Token]) -> FileMetrics {
    let mut lines: Vec<&[u8]> = source.split(|&b| b == b'\n').collect();
    if source.is_empty() || source.ends_with(b"\n") {
        lines.pop();
    }
    let lengths: Vec<u64> = lines
        .iter()
        .map(|l| {
            let l = l.strip_suffix(b"\r").unwrap_or(l);
            String::from_utf8_lossy(l).chars().count() as u64
        })
        .collect();
    let comment_lines: BTreeSet<u32> =
        tokens.iter().filter(|t| t.kind == TokenKind::Comment).map(|t| t.line).collect();
    let total: u64 = lengths.iter().sum();
    FileMetrics {
        bytes: source.len() as u64,
        lines: lengths.len() as u64,
        max_line_length: lengths.iter().copied().max().unwrap_or(0),
        mean_line_length: if lengths.is_empty() { 0.0 } else { total as f64 / lengths.len() as f64 },
        comment_lines: comment_lines.len() as u64,
    }
}

/// Truth value of a syntactically constant condition: logical literals
/// (including `T`/`F`), numbers, parentheses and `!`.
pub fn constant_truth(node: &SyntaxNode) -> Option<bool> {
    match &node.kind {
        SyntaxKind::LogicalConst | SyntaxKind::Symbol => match node.text.as_deref()? {
            "TRUE" | "T" => Some(true),
            "FALSE" | "F" => Some(false),
            _ => None,
        },
        SyntaxKind::Number => number_value(node.text.as_deref()?).map(|v| v != 0.0),
        SyntaxKind::Paren => constant_truth(node.children.first()?),
        SyntaxKind::UnaryOp(UnaryOperator::Not) => constant_truth(node.children.first()?).map(|b| !b),
        _ => None,
    }
}

fn number_value(text: &str) -> Option<f64> {
    let t = text.strip_suffix('L').unwrap_or(text);
    if t.ends_with('i') {
        return None;
    }
    let v = if let Some(hex) = t.strip_prefix("0x").or_else(|| t.strip_prefix("0X")) {
        u64::from_str_radix(hex, 16).ok()? as f64
    } else {
        t.parse::<f64>().ok()?
    };
    (!v.is_nan()).then_some(v)
}

/// Literal leaf, counting `T`/`F` as logical.
pub fn is_constant_leaf(node: &SyntaxNode) -> bool {
    node.kind.is_literal() || is_tf(node)
}

fn is_tf(node: &SyntaxNode) -> bool {
    node.kind == SyntaxKind::Symbol && matches!(node.text.as_deref(), Some("T" | "F"))
}

/// Callee name for the census: `pkg::f` and `pkg:::f` reduce to `f`.
pub fn callee_name(callee: &SyntaxNode) -> Option<String> {
    match callee.kind {
        SyntaxKind::NamespaceAccess | SyntaxKind::InternalNamespaceAccess => callee.children.get(1)?.name(),
        _ => static_callee(callee).map(|(name, _)| name),
    }
}

/// Root-kind bucket for the value side of an assignment.
pub fn classify_assigned_value(rhs: &SyntaxNode) -> &'static str {
    use SyntaxKind::*;
    match &rhs.kind {
        Call => {
            let callee = &rhs.children[0];
            if matches!(callee.unparen().kind, FunctionDef(_) | Call) {
                "AnonymousCall"
            } else {
                "FunctionCall"
            }
        }
        k if k.is_literal() => "Constant",
        Symbol if is_tf(rhs) => "Constant",
        Symbol | BacktickSymbol => "Symbol",
        BinaryOp(_) | ColonOp | SpecialInfixOp(_) => "BinaryOp",
        UnaryOp(_) => "UnaryOp",
        FunctionDef(_) => "FunctionDef",
        IndexBracket | IndexDoubleBracket | DollarAccess | AtAccess => "IndexExpr",
        _ => "Other",
    }
}

/// Shape of the sequence a `for` loop iterates over.
pub fn classify_for_vector(vec: &SyntaxNode) -> &'static str {
    let v = vec.unparen();
    match v.kind {
        SyntaxKind::ColonOp => "ColonRange",
        SyntaxKind::Call => match v.children.first().and_then(callee_name).as_deref() {
            Some("seq") => "SeqCall",
            Some("seq_along" | "seq_len") => "SeqAlongLen",
            Some("c") if literal_vector(v) => "ConstantVector",
            _ => "OtherCall",
        },
        _ if is_constant_leaf(v) => "ConstantVector",
        SyntaxKind::Symbol | SyntaxKind::BacktickSymbol => "SymbolVector",
        _ => "Other",
    }
}

fn literal_vector(call: &SyntaxNode) -> bool {
    call.children[1..].iter().all(|arg| {
        let value = if arg.kind == SyntaxKind::NamedArg { arg.children.get(1) } else { Some(arg) };
        value.is_some_and(|v| is_constant_leaf(v.unparen()))
    })
}

/// Number of apply-family calls that pass `library` or `require` as the
/// function argument.
pub fn detect_vectorized_package_load(ast: &SyntaxNode) -> u64 {
    let mut n = 0;
    ast.walk(&mut |node| {
        if census::vectorized_load(node).is_some() {
            n += 1;
        }
    });
    n
}
