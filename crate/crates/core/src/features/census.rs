//! The AST walk behind `extract_features`.

use std::collections::HashSet;

use crate::syntax::parser::{RED_ZONE, STACK_GROWTH};
use crate::syntax::{FunctionForm, Span, SyntaxKind, SyntaxNode};

use super::{
    callee_name, classify_assigned_value, classify_for_vector, constant_truth, is_constant_leaf, CallFlag,
    ConstantKind, ControlFinding, FeatureOptions, FeatureReport, APPLY_FAMILY, ASSIGN_FUNCTIONS,
    BASE_OPERATORS, FFI, GET_FAMILY, HOOKS, LOAD_FUNCTIONS, LOCK_FUNCTIONS, REFLECTIVE,
};

pub(super) struct Census<'a> {
    report: &'a mut FeatureReport,
    opts: &'a FeatureOptions,
    /// Calls that sit on the target side of an assignment (`names(x) <- v`).
    replacement_calls: HashSet<Span>,
}

fn bump(map: &mut super::Counts, key: &str) {
    *map.entry(key.to_string()).or_insert(0) += 1;
}

impl<'a> Census<'a> {
    pub(super) fn new(report: &'a mut FeatureReport, opts: &'a FeatureOptions) -> Self {
        Self { report, opts, replacement_calls: HashSet::new() }
    }

    pub(super) fn run(mut self, ast: &SyntaxNode) {
        self.visit(ast, 0);
    }

    fn visit(&mut self, node: &SyntaxNode, for_depth: usize) {
        stacker::maybe_grow(RED_ZONE, STACK_GROWTH, || self.visit_inner(node, for_depth))
    }

    fn visit_all(&mut self, nodes: &[SyntaxNode], for_depth: usize) {
        for n in nodes {
            self.visit(n, for_depth);
        }
    }

    fn visit_inner(&mut self, node: &SyntaxNode, for_depth: usize) {
        use SyntaxKind::*;
        let r = &mut *self.report;
        match &node.kind {
            Assign(op) => {
                let (target, value) = if op.is_rightward() {
                    (&node.children[1], &node.children[0])
                } else {
                    (&node.children[0], &node.children[1])
                };
                let a = &mut r.assignments;
                a.total += 1;
                bump(&mut a.by_operator, op.as_str());
                bump(&mut a.assigned_value_kind, classify_assigned_value(value));
                if matches!(value.unparen().kind, FunctionDef(_)) {
                    r.fun_defs.assigned_defs += 1;
                }
                if let Some(name) = target.name() {
                    self.defined_name(&name);
                } else {
                    self.mark_replacement_target(target);
                }
                self.visit_all(&node.children, for_depth);
            }
            Call => {
                self.call(node);
                let callee = &node.children[0];
                if !matches!(callee.kind, Symbol | BacktickSymbol | String) {
                    self.visit(callee, for_depth);
                }
                self.visit_all(&node.children[1..], for_depth);
            }
            NamedArg => self.visit_all(&node.children[1..], for_depth),
            DollarAccess | AtAccess => {
                if node.kind == DollarAccess {
                    r.data_access.dollar += 1;
                } else {
                    r.data_access.at += 1;
                }
                self.visit_all(&node.children[..1], for_depth);
            }
            NamespaceAccess => r.packages.ns_access += 1,
            InternalNamespaceAccess => r.packages.internal_ns_access += 1,
            IndexBracket | IndexDoubleBracket => {
                if node.kind == IndexBracket {
                    r.data_access.single_bracket += 1;
                } else {
                    r.data_access.double_bracket += 1;
                }
                self.visit_all(&node.children, for_depth);
            }
            If => {
                let c = &mut r.conditionals;
                if node.children.len() == 3 {
                    c.if_with_else += 1;
                } else {
                    c.if_without_else += 1;
                }
                bump(&mut c.condition_root_kind, &node.children[0].kind.to_string());
                for body in &node.children[1..] {
                    bump(&mut c.body_arity, body_arity(body));
                }
                if let Some(f) = if_finding(node) {
                    c.constant_condition_count += 1;
                    r.lint.generalized_constant_conditions.push(f);
                }
                self.visit_all(&node.children, for_depth);
            }
            For => {
                let l = &mut r.loops;
                l.for_count += 1;
                bump(&mut l.for_vector_kind, classify_for_vector(&node.children[1]));
                if for_depth > 0 {
                    l.nested_for += 1;
                }
                if let Some(f) = for_finding(node) {
                    l.degenerate_for += 1;
                    r.lint.generalized_constant_conditions.push(f);
                }
                self.visit_all(&node.children[1..], for_depth + 1);
            }
            While => {
                let l = &mut r.loops;
                l.while_count += 1;
                if node.children[1].body_statements().len() == 1 {
                    l.while_single_expr_body += 1;
                }
                if let Some(f) = while_finding(node) {
                    l.degenerate_while += 1;
                    r.lint.generalized_constant_conditions.push(f);
                }
                self.visit_all(&node.children, for_depth);
            }
            Repeat => {
                r.loops.repeat_count += 1;
                self.visit_all(&node.children, for_depth);
            }
            Break => r.loops.break_count += 1,
            Next => r.loops.next_count += 1,
            FunctionDef(form) => {
                r.fun_defs.total_defs += 1;
                if *form == FunctionForm::Lambda {
                    r.fun_defs.lambda_defs += 1;
                }
                for param in &node.children[0].children {
                    if param.kind == DefaultArg {
                        self.visit_all(&param.children[1..], 0);
                    }
                }
                self.visit_all(&node.children[1..], 0);
            }
            Symbol if matches!(node.text.as_deref(), Some("T" | "F")) => {
                bump(&mut r.values.literals, "LogicalConst");
            }
            k if k.is_literal() => bump(&mut r.values.literals, k.tag()),
            _ => self.visit_all(&node.children, for_depth),
        }
    }

    /// Name-based definition checks for an assignment to `name`.
    fn defined_name(&mut self, name: &str) {
        let f = &mut self.report.fun_defs;
        if HOOKS.contains(&name) {
            bump(&mut f.hook_defs, name);
        }
        if name.len() >= 2 && name.starts_with('%') && name.ends_with('%') {
            f.infix_defs.insert(name.to_string());
            f.infix_count += 1;
        }
        if name != "<-" && name != "<<-" && (name.ends_with("<-") || name.contains("<-.")) {
            f.replacement_defs += 1;
        }
        if BASE_OPERATORS.contains(&name) {
            f.operator_redefs.insert(name.to_string());
            f.operator_redef_count += 1;
        }
    }

    fn mark_replacement_target(&mut self, target: &SyntaxNode) {
        let mut node = target;
        loop {
            match node.kind {
                SyntaxKind::Call => {
                    self.replacement_calls.insert(node.span);
                    match node.children.get(1) {
                        Some(arg) if arg.kind != SyntaxKind::NamedArg => node = arg,
                        _ => return,
                    }
                }
                SyntaxKind::IndexBracket
                | SyntaxKind::IndexDoubleBracket
                | SyntaxKind::DollarAccess
                | SyntaxKind::AtAccess
                | SyntaxKind::Paren => node = &node.children[0],
                _ => return,
            }
        }
    }

    fn call(&mut self, node: &SyntaxNode) {
        let callee = &node.children[0];
        let name = callee_name(callee);
        let r = &mut *self.report;
        let c = &mut r.fun_calls;
        c.total_calls += 1;
        if matches!(callee.unparen().kind, SyntaxKind::FunctionDef(_) | SyntaxKind::Call) {
            c.anonymous_calls += 1;
        }
        let Some(name) = name else {
            bump(&mut c.by_name, "<dynamic>");
            return;
        };
        let replacement = self.replacement_calls.contains(&node.span);
        if replacement {
            bump(&mut c.by_name, &format!("{name}<-"));
        } else {
            bump(&mut c.by_name, &name);
        }
        let bare = name.strip_suffix("<-").unwrap_or(&name);
        if REFLECTIVE.contains(&bare) {
            bump(&mut c.reflective, bare);
        }
        if FFI.contains(&bare) {
            bump(&mut c.ffi, bare);
        }
        if bare == "test_that" || bare == "context" || bare.starts_with("expect_") {
            c.testing += 1;
        }
        if replacement {
            return;
        }
        if GET_FAMILY.contains(&bare) {
            bump(&mut r.data_access.get_family, bare);
        }
        if ASSIGN_FUNCTIONS.contains(&bare) {
            bump(&mut r.assignments.assign_functions, bare);
        }
        if LOCK_FUNCTIONS.contains(&bare) {
            bump(&mut r.assignments.lock_functions, bare);
        }
        match bare {
            "ifelse" => r.conditionals.ifelse_calls += 1,
            "switch" => r.conditionals.switch_calls += 1,
            _ => {}
        }
        if APPLY_FAMILY.contains(&bare) {
            bump(&mut r.loops.apply_family, bare);
        }
        if LOAD_FUNCTIONS.contains(&bare) {
            bump(&mut r.packages.load_calls, bare);
            self.package_load(node, bare);
        }
        if let Some(names) = vectorized_load(node) {
            let p = &mut self.report.packages;
            p.vectorized_load_pattern += 1;
            p.loaded_names.extend(names);
        }
        if self.opts.forbidden_calls.iter().any(|f| f == bare) {
            let span = match callee.kind {
                SyntaxKind::NamespaceAccess | SyntaxKind::InternalNamespaceAccess => callee.children[1].span,
                _ => callee.span,
            };
            self.report.lint.strict_mode_flags.push(CallFlag { name: bare.to_string(), span });
        }
    }

    fn package_load(&mut self, node: &SyntaxNode, fun: &str) {
        let p = &mut self.report.packages;
        let Some(arg) = argument(node, 0, "package") else {
            return;
        };
        let by_symbol = (fun == "library" || fun == "require") && !character_only(node);
        let arg = arg.unparen();
        match arg.kind {
            SyntaxKind::String => p.loaded_names.extend(arg.name()),
            SyntaxKind::Symbol | SyntaxKind::BacktickSymbol if by_symbol => p.loaded_names.extend(arg.name()),
            _ => p.unknown_loads += 1,
        }
    }
}

/// Value of the `pos`-th positional argument, or of the argument named
/// `name`.
fn argument<'n>(call: &'n SyntaxNode, pos: usize, name: &str) -> Option<&'n SyntaxNode> {
    let args = &call.children[1..];
    let named = args.iter().find(|a| {
        a.kind == SyntaxKind::NamedArg && a.children[0].name().as_deref() == Some(name)
    });
    if let Some(a) = named {
        return a.children.get(1);
    }
    args.iter()
        .filter(|a| !matches!(a.kind, SyntaxKind::NamedArg | SyntaxKind::EmptyArg))
        .nth(pos)
}

fn character_only(call: &SyntaxNode) -> bool {
    call.children[1..].iter().any(|a| {
        a.kind == SyntaxKind::NamedArg
            && a.children[0].name().as_deref() == Some("character.only")
            && a.children.get(1).and_then(constant_truth) == Some(true)
    })
}

/// For an apply-family call loading packages (`lapply(pkgs, library)`),
/// the package names it statically names.
pub(super) fn vectorized_load(node: &SyntaxNode) -> Option<Vec<String>> {
    if node.kind != SyntaxKind::Call {
        return None;
    }
    let name = callee_name(&node.children[0])?;
    if !APPLY_FAMILY.contains(&name.as_str()) {
        return None;
    }
    let fun = argument(node, 1, "FUN")?;
    if !(fun.kind == SyntaxKind::Symbol && matches!(fun.text.as_deref(), Some("library" | "require"))) {
        return None;
    }
    let mut names = Vec::new();
    if let Some(first) = argument(node, 0, "X").map(SyntaxNode::unparen) {
        match first.kind {
            SyntaxKind::String => names.extend(first.name()),
            SyntaxKind::Call if callee_name(&first.children[0]).as_deref() == Some("c") => {
                let args = &first.children[1..];
                if args.iter().all(|a| a.kind == SyntaxKind::String) {
                    names.extend(args.iter().filter_map(SyntaxNode::name));
                }
            }
            _ => {}
        }
    }
    Some(names)
}

fn body_arity(body: &SyntaxNode) -> &'static str {
    match body.body_statements().len() {
        0 => "Empty",
        1 => "Single",
        _ => "Multiple",
    }
}

fn single_statement(body: &SyntaxNode) -> Option<&SyntaxNode> {
    match body.body_statements().as_slice() {
        [only] => Some(only),
        _ => None,
    }
}

fn is_call_to(node: &SyntaxNode, names: &[&str]) -> bool {
    node.kind == SyntaxKind::Call
        && callee_name(&node.children[0]).is_some_and(|n| names.contains(&n.as_str()))
}

fn if_finding(node: &SyntaxNode) -> Option<ControlFinding> {
    constant_truth(&node.children[0])?;
    Some(ControlFinding { kind: ConstantKind::ConstantIf, span: node.span })
}

fn for_finding(node: &SyntaxNode) -> Option<ControlFinding> {
    let vector = node.children[1].unparen();
    let body = &node.children[2];
    let degenerate = is_constant_leaf(vector)
        || body.body_statements().is_empty()
        || single_statement(body)
            .is_some_and(|s| s.kind == SyntaxKind::Break || is_call_to(s, &["return", "stop"]));
    degenerate.then_some(ControlFinding { kind: ConstantKind::DegenerateFor, span: node.span })
}

fn while_finding(node: &SyntaxNode) -> Option<ControlFinding> {
    let degenerate = constant_truth(&node.children[0]) == Some(false)
        || single_statement(&node.children[1]).is_some_and(|s| is_call_to(s, &["return", "stop"]));
    degenerate.then_some(ControlFinding { kind: ConstantKind::DegenerateWhile, span: node.span })
}

/// Constant `if` conditions, loops over a constant scalar or with an empty
/// or immediately exiting body, and `while` loops that cannot run or only
/// exit. Findings come in source order.
pub fn detect_degenerate_control(ast: &SyntaxNode) -> Vec<ControlFinding> {
    let mut out = Vec::new();
    ast.walk(&mut |n| {
        let f = match n.kind {
            SyntaxKind::If => if_finding(n),
            SyntaxKind::For => for_finding(n),
            SyntaxKind::While => while_finding(n),
            _ => None,
        };
        out.extend(f);
    });
    out
}
