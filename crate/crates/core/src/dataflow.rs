//! Per-file static dataflow graph built by folding the AST with an
//! environment stack.
//!
//! The fold is a single forward pass. Branches are joined by union (a use
//! after an `if` reads from the definitions of both arms), loops are walked
//! once, and function bodies are visited where they are defined, in a fresh
//! frame holding their parameters.

use std::collections::BTreeMap;
use std::collections::HashMap;

use serde::{Serialize, Serializer};

use crate::syntax::{AssignOp, Span, SyntaxKind, SyntaxNode};

/// Default bound on AST nodes visited plus graph nodes and edges created.
pub const DEFAULT_NODE_CAP: usize = 2_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Role {
    Definition,
    Use,
    FunctionCallSite,
    ParameterDef,
    LoopVarDef,
}

/// What created a definition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Definer {
    Operator(AssignOp),
    Parameter,
    ForLoop,
}

impl Definer {
    pub fn as_str(self) -> &'static str {
        match self {
            Definer::Operator(op) => op.as_str(),
            Definer::Parameter => "parameter",
            Definer::ForLoop => "for",
        }
    }
}

impl Serialize for Definer {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DefUseNode {
    pub id: usize,
    pub name: String,
    pub role: Role,
    pub span: Span,
    /// Number of function frames enclosing the binding (0 = file level).
    pub scope_depth: usize,
    /// Identity of the frame; sibling functions get distinct frames.
    pub frame: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub definer: Option<Definer>,
    /// The assigned value is a function definition.
    pub value_is_function: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum EdgeKind {
    ReadsFrom,
    Redefines,
    CallsTarget,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Edge {
    #[serde(rename = "type")]
    pub kind: EdgeKind,
    pub from: usize,
    pub to: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct DataflowGraph {
    pub nodes: Vec<DefUseNode>,
    pub edges: Vec<Edge>,
    pub unresolved_calls: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DataflowError {
    #[error("resource limit: more than {limit} nodes")]
    ResourceLimit { limit: usize },
}

#[derive(Debug, Clone, Copy)]
pub struct DataflowOptions {
    pub node_cap: usize,
}

impl Default for DataflowOptions {
    fn default() -> Self {
        Self {
            node_cap: DEFAULT_NODE_CAP,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CallTarget {
    Definition(usize),
    Unresolved,
}

impl DataflowGraph {
    pub fn node(&self, id: usize) -> &DefUseNode {
        &self.nodes[id]
    }

    pub fn edges_of(&self, kind: EdgeKind) -> impl Iterator<Item = &Edge> {
        self.edges.iter().filter(move |e| e.kind == kind)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("graph serializes")
    }
}

pub fn build_dataflow(ast: &SyntaxNode) -> Result<DataflowGraph, DataflowError> {
    build_dataflow_with(ast, DataflowOptions::default())
}

pub fn build_dataflow_with(ast: &SyntaxNode, opts: DataflowOptions) -> Result<DataflowGraph, DataflowError> {
    let mut fold = Fold {
        graph: DataflowGraph::default(),
        frames: vec![Frame::new(0, 0)],
        next_frame: 1,
        budget: opts.node_cap,
        cap: opts.node_cap,
    };
    fold.visit(ast)?;
    Ok(fold.graph)
}

/// Names defined at least twice in the same frame, linked by `Redefines`
/// edges, with their definition spans in source order. Entries are ordered by
/// their first span.
pub fn redefinitions(graph: &DataflowGraph) -> Vec<(String, Vec<Span>)> {
    let mut groups: BTreeMap<(usize, &str), Vec<usize>> = BTreeMap::new();
    for e in graph.edges_of(EdgeKind::Redefines) {
        for id in [e.from, e.to] {
            let n = &graph.nodes[id];
            groups.entry((n.frame, n.name.as_str())).or_default().push(id);
        }
    }
    let mut out: Vec<(String, Vec<Span>)> = groups
        .into_iter()
        .map(|((_, name), ids)| {
            let mut spans: Vec<Span> = ids.iter().map(|&i| graph.nodes[i].span).collect();
            spans.sort_by_key(|s| (s.start, s.end));
            spans.dedup();
            (name.to_string(), spans)
        })
        .collect();
    out.sort_by(|a, b| (a.1[0].start, &a.0).cmp(&(b.1[0].start, &b.0)));
    out
}

/// The latest function definition a call site may reach, if any.
pub fn resolve_call_target(graph: &DataflowGraph, call_site: usize) -> CallTarget {
    graph
        .edges_of(EdgeKind::CallsTarget)
        .filter(|e| e.from == call_site)
        .map(|e| e.to)
        .max_by_key(|&t| (graph.nodes[t].span.start, t))
        .map_or(CallTarget::Unresolved, CallTarget::Definition)
}

#[derive(Debug, Clone)]
struct Frame {
    id: usize,
    depth: usize,
    /// Reaching definitions per name, sorted by id.
    bindings: HashMap<String, Vec<usize>>,
}

impl Frame {
    fn new(id: usize, depth: usize) -> Self {
        Self {
            id,
            depth,
            bindings: HashMap::new(),
        }
    }
}

struct Fold {
    graph: DataflowGraph,
    frames: Vec<Frame>,
    next_frame: usize,
    budget: usize,
    cap: usize,
}

type FResult = Result<(), DataflowError>;

impl Fold {
    fn spend(&mut self) -> FResult {
        match self.budget.checked_sub(1) {
            Some(b) => {
                self.budget = b;
                Ok(())
            }
            None => Err(DataflowError::ResourceLimit { limit: self.cap }),
        }
    }

    fn add_node(&mut self, name: String, role: Role, span: Span, frame_idx: usize, definer: Option<Definer>, value_is_function: bool) -> Result<usize, DataflowError> {
        self.spend()?;
        let id = self.graph.nodes.len();
        let frame = &self.frames[frame_idx];
        self.graph.nodes.push(DefUseNode {
            id,
            name,
            role,
            span,
            scope_depth: frame.depth,
            frame: frame.id,
            definer,
            value_is_function,
        });
        Ok(id)
    }

    fn add_edge(&mut self, kind: EdgeKind, from: usize, to: usize) -> FResult {
        self.spend()?;
        self.graph.edges.push(Edge { kind, from, to });
        Ok(())
    }

    fn current(&self) -> usize {
        self.frames.len() - 1
    }

    fn visit(&mut self, node: &SyntaxNode) -> FResult {
        stacker::maybe_grow(crate::syntax::parser::RED_ZONE, crate::syntax::parser::STACK_GROWTH, || {
            self.visit_inner(node)
        })
    }

    fn visit_all(&mut self, nodes: &[SyntaxNode]) -> FResult {
        nodes.iter().try_for_each(|n| self.visit(n))
    }

    fn visit_inner(&mut self, node: &SyntaxNode) -> FResult {
        self.spend()?;
        use SyntaxKind as K;
        match &node.kind {
            K::Symbol | K::BacktickSymbol => {
                let name = node.name().unwrap_or_default();
                self.use_name(name, node.span)
            }
            K::Assign(op) => {
                let (target, value) = if op.is_rightward() {
                    (&node.children[1], &node.children[0])
                } else {
                    (&node.children[0], &node.children[1])
                };
                self.visit(value)?;
                self.assign(*op, target, value)
            }
            K::Call => self.call(node),
            K::DollarAccess | K::AtAccess => self.visit(&node.children[0]),
            K::NamespaceAccess | K::InternalNamespaceAccess => Ok(()),
            K::NamedArg => match node.children.get(1) {
                Some(value) => self.visit(value),
                None => Ok(()),
            },
            K::FunctionDef(_) => self.function(node),
            K::If => self.if_expr(node),
            K::For => self.for_loop(node),
            K::While => {
                self.visit(&node.children[0])?;
                let before = self.frames.clone();
                self.visit(&node.children[1])?;
                self.join(&before);
                Ok(())
            }
            _ => self.visit_all(&node.children),
        }
    }

    fn use_name(&mut self, name: String, span: Span) -> FResult {
        let cur = self.current();
        let reaching = self
            .frames
            .iter()
            .rev()
            .find_map(|f| f.bindings.get(&name).filter(|ids| !ids.is_empty()).cloned());
        let id = self.add_node(name, Role::Use, span, cur, None, false)?;
        for def in reaching.unwrap_or_default() {
            self.add_edge(EdgeKind::ReadsFrom, id, def)?;
        }
        Ok(())
    }

    fn assign(&mut self, op: AssignOp, target: &SyntaxNode, value: &SyntaxNode) -> FResult {
        match target.kind {
            SyntaxKind::Symbol | SyntaxKind::BacktickSymbol | SyntaxKind::String => {
                let name = target.name().unwrap_or_default();
                let is_fn = matches!(value.unparen().kind, SyntaxKind::FunctionDef(_));
                self.define(name, op, target.span, is_fn)
            }
            _ => self.complex_target(target),
        }
    }

    /// Targets like `x[i]`, `x$a` or `names(x)`: the base variable is read
    /// and a replacement function `name<-` is called; no new binding.
    fn complex_target(&mut self, target: &SyntaxNode) -> FResult {
        self.spend()?;
        match target.kind {
            SyntaxKind::Symbol | SyntaxKind::BacktickSymbol | SyntaxKind::String => {
                self.use_name(target.name().unwrap_or_default(), target.span)
            }
            SyntaxKind::Paren => self.complex_target(&target.children[0]),
            SyntaxKind::IndexBracket | SyntaxKind::IndexDoubleBracket => {
                self.complex_target(&target.children[0])?;
                self.visit_all(&target.children[1..])
            }
            SyntaxKind::DollarAccess | SyntaxKind::AtAccess => self.complex_target(&target.children[0]),
            SyntaxKind::Call if static_callee(&target.children[0]).is_some() => {
                let (name, _) = static_callee(&target.children[0]).unwrap();
                self.call_site(format!("{name}<-"), target.children[0].span, true)?;
                let mut args = target.children[1..].iter();
                if let Some(first) = args.next() {
                    match (&first.kind, first.children.get(1)) {
                        (SyntaxKind::NamedArg, Some(v)) => self.complex_target(v)?,
                        (SyntaxKind::NamedArg | SyntaxKind::EmptyArg, None) => {}
                        _ => self.complex_target(first)?,
                    }
                }
                args.try_for_each(|a| self.visit(a))
            }
            _ => self.visit(target),
        }
    }

    fn define(&mut self, name: String, op: AssignOp, span: Span, is_fn: bool) -> FResult {
        let cur = self.current();
        let frame_idx = if op.is_super() {
            (0..cur)
                .rev()
                .find(|&i| self.frames[i].bindings.get(&name).is_some_and(|v| !v.is_empty()))
                .unwrap_or(0)
        } else {
            cur
        };
        let prior = self.frames[frame_idx].bindings.get(&name).cloned().unwrap_or_default();
        let id = self.add_node(name.clone(), Role::Definition, span, frame_idx, Some(Definer::Operator(op)), is_fn)?;
        for p in &prior {
            if matches!(self.graph.nodes[*p].role, Role::Definition | Role::ParameterDef) {
                self.add_edge(EdgeKind::Redefines, *p, id)?;
            }
        }
        let slot = self.frames[frame_idx].bindings.entry(name).or_default();
        if frame_idx == cur {
            // Ordinary assignment kills the previous bindings.
            *slot = vec![id];
        } else {
            // A write into an enclosing frame happens only if the function
            // runs, so earlier bindings stay reachable.
            slot.push(id);
        }
        Ok(())
    }

    fn bind(&mut self, name: String, role: Role, span: Span, definer: Definer) -> FResult {
        let cur = self.current();
        let id = self.add_node(name.clone(), role, span, cur, Some(definer), false)?;
        self.frames[cur].bindings.insert(name, vec![id]);
        Ok(())
    }

    fn call(&mut self, node: &SyntaxNode) -> FResult {
        let callee = &node.children[0];
        match static_callee(callee) {
            Some((name, local)) => self.call_site(name, callee.span, local)?,
            None => self.visit(callee)?,
        }
        self.visit_all(&node.children[1..])
    }

    fn call_site(&mut self, name: String, span: Span, local: bool) -> FResult {
        let cur = self.current();
        let targets: Vec<usize> = if local {
            self.frames
                .iter()
                .rev()
                .find_map(|f| {
                    let fns: Vec<usize> = f
                        .bindings
                        .get(&name)?
                        .iter()
                        .copied()
                        .filter(|&d| self.graph.nodes[d].value_is_function)
                        .collect();
                    (!fns.is_empty()).then_some(fns)
                })
                .unwrap_or_default()
        } else {
            Vec::new()
        };
        let id = self.add_node(name, Role::FunctionCallSite, span, cur, None, false)?;
        if targets.is_empty() {
            self.graph.unresolved_calls.push(id);
        }
        for t in targets {
            self.add_edge(EdgeKind::CallsTarget, id, t)?;
        }
        Ok(())
    }

    fn function(&mut self, node: &SyntaxNode) -> FResult {
        let depth = self.frames.len();
        self.frames.push(Frame::new(self.next_frame, depth));
        self.next_frame += 1;
        let result = (|| {
            for param in &node.children[0].children {
                self.spend()?;
                match param.kind {
                    SyntaxKind::DefaultArg => {
                        let name = &param.children[0];
                        self.bind(name.name().unwrap_or_default(), Role::ParameterDef, name.span, Definer::Parameter)?;
                        if let Some(default) = param.children.get(1) {
                            self.visit(default)?;
                        }
                    }
                    SyntaxKind::Dots => self.bind("...".into(), Role::ParameterDef, param.span, Definer::Parameter)?,
                    _ => self.bind(param.name().unwrap_or_default(), Role::ParameterDef, param.span, Definer::Parameter)?,
                }
            }
            self.visit(&node.children[1])
        })();
        self.frames.pop();
        result
    }

    fn if_expr(&mut self, node: &SyntaxNode) -> FResult {
        self.visit(&node.children[0])?;
        let before = self.frames.clone();
        self.visit(&node.children[1])?;
        match node.children.get(2) {
            Some(else_body) => {
                let then_state = std::mem::replace(&mut self.frames, before);
                self.visit(else_body)?;
                self.join(&then_state);
            }
            None => self.join(&before),
        }
        Ok(())
    }

    fn for_loop(&mut self, node: &SyntaxNode) -> FResult {
        self.visit(&node.children[1])?;
        let before = self.frames.clone();
        let var = &node.children[0];
        self.bind(var.name().unwrap_or_default(), Role::LoopVarDef, var.span, Definer::ForLoop)?;
        self.visit(&node.children[2])?;
        self.join(&before);
        Ok(())
    }

    /// Union `other` into the current state, frame by frame.
    fn join(&mut self, other: &[Frame]) {
        for (mine, theirs) in self.frames.iter_mut().zip(other) {
            for (name, ids) in &theirs.bindings {
                let slot = mine.bindings.entry(name.clone()).or_default();
                slot.extend_from_slice(ids);
                slot.sort_unstable();
                slot.dedup();
            }
        }
    }
}

/// Name of a statically known callee and whether it may refer to a local
/// binding (`pkg::f` never does).
pub fn static_callee(callee: &SyntaxNode) -> Option<(String, bool)> {
    match callee.kind {
        SyntaxKind::Symbol | SyntaxKind::BacktickSymbol | SyntaxKind::String => Some((callee.name()?, true)),
        SyntaxKind::NamespaceAccess | SyntaxKind::InternalNamespaceAccess => {
            let pkg = callee.children.first()?.name()?;
            let name = callee.children.get(1)?.name()?;
            let sep = if callee.kind == SyntaxKind::NamespaceAccess { "::" } else { ":::" };
            Some((format!("{pkg}{sep}{name}"), false))
        }
        _ => None,
    }
}
