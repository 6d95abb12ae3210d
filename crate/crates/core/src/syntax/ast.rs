use std::fmt::{self, Write as _};

use serde::Serialize;

use super::token::Span;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum AssignOp {
    /// `<-`
    Left,
    /// `<<-`
    SuperLeft,
    /// `=`
    Equals,
    /// `->`
    Right,
    /// `->>`
    SuperRight,
    /// `:=`
    Colon,
}

impl AssignOp {
    pub const ALL: [AssignOp; 6] = [
        AssignOp::Left,
        AssignOp::SuperLeft,
        AssignOp::Equals,
        AssignOp::Right,
        AssignOp::SuperRight,
        AssignOp::Colon,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AssignOp::Left => "<-",
            AssignOp::SuperLeft => "<<-",
            AssignOp::Equals => "=",
            AssignOp::Right => "->",
            AssignOp::SuperRight => "->>",
            AssignOp::Colon => ":=",
        }
    }

    pub fn from_str(s: &str) -> Option<AssignOp> {
        AssignOp::ALL.into_iter().find(|op| op.as_str() == s)
    }

    /// Right-pointing operators put the value on the left.
    pub fn is_rightward(self) -> bool {
        matches!(self, AssignOp::Right | AssignOp::SuperRight)
    }

    pub fn is_super(self) -> bool {
        matches!(self, AssignOp::SuperLeft | AssignOp::SuperRight)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum BinaryOperator {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
    Lt,
    Gt,
    Le,
    Ge,
    Eq,
    Ne,
    And,
    AndAnd,
    Or,
    OrOr,
    Pipe,
    Help,
}

impl BinaryOperator {
    pub fn as_str(self) -> &'static str {
        use BinaryOperator::*;
        match self {
            Add => "+",
            Sub => "-",
            Mul => "*",
            Div => "/",
            Pow => "^",
            Lt => "<",
            Gt => ">",
            Le => "<=",
            Ge => ">=",
            Eq => "==",
            Ne => "!=",
            And => "&",
            AndAnd => "&&",
            Or => "|",
            OrOr => "||",
            Pipe => "|>",
            Help => "?",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum UnaryOperator {
    Neg,
    Plus,
    Not,
    Help,
}

impl UnaryOperator {
    pub fn as_str(self) -> &'static str {
        match self {
            UnaryOperator::Neg => "-",
            UnaryOperator::Plus => "+",
            UnaryOperator::Not => "!",
            UnaryOperator::Help => "?",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum FunctionForm {
    /// `function(...)`
    Keyword,
    /// `\(...)`
    Lambda,
}

/// Closed set of node kinds.
///
/// Children layout per kind:
/// - `Sequence`, `Block`: statements (and statement-level `Comment`s)
/// - `Call`, `IndexBracket`, `IndexDoubleBracket`: callee/object, then arguments
///   (`NamedArg`, `EmptyArg` or a plain expression)
/// - `NamedArg`: name leaf, then value (absent for `f(x = )`)
/// - `DollarAccess`, `AtAccess`: object, member leaf
/// - `NamespaceAccess`, `InternalNamespaceAccess`: package leaf, name leaf
/// - `Assign`: the two operands in source order (target first for `<-`,
///   value first for `->`)
/// - `BinaryOp`, `SpecialInfixOp`, `ColonOp`: lhs, rhs
/// - `UnaryOp`: operand; `Tilde`: one (formula rhs) or two operands
/// - `FunctionDef`: `Params`, body
/// - `Params`: `Symbol`, `DefaultArg` (name, default) or `Dots`
/// - `If`: condition, then-body, optional else-body
/// - `For`: variable, iterable, body; `While`: condition, body; `Repeat`: body
/// - `Paren`: inner expression
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub enum SyntaxKind {
    Sequence,
    Number,
    String,
    RawString,
    LogicalConst,
    NullConst,
    NAConst,
    InfConst,
    Symbol,
    BacktickSymbol,
    Comment,
    Call,
    NamedArg,
    EmptyArg,
    IndexBracket,
    IndexDoubleBracket,
    DollarAccess,
    AtAccess,
    NamespaceAccess,
    InternalNamespaceAccess,
    Assign(AssignOp),
    BinaryOp(BinaryOperator),
    UnaryOp(UnaryOperator),
    SpecialInfixOp(Box<str>),
    ColonOp,
    Tilde,
    FunctionDef(FunctionForm),
    Params,
    DefaultArg,
    Dots,
    If,
    For,
    While,
    Repeat,
    Break,
    Next,
    Block,
    Paren,
}

impl SyntaxKind {
    /// Kind name without operator payload, used as a census key.
    pub fn tag(&self) -> &'static str {
        use SyntaxKind::*;
        match self {
            Sequence => "Sequence",
            Number => "Number",
            String => "String",
            RawString => "RawString",
            LogicalConst => "LogicalConst",
            NullConst => "NullConst",
            NAConst => "NAConst",
            InfConst => "InfConst",
            Symbol => "Symbol",
            BacktickSymbol => "BacktickSymbol",
            Comment => "Comment",
            Call => "Call",
            NamedArg => "NamedArg",
            EmptyArg => "EmptyArg",
            IndexBracket => "IndexBracket",
            IndexDoubleBracket => "IndexDoubleBracket",
            DollarAccess => "DollarAccess",
            AtAccess => "AtAccess",
            NamespaceAccess => "NamespaceAccess",
            InternalNamespaceAccess => "InternalNamespaceAccess",
            Assign(_) => "Assign",
            BinaryOp(_) => "BinaryOp",
            UnaryOp(_) => "UnaryOp",
            SpecialInfixOp(_) => "SpecialInfixOp",
            ColonOp => "ColonOp",
            Tilde => "Tilde",
            FunctionDef(_) => "FunctionDef",
            Params => "Params",
            DefaultArg => "DefaultArg",
            Dots => "Dots",
            If => "If",
            For => "For",
            While => "While",
            Repeat => "Repeat",
            Break => "Break",
            Next => "Next",
            Block => "Block",
            Paren => "Paren",
        }
    }

    pub fn is_leaf_kind(&self) -> bool {
        use SyntaxKind::*;
        matches!(
            self,
            Number
                | String
                | RawString
                | LogicalConst
                | NullConst
                | NAConst
                | InfConst
                | Symbol
                | BacktickSymbol
                | Comment
                | EmptyArg
                | Dots
                | Break
                | Next
        )
    }

    /// Literal constants (the `Constant` census bucket).
    pub fn is_literal(&self) -> bool {
        use SyntaxKind::*;
        matches!(
            self,
            Number | String | RawString | LogicalConst | NullConst | NAConst | InfConst
        )
    }
}

impl fmt::Display for SyntaxKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use SyntaxKind::*;
        match self {
            Assign(op) => write!(f, "Assign({})", op.as_str()),
            BinaryOp(op) => write!(f, "BinaryOp({})", op.as_str()),
            UnaryOp(op) => write!(f, "UnaryOp({})", op.as_str()),
            SpecialInfixOp(op) => write!(f, "SpecialInfixOp({op})"),
            FunctionDef(FunctionForm::Keyword) => f.write_str("FunctionDef(function)"),
            FunctionDef(FunctionForm::Lambda) => f.write_str("FunctionDef(lambda)"),
            other => f.write_str(other.tag()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntaxNode {
    pub kind: SyntaxKind,
    pub span: Span,
    pub children: Vec<SyntaxNode>,
    /// Source text of leaves; `None` for interior nodes.
    pub text: Option<String>,
}

impl SyntaxNode {
    pub fn leaf(kind: SyntaxKind, span: Span, text: impl Into<String>) -> Self {
        Self {
            kind,
            span,
            children: Vec::new(),
            text: Some(text.into()),
        }
    }

    pub fn interior(kind: SyntaxKind, span: Span, children: Vec<SyntaxNode>) -> Self {
        Self {
            kind,
            span,
            children,
            text: None,
        }
    }

    pub fn is_leaf(&self) -> bool {
        self.text.is_some()
    }

    pub fn child(&self, i: usize) -> Option<&SyntaxNode> {
        self.children.get(i)
    }

    /// Name carried by a `Symbol`, `BacktickSymbol` or `String` leaf, with
    /// quotes removed and escapes resolved.
    pub fn name(&self) -> Option<String> {
        let text = self.text.as_deref()?;
        match self.kind {
            SyntaxKind::Symbol => Some(text.to_string()),
            SyntaxKind::BacktickSymbol | SyntaxKind::String => Some(unquote(text)),
            _ => None,
        }
    }

    /// Strip any number of enclosing parentheses.
    pub fn unparen(&self) -> &SyntaxNode {
        let mut node = self;
        while node.kind == SyntaxKind::Paren {
            match node.children.first() {
                Some(inner) => node = inner,
                None => break,
            }
        }
        node
    }

    /// Statements of a body: the children of a `Block`, otherwise the node
    /// itself. Comments are skipped.
    pub fn body_statements(&self) -> Vec<&SyntaxNode> {
        match self.kind {
            SyntaxKind::Block => self
                .children
                .iter()
                .filter(|c| c.kind != SyntaxKind::Comment)
                .collect(),
            _ => vec![self],
        }
    }

    /// Pre-order traversal.
    pub fn walk(&self, visit: &mut dyn FnMut(&SyntaxNode)) {
        visit(self);
        for child in &self.children {
            child.walk(visit);
        }
    }

    pub fn count_nodes(&self) -> usize {
        let mut n = 0;
        self.walk(&mut |_| n += 1);
        n
    }

    pub fn depth(&self) -> usize {
        1 + self.children.iter().map(|c| c.depth()).max().unwrap_or(0)
    }

    /// Line-oriented dump: one node per line, two spaces of indentation per
    /// level, `Kind start..end` followed by the quoted text of leaves.
    pub fn pretty(&self) -> String {
        let mut out = String::new();
        self.pretty_into(&mut out, 0);
        out
    }

    fn pretty_into(&self, out: &mut String, depth: usize) {
        for _ in 0..depth {
            out.push_str("  ");
        }
        let _ = write!(out, "{} {}..{}", self.kind, self.span.start, self.span.end);
        if let Some(text) = &self.text {
            let _ = write!(out, " {text:?}");
        }
        out.push('\n');
        for child in &self.children {
            child.pretty_into(out, depth + 1);
        }
    }
}

/// Resolve the quoting of a string or backtick literal.
pub fn unquote(text: &str) -> String {
    let mut chars = text.chars();
    let Some(q) = chars.next() else {
        return String::new();
    };
    if !matches!(q, '"' | '\'' | '`') {
        return text.to_string();
    }
    let inner = &text[1..text.len().saturating_sub(1).max(1)];
    let mut out = String::with_capacity(inner.len());
    let mut it = inner.chars();
    while let Some(c) = it.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match it.next() {
            Some('n') => out.push('\n'),
            Some('t') => out.push('\t'),
            Some('r') => out.push('\r'),
            Some('0') => out.push('\0'),
            Some(other) => out.push(other),
            None => out.push('\\'),
        }
    }
    out
}
