//! Recursive-descent parser with Pratt-style binary operator precedence.
//!
//! Newline handling follows R: inside `(...)` and `[...]` newlines are
//! insignificant, while at top level and inside `{...}` a newline ends an
//! expression once it is complete. An `else` may follow a newline only
//! inside braces or brackets.

use std::time::Instant;

use super::ast::{AssignOp, BinaryOperator, FunctionForm, SyntaxKind, SyntaxNode, UnaryOperator};
use super::token::{lex, Span, Token, TokenKind};

/// Default bound on expression nesting. Deeper input is rejected instead of
/// exhausting the stack.
pub const DEFAULT_MAX_DEPTH: usize = 512;

pub(crate) const RED_ZONE: usize = 128 * 1024;
pub(crate) const STACK_GROWTH: usize = 2 * 1024 * 1024;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub span: Span,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseFailure {
    Syntax(ParseError),
    /// Nesting beyond the configured depth.
    TooDeep { span: Span, limit: usize },
    /// The deadline passed before parsing finished.
    Timeout,
}

#[derive(Debug, Clone, Copy)]
pub struct ParseOptions {
    pub max_depth: usize,
    pub deadline: Option<Instant>,
}

impl Default for ParseOptions {
    fn default() -> Self {
        Self {
            max_depth: DEFAULT_MAX_DEPTH,
            deadline: None,
        }
    }
}

type PResult<T> = Result<T, ParseFailure>;
type PostfixFn<'s> = fn(&mut Parser<'s>, SyntaxNode, usize) -> PResult<SyntaxNode>;

#[derive(Debug, Clone, Copy)]
struct Ctx {
    skip_nl: bool,
    allow_eq: bool,
    in_group: bool,
}

impl Ctx {
    const TOP: Ctx = Ctx {
        skip_nl: false,
        allow_eq: true,
        in_group: false,
    };
    const BLOCK: Ctx = Ctx {
        skip_nl: false,
        allow_eq: true,
        in_group: true,
    };
    const PAREN: Ctx = Ctx {
        skip_nl: true,
        allow_eq: true,
        in_group: true,
    };
    const ARG: Ctx = Ctx {
        skip_nl: true,
        allow_eq: false,
        in_group: true,
    };

    fn body(self) -> Ctx {
        Ctx {
            allow_eq: true,
            ..self
        }
    }
}

// Binding powers, loosest first.
const BP_HELP: u8 = 10;
const BP_EQ: u8 = 20;
const BP_LEFT_ASSIGN: u8 = 30;
const BP_RIGHT_ASSIGN: u8 = 40;
const BP_TILDE: u8 = 50;
const BP_OR: u8 = 60;
const BP_AND: u8 = 70;
const BP_NOT: u8 = 80;
const BP_COMPARE: u8 = 90;
const BP_ADD: u8 = 100;
const BP_MUL: u8 = 110;
const BP_SPECIAL: u8 = 120;
const BP_COLON: u8 = 130;
const BP_UNARY: u8 = 140;
const BP_POW: u8 = 150;
const BP_POSTFIX: u8 = 160;

#[derive(Clone, Copy)]
enum Infix {
    Assign(AssignOp),
    Binary(BinaryOperator),
    Special,
    Colon,
    Tilde,
}

/// (left bp, right bp, builder). Right-associative operators use equal powers.
fn infix(kind: TokenKind) -> Option<(u8, u8, Infix)> {
    use BinaryOperator as B;
    use TokenKind::*;
    let left = |bp: u8, op| Some((bp, bp + 1, op));
    let right = |bp: u8, op| Some((bp, bp, op));
    match kind {
        Question => left(BP_HELP, Infix::Binary(B::Help)),
        EqAssign => right(BP_EQ, Infix::Assign(AssignOp::Equals)),
        LeftAssign => right(BP_LEFT_ASSIGN, Infix::Assign(AssignOp::Left)),
        SuperLeftAssign => right(BP_LEFT_ASSIGN, Infix::Assign(AssignOp::SuperLeft)),
        ColonAssign => right(BP_LEFT_ASSIGN, Infix::Assign(AssignOp::Colon)),
        RightAssign => left(BP_RIGHT_ASSIGN, Infix::Assign(AssignOp::Right)),
        SuperRightAssign => left(BP_RIGHT_ASSIGN, Infix::Assign(AssignOp::SuperRight)),
        Tilde => left(BP_TILDE, Infix::Tilde),
        Or => left(BP_OR, Infix::Binary(B::Or)),
        OrOr => left(BP_OR, Infix::Binary(B::OrOr)),
        And => left(BP_AND, Infix::Binary(B::And)),
        AndAnd => left(BP_AND, Infix::Binary(B::AndAnd)),
        EqEq => left(BP_COMPARE, Infix::Binary(B::Eq)),
        NotEq => left(BP_COMPARE, Infix::Binary(B::Ne)),
        Lt => left(BP_COMPARE, Infix::Binary(B::Lt)),
        Gt => left(BP_COMPARE, Infix::Binary(B::Gt)),
        Le => left(BP_COMPARE, Infix::Binary(B::Le)),
        Ge => left(BP_COMPARE, Infix::Binary(B::Ge)),
        Plus => left(BP_ADD, Infix::Binary(B::Add)),
        Minus => left(BP_ADD, Infix::Binary(B::Sub)),
        Star => left(BP_MUL, Infix::Binary(B::Mul)),
        Slash => left(BP_MUL, Infix::Binary(B::Div)),
        Special => left(BP_SPECIAL, Infix::Special),
        Pipe => left(BP_SPECIAL, Infix::Binary(B::Pipe)),
        Colon => left(BP_COLON, Infix::Colon),
        Caret => right(BP_POW, Infix::Binary(B::Pow)),
        _ => None,
    }
}

fn describe(kind: Option<TokenKind>) -> &'static str {
    use TokenKind::*;
    match kind {
        None => "end of input",
        Some(k) => match k {
            Symbol | Backtick => "symbol",
            Number => "numeric constant",
            String | RawString => "string constant",
            Comment => "comment",
            Newline => "end of line",
            If => "'if'",
            Else => "'else'",
            For => "'for'",
            In => "'in'",
            While => "'while'",
            Repeat => "'repeat'",
            Function | Lambda => "'function'",
            Break => "'break'",
            Next => "'next'",
            True | False | Null | Na | Inf | NaN => "constant",
            LeftAssign | SuperLeftAssign | ColonAssign => "assignment",
            RightAssign | SuperRightAssign => "right assignment",
            EqAssign => "'='",
            Special => "SPECIAL",
            LParen => "'('",
            RParen => "')'",
            LBrace => "'{'",
            RBrace => "'}'",
            LBracket => "'['",
            LDoubleBracket => "'[['",
            RBracket => "']'",
            Comma => "','",
            Semicolon => "';'",
            Invalid => "input",
            _ => "operator",
        },
    }
}

pub struct Parser<'s> {
    src: &'s [u8],
    toks: Vec<Token>,
    pos: usize,
    depth: usize,
    opts: ParseOptions,
    steps: u32,
}

impl<'s> Parser<'s> {
    pub fn new(src: &'s [u8], opts: ParseOptions) -> Self {
        Self {
            src,
            toks: lex(src),
            pos: 0,
            depth: 0,
            opts,
            steps: 0,
        }
    }

    pub fn tokens(&self) -> &[Token] {
        &self.toks
    }

    /// Parse the whole input into a `Sequence` root.
    pub fn parse(&mut self) -> PResult<SyntaxNode> {
        let children = self.statements(None)?;
        let span = Span::new(0, self.src.len());
        Ok(SyntaxNode::interior(SyntaxKind::Sequence, span, children))
    }

    // ---- token navigation -------------------------------------------------

    fn sig_from(&self, mut i: usize, skip_nl: bool) -> usize {
        while let Some(t) = self.toks.get(i) {
            match t.kind {
                TokenKind::Comment => i += 1,
                TokenKind::Newline if skip_nl => i += 1,
                _ => break,
            }
        }
        i
    }

    fn kind_at(&self, i: usize) -> Option<TokenKind> {
        self.toks.get(i).map(|t| t.kind)
    }

    fn peek(&self, skip_nl: bool) -> (usize, Option<TokenKind>) {
        let i = self.sig_from(self.pos, skip_nl);
        (i, self.kind_at(i))
    }

    fn skip_newlines(&mut self) {
        self.pos = self.sig_from(self.pos, true);
    }

    fn tick(&mut self) -> PResult<()> {
        self.steps = self.steps.wrapping_add(1);
        if self.steps % 1024 == 0 {
            if let Some(deadline) = self.opts.deadline {
                if Instant::now() > deadline {
                    return Err(ParseFailure::Timeout);
                }
            }
        }
        Ok(())
    }

    /// Consume the token at index `i` (already known to be significant).
    fn take(&mut self, i: usize) -> PResult<Token> {
        self.tick()?;
        let tok = self.toks[i];
        self.pos = i + 1;
        Ok(tok)
    }

    fn leaf(&self, tok: &Token, kind: SyntaxKind) -> SyntaxNode {
        SyntaxNode::leaf(kind, tok.span, tok.text(self.src).into_owned())
    }

    fn error_at(&self, i: usize) -> ParseFailure {
        let (span, kind) = match self.toks.get(i) {
            Some(t) => (t.span, Some(t.kind)),
            None => (Span::new(self.src.len(), self.src.len()), None),
        };
        ParseFailure::Syntax(ParseError {
            span,
            message: format!("unexpected {}", describe(kind)),
        })
    }

    fn expect(&mut self, kind: TokenKind, skip_nl: bool) -> PResult<Token> {
        let (i, k) = self.peek(skip_nl);
        if k == Some(kind) {
            self.take(i)
        } else {
            Err(self.error_at(i))
        }
    }

    fn enter(&mut self, at: usize) -> PResult<()> {
        self.depth += 1;
        if self.depth > self.opts.max_depth {
            let span = self.toks.get(at).map_or(Span::new(self.src.len(), self.src.len()), |t| t.span);
            return Err(ParseFailure::TooDeep {
                span,
                limit: self.opts.max_depth,
            });
        }
        Ok(())
    }

    fn check_chain(&self, extra: usize, span: Span) -> PResult<()> {
        if self.depth + extra > self.opts.max_depth {
            return Err(ParseFailure::TooDeep {
                span,
                limit: self.opts.max_depth,
            });
        }
        Ok(())
    }

    // ---- statements -------------------------------------------------------

    /// Statement list up to end of input (`close == None`) or a closing brace.
    fn statements(&mut self, close: Option<TokenKind>) -> PResult<Vec<SyntaxNode>> {
        let ctx = if close.is_some() { Ctx::BLOCK } else { Ctx::TOP };
        let mut out = Vec::new();
        loop {
            let Some(tok) = self.toks.get(self.pos).copied() else {
                if close.is_some() {
                    return Err(self.error_at(self.pos));
                }
                break;
            };
            match tok.kind {
                TokenKind::Newline | TokenKind::Semicolon => {
                    self.take(self.pos)?;
                }
                TokenKind::Comment => {
                    self.take(self.pos)?;
                    out.push(self.leaf(&tok, SyntaxKind::Comment));
                }
                k if Some(k) == close => break,
                _ => {
                    let stmt = self.expr(0, ctx)?;
                    out.push(stmt);
                    match self.kind_at(self.pos) {
                        None
                        | Some(TokenKind::Newline | TokenKind::Semicolon | TokenKind::Comment) => {}
                        Some(k) if Some(k) == close => {}
                        _ => return Err(self.error_at(self.pos)),
                    }
                }
            }
        }
        Ok(out)
    }

    // ---- expressions ------------------------------------------------------

    fn expr(&mut self, min_bp: u8, ctx: Ctx) -> PResult<SyntaxNode> {
        self.skip_to_sig(ctx);
        self.enter(self.pos)?;
        let result = stacker::maybe_grow(RED_ZONE, STACK_GROWTH, || self.expr_inner(min_bp, ctx));
        self.depth -= 1;
        result
    }

    fn skip_to_sig(&mut self, ctx: Ctx) {
        self.pos = self.sig_from(self.pos, ctx.skip_nl);
    }

    fn expr_inner(&mut self, min_bp: u8, ctx: Ctx) -> PResult<SyntaxNode> {
        let mut lhs = self.prefix(ctx)?;
        let mut chain = 0usize;
        loop {
            let (i, kind) = self.peek(ctx.skip_nl);
            let Some(kind) = kind else { break };

            if BP_POSTFIX >= min_bp {
                let postfix = match kind {
                    TokenKind::LParen => Some(Self::call as PostfixFn<'s>),
                    TokenKind::LBracket | TokenKind::LDoubleBracket => Some(Self::index as PostfixFn<'s>),
                    TokenKind::Dollar | TokenKind::At => Some(Self::member as PostfixFn<'s>),
                    _ => None,
                };
                if let Some(apply) = postfix {
                    lhs = apply(self, lhs, i)?;
                    chain += 1;
                    self.check_chain(chain, lhs.span)?;
                    continue;
                }
            }

            let Some((lbp, rbp, op)) = infix(kind) else { break };
            if lbp < min_bp {
                break;
            }
            if kind == TokenKind::EqAssign && !ctx.allow_eq {
                break;
            }
            self.take(i)?;
            self.skip_newlines();
            let rhs = self.expr(rbp, ctx)?;
            let span = lhs.span.cover(rhs.span);
            let node_kind = match op {
                Infix::Assign(a) => SyntaxKind::Assign(a),
                Infix::Binary(b) => SyntaxKind::BinaryOp(b),
                Infix::Colon => SyntaxKind::ColonOp,
                Infix::Tilde => SyntaxKind::Tilde,
                Infix::Special => {
                    let text = self.toks[i].text(self.src).into_owned();
                    SyntaxKind::SpecialInfixOp(text.into_boxed_str())
                }
            };
            lhs = SyntaxNode::interior(node_kind, span, vec![lhs, rhs]);
            chain += 1;
            self.check_chain(chain, span)?;
        }
        Ok(lhs)
    }

    fn unary(&mut self, i: usize, kind: SyntaxKind, bp: u8, ctx: Ctx) -> PResult<SyntaxNode> {
        let tok = self.take(i)?;
        self.skip_newlines();
        let operand = self.expr(bp, ctx)?;
        let span = tok.span.cover(operand.span);
        Ok(SyntaxNode::interior(kind, span, vec![operand]))
    }

    fn prefix(&mut self, ctx: Ctx) -> PResult<SyntaxNode> {
        use TokenKind as T;
        let (i, kind) = self.peek(ctx.skip_nl);
        let Some(kind) = kind else {
            return Err(self.error_at(i));
        };
        let tok = self.toks[i];
        let simple = |k: SyntaxKind| Some(k);
        let leaf_kind = match kind {
            T::Number | T::NaN => simple(SyntaxKind::Number),
            T::RawString => simple(SyntaxKind::RawString),
            T::True | T::False => simple(SyntaxKind::LogicalConst),
            T::Null => simple(SyntaxKind::NullConst),
            T::Na => simple(SyntaxKind::NAConst),
            T::Inf => simple(SyntaxKind::InfConst),
            T::Break => simple(SyntaxKind::Break),
            T::Next => simple(SyntaxKind::Next),
            _ => None,
        };
        if let Some(k) = leaf_kind {
            self.take(i)?;
            return Ok(self.leaf(&tok, k));
        }
        match kind {
            T::Symbol | T::Backtick | T::String => {
                if matches!(self.kind_at(i + 1), Some(T::NsGet | T::NsGetInt)) {
                    return self.namespace(i);
                }
                self.take(i)?;
                let k = match kind {
                    T::Symbol => SyntaxKind::Symbol,
                    T::Backtick => SyntaxKind::BacktickSymbol,
                    _ => SyntaxKind::String,
                };
                Ok(self.leaf(&tok, k))
            }
            T::Minus => self.unary(i, SyntaxKind::UnaryOp(UnaryOperator::Neg), BP_UNARY, ctx),
            T::Plus => self.unary(i, SyntaxKind::UnaryOp(UnaryOperator::Plus), BP_UNARY, ctx),
            T::Bang => self.unary(i, SyntaxKind::UnaryOp(UnaryOperator::Not), BP_NOT, ctx),
            T::Tilde => self.unary(i, SyntaxKind::Tilde, BP_TILDE + 1, ctx),
            T::Question => self.unary(i, SyntaxKind::UnaryOp(UnaryOperator::Help), BP_HELP + 1, ctx),
            T::LParen => {
                let open = self.take(i)?;
                let inner = self.expr(0, Ctx::PAREN)?;
                let close = self.expect(T::RParen, true)?;
                Ok(SyntaxNode::interior(
                    SyntaxKind::Paren,
                    open.span.cover(close.span),
                    vec![inner],
                ))
            }
            T::LBrace => {
                let open = self.take(i)?;
                let body = self.statements(Some(T::RBrace))?;
                let close = self.take(self.pos)?;
                Ok(SyntaxNode::interior(
                    SyntaxKind::Block,
                    open.span.cover(close.span),
                    body,
                ))
            }
            T::If => self.if_expr(i, ctx),
            T::For => self.for_expr(i, ctx),
            T::While => self.while_expr(i, ctx),
            T::Repeat => {
                let kw = self.take(i)?;
                self.skip_newlines();
                let body = self.expr(0, ctx.body())?;
                Ok(SyntaxNode::interior(
                    SyntaxKind::Repeat,
                    kw.span.cover(body.span),
                    vec![body],
                ))
            }
            T::Function | T::Lambda => self.function(i, ctx),
            _ => Err(self.error_at(i)),
        }
    }

    fn namespace(&mut self, i: usize) -> PResult<SyntaxNode> {
        let pkg_tok = self.take(i)?;
        let pkg = self.leaf(&pkg_tok, leaf_kind_of(pkg_tok.kind));
        let op = self.take(i + 1)?;
        let kind = if op.kind == TokenKind::NsGet {
            SyntaxKind::NamespaceAccess
        } else {
            SyntaxKind::InternalNamespaceAccess
        };
        let j = self.pos;
        match self.kind_at(j) {
            Some(TokenKind::Symbol | TokenKind::Backtick | TokenKind::String) => {
                let name_tok = self.take(j)?;
                let name = self.leaf(&name_tok, leaf_kind_of(name_tok.kind));
                Ok(SyntaxNode::interior(
                    kind,
                    pkg_tok.span.cover(name_tok.span),
                    vec![pkg, name],
                ))
            }
            _ => Err(self.error_at(j)),
        }
    }

    fn member(&mut self, lhs: SyntaxNode, i: usize) -> PResult<SyntaxNode> {
        let op = self.take(i)?;
        let kind = if op.kind == TokenKind::Dollar {
            SyntaxKind::DollarAccess
        } else {
            SyntaxKind::AtAccess
        };
        self.skip_newlines();
        let j = self.pos;
        match self.kind_at(j) {
            Some(TokenKind::Symbol | TokenKind::Backtick | TokenKind::String) => {
                let name_tok = self.take(j)?;
                let name = self.leaf(&name_tok, leaf_kind_of(name_tok.kind));
                let span = lhs.span.cover(name_tok.span);
                Ok(SyntaxNode::interior(kind, span, vec![lhs, name]))
            }
            _ => Err(self.error_at(j)),
        }
    }

    fn call(&mut self, callee: SyntaxNode, i: usize) -> PResult<SyntaxNode> {
        self.take(i)?;
        let (args, end) = self.args(TokenKind::RParen)?;
        let span = Span::new(callee.span.start, end);
        let mut children = Vec::with_capacity(args.len() + 1);
        children.push(callee);
        children.extend(args);
        Ok(SyntaxNode::interior(SyntaxKind::Call, span, children))
    }

    fn index(&mut self, object: SyntaxNode, i: usize) -> PResult<SyntaxNode> {
        let open = self.take(i)?;
        let double = open.kind == TokenKind::LDoubleBracket;
        let (args, mut end) = self.args(TokenKind::RBracket)?;
        if double {
            // `[[` closes with two adjacent `]`
            match self.kind_at(self.pos) {
                Some(TokenKind::RBracket) => end = self.take(self.pos)?.span.end,
                _ => return Err(self.error_at(self.pos)),
            }
        }
        let kind = if double {
            SyntaxKind::IndexDoubleBracket
        } else {
            SyntaxKind::IndexBracket
        };
        let span = Span::new(object.span.start, end);
        let mut children = Vec::with_capacity(args.len() + 1);
        children.push(object);
        children.extend(args);
        Ok(SyntaxNode::interior(kind, span, children))
    }

    /// Argument list after the opening token. Returns the args and the end
    /// offset of the closing token.
    fn args(&mut self, close: TokenKind) -> PResult<(Vec<SyntaxNode>, usize)> {
        use TokenKind as T;
        let mut args = Vec::new();
        let (i, k) = self.peek(true);
        if k == Some(close) {
            let tok = self.take(i)?;
            return Ok((args, tok.span.end));
        }
        loop {
            let (i, k) = self.peek(true);
            let arg = match k {
                Some(T::Comma) => {
                    let at = self.toks[i].span.start;
                    SyntaxNode::leaf(SyntaxKind::EmptyArg, Span::new(at, at), "")
                }
                Some(k) if k == close => {
                    let at = self.toks[i].span.start;
                    SyntaxNode::leaf(SyntaxKind::EmptyArg, Span::new(at, at), "")
                }
                Some(T::Symbol | T::Backtick | T::String | T::Null)
                    if self.kind_at(self.sig_from(i + 1, true)) == Some(T::EqAssign) =>
                {
                    self.named_arg(i, close)?
                }
                _ => self.expr(0, Ctx::ARG)?,
            };
            args.push(arg);
            let (j, k) = self.peek(true);
            match k {
                Some(T::Comma) => {
                    self.take(j)?;
                }
                Some(k) if k == close => {
                    let tok = self.take(j)?;
                    return Ok((args, tok.span.end));
                }
                _ => return Err(self.error_at(j)),
            }
        }
    }

    fn named_arg(&mut self, i: usize, close: TokenKind) -> PResult<SyntaxNode> {
        let name_tok = self.take(i)?;
        let name_kind = match name_tok.kind {
            TokenKind::Null => SyntaxKind::NullConst,
            k => leaf_kind_of(k),
        };
        let name = self.leaf(&name_tok, name_kind);
        let (eq_i, _) = self.peek(true);
        let eq = self.take(eq_i)?;
        let (_, k) = self.peek(true);
        if k == Some(TokenKind::Comma) || k == Some(close) {
            return Ok(SyntaxNode::interior(
                SyntaxKind::NamedArg,
                name_tok.span.cover(eq.span),
                vec![name],
            ));
        }
        let value = self.expr(0, Ctx::ARG)?;
        let span = name_tok.span.cover(value.span);
        Ok(SyntaxNode::interior(SyntaxKind::NamedArg, span, vec![name, value]))
    }

    fn if_expr(&mut self, i: usize, ctx: Ctx) -> PResult<SyntaxNode> {
        let kw = self.take(i)?;
        self.expect(TokenKind::LParen, true)?;
        let cond = self.expr(0, Ctx::ARG)?;
        self.expect(TokenKind::RParen, true)?;
        self.skip_newlines();
        let then = self.expr(0, ctx.body())?;
        let mut span = kw.span.cover(then.span);
        let mut children = vec![cond, then];
        let (j, k) = self.peek(ctx.in_group || ctx.skip_nl);
        if k == Some(TokenKind::Else) {
            self.take(j)?;
            self.skip_newlines();
            let otherwise = self.expr(0, ctx.body())?;
            span = span.cover(otherwise.span);
            children.push(otherwise);
        }
        Ok(SyntaxNode::interior(SyntaxKind::If, span, children))
    }

    fn for_expr(&mut self, i: usize, ctx: Ctx) -> PResult<SyntaxNode> {
        let kw = self.take(i)?;
        self.expect(TokenKind::LParen, true)?;
        let (j, k) = self.peek(true);
        let var = match k {
            Some(TokenKind::Symbol | TokenKind::Backtick) => {
                let tok = self.take(j)?;
                self.leaf(&tok, leaf_kind_of(tok.kind))
            }
            _ => return Err(self.error_at(j)),
        };
        self.expect(TokenKind::In, true)?;
        let iterable = self.expr(0, Ctx::ARG)?;
        self.expect(TokenKind::RParen, true)?;
        self.skip_newlines();
        let body = self.expr(0, ctx.body())?;
        Ok(SyntaxNode::interior(
            SyntaxKind::For,
            kw.span.cover(body.span),
            vec![var, iterable, body],
        ))
    }

    fn while_expr(&mut self, i: usize, ctx: Ctx) -> PResult<SyntaxNode> {
        let kw = self.take(i)?;
        self.expect(TokenKind::LParen, true)?;
        let cond = self.expr(0, Ctx::ARG)?;
        self.expect(TokenKind::RParen, true)?;
        self.skip_newlines();
        let body = self.expr(0, ctx.body())?;
        Ok(SyntaxNode::interior(
            SyntaxKind::While,
            kw.span.cover(body.span),
            vec![cond, body],
        ))
    }

    fn function(&mut self, i: usize, ctx: Ctx) -> PResult<SyntaxNode> {
        let kw = self.take(i)?;
        let form = if kw.kind == TokenKind::Lambda {
            FunctionForm::Lambda
        } else {
            FunctionForm::Keyword
        };
        let open = self.expect(TokenKind::LParen, true)?;
        let mut params = Vec::new();
        let close_end;
        loop {
            let (j, k) = self.peek(true);
            match k {
                Some(TokenKind::RParen) => {
                    close_end = self.take(j)?.span.end;
                    break;
                }
                Some(TokenKind::Symbol | TokenKind::Backtick) => {
                    let tok = self.take(j)?;
                    let text = tok.text(self.src);
                    let name = if text == "..." {
                        self.leaf(&tok, SyntaxKind::Dots)
                    } else {
                        self.leaf(&tok, leaf_kind_of(tok.kind))
                    };
                    let (e, k) = self.peek(true);
                    let param = if k == Some(TokenKind::EqAssign) {
                        self.take(e)?;
                        let default = self.expr(0, Ctx::ARG)?;
                        let span = name.span.cover(default.span);
                        SyntaxNode::interior(SyntaxKind::DefaultArg, span, vec![name, default])
                    } else {
                        name
                    };
                    params.push(param);
                    let (c, k) = self.peek(true);
                    match k {
                        Some(TokenKind::Comma) => {
                            self.take(c)?;
                        }
                        Some(TokenKind::RParen) => {}
                        _ => return Err(self.error_at(c)),
                    }
                }
                _ => return Err(self.error_at(j)),
            }
        }
        let params = SyntaxNode::interior(
            SyntaxKind::Params,
            Span::new(open.span.start, close_end),
            params,
        );
        self.skip_newlines();
        let body = self.expr(0, ctx.body())?;
        Ok(SyntaxNode::interior(
            SyntaxKind::FunctionDef(form),
            kw.span.cover(body.span),
            vec![params, body],
        ))
    }
}

fn leaf_kind_of(kind: TokenKind) -> SyntaxKind {
    match kind {
        TokenKind::Backtick => SyntaxKind::BacktickSymbol,
        TokenKind::String => SyntaxKind::String,
        _ => SyntaxKind::Symbol,
    }
}

/// Parse with explicit limits.
pub fn parse_with(source: &[u8], opts: ParseOptions) -> Result<SyntaxNode, ParseFailure> {
    Parser::new(source, opts).parse()
}
