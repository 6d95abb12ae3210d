//! Byte-level lexer for R source.
//!
//! The lexer works directly on the raw bytes so that every span is a byte
//! range into the original file, even when the file is not valid UTF-8.
//! Invalid sequences outside of strings and comments become [`TokenKind::Invalid`]
//! tokens; the parser reports them as the first error.

use std::borrow::Cow;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Half-open byte range `start..end` into the source.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        debug_assert!(start <= end);
        Self { start, end }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }

    /// Smallest span covering both.
    pub fn cover(self, other: Span) -> Span {
        Span::new(self.start.min(other.start), self.end.max(other.end))
    }

    pub fn contains(&self, other: &Span) -> bool {
        self.start <= other.start && other.end <= self.end
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TokenKind {
    Symbol,
    Backtick,
    Number,
    String,
    RawString,
    Comment,
    Newline,

    If,
    Else,
    For,
    In,
    While,
    Repeat,
    Function,
    Break,
    Next,
    True,
    False,
    Null,
    Na,
    Inf,
    NaN,

    LeftAssign,
    SuperLeftAssign,
    RightAssign,
    SuperRightAssign,
    EqAssign,
    ColonAssign,

    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    Lt,
    Gt,
    Le,
    Ge,
    EqEq,
    NotEq,
    Bang,
    And,
    AndAnd,
    Or,
    OrOr,
    Tilde,
    Question,
    Colon,
    NsGet,
    NsGetInt,
    Dollar,
    At,
    Special,
    Pipe,
    Lambda,

    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    LDoubleBracket,
    RBracket,
    Comma,
    Semicolon,

    /// Bytes the lexer could not turn into any R token: undecodable
    /// sequences, stray Unicode punctuation, unterminated strings.
    Invalid,
}

impl TokenKind {
    pub fn is_trivia(self) -> bool {
        matches!(self, TokenKind::Comment)
    }

    /// Tokens that can end an operand (a value expression).
    pub fn ends_operand(self) -> bool {
        use TokenKind::*;
        matches!(
            self,
            Symbol | Backtick | Number | String | RawString | True | False | Null | Na | Inf | NaN
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub kind: TokenKind,
    pub span: Span,
    /// 1-based line of the first byte.
    pub line: u32,
    /// 1-based column of the first byte, counted in characters.
    pub col: u32,
}

impl Token {
    pub fn text<'a>(&self, src: &'a [u8]) -> Cow<'a, str> {
        String::from_utf8_lossy(&src[self.span.start..self.span.end])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("invalid UTF-8 sequence at byte offset {offset}")]
pub struct EncodingError {
    pub offset: usize,
}

/// Strict tokenization: rejects input that is not valid UTF-8.
pub fn tokenize(source: &[u8]) -> Result<Vec<Token>, EncodingError> {
    if let Err(e) = std::str::from_utf8(source) {
        return Err(EncodingError {
            offset: e.valid_up_to(),
        });
    }
    Ok(lex(source))
}

/// Lossy tokenization: undecodable bytes become `Invalid` tokens (or stay
/// embedded inside the string or comment that contains them).
pub fn lex(source: &[u8]) -> Vec<Token> {
    Lexer::new(source).run()
}

/// Decode one character at `i`. `Err(n)` means `n` undecodable bytes.
pub(crate) fn decode_at(src: &[u8], i: usize) -> Result<(char, usize), usize> {
    let b = src[i];
    if b < 0x80 {
        return Ok((b as char, 1));
    }
    let end = (i + 4).min(src.len());
    match std::str::from_utf8(&src[i..end]) {
        Ok(s) => {
            let c = s.chars().next().expect("non-empty");
            Ok((c, c.len_utf8()))
        }
        Err(e) if e.valid_up_to() > 0 => {
            let s = std::str::from_utf8(&src[i..i + e.valid_up_to()]).expect("valid prefix");
            let c = s.chars().next().expect("non-empty");
            Ok((c, c.len_utf8()))
        }
        Err(e) => Err(e.error_len().unwrap_or(end - i).max(1)),
    }
}

fn is_ident_start(c: char) -> bool {
    c.is_alphabetic() || c == '.'
}

fn is_ident_continue(c: char) -> bool {
    c.is_alphanumeric() || c == '.' || c == '_'
}

fn keyword(text: &[u8]) -> Option<TokenKind> {
    use TokenKind::*;
    Some(match text {
        b"if" => If,
        b"else" => Else,
        b"for" => For,
        b"in" => In,
        b"while" => While,
        b"repeat" => Repeat,
        b"function" => Function,
        b"break" => Break,
        b"next" => Next,
        b"TRUE" => True,
        b"FALSE" => False,
        b"NULL" => Null,
        b"NA" | b"NA_integer_" | b"NA_real_" | b"NA_character_" | b"NA_complex_" => Na,
        b"Inf" => Inf,
        b"NaN" => NaN,
        _ => return None,
    })
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
    line: u32,
    col: u32,
    out: Vec<Token>,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a [u8]) -> Self {
        Self {
            src,
            pos: 0,
            line: 1,
            col: 1,
            out: Vec::new(),
        }
    }

    fn byte(&self, i: usize) -> Option<u8> {
        self.src.get(i).copied()
    }

    fn char_at(&self, i: usize) -> Option<char> {
        if i >= self.src.len() {
            return None;
        }
        decode_at(self.src, i).ok().map(|(c, _)| c)
    }

    /// Advance the cursor to `to`, keeping line/column bookkeeping.
    fn advance_to(&mut self, to: usize) {
        let mut i = self.pos;
        while i < to {
            match decode_at(self.src, i) {
                Ok(('\n', n)) => {
                    self.line += 1;
                    self.col = 1;
                    i += n;
                }
                Ok((_, n)) => {
                    self.col += 1;
                    i += n;
                }
                Err(n) => {
                    self.col += 1;
                    i += n;
                }
            }
        }
        self.pos = to;
    }

    fn emit(&mut self, kind: TokenKind, end: usize) {
        let tok = Token {
            kind,
            span: Span::new(self.pos, end),
            line: self.line,
            col: self.col,
        };
        self.out.push(tok);
        self.advance_to(end);
    }

    fn run(mut self) -> Vec<Token> {
        // A leading byte-order mark is trivia.
        if self.src.starts_with(&[0xEF, 0xBB, 0xBF]) {
            self.pos = 3;
        }
        while self.pos < self.src.len() {
            self.step();
        }
        self.out
    }

    fn step(&mut self) {
        use TokenKind::*;
        let i = self.pos;
        let b = self.src[i];
        match b {
            b' ' | b'\t' | b'\r' | 0x0c => {
                self.advance_to(i + 1);
            }
            b'\n' => self.emit(Newline, i + 1),
            b'#' => {
                let end = self.src[i..]
                    .iter()
                    .position(|&c| c == b'\n')
                    .map_or(self.src.len(), |p| i + p);
                self.emit(Comment, end);
            }
            b'"' | b'\'' => {
                let end = self.scan_quoted(i, b);
                match end {
                    Some(end) => self.emit(String, end),
                    None => self.emit(Invalid, self.src.len()),
                }
            }
            b'`' => match self.scan_quoted(i, b'`') {
                Some(end) => self.emit(Backtick, end),
                None => self.emit(Invalid, self.src.len()),
            },
            b'0'..=b'9' => {
                let end = self.scan_number(i);
                self.emit(Number, end);
            }
            b'.' if matches!(self.byte(i + 1), Some(b'0'..=b'9')) => {
                let end = self.scan_number(i);
                self.emit(Number, end);
            }
            b'r' | b'R' if matches!(self.byte(i + 1), Some(b'"' | b'\'')) => {
                match self.scan_raw_string(i) {
                    Some(end) => self.emit(RawString, end),
                    None => self.emit(Invalid, self.src.len()),
                }
            }
            b'%' => {
                let rest = &self.src[i + 1..];
                match rest.iter().position(|&c| c == b'%' || c == b'\n') {
                    Some(p) if rest[p] == b'%' => self.emit(Special, i + p + 2),
                    _ => self.emit(Invalid, i + 1),
                }
            }
            _ => {
                if let Some((kind, len)) = self.operator(i) {
                    self.emit(kind, i + len);
                    return;
                }
                match decode_at(self.src, i) {
                    Ok((c, _)) if is_ident_start(c) => {
                        let end = self.scan_ident(i);
                        let kind = keyword(&self.src[i..end]).unwrap_or(Symbol);
                        self.emit(kind, end);
                    }
                    Ok((_, n)) => self.emit(Invalid, i + n),
                    Err(n) => self.emit(Invalid, i + n),
                }
            }
        }
    }

    fn operator(&self, i: usize) -> Option<(TokenKind, usize)> {
        use TokenKind::*;
        let at = |k: usize| self.byte(i + k);
        let op = match self.src[i] {
            b'<' => match (at(1), at(2)) {
                (Some(b'<'), Some(b'-')) => (SuperLeftAssign, 3),
                (Some(b'-'), _) => (LeftAssign, 2),
                (Some(b'='), _) => (Le, 2),
                _ => (Lt, 1),
            },
            b'-' => match (at(1), at(2)) {
                (Some(b'>'), Some(b'>')) => (SuperRightAssign, 3),
                (Some(b'>'), _) => (RightAssign, 2),
                _ => (Minus, 1),
            },
            b'>' => match at(1) {
                Some(b'=') => (Ge, 2),
                _ => (Gt, 1),
            },
            b'=' => match at(1) {
                Some(b'=') => (EqEq, 2),
                _ => (EqAssign, 1),
            },
            b'!' => match at(1) {
                Some(b'=') => (NotEq, 2),
                _ => (Bang, 1),
            },
            b'&' => match at(1) {
                Some(b'&') => (AndAnd, 2),
                _ => (And, 1),
            },
            b'|' => match at(1) {
                Some(b'|') => (OrOr, 2),
                Some(b'>') => (Pipe, 2),
                _ => (Or, 1),
            },
            b':' => match (at(1), at(2)) {
                (Some(b':'), Some(b':')) => (NsGetInt, 3),
                (Some(b':'), _) => (NsGet, 2),
                (Some(b'='), _) => (ColonAssign, 2),
                _ => (Colon, 1),
            },
            b'*' => match at(1) {
                Some(b'*') => (Caret, 2),
                _ => (Star, 1),
            },
            b'+' => (Plus, 1),
            b'/' => (Slash, 1),
            b'^' => (Caret, 1),
            b'~' => (Tilde, 1),
            b'?' => (Question, 1),
            b'$' => (Dollar, 1),
            b'@' => (At, 1),
            b'\\' => (Lambda, 1),
            b'(' => (LParen, 1),
            b')' => (RParen, 1),
            b'{' => (LBrace, 1),
            b'}' => (RBrace, 1),
            b'[' => match at(1) {
                Some(b'[') => (LDoubleBracket, 2),
                _ => (LBracket, 1),
            },
            b']' => (RBracket, 1),
            b',' => (Comma, 1),
            b';' => (Semicolon, 1),
            _ => return None,
        };
        Some(op)
    }

    /// Returns the end offset past the closing quote, or `None` when the
    /// literal runs to end of input.
    fn scan_quoted(&self, start: usize, quote: u8) -> Option<usize> {
        let mut i = start + 1;
        while i < self.src.len() {
            match self.src[i] {
                b'\\' => i += 2,
                c if c == quote => return Some(i + 1),
                _ => i += 1,
            }
        }
        None
    }

    fn scan_raw_string(&self, start: usize) -> Option<usize> {
        let quote = self.src[start + 1];
        let mut i = start + 2;
        let mut dashes = 0;
        while self.byte(i) == Some(b'-') {
            dashes += 1;
            i += 1;
        }
        let close = match self.byte(i)? {
            b'(' => b')',
            b'[' => b']',
            b'{' => b'}',
            _ => return None,
        };
        i += 1;
        while i < self.src.len() {
            if self.src[i] == close {
                let mut j = i + 1;
                let mut n = 0;
                while n < dashes && self.byte(j) == Some(b'-') {
                    n += 1;
                    j += 1;
                }
                if n == dashes && self.byte(j) == Some(quote) {
                    return Some(j + 1);
                }
            }
            i += 1;
        }
        None
    }

    fn scan_number(&self, start: usize) -> usize {
        let digits = |mut i: usize, hex: bool| {
            while let Some(c) = self.byte(i) {
                let ok = if hex { c.is_ascii_hexdigit() } else { c.is_ascii_digit() };
                if !ok {
                    break;
                }
                i += 1;
            }
            i
        };
        let mut i = start;
        let hex = self.byte(i) == Some(b'0') && matches!(self.byte(i + 1), Some(b'x' | b'X'));
        if hex {
            i = digits(i + 2, true);
            if self.byte(i) == Some(b'.') {
                i = digits(i + 1, true);
            }
            if matches!(self.byte(i), Some(b'p' | b'P')) {
                let mut j = i + 1;
                if matches!(self.byte(j), Some(b'+' | b'-')) {
                    j += 1;
                }
                if matches!(self.byte(j), Some(b'0'..=b'9')) {
                    i = digits(j, false);
                }
            }
        } else {
            i = digits(i, false);
            if self.byte(i) == Some(b'.') {
                i = digits(i + 1, false);
            }
            if matches!(self.byte(i), Some(b'e' | b'E')) {
                let mut j = i + 1;
                if matches!(self.byte(j), Some(b'+' | b'-')) {
                    j += 1;
                }
                if matches!(self.byte(j), Some(b'0'..=b'9')) {
                    i = digits(j, false);
                }
            }
        }
        if matches!(self.byte(i), Some(b'L' | b'i')) {
            i += 1;
        }
        i
    }

    fn scan_ident(&self, start: usize) -> usize {
        let mut i = start;
        while i < self.src.len() {
            match self.char_at(i) {
                Some(c) if is_ident_continue(c) => i += c.len_utf8(),
                _ => break,
            }
        }
        i
    }
}
