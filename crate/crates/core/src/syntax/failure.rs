//! Parse outcomes and the taxonomy of files that fail to parse.

use serde::{Deserialize, Serialize};

use super::ast::SyntaxNode;
use super::parser::{parse_with, ParseFailure, ParseOptions};
use super::token::{decode_at, lex, Span, Token, TokenKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FailureCategory {
    NotRCode,
    EncodingError,
    DocumentationCommand,
    RawSyntaxError,
}

impl FailureCategory {
    pub const ALL: [FailureCategory; 4] = [
        FailureCategory::DocumentationCommand,
        FailureCategory::EncodingError,
        FailureCategory::NotRCode,
        FailureCategory::RawSyntaxError,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FailureCategory::NotRCode => "NotRCode",
            FailureCategory::EncodingError => "EncodingError",
            FailureCategory::DocumentationCommand => "DocumentationCommand",
            FailureCategory::RawSyntaxError => "RawSyntaxError",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailureRecord {
    pub category: FailureCategory,
    pub first_error_span: Span,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseOutcome {
    Ast(SyntaxNode),
    Failure(FailureRecord),
}

impl ParseOutcome {
    pub fn ast(&self) -> Option<&SyntaxNode> {
        match self {
            ParseOutcome::Ast(node) => Some(node),
            ParseOutcome::Failure(_) => None,
        }
    }

    pub fn failure(&self) -> Option<&FailureRecord> {
        match self {
            ParseOutcome::Ast(_) => None,
            ParseOutcome::Failure(f) => Some(f),
        }
    }
}

/// Parse `source` with default limits. Failures come back already
/// classified.
pub fn parse(source: &[u8]) -> ParseOutcome {
    match parse_with(source, ParseOptions::default()) {
        Ok(ast) => ParseOutcome::Ast(ast),
        Err(failure) => ParseOutcome::Failure(failure_record(source, failure)),
    }
}

/// Turn a parser failure into a classified record.
pub fn failure_record(source: &[u8], failure: ParseFailure) -> FailureRecord {
    let record = match failure {
        ParseFailure::Syntax(e) => FailureRecord {
            category: FailureCategory::RawSyntaxError,
            first_error_span: e.span,
            message: e.message,
        },
        ParseFailure::TooDeep { span, limit } => FailureRecord {
            category: FailureCategory::RawSyntaxError,
            first_error_span: span,
            message: format!("expression nesting exceeds {limit} levels"),
        },
        ParseFailure::Timeout => FailureRecord {
            category: FailureCategory::RawSyntaxError,
            first_error_span: Span::new(0, 0),
            message: "parse time budget exceeded".to_string(),
        },
    };
    classify_parse_failure(source, record)
}

const DOC_MARKERS: [&[u8]; 3] = [b"\\dontrun", b"\\donttest", b"\\dontshow"];

/// Fraction of non-blank lines that must look like R for a failing file to
/// still count as R code.
pub const R_PLAUSIBLE_THRESHOLD: f64 = 0.2;

/// Assign the failure category by ordered rules: documentation markers
/// before the error, then undecodable or confusable characters in the error
/// token, then the not-R heuristic, else a plain syntax error.
pub fn classify_parse_failure(source: &[u8], failure: FailureRecord) -> FailureRecord {
    let at = failure.first_error_span;
    let category = if doc_marker_before(source, at.start) {
        FailureCategory::DocumentationCommand
    } else if has_encoding_problem(&source[at.start.min(source.len())..at.end.min(source.len())]) {
        FailureCategory::EncodingError
    } else if r_plausible_ratio(source, at.start) < R_PLAUSIBLE_THRESHOLD {
        FailureCategory::NotRCode
    } else {
        FailureCategory::RawSyntaxError
    };
    FailureRecord { category, ..failure }
}

fn doc_marker_before(source: &[u8], offset: usize) -> bool {
    DOC_MARKERS.iter().any(|marker| {
        source
            .windows(marker.len())
            .position(|w| w == *marker)
            .is_some_and(|p| p <= offset)
    })
}

/// Characters that look like ASCII punctuation or whitespace but are not
/// accepted by the R lexer.
pub fn is_confusable(c: char) -> bool {
    matches!(
        c,
        '\u{FF01}'..='\u{FF5E}' // fullwidth ASCII variants
            | '\u{3000}'        // ideographic space
            | '\u{00A0}'        // no-break space
            | '\u{2000}'..='\u{200B}' // typographic spaces, zero-width space
            | '\u{2010}'..='\u{2015}' // hyphens and dashes
            | '\u{2018}'..='\u{201F}' // curly quotes
            | '\u{2032}'..='\u{2033}' // primes
            | '\u{2212}'        // minus sign
            | '\u{2264}' | '\u{2265}' // less/greater-than or equal
            | '\u{FEFF}'        // byte-order mark away from offset 0
            | '\u{FFFD}'        // replacement character
    )
}

fn has_encoding_problem(bytes: &[u8]) -> bool {
    let mut i = 0;
    while i < bytes.len() {
        match decode_at(bytes, i) {
            Ok((c, n)) => {
                if is_confusable(c) {
                    return true;
                }
                i += n;
            }
            Err(_) => return true,
        }
    }
    false
}

fn starts_operand(kind: TokenKind) -> bool {
    kind.ends_operand()
}

/// Share of non-blank lines, up to and including the line holding byte
/// `upto`, whose tokens form plausible R. A line is
/// implausible when it holds an undecodable or unknown character, or two
/// operands that follow each other without an operator (`SUBROUTINE FOO`,
/// `DO 10 I = 1, N`), including a closing bracket followed by an operand
/// when the bracket does not close an `if`/`for`/`while`/`function` header.
pub fn r_plausible_ratio(source: &[u8], upto: usize) -> f64 {
    let upto = upto.min(source.len());
    let last_line = 1 + source[..upto].iter().filter(|&&b| b == b'\n').count() as u32;
    let toks = lex(source);
    let mut lines: std::collections::BTreeMap<u32, bool> = std::collections::BTreeMap::new();
    let mut parens: Vec<bool> = Vec::new();
    let mut prev: Option<(Token, bool)> = None;
    for tok in &toks {
        if tok.line > last_line {
            break;
        }
        if tok.kind == TokenKind::Newline {
            continue;
        }
        let plausible = lines.entry(tok.line).or_insert(true);
        if tok.kind == TokenKind::Comment {
            continue;
        }
        if tok.kind == TokenKind::Invalid {
            *plausible = false;
        }
        let mut closes_header = false;
        match tok.kind {
            TokenKind::LParen => {
                let header = prev.is_some_and(|(p, _)| {
                    matches!(
                        p.kind,
                        TokenKind::If
                            | TokenKind::For
                            | TokenKind::While
                            | TokenKind::Function
                            | TokenKind::Lambda
                    )
                });
                parens.push(header);
            }
            TokenKind::RParen => closes_header = parens.pop().unwrap_or(false),
            _ => {}
        }
        if let Some((p, p_header)) = prev {
            if p.line == tok.line && starts_operand(tok.kind) {
                let adjacent = p.kind.ends_operand()
                    || (p.kind == TokenKind::RParen && !p_header)
                    || matches!(p.kind, TokenKind::RBracket | TokenKind::RBrace);
                if adjacent {
                    *plausible = false;
                }
            }
        }
        prev = Some((*tok, closes_header));
    }
    if lines.is_empty() {
        return 1.0;
    }
    let good = lines.values().filter(|&&ok| ok).count();
    good as f64 / lines.len() as f64
}
