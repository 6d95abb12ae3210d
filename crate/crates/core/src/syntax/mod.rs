//! Lexing and parsing of R source into a concrete syntax tree.

pub mod ast;
pub mod failure;
pub mod parser;
pub mod token;

pub use ast::{AssignOp, BinaryOperator, FunctionForm, SyntaxKind, SyntaxNode, UnaryOperator};
pub use failure::{
    classify_parse_failure, parse, FailureCategory, FailureRecord, ParseOutcome,
};
pub use parser::{parse_with, ParseError, ParseFailure, ParseOptions, DEFAULT_MAX_DEPTH};
pub use token::{lex, tokenize, Span, Token, TokenKind};
