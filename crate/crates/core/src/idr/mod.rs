//! Text form of dependency rules: AST, parser, printer, evaluator and the
//! three-valued to binary projection.
//!
//! Operators: `&` min-AND, `|` max-OR, `^` new_XOR for three-valued rules;
//! `.` AND and `+` OR for binary rules. Binding strength is `&`/`.` over
//! `|`/`+` over `^`, all left-associative. The printer parenthesizes every
//! nested operator node, so printed rules never rely on precedence.
//!
//! `.idr` files hold one rule per line. `#` starts a comment, blank lines
//! are skipped and an optional `@model miim|iim` line fixes the model for
//! the rules that follow.

mod ast;
mod eval;
mod parser;

use std::fmt::Write as _;

use thiserror::Error;

pub use ast::{format_idr, free_entities, translate_to_iim, Expr, IdrRule};
pub use eval::{evaluate, StateLookup};
pub use parser::{parse_idr, parse_idr_as};

use crate::entity::{EntityId, EntityParseError};
use crate::ternary::{LogicError, Model};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IdrError {
    #[error("lexical error at byte {pos}: unexpected '{found}'")]
    Lex { pos: usize, found: String },
    #[error("syntax error at byte {pos}: expected {expected}, found {found}")]
    Syntax {
        pos: usize,
        expected: String,
        found: String,
    },
    #[error("operator '{op}' needs at least 2 operands{}", pos.map(|p| format!(" (byte {p})")).unwrap_or_default())]
    Arity { op: char, pos: Option<usize> },
    #[error("bad entity literal at byte {pos}: {source}")]
    Entity {
        pos: usize,
        #[source]
        source: EntityParseError,
    },
    #[error("rule mixes three-valued and binary operators")]
    MixedModels,
    #[error("operator '{op}' does not belong to the {model} model")]
    ModelMismatch { op: char, model: Model },
    #[error("already binary")]
    AlreadyBinary,
    #[error("unknown entity {0}")]
    UnknownEntity(EntityId),
    #[error(transparent)]
    Logic(#[from] LogicError),
    #[error("line {line}: {source}")]
    Line {
        line: usize,
        #[source]
        source: Box<IdrError>,
    },
    #[error("line {line}: bad directive '{text}'")]
    Directive { line: usize, text: String },
}

/// Parse the contents of an `.idr` file.
pub fn parse_idr_file(text: &str) -> Result<Vec<IdrRule>, IdrError> {
    let mut model: Option<Model> = None;
    let mut rules = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('@') {
            let mut parts = rest.split_whitespace();
            model = match (parts.next(), parts.next(), parts.next()) {
                (Some("model"), Some(m), None) => Some(m.parse().map_err(|_| IdrError::Directive {
                    line: i + 1,
                    text: line.to_string(),
                })?),
                _ => {
                    return Err(IdrError::Directive {
                        line: i + 1,
                        text: line.to_string(),
                    })
                }
            };
            continue;
        }
        let parsed = match model {
            Some(m) => parse_idr_as(line, m),
            None => parse_idr(line),
        };
        rules.push(parsed.map_err(|e| IdrError::Line {
            line: i + 1,
            source: Box::new(e),
        })?);
    }
    Ok(rules)
}

/// Render rules as an `.idr` file with a model directive and optional header comment.
pub fn format_idr_file(rules: &[IdrRule], model: Model, header: &str) -> String {
    let mut out = String::new();
    for line in header.lines() {
        let _ = writeln!(out, "# {line}");
    }
    let _ = writeln!(out, "@model {model}");
    for r in rules {
        let _ = writeln!(out, "{r}");
    }
    out
}
