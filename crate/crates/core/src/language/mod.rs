//! The expression language: lexer, parser, vocabulary and sort checker.
//!
//! A program is a call expression over the manipulation vocabulary, e.g.
//!
//! ```text
//! perpendicular_cost(get_axis("carrot"), get_axis("knife blade"))
//!     + move_cost(get_centroid("knife"), get_centroid("knife blade"), offset=[0, 0, 0.1])
//! ```
//!
//! Identifiers are `[a-z_][a-z0-9_]*`, strings use single or double quotes,
//! `#` starts a line comment, and `;` separates stages.

pub mod ast;
pub mod lexer;
pub mod parser;
pub mod typeck;
pub mod vocabulary;

use std::fmt;

use serde::Serialize;
use thiserror::Error;

pub use ast::{Arg, BinOp, Expr, ExprKind, Span};
pub use parser::{parse, parse_stages};
pub use typeck::{infer, type_check, TypedExpr, TypedNode};
pub use vocabulary::{
    default_rules, default_vocabulary, vocabulary_size, Grammar, GrammarRule, Param, Sort, Vocabulary,
    VocabularyDocument, WordDescriptor,
};

#[derive(Debug, Clone, PartialEq, Error)]
#[error("syntax error at byte {offset}: {message}; expected one of: {}", expected.join(", "))]
pub struct SyntaxError {
    pub offset: usize,
    pub message: String,
    pub expected: Vec<String>,
}

impl SyntaxError {
    pub fn new(offset: usize, message: String, expected: Vec<String>) -> Self {
        Self {
            offset,
            message,
            expected,
        }
    }
}

fn sorts(list: &[Sort]) -> String {
    list.iter().map(|s| s.name()).collect::<Vec<_>>().join(" or ")
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TypeError {
    #[error("unknown word `{name}` at byte {}", span.start)]
    UnknownWord { name: String, span: Span },
    #[error("`{node}` has sort {actual}, expected {}", sorts(expected))]
    SortMismatch {
        node: String,
        span: Span,
        expected: Vec<Sort>,
        actual: Sort,
    },
    #[error("no grammar rule derives `{rule}` in `{node}`")]
    NoRule { node: String, span: Span, rule: String },
    #[error("`{word}` takes at most {max} arguments, got {found}")]
    Arity {
        word: String,
        span: Span,
        max: usize,
        found: usize,
    },
    #[error("`{word}` has no argument named `{argument}`")]
    UnknownArgument { word: String, argument: String, span: Span },
    #[error("argument `{argument}` of `{word}` given twice")]
    DuplicateArgument { word: String, argument: String, span: Span },
    #[error("`{word}` is missing required argument `{argument}`")]
    MissingArgument { word: String, argument: String, span: Span },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LanguageError {
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error(transparent)]
    Type(#[from] TypeError),
}

/// Outcome of gating a candidate program. Never an `Err`: malformed input is
/// a `Rejected` value.
#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Accepted(TypedExpr),
    Rejected(LanguageError),
}

impl Verdict {
    pub fn is_accepted(&self) -> bool {
        matches!(self, Verdict::Accepted(_))
    }

    pub fn reason(&self) -> Option<String> {
        match self {
            Verdict::Accepted(_) => None,
            Verdict::Rejected(e) => Some(e.to_string()),
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Accepted(t) => write!(f, "accepted ({})", t.sort),
            Verdict::Rejected(e) => write!(f, "rejected: {e}"),
        }
    }
}

/// Vocabulary plus grammar; the checker every candidate goes through.
#[derive(Debug, Clone, PartialEq)]
pub struct Language {
    pub vocabulary: Vocabulary,
    pub grammar: Grammar,
}

impl Default for Language {
    fn default() -> Self {
        let vocabulary = default_vocabulary();
        let grammar = default_rules(&vocabulary);
        Self { vocabulary, grammar }
    }
}

impl Language {
    pub fn check(&self, expr: &Expr) -> Result<TypedExpr, TypeError> {
        type_check(expr, &self.vocabulary, &self.grammar)
    }

    pub fn compile(&self, source: &str) -> Result<TypedExpr, LanguageError> {
        let expr = parse(source)?;
        Ok(self.check(&expr)?)
    }

    pub fn validate(&self, source: &str) -> Verdict {
        match self.compile(source) {
            Ok(t) => Verdict::Accepted(t),
            Err(e) => Verdict::Rejected(e),
        }
    }

    /// Validate every `;`-separated stage; the first failure rejects all.
    pub fn validate_stages(&self, source: &str) -> Result<Vec<TypedExpr>, LanguageError> {
        parse_stages(source)?
            .iter()
            .map(|e| self.check(e).map_err(LanguageError::from))
            .collect()
    }
}

/// Parse and type-check against the default vocabulary and grammar.
pub fn validate_program(source: &str) -> Verdict {
    Language::default().validate(source)
}

/// Serializable summary of a verdict, as recorded in task traces.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerdictRecord {
    pub accepted: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

impl From<&Verdict> for VerdictRecord {
    fn from(v: &Verdict) -> Self {
        Self {
            accepted: v.is_accepted(),
            reason: v.reason(),
        }
    }
}
