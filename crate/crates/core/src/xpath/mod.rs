//! An XPath 1.0 subset.
//!
//! Supported: absolute and relative location paths over the child and
//! attribute axes, the `//` shortcut, `*`, `.`, `..`, `text()`, predicates,
//! `=`, `!=`, `<`, `<=`, `>`, `>=`, `and`, `or`, string and number literals,
//! and the functions `count`, `not`, `name`, `string`, `number`, `concat`,
//! `position` and `last`. Anything else is rejected when the expression is
//! parsed, never when it is evaluated.

pub(crate) mod eval;
mod lexer;
mod parser;

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

pub use eval::{number_to_string, string_to_number, Context, NodeRef, Value};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum XPathError {
    #[error("unexpected character {found:?} at offset {offset}")]
    UnexpectedChar { found: char, offset: usize },
    #[error("unterminated string literal at offset {0}")]
    UnterminatedLiteral(usize),
    #[error("unexpected {found} at offset {offset}")]
    UnexpectedToken { found: String, offset: usize },
    #[error("unexpected end of expression")]
    UnexpectedEnd,
    #[error("unsupported expression: {0}")]
    Unsupported(String),
    #[error("function {name}() {problem}")]
    BadArguments { name: &'static str, problem: &'static str },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CompareOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CompareOp {
    fn symbol(self) -> &'static str {
        match self {
            CompareOp::Eq => "=",
            CompareOp::Ne => "!=",
            CompareOp::Lt => "<",
            CompareOp::Le => "<=",
            CompareOp::Gt => ">",
            CompareOp::Ge => ">=",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Function {
    Count,
    Not,
    Name,
    String,
    Number,
    Concat,
    Position,
    Last,
}

impl Function {
    fn lookup(name: &str) -> Option<Function> {
        Some(match name {
            "count" => Function::Count,
            "not" => Function::Not,
            "name" => Function::Name,
            "string" => Function::String,
            "number" => Function::Number,
            "concat" => Function::Concat,
            "position" => Function::Position,
            "last" => Function::Last,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Function::Count => "count",
            Function::Not => "not",
            Function::Name => "name",
            Function::String => "string",
            Function::Number => "number",
            Function::Concat => "concat",
            Function::Position => "position",
            Function::Last => "last",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Child,
    Attribute,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NodeTest {
    Name(String),
    Any,
    Text,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Step {
    /// `.`
    SelfNode,
    /// `..`
    Parent,
    /// The implicit `descendant-or-self::node()` step written as `//`.
    DescendantOrSelf,
    Axis {
        axis: Axis,
        test: NodeTest,
        predicates: Vec<Expr>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocationPath {
    pub absolute: bool,
    pub steps: Vec<Step>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Or(Box<Expr>, Box<Expr>),
    And(Box<Expr>, Box<Expr>),
    Compare(CompareOp, Box<Expr>, Box<Expr>),
    Literal(String),
    Number(f64),
    Call(Function, Vec<Expr>),
    Path(LocationPath),
}

/// A parsed, immutable XPath expression.
#[derive(Debug, Clone, PartialEq)]
pub struct XPath {
    expr: Expr,
}

impl XPath {
    pub fn parse(source: &str) -> Result<XPath, XPathError> {
        parser::parse(source).map(|expr| XPath { expr })
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    pub fn as_path(&self) -> Option<&LocationPath> {
        match &self.expr {
            Expr::Path(p) => Some(p),
            _ => None,
        }
    }

    pub fn evaluate(&self, doc: &crate::xml::Document, context: Context) -> Value {
        eval::evaluate(doc, &self.expr, context)
    }

    /// Evaluates with `node` as the context node, position 1 of 1.
    pub fn evaluate_at(&self, doc: &crate::xml::Document, node: NodeRef) -> Value {
        self.evaluate(doc, Context::single(node))
    }
}

impl fmt::Display for XPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.expr.fmt(f)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Or(l, r) => write!(f, "({l} or {r})"),
            Expr::And(l, r) => write!(f, "({l} and {r})"),
            Expr::Compare(op, l, r) => write!(f, "({l} {} {r})", op.symbol()),
            Expr::Literal(s) if s.contains('\'') => write!(f, "\"{s}\""),
            Expr::Literal(s) => write!(f, "'{s}'"),
            Expr::Number(n) => f.write_str(&number_to_string(*n)),
            Expr::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    a.fmt(f)?;
                }
                f.write_str(")")
            }
            Expr::Path(p) => p.fmt(f),
        }
    }
}

impl fmt::Display for LocationPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.absolute {
            f.write_str("/")?;
        }
        for (i, step) in self.steps.iter().enumerate() {
            if i > 0 {
                f.write_str("/")?;
            }
            step.fmt(f)?;
        }
        Ok(())
    }
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Step::SelfNode => f.write_str("."),
            Step::Parent => f.write_str(".."),
            Step::DescendantOrSelf => Ok(()),
            Step::Axis { axis, test, predicates } => {
                if *axis == Axis::Attribute {
                    f.write_str("@")?;
                }
                match test {
                    NodeTest::Name(n) => f.write_str(n)?,
                    NodeTest::Any => f.write_str("*")?,
                    NodeTest::Text => f.write_str("text()")?,
                }
                for p in predicates {
                    write!(f, "[{p}]")?;
                }
                Ok(())
            }
        }
    }
}
