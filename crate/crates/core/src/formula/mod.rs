//! The formula mini-language used in objective and constraint functions.
//!
//! Formulas are plain arithmetic over numbers and subscripted references
//! (`c_{i}`, `x_{i,j}`), with `<sum>_{i <in> I}` summations and optional
//! comparison chains (`0 <= x_{i} <= 5`). A single function string may hold
//! several comma-separated formulas; each becomes its own [`FormulaAst`].
//! Domain strings such as `{a <in> Aircraft}` share the same lexer.

mod lexer;
mod parser;
mod printer;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use parser::{parse_domain, parse_formula};
pub use printer::{print_expr, print_formula, print_formulas};

/// One `index <in> Set` pair.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct IndexBinding {
    pub index: String,
    pub set_name: String,
}

impl IndexBinding {
    pub fn new(index: impl Into<String>, set_name: impl Into<String>) -> Self {
        Self {
            index: index.into(),
            set_name: set_name.into(),
        }
    }
}

/// Ordered index bindings of a component domain or a summation.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DomainSpec {
    pub bindings: Vec<IndexBinding>,
}

impl DomainSpec {
    pub fn new(bindings: Vec<IndexBinding>) -> Self {
        Self { bindings }
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn indices(&self) -> impl Iterator<Item = &str> {
        self.bindings.iter().map(|b| b.index.as_str())
    }

    /// Canonical text, e.g. `{i <in> I, j <in> J}`; empty for no bindings.
    pub fn to_domain_string(&self) -> String {
        if self.bindings.is_empty() {
            return String::new();
        }
        format!("{{{}}}", self.binding_list())
    }

    pub(crate) fn binding_list(&self) -> String {
        self.bindings
            .iter()
            .map(|b| format!("{} <in> {}", b.index, b.set_name))
            .collect::<Vec<_>>()
            .join(", ")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Relation {
    Le,
    Ge,
    Lt,
    Gt,
    Eq,
}

impl Relation {
    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Le => "<=",
            Relation::Ge => ">=",
            Relation::Lt => "<",
            Relation::Gt => ">",
            Relation::Eq => "=",
        }
    }

    /// The relation that holds after swapping both sides (`a <= b` iff `b >= a`).
    pub fn mirrored(self) -> Relation {
        match self {
            Relation::Le => Relation::Ge,
            Relation::Ge => Relation::Le,
            Relation::Lt => Relation::Gt,
            Relation::Gt => Relation::Lt,
            Relation::Eq => Relation::Eq,
        }
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// Arithmetic expression node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Expr {
    Number(f64),
    Ref { name: String, subscripts: Vec<String> },
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    Sum { domain: DomainSpec, body: Box<Expr> },
}

impl Expr {
    pub fn number(v: f64) -> Expr {
        Expr::Number(v)
    }

    pub fn reference(name: &str, subscripts: &[&str]) -> Expr {
        Expr::Ref {
            name: name.to_string(),
            subscripts: subscripts.iter().map(|s| s.to_string()).collect(),
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn mul(a: Expr, b: Expr) -> Expr {
        Expr::Mul(Box::new(a), Box::new(b))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn add(a: Expr, b: Expr) -> Expr {
        Expr::Add(Box::new(a), Box::new(b))
    }

    pub fn sum(bindings: Vec<IndexBinding>, body: Expr) -> Expr {
        Expr::Sum {
            domain: DomainSpec::new(bindings),
            body: Box::new(body),
        }
    }

    /// Visits every node in pre-order.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a Expr)) {
        f(self);
        match self {
            Expr::Number(_) | Expr::Ref { .. } => {}
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.walk(f);
                b.walk(f);
            }
            Expr::Neg(a) => a.walk(f),
            Expr::Sum { body, .. } => body.walk(f),
        }
    }

    pub fn walk_mut(&mut self, f: &mut impl FnMut(&mut Expr)) {
        f(self);
        match self {
            Expr::Number(_) | Expr::Ref { .. } => {}
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.walk_mut(f);
                b.walk_mut(f);
            }
            Expr::Neg(a) => a.walk_mut(f),
            Expr::Sum { body, .. } => body.walk_mut(f),
        }
    }

    fn collect_free(&self, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
        match self {
            Expr::Number(_) => {}
            Expr::Ref { subscripts, .. } => {
                for s in subscripts {
                    if !bound.iter().any(|b| b == s) {
                        out.insert(s.clone());
                    }
                }
            }
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.collect_free(bound, out);
                b.collect_free(bound, out);
            }
            Expr::Neg(a) => a.collect_free(bound, out),
            Expr::Sum { domain, body } => {
                let depth = bound.len();
                bound.extend(domain.indices().map(str::to_string));
                body.collect_free(bound, out);
                bound.truncate(depth);
            }
        }
    }
}

/// Comparison chain `e0 r0 e1 r1 e2 ...`; only ever the root of a formula.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareChain {
    pub operands: Vec<Expr>,
    pub relations: Vec<Relation>,
}

impl CompareChain {
    /// Consecutive `(lhs, relation, rhs)` links.
    pub fn links(&self) -> impl Iterator<Item = (&Expr, Relation, &Expr)> {
        self.relations
            .iter()
            .enumerate()
            .map(|(k, r)| (&self.operands[k], *r, &self.operands[k + 1]))
    }
}

/// Root of one parsed formula segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FormulaAst {
    Expr(Expr),
    Compare(CompareChain),
}

impl FormulaAst {
    pub fn expressions(&self) -> Vec<&Expr> {
        match self {
            FormulaAst::Expr(e) => vec![e],
            FormulaAst::Compare(c) => c.operands.iter().collect(),
        }
    }

    pub fn expressions_mut(&mut self) -> Vec<&mut Expr> {
        match self {
            FormulaAst::Expr(e) => vec![e],
            FormulaAst::Compare(c) => c.operands.iter_mut().collect(),
        }
    }

    pub fn as_chain(&self) -> Option<&CompareChain> {
        match self {
            FormulaAst::Compare(c) => Some(c),
            FormulaAst::Expr(_) => None,
        }
    }
}

/// Subscript identifiers not bound by an enclosing summation.
pub fn free_indices(ast: &FormulaAst) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for e in ast.expressions() {
        e.collect_free(&mut Vec::new(), &mut out);
    }
    out
}

/// Free indices of a bare expression.
pub fn free_indices_expr(expr: &Expr) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    expr.collect_free(&mut Vec::new(), &mut out);
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FormulaErrorKind {
    UnexpectedChar(char),
    InvalidNumber(String),
    UnexpectedToken { expected: String, found: String },
    UnexpectedEnd { expected: String },
    EmptyFormula,
    UnsupportedNumericSubscript,
    UnsupportedParametrizedSumDomain,
    UnsupportedSumFilter,
    NestedDomain,
    MalformedDomain(String),
    MissingIn,
    DuplicateIndex(String),
    IndexShadowsSet(String),
}

impl fmt::Display for FormulaErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FormulaErrorKind::UnexpectedChar(c) => write!(f, "unexpected character `{c}`"),
            FormulaErrorKind::InvalidNumber(t) => write!(f, "invalid number `{t}`"),
            FormulaErrorKind::UnexpectedToken { expected, found } => {
                write!(f, "expected {expected}, found {found}")
            }
            FormulaErrorKind::UnexpectedEnd { expected } => {
                write!(f, "unexpected end of input, expected {expected}")
            }
            FormulaErrorKind::EmptyFormula => write!(f, "empty formula segment"),
            FormulaErrorKind::UnsupportedNumericSubscript => {
                write!(f, "numeric subscripts are not supported")
            }
            FormulaErrorKind::UnsupportedParametrizedSumDomain => {
                write!(f, "summation over a subscripted set is not supported")
            }
            FormulaErrorKind::UnsupportedSumFilter => {
                write!(f, "filtered summation domains are not supported")
            }
            FormulaErrorKind::NestedDomain => write!(f, "nested braces in index domain"),
            FormulaErrorKind::MalformedDomain(m) => write!(f, "malformed domain: {m}"),
            FormulaErrorKind::MissingIn => write!(f, "expected `<in>` in index binding"),
            FormulaErrorKind::DuplicateIndex(i) => write!(f, "index `{i}` bound twice"),
            FormulaErrorKind::IndexShadowsSet(i) => {
                write!(f, "index `{i}` has the same name as its set")
            }
        }
    }
}

/// Parse failure with byte offset and a caret excerpt of the source.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{kind} at byte {offset}\n  {source_line}\n  {caret}")]
pub struct FormulaError {
    pub kind: FormulaErrorKind,
    pub offset: usize,
    source_line: String,
    caret: String,
}

impl FormulaError {
    pub(crate) fn new(kind: FormulaErrorKind, src: &str, offset: usize) -> Self {
        let offset = offset.min(src.len());
        let col = src[..offset].chars().count();
        Self {
            kind,
            offset,
            source_line: src.replace(['\n', '\r'], " "),
            caret: format!("{}^", " ".repeat(col)),
        }
    }

    pub fn excerpt(&self) -> String {
        format!("{}\n{}", self.source_line, self.caret)
    }
}
