//! Expansion of an abstract [`StructuredModel`] into a concrete LP/MIP.
//!
//! Every variable definition becomes one column per index tuple of its
//! domain, sums are unrolled over set data and parameters are substituted by
//! value. Constraints are emitted once per domain tuple, comma segment and
//! chain link.

mod lp;
mod naive;

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::formula::{parse_domain, parse_formula, DomainSpec, Expr, FormulaAst, FormulaError, Relation};
use crate::model::{validate, ParamData, Sense, StructuredModel, VarType, Violation};

pub use lp::emit_lp;
pub use naive::{evaluate_naive, Assignment, ConstraintCheck, NaiveEvaluation};

/// Satisfaction tolerance used when checking constraints against values.
pub const FEASIBILITY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VarInstance {
    pub def_name: String,
    /// 1-based positions within each domain set.
    pub index_tuple: Vec<usize>,
    pub vartype: VarType,
    pub column_id: usize,
}

impl VarInstance {
    /// LP-safe column name: `x` or `x_1_2`.
    pub fn lp_name(&self) -> String {
        let mut name = self.def_name.clone();
        for i in &self.index_tuple {
            name.push('_');
            name.push_str(&i.to_string());
        }
        name
    }

    pub fn upper_bound(&self) -> f64 {
        match self.vartype {
            VarType::Binary => 1.0,
            _ => f64::INFINITY,
        }
    }
}

/// Sparse affine expression over column ids. Zero coefficients are never stored.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct LinearExpr {
    pub coefficients: BTreeMap<usize, f64>,
    pub constant: f64,
}

impl LinearExpr {
    pub fn constant(value: f64) -> Self {
        Self {
            coefficients: BTreeMap::new(),
            constant: value,
        }
    }

    pub fn column(id: usize) -> Self {
        Self {
            coefficients: BTreeMap::from([(id, 1.0)]),
            constant: 0.0,
        }
    }

    pub fn is_constant(&self) -> bool {
        self.coefficients.is_empty()
    }

    pub fn add_term(&mut self, column: usize, coef: f64) {
        let entry = self.coefficients.entry(column).or_insert(0.0);
        *entry += coef;
        if *entry == 0.0 {
            self.coefficients.remove(&column);
        }
    }

    pub fn add_scaled(&mut self, other: &LinearExpr, factor: f64) {
        for (&col, &c) in &other.coefficients {
            self.add_term(col, c * factor);
        }
        self.constant += other.constant * factor;
    }

    pub fn scale(&mut self, factor: f64) {
        if factor == 0.0 {
            self.coefficients.clear();
        } else {
            self.coefficients.values_mut().for_each(|c| *c *= factor);
            self.coefficients.retain(|_, c| *c != 0.0);
        }
        self.constant *= factor;
    }

    pub fn evaluate(&self, values: &[f64]) -> f64 {
        self.constant + self.coefficients.iter().map(|(&col, &c)| c * values[col]).sum::<f64>()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum ConstraintRelation {
    Le,
    Ge,
    Eq,
}

impl ConstraintRelation {
    pub fn symbol(self) -> &'static str {
        match self {
            ConstraintRelation::Le => "<=",
            ConstraintRelation::Ge => ">=",
            ConstraintRelation::Eq => "=",
        }
    }

    pub fn holds(self, lhs: f64, rhs: f64, tol: f64) -> bool {
        match self {
            ConstraintRelation::Le => lhs <= rhs + tol,
            ConstraintRelation::Ge => lhs >= rhs - tol,
            ConstraintRelation::Eq => (lhs - rhs).abs() <= tol,
        }
    }

    /// Strict relations collapse to their non-strict counterparts.
    pub fn from_relation(rel: Relation) -> Self {
        match rel {
            Relation::Le | Relation::Lt => ConstraintRelation::Le,
            Relation::Ge | Relation::Gt => ConstraintRelation::Ge,
            Relation::Eq => ConstraintRelation::Eq,
        }
    }
}

/// `lhs relation rhs` with all constants folded into `rhs`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConcreteConstraint {
    pub name: String,
    pub lhs: LinearExpr,
    pub relation: ConstraintRelation,
    pub rhs: f64,
}

impl ConcreteConstraint {
    pub fn is_satisfied(&self, values: &[f64], tol: f64) -> bool {
        self.relation.holds(self.lhs.evaluate(values), self.rhs, tol)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConcreteModel {
    pub variables: Vec<VarInstance>,
    pub sense: Sense,
    pub objective_name: String,
    pub objective: LinearExpr,
    pub constraints: Vec<ConcreteConstraint>,
    /// Notes such as strict relations that were relaxed.
    pub warnings: Vec<String>,
}

impl ConcreteModel {
    pub fn num_columns(&self) -> usize {
        self.variables.len()
    }

    pub fn objective_value(&self, values: &[f64]) -> f64 {
        self.objective.evaluate(values)
    }
}

#[derive(Debug, Error)]
pub enum ExpandError {
    #[error("model has {} violation(s); first: {}", .0.len(), .0.first().map(|v| v.to_string()).unwrap_or_default())]
    InvalidModel(Vec<Violation>),
    #[error("{component}: {source}")]
    Formula {
        component: String,
        #[source]
        source: Box<FormulaError>,
    },
    #[error("{component}: nonlinear term `{term}`")]
    NonlinearTerm { component: String, term: String },
    #[error("{component}: unknown symbol `{name}`")]
    UnknownSymbol { component: String, name: String },
    #[error("{component}: `{name}` expects {expected} subscript(s), found {found}")]
    SubscriptArityMismatch {
        component: String,
        name: String,
        expected: usize,
        found: usize,
    },
    #[error("{component}: index `{index}` is not bound")]
    UnboundIndex { component: String, index: String },
    #[error("{component}: `{name}` indexed out of range at ({at})")]
    IndexOutOfRange {
        component: String,
        name: String,
        at: String,
    },
    #[error("{component}: division by zero at ({at})")]
    DivisionByZero { component: String, at: String },
    #[error("{component}: objective must be a single expression without comparisons")]
    ObjectiveNotExpression { component: String },
    #[error("{component}: constraint segment {segment} has no comparison")]
    ConstraintNotComparison { component: String, segment: usize },
}

/// Resolved set sizes, parameters and variable column layouts.
pub(crate) struct SymbolTable<'m> {
    pub sets: HashMap<&'m str, usize>,
    pub params: HashMap<&'m str, (Vec<usize>, &'m ParamData)>,
    pub vars: HashMap<&'m str, VarLayout>,
    pub instances: Vec<VarInstance>,
}

pub(crate) struct VarLayout {
    pub offset: usize,
    pub dims: Vec<usize>,
}

impl VarLayout {
    /// Column for a 1-based index tuple, row-major.
    pub fn column(&self, index: &[usize]) -> Option<usize> {
        let mut col = 0;
        for (&i, &d) in index.iter().zip(&self.dims) {
            if i == 0 || i > d {
                return None;
            }
            col = col * d + (i - 1);
        }
        Some(self.offset + col)
    }
}

fn domain_dims(spec: &DomainSpec, sets: &HashMap<&str, usize>) -> Vec<usize> {
    spec.bindings
        .iter()
        .map(|b| sets.get(b.set_name.as_str()).copied().unwrap_or(0))
        .collect()
}

/// All 1-based tuples of the cartesian product in lexicographic order.
pub(crate) fn index_tuples(dims: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for &d in dims {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (1..=d).map(move |i| {
                    let mut t = prefix.clone();
                    t.push(i);
                    t
                })
            })
            .collect();
    }
    out
}

impl<'m> SymbolTable<'m> {
    pub fn build(model: &'m StructuredModel) -> Result<Self, ExpandError> {
        let violations = validate(model);
        if !violations.is_empty() {
            return Err(ExpandError::InvalidModel(violations));
        }
        let sets: HashMap<&str, usize> = model.sets.iter().map(|s| (s.name.as_str(), s.size())).collect();
        let mut params = HashMap::new();
        for p in &model.parameters {
            let spec = parse_domain(&p.domain).map_err(|source| ExpandError::Formula {
                component: p.name.clone(),
                source: Box::new(source),
            })?;
            params.insert(p.name.as_str(), (domain_dims(&spec, &sets), &p.data));
        }
        let mut vars = HashMap::new();
        let mut instances = Vec::new();
        for v in &model.variables {
            let spec = parse_domain(&v.domain).map_err(|source| ExpandError::Formula {
                component: v.name.clone(),
                source: Box::new(source),
            })?;
            let dims = domain_dims(&spec, &sets);
            let offset = instances.len();
            for tuple in index_tuples(&dims) {
                instances.push(VarInstance {
                    def_name: v.name.clone(),
                    index_tuple: tuple,
                    vartype: v.vartype,
                    column_id: instances.len(),
                });
            }
            vars.insert(v.name.as_str(), VarLayout { offset, dims });
        }
        Ok(Self {
            sets,
            params,
            vars,
            instances,
        })
    }
}

pub(crate) fn format_env(env: &[(String, usize)]) -> String {
    env.iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect::<Vec<_>>()
        .join(", ")
}

pub(crate) fn lookup(env: &[(String, usize)], index: &str) -> Option<usize> {
    env.iter().rev().find(|(k, _)| k == index).map(|(_, v)| *v)
}

struct Linearizer<'a, 'm> {
    table: &'a SymbolTable<'m>,
    component: &'a str,
}

impl Linearizer<'_, '_> {
    fn resolve(&self, subscripts: &[String], env: &[(String, usize)]) -> Result<Vec<usize>, ExpandError> {
        subscripts
            .iter()
            .map(|s| {
                lookup(env, s).ok_or_else(|| ExpandError::UnboundIndex {
                    component: self.component.to_string(),
                    index: s.clone(),
                })
            })
            .collect()
    }

    fn arity(&self, name: &str, expected: usize, found: usize) -> Result<(), ExpandError> {
        if expected == found {
            Ok(())
        } else {
            Err(ExpandError::SubscriptArityMismatch {
                component: self.component.to_string(),
                name: name.to_string(),
                expected,
                found,
            })
        }
    }

    fn out_of_range(&self, name: &str, env: &[(String, usize)]) -> ExpandError {
        ExpandError::IndexOutOfRange {
            component: self.component.to_string(),
            name: name.to_string(),
            at: format_env(env),
        }
    }

    fn nonlinear(&self, e: &Expr) -> ExpandError {
        ExpandError::NonlinearTerm {
            component: self.component.to_string(),
            term: crate::formula::print_expr(e),
        }
    }

    fn linearize(&self, e: &Expr, env: &mut Vec<(String, usize)>) -> Result<LinearExpr, ExpandError> {
        Ok(match e {
            Expr::Number(v) => LinearExpr::constant(*v),
            Expr::Ref { name, subscripts } => {
                if let Some((dims, data)) = self.table.params.get(name.as_str()) {
                    self.arity(name, dims.len(), subscripts.len())?;
                    let idx = self.resolve(subscripts, env)?;
                    let value = data.get(&idx).ok_or_else(|| self.out_of_range(name, env))?;
                    LinearExpr::constant(value)
                } else if let Some(layout) = self.table.vars.get(name.as_str()) {
                    self.arity(name, layout.dims.len(), subscripts.len())?;
                    let idx = self.resolve(subscripts, env)?;
                    let col = layout.column(&idx).ok_or_else(|| self.out_of_range(name, env))?;
                    LinearExpr::column(col)
                } else {
                    return Err(ExpandError::UnknownSymbol {
                        component: self.component.to_string(),
                        name: name.clone(),
                    });
                }
            }
            Expr::Add(a, b) => {
                let mut l = self.linearize(a, env)?;
                l.add_scaled(&self.linearize(b, env)?, 1.0);
                l
            }
            Expr::Sub(a, b) => {
                let mut l = self.linearize(a, env)?;
                l.add_scaled(&self.linearize(b, env)?, -1.0);
                l
            }
            Expr::Neg(a) => {
                let mut l = self.linearize(a, env)?;
                l.scale(-1.0);
                l
            }
            Expr::Mul(a, b) => {
                let l = self.linearize(a, env)?;
                let r = self.linearize(b, env)?;
                match (l.is_constant(), r.is_constant()) {
                    (true, _) => {
                        let mut r = r;
                        r.scale(l.constant);
                        r
                    }
                    (false, true) => {
                        let mut l = l;
                        l.scale(r.constant);
                        l
                    }
                    (false, false) => return Err(self.nonlinear(e)),
                }
            }
            Expr::Div(a, b) => {
                let r = self.linearize(b, env)?;
                if !r.is_constant() {
                    return Err(self.nonlinear(e));
                }
                if r.constant == 0.0 {
                    return Err(ExpandError::DivisionByZero {
                        component: self.component.to_string(),
                        at: format_env(env),
                    });
                }
                let mut l = self.linearize(a, env)?;
                l.scale(1.0 / r.constant);
                l
            }
            Expr::Sum { domain, body } => {
                let mut acc = LinearExpr::default();
                let dims: Vec<usize> =
                    domain
                        .bindings
                        .iter()
                        .map(|b| {
                            self.table.sets.get(b.set_name.as_str()).copied().ok_or_else(|| {
                                ExpandError::UnknownSymbol {
                                    component: self.component.to_string(),
                                    name: b.set_name.clone(),
                                }
                            })
                        })
                        .collect::<Result<_, _>>()?;
                let depth = env.len();
                for tuple in index_tuples(&dims) {
                    env.truncate(depth);
                    env.extend(domain.bindings.iter().map(|b| b.index.clone()).zip(tuple));
                    acc.add_scaled(&self.linearize(body, env)?, 1.0);
                }
                env.truncate(depth);
                acc
            }
        })
    }
}

fn component_domain(
    table: &SymbolTable<'_>,
    component: &str,
    text: &str,
) -> Result<(DomainSpec, Vec<Vec<usize>>), ExpandError> {
    let spec = parse_domain(text).map_err(|source| ExpandError::Formula {
        component: component.to_string(),
        source: Box::new(source),
    })?;
    let tuples = index_tuples(&domain_dims(&spec, &table.sets));
    Ok((spec, tuples))
}

pub(crate) fn parse_function(component: &str, text: &str) -> Result<Vec<FormulaAst>, ExpandError> {
    parse_formula(text).map_err(|source| ExpandError::Formula {
        component: component.to_string(),
        source: Box::new(source),
    })
}

/// Expands a validated model into its concrete program.
pub fn expand(model: &StructuredModel) -> Result<ConcreteModel, ExpandError> {
    let table = SymbolTable::build(model)?;
    let objective_def = model.objective().expect("validated model has one objective");

    let obj_asts = parse_function(&objective_def.name, &objective_def.function)?;
    let obj_expr = match obj_asts.as_slice() {
        [FormulaAst::Expr(e)] => e,
        _ => {
            return Err(ExpandError::ObjectiveNotExpression {
                component: objective_def.name.clone(),
            })
        }
    };
    let objective = Linearizer {
        table: &table,
        component: &objective_def.name,
    }
    .linearize(obj_expr, &mut Vec::new())?;

    let mut constraints = Vec::new();
    let mut warnings = Vec::new();
    for def in &model.constraints {
        let (spec, tuples) = component_domain(&table, &def.name, &def.domain)?;
        let segments = parse_function(&def.name, &def.function)?;
        let mut chains = Vec::with_capacity(segments.len());
        for (s, seg) in segments.iter().enumerate() {
            let chain = seg.as_chain().ok_or_else(|| ExpandError::ConstraintNotComparison {
                component: def.name.clone(),
                segment: s + 1,
            })?;
            for (c, rel) in chain.relations.iter().enumerate() {
                if matches!(rel, Relation::Lt | Relation::Gt) {
                    warnings.push(format!(
                        "constraint `{}` segment {} link {}: strict `{}` relaxed to `{}`",
                        def.name,
                        s + 1,
                        c + 1,
                        rel.symbol(),
                        ConstraintRelation::from_relation(*rel).symbol()
                    ));
                }
            }
            chains.push(chain);
        }
        let lin = Linearizer {
            table: &table,
            component: &def.name,
        };
        for tuple in &tuples {
            let mut env: Vec<(String, usize)> = spec
                .bindings
                .iter()
                .map(|b| b.index.clone())
                .zip(tuple.iter().copied())
                .collect();
            let mut base = def.name.clone();
            for i in tuple {
                base.push('_');
                base.push_str(&i.to_string());
            }
            for (s, chain) in chains.iter().enumerate() {
                let operands = chain
                    .operands
                    .iter()
                    .map(|o| lin.linearize(o, &mut env))
                    .collect::<Result<Vec<_>, _>>()?;
                for (c, rel) in chain.relations.iter().enumerate() {
                    let mut lhs = operands[c].clone();
                    lhs.add_scaled(&operands[c + 1], -1.0);
                    let rhs = -lhs.constant;
                    lhs.constant = 0.0;
                    constraints.push(ConcreteConstraint {
                        name: format!("{base}_s{}_c{}", s + 1, c + 1),
                        lhs,
                        relation: ConstraintRelation::from_relation(*rel),
                        rhs: if rhs == 0.0 { 0.0 } else { rhs },
                    });
                }
            }
        }
    }

    Ok(ConcreteModel {
        variables: table.instances,
        sense: objective_def.sense,
        objective_name: objective_def.name.clone(),
        objective,
        constraints,
        warnings,
    })
}

impl fmt::Display for LinearExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (col, c) in &self.coefficients {
            if !first {
                f.write_str(" + ")?;
            }
            write!(f, "{c}*c{col}")?;
            first = false;
        }
        if self.constant != 0.0 || first {
            if !first {
                f.write_str(" + ")?;
            }
            write!(f, "{}", self.constant)?;
        }
        Ok(())
    }
}
