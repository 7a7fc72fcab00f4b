//! Direct interpreter over the abstract model. Used as an oracle for
//! [`expand`](super::expand): it never builds a [`LinearExpr`](super::LinearExpr).

use std::collections::HashMap;

use crate::formula::{parse_domain, Expr, FormulaAst};
use crate::model::{validate, StructuredModel};

use super::{
    format_env, index_tuples, lookup, parse_function, ConcreteModel, ConstraintRelation, ExpandError, FEASIBILITY_TOL,
};

/// Values keyed by `(variable name, 1-based index tuple)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Assignment {
    values: HashMap<(String, Vec<usize>), f64>,
}

impl Assignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, name: &str, index: &[usize], value: f64) {
        self.values.insert((name.to_string(), index.to_vec()), value);
    }

    pub fn get(&self, name: &str, index: &[usize]) -> Option<f64> {
        self.values.get(&(name.to_string(), index.to_vec())).copied()
    }

    /// Keys a column vector by the instances of a concrete model.
    pub fn from_columns(model: &ConcreteModel, values: &[f64]) -> Self {
        let mut a = Self::new();
        for v in &model.variables {
            a.set(&v.def_name, &v.index_tuple, values[v.column_id]);
        }
        a
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintCheck {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub satisfied: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NaiveEvaluation {
    pub objective: f64,
    /// Same order and names as the expanded constraints.
    pub constraints: Vec<ConstraintCheck>,
}

impl NaiveEvaluation {
    pub fn all_satisfied(&self) -> bool {
        self.constraints.iter().all(|c| c.satisfied)
    }
}

struct Interp<'m> {
    model: &'m StructuredModel,
    set_sizes: HashMap<&'m str, usize>,
    assignment: &'m Assignment,
    component: &'m str,
}

impl Interp<'_> {
    fn err_unbound(&self, index: &str) -> ExpandError {
        ExpandError::UnboundIndex {
            component: self.component.to_string(),
            index: index.to_string(),
        }
    }

    fn eval(&self, e: &Expr, env: &mut Vec<(String, usize)>) -> Result<f64, ExpandError> {
        Ok(match e {
            Expr::Number(v) => *v,
            Expr::Ref { name, subscripts } => {
                let idx = subscripts
                    .iter()
                    .map(|s| lookup(env, s).ok_or_else(|| self.err_unbound(s)))
                    .collect::<Result<Vec<_>, _>>()?;
                let expected = if let Some(p) = self.model.parameter(name) {
                    parse_domain(&p.domain).map(|d| d.len()).unwrap_or(0)
                } else if let Some(v) = self.model.variable(name) {
                    parse_domain(&v.domain).map(|d| d.len()).unwrap_or(0)
                } else {
                    return Err(ExpandError::UnknownSymbol {
                        component: self.component.to_string(),
                        name: name.clone(),
                    });
                };
                if expected != idx.len() {
                    return Err(ExpandError::SubscriptArityMismatch {
                        component: self.component.to_string(),
                        name: name.clone(),
                        expected,
                        found: idx.len(),
                    });
                }
                let value = match self.model.parameter(name) {
                    Some(p) => p.data.get(&idx),
                    None => self.assignment.get(name, &idx),
                };
                value.ok_or_else(|| ExpandError::IndexOutOfRange {
                    component: self.component.to_string(),
                    name: name.clone(),
                    at: format_env(env),
                })?
            }
            Expr::Add(a, b) => self.eval(a, env)? + self.eval(b, env)?,
            Expr::Sub(a, b) => self.eval(a, env)? - self.eval(b, env)?,
            Expr::Mul(a, b) => self.eval(a, env)? * self.eval(b, env)?,
            Expr::Div(a, b) => {
                let d = self.eval(b, env)?;
                if d == 0.0 {
                    return Err(ExpandError::DivisionByZero {
                        component: self.component.to_string(),
                        at: format_env(env),
                    });
                }
                self.eval(a, env)? / d
            }
            Expr::Neg(a) => -self.eval(a, env)?,
            Expr::Sum { domain, body } => {
                let mut total = 0.0;
                let mut dims = Vec::new();
                for b in &domain.bindings {
                    dims.push(
                        *self
                            .set_sizes
                            .get(b.set_name.as_str())
                            .ok_or_else(|| ExpandError::UnknownSymbol {
                                component: self.component.to_string(),
                                name: b.set_name.clone(),
                            })?,
                    );
                }
                for tuple in index_tuples(&dims) {
                    for (b, i) in domain.bindings.iter().zip(&tuple) {
                        env.push((b.index.clone(), *i));
                    }
                    total += self.eval(body, env)?;
                    env.truncate(env.len() - domain.len());
                }
                total
            }
        })
    }
}

/// Evaluates the objective and every constraint instance of `model` under
/// `assignment` by recursive interpretation of the abstract formulas.
pub fn evaluate_naive(model: &StructuredModel, assignment: &Assignment) -> Result<NaiveEvaluation, ExpandError> {
    let violations = validate(model);
    if !violations.is_empty() {
        return Err(ExpandError::InvalidModel(violations));
    }
    let set_sizes: HashMap<&str, usize> = model.sets.iter().map(|s| (s.name.as_str(), s.size())).collect();
    let obj = model.objective().expect("validated model has one objective");
    let obj_asts = parse_function(&obj.name, &obj.function)?;
    let [FormulaAst::Expr(obj_expr)] = obj_asts.as_slice() else {
        return Err(ExpandError::ObjectiveNotExpression {
            component: obj.name.clone(),
        });
    };
    let objective = Interp {
        model,
        set_sizes: set_sizes.clone(),
        assignment,
        component: &obj.name,
    }
    .eval(obj_expr, &mut Vec::new())?;

    let mut constraints = Vec::new();
    for def in &model.constraints {
        let interp = Interp {
            model,
            set_sizes: set_sizes.clone(),
            assignment,
            component: &def.name,
        };
        let spec = parse_domain(&def.domain).map_err(|source| ExpandError::Formula {
            component: def.name.clone(),
            source: Box::new(source),
        })?;
        let dims: Vec<usize> = spec
            .bindings
            .iter()
            .map(|b| set_sizes.get(b.set_name.as_str()).copied().unwrap_or(0))
            .collect();
        let segments = parse_function(&def.name, &def.function)?;
        for tuple in index_tuples(&dims) {
            let mut env: Vec<(String, usize)> = spec
                .bindings
                .iter()
                .map(|b| b.index.clone())
                .zip(tuple.iter().copied())
                .collect();
            let suffix: String = tuple.iter().map(|i| format!("_{i}")).collect();
            for (s, seg) in segments.iter().enumerate() {
                let chain = seg.as_chain().ok_or_else(|| ExpandError::ConstraintNotComparison {
                    component: def.name.clone(),
                    segment: s + 1,
                })?;
                let values = chain
                    .operands
                    .iter()
                    .map(|o| interp.eval(o, &mut env))
                    .collect::<Result<Vec<_>, _>>()?;
                for (c, rel) in chain.relations.iter().enumerate() {
                    let (lhs, rhs) = (values[c], values[c + 1]);
                    constraints.push(ConstraintCheck {
                        name: format!("{}{suffix}_s{}_c{}", def.name, s + 1, c + 1),
                        lhs,
                        rhs,
                        satisfied: ConstraintRelation::from_relation(*rel).holds(lhs, rhs, FEASIBILITY_TOL),
                    });
                }
            }
        }
    }
    Ok(NaiveEvaluation { objective, constraints })
}
