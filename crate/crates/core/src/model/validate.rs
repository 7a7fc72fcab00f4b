use std::collections::HashMap;
use std::fmt;

use serde::Serialize;

use super::{ParamData, StructuredModel};
use crate::formula::{parse_domain, parse_formula, DomainSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum ViolationCode {
    InvalidIdentifier,
    DuplicateName,
    SetNotContiguous,
    InvalidDomain,
    UnknownSet,
    ScalarDomainMismatch,
    DimensionMismatch,
    MissingVariables,
    ObjectiveCount,
    InvalidFormula,
}

impl fmt::Display for ViolationCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// One broken schema rule; `path` locates it, e.g. `parameter[0].data[1]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub component: String,
    pub code: ViolationCode,
    pub path: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} ({}): {}", self.code, self.path, self.component, self.message)
    }
}

pub(crate) fn is_identifier(name: &str) -> bool {
    let mut chars = name.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

struct Checker<'m> {
    model: &'m StructuredModel,
    out: Vec<Violation>,
}

impl Checker<'_> {
    fn push(&mut self, component: &str, code: ViolationCode, path: String, message: String) {
        self.out.push(Violation {
            component: component.to_string(),
            code,
            path,
            message,
        });
    }

    fn set_size(&self, name: &str) -> Option<usize> {
        self.model.set(name).map(|s| s.size())
    }

    /// Parses a domain string and checks that its sets exist.
    fn domain(&mut self, component: &str, path: &str, text: &str) -> Option<DomainSpec> {
        match parse_domain(text) {
            Ok(spec) => {
                let mut ok = true;
                for b in &spec.bindings {
                    if self.set_size(&b.set_name).is_none() {
                        ok = false;
                        self.push(
                            component,
                            ViolationCode::UnknownSet,
                            format!("{path}.domain"),
                            format!("set `{}` is not declared", b.set_name),
                        );
                    }
                }
                ok.then_some(spec)
            }
            Err(e) => {
                self.push(
                    component,
                    ViolationCode::InvalidDomain,
                    format!("{path}.domain"),
                    e.kind.to_string(),
                );
                None
            }
        }
    }

    fn param_shape(&mut self, component: &str, path: String, data: &ParamData, dims: &[usize]) {
        match (data, dims.split_first()) {
            (ParamData::Scalar(_), None) => {}
            (ParamData::List(items), Some((&extent, rest))) => {
                if items.len() != extent {
                    self.push(
                        component,
                        ViolationCode::DimensionMismatch,
                        path.clone(),
                        format!("expected {extent} entries, found {}", items.len()),
                    );
                }
                for (k, item) in items.iter().enumerate() {
                    self.param_shape(component, format!("{path}[{k}]"), item, rest);
                }
            }
            (ParamData::Scalar(_), Some(_)) => self.push(
                component,
                ViolationCode::DimensionMismatch,
                path,
                format!("expected a list nested {} more level(s), found a number", dims.len()),
            ),
            (ParamData::List(_), None) => self.push(
                component,
                ViolationCode::DimensionMismatch,
                path,
                "expected a number, found a list".into(),
            ),
        }
    }

    fn formula(&mut self, component: &str, path: String, text: &str) {
        if let Err(e) = parse_formula(text) {
            self.push(component, ViolationCode::InvalidFormula, path, e.to_string());
        }
    }
}

/// Checks every schema rule and returns the violations found; an empty list
/// means the model is well-formed.
pub fn validate(model: &StructuredModel) -> Vec<Violation> {
    let mut c = Checker { model, out: Vec::new() };

    let mut names: Vec<(String, String)> = Vec::new();
    names.extend(
        model
            .sets
            .iter()
            .enumerate()
            .map(|(k, s)| (s.name.clone(), format!("set[{k}]"))),
    );
    names.extend(
        model
            .parameters
            .iter()
            .enumerate()
            .map(|(k, p)| (p.name.clone(), format!("parameter[{k}]"))),
    );
    names.extend(
        model
            .variables
            .iter()
            .enumerate()
            .map(|(k, v)| (v.name.clone(), format!("variable[{k}]"))),
    );
    names.extend(
        model
            .objectives
            .iter()
            .enumerate()
            .map(|(k, o)| (o.name.clone(), format!("objective[{k}]"))),
    );
    names.extend(
        model
            .constraints
            .iter()
            .enumerate()
            .map(|(k, x)| (x.name.clone(), format!("constraint[{k}]"))),
    );

    let mut first_seen: HashMap<&str, &str> = HashMap::new();
    for (name, path) in &names {
        if !is_identifier(name) {
            c.push(
                name,
                ViolationCode::InvalidIdentifier,
                format!("{path}.name"),
                format!("`{name}` is not a valid identifier"),
            );
        }
        if let Some(prev) = first_seen.get(name.as_str()) {
            c.push(
                name,
                ViolationCode::DuplicateName,
                format!("{path}.name"),
                format!("name already used by {prev}"),
            );
        } else {
            first_seen.insert(name, path);
        }
    }

    for (k, set) in model.sets.iter().enumerate() {
        let contiguous = !set.data.is_empty() && set.data.iter().enumerate().all(|(pos, &v)| v == pos as i64 + 1);
        if !contiguous {
            c.push(
                &set.name,
                ViolationCode::SetNotContiguous,
                format!("set[{k}].data"),
                "set data must be 1, 2, ..., n with n >= 1".into(),
            );
        }
    }

    for (k, p) in model.parameters.iter().enumerate() {
        let path = format!("parameter[{k}]");
        let Some(spec) = c.domain(&p.name, &path, &p.domain) else {
            continue;
        };
        if spec.is_empty() != p.data.is_scalar() {
            c.push(
                &p.name,
                ViolationCode::ScalarDomainMismatch,
                format!("{path}.data"),
                if spec.is_empty() {
                    "empty domain requires scalar data".into()
                } else {
                    "indexed parameter requires list data".into()
                },
            );
            continue;
        }
        let dims: Vec<usize> = spec.bindings.iter().filter_map(|b| c.set_size(&b.set_name)).collect();
        c.param_shape(&p.name, format!("{path}.data"), &p.data, &dims);
    }

    if model.variables.is_empty() {
        c.push(
            "variable",
            ViolationCode::MissingVariables,
            "variable".into(),
            "at least one variable is required".into(),
        );
    }
    for (k, v) in model.variables.iter().enumerate() {
        c.domain(&v.name, &format!("variable[{k}]"), &v.domain);
    }

    if model.objectives.len() != 1 {
        c.push(
            "objective",
            ViolationCode::ObjectiveCount,
            "objective".into(),
            format!("exactly one objective is required, found {}", model.objectives.len()),
        );
    }
    for (k, o) in model.objectives.iter().enumerate() {
        c.formula(&o.name, format!("objective[{k}].function"), &o.function);
    }

    for (k, con) in model.constraints.iter().enumerate() {
        let path = format!("constraint[{k}]");
        c.domain(&con.name, &path, &con.domain);
        c.formula(&con.name, format!("{path}.function"), &con.function);
    }

    c.out
}
