//! Structured abstract models: sets, parameters, variables, objective and
//! constraints, with their instance data attached.
//!
//! The on-disk form is a JSON object with the lowercase keys `set`,
//! `parameter`, `variable`, `objective` and `constraint`.

mod fragments;
mod markdown;
mod validate;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

pub use fragments::{assemble_model, model_fragments, LayerFragments};
pub use markdown::render_markdown;
pub use validate::{validate, Violation, ViolationCode};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SetDef {
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub data: Vec<i64>,
}

impl SetDef {
    pub fn new(name: &str, description: &str, size: usize) -> Self {
        Self {
            name: name.into(),
            description: description.into(),
            data: (1..=size as i64).collect(),
        }
    }

    pub fn size(&self) -> usize {
        self.data.len()
    }
}

/// Parameter data: a scalar for an empty domain, otherwise nested lists.
#[derive(Debug, Clone, PartialEq)]
pub enum ParamData {
    Scalar(f64),
    List(Vec<ParamData>),
}

impl ParamData {
    pub fn from_vec(values: &[f64]) -> Self {
        ParamData::List(values.iter().copied().map(ParamData::Scalar).collect())
    }

    pub fn from_matrix(rows: &[Vec<f64>]) -> Self {
        ParamData::List(rows.iter().map(|r| ParamData::from_vec(r)).collect())
    }

    /// Looks up a value by 1-based index tuple.
    pub fn get(&self, index: &[usize]) -> Option<f64> {
        match (self, index.split_first()) {
            (ParamData::Scalar(v), None) => Some(*v),
            (ParamData::List(items), Some((&first, rest))) => items.get(first.checked_sub(1)?)?.get(rest),
            _ => None,
        }
    }

    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves(&self, out: &mut Vec<f64>) {
        match self {
            ParamData::Scalar(v) => out.push(*v),
            ParamData::List(items) => items.iter().for_each(|i| i.collect_leaves(out)),
        }
    }

    /// Replaces leaves in order from `values`; the shape is kept.
    pub fn refill(&mut self, values: &mut impl Iterator<Item = f64>) {
        match self {
            ParamData::Scalar(v) => {
                if let Some(n) = values.next() {
                    *v = n;
                }
            }
            ParamData::List(items) => items.iter_mut().for_each(|i| i.refill(values)),
        }
    }

    pub fn is_scalar(&self) -> bool {
        matches!(self, ParamData::Scalar(_))
    }
}

impl fmt::Display for ParamData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamData::Scalar(v) => write!(f, "{v}"),
            ParamData::List(items) => {
                f.write_str("[")?;
                for (k, item) in items.iter().enumerate() {
                    if k > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{item}")?;
                }
                f.write_str("]")
            }
        }
    }
}

impl Serialize for ParamData {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            ParamData::Scalar(v) => s.serialize_f64(*v),
            ParamData::List(items) => items.serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for ParamData {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Scalar(f64),
            List(Vec<ParamData>),
        }
        match Raw::deserialize(d)
            .map_err(|_| serde::de::Error::custom("parameter data must be a number or a nested list of numbers"))?
        {
            Raw::Scalar(v) => Ok(ParamData::Scalar(v)),
            Raw::List(items) => Ok(ParamData::List(items)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamDef {
    pub name: String,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub domain: String,
    pub data: ParamData,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub enum VarType {
    #[default]
    Continuous,
    Integer,
    Binary,
}

impl VarType {
    pub fn as_str(self) -> &'static str {
        match self {
            VarType::Continuous => "CONTINUOUS",
            VarType::Integer => "INTEGER",
            VarType::Binary => "BINARY",
        }
    }

    pub fn is_integral(self) -> bool {
        !matches!(self, VarType::Continuous)
    }
}

impl FromStr for VarType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "CONTINUOUS" => Ok(VarType::Continuous),
            "INTEGER" => Ok(VarType::Integer),
            "BINARY" => Ok(VarType::Binary),
            _ => Err(format!("unknown variable type `{s}`")),
        }
    }
}

impl Serialize for VarType {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for VarType {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VarDef {
    pub name: String,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub domain: String,
    #[serde(rename = "type", default)]
    pub vartype: VarType,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sense {
    Min,
    Max,
}

impl Sense {
    pub fn as_str(self) -> &'static str {
        match self {
            Sense::Min => "min",
            Sense::Max => "max",
        }
    }

    pub fn reversed(self) -> Sense {
        match self {
            Sense::Min => Sense::Max,
            Sense::Max => Sense::Min,
        }
    }
}

impl FromStr for Sense {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "min" | "minimize" => Ok(Sense::Min),
            "max" | "maximize" => Ok(Sense::Max),
            _ => Err(format!("unknown objective sense `{s}`")),
        }
    }
}

impl Serialize for Sense {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for Sense {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectiveDef {
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub sense: Sense,
    pub function: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintDef {
    pub name: String,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub domain: String,
    pub function: String,
}

/// A complete abstract model plus instance data.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct StructuredModel {
    #[serde(rename = "set")]
    pub sets: Vec<SetDef>,
    #[serde(rename = "parameter")]
    pub parameters: Vec<ParamDef>,
    #[serde(rename = "variable")]
    pub variables: Vec<VarDef>,
    #[serde(rename = "objective")]
    pub objectives: Vec<ObjectiveDef>,
    #[serde(rename = "constraint")]
    pub constraints: Vec<ConstraintDef>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    set: Option<Vec<SetDef>>,
    parameter: Option<Vec<ParamDef>>,
    variable: Option<Vec<VarDef>>,
    objective: Option<Vec<ObjectiveDef>>,
    constraint: Option<Vec<ConstraintDef>>,
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("line {line}, column {column}: {message}")]
    Schema {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("missing required component `{0}`")]
    MissingRequiredComponent(&'static str),
}

impl ModelError {
    fn from_json(err: serde_json::Error) -> Self {
        let (line, column, message) = (err.line(), err.column(), err.to_string());
        match err.classify() {
            serde_json::error::Category::Data => ModelError::Schema { line, column, message },
            _ => ModelError::Syntax { line, column, message },
        }
    }
}

/// Parses a model document. `variable` and `objective` are required; the
/// other components default to empty.
pub fn parse_model(text: &str) -> Result<StructuredModel, ModelError> {
    let raw: RawModel = serde_json::from_str(text).map_err(ModelError::from_json)?;
    let variables = raw.variable.ok_or(ModelError::MissingRequiredComponent("variable"))?;
    let objectives = raw.objective.ok_or(ModelError::MissingRequiredComponent("objective"))?;
    Ok(StructuredModel {
        sets: raw.set.unwrap_or_default(),
        parameters: raw.parameter.unwrap_or_default(),
        variables,
        objectives,
        constraints: raw.constraint.unwrap_or_default(),
    })
}

impl StructuredModel {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model serializes")
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn set(&self, name: &str) -> Option<&SetDef> {
        self.sets.iter().find(|s| s.name == name)
    }

    pub fn parameter(&self, name: &str) -> Option<&ParamDef> {
        self.parameters.iter().find(|p| p.name == name)
    }

    pub fn variable(&self, name: &str) -> Option<&VarDef> {
        self.variables.iter().find(|v| v.name == name)
    }

    pub fn objective(&self) -> Option<&ObjectiveDef> {
        self.objectives.first()
    }
}

impl FromStr for StructuredModel {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_model(s)
    }
}
