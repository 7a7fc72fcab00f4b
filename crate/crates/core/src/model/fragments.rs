use serde_json::{json, Map, Value};

use super::{parse_model, ModelError, StructuredModel};

/// A model split along the reasoning layers: sets and parameters, variables,
/// objective and constraints. Each fragment is a JSON object text holding
/// only its own components.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerFragments {
    pub sets_params: String,
    pub variables: String,
    pub objective_constraints: String,
}

impl LayerFragments {
    pub fn as_vec(&self) -> Vec<String> {
        vec![
            self.sets_params.clone(),
            self.variables.clone(),
            self.objective_constraints.clone(),
        ]
    }
}

pub fn model_fragments(model: &StructuredModel) -> LayerFragments {
    let sp = json!({ "set": model.sets, "parameter": model.parameters });
    let v = json!({ "variable": model.variables });
    let oc = json!({ "objective": model.objectives, "constraint": model.constraints });
    LayerFragments {
        sets_params: sp.to_string(),
        variables: v.to_string(),
        objective_constraints: oc.to_string(),
    }
}

/// Merges layer fragments back into one document and parses it. Later
/// fragments win on duplicate keys.
pub fn assemble_model<S: AsRef<str>>(fragments: &[S]) -> Result<StructuredModel, ModelError> {
    let mut merged = Map::new();
    for frag in fragments {
        let value: Value = serde_json::from_str(frag.as_ref()).map_err(|e| ModelError::Syntax {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        match value {
            Value::Object(obj) => merged.extend(obj),
            _ => {
                return Err(ModelError::Schema {
                    line: 1,
                    column: 1,
                    message: "fragment must be a JSON object".into(),
                })
            }
        }
    }
    parse_model(&Value::Object(merged).to_string())
}
