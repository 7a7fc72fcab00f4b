use std::collections::BTreeMap;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{BenchError, OBJECTIVE_TOL};
use crate::adapters::PlantedProblem;
use crate::augment::{layer_fragments, perturb_negative, NegativeKind};
use crate::derive_seed;
use crate::formula::parse_domain;
use crate::instantiate::expand;
use crate::model::{assemble_model, StructuredModel, VarDef, VarType};
use crate::search::Layer;
use crate::solver::{solve_mip, SolverConfig};
use crate::synth::{generate, Family, GeneratedModel};

/// A planted problem plus the objective its correct path solves to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fixture {
    pub name: String,
    pub reference_objective: f64,
    pub problem: PlantedProblem,
}

/// Optimal objective of the model assembled from a full path, if it parses,
/// expands and solves to optimality.
pub fn leaf_objective<S: AsRef<str>>(path: &[S], cfg: &SolverConfig) -> Option<f64> {
    let model = assemble_model(path).ok()?;
    let concrete = expand(&model).ok()?;
    solve_mip(&concrete, cfg).objective_value
}

fn variable_decoys(model: &StructuredModel) -> Vec<StructuredModel> {
    let mut out = Vec::new();
    let sets: Vec<&str> = model.sets.iter().map(|s| s.name.as_str()).collect();
    for (k, v) in model.variables.iter().enumerate() {
        let mut variant = |edit: &dyn Fn(&mut VarDef)| {
            let mut m = model.clone();
            edit(&mut m.variables[k]);
            out.push(m);
        };
        for t in [VarType::Continuous, VarType::Integer, VarType::Binary] {
            if t != v.vartype {
                variant(&|d| d.vartype = t);
            }
        }
        for suffix in ["q", "z", "2"] {
            variant(&|d| d.name = format!("{}{suffix}", v.name));
        }
        let Ok(spec) = parse_domain(&v.domain) else { continue };
        if spec.is_empty() {
            continue;
        }
        variant(&|d| d.domain.clear());
        if spec.len() > 1 {
            let mut rev = spec.clone();
            rev.bindings.reverse();
            variant(&|d| d.domain = rev.to_domain_string());
        }
        for b in 0..spec.len() {
            for other in sets.iter().filter(|s| **s != spec.bindings[b].set_name) {
                let mut swapped = spec.clone();
                swapped.bindings[b].set_name = other.to_string();
                variant(&|d| d.domain = swapped.to_domain_string());
            }
        }
    }
    out
}

fn data_nudge(model: &StructuredModel, rng: &mut impl Rng) -> Option<StructuredModel> {
    let mut m = model.clone();
    if m.parameters.is_empty() {
        return None;
    }
    let p = rng.random_range(0..m.parameters.len());
    let mut values = m.parameters[p].data.flatten();
    let k = rng.random_range(0..values.len());
    values[k] += f64::from(rng.random_range(1..=3));
    m.parameters[p].data.refill(&mut values.into_iter());
    Some(m)
}

/// Builds a fixture whose decoys each change the solved objective when
/// swapped into the otherwise correct path.
pub fn build_fixture(
    name: &str,
    generated: &GeneratedModel,
    decoys_per_layer: usize,
    seed: u64,
) -> Result<Fixture, BenchError> {
    let solver = SolverConfig::default();
    let correct = layer_fragments(&generated.model);
    let path: Vec<String> = correct.values().cloned().collect();
    let reference = leaf_objective(&path, &solver)
        .ok_or_else(|| BenchError::Fixture(format!("{name}: reference model does not solve")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut decoys: BTreeMap<Layer, Vec<String>> = BTreeMap::new();
    for (pos, layer) in Layer::SEARCHED.into_iter().enumerate() {
        let mut pool: Vec<String> = Vec::new();
        let consider = |m: StructuredModel, pool: &mut Vec<String>| {
            let frag = layer_fragments(&m)[&layer].clone();
            if frag == correct[&layer] || pool.contains(&frag) || pool.len() >= decoys_per_layer {
                return;
            }
            let mut trial = path.clone();
            trial[pos] = frag.clone();
            let differs = leaf_objective(&trial, &solver).is_none_or(|v| (v - reference).abs() > OBJECTIVE_TOL);
            if differs {
                pool.push(frag);
            }
        };
        match layer {
            Layer::V => {
                for m in variable_decoys(&generated.model) {
                    consider(m, &mut pool);
                }
            }
            _ => {
                let kinds: Vec<NegativeKind> = NegativeKind::ALL.into_iter().filter(|k| k.layer() == layer).collect();
                for _ in 0..60 {
                    if pool.len() >= decoys_per_layer {
                        break;
                    }
                    let candidate = if layer == Layer::SP && rng.random_bool(0.4) {
                        data_nudge(&generated.model, &mut rng)
                    } else {
                        let kind = *kinds.choose(&mut rng).expect("kinds per layer");
                        perturb_negative(&generated.model, kind, &mut rng).ok()
                    };
                    if let Some(m) = candidate {
                        consider(m, &mut pool);
                    }
                }
            }
        }
        if pool.len() < decoys_per_layer {
            return Err(BenchError::Fixture(format!(
                "{name}: only {} decoys at layer {layer}",
                pool.len()
            )));
        }
        decoys.insert(layer, pool);
    }

    Ok(Fixture {
        name: name.to_string(),
        reference_objective: reference,
        problem: PlantedProblem {
            question: format!("[{name}] {}", generated.question),
            correct_fragments: correct,
            decoy_fragments: decoys,
        },
    })
}

/// Generates `count` fixtures named `fx-000`, `fx-001`, ...; models that
/// cannot supply enough decoys are replaced by fresh ones.
pub fn build_fixtures(count: usize, seed: u64, decoys_per_layer: usize) -> Result<Vec<Fixture>, BenchError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0;
    while out.len() < count {
        attempts += 1;
        if attempts > count * 20 + 20 {
            return Err(BenchError::Fixture(format!(
                "gave up after {attempts} models with {} fixtures built",
                out.len()
            )));
        }
        let k = out.len();
        let generated = generate(Family::ALL[k % Family::ALL.len()], &mut rng);
        let name = format!("fx-{k:03}");
        if let Ok(f) = build_fixture(&name, &generated, decoys_per_layer, derive_seed(seed, attempts as u64)) {
            out.push(f);
        }
    }
    Ok(out)
}
