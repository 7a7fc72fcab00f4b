//! Random small models from a few textbook families. Every generated model
//! is feasible and bounded by construction.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::model::{parse_model, StructuredModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Knapsack,
    Production,
    Diet,
    Transportation,
}

impl Family {
    pub const ALL: [Family; 4] = [
        Family::Knapsack,
        Family::Production,
        Family::Diet,
        Family::Transportation,
    ];
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Knapsack => "knapsack",
            Family::Production => "production",
            Family::Diet => "diet",
            Family::Transportation => "transportation",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedModel {
    pub family: Family,
    pub question: String,
    pub model: StructuredModel,
}

fn ints(rng: &mut impl Rng, n: usize, lo: i64, hi: i64) -> Vec<i64> {
    (0..n).map(|_| rng.random_range(lo..=hi)).collect()
}

fn matrix(rng: &mut impl Rng, rows: usize, cols: usize, lo: i64, hi: i64) -> Vec<Vec<i64>> {
    (0..rows).map(|_| ints(rng, cols, lo, hi)).collect()
}

fn set(name: &str, description: &str, size: usize) -> Value {
    json!({ "name": name, "description": description, "data": (1..=size as i64).collect::<Vec<_>>() })
}

fn list(v: &[i64]) -> String {
    v.iter().map(i64::to_string).collect::<Vec<_>>().join(", ")
}

fn build(doc: Value) -> StructuredModel {
    parse_model(&doc.to_string()).expect("generated models are well formed")
}

pub fn generate(family: Family, rng: &mut impl Rng) -> GeneratedModel {
    match family {
        Family::Knapsack => knapsack(rng),
        Family::Production => production(rng),
        Family::Diet => diet(rng),
        Family::Transportation => transportation(rng),
    }
}

/// Cycles through the families.
pub fn generate_many(count: usize, rng: &mut impl Rng) -> Vec<GeneratedModel> {
    (0..count)
        .map(|k| generate(Family::ALL[k % Family::ALL.len()], rng))
        .collect()
}

fn knapsack(rng: &mut impl Rng) -> GeneratedModel {
    let n = rng.random_range(2..=4);
    let value = ints(rng, n, 1, 9);
    let weight = ints(rng, n, 1, 6);
    let cap = rng.random_range(4..=12);
    let question = format!(
        "Pack whole units of {n} items with values [{}] and weights [{}]; total weight may not exceed {cap}. Maximize total value.",
        list(&value),
        list(&weight)
    );
    let model = build(json!({
        "set": [set("I", "items", n)],
        "parameter": [
            { "name": "v", "description": "value", "domain": "{i <in> I}", "data": value },
            { "name": "w", "description": "weight", "domain": "{i <in> I}", "data": weight },
            { "name": "C", "description": "capacity", "domain": "", "data": cap }
        ],
        "variable": [{ "name": "x", "description": "units packed", "domain": "{i <in> I}", "type": "INTEGER" }],
        "objective": [{ "name": "value", "sense": "max", "function": "<sum>_{i <in> I} v_{i} x_{i}" }],
        "constraint": [{ "name": "weight", "domain": "", "function": "<sum>_{i <in> I} w_{i} x_{i} <= C" }]
    }));
    GeneratedModel {
        family: Family::Knapsack,
        question,
        model,
    }
}

fn production(rng: &mut impl Rng) -> GeneratedModel {
    let p = rng.random_range(2..=3);
    let r = rng.random_range(2..=3);
    let profit = ints(rng, p, 2, 9);
    let usage = matrix(rng, r, p, 1, 4);
    let avail = ints(rng, r, 6, 16);
    let question = format!(
        "A plant makes {p} products with unit profits [{}] from {r} resources with availabilities [{}]; usage per unit is {:?}. Choose integer production to maximize profit.",
        list(&profit),
        list(&avail),
        usage
    );
    let model = build(json!({
        "set": [set("P", "products", p), set("R", "resources", r)],
        "parameter": [
            { "name": "profit", "domain": "{i <in> P}", "data": profit },
            { "name": "a", "description": "resource use per unit", "domain": "{r <in> R, i <in> P}", "data": usage },
            { "name": "b", "description": "availability", "domain": "{r <in> R}", "data": avail }
        ],
        "variable": [{ "name": "x", "domain": "{i <in> P}", "type": "INTEGER" }],
        "objective": [{ "name": "profit_total", "sense": "max", "function": "<sum>_{i <in> P} profit_{i} x_{i}" }],
        "constraint": [{ "name": "capacity", "domain": "{r <in> R}", "function": "<sum>_{i <in> P} a_{r,i} x_{i} <= b_{r}" }]
    }));
    GeneratedModel {
        family: Family::Production,
        question,
        model,
    }
}

fn diet(rng: &mut impl Rng) -> GeneratedModel {
    let f = rng.random_range(2..=3);
    let n = rng.random_range(2..=3);
    let cost = ints(rng, f, 1, 8);
    let content = matrix(rng, n, f, 1, 5);
    let need = ints(rng, n, 4, 12);
    let question = format!(
        "Buy whole servings of {f} foods costing [{}] so that each of {n} nutrients reaches its requirement [{}]; nutrient content is {:?}. Minimize cost.",
        list(&cost),
        list(&need),
        content
    );
    let model = build(json!({
        "set": [set("F", "foods", f), set("N", "nutrients", n)],
        "parameter": [
            { "name": "c", "domain": "{j <in> F}", "data": cost },
            { "name": "a", "domain": "{k <in> N, j <in> F}", "data": content },
            { "name": "req", "domain": "{k <in> N}", "data": need }
        ],
        "variable": [{ "name": "s", "description": "servings", "domain": "{j <in> F}", "type": "INTEGER" }],
        "objective": [{ "name": "cost", "sense": "min", "function": "<sum>_{j <in> F} c_{j} s_{j}" }],
        "constraint": [{ "name": "nutrition", "domain": "{k <in> N}", "function": "<sum>_{j <in> F} a_{k,j} s_{j} >= req_{k}" }]
    }));
    GeneratedModel {
        family: Family::Diet,
        question,
        model,
    }
}

fn transportation(rng: &mut impl Rng) -> GeneratedModel {
    let m = rng.random_range(2..=3);
    let n = rng.random_range(2..=3);
    let demand = ints(rng, n, 1, 6);
    let total: i64 = demand.iter().sum();
    // spread total demand plus some slack over the sources
    let mut supply = vec![0i64; m];
    for _ in 0..total + rng.random_range(0..=4) {
        supply[rng.random_range(0..m)] += 1;
    }
    let cost = matrix(rng, m, n, 1, 9);
    let question = format!(
        "Ship goods from {m} depots with supplies [{}] to {n} stores with demands [{}]; unit costs are {:?}. Meet all demand at minimum cost.",
        list(&supply),
        list(&demand),
        cost
    );
    let model = build(json!({
        "set": [set("S", "depots", m), set("D", "stores", n)],
        "parameter": [
            { "name": "supply", "domain": "{i <in> S}", "data": supply },
            { "name": "demand", "domain": "{j <in> D}", "data": demand },
            { "name": "cost", "domain": "{i <in> S, j <in> D}", "data": cost }
        ],
        "variable": [{ "name": "y", "description": "units shipped", "domain": "{i <in> S, j <in> D}", "type": "INTEGER" }],
        "objective": [{ "name": "shipping", "sense": "min", "function": "<sum>_{i <in> S} <sum>_{j <in> D} cost_{i,j} y_{i,j}" }],
        "constraint": [
            { "name": "outflow", "domain": "{i <in> S}", "function": "<sum>_{j <in> D} y_{i,j} <= supply_{i}" },
            { "name": "inflow", "domain": "{j <in> D}", "function": "<sum>_{i <in> S} y_{i,j} >= demand_{j}" }
        ]
    }));
    GeneratedModel {
        family: Family::Transportation,
        question,
        model,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instantiate::expand;
    use crate::model::validate;
    use crate::solver::{solve_mip, SolveStatus, SolverConfig};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn every_family_is_valid_and_solvable() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for g in generate_many(40, &mut rng) {
            assert!(validate(&g.model).is_empty(), "{}: {:?}", g.family, validate(&g.model));
            let r = solve_mip(&expand(&g.model).unwrap(), &SolverConfig::default());
            assert_eq!(r.status, SolveStatus::Optimal, "{}", g.family);
        }
    }

    #[test]
    fn seeded_generation_repeats() {
        let a = generate_many(8, &mut ChaCha8Rng::seed_from_u64(3));
        let b = generate_many(8, &mut ChaCha8Rng::seed_from_u64(3));
        assert_eq!(a, b);
    }
}
