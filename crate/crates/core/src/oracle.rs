//! Independent reference implementations and random instance generators,
//! used to cross-check the solver and the expander.

use rand::seq::IndexedRandom;
use rand::Rng;
use serde_json::json;

use crate::instantiate::{ConcreteConstraint, ConcreteModel, ConstraintRelation, LinearExpr, VarInstance};
use crate::model::{parse_model, Sense, StructuredModel, VarType};

/// Box bound of the variables in [`random_bounded_mip`].
pub const MIP_UPPER: u32 = 8;

/// A pure integer program with `1..=max_vars` variables boxed in
/// `[0, MIP_UPPER]` (as explicit rows) and up to `max_rows` further random rows.
/// Most instances are feasible by construction.
pub fn random_bounded_mip(rng: &mut impl Rng, max_vars: usize, max_rows: usize) -> ConcreteModel {
    let n = rng.random_range(1..=max_vars);
    let variables = (0..n)
        .map(|j| VarInstance {
            def_name: "x".into(),
            index_tuple: vec![j + 1],
            vartype: VarType::Integer,
            column_id: j,
        })
        .collect();
    let mut objective = LinearExpr::default();
    for j in 0..n {
        objective.add_term(j, f64::from(rng.random_range(-9..=9)));
    }
    let mut constraints: Vec<ConcreteConstraint> = (0..n)
        .map(|j| ConcreteConstraint {
            name: format!("ub_{}", j + 1),
            lhs: LinearExpr::column(j),
            relation: ConstraintRelation::Le,
            rhs: f64::from(MIP_UPPER),
        })
        .collect();
    // most instances get a planted feasible point; the rest use free rhs values
    let planted: Option<Vec<f64>> = rng
        .random_bool(0.85)
        .then(|| (0..n).map(|_| f64::from(rng.random_range(0..=MIP_UPPER))).collect());
    let relations = [
        ConstraintRelation::Le,
        ConstraintRelation::Le,
        ConstraintRelation::Ge,
        ConstraintRelation::Eq,
    ];
    for k in 0..rng.random_range(0..=max_rows) {
        let mut lhs = LinearExpr::default();
        for j in 0..n {
            if rng.random_bool(0.7) {
                lhs.add_term(j, f64::from(rng.random_range(-5..=5)));
            }
        }
        let relation = *relations.choose(rng).expect("nonempty");
        let slack = f64::from(rng.random_range(0..=6));
        let rhs = match (&planted, relation) {
            (Some(p), ConstraintRelation::Le) => lhs.evaluate(p) + slack,
            (Some(p), ConstraintRelation::Ge) => lhs.evaluate(p) - slack,
            (Some(p), ConstraintRelation::Eq) => lhs.evaluate(p),
            (None, _) => f64::from(rng.random_range(-6..=30)),
        };
        constraints.push(ConcreteConstraint {
            name: format!("r_{}", k + 1),
            lhs,
            relation,
            rhs,
        });
    }
    ConcreteModel {
        variables,
        sense: if rng.random_bool(0.5) { Sense::Max } else { Sense::Min },
        objective_name: "obj".into(),
        objective,
        constraints,
        warnings: Vec::new(),
    }
}

/// Best objective over every integer point of `[0, upper]^n` (binary columns
/// capped at 1), or `None` when no point is feasible. Every column must be
/// integral.
pub fn brute_force_mip(model: &ConcreteModel, upper: u32, tol: f64) -> Option<f64> {
    let n = model.num_columns();
    assert!(
        model.variables.iter().all(|v| v.vartype.is_integral()),
        "brute force needs integer columns"
    );
    let dense = |e: &LinearExpr| {
        let mut row = vec![0.0; n];
        for (&c, &v) in &e.coefficients {
            row[c] = v;
        }
        (row, e.constant)
    };
    let rows: Vec<_> = model
        .constraints
        .iter()
        .map(|c| (dense(&c.lhs), c.relation, c.rhs))
        .collect();
    let (obj, obj_const) = dense(&model.objective);
    let caps: Vec<f64> = model
        .variables
        .iter()
        .map(|v| {
            if v.vartype == VarType::Binary {
                1.0
            } else {
                f64::from(upper)
            }
        })
        .collect();

    let mut point = vec![0.0f64; n];
    let mut best: Option<f64> = None;
    loop {
        let feasible = rows.iter().all(|((row, c), rel, rhs)| {
            let lhs: f64 = row.iter().zip(&point).map(|(a, x)| a * x).sum::<f64>() + c;
            rel.holds(lhs, *rhs, tol)
        });
        if feasible {
            let v = obj.iter().zip(&point).map(|(a, x)| a * x).sum::<f64>() + obj_const;
            best = Some(match (best, model.sense) {
                (None, _) => v,
                (Some(b), Sense::Max) => b.max(v),
                (Some(b), Sense::Min) => b.min(v),
            });
        }
        // odometer increment
        let mut j = 0;
        loop {
            if j == n {
                return best;
            }
            if point[j] < caps[j] {
                point[j] += 1.0;
                break;
            }
            point[j] = 0.0;
            j += 1;
        }
    }
}

fn values(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n)
        .map(|_| {
            if rng.random_bool(0.3) {
                f64::from(rng.random_range(-20..=20)) / 4.0
            } else {
                f64::from(rng.random_range(-5..=9))
            }
        })
        .collect()
}

fn small_const(rng: &mut impl Rng) -> String {
    let v = rng.random_range(1..=6);
    if rng.random_bool(0.25) {
        format!("{v}.5")
    } else {
        v.to_string()
    }
}

fn signed_join(rng: &mut impl Rng, terms: &[String]) -> String {
    let mut out = String::new();
    for (k, t) in terms.iter().enumerate() {
        let minus = rng.random_bool(0.3);
        match (k, minus) {
            (0, true) => out.push_str(&format!("-({t})")),
            (0, false) => out.push_str(t),
            (_, true) => out.push_str(&format!(" - ({t})")),
            (_, false) => out.push_str(&format!(" + {t}")),
        }
    }
    out
}

/// A random valid linear model over two sets, three parameters of different
/// shapes and three variables, exercising sums, nested sums, implicit
/// products, chains and comma-split constraints.
pub fn random_structured_model(rng: &mut impl Rng) -> StructuredModel {
    let ni = rng.random_range(1..=4);
    let nj = rng.random_range(1..=3);
    let types = ["CONTINUOUS", "INTEGER", "BINARY"];
    let mut vt = || *types.choose(rng).expect("nonempty");
    let (tx, ty, tz) = (vt(), vt(), vt());
    let a = values(rng, ni);
    let b = values(rng, nj);
    let m: Vec<Vec<f64>> = (0..ni).map(|_| values(rng, nj)).collect();
    let s = values(rng, 1)[0];

    let objective_pool = [
        "<sum>_{i <in> I} a_{i} x_{i}".to_string(),
        "<sum>_{i <in> I} <sum>_{j <in> J} M_{i,j}*y_{i,j}".to_string(),
        format!("{} s z", small_const(rng)),
        format!("<sum>_{{k <in> I}}(a_{{k}}x_{{k}} + {}*x_{{k}})", small_const(rng)),
        "<sum>_{j <in> J} b_{j} <sum>_{i <in> I} y_{i,j}".to_string(),
        format!("z/{} - s", small_const(rng)),
    ];
    let count = rng.random_range(1..=4);
    let terms: Vec<String> = objective_pool.choose_multiple(rng, count).cloned().collect();
    let objective = signed_join(rng, &terms);

    let c1 = small_const(rng);
    let c2 = small_const(rng);
    let c3 = small_const(rng);
    let constraint_pool = [
        ("{i <in> I}", format!("x_{{i}} <= a_{{i}} + {c1}")),
        (
            "{i <in> I}",
            format!("<sum>_{{j <in> J}} y_{{i,j}} >= x_{{i}} - s, {c2} x_{{i}} <= 10"),
        ),
        ("{j <in> J}", "<sum>_{i <in> I} M_{i,j} y_{i,j} <= 3 b_{j}".to_string()),
        ("{j <in> J}", "0 <= <sum>_{i <in> I} y_{i,j} <= b_{j} + z".to_string()),
        ("", format!("z + <sum>_{{i <in> I}} x_{{i}} = s, z >= {c3}")),
        ("{i <in> I, j <in> J}", "y_{i,j} - M_{i,j} < x_{i}".to_string()),
        (
            "",
            "<sum>_{i <in> I} <sum>_{j <in> J} (y_{i,j} + a_{i}) >= s - z".to_string(),
        ),
    ];
    let count = rng.random_range(1..=4);
    let constraints: Vec<_> = constraint_pool
        .choose_multiple(rng, count)
        .enumerate()
        .map(|(k, (domain, f))| json!({ "name": format!("c{k}"), "domain": domain, "function": f }))
        .collect();

    let doc = json!({
        "set": [
            { "name": "I", "data": (1..=ni).collect::<Vec<_>>() },
            { "name": "J", "data": (1..=nj).collect::<Vec<_>>() }
        ],
        "parameter": [
            { "name": "a", "domain": "{i <in> I}", "data": a },
            { "name": "b", "domain": "{j <in> J}", "data": b },
            { "name": "M", "domain": "{i <in> I, j <in> J}", "data": m },
            { "name": "s", "domain": "", "data": s }
        ],
        "variable": [
            { "name": "x", "domain": "{i <in> I}", "type": tx },
            { "name": "y", "domain": "{i <in> I, j <in> J}", "type": ty },
            { "name": "z", "domain": "", "type": tz }
        ],
        "objective": [{ "name": "obj", "sense": if rng.random_bool(0.5) { "max" } else { "min" }, "function": objective }],
        "constraint": constraints
    });
    parse_model(&doc.to_string()).expect("generated model parses")
}

/// Random column values respecting each variable's type: integers for
/// integral columns, 0/1 for binaries, quarters otherwise.
pub fn random_point(model: &ConcreteModel, rng: &mut impl Rng) -> Vec<f64> {
    model
        .variables
        .iter()
        .map(|v| match v.vartype {
            VarType::Binary => f64::from(rng.random_range(0..=1)),
            VarType::Integer => f64::from(rng.random_range(0..=6)),
            VarType::Continuous => f64::from(rng.random_range(0..=24)) / 4.0,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instantiate::expand;
    use crate::model::validate;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn brute_force_on_a_hand_instance() {
        // max x1 + x2 subject to x1 + 2 x2 <= 4 over [0,8]^2: optimum 4 at (4,0)
        let mut m = random_bounded_mip(&mut ChaCha8Rng::seed_from_u64(0), 1, 0);
        m.variables = (0..2)
            .map(|j| VarInstance {
                def_name: "x".into(),
                index_tuple: vec![j + 1],
                vartype: VarType::Integer,
                column_id: j,
            })
            .collect();
        m.sense = Sense::Max;
        m.objective = LinearExpr::default();
        m.objective.add_term(0, 1.0);
        m.objective.add_term(1, 1.0);
        let mut row = LinearExpr::default();
        row.add_term(0, 1.0);
        row.add_term(1, 2.0);
        m.constraints = vec![ConcreteConstraint {
            name: "r".into(),
            lhs: row,
            relation: ConstraintRelation::Le,
            rhs: 4.0,
        }];
        assert_eq!(brute_force_mip(&m, MIP_UPPER, 1e-9), Some(4.0));
        m.constraints[0].relation = ConstraintRelation::Eq;
        m.constraints[0].rhs = -1.0;
        assert_eq!(brute_force_mip(&m, MIP_UPPER, 1e-9), None);
    }

    #[test]
    fn random_mips_respect_shape() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let m = random_bounded_mip(&mut rng, 6, 8);
            assert!((1..=6).contains(&m.num_columns()));
            assert!(m.constraints.len() <= m.num_columns() + 8);
        }
    }

    #[test]
    fn random_models_are_valid_and_expand() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let model = random_structured_model(&mut rng);
            assert!(validate(&model).is_empty(), "{:?}", validate(&model));
            expand(&model).unwrap_or_else(|e| panic!("{e}\n{}", model.to_json_pretty()));
        }
    }
}
