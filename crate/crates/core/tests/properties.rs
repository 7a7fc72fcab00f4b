use orsearch_core::formula::{free_indices, CompareChain, DomainSpec, IndexBinding, Relation};
use orsearch_core::instantiate::FEASIBILITY_TOL;
use orsearch_core::oracle::{brute_force_mip, random_bounded_mip, random_point, random_structured_model, MIP_UPPER};
use orsearch_core::{
    evaluate_naive, expand, parse_formula, print_formula, solve_lp, solve_mip, Assignment, Expr, FormulaAst,
    SolveStatus, SolverConfig,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const INDICES: [&str; 4] = ["i", "j", "k", "t"];
const SETS: [&str; 3] = ["I", "J", "K"];

fn leaf() -> impl Strategy<Value = Expr> {
    prop_oneof![
        (0u32..200, prop::bool::ANY).prop_map(|(v, half)| Expr::Number(f64::from(v) + if half { 0.5 } else { 0.0 })),
        (
            prop::sample::select(vec!["x", "y", "cost", "a_b"]),
            prop::collection::vec(prop::sample::select(INDICES.to_vec()), 0..3)
        )
            .prop_map(|(n, subs)| Expr::reference(n, &subs)),
    ]
}

fn expr() -> impl Strategy<Value = Expr> {
    leaf().prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Add(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Sub(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Mul(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Div(Box::new(a), Box::new(b))),
            inner.clone().prop_map(|a| Expr::Neg(Box::new(a))),
            (prop::sample::select(SETS.to_vec()), inner)
                .prop_map(|(s, body)| Expr::sum(vec![IndexBinding::new("i", s)], body)),
        ]
    })
}

fn index_name(n: usize) -> String {
    format!("{}{}", INDICES[n % INDICES.len()], "p".repeat(n / INDICES.len()))
}

/// Puts a generated tree into the parser's normal form: nested sums merged,
/// sum indices distinct along every path.
fn normalize(e: Expr, depth: usize) -> Expr {
    match e {
        Expr::Sum { domain, body } => {
            let mut bindings: Vec<IndexBinding> = domain
                .bindings
                .into_iter()
                .enumerate()
                .map(|(k, b)| IndexBinding::new(index_name(depth + k), b.set_name))
                .collect();
            let next = depth + bindings.len();
            match normalize(*body, next) {
                Expr::Sum { domain, body } => {
                    bindings.extend(domain.bindings);
                    Expr::Sum {
                        domain: DomainSpec::new(bindings),
                        body,
                    }
                }
                body => Expr::Sum {
                    domain: DomainSpec::new(bindings),
                    body: Box::new(body),
                },
            }
        }
        Expr::Add(a, b) => Expr::Add(Box::new(normalize(*a, depth)), Box::new(normalize(*b, depth))),
        Expr::Sub(a, b) => Expr::Sub(Box::new(normalize(*a, depth)), Box::new(normalize(*b, depth))),
        Expr::Mul(a, b) => Expr::Mul(Box::new(normalize(*a, depth)), Box::new(normalize(*b, depth))),
        Expr::Div(a, b) => Expr::Div(Box::new(normalize(*a, depth)), Box::new(normalize(*b, depth))),
        Expr::Neg(a) => Expr::Neg(Box::new(normalize(*a, depth))),
        other => other,
    }
}

fn formula() -> impl Strategy<Value = FormulaAst> {
    let rel = prop::sample::select(vec![
        Relation::Le,
        Relation::Ge,
        Relation::Lt,
        Relation::Gt,
        Relation::Eq,
    ]);
    prop_oneof![
        expr().prop_map(|e| FormulaAst::Expr(normalize(e, 0))),
        (prop::collection::vec(expr(), 2..4), prop::collection::vec(rel, 3)).prop_map(|(ops, rels)| {
            let n = ops.len() - 1;
            FormulaAst::Compare(CompareChain {
                operands: ops.into_iter().map(|e| normalize(e, 0)).collect(),
                relations: rels[..n].to_vec(),
            })
        }),
    ]
}

fn no_sum_wraps_sum(e: &Expr) -> bool {
    let mut ok = true;
    e.walk(&mut |n| {
        if let Expr::Sum { body, .. } = n {
            if matches!(**body, Expr::Sum { .. }) {
                ok = false;
            }
        }
    });
    ok
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn print_then_parse_round_trips(ast in formula()) {
        let text = print_formula(&ast);
        let parsed = parse_formula(&text).map_err(|e| TestCaseError::fail(format!("{e}")))?;
        prop_assert_eq!(parsed.len(), 1, "{}", text);
        prop_assert_eq!(&parsed[0], &ast, "{}", text);
        prop_assert_eq!(print_formula(&parsed[0]), text);
    }

    #[test]
    fn comma_count_gives_segment_count(asts in prop::collection::vec(formula(), 1..5)) {
        let text = asts.iter().map(print_formula).collect::<Vec<_>>().join(", ");
        let parsed = parse_formula(&text).unwrap();
        prop_assert_eq!(parsed.len(), asts.len());
        for ast in &parsed {
            for e in ast.expressions() {
                prop_assert!(no_sum_wraps_sum(e));
            }
        }
    }

    #[test]
    fn implicit_product_equals_explicit(a in "[a-h]", b in "[p-w]", sub in prop::sample::select(INDICES.to_vec())) {
        let implicit = parse_formula(&format!("{a}_{{{sub}}}{b}_{{{sub}}}")).unwrap();
        let explicit = parse_formula(&format!("{a}_{{{sub}}}*{b}_{{{sub}}}")).unwrap();
        prop_assert_eq!(implicit, explicit);
    }

    #[test]
    fn sums_bind_their_index(set in prop::sample::select(SETS.to_vec()), free in prop::sample::select(vec!["j", "k"])) {
        let ast = parse_formula(&format!("<sum>_{{i <in> {set}}} d_{{i,{free}}}*x_{{i}}")).unwrap();
        prop_assert_eq!(free_indices(&ast[0]).into_iter().collect::<Vec<_>>(), vec![free.to_string()]);
    }

    #[test]
    fn expansion_agrees_with_naive_evaluation(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let model = random_structured_model(&mut rng);
        let concrete = expand(&model).unwrap();
        for _ in 0..3 {
            let x = random_point(&concrete, &mut rng);
            let naive = evaluate_naive(&model, &Assignment::from_columns(&concrete, &x)).unwrap();
            prop_assert!((naive.objective - concrete.objective_value(&x)).abs() <= 1e-9);
            prop_assert_eq!(naive.constraints.len(), concrete.constraints.len());
            for (row, check) in concrete.constraints.iter().zip(&naive.constraints) {
                prop_assert_eq!(&row.name, &check.name);
                prop_assert_eq!(row.is_satisfied(&x, FEASIBILITY_TOL), check.satisfied);
            }
        }
    }

    #[test]
    fn mip_matches_brute_force(seed in any::<u64>()) {
        let model = random_bounded_mip(&mut ChaCha8Rng::seed_from_u64(seed), 4, 5);
        let cfg = SolverConfig::default();
        let r = solve_mip(&model, &cfg);
        match brute_force_mip(&model, MIP_UPPER, 1e-9) {
            Some(best) => {
                prop_assert_eq!(r.status, SolveStatus::Optimal);
                prop_assert!((r.objective_value.unwrap() - best).abs() <= 1e-6);
                let x = r.assignment.unwrap();
                prop_assert!(x.iter().all(|v| (v - v.round()).abs() <= 1e-6));
                prop_assert!(model.constraints.iter().all(|c| c.is_satisfied(&x, 1e-6)));
            }
            None => prop_assert_eq!(r.status, SolveStatus::Infeasible),
        }
    }

    #[test]
    fn relaxation_bounds_the_integer_optimum(seed in any::<u64>()) {
        let model = random_bounded_mip(&mut ChaCha8Rng::seed_from_u64(seed), 4, 5);
        let cfg = SolverConfig::default();
        let (lp, mip) = (solve_lp(&model, &cfg), solve_mip(&model, &cfg));
        if let (Some(l), Some(m)) = (lp.objective_value, mip.objective_value) {
            match model.sense {
                orsearch_core::model::Sense::Max => prop_assert!(l >= m - 1e-6),
                orsearch_core::model::Sense::Min => prop_assert!(l <= m + 1e-6),
            }
        }
        if lp.status == SolveStatus::Infeasible {
            prop_assert_eq!(mip.status, SolveStatus::Infeasible);
        }
    }
}
