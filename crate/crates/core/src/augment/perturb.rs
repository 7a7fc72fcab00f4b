use std::collections::BTreeSet;

use rand::seq::{IndexedMutRandom, IndexedRandom, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::formula::{parse_domain, parse_formula, print_formulas, Expr, FormulaAst};
use crate::model::{validate, ParamData, StructuredModel};
use crate::search::Layer;

use super::AugmentError;

/// Rewrites that keep the model's meaning.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PositiveKind {
    RenameSumIndex,
    FlipInequality,
}

/// Corruptions that change the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NegativeKind {
    SetDataTamper,
    ParamColumnDrop,
    ParamReshuffle,
    RelationFlipInPlace,
    SubscriptSwap,
    SumDomainSwap,
    ConstraintDelete,
    FunctionEdit,
    ObjectiveReverse,
}

impl PositiveKind {
    pub const ALL: [PositiveKind; 2] = [PositiveKind::RenameSumIndex, PositiveKind::FlipInequality];

    pub fn as_str(self) -> &'static str {
        match self {
            PositiveKind::RenameSumIndex => "rename_sum_index",
            PositiveKind::FlipInequality => "flip_inequality",
        }
    }
}

impl NegativeKind {
    pub const ALL: [NegativeKind; 9] = [
        NegativeKind::SetDataTamper,
        NegativeKind::ParamColumnDrop,
        NegativeKind::ParamReshuffle,
        NegativeKind::RelationFlipInPlace,
        NegativeKind::SubscriptSwap,
        NegativeKind::SumDomainSwap,
        NegativeKind::ConstraintDelete,
        NegativeKind::FunctionEdit,
        NegativeKind::ObjectiveReverse,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            NegativeKind::SetDataTamper => "set_data_tamper",
            NegativeKind::ParamColumnDrop => "param_column_drop",
            NegativeKind::ParamReshuffle => "param_reshuffle",
            NegativeKind::RelationFlipInPlace => "relation_flip_in_place",
            NegativeKind::SubscriptSwap => "subscript_swap",
            NegativeKind::SumDomainSwap => "sum_domain_swap",
            NegativeKind::ConstraintDelete => "constraint_delete",
            NegativeKind::FunctionEdit => "function_edit",
            NegativeKind::ObjectiveReverse => "objective_reverse",
        }
    }

    /// Layer whose fragment the corruption touches.
    pub fn layer(self) -> Layer {
        match self {
            NegativeKind::SetDataTamper | NegativeKind::ParamColumnDrop | NegativeKind::ParamReshuffle => Layer::SP,
            _ => Layer::OC,
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Comp {
    Objective(usize),
    Constraint(usize),
}

fn function_mut(m: &mut StructuredModel, c: Comp) -> &mut String {
    match c {
        Comp::Objective(k) => &mut m.objectives[k].function,
        Comp::Constraint(k) => &mut m.constraints[k].function,
    }
}

fn parsed(m: &StructuredModel) -> Result<Vec<(Comp, Vec<FormulaAst>)>, AugmentError> {
    let objectives = m
        .objectives
        .iter()
        .enumerate()
        .map(|(k, o)| (Comp::Objective(k), &o.name, &o.function));
    let constraints = m
        .constraints
        .iter()
        .enumerate()
        .map(|(k, c)| (Comp::Constraint(k), &c.name, &c.function));
    objectives
        .chain(constraints)
        .map(|(comp, name, text)| {
            parse_formula(text)
                .map(|asts| (comp, asts))
                .map_err(|source| AugmentError::Formula {
                    component: name.clone(),
                    source: Box::new(source),
                })
        })
        .collect()
}

fn count_nodes(asts: &[FormulaAst], pred: &impl Fn(&Expr) -> bool) -> usize {
    let mut n = 0;
    for ast in asts {
        for e in ast.expressions() {
            e.walk(&mut |x| n += usize::from(pred(x)));
        }
    }
    n
}

/// Applies `edit` to one matching expression node chosen uniformly over the
/// whole model, then reprints the touched function. False if none match.
fn edit_random_node(
    m: &mut StructuredModel,
    rng: &mut impl Rng,
    pred: impl Fn(&Expr) -> bool,
    edit: impl FnOnce(&mut Expr, &mut dyn FnMut(usize) -> usize),
) -> Result<bool, AugmentError> {
    let mut comps = parsed(m)?;
    let counts: Vec<usize> = comps.iter().map(|(_, a)| count_nodes(a, &pred)).collect();
    let total: usize = counts.iter().sum();
    if total == 0 {
        return Ok(false);
    }
    let mut pick = rng.random_range(0..total);
    let ci = counts
        .iter()
        .position(|&c| {
            if pick < c {
                true
            } else {
                pick -= c;
                false
            }
        })
        .expect("pick within total");
    let (comp, asts) = &mut comps[ci];
    let mut edit = Some(edit);
    let mut seen = 0;
    let mut choose = |n: usize| rng.random_range(0..n);
    for ast in asts.iter_mut() {
        for e in ast.expressions_mut() {
            e.walk_mut(&mut |x| {
                if pred(x) {
                    if seen == pick {
                        if let Some(f) = edit.take() {
                            f(x, &mut choose);
                        }
                    }
                    seen += 1;
                }
            });
        }
    }
    *function_mut(m, *comp) = print_formulas(asts);
    Ok(true)
}

/// `(component, segment)` pairs whose segment is a comparison chain.
fn chain_sites(comps: &[(Comp, Vec<FormulaAst>)]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for (ci, (comp, asts)) in comps.iter().enumerate() {
        if !matches!(comp, Comp::Constraint(_)) {
            continue;
        }
        for (si, ast) in asts.iter().enumerate() {
            if ast.as_chain().is_some() {
                out.push((ci, si));
            }
        }
    }
    out
}

fn identifiers(m: &StructuredModel) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    out.extend(m.sets.iter().map(|s| s.name.clone()));
    out.extend(m.parameters.iter().map(|p| p.name.clone()));
    out.extend(m.variables.iter().map(|v| v.name.clone()));
    let domains = m
        .parameters
        .iter()
        .map(|p| &p.domain)
        .chain(m.variables.iter().map(|v| &v.domain))
        .chain(m.constraints.iter().map(|c| &c.domain));
    for d in domains {
        if let Ok(spec) = parse_domain(d) {
            out.extend(spec.indices().map(str::to_string));
        }
    }
    for text in m
        .objectives
        .iter()
        .map(|o| &o.function)
        .chain(m.constraints.iter().map(|c| &c.function))
    {
        for ast in parse_formula(text).unwrap_or_default() {
            for e in ast.expressions() {
                e.walk(&mut |x| match x {
                    Expr::Ref { name, subscripts } => {
                        out.insert(name.clone());
                        out.extend(subscripts.iter().cloned());
                    }
                    Expr::Sum { domain, .. } => out.extend(domain.indices().map(str::to_string)),
                    _ => {}
                });
            }
        }
    }
    out
}

fn fresh_index(taken: &BTreeSet<String>, rng: &mut impl Rng) -> String {
    const POOL: [&str; 14] = ["j", "k", "l", "m", "n", "p", "q", "r", "s", "t", "u", "v", "w", "z"];
    let free: Vec<&str> = POOL.iter().copied().filter(|c| !taken.contains(*c)).collect();
    if let Some(name) = free.choose(rng) {
        return name.to_string();
    }
    (1..)
        .map(|k| format!("idx{k}"))
        .find(|c| !taken.contains(c))
        .expect("unbounded candidates")
}

fn rename_in(e: &mut Expr, from: &str, to: &str) {
    e.walk_mut(&mut |x| {
        if let Expr::Ref { subscripts, .. } = x {
            for s in subscripts.iter_mut().filter(|s| *s == from) {
                *s = to.to_string();
            }
        }
    });
}

fn no_site(kind: &str) -> AugmentError {
    AugmentError::NoApplicableSite(kind.to_string())
}

/// Applies a meaning-preserving rewrite. The result re-validates.
pub fn perturb_positive(
    model: &StructuredModel,
    kind: PositiveKind,
    rng: &mut impl Rng,
) -> Result<StructuredModel, AugmentError> {
    let violations = validate(model);
    if !violations.is_empty() {
        return Err(AugmentError::InvalidModel(violations));
    }
    let mut m = model.clone();
    match kind {
        PositiveKind::RenameSumIndex => {
            let fresh = fresh_index(&identifiers(&m), rng);
            let applied = edit_random_node(
                &mut m,
                rng,
                |e| matches!(e, Expr::Sum { .. }),
                |e, choose| {
                    if let Expr::Sum { domain, body } = e {
                        let k = choose(domain.bindings.len());
                        let b = &mut domain.bindings[k];
                        let old = std::mem::replace(&mut b.index, fresh.clone());
                        rename_in(body, &old, &fresh);
                    }
                },
            )?;
            if !applied {
                return Err(no_site(kind.as_str()));
            }
        }
        PositiveKind::FlipInequality => {
            let mut comps = parsed(&m)?;
            let sites = chain_sites(&comps);
            let &(ci, si) = sites.choose(rng).ok_or_else(|| no_site(kind.as_str()))?;
            let (comp, asts) = &mut comps[ci];
            if let FormulaAst::Compare(chain) = &mut asts[si] {
                chain.operands.reverse();
                chain.relations.reverse();
                for r in chain.relations.iter_mut() {
                    *r = r.mirrored();
                }
            }
            *function_mut(&mut m, *comp) = print_formulas(asts);
        }
    }
    let violations = validate(&m);
    if !violations.is_empty() {
        return Err(AugmentError::InvalidModel(violations));
    }
    Ok(m)
}

fn drop_column(data: &mut ParamData, depth: usize, col: usize) {
    if let ParamData::List(items) = data {
        if depth == 0 {
            if col < items.len() {
                items.remove(col);
            }
        } else {
            for item in items {
                drop_column(item, depth - 1, col);
            }
        }
    }
}

/// Length of the first list found at `depth`.
fn width_at(data: &ParamData, depth: usize) -> usize {
    match data {
        ParamData::Scalar(_) => 0,
        ParamData::List(items) if depth == 0 => items.len(),
        ParamData::List(items) => items.first().map_or(0, |i| width_at(i, depth - 1)),
    }
}

fn dims(data: &ParamData) -> usize {
    match data {
        ParamData::Scalar(_) => 0,
        ParamData::List(items) => 1 + items.first().map_or(0, dims),
    }
}

fn flip_in_place(r: crate::formula::Relation) -> Option<crate::formula::Relation> {
    use crate::formula::Relation::*;
    match r {
        Le => Some(Ge),
        Ge => Some(Le),
        Lt => Some(Gt),
        Gt => Some(Lt),
        Eq => None,
    }
}

/// Applies exactly one corruption of the requested kind.
pub fn perturb_negative(
    model: &StructuredModel,
    kind: NegativeKind,
    rng: &mut impl Rng,
) -> Result<StructuredModel, AugmentError> {
    let mut m = model.clone();
    let missing = || no_site(kind.as_str());
    match kind {
        NegativeKind::SetDataTamper => {
            let set = m.sets.choose_mut(rng).ok_or_else(missing)?;
            if set.data.len() >= 2 && rng.random_bool(0.5) {
                set.data.pop();
            } else {
                let next = set.data.last().map_or(1, |v| v + 1);
                set.data.push(next);
            }
        }
        NegativeKind::ParamColumnDrop => {
            let sites: Vec<(usize, usize)> = m
                .parameters
                .iter()
                .enumerate()
                .flat_map(|(p, def)| {
                    (0..dims(&def.data))
                        .filter(|&d| width_at(&def.data, d) > 0)
                        .map(move |d| (p, d))
                })
                .collect();
            let &(p, d) = sites.choose(rng).ok_or_else(missing)?;
            let col = rng.random_range(0..width_at(&m.parameters[p].data, d));
            drop_column(&mut m.parameters[p].data, d, col);
        }
        NegativeKind::ParamReshuffle => {
            let sites: Vec<usize> = (0..m.parameters.len())
                .filter(|&p| {
                    let v = m.parameters[p].data.flatten();
                    v.iter().any(|x| *x != v[0])
                })
                .collect();
            let &p = sites.choose(rng).ok_or_else(missing)?;
            let original = m.parameters[p].data.flatten();
            let mut values = original.clone();
            for _ in 0..16 {
                values.shuffle(rng);
                if values != original {
                    break;
                }
            }
            if values == original {
                let k = values
                    .iter()
                    .position(|x| *x != values[0])
                    .expect("two distinct values");
                values.swap(0, k);
            }
            m.parameters[p].data.refill(&mut values.into_iter());
        }
        NegativeKind::RelationFlipInPlace => {
            let mut comps = parsed(&m)?;
            let mut sites = Vec::new();
            for (ci, si) in chain_sites(&comps) {
                let chain = comps[ci].1[si].as_chain().expect("chain site");
                for (li, r) in chain.relations.iter().enumerate() {
                    if flip_in_place(*r).is_some() {
                        sites.push((ci, si, li));
                    }
                }
            }
            let &(ci, si, li) = sites.choose(rng).ok_or_else(missing)?;
            let (comp, asts) = &mut comps[ci];
            if let FormulaAst::Compare(chain) = &mut asts[si] {
                chain.relations[li] = flip_in_place(chain.relations[li]).expect("flippable site");
            }
            *function_mut(&mut m, *comp) = print_formulas(asts);
        }
        NegativeKind::SubscriptSwap => {
            let distinct = |e: &Expr| match e {
                Expr::Ref { subscripts, .. } => subscripts.iter().any(|s| *s != subscripts[0]),
                _ => false,
            };
            let applied = edit_random_node(&mut m, rng, distinct, |e, choose| {
                if let Expr::Ref { subscripts, .. } = e {
                    let pairs: Vec<(usize, usize)> = (0..subscripts.len())
                        .flat_map(|a| (a + 1..subscripts.len()).map(move |b| (a, b)))
                        .filter(|&(a, b)| subscripts[a] != subscripts[b])
                        .collect();
                    let (a, b) = pairs[choose(pairs.len())];
                    subscripts.swap(a, b);
                }
            })?;
            if !applied {
                return Err(missing());
            }
        }
        NegativeKind::SumDomainSwap => {
            let sets: Vec<String> = m.sets.iter().map(|s| s.name.clone()).collect();
            if sets.len() < 2 {
                return Err(missing());
            }
            let applied = edit_random_node(
                &mut m,
                rng,
                |e| matches!(e, Expr::Sum { .. }),
                |e, choose| {
                    if let Expr::Sum { domain, .. } = e {
                        let k = choose(domain.bindings.len());
                        let b = &mut domain.bindings[k];
                        let others: Vec<&String> = sets.iter().filter(|s| **s != b.set_name).collect();
                        b.set_name = others[choose(others.len())].clone();
                    }
                },
            )?;
            if !applied {
                return Err(missing());
            }
        }
        NegativeKind::ConstraintDelete => {
            if m.constraints.is_empty() {
                return Err(missing());
            }
            let k = rng.random_range(0..m.constraints.len());
            m.constraints.remove(k);
        }
        NegativeKind::FunctionEdit => {
            let applied = edit_random_node(
                &mut m,
                rng,
                |e| matches!(e, Expr::Number(_) | Expr::Ref { .. }),
                |e, _| match e {
                    Expr::Number(v) => *v += 1.0,
                    other => {
                        let term = std::mem::replace(other, Expr::Number(0.0));
                        *other = Expr::mul(Expr::number(2.0), term);
                    }
                },
            )?;
            if !applied {
                return Err(missing());
            }
        }
        NegativeKind::ObjectiveReverse => {
            let obj = m.objectives.first_mut().ok_or_else(missing)?;
            obj.sense = obj.sense.reversed();
        }
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instantiate::expand;
    use crate::model::{parse_model, Sense, ViolationCode};
    use crate::solver::{solve_mip, SolverConfig};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const EXAMPLE: &str = r#"{
        "set": [{"name": "I", "data": [1, 2]}],
        "parameter": [{"name": "c", "domain": "{i <in> I}", "data": [3, 5]}],
        "variable": [{"name": "x", "domain": "{i <in> I}", "type": "INTEGER"}],
        "objective": [{"name": "o", "sense": "max", "function": "<sum>_{i <in> I} c_{i}*x_{i}"}],
        "constraint": [{"name": "cap", "function": "<sum>_{i <in> I} x_{i} <= 4"}]
    }"#;

    const TWO_SETS: &str = r#"{
        "set": [{"name": "I", "data": [1, 2]}, {"name": "J", "data": [1, 2, 3]}],
        "parameter": [
            {"name": "a", "domain": "{i <in> I, j <in> J}", "data": [[1, 2, 3], [4, 5, 6]]},
            {"name": "b", "domain": "{i <in> I}", "data": [7, 9]}
        ],
        "variable": [{"name": "y", "domain": "{i <in> I, j <in> J}"}],
        "objective": [{"name": "cost", "sense": "min", "function": "<sum>_{i <in> I} <sum>_{j <in> J} a_{i,j} y_{i,j}"}],
        "constraint": [
            {"name": "need", "domain": "{i <in> I}", "function": "<sum>_{j <in> J} y_{i,j} >= b_{i}"},
            {"name": "cap", "function": "<sum>_{i <in> I, j <in> J} y_{i,j} <= 100"}
        ]
    }"#;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn objective(m: &StructuredModel) -> Option<f64> {
        solve_mip(&expand(m).ok()?, &SolverConfig::default()).objective_value
    }

    #[test]
    fn rename_sum_index_example() {
        let m = parse_model(EXAMPLE).unwrap();
        let mut seen = BTreeSet::new();
        for seed in 0..40 {
            let p = perturb_positive(&m, PositiveKind::RenameSumIndex, &mut rng(seed)).unwrap();
            for f in p
                .objectives
                .iter()
                .map(|o| &o.function)
                .chain(p.constraints.iter().map(|c| &c.function))
            {
                seen.insert(f.clone());
            }
            assert_eq!(objective(&p), Some(20.0));
        }
        assert!(seen.contains("<sum>_{j <in> I} x_{j} <= 4"), "{seen:?}");
    }

    #[test]
    fn flip_inequality_example() {
        let mut m = parse_model(EXAMPLE).unwrap();
        m.constraints[0].function = "x_{i} + 1 <= 5".into();
        m.constraints[0].domain = "{i <in> I}".into();
        let p = perturb_positive(&m, PositiveKind::FlipInequality, &mut rng(0)).unwrap();
        assert_eq!(p.constraints[0].function, "5 >= x_{i} + 1");
        let chain = parse_model(EXAMPLE).unwrap();
        let mut c = chain.clone();
        c.constraints[0].function = "0 <= <sum>_{i <in> I} x_{i} < 4".into();
        let p = perturb_positive(&c, PositiveKind::FlipInequality, &mut rng(0)).unwrap();
        assert_eq!(p.constraints[0].function, "4 > <sum>_{i <in> I} x_{i} >= 0");
    }

    #[test]
    fn flip_without_constraints_has_no_site() {
        let mut m = parse_model(EXAMPLE).unwrap();
        m.constraints.clear();
        assert!(matches!(
            perturb_positive(&m, PositiveKind::FlipInequality, &mut rng(0)),
            Err(AugmentError::NoApplicableSite(_))
        ));
    }

    #[test]
    fn positives_preserve_objective_on_a_two_set_model() {
        let m = parse_model(TWO_SETS).unwrap();
        let base = objective(&m).unwrap();
        for seed in 0..20 {
            for kind in PositiveKind::ALL {
                let p = perturb_positive(&m, kind, &mut rng(seed)).unwrap();
                assert!((objective(&p).unwrap() - base).abs() < 1e-6, "{kind:?} {p:?}");
            }
        }
    }

    #[test]
    fn objective_reverse_only_changes_sense() {
        let m = parse_model(EXAMPLE).unwrap();
        let p = perturb_negative(&m, NegativeKind::ObjectiveReverse, &mut rng(0)).unwrap();
        assert_eq!(p.objectives[0].sense, Sense::Min);
        let mut back = p.clone();
        back.objectives[0].sense = Sense::Max;
        assert_eq!(back, m);
    }

    #[test]
    fn set_tamper_breaks_dependent_parameters() {
        let m = parse_model(EXAMPLE).unwrap();
        let mut removed = false;
        for seed in 0..20 {
            let p = perturb_negative(&m, NegativeKind::SetDataTamper, &mut rng(seed)).unwrap();
            let codes: Vec<ViolationCode> = validate(&p).into_iter().map(|v| v.code).collect();
            assert!(codes.contains(&ViolationCode::DimensionMismatch));
            removed |= p.sets[0].data.len() == 1;
        }
        assert!(removed);
    }

    #[test]
    fn relation_flip_changes_the_answer() {
        let m = parse_model(EXAMPLE).unwrap();
        let p = perturb_negative(&m, NegativeKind::RelationFlipInPlace, &mut rng(0)).unwrap();
        assert_eq!(p.constraints[0].function, "<sum>_{i <in> I} x_{i} >= 4");
        let cm = expand(&p).unwrap();
        let r = solve_mip(&cm, &SolverConfig::default());
        assert!(r.objective_value.is_none_or(|v| (v - 20.0).abs() > 1e-6));
    }

    #[test]
    fn every_negative_changes_the_serialized_model() {
        let m = parse_model(TWO_SETS).unwrap();
        for kind in NegativeKind::ALL {
            for seed in 0..10 {
                let p = perturb_negative(&m, kind, &mut rng(seed)).unwrap();
                assert_ne!(p.to_json(), m.to_json(), "{kind:?}");
            }
        }
    }

    #[test]
    fn negative_sites_can_be_missing() {
        let m = parse_model(EXAMPLE).unwrap();
        for kind in [NegativeKind::SubscriptSwap, NegativeKind::SumDomainSwap] {
            assert!(matches!(
                perturb_negative(&m, kind, &mut rng(0)),
                Err(AugmentError::NoApplicableSite(_))
            ));
        }
    }

    #[test]
    fn column_drop_and_reshuffle() {
        let m = parse_model(TWO_SETS).unwrap();
        let p = perturb_negative(&m, NegativeKind::ParamColumnDrop, &mut rng(4)).unwrap();
        let shrunk = p
            .parameters
            .iter()
            .zip(&m.parameters)
            .filter(|(a, b)| a.data.flatten().len() < b.data.flatten().len())
            .count();
        assert_eq!(shrunk, 1);
        let p = perturb_negative(&m, NegativeKind::ParamReshuffle, &mut rng(4)).unwrap();
        let changed: Vec<_> = p
            .parameters
            .iter()
            .zip(&m.parameters)
            .filter(|(a, b)| a.data != b.data)
            .collect();
        assert_eq!(changed.len(), 1);
        let (a, b) = changed[0];
        let (mut x, mut y) = (a.data.flatten(), b.data.flatten());
        x.sort_by(f64::total_cmp);
        y.sort_by(f64::total_cmp);
        assert_eq!(x, y);
    }

    #[test]
    fn layer_attribution() {
        assert_eq!(NegativeKind::ParamReshuffle.layer(), Layer::SP);
        assert_eq!(NegativeKind::ConstraintDelete.layer(), Layer::OC);
    }
}
