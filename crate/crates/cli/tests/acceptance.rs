//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

use std::path::Path;
use std::process::{Command, Output};
use std::time::{Duration, Instant};

use orsearch_core::benchmark::{build_fixtures, BenchEntry};
use orsearch_core::formula::FormulaErrorKind;
use orsearch_core::instantiate::FEASIBILITY_TOL;
use orsearch_core::oracle::{brute_force_mip, random_bounded_mip, random_point, random_structured_model, MIP_UPPER};
use orsearch_core::synth::generate_many;
use orsearch_core::{
    aggregate_preference, derive_seed, evaluate_naive, expand, oracle_suite, parse_domain, parse_formula,
    perturb_positive, run_bench, run_search, sigmoid, solve_mip, symmetric_preference, Algorithm, Assignment,
    BenchConfig, Expr, FormulaAst, NoiseModel, PositiveKind, SearchConfig, SolveStatus, SolverConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;
type Criterion = (&'static str, &'static str, fn() -> Check);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    ensure(elapsed < limit, || format!("took {elapsed:.2?}, limit {limit:?}"))
}

fn step_counts() -> Check {
    let start = Instant::now();
    let fx = build_fixtures(1, 1, 4).map_err(|e| e.to_string())?.remove(0);
    let expected = [
        (Algorithm::Greedy, 2, 9),
        (Algorithm::Beam, 2, 15),
        (Algorithm::Beam, 3, 21),
        (Algorithm::BPP, 2, 15),
        (Algorithm::BPP, 3, 21),
        (Algorithm::FullTraverse, 2, 39),
    ];
    let mut seen = Vec::new();
    for (algorithm, k, steps) in expected {
        let cfg = SearchConfig::new(algorithm).with_beam_width(k);
        let suite = oracle_suite(fx.problem.clone(), NoiseModel::default());
        let out = run_search(&fx.problem.question, &cfg, &suite).map_err(|e| e.to_string())?;
        ensure(out.reasoning_steps == steps, || {
            format!("{algorithm}(k={k}) took {} steps, want {steps}", out.reasoning_steps)
        })?;
        seen.push(out.reasoning_steps.to_string());
    }
    within(start.elapsed(), Duration::from_secs(1))?;
    Ok(format!("steps {}", seen.join("/")))
}

fn kind_of(text: &str) -> Option<FormulaErrorKind> {
    parse_formula(text).err().map(|e| e.kind)
}

fn grammar() -> Check {
    let start = Instant::now();
    let split = parse_formula("x + y < 0, y + z < 1").map_err(|e| e.to_string())?;
    ensure(split.len() == 2 && split.iter().all(|a| a.as_chain().is_some()), || {
        format!("comma split gave {split:?}")
    })?;

    let merged = parse_formula("<sum>_{i <in> I} <sum>_{j <in> J} x_{i,j}").map_err(|e| e.to_string())?;
    let want = FormulaAst::Expr(Expr::sum(
        vec![
            orsearch_core::formula::IndexBinding::new("i", "I"),
            orsearch_core::formula::IndexBinding::new("j", "J"),
        ],
        Expr::reference("x", &["i", "j"]),
    ));
    ensure(merged == vec![want], || format!("sums not merged: {merged:?}"))?;

    let implicit = parse_formula("<sum>_{i <in> I}(a_{i}x_{i} + b_{i}y_{i})").map_err(|e| e.to_string())?;
    let explicit = parse_formula("<sum>_{i <in> I}(a_{i}*x_{i} + b_{i}*y_{i})").map_err(|e| e.to_string())?;
    ensure(implicit == explicit, || {
        "implicit multiplication differs from explicit".into()
    })?;
    let mut has_product = false;
    implicit[0].expressions()[0].walk(&mut |e| {
        if let Expr::Mul(a, b) = e {
            if **a == Expr::reference("a", &["i"]) && **b == Expr::reference("x", &["i"]) {
                has_product = true;
            }
        }
    });
    ensure(has_product, || "no Mul(a_i, x_i) node".into())?;

    let chain = parse_formula("a<b<c").map_err(|e| e.to_string())?;
    let links = chain[0].as_chain().map(|c| (c.operands.len(), c.relations.clone()));
    ensure(
        links
            == Some((
                3,
                vec![
                    orsearch_core::formula::Relation::Lt,
                    orsearch_core::formula::Relation::Lt,
                ],
            )),
        || format!("a<b<c parsed as {chain:?}"),
    )?;

    ensure(
        kind_of("<sum>_{i <in> Successors_{k}} x_{i}") == Some(FormulaErrorKind::UnsupportedParametrizedSumDomain),
        || "parametrized sum domain not rejected".into(),
    )?;
    let nested = parse_domain("{i <in> P {k <in> A}}").err().map(|e| e.kind);
    ensure(nested == Some(FormulaErrorKind::NestedDomain), || {
        format!("nested domain gave {nested:?}")
    })?;
    ensure(
        kind_of("x_{i,1} <= 5") == Some(FormulaErrorKind::UnsupportedNumericSubscript),
        || "numeric subscript not rejected".into(),
    )?;
    within(start.elapsed(), Duration::from_secs(1))?;
    Ok("4 supported forms, 3 unsupported forms".into())
}

fn solver_oracle() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let cfg = SolverConfig::default();
    let mut feasible = 0;
    for k in 0..100 {
        let model = random_bounded_mip(&mut rng, 6, 8);
        let r = solve_mip(&model, &cfg);
        match brute_force_mip(&model, MIP_UPPER, 1e-9) {
            Some(best) => {
                feasible += 1;
                let ok =
                    r.status == SolveStatus::Optimal && r.objective_value.is_some_and(|v| (v - best).abs() <= 1e-6);
                ensure(ok, || {
                    format!(
                        "instance {k}: solver {:?} {:?}, brute force {best}",
                        r.status, r.objective_value
                    )
                })?;
            }
            None => ensure(r.status == SolveStatus::Infeasible, || {
                format!("instance {k}: brute force infeasible, solver {:?}", r.status)
            })?,
        }
    }
    within(start.elapsed(), Duration::from_secs(60))?;
    Ok(format!(
        "100/100 agree ({feasible} feasible) in {:.2?}",
        start.elapsed()
    ))
}

fn expansion_oracle() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut agreements = 0;
    for m in 0..200 {
        let model = random_structured_model(&mut rng);
        let concrete = expand(&model).map_err(|e| format!("model {m}: {e}"))?;
        for _ in 0..5 {
            let x = random_point(&concrete, &mut rng);
            let naive = evaluate_naive(&model, &Assignment::from_columns(&concrete, &x)).map_err(|e| e.to_string())?;
            let objective_ok = (naive.objective - concrete.objective_value(&x)).abs() <= 1e-9;
            let rows_ok = naive.constraints.len() == concrete.constraints.len()
                && concrete
                    .constraints
                    .iter()
                    .zip(&naive.constraints)
                    .all(|(row, check)| row.is_satisfied(&x, FEASIBILITY_TOL) == check.satisfied);
            if objective_ok && rows_ok {
                agreements += 1;
            }
        }
    }
    ensure(agreements == 1000, || format!("{agreements}/1000 agreements"))?;
    Ok("1000/1000 agreements".into())
}

fn positive_conservation() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let cfg = SolverConfig::default();
    let models = generate_many(50, &mut rng);
    let mut variants = 0;
    for (m, g) in models.iter().enumerate() {
        let base = solve_mip(&expand(&g.model).map_err(|e| e.to_string())?, &cfg);
        let reference = base
            .objective_value
            .ok_or_else(|| format!("model {m} does not solve"))?;
        for kind in PositiveKind::ALL {
            for s in 0..3 {
                let mut r = ChaCha8Rng::seed_from_u64(derive_seed(m as u64, s));
                let variant =
                    perturb_positive(&g.model, kind, &mut r).map_err(|e| format!("model {m} {kind:?}: {e}"))?;
                let v = expand(&variant).ok().and_then(|c| solve_mip(&c, &cfg).objective_value);
                ensure(v.is_some_and(|v| (v - reference).abs() <= 1e-6), || {
                    format!("model {m} {}: {v:?} vs {reference}", kind.as_str())
                })?;
                variants += 1;
            }
        }
    }
    Ok(format!("{variants} variants over 50 models keep the objective"))
}

fn perfect_judge_dominance() -> Check {
    let fixtures = build_fixtures(50, 606, 4).map_err(|e| e.to_string())?;
    let mut with_correct = 0;
    let mut violations = 0;
    for t in 0..500u64 {
        let f = &fixtures[t as usize % fixtures.len()];
        let noise = NoiseModel {
            perfect_judge: true,
            ..NoiseModel::default().with_stddev(3.0).with_seed(derive_seed(9, t))
        };
        let cfg = SearchConfig::new(Algorithm::BPP)
            .with_beam_width(2 + (t as usize % 2))
            .with_seed(derive_seed(10, t));
        let out = run_search(&f.problem.question, &cfg, &oracle_suite(f.problem.clone(), noise))
            .map_err(|e| e.to_string())?;
        let any_correct = out
            .final_queue
            .iter()
            .any(|e| f.problem.is_correct_path(&out.leaf_fragments(e.node)));
        if any_correct {
            with_correct += 1;
            if !f.problem.is_correct_path(&out.chosen_fragments()) {
                violations += 1;
            }
        }
    }
    ensure(violations == 0 && with_correct > 0, || {
        format!("{violations} violations among {with_correct} trials with a correct leaf")
    })?;
    Ok(format!(
        "0 violations over 500 trials ({with_correct} with a correct leaf in the queue)"
    ))
}

fn noisy_ordering() -> Check {
    let start = Instant::now();
    let fixtures = build_fixtures(200, 2024, 4).map_err(|e| e.to_string())?;
    let cfg = BenchConfig {
        entries: vec![
            BenchEntry::new(Algorithm::Greedy),
            BenchEntry::beam(Algorithm::Beam, 2),
            BenchEntry::beam(Algorithm::Beam, 3),
            BenchEntry::beam(Algorithm::BPP, 2),
            BenchEntry::beam(Algorithm::BPP, 3),
        ],
        noise: NoiseModel::default().with_stddev(3.0),
        seed: 7,
        ..BenchConfig::default()
    };
    let report = run_bench(&fixtures, &cfg).map_err(|e| e.to_string())?;
    let rate = |l: &str| report.row(l).map(|r| r.correct_rate).unwrap_or(f64::NAN);
    let (g, b2, b3, p2, p3) = (
        rate("greedy"),
        rate("beam(k=2)"),
        rate("beam(k=3)"),
        rate("bpp(k=2)"),
        rate("bpp(k=3)"),
    );
    let summary = format!("greedy {g:.3}, beam k2 {b2:.3}, k3 {b3:.3}, bpp k2 {p2:.3}, k3 {p3:.3} over 200 fixtures");
    ensure(p2 >= b2 && p3 >= b3 && b2 >= g - 0.02, || summary.clone())?;
    within(start.elapsed(), Duration::from_secs(300))?;
    Ok(summary)
}

fn unit_checks() -> Check {
    ensure(sigmoid(0.0) == 0.5, || format!("sigmoid(0) = {}", sigmoid(0.0)))?;
    // S(A>B)=0.8, S(A>C)=0.6
    let prefs = vec![vec![0.0, 0.8, 0.6], vec![0.2, 0.0, 0.5], vec![0.4, 0.5, 0.0]];
    let agg = aggregate_preference(&prefs).map_err(|e| e.to_string())?;
    ensure((agg[0] - 0.7).abs() <= 1e-12, || format!("S(A) = {}", agg[0]))?;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..1000 {
        let (ab, ba) = (rng.random_range(-20.0..20.0), rng.random_range(-20.0..20.0));
        let total = symmetric_preference(ab, ba) + symmetric_preference(ba, ab);
        ensure((total - 1.0).abs() <= 1e-12, || {
            format!("S(A>B)+S(B>A) = {total} for ({ab}, {ba})")
        })?;
    }
    Ok("sigmoid(0)=0.5, S(A)=0.7, symmetric sums to 1".into())
}

fn orsearch(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_orsearch"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn cli_determinism() -> Check {
    let dir = std::env::temp_dir().join(format!("orsearch-acceptance-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data");
    let s = |p: &Path| p.to_str().unwrap().to_string();

    let mut runs: Vec<(String, Vec<String>)> = Vec::new();
    let fx = dir.join("fx");
    let gen = orsearch(&["--seed", "11", "fixtures", &s(&fx), "--count", "12"]);
    ensure(gen.status.success(), || {
        String::from_utf8_lossy(&gen.stderr).into_owned()
    })?;
    runs.push((
        "bench".into(),
        vec![
            "--seed".into(),
            "11".into(),
            "bench".into(),
            s(&fx),
            "--noise-stddev".into(),
            "3".into(),
            "--report".into(),
            "{out}/r.csv".into(),
            "--trials".into(),
            "{out}/t.csv".into(),
        ],
    ));
    runs.push((
        "search".into(),
        vec![
            "--seed".into(),
            "11".into(),
            "search".into(),
            s(&fx.join("fx-003.json")),
            "--algorithm".into(),
            "bpp".into(),
            "--noise-stddev".into(),
            "3".into(),
        ],
    ));
    runs.push((
        "fixtures".into(),
        vec![
            "--seed".into(),
            "11".into(),
            "fixtures".into(),
            "{out}/fx".into(),
            "--count".into(),
            "6".into(),
        ],
    ));
    runs.push((
        "augment".into(),
        vec![
            "--seed".into(),
            "11".into(),
            "augment".into(),
            s(&data.join("sources.json")),
            "-o".into(),
            "{out}/prm.jsonl".into(),
        ],
    ));
    runs.push((
        "solve".into(),
        vec![
            "solve".into(),
            s(&data.join("profit.json")),
            "--emit-lp".into(),
            "{out}/m.lp".into(),
        ],
    ));

    for (name, args) in &runs {
        let mut first: Option<Vec<u8>> = None;
        for rep in 0..10 {
            let out_dir = dir.join(format!("{name}-{rep}"));
            std::fs::create_dir_all(&out_dir).map_err(|e| e.to_string())?;
            let args: Vec<String> = args.iter().map(|a| a.replace("{out}", &s(&out_dir))).collect();
            let refs: Vec<&str> = args.iter().map(String::as_str).collect();
            let out = orsearch(&refs);
            ensure(out.status.code().is_some_and(|c| c <= 1), || {
                format!("{name}: {}", String::from_utf8_lossy(&out.stderr))
            })?;
            // stdout (with the per-run directory masked) plus every file written
            let mut bytes = String::from_utf8_lossy(&out.stdout)
                .replace(&s(&out_dir), "{out}")
                .into_bytes();
            let mut files: Vec<_> = walk(&out_dir);
            files.sort();
            for f in files {
                bytes.extend(f.strip_prefix(&out_dir).unwrap().to_string_lossy().as_bytes());
                bytes.extend(std::fs::read(&f).map_err(|e| e.to_string())?);
            }
            match &first {
                None => first = Some(bytes),
                Some(b) => ensure(*b == bytes, || format!("{name}: repetition {rep} differs"))?,
            }
        }
    }
    let _ = std::fs::remove_dir_all(&dir);
    Ok(format!("{} commands x 10 repetitions byte-identical", runs.len()))
}

fn walk(dir: &Path) -> Vec<std::path::PathBuf> {
    let mut out = Vec::new();
    if let Ok(entries) = std::fs::read_dir(dir) {
        for e in entries.flatten() {
            let p = e.path();
            if p.is_dir() {
                out.extend(walk(&p));
            } else {
                out.push(p);
            }
        }
    }
    out
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("1", "step counts", step_counts),
        ("2", "grammar conformance", grammar),
        ("3", "solver vs brute force", solver_oracle),
        ("4", "expansion vs naive evaluation", expansion_oracle),
        ("5", "positive perturbations keep the objective", positive_conservation),
        ("6a", "perfect-judge dominance", perfect_judge_dominance),
        ("6b", "noisy ordering", noisy_ordering),
        ("7", "sigmoid and preference arithmetic", unit_checks),
        ("8", "CLI determinism", cli_determinism),
    ];
    let mut failed = 0;
    for (id, name, check) in criteria {
        let start = Instant::now();
        match check() {
            Ok(detail) => println!("PASS criterion {id} ({name}): {detail} [{:.2?}]", start.elapsed()),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {id} ({name}): {detail} [{:.2?}]", start.elapsed());
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
