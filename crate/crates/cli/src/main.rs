mod config;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use orsearch_core::augment::label_malformed;
use orsearch_core::benchmark::{build_fixtures, leaf_objective, OBJECTIVE_TOL};
use orsearch_core::{
    build_prm_dataset, emit_lp, expand, http_suite, oracle_suite, parse_model, render_markdown, run_bench, run_search,
    solve_lp, solve_mip, validate, Algorithm, AugmentPlan, Fixture, LabeledPrefix, SolveStatus, SourceModel,
};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use config::Config;

#[derive(Parser)]
#[command(
    name = "orsearch",
    version,
    about = "Validate, expand, solve and search structured optimization models"
)]
struct Cli {
    /// Seed for every random choice; overrides `seed` in the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// TOML configuration file.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a model against the schema rules; prints one violation per line.
    Validate { model: PathBuf },
    /// Expand a model into its concrete rows.
    Instantiate {
        model: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Lp)]
        format: Format,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Solve a model and print its status and objective.
    Solve {
        model: PathBuf,
        /// Also write the LP text here.
        #[arg(long, value_name = "FILE")]
        emit_lp: Option<PathBuf>,
        #[arg(long)]
        max_pivots: Option<usize>,
        #[arg(long)]
        max_nodes: Option<usize>,
        /// Solve the continuous relaxation only.
        #[arg(long)]
        relax: bool,
        /// Print the value of every variable after the status line.
        #[arg(long)]
        values: bool,
    },
    /// Run one tree search on a fixture, or against a scoring service.
    Search {
        /// Fixture JSON (planted problem plus reference objective).
        fixture: Option<PathBuf>,
        #[arg(long)]
        algorithm: Option<Algorithm>,
        #[arg(long)]
        beam_width: Option<usize>,
        #[arg(long)]
        noise_stddev: Option<f64>,
        /// Base URL of a generate/score/prefer service; replaces the oracle.
        #[arg(long)]
        endpoint: Option<String>,
        /// Question text when searching without a fixture.
        #[arg(long)]
        question: Option<String>,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Build a labeled prefix dataset (JSONL) from source models.
    Augment {
        /// JSON array of `{"question": ..., "model": {...}}` objects.
        input: PathBuf,
        /// Variants per applicable kind when the config has no `[augment]` plan.
        #[arg(long, default_value_t = 1)]
        per_kind: usize,
        /// JSON array of `{"question": ..., "text": ...}` objects holding
        /// model outputs that failed to parse; labeled incorrect.
        #[arg(long, value_name = "FILE")]
        malformed: Option<PathBuf>,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Run the oracle benchmark over a directory of fixture files.
    Bench {
        fixtures: PathBuf,
        #[arg(long)]
        noise_stddev: Option<f64>,
        /// Per-algorithm CSV.
        #[arg(long, value_name = "FILE")]
        report: Option<PathBuf>,
        /// Per-trial CSV.
        #[arg(long, value_name = "FILE")]
        trials: Option<PathBuf>,
    },
    /// Generate planted fixtures from synthetic models.
    Fixtures {
        out_dir: PathBuf,
        #[arg(long, default_value_t = 20)]
        count: usize,
        #[arg(long, default_value_t = 4)]
        decoys: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Lp,
    Json,
    Markdown,
}

/// Successful runs that still report a negative domain answer exit with 1.
enum Outcome {
    Ok,
    Negative,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::Negative) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write_or_print(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_model(path: &Path) -> Result<orsearch_core::StructuredModel> {
    parse_model(&read(path)?).with_context(|| format!("parsing {}", path.display()))
}

fn run(cli: Cli) -> Result<Outcome> {
    let cfg = Config::load(cli.config.as_deref())?;
    let seed = cli.seed.or(cfg.seed).unwrap_or(0);
    match cli.command {
        Command::Validate { model } => cmd_validate(&model),
        Command::Instantiate { model, format, output } => cmd_instantiate(&model, format, output.as_deref()),
        Command::Solve {
            model,
            emit_lp,
            max_pivots,
            max_nodes,
            relax,
            values,
        } => {
            let mut solver = cfg.solver.clone();
            if let Some(n) = max_pivots {
                solver.max_pivots = n;
            }
            if let Some(n) = max_nodes {
                solver.max_nodes = n;
            }
            cmd_solve(&model, emit_lp.as_deref(), &solver, relax, values)
        }
        Command::Search {
            fixture,
            algorithm,
            beam_width,
            noise_stddev,
            endpoint,
            question,
            output,
        } => {
            let mut search = cfg.search.clone();
            search.rng_seed = seed;
            if let Some(a) = algorithm {
                search.algorithm = a;
            }
            if let Some(k) = beam_width {
                search.beam_width = k;
            }
            let mut noise = cfg.noise.clone();
            noise.rng_seed = seed;
            if let Some(s) = noise_stddev {
                noise.logit_stddev = s;
            }
            let fixture = fixture.as_deref().map(load_fixture).transpose()?;
            let question = match (&question, &fixture) {
                (Some(q), _) => q.clone(),
                (None, Some(f)) => f.problem.question.clone(),
                (None, None) => bail!("search needs a fixture file or --question"),
            };
            let suite = match (&endpoint, &fixture) {
                (Some(url), _) => http_suite(url, cfg.http.clone()).0,
                (None, Some(f)) => oracle_suite(f.problem.clone(), noise),
                (None, None) => bail!("search without a fixture needs --endpoint"),
            };
            let outcome = run_search(&question, &search, &suite)?;
            let chosen = fixture
                .as_ref()
                .map(|_| leaf_objective(&outcome.chosen_fragments(), &cfg.solver));
            let correct = fixture.as_ref().map(|f| {
                chosen
                    .flatten()
                    .is_some_and(|v| (v - f.reference_objective).abs() <= OBJECTIVE_TOL)
            });
            let doc = SearchDoc {
                fixture: fixture.as_ref().map(|f| f.name.clone()),
                report: outcome.report(),
                chosen_objective: chosen.flatten(),
                reference_objective: fixture.as_ref().map(|f| f.reference_objective),
                correct,
            };
            write_or_print(output.as_deref(), &format!("{}\n", serde_json::to_string_pretty(&doc)?))?;
            Ok(if correct == Some(false) {
                Outcome::Negative
            } else {
                Outcome::Ok
            })
        }
        Command::Augment {
            input,
            per_kind,
            malformed,
            output,
        } => {
            let plan = cfg.augment.clone();
            cmd_augment(&input, plan, per_kind, malformed.as_deref(), output.as_deref(), seed)
        }
        Command::Bench {
            fixtures,
            noise_stddev,
            report,
            trials,
        } => {
            let mut bench = cfg.bench_config(seed);
            if let Some(s) = noise_stddev {
                bench.noise.logit_stddev = s;
            }
            let fx = load_fixture_dir(&fixtures)?;
            let result = run_bench(&fx, &bench)?;
            print!("{}", result.to_table());
            if let Some(p) = report {
                fs::write(&p, result.to_csv()).with_context(|| format!("writing {}", p.display()))?;
            }
            if let Some(p) = trials {
                fs::write(&p, result.trials_csv()).with_context(|| format!("writing {}", p.display()))?;
            }
            Ok(Outcome::Ok)
        }
        Command::Fixtures { out_dir, count, decoys } => {
            let fx = build_fixtures(count, seed, decoys)?;
            fs::create_dir_all(&out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
            for f in &fx {
                let path = out_dir.join(format!("{}.json", f.name));
                fs::write(&path, serde_json::to_string_pretty(f)? + "\n")
                    .with_context(|| format!("writing {}", path.display()))?;
            }
            println!("wrote {} fixtures to {}", fx.len(), out_dir.display());
            Ok(Outcome::Ok)
        }
    }
}

fn cmd_validate(path: &Path) -> Result<Outcome> {
    let model = load_model(path)?;
    let violations = validate(&model);
    for v in &violations {
        println!("{v}");
    }
    if violations.is_empty() {
        println!("ok");
        Ok(Outcome::Ok)
    } else {
        Ok(Outcome::Negative)
    }
}

fn cmd_instantiate(path: &Path, format: Format, output: Option<&Path>) -> Result<Outcome> {
    let model = load_model(path)?;
    if let Format::Markdown = format {
        write_or_print(output, &render_markdown(&model))?;
        return Ok(Outcome::Ok);
    }
    let concrete = match expand(&model) {
        Ok(c) => c,
        Err(e) => {
            println!("{e}");
            return Ok(Outcome::Negative);
        }
    };
    for w in &concrete.warnings {
        eprintln!("warning: {w}");
    }
    let text = match format {
        Format::Lp => emit_lp(&concrete),
        Format::Json => serde_json::to_string_pretty(&concrete)? + "\n",
        Format::Markdown => unreachable!(),
    };
    write_or_print(output, &text)?;
    Ok(Outcome::Ok)
}

fn cmd_solve(
    path: &Path,
    lp_out: Option<&Path>,
    solver: &orsearch_core::SolverConfig,
    relax: bool,
    values: bool,
) -> Result<Outcome> {
    let model = load_model(path)?;
    let concrete = match expand(&model) {
        Ok(c) => c,
        Err(e) => {
            println!("{e}");
            return Ok(Outcome::Negative);
        }
    };
    if let Some(p) = lp_out {
        fs::write(p, emit_lp(&concrete)).with_context(|| format!("writing {}", p.display()))?;
    }
    let result = if relax {
        solve_lp(&concrete, solver)
    } else {
        solve_mip(&concrete, solver)
    };
    match result.objective_value {
        Some(v) => println!("{} {v:.6}", result.status.as_str()),
        None => println!("{}", result.status.as_str()),
    }
    if values {
        if let Some(x) = &result.assignment {
            for (var, v) in concrete.variables.iter().zip(x) {
                println!("{} = {v:.6}", var.lp_name());
            }
        }
    }
    Ok(if result.status == SolveStatus::Optimal {
        Outcome::Ok
    } else {
        Outcome::Negative
    })
}

#[derive(Serialize)]
struct SearchDoc {
    fixture: Option<String>,
    report: orsearch_core::search::SearchReport,
    chosen_objective: Option<f64>,
    reference_objective: Option<f64>,
    correct: Option<bool>,
}

fn load_fixture(path: &Path) -> Result<Fixture> {
    serde_json::from_str(&read(path)?).with_context(|| format!("parsing fixture {}", path.display()))
}

fn load_fixture_dir(dir: &Path) -> Result<Vec<Fixture>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .map(|e| e.map(|e| e.path()))
        .collect::<Result<_, _>>()?;
    paths.retain(|p| p.extension().is_some_and(|e| e == "json"));
    paths.sort();
    paths.iter().map(|p| load_fixture(p)).collect()
}

#[derive(Deserialize)]
struct SourceEntry {
    question: String,
    model: Value,
}

#[derive(Deserialize)]
struct MalformedEntry {
    question: String,
    text: String,
}

fn cmd_augment(
    input: &Path,
    plan: Option<AugmentPlan>,
    per_kind: usize,
    malformed: Option<&Path>,
    output: Option<&Path>,
    seed: u64,
) -> Result<Outcome> {
    let entries: Vec<SourceEntry> =
        serde_json::from_str(&read(input)?).with_context(|| format!("parsing {}", input.display()))?;
    let models = entries
        .into_iter()
        .enumerate()
        .map(|(i, e)| {
            let model =
                parse_model(&e.model.to_string()).with_context(|| format!("model {i} in {}", input.display()))?;
            Ok(SourceModel {
                question: e.question,
                model,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let plan = plan.unwrap_or_else(|| AugmentPlan::uniform_admissible(&models, per_kind));
    let mut records = build_prm_dataset(&models, &plan, seed)?;
    if let Some(p) = malformed {
        let texts: Vec<MalformedEntry> =
            serde_json::from_str(&read(p)?).with_context(|| format!("parsing {}", p.display()))?;
        for t in texts {
            records.extend(label_malformed(&t.question, &[t.text], seed));
        }
    }
    write_or_print(output, &LabeledPrefix::to_jsonl(&records))?;
    eprintln!("{} records", records.len());
    Ok(Outcome::Ok)
}
