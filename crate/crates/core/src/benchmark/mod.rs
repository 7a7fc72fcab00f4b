//! Oracle benchmark: every configured search algorithm over a set of planted
//! fixtures, scored by whether the chosen leaf solves to the reference
//! objective.

mod fixture;

use std::fmt::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adapters::{oracle_suite, NoiseModel};
use crate::derive_seed;
use crate::search::{run_search, Algorithm, SearchConfig, SearchError};
use crate::solver::SolverConfig;

pub use fixture::{build_fixture, build_fixtures, leaf_objective, Fixture};

/// Objective tolerance for calling a trial correct.
pub const OBJECTIVE_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("no fixtures to run")]
    EmptyFixtureSet,
    #[error("fixture {fixture}: {source}")]
    Search {
        fixture: String,
        #[source]
        source: SearchError,
    },
    #[error("could not build fixture: {0}")]
    Fixture(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchEntry {
    pub algorithm: Algorithm,
    #[serde(default)]
    pub beam_width: Option<usize>,
}

impl BenchEntry {
    pub fn new(algorithm: Algorithm) -> Self {
        Self {
            algorithm,
            beam_width: None,
        }
    }

    pub fn beam(algorithm: Algorithm, k: usize) -> Self {
        Self {
            algorithm,
            beam_width: Some(k),
        }
    }

    pub fn label(&self) -> String {
        match (self.algorithm.uses_beam(), self.beam_width) {
            (true, Some(k)) => format!("{}(k={k})", self.algorithm),
            _ => self.algorithm.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    pub entries: Vec<BenchEntry>,
    /// Branching, epsilon, threshold and default beam width; algorithm and
    /// seed are set per trial.
    pub search: SearchConfig,
    pub noise: NoiseModel,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            entries: vec![
                BenchEntry::new(Algorithm::Greedy),
                BenchEntry::new(Algorithm::EpsilonGreedy),
                BenchEntry::new(Algorithm::RandomGreedy),
                BenchEntry::beam(Algorithm::Beam, 2),
                BenchEntry::beam(Algorithm::Beam, 3),
                BenchEntry::beam(Algorithm::BPP, 2),
                BenchEntry::beam(Algorithm::BPP, 3),
                BenchEntry::new(Algorithm::FullTraverse),
            ],
            search: SearchConfig::default(),
            noise: NoiseModel::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub fixture: String,
    pub algorithm: String,
    /// Zero for algorithms without a beam.
    pub beam_width: usize,
    pub search_seed: u64,
    pub noise_seed: u64,
    pub steps: usize,
    pub chosen_objective: Option<f64>,
    pub reference_objective: f64,
    pub correct: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub algorithm: String,
    pub config: String,
    pub trials: usize,
    pub correct: usize,
    pub correct_rate: f64,
    pub mean_steps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    /// Ordered by fixture name, then entry order.
    pub trials: Vec<TrialRecord>,
}

pub const REPORT_CSV_HEADER: &str = "algorithm,config,trials,correct,correct_rate,mean_steps";
pub const TRIALS_CSV_HEADER: &str =
    "fixture,algorithm,beam_width,search_seed,noise_seed,steps,chosen_objective,reference_objective,correct";

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

impl BenchReport {
    pub fn row(&self, label: &str) -> Option<&BenchRow> {
        self.rows.iter().find(|r| r.algorithm == label)
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("{REPORT_CSV_HEADER}\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{:.6},{:.3}",
                r.algorithm, r.config, r.trials, r.correct, r.correct_rate, r.mean_steps
            );
        }
        out
    }

    pub fn trials_csv(&self) -> String {
        let mut out = format!("{TRIALS_CSV_HEADER}\n");
        for t in &self.trials {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{:.6},{}",
                t.fixture,
                t.algorithm,
                t.beam_width,
                t.search_seed,
                t.noise_seed,
                t.steps,
                opt(t.chosen_objective),
                t.reference_objective,
                u8::from(t.correct)
            );
        }
        out
    }

    pub fn to_table(&self) -> String {
        let width = self.rows.iter().map(|r| r.algorithm.len()).max().unwrap_or(9).max(9);
        let mut out = format!(
            "{:<width$}  {:>6}  {:>12}  {:>10}\n",
            "algorithm", "trials", "correct_rate", "mean_steps"
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:<width$}  {:>6}  {:>12.4}  {:>10.2}",
                r.algorithm, r.trials, r.correct_rate, r.mean_steps
            );
        }
        out
    }
}

/// Runs every entry over every fixture. Trials run in parallel; each one
/// derives its seeds from the config seed and its position, so the report
/// does not depend on scheduling. Noise seeds depend only on the fixture,
/// so all algorithms see the same scorer noise on a given fixture.
pub fn run_bench(fixtures: &[Fixture], cfg: &BenchConfig) -> Result<BenchReport, BenchError> {
    if fixtures.is_empty() {
        return Err(BenchError::EmptyFixtureSet);
    }
    let mut order: Vec<&Fixture> = fixtures.iter().collect();
    order.sort_by(|a, b| a.name.cmp(&b.name));
    let solver = SolverConfig::default();

    let jobs: Vec<(usize, usize)> = (0..order.len())
        .flat_map(|f| (0..cfg.entries.len()).map(move |e| (f, e)))
        .collect();
    let trials = jobs
        .par_iter()
        .map(|&(f, e)| {
            let fixture = order[f];
            let entry = cfg.entries[e];
            let noise_seed = derive_seed(cfg.seed, f as u64);
            let search_seed = derive_seed(noise_seed, e as u64 + 1);
            let noise = NoiseModel {
                rng_seed: noise_seed,
                ..cfg.noise.clone()
            };
            let search = SearchConfig {
                algorithm: entry.algorithm,
                beam_width: entry.beam_width.unwrap_or(cfg.search.beam_width),
                rng_seed: search_seed,
                ..cfg.search.clone()
            };
            let suite = oracle_suite(fixture.problem.clone(), noise);
            let outcome =
                run_search(&fixture.problem.question, &search, &suite).map_err(|source| BenchError::Search {
                    fixture: fixture.name.clone(),
                    source,
                })?;
            let chosen = leaf_objective(&outcome.chosen_fragments(), &solver);
            let correct = chosen.is_some_and(|v| (v - fixture.reference_objective).abs() <= OBJECTIVE_TOL);
            Ok(TrialRecord {
                fixture: fixture.name.clone(),
                algorithm: entry.label(),
                beam_width: if entry.algorithm.uses_beam() {
                    search.beam_width
                } else {
                    0
                },
                search_seed,
                noise_seed,
                steps: outcome.reasoning_steps,
                chosen_objective: chosen,
                reference_objective: fixture.reference_objective,
                correct,
            })
        })
        .collect::<Result<Vec<_>, BenchError>>()?;

    let rows = cfg
        .entries
        .iter()
        .map(|entry| {
            let label = entry.label();
            let mine: Vec<&TrialRecord> = trials.iter().filter(|t| t.algorithm == label).collect();
            let correct = mine.iter().filter(|t| t.correct).count();
            let n = mine.len();
            let config = match entry.algorithm {
                Algorithm::EpsilonGreedy => format!("b={} eps={}", cfg.search.branching, cfg.search.epsilon),
                Algorithm::RandomGreedy => format!("b={} threshold={}", cfg.search.branching, cfg.search.threshold),
                a if a.uses_beam() => format!(
                    "b={} k={}",
                    cfg.search.branching,
                    entry.beam_width.unwrap_or(cfg.search.beam_width)
                ),
                _ => format!("b={}", cfg.search.branching),
            };
            BenchRow {
                algorithm: label,
                config,
                trials: n,
                correct,
                correct_rate: correct as f64 / n as f64,
                mean_steps: mine.iter().map(|t| t.steps as f64).sum::<f64>() / n as f64,
            }
        })
        .collect();
    Ok(BenchReport { rows, trials })
}
