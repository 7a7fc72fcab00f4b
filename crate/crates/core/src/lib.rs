//! Structured optimization models, their expansion into LP/MIP form, a small
//! exact solver, and process-scored tree search over model fragments.

pub mod adapters;
pub mod augment;
pub mod benchmark;
pub mod formula;
pub mod instantiate;
pub mod model;
pub mod oracle;
pub mod search;
pub mod solver;
pub mod synth;

pub use adapters::{http_suite, oracle_suite, HttpConfig, NoiseModel, PlantedProblem};
pub use augment::{
    build_prm_dataset, perturb_negative, perturb_positive, segment_path, AugmentError, AugmentPlan, LabeledPrefix,
    NegativeKind, PathLabel, PositiveKind, SourceModel,
};
pub use benchmark::{run_bench, BenchConfig, BenchEntry, BenchError, BenchReport, Fixture};
pub use formula::{parse_domain, parse_formula, print_formula, Expr, FormulaAst, FormulaError};
pub use instantiate::{emit_lp, evaluate_naive, expand, Assignment, ConcreteModel, ExpandError, LinearExpr};
pub use model::{parse_model, render_markdown, validate, ModelError, StructuredModel, Violation};
pub use search::{
    aggregate_preference, run_search, select_epsilon_greedy, select_greedy, select_random_greedy, sigmoid,
    symmetric_preference, Algorithm, Layer, ScorerSuite, SearchConfig, SearchError, SearchOutcome,
};
pub use solver::{solve_lp, solve_mip, SolveResult, SolveStatus, SolverConfig};

/// Mixes a stream id into a seed (splitmix64 finalizer), for independent
/// per-item RNG streams.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
