//! Layered tree-of-thought search over model fragments.
//!
//! The tree has four layers: the question at the root, then sets and
//! parameters (SP), variables (V), and objective plus constraints (OC).
//! Leaves are complete models.

mod engine;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use engine::{run_search, QueueEntry, SearchOutcome, SearchReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Layer {
    Q,
    SP,
    V,
    OC,
}

impl Layer {
    /// The layers below the root, in descent order.
    pub const SEARCHED: [Layer; 3] = [Layer::SP, Layer::V, Layer::OC];

    pub fn successor(self) -> Option<Layer> {
        match self {
            Layer::Q => Some(Layer::SP),
            Layer::SP => Some(Layer::V),
            Layer::V => Some(Layer::OC),
            Layer::OC => None,
        }
    }

    /// Depth below the root (Q = 0).
    pub fn depth(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Layer::Q => "Q",
            Layer::SP => "SP",
            Layer::V => "V",
            Layer::OC => "OC",
        }
    }
}

impl fmt::Display for Layer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Node {
    pub id: usize,
    pub layer: Layer,
    pub content: String,
    pub parent: Option<usize>,
    pub prm_score: Option<f64>,
}

/// Arena of nodes; ids are indices.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SearchTree {
    pub nodes: Vec<Node>,
}

impl SearchTree {
    pub fn with_root(question: &str) -> Self {
        Self {
            nodes: vec![Node {
                id: 0,
                layer: Layer::Q,
                content: question.to_string(),
                parent: None,
                prm_score: None,
            }],
        }
    }

    pub fn root(&self) -> &Node {
        &self.nodes[0]
    }

    pub fn node(&self, id: usize) -> &Node {
        &self.nodes[id]
    }

    pub fn add_child(&mut self, parent: usize, content: String) -> usize {
        let layer = self.nodes[parent].layer.successor().expect("leaves have no children");
        let id = self.nodes.len();
        self.nodes.push(Node {
            id,
            layer,
            content,
            parent: Some(parent),
            prm_score: None,
        });
        id
    }

    pub fn children(&self, id: usize) -> Vec<usize> {
        self.nodes
            .iter()
            .filter(|n| n.parent == Some(id))
            .map(|n| n.id)
            .collect()
    }

    /// Fragments from the first layer below the root down to `id`.
    pub fn fragments(&self, id: usize) -> Vec<String> {
        let mut out = Vec::new();
        let mut cur = Some(id);
        while let Some(c) = cur {
            let node = &self.nodes[c];
            if node.layer != Layer::Q {
                out.push(node.content.clone());
            }
            cur = node.parent;
        }
        out.reverse();
        out
    }

    pub fn leaves(&self) -> Vec<usize> {
        self.nodes
            .iter()
            .filter(|n| n.layer == Layer::OC)
            .map(|n| n.id)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Greedy,
    EpsilonGreedy,
    RandomGreedy,
    Beam,
    #[serde(rename = "bpp")]
    BPP,
    FullTraverse,
    Direct,
}

impl Algorithm {
    pub const ALL: [Algorithm; 7] = [
        Algorithm::Greedy,
        Algorithm::EpsilonGreedy,
        Algorithm::RandomGreedy,
        Algorithm::Beam,
        Algorithm::BPP,
        Algorithm::FullTraverse,
        Algorithm::Direct,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Greedy => "greedy",
            Algorithm::EpsilonGreedy => "epsilon_greedy",
            Algorithm::RandomGreedy => "random_greedy",
            Algorithm::Beam => "beam",
            Algorithm::BPP => "bpp",
            Algorithm::FullTraverse => "full_traverse",
            Algorithm::Direct => "direct",
        }
    }

    pub fn uses_beam(self) -> bool {
        matches!(self, Algorithm::Beam | Algorithm::BPP)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.to_ascii_lowercase().replace('-', "_");
        Algorithm::ALL
            .into_iter()
            .find(|a| a.as_str() == key)
            .ok_or_else(|| format!("unknown algorithm `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchConfig {
    pub algorithm: Algorithm,
    pub branching: usize,
    pub beam_width: usize,
    pub epsilon: f64,
    pub threshold: f64,
    pub rng_seed: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::Greedy,
            branching: 3,
            beam_width: 2,
            epsilon: 0.1,
            threshold: 0.05,
            rng_seed: 0,
        }
    }
}

impl SearchConfig {
    pub fn new(algorithm: Algorithm) -> Self {
        Self {
            algorithm,
            ..Self::default()
        }
    }

    pub fn with_beam_width(mut self, k: usize) -> Self {
        self.beam_width = k;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.rng_seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), SearchError> {
        let bad = |msg: String| Err(SearchError::InvalidConfig(msg));
        if self.branching == 0 {
            return bad("branching must be at least 1".into());
        }
        let max_width = self.branching.saturating_pow(Layer::SEARCHED.len() as u32);
        if self.algorithm.uses_beam() && !(1..=max_width).contains(&self.beam_width) {
            return bad(format!("beam width {} outside 1..={max_width}", self.beam_width));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return bad(format!("epsilon {} outside [0, 1]", self.epsilon));
        }
        if self.threshold.is_nan() || self.threshold < 0.0 {
            return bad(format!("threshold {} is negative", self.threshold));
        }
        Ok(())
    }

    /// Generator fragments the configured algorithm will request.
    pub fn expected_steps(&self) -> usize {
        let b = self.branching;
        let layers = Layer::SEARCHED.len();
        match self.algorithm {
            Algorithm::Greedy | Algorithm::EpsilonGreedy | Algorithm::RandomGreedy => b * layers,
            Algorithm::Beam | Algorithm::BPP => {
                let mut steps = 0;
                let mut frontier = 1usize;
                for _ in 0..layers {
                    steps += frontier * b;
                    frontier = (frontier * b).min(self.beam_width);
                }
                steps
            }
            Algorithm::FullTraverse => (1..=layers).map(|d| b.pow(d as u32)).sum(),
            Algorithm::Direct => 1,
        }
    }
}

#[derive(Debug, Error)]
pub enum SuiteError {
    #[error("transport failure after {attempts} attempt(s): {message}")]
    Transport { attempts: usize, message: String },
    #[error("service returned status {status}: {body}")]
    Status { status: u16, body: String },
    #[error("malformed response: {0}")]
    MalformedResponse(String),
    #[error("fixture exhausted at layer {layer}: {needed} candidates requested, {available} available")]
    FixtureExhausted {
        layer: Layer,
        needed: usize,
        available: usize,
    },
    #[error("{0}")]
    Unsupported(String),
}

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("invalid search config: {0}")]
    InvalidConfig(String),
    #[error("{stage} failed at layer {layer} (node {node}, {tree_size} nodes built): {source}")]
    Suite {
        stage: &'static str,
        layer: Layer,
        node: usize,
        tree_size: usize,
        #[source]
        source: SuiteError,
    },
    #[error("empty candidate set")]
    EmptyCandidates,
    #[error("preference aggregation needs at least 2 candidates, got {0}")]
    TooFewCandidates(usize),
}

/// Proposes child fragments for a path prefix.
pub trait CandidateGenerator: Send + Sync {
    /// Returns exactly `n` fragments for `layer`, given the fragments of the
    /// path so far (root excluded).
    fn expand(&self, question: &str, prefix: &[String], layer: Layer, n: usize) -> Result<Vec<String>, SuiteError>;

    /// One-shot generation of a full SP/V/OC path.
    fn generate_complete(&self, question: &str) -> Result<Vec<String>, SuiteError> {
        let _ = question;
        Err(SuiteError::Unsupported("generator has no one-shot mode".into()))
    }
}

/// Scores a cumulative path prefix; higher logits mean more likely correct.
pub trait ProcessScorer: Send + Sync {
    fn score_logit(&self, question: &str, prefix: &[String]) -> Result<f64, SuiteError>;
}

/// Logit that path `a` is better than path `b`.
pub trait PreferenceJudge: Send + Sync {
    fn prefer_logit(&self, question: &str, a: &[String], b: &[String]) -> Result<f64, SuiteError>;
}

#[derive(Clone)]
pub struct ScorerSuite {
    pub generator: Arc<dyn CandidateGenerator>,
    pub process_scorer: Arc<dyn ProcessScorer>,
    pub preference_judge: Arc<dyn PreferenceJudge>,
}

impl ScorerSuite {
    pub fn new(
        generator: impl CandidateGenerator + 'static,
        process_scorer: impl ProcessScorer + 'static,
        preference_judge: impl PreferenceJudge + 'static,
    ) -> Self {
        Self {
            generator: Arc::new(generator),
            process_scorer: Arc::new(process_scorer),
            preference_judge: Arc::new(preference_judge),
        }
    }
}

impl fmt::Debug for ScorerSuite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("ScorerSuite")
    }
}

pub fn sigmoid(logit: f64) -> f64 {
    if logit >= 0.0 {
        1.0 / (1.0 + (-logit).exp())
    } else {
        let e = logit.exp();
        e / (1.0 + e)
    }
}

/// Symmetrized preference from both query orders:
/// `0.5 * (sigmoid(l_ab) + 1 - sigmoid(l_ba))`.
pub fn symmetric_preference(logit_ab: f64, logit_ba: f64) -> f64 {
    0.5 * (sigmoid(logit_ab) + 1.0 - sigmoid(logit_ba))
}

pub fn select_greedy(scores: &[f64]) -> Result<usize, SearchError> {
    let mut best: Option<usize> = None;
    for (i, &s) in scores.iter().enumerate() {
        if best.is_none_or(|b| s > scores[b]) {
            best = Some(i);
        }
    }
    best.ok_or(SearchError::EmptyCandidates)
}

pub fn select_epsilon_greedy(scores: &[f64], epsilon: f64, rng: &mut impl Rng) -> Result<usize, SearchError> {
    if scores.is_empty() {
        return Err(SearchError::EmptyCandidates);
    }
    if rng.random::<f64>() < epsilon {
        Ok(rng.random_range(0..scores.len()))
    } else {
        select_greedy(scores)
    }
}

pub fn select_random_greedy(scores: &[f64], threshold: f64, rng: &mut impl Rng) -> Result<usize, SearchError> {
    let best = scores[select_greedy(scores)?];
    let window: Vec<usize> = (0..scores.len()).filter(|&i| best - scores[i] <= threshold).collect();
    Ok(window[rng.random_range(0..window.len())])
}

/// Mean of each row of `prefs` over the off-diagonal entries.
pub fn aggregate_preference(prefs: &[Vec<f64>]) -> Result<Vec<f64>, SearchError> {
    let n = prefs.len();
    if n < 2 {
        return Err(SearchError::TooFewCandidates(n));
    }
    Ok(prefs
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let total: f64 = (0..n).filter(|&j| j != i).map(|j| row[j]).sum();
            total / (n - 1) as f64
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn sigmoid_values() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!((sigmoid(3f64.ln()) - 0.75).abs() < 1e-15);
        assert!(sigmoid(-50.0) < 1e-20);
        assert_eq!(sigmoid(f64::INFINITY), 1.0);
        assert_eq!(sigmoid(f64::NEG_INFINITY), 0.0);
        assert!(sigmoid(1.0) < sigmoid(1.0 + 1e-9));
    }

    #[test]
    fn symmetric_preference_is_complementary() {
        for (a, b) in [(0.3, -1.2), (4.0, 4.0), (-7.5, 2.25), (0.0, 0.0)] {
            let s = symmetric_preference(a, b) + symmetric_preference(b, a);
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn greedy_argmax_and_ties() {
        assert_eq!(select_greedy(&[0.2, 0.9, 0.5]).unwrap(), 1);
        assert_eq!(select_greedy(&[0.7, 0.7]).unwrap(), 0);
        assert_eq!(select_greedy(&[0.3]).unwrap(), 0);
        assert!(matches!(select_greedy(&[]), Err(SearchError::EmptyCandidates)));
    }

    #[test]
    fn epsilon_zero_is_greedy() {
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            assert_eq!(select_epsilon_greedy(&[0.2, 0.9], 0.0, &mut rng).unwrap(), 1);
        }
    }

    #[test]
    fn epsilon_one_is_uniform() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut counts = [0usize; 3];
        let draws = 10_000;
        for _ in 0..draws {
            counts[select_epsilon_greedy(&[0.9, 0.1, 0.5], 1.0, &mut rng).unwrap()] += 1;
        }
        let expected = draws as f64 / 3.0;
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        // 2 degrees of freedom, 0.999 quantile
        assert!(chi2 < 13.82, "{counts:?} chi2 {chi2}");
        let sd = (draws as f64 * (1.0 / 3.0) * (2.0 / 3.0)).sqrt();
        assert!(counts.iter().all(|&c| (c as f64 - expected).abs() < 3.0 * sd));
    }

    #[test]
    fn epsilon_half_is_reproducible() {
        let pick = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..50)
                .map(|_| select_epsilon_greedy(&[0.1, 0.4, 0.3], 0.5, &mut rng).unwrap())
                .collect::<Vec<_>>()
        };
        assert_eq!(pick(5), pick(5));
    }

    #[test]
    fn random_greedy_window() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(select_random_greedy(&[0.9, 0.8], 0.0, &mut rng).unwrap(), 0);
        let mut seen = [false; 3];
        for _ in 0..500 {
            let i = select_random_greedy(&[0.9, 0.85, 0.2], 0.1, &mut rng).unwrap();
            assert_ne!(i, 2);
            seen[i] = true;
        }
        assert!(seen[0] && seen[1]);
        let mut seen = [false; 3];
        for _ in 0..500 {
            seen[select_random_greedy(&[0.9, 0.85, 0.2], 1.0, &mut rng).unwrap()] = true;
        }
        assert_eq!(seen, [true; 3]);
    }

    #[test]
    fn aggregation() {
        let two = vec![vec![0.0, 0.8], vec![0.2, 0.0]];
        assert_eq!(aggregate_preference(&two).unwrap(), vec![0.8, 0.2]);
        let three = vec![vec![0.0, 0.8, 0.6], vec![0.2, 0.0, 0.5], vec![0.4, 0.5, 0.0]];
        assert!((aggregate_preference(&three).unwrap()[0] - 0.7).abs() < 1e-12);
        let flat = vec![vec![0.5; 4]; 4];
        assert!(aggregate_preference(&flat).unwrap().iter().all(|&s| s == 0.5));
        assert!(matches!(
            aggregate_preference(&[vec![0.0]]),
            Err(SearchError::TooFewCandidates(1))
        ));
    }

    #[test]
    fn step_law() {
        let steps = |a, k| SearchConfig::new(a).with_beam_width(k).expected_steps();
        assert_eq!(steps(Algorithm::Greedy, 2), 9);
        assert_eq!(steps(Algorithm::Beam, 2), 15);
        assert_eq!(steps(Algorithm::Beam, 3), 21);
        assert_eq!(steps(Algorithm::BPP, 2), 15);
        assert_eq!(steps(Algorithm::FullTraverse, 2), 39);
        assert_eq!(steps(Algorithm::Beam, 27), 39);
        assert_eq!(steps(Algorithm::Beam, 1), 9);
    }

    #[test]
    fn config_checks() {
        assert!(SearchConfig::default().validate().is_ok());
        let bad = SearchConfig {
            epsilon: 1.5,
            ..SearchConfig::default()
        };
        assert!(bad.validate().is_err());
        assert!(SearchConfig::new(Algorithm::Beam)
            .with_beam_width(0)
            .validate()
            .is_err());
        assert!(SearchConfig::new(Algorithm::Beam)
            .with_beam_width(28)
            .validate()
            .is_err());
        assert!(SearchConfig::new(Algorithm::Beam)
            .with_beam_width(27)
            .validate()
            .is_ok());
        let neg = SearchConfig {
            threshold: -0.1,
            ..SearchConfig::default()
        };
        assert!(neg.validate().is_err());
    }

    #[test]
    fn algorithm_names_round_trip() {
        for a in Algorithm::ALL {
            assert_eq!(a.as_str().parse::<Algorithm>().unwrap(), a);
            let json = serde_json::to_string(&a).unwrap();
            assert_eq!(json, format!("\"{}\"", a.as_str()));
        }
        assert_eq!("BPP".parse::<Algorithm>().unwrap(), Algorithm::BPP);
        assert_eq!("full-traverse".parse::<Algorithm>().unwrap(), Algorithm::FullTraverse);
    }

    #[test]
    fn tree_paths() {
        let mut t = SearchTree::with_root("q");
        let a = t.add_child(0, "sp".into());
        let b = t.add_child(a, "v".into());
        let c = t.add_child(b, "oc".into());
        assert_eq!(t.node(c).layer, Layer::OC);
        assert_eq!(t.fragments(c), vec!["sp", "v", "oc"]);
        assert_eq!(t.children(0), vec![a]);
        assert_eq!(t.leaves(), vec![c]);
    }
}
