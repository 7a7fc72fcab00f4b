//! Concrete [`ScorerSuite`]s: a seeded oracle over a planted problem and an
//! HTTP bridge to a remote generation/scoring service.

mod http;

use std::collections::hash_map::DefaultHasher;
use std::collections::BTreeMap;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::search::{CandidateGenerator, Layer, PreferenceJudge, ProcessScorer, ScorerSuite, SuiteError};

pub use http::{http_suite, HttpClient, HttpConfig};

/// A question with one known-correct fragment per layer and a pool of
/// decoys to mix in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedProblem {
    pub question: String,
    pub correct_fragments: BTreeMap<Layer, String>,
    pub decoy_fragments: BTreeMap<Layer, Vec<String>>,
}

impl PlantedProblem {
    pub fn correct_path(&self) -> Vec<String> {
        Layer::SEARCHED
            .iter()
            .map(|l| self.correct_fragments.get(l).cloned().unwrap_or_default())
            .collect()
    }

    /// True when every fragment of `prefix` is the planted one for its layer.
    pub fn is_correct_prefix(&self, prefix: &[String]) -> bool {
        prefix
            .iter()
            .zip(Layer::SEARCHED)
            .all(|(frag, layer)| self.correct_fragments.get(&layer) == Some(frag))
    }

    pub fn is_correct_path(&self, path: &[String]) -> bool {
        path.len() == Layer::SEARCHED.len() && self.is_correct_prefix(path)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseModel {
    pub correct_logit_mean: f64,
    pub incorrect_logit_mean: f64,
    pub logit_stddev: f64,
    /// Judge noise; half the scorer noise when absent.
    pub judge_stddev: Option<f64>,
    /// Judge returns +inf / -inf / 0 instead of noisy logits.
    pub perfect_judge: bool,
    pub rng_seed: u64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self {
            correct_logit_mean: 5.0,
            incorrect_logit_mean: -5.0,
            logit_stddev: 0.0,
            judge_stddev: None,
            perfect_judge: false,
            rng_seed: 0,
        }
    }
}

impl NoiseModel {
    pub fn noiseless() -> Self {
        Self::default()
    }

    pub fn with_stddev(mut self, stddev: f64) -> Self {
        self.logit_stddev = stddev;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.rng_seed = seed;
        self
    }

    fn judge_sd(&self) -> f64 {
        self.judge_stddev.unwrap_or(self.logit_stddev / 2.0)
    }
}

/// Per-call RNG keyed on the seed and the call's arguments, so answers do
/// not depend on call order or thread scheduling.
fn keyed_rng(seed: u64, key: impl Hash) -> ChaCha8Rng {
    let mut h = DefaultHasher::new();
    seed.hash(&mut h);
    key.hash(&mut h);
    ChaCha8Rng::seed_from_u64(h.finish())
}

fn gaussian(rng: &mut ChaCha8Rng, sd: f64) -> f64 {
    if sd == 0.0 {
        return 0.0;
    }
    Normal::new(0.0, sd).expect("finite stddev").sample(rng)
}

struct Oracle {
    problem: PlantedProblem,
    noise: NoiseModel,
}

impl CandidateGenerator for Oracle {
    fn expand(&self, question: &str, prefix: &[String], layer: Layer, n: usize) -> Result<Vec<String>, SuiteError> {
        let decoys = self
            .problem
            .decoy_fragments
            .get(&layer)
            .map(Vec::as_slice)
            .unwrap_or_default();
        let correct = self
            .problem
            .correct_fragments
            .get(&layer)
            .ok_or(SuiteError::FixtureExhausted {
                layer,
                needed: n,
                available: decoys.len(),
            })?;
        if n == 0 {
            return Ok(Vec::new());
        }
        if decoys.len() < n - 1 {
            return Err(SuiteError::FixtureExhausted {
                layer,
                needed: n,
                available: decoys.len() + 1,
            });
        }
        let mut rng = keyed_rng(self.noise.rng_seed, ("expand", question, prefix, layer));
        let mut out: Vec<String> = decoys.choose_multiple(&mut rng, n - 1).cloned().collect();
        out.push(correct.clone());
        out.shuffle(&mut rng);
        Ok(out)
    }

    /// Unguided one-shot path: a uniform pick among the correct fragment and
    /// the decoys at each layer.
    fn generate_complete(&self, question: &str) -> Result<Vec<String>, SuiteError> {
        let mut rng = keyed_rng(self.noise.rng_seed, ("complete", question));
        Layer::SEARCHED
            .iter()
            .map(|layer| {
                let mut pool: Vec<&String> = self.problem.decoy_fragments.get(layer).into_iter().flatten().collect();
                pool.extend(self.problem.correct_fragments.get(layer));
                pool.choose(&mut rng)
                    .map(|s| (*s).clone())
                    .ok_or(SuiteError::FixtureExhausted {
                        layer: *layer,
                        needed: 1,
                        available: 0,
                    })
            })
            .collect()
    }
}

impl ProcessScorer for Oracle {
    fn score_logit(&self, question: &str, prefix: &[String]) -> Result<f64, SuiteError> {
        let mean = if self.problem.is_correct_prefix(prefix) {
            self.noise.correct_logit_mean
        } else {
            self.noise.incorrect_logit_mean
        };
        let mut rng = keyed_rng(self.noise.rng_seed, ("score", question, prefix));
        Ok(mean + gaussian(&mut rng, self.noise.logit_stddev))
    }
}

impl PreferenceJudge for Oracle {
    /// The sign always agrees with path correctness; noise only moves the
    /// magnitude. Two equally correct paths get pure noise around zero.
    fn prefer_logit(&self, question: &str, a: &[String], b: &[String]) -> Result<f64, SuiteError> {
        let ca = self.problem.is_correct_path(a);
        let cb = self.problem.is_correct_path(b);
        let sign = f64::from(i8::from(ca) - i8::from(cb));
        if self.noise.perfect_judge {
            return Ok(if sign == 0.0 { 0.0 } else { sign * f64::INFINITY });
        }
        let mut rng = keyed_rng(self.noise.rng_seed, ("prefer", question, a, b));
        let eps = gaussian(&mut rng, self.noise.judge_sd());
        if sign == 0.0 {
            return Ok(eps);
        }
        let margin = self.noise.correct_logit_mean - self.noise.incorrect_logit_mean;
        Ok(sign * (margin + eps).abs())
    }
}

pub fn oracle_suite(problem: PlantedProblem, noise: NoiseModel) -> ScorerSuite {
    let oracle = Arc::new(Oracle { problem, noise });
    ScorerSuite {
        generator: oracle.clone(),
        process_scorer: oracle.clone(),
        preference_judge: oracle,
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::search::{run_search, sigmoid, Algorithm, SearchConfig};

    pub(crate) fn planted(decoys: usize) -> PlantedProblem {
        let mut correct = BTreeMap::new();
        let mut pools = BTreeMap::new();
        for layer in Layer::SEARCHED {
            correct.insert(layer, format!("{layer}-ok"));
            pools.insert(layer, (0..decoys).map(|d| format!("{layer}-bad{d}")).collect());
        }
        PlantedProblem {
            question: "plant".into(),
            correct_fragments: correct,
            decoy_fragments: pools,
        }
    }

    #[test]
    fn noiseless_greedy_recovers_the_plant() {
        let p = planted(2);
        let suite = oracle_suite(p.clone(), NoiseModel::noiseless());
        let out = run_search(&p.question, &SearchConfig::new(Algorithm::Greedy), &suite).unwrap();
        assert_eq!(out.reasoning_steps, 9);
        assert_eq!(out.chosen_fragments(), p.correct_path());
    }

    #[test]
    fn saturated_scores_on_correct_prefixes() {
        let p = planted(2);
        let suite = oracle_suite(p.clone(), NoiseModel::noiseless());
        let path = p.correct_path();
        for d in 1..=3 {
            let l = suite.process_scorer.score_logit("plant", &path[..d]).unwrap();
            assert!(sigmoid(l) > 0.99);
        }
        let bad = vec!["SP-ok".to_string(), "V-bad0".to_string()];
        assert!(sigmoid(suite.process_scorer.score_logit("plant", &bad).unwrap()) < 0.01);
    }

    #[test]
    fn generator_mixes_in_the_correct_fragment() {
        let p = planted(4);
        let suite = oracle_suite(p, NoiseModel::noiseless().with_seed(3));
        let frags = suite.generator.expand("plant", &[], Layer::SP, 3).unwrap();
        assert_eq!(frags.len(), 3);
        assert_eq!(frags.iter().filter(|f| *f == "SP-ok").count(), 1);
        let again = suite.generator.expand("plant", &[], Layer::SP, 3).unwrap();
        assert_eq!(frags, again);
    }

    #[test]
    fn too_few_decoys() {
        let suite = oracle_suite(planted(1), NoiseModel::noiseless());
        assert!(matches!(
            suite.generator.expand("plant", &[], Layer::V, 3),
            Err(SuiteError::FixtureExhausted { layer: Layer::V, .. })
        ));
    }

    #[test]
    fn judge_sign_tracks_correctness() {
        let p = planted(2);
        let good = p.correct_path();
        let mut bad = good.clone();
        bad[2] = "OC-bad1".into();
        for seed in 0..50 {
            let s = oracle_suite(p.clone(), NoiseModel::noiseless().with_stddev(3.0).with_seed(seed));
            assert!(s.preference_judge.prefer_logit("plant", &good, &bad).unwrap() > 0.0);
            assert!(s.preference_judge.prefer_logit("plant", &bad, &good).unwrap() < 0.0);
        }
        let perfect = oracle_suite(
            p,
            NoiseModel {
                perfect_judge: true,
                ..NoiseModel::default()
            },
        );
        assert_eq!(
            perfect.preference_judge.prefer_logit("plant", &good, &bad).unwrap(),
            f64::INFINITY
        );
        assert_eq!(perfect.preference_judge.prefer_logit("plant", &bad, &bad).unwrap(), 0.0);
    }

    #[test]
    fn oracle_is_deterministic() {
        let p = planted(3);
        let noise = NoiseModel::noiseless().with_stddev(2.0).with_seed(77);
        let a = oracle_suite(p.clone(), noise.clone());
        let b = oracle_suite(p, noise);
        let prefix = vec!["SP-bad2".to_string()];
        assert_eq!(
            a.process_scorer.score_logit("plant", &prefix).unwrap().to_bits(),
            b.process_scorer.score_logit("plant", &prefix).unwrap().to_bits()
        );
        assert_eq!(
            a.generator.generate_complete("plant").unwrap(),
            b.generator.generate_complete("plant").unwrap()
        );
    }

    #[test]
    fn planted_problem_round_trips() {
        let p = planted(2);
        let json = serde_json::to_string(&p).unwrap();
        assert!(json.contains("\"SP\":\"SP-ok\""));
        assert_eq!(serde_json::from_str::<PlantedProblem>(&json).unwrap(), p);
    }
}
