use std::thread;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{
    aggregate_preference, select_epsilon_greedy, select_greedy, select_random_greedy, sigmoid, symmetric_preference,
    Algorithm, Layer, Node, ScorerSuite, SearchConfig, SearchError, SearchTree, SuiteError,
};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QueueEntry {
    pub node: usize,
    pub prm_score: f64,
    /// Aggregated pairwise preference; BPP only.
    pub preference_score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchOutcome {
    pub algorithm: Algorithm,
    pub config: SearchConfig,
    pub tree: SearchTree,
    pub chosen_leaf: Node,
    pub reasoning_steps: usize,
    /// Nodes generated and scored, in creation order (root first).
    pub visited: Vec<usize>,
    /// Leaf candidates at the end of the search: the final beam for
    /// Beam/BPP, every leaf for FullTraverse, empty otherwise.
    pub final_queue: Vec<QueueEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportEntry {
    pub fragments: Vec<String>,
    pub prm_score: f64,
    pub preference_score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchReport {
    pub algorithm: Algorithm,
    pub seed: u64,
    pub branching: usize,
    pub beam_width: usize,
    pub steps: usize,
    pub chosen: ReportEntry,
    pub final_queue: Vec<ReportEntry>,
}

impl SearchOutcome {
    pub fn chosen_fragments(&self) -> Vec<String> {
        self.tree.fragments(self.chosen_leaf.id)
    }

    pub fn leaf_fragments(&self, id: usize) -> Vec<String> {
        self.tree.fragments(id)
    }

    pub fn report(&self) -> SearchReport {
        let entry = |e: &QueueEntry| ReportEntry {
            fragments: self.tree.fragments(e.node),
            prm_score: e.prm_score,
            preference_score: e.preference_score,
        };
        SearchReport {
            algorithm: self.algorithm,
            seed: self.config.rng_seed,
            branching: self.config.branching,
            beam_width: self.config.beam_width,
            steps: self.reasoning_steps,
            chosen: ReportEntry {
                fragments: self.chosen_fragments(),
                prm_score: self.chosen_leaf.prm_score.unwrap_or(f64::NAN),
                preference_score: self
                    .final_queue
                    .iter()
                    .find(|e| e.node == self.chosen_leaf.id)
                    .and_then(|e| e.preference_score),
            },
            final_queue: self.final_queue.iter().map(entry).collect(),
        }
    }
}

/// Scored children of one parent, or the failing stage and its error.
type ScoredChildren = Result<Vec<(String, f64)>, (&'static str, SuiteError)>;

struct Search<'a> {
    question: &'a str,
    cfg: &'a SearchConfig,
    suite: &'a ScorerSuite,
    tree: SearchTree,
    steps: usize,
    visited: Vec<usize>,
}

impl Search<'_> {
    fn fail(&self, stage: &'static str, layer: Layer, node: usize, source: SuiteError) -> SearchError {
        SearchError::Suite {
            stage,
            layer,
            node,
            tree_size: self.tree.nodes.len(),
            source,
        }
    }

    /// Expands every parent into `branching` scored children. Parents are
    /// expanded concurrently; children are appended in parent order.
    fn expand_all(&mut self, parents: &[usize]) -> Result<Vec<usize>, SearchError> {
        let n = self.cfg.branching;
        let layer = self.tree.node(parents[0]).layer.successor().expect("not a leaf");
        let prefixes: Vec<Vec<String>> = parents.iter().map(|&p| self.tree.fragments(p)).collect();
        let (question, suite) = (self.question, self.suite);

        let results: Vec<ScoredChildren> = thread::scope(|s| {
            let handles: Vec<_> = prefixes
                .iter()
                .map(|prefix| {
                    s.spawn(move || -> Result<Vec<(String, f64)>, (&'static str, SuiteError)> {
                        let frags = suite
                            .generator
                            .expand(question, prefix, layer, n)
                            .map_err(|e| ("generator", e))?;
                        if frags.len() != n {
                            return Err((
                                "generator",
                                SuiteError::MalformedResponse(format!(
                                    "{} fragments returned, {n} requested",
                                    frags.len()
                                )),
                            ));
                        }
                        frags
                            .into_iter()
                            .map(|f| {
                                let mut path = prefix.clone();
                                path.push(f);
                                let logit = suite
                                    .process_scorer
                                    .score_logit(question, &path)
                                    .map_err(|e| ("process scorer", e))?;
                                Ok((path.pop().expect("just pushed"), logit))
                            })
                            .collect()
                    })
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("expansion thread panicked"))
                .collect()
        });

        let mut children = Vec::with_capacity(parents.len() * n);
        for (&parent, result) in parents.iter().zip(results) {
            let scored = result.map_err(|(stage, e)| self.fail(stage, layer, parent, e))?;
            self.steps += scored.len();
            for (content, logit) in scored {
                let id = self.tree.add_child(parent, content);
                self.tree.nodes[id].prm_score = Some(sigmoid(logit));
                self.visited.push(id);
                children.push(id);
            }
        }
        Ok(children)
    }

    fn score(&self, id: usize) -> f64 {
        self.tree.node(id).prm_score.unwrap_or(0.0)
    }

    fn greedy_descent(&mut self) -> Result<usize, SearchError> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.rng_seed);
        let mut current = 0;
        for _ in Layer::SEARCHED {
            let children = self.expand_all(&[current])?;
            let scores: Vec<f64> = children.iter().map(|&c| self.score(c)).collect();
            let pick = match self.cfg.algorithm {
                Algorithm::EpsilonGreedy => select_epsilon_greedy(&scores, self.cfg.epsilon, &mut rng)?,
                Algorithm::RandomGreedy => select_random_greedy(&scores, self.cfg.threshold, &mut rng)?,
                _ => select_greedy(&scores)?,
            };
            current = children[pick];
        }
        Ok(current)
    }

    /// Beam descent; `width` of `None` keeps every child.
    fn beam_descent(&mut self, width: Option<usize>) -> Result<Vec<usize>, SearchError> {
        let mut beams = vec![0];
        for _ in Layer::SEARCHED {
            beams = self.beam_step(&beams, width)?;
        }
        Ok(beams)
    }

    fn beam_step(&mut self, beams: &[usize], width: Option<usize>) -> Result<Vec<usize>, SearchError> {
        let mut children = self.expand_all(beams)?;
        // stable: ties keep parent order, then child order
        children.sort_by(|&a, &b| self.score(b).total_cmp(&self.score(a)));
        if let Some(k) = width {
            children.truncate(k);
        }
        Ok(children)
    }

    fn rank_by_preference(&self, queue: &[usize]) -> Result<(usize, Vec<f64>), SearchError> {
        let n = queue.len();
        if n == 1 {
            return Ok((0, vec![1.0]));
        }
        let paths: Vec<Vec<String>> = queue.iter().map(|&id| self.tree.fragments(id)).collect();
        let mut logits = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    logits[i][j] = self
                        .suite
                        .preference_judge
                        .prefer_logit(self.question, &paths[i], &paths[j])
                        .map_err(|e| self.fail("preference judge", Layer::OC, queue[i], e))?;
                }
            }
        }
        let prefs: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        if i == j {
                            0.0
                        } else {
                            symmetric_preference(logits[i][j], logits[j][i])
                        }
                    })
                    .collect()
            })
            .collect();
        let agg = aggregate_preference(&prefs)?;
        let mut best = 0;
        for i in 1..n {
            let (si, sb) = (agg[i], agg[best]);
            let better = if (si - sb).abs() <= 1e-12 {
                self.score(queue[i]) > self.score(queue[best])
            } else {
                si > sb
            };
            if better {
                best = i;
            }
        }
        Ok((best, agg))
    }

    fn direct(&mut self) -> Result<usize, SearchError> {
        let path = self
            .suite
            .generator
            .generate_complete(self.question)
            .map_err(|e| self.fail("generator", Layer::SP, 0, e))?;
        if path.len() != Layer::SEARCHED.len() {
            let e = SuiteError::MalformedResponse(format!(
                "one-shot generation returned {} fragments, {} expected",
                path.len(),
                Layer::SEARCHED.len()
            ));
            return Err(self.fail("generator", Layer::SP, 0, e));
        }
        self.steps += 1;
        let mut current = 0;
        for frag in path {
            current = self.tree.add_child(current, frag);
            self.visited.push(current);
        }
        let logit = self
            .suite
            .process_scorer
            .score_logit(self.question, &self.tree.fragments(current))
            .map_err(|e| self.fail("process scorer", Layer::OC, current, e))?;
        self.tree.nodes[current].prm_score = Some(sigmoid(logit));
        Ok(current)
    }
}

/// Runs the configured algorithm from a root holding `question`.
pub fn run_search(question: &str, config: &SearchConfig, suite: &ScorerSuite) -> Result<SearchOutcome, SearchError> {
    config.validate()?;
    let mut s = Search {
        question,
        cfg: config,
        suite,
        tree: SearchTree::with_root(question),
        steps: 0,
        visited: vec![0],
    };
    let entry = |s: &Search, id: usize, pref: Option<f64>| QueueEntry {
        node: id,
        prm_score: s.score(id),
        preference_score: pref,
    };

    let (chosen, final_queue) = match config.algorithm {
        Algorithm::Greedy | Algorithm::EpsilonGreedy | Algorithm::RandomGreedy => (s.greedy_descent()?, Vec::new()),
        Algorithm::Beam => {
            let queue = s.beam_descent(Some(config.beam_width))?;
            let q = queue.iter().map(|&id| entry(&s, id, None)).collect();
            (queue[0], q)
        }
        Algorithm::BPP => {
            let queue = s.beam_descent(Some(config.beam_width))?;
            let (best, agg) = s.rank_by_preference(&queue)?;
            let q = queue.iter().zip(&agg).map(|(&id, &a)| entry(&s, id, Some(a))).collect();
            (queue[best], q)
        }
        Algorithm::FullTraverse => {
            s.beam_descent(None)?;
            let leaves = s.tree.leaves();
            let scores: Vec<f64> = leaves.iter().map(|&id| s.score(id)).collect();
            let best = leaves[select_greedy(&scores)?];
            let q = leaves.iter().map(|&id| entry(&s, id, None)).collect();
            (best, q)
        }
        Algorithm::Direct => (s.direct()?, Vec::new()),
    };

    Ok(SearchOutcome {
        algorithm: config.algorithm,
        config: config.clone(),
        chosen_leaf: s.tree.node(chosen).clone(),
        tree: s.tree,
        reasoning_steps: s.steps,
        visited: s.visited,
        final_queue,
    })
}
