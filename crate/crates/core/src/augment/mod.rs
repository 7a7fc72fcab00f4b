//! Training data for a process scorer: cumulative path prefixes labeled
//! correct or incorrect, from ground-truth models and perturbed variants.

mod perturb;

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::derive_seed;
use crate::formula::FormulaError;
use crate::model::{model_fragments, StructuredModel, Violation};
use crate::search::Layer;

pub use perturb::{perturb_negative, perturb_positive, NegativeKind, PositiveKind};

#[derive(Debug, Error)]
pub enum AugmentError {
    #[error("no applicable site for {0}")]
    NoApplicableSite(String),
    #[error("path is missing the {0} fragment")]
    MissingLayer(Layer),
    #[error("model has {} violation(s)", .0.len())]
    InvalidModel(Vec<Violation>),
    #[error("{component}: {source}")]
    Formula {
        component: String,
        #[source]
        source: Box<FormulaError>,
    },
    #[error("plan infeasible: {0}")]
    PlanInfeasible(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Label {
    Correct,
    Incorrect,
}

/// What is known about a full path before segmentation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathLabel {
    Correct,
    /// The first wrong fragment is at this layer.
    IncorrectAt(Layer),
    /// Wrong somewhere, step unknown.
    IncorrectUnknown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledPrefix {
    pub question: String,
    pub prefix: Vec<String>,
    pub label: Label,
    pub provenance: String,
    pub seed: u64,
}

impl LabeledPrefix {
    pub fn to_jsonl(records: &[LabeledPrefix]) -> String {
        let mut out = String::new();
        for r in records {
            out.push_str(&serde_json::to_string(r).expect("records serialize"));
            out.push('\n');
        }
        out
    }
}

/// Cuts a full path into cumulative prefixes (Q+SP, Q+SP+V, Q+SP+V+OC) and
/// labels each one. Errors propagate forward; an unlocated error yields only
/// the full path.
pub fn segment_path(
    question: &str,
    fragments: &BTreeMap<Layer, String>,
    label: PathLabel,
    provenance: &str,
    seed: u64,
) -> Result<Vec<LabeledPrefix>, AugmentError> {
    let path: Vec<String> = Layer::SEARCHED
        .iter()
        .map(|l| fragments.get(l).cloned().ok_or(AugmentError::MissingLayer(*l)))
        .collect::<Result<_, _>>()?;
    let record = |len: usize, label| LabeledPrefix {
        question: question.to_string(),
        prefix: path[..len].to_vec(),
        label,
        provenance: provenance.to_string(),
        seed,
    };
    Ok(match label {
        PathLabel::Correct => (1..=path.len()).map(|n| record(n, Label::Correct)).collect(),
        PathLabel::IncorrectAt(layer) => (1..=path.len())
            .map(|n| {
                let bad = n >= layer.depth();
                record(n, if bad { Label::Incorrect } else { Label::Correct })
            })
            .collect(),
        PathLabel::IncorrectUnknown => vec![record(path.len(), Label::Incorrect)],
    })
}

pub fn layer_fragments(model: &StructuredModel) -> BTreeMap<Layer, String> {
    let f = model_fragments(model);
    BTreeMap::from([
        (Layer::SP, f.sets_params),
        (Layer::V, f.variables),
        (Layer::OC, f.objective_constraints),
    ])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SourceModel {
    pub question: String,
    pub model: StructuredModel,
}

/// Variant counts per kind, over the whole dataset. Variants of a kind are
/// dealt round-robin to the source models that admit it.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentPlan {
    pub positive: BTreeMap<PositiveKind, usize>,
    pub negative: BTreeMap<NegativeKind, usize>,
}

impl AugmentPlan {
    /// `n` variants of every kind.
    pub fn uniform(n: usize) -> Self {
        Self {
            positive: PositiveKind::ALL.iter().map(|k| (*k, n)).collect(),
            negative: NegativeKind::ALL.iter().map(|k| (*k, n)).collect(),
        }
    }

    /// `n` variants of every kind that at least one of `models` admits.
    pub fn uniform_admissible(models: &[SourceModel], n: usize) -> Self {
        let admitted = |kind: Kind| models.iter().any(|m| kind.admits(&m.model));
        Self {
            positive: PositiveKind::ALL
                .into_iter()
                .filter(|k| admitted(Kind::Positive(*k)))
                .map(|k| (k, n))
                .collect(),
            negative: NegativeKind::ALL
                .into_iter()
                .filter(|k| admitted(Kind::Negative(*k)))
                .map(|k| (k, n))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Kind {
    Positive(PositiveKind),
    Negative(NegativeKind),
}

impl Kind {
    fn provenance(self) -> String {
        match self {
            Kind::Positive(k) => format!("positive:{}", k.as_str()),
            Kind::Negative(k) => format!("negative:{}", k.as_str()),
        }
    }

    fn apply(self, model: &StructuredModel, rng: &mut ChaCha8Rng) -> Result<StructuredModel, AugmentError> {
        match self {
            Kind::Positive(k) => perturb_positive(model, k, rng),
            Kind::Negative(k) => perturb_negative(model, k, rng),
        }
    }

    fn admits(self, model: &StructuredModel) -> bool {
        let mut probe = ChaCha8Rng::seed_from_u64(0);
        !matches!(self.apply(model, &mut probe), Err(AugmentError::NoApplicableSite(_)))
    }
}

/// Ground-truth records for every model, then perturbed variants per the
/// plan. Positive variants are labeled correct throughout; negative variants
/// emit only the prefixes from the corrupted layer onward, all incorrect.
pub fn build_prm_dataset(
    models: &[SourceModel],
    plan: &AugmentPlan,
    seed: u64,
) -> Result<Vec<LabeledPrefix>, AugmentError> {
    if models.is_empty() {
        return Ok(Vec::new());
    }
    let kinds = plan
        .positive
        .iter()
        .map(|(k, n)| (Kind::Positive(*k), *n))
        .chain(plan.negative.iter().map(|(k, n)| (Kind::Negative(*k), *n)))
        .filter(|(_, n)| *n > 0);

    // (model, kind) jobs in a fixed order; each gets its own seed
    let mut jobs = Vec::new();
    for (kind, count) in kinds {
        let admitting: Vec<usize> = (0..models.len()).filter(|&i| kind.admits(&models[i].model)).collect();
        if admitting.is_empty() {
            return Err(AugmentError::PlanInfeasible(format!(
                "no source model admits {}",
                kind.provenance()
            )));
        }
        for v in 0..count {
            jobs.push((admitting[v % admitting.len()], kind));
        }
    }

    let originals = models.par_iter().enumerate().map(|(i, src)| {
        let s = derive_seed(seed, i as u64);
        segment_path(
            &src.question,
            &layer_fragments(&src.model),
            PathLabel::Correct,
            "ground-truth",
            s,
        )
    });
    let variants = jobs.par_iter().enumerate().map(|(j, &(i, kind))| {
        let s = derive_seed(seed, (models.len() + j) as u64);
        let src = &models[i];
        let variant = kind.apply(&src.model, &mut ChaCha8Rng::seed_from_u64(s))?;
        let frags = layer_fragments(&variant);
        match kind {
            Kind::Positive(_) => segment_path(&src.question, &frags, PathLabel::Correct, &kind.provenance(), s),
            Kind::Negative(k) => {
                let all = segment_path(
                    &src.question,
                    &frags,
                    PathLabel::IncorrectAt(k.layer()),
                    &kind.provenance(),
                    s,
                )?;
                Ok(all.into_iter().filter(|r| r.label == Label::Incorrect).collect())
            }
        }
    });
    let mut out = Vec::new();
    for chunk in originals.chain(variants).collect::<Vec<_>>() {
        out.extend(chunk?);
    }
    Ok(out)
}

/// Records for externally produced texts that failed to parse as a model.
pub fn label_malformed(question: &str, texts: &[String], seed: u64) -> Vec<LabeledPrefix> {
    texts
        .iter()
        .map(|t| LabeledPrefix {
            question: question.to_string(),
            prefix: vec![t.clone()],
            label: Label::Incorrect,
            provenance: "malformed-format".into(),
            seed,
        })
        .collect()
}
