//! Pairwise linear learning-to-rank: logistic loss over preference pairs
//! formed within (query, searcher) groups, trained by full-batch gradient
//! descent.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::Vertical;
use crate::error::{Error, Result};
use crate::labels::LabeledExample;
use crate::model_io;
use crate::optim::{dot, log1pexp, sigmoid};

use super::features::{FeatureMask, RankingFeatureVector, FEATURE_DIM, FEATURE_NAMES};

/// Linear scoring model for one vertical.
#[derive(Debug, Clone, PartialEq)]
pub struct RankingModel {
    pub weights: Vec<f64>,
    pub vertical: Vertical,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RankerHyper {
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for RankerHyper {
    fn default() -> Self {
        RankerHyper {
            learning_rate: 0.5,
            epochs: 400,
            seed: 42,
        }
    }
}

/// Training summary: pair count and the loss after the final step.
#[derive(Debug, Clone, PartialEq)]
pub struct RankerReport {
    pub pair_count: usize,
    pub final_loss: f64,
}

/// Mean pairwise logistic loss `log(1 + exp(-(w.x_pos - w.x_neg)))` with
/// its exact gradient in `w`.
pub fn pairwise_loss_and_gradient(
    weights: &[f64],
    pairs: &[(Vec<f64>, Vec<f64>)],
) -> (f64, Vec<f64>) {
    assert!(!pairs.is_empty(), "pairwise loss needs at least one pair");
    let n = pairs.len() as f64;
    let mut loss = 0.0;
    let mut grad = vec![0.0; weights.len()];
    for (pos, neg) in pairs {
        let margin = dot(weights, pos) - dot(weights, neg);
        loss += log1pexp(-margin);
        // d/dw log(1+e^(-m)) = -sigmoid(-m) * (x_pos - x_neg).
        let coeff = -sigmoid(-margin);
        for ((g, p), q) in grad.iter_mut().zip(pos).zip(neg) {
            *g += coeff * (p - q);
        }
    }
    loss /= n;
    for g in grad.iter_mut() {
        *g /= n;
    }
    (loss, grad)
}

/// Builds preference pairs from label differences within each
/// (query, searcher) group, after applying the feature mask.
fn build_pairs(labeled: &[LabeledExample], mask: &FeatureMask) -> Vec<(Vec<f64>, Vec<f64>)> {
    let mut groups: BTreeMap<(u64, u64), Vec<&LabeledExample>> = BTreeMap::new();
    for ex in labeled {
        groups.entry((ex.query_id, ex.searcher_id)).or_default().push(ex);
    }
    let mut pairs = Vec::new();
    for group in groups.values() {
        let positives: Vec<&&LabeledExample> = group.iter().filter(|e| e.label == 1).collect();
        let negatives: Vec<&&LabeledExample> = group.iter().filter(|e| e.label == 0).collect();
        for pos in &positives {
            let px = mask.apply(&pos.features.to_array()).to_vec();
            for neg in &negatives {
                let nx = mask.apply(&neg.features.to_array()).to_vec();
                pairs.push((px.clone(), nx));
            }
        }
    }
    pairs
}

/// Trains a ranker for `vertical` from labeled examples of that vertical.
/// Full-batch gradient descent from zero weights; deterministic.
pub fn train_ranker(
    labeled: &[LabeledExample],
    vertical: Vertical,
    hyper: &RankerHyper,
    mask: &FeatureMask,
) -> Result<(RankingModel, RankerReport)> {
    let pairs = build_pairs(labeled, mask);
    if pairs.is_empty() {
        return Err(Error::Training(
            "no valid preference pairs: every (query, searcher) group has uniform labels; \
             collect labels with both clicks and skips first"
                .into(),
        ));
    }
    let mut weights = vec![0.0; FEATURE_DIM];
    for _ in 0..hyper.epochs {
        let (_, grad) = pairwise_loss_and_gradient(&weights, &pairs);
        for (w, g) in weights.iter_mut().zip(&grad) {
            *w -= hyper.learning_rate * g;
        }
    }
    let (final_loss, _) = pairwise_loss_and_gradient(&weights, &pairs);
    Ok((
        RankingModel { weights, vertical },
        RankerReport {
            pair_count: pairs.len(),
            final_loss,
        },
    ))
}

/// Scores and sorts candidates: descending by `w.x`, ties by ascending
/// doc_id.
pub fn rank_results(
    model: &RankingModel,
    features: &[(u64, RankingFeatureVector)],
) -> Vec<(u64, f64)> {
    let mut scored: Vec<(u64, f64)> = features
        .iter()
        .map(|(doc_id, f)| (*doc_id, dot(&model.weights, &f.to_array())))
        .collect();
    scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    scored
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct RankerFile {
    weights: Vec<f64>,
    feature_names: Vec<String>,
    hyper: RankerHyper,
}

/// File name of a vertical's ranker model.
pub fn ranker_file_name(vertical: Vertical) -> String {
    format!("ranker_{vertical}.json")
}

pub fn save_ranker(model: &RankingModel, hyper: &RankerHyper, path: &Path) -> Result<()> {
    model_io::save_json(
        &RankerFile {
            weights: model.weights.clone(),
            feature_names: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
            hyper: *hyper,
        },
        path,
    )
}

/// Loads a ranker for `vertical`, checking the stored feature layout.
pub fn load_ranker(path: &Path, vertical: Vertical) -> Result<(RankingModel, RankerHyper)> {
    let file: RankerFile = model_io::load_json(path, "run `train-ranker` to produce it")?;
    if file.feature_names != FEATURE_NAMES {
        return Err(Error::ParseJson {
            path: path.to_path_buf(),
            message: "feature_names do not match this build's feature layout".into(),
        });
    }
    if file.weights.len() != FEATURE_DIM {
        return Err(Error::ParseJson {
            path: path.to_path_buf(),
            message: format!("expected {FEATURE_DIM} weights, got {}", file.weights.len()),
        });
    }
    Ok((
        RankingModel {
            weights: file.weights,
            vertical,
        },
        file.hyper,
    ))
}
