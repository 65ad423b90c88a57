//! Searcher intent inference and intent-by-result-type composite features.
//!
//! Three binary heads (hiring, job seeking, content consuming) are trained
//! independently on disjoint signal subsets, so intents are not mutually
//! exclusive and perturbing one head's signals cannot move another head.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{ActivityKind, Corpus, Vertical};
use crate::error::{Error, Result};
use crate::model_io;
use crate::optim::{fit_logistic, sigmoid};

/// Profile and recent-activity evidence for one searcher.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IntentSignals {
    pub title_is_recruiter: bool,
    pub recent_job_search_count: u32,
    pub recent_job_apply_count: u32,
    pub recent_people_search_count: u32,
    pub recent_content_view_count: u32,
    /// Width of the activity window the counts were taken from.
    pub window: u64,
}

/// Per-intent probabilities; deliberately not a distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntentVector {
    pub hiring: f64,
    pub job_seeking: f64,
    pub content_consuming: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntentKind {
    Hiring,
    JobSeeking,
    ContentConsuming,
}

impl IntentKind {
    pub const ALL: [IntentKind; 3] = [
        IntentKind::Hiring,
        IntentKind::JobSeeking,
        IntentKind::ContentConsuming,
    ];

    pub fn name(self) -> &'static str {
        match self {
            IntentKind::Hiring => "hiring",
            IntentKind::JobSeeking => "job_seeking",
            IntentKind::ContentConsuming => "content_consuming",
        }
    }
}

/// One binary intent-by-result-type indicator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CompositeFeature {
    pub intent: IntentKind,
    pub result_type: Vertical,
    pub value: u8,
}

/// Fixed layout of the 9 composite features: intent-major, vertical-minor.
pub const COMPOSITE_NAMES: [&str; 9] = [
    "hiring_x_people",
    "hiring_x_jobs",
    "hiring_x_content",
    "job_seeking_x_people",
    "job_seeking_x_jobs",
    "job_seeking_x_content",
    "content_consuming_x_people",
    "content_consuming_x_jobs",
    "content_consuming_x_content",
];

/// One logistic head. `fallback` replaces the sigmoid output when training
/// saw a single class and no decision boundary could be fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntentHead {
    pub weights: Vec<f64>,
    pub fallback: Option<f64>,
}

/// Trained intent model plus the binarization threshold and window used
/// at feature-extraction time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntentModel {
    pub hiring: IntentHead,
    pub job_seeking: IntentHead,
    pub content_consuming: IntentHead,
    pub threshold: f64,
    pub window: u64,
}

/// Convergence and fallback flags, one entry per head in
/// (hiring, job_seeking, content_consuming) order.
#[derive(Debug, Clone, PartialEq)]
pub struct IntentTrainReport {
    pub heads: [HeadReport; 3],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeadReport {
    pub intent: IntentKind,
    pub converged: bool,
    pub grad_norm: f64,
    /// True when the head degenerated to the empirical base rate.
    pub fallback: bool,
}

fn hiring_features(s: &IntentSignals) -> Vec<f64> {
    vec![
        1.0,
        f64::from(s.title_is_recruiter),
        f64::from(s.recent_people_search_count),
    ]
}

fn job_seeking_features(s: &IntentSignals) -> Vec<f64> {
    vec![
        1.0,
        f64::from(s.recent_job_search_count),
        f64::from(s.recent_job_apply_count),
    ]
}

fn content_features(s: &IntentSignals) -> Vec<f64> {
    vec![1.0, f64::from(s.recent_content_view_count)]
}

/// Counts events of each kind inside `(now - window, now]` and reads the
/// recruiter-title flag from an exact token match.
pub fn extract_intent_signals(
    corpus: &Corpus,
    member_id: u64,
    now: u64,
    window: u64,
) -> Result<IntentSignals> {
    let member = corpus.member(member_id)?;
    assert!(window > 0, "intent window must be positive");
    let lower = now as i128 - window as i128;
    let mut sig = IntentSignals {
        title_is_recruiter: member.title == "recruiter",
        recent_job_search_count: 0,
        recent_job_apply_count: 0,
        recent_people_search_count: 0,
        recent_content_view_count: 0,
        window,
    };
    for event in &corpus.activity {
        if event.member_id != member_id {
            continue;
        }
        let t = event.timestamp;
        if (t as i128) <= lower || t > now {
            continue;
        }
        match event.kind {
            ActivityKind::JobSearch => sig.recent_job_search_count += 1,
            ActivityKind::JobApply => sig.recent_job_apply_count += 1,
            ActivityKind::PeopleSearch => sig.recent_people_search_count += 1,
            ActivityKind::ContentView => sig.recent_content_view_count += 1,
            ActivityKind::RecruiterAction => {}
        }
    }
    Ok(sig)
}

fn fit_head(
    intent: IntentKind,
    xs: Vec<Vec<f64>>,
    ys: Vec<f64>,
    l2: f64,
) -> Result<(IntentHead, HeadReport)> {
    let positives = ys.iter().filter(|&&y| y > 0.5).count();
    if positives == 0 || positives == ys.len() {
        // Laplace-smoothed base rate keeps the output strictly inside (0,1).
        let rate = (positives as f64 + 1.0) / (ys.len() as f64 + 2.0);
        return Ok((
            IntentHead {
                weights: vec![0.0; xs[0].len()],
                fallback: Some(rate),
            },
            HeadReport {
                intent,
                converged: true,
                grad_norm: 0.0,
                fallback: true,
            },
        ));
    }
    let (weights, report) = fit_logistic(&xs, &ys, l2, 1e-6, 200)?;
    Ok((
        IntentHead {
            weights,
            fallback: None,
        },
        HeadReport {
            intent,
            converged: report.converged,
            grad_norm: report.grad_norm,
            fallback: false,
        },
    ))
}

/// Trains the three heads on (signals, [hiring, job_seeking, content]) rows.
pub fn train_intent_model(
    examples: &[(IntentSignals, [bool; 3])],
    threshold: f64,
    window: u64,
    l2: f64,
) -> Result<(IntentModel, IntentTrainReport)> {
    if examples.is_empty() {
        return Err(Error::Training("intent training set is empty".into()));
    }
    let labels = |i: usize| -> Vec<f64> {
        examples.iter().map(|(_, y)| f64::from(y[i])).collect()
    };
    let (hiring, r0) = fit_head(
        IntentKind::Hiring,
        examples.iter().map(|(s, _)| hiring_features(s)).collect(),
        labels(0),
        l2,
    )?;
    let (job_seeking, r1) = fit_head(
        IntentKind::JobSeeking,
        examples.iter().map(|(s, _)| job_seeking_features(s)).collect(),
        labels(1),
        l2,
    )?;
    let (content_consuming, r2) = fit_head(
        IntentKind::ContentConsuming,
        examples.iter().map(|(s, _)| content_features(s)).collect(),
        labels(2),
        l2,
    )?;
    Ok((
        IntentModel {
            hiring,
            job_seeking,
            content_consuming,
            threshold,
            window,
        },
        IntentTrainReport {
            heads: [r0, r1, r2],
        },
    ))
}

fn head_predict(head: &IntentHead, features: &[f64]) -> f64 {
    if let Some(rate) = head.fallback {
        return rate;
    }
    let z: f64 = head.weights.iter().zip(features).map(|(w, x)| w * x).sum();
    sigmoid(z)
}

/// Three independent sigmoid outputs, each strictly inside (0, 1).
pub fn predict_intents(model: &IntentModel, signals: &IntentSignals) -> IntentVector {
    IntentVector {
        hiring: head_predict(&model.hiring, &hiring_features(signals)),
        job_seeking: head_predict(&model.job_seeking, &job_seeking_features(signals)),
        content_consuming: head_predict(&model.content_consuming, &content_features(signals)),
    }
}

/// All 9 (intent, result type) indicators: value 1 exactly when the intent
/// probability clears `threshold` and the pair's result type equals
/// `result_type`.
pub fn composite_features(
    intents: &IntentVector,
    threshold: f64,
    result_type: Vertical,
) -> Vec<CompositeFeature> {
    assert!(
        threshold > 0.0 && threshold < 1.0,
        "intent threshold must be in (0,1)"
    );
    let probs = [intents.hiring, intents.job_seeking, intents.content_consuming];
    let mut out = Vec::with_capacity(9);
    for (intent, p) in IntentKind::ALL.into_iter().zip(probs) {
        for vertical in Vertical::ALL {
            let active = p >= threshold && vertical == result_type;
            out.push(CompositeFeature {
                intent,
                result_type: vertical,
                value: u8::from(active),
            });
        }
    }
    out
}

/// The 9 composite values in [`COMPOSITE_NAMES`] order, as floats.
pub fn composite_values(intents: &IntentVector, threshold: f64, result_type: Vertical) -> [f64; 9] {
    let feats = composite_features(intents, threshold, result_type);
    let mut out = [0.0; 9];
    for (slot, f) in out.iter_mut().zip(feats) {
        *slot = f64::from(f.value);
    }
    out
}

/// One line of intents.jsonl.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntentRecord {
    pub member_id: u64,
    pub hiring: f64,
    pub job_seeking: f64,
    pub content_consuming: f64,
}

pub fn save_intent_model(model: &IntentModel, path: &Path) -> Result<()> {
    model_io::save_json(model, path)
}

pub fn load_intent_model(path: &Path) -> Result<IntentModel> {
    model_io::load_json(path, "run `train-intent` to produce it")
}

/// Writes one prediction per member to intents.jsonl.
pub fn save_intent_records(records: &[IntentRecord], path: &Path) -> Result<()> {
    model_io::save_jsonl(records, path)
}
