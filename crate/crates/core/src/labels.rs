//! Click simulation and training-label collection.
//!
//! The simulator is a position-based model: a result at rank r is examined
//! with probability decay^(r-1) and, if examined, clicked with a
//! probability set by its truth-utility grade. Labels come from three
//! slices: a randomized top-K treatment slice with examination-conditioned
//! negatives, an organic slice that keeps the base ranking's position bias,
//! and easy negatives sampled from ranking tails.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::Query;
use crate::error::{Error, Result};
use crate::model_io;
use crate::vertical_search::RankingFeatureVector;

/// Position-based click model parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClickModelConfig {
    /// Examination probability at rank r is `examination_decay^(r-1)`,
    /// so rank 1 is always examined.
    pub examination_decay: f64,
    /// Sorted ascending; a utility's grade is the count of thresholds
    /// less than or equal to it.
    pub grade_thresholds: Vec<f64>,
    /// Click probability per grade; length must be thresholds + 1.
    pub relevance_click_prob: Vec<f64>,
    pub seed: u64,
}

impl Default for ClickModelConfig {
    fn default() -> Self {
        ClickModelConfig {
            examination_decay: 0.7,
            grade_thresholds: vec![0.5, 1.0],
            relevance_click_prob: vec![0.05, 0.35, 0.75],
            seed: 42,
        }
    }
}

impl ClickModelConfig {
    /// Grade of a truth utility under the configured thresholds.
    pub fn grade(&self, utility: f64) -> usize {
        self.grade_thresholds.iter().filter(|&&t| t <= utility).count()
    }

    fn check(&self) -> Result<()> {
        if self.relevance_click_prob.len() != self.grade_thresholds.len() + 1 {
            return Err(Error::Input(format!(
                "relevance_click_prob must have {} entries (thresholds + 1), got {}",
                self.grade_thresholds.len() + 1,
                self.relevance_click_prob.len()
            )));
        }
        Ok(())
    }
}

/// Outcome for one displayed result.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SessionObservation {
    pub doc_id: u64,
    pub examined: bool,
    pub clicked: bool,
}

/// Which collection slice produced a label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelSlice {
    Randomized,
    Organic,
    EasyNegative,
}

/// One training label with its inlined feature vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledExample {
    pub query_id: u64,
    pub searcher_id: u64,
    pub doc_id: u64,
    pub features: RankingFeatureVector,
    /// 0 = negative, 1 = click.
    pub label: u8,
    pub slice: LabelSlice,
}

/// A retrieved document with its features and base-ranker score, the unit
/// the label collectors and the federation pipeline work over.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredCandidate {
    pub doc_id: u64,
    pub features: RankingFeatureVector,
    pub base_score: f64,
}

/// Derives an independent per-session seed from the master seed. Uses a
/// splitmix64 finalizer so nearby (query, session) pairs decorrelate;
/// parallel and serial collection see identical streams.
pub fn derive_seed(master: u64, query_id: u64, session: u64) -> u64 {
    let mut z = master
        .wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(query_id.wrapping_add(1)))
        .wrapping_add(0xD1B5_4A32_D192_ED03u64.wrapping_mul(session.wrapping_add(1)));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn simulate_with_rng(
    ranking: &[u64],
    truth_utility: &BTreeMap<u64, f64>,
    config: &ClickModelConfig,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<SessionObservation>> {
    config.check()?;
    let mut out = Vec::with_capacity(ranking.len());
    let mut p_examine = 1.0;
    for &doc_id in ranking {
        let utility = *truth_utility.get(&doc_id).ok_or_else(|| {
            Error::Input(format!("doc {doc_id} has no truth utility for this query"))
        })?;
        let p_click = config.relevance_click_prob[config.grade(utility)];
        // Two draws per position keep the streams aligned regardless of
        // examination outcomes.
        let examined = rng.gen::<f64>() < p_examine;
        let attracted = rng.gen::<f64>() < p_click;
        out.push(SessionObservation {
            doc_id,
            examined,
            clicked: examined && attracted,
        });
        p_examine *= config.examination_decay;
    }
    Ok(out)
}

/// Simulates one session over a ranking. Deterministic: the RNG is seeded
/// from `config.seed` alone.
pub fn simulate_session(
    ranking: &[u64],
    truth_utility: &BTreeMap<u64, f64>,
    config: &ClickModelConfig,
) -> Result<Vec<SessionObservation>> {
    if ranking.is_empty() {
        return Err(Error::Input("cannot simulate a session over an empty ranking".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    simulate_with_rng(ranking, truth_utility, config, &mut rng)
}

/// Supplies ranked candidates (descending base score) for a query.
pub type CandidateSource<'a> = dyn FnMut(&Query) -> Result<Vec<ScoredCandidate>> + 'a;

/// Randomized-slice collection: each session uniformly shuffles the top
/// `randomize_top` positions before click simulation. Clicked docs get
/// label 1; examined-but-unclicked docs get label 0; unexamined docs are
/// not labeled, so negatives are conditioned on examination.
pub fn collect_randomized_labels(
    queries: &[Query],
    base_ranker: &mut CandidateSource,
    randomize_top: usize,
    sessions_per_query: usize,
    config: &ClickModelConfig,
) -> Result<Vec<LabeledExample>> {
    if randomize_top < 2 {
        return Err(Error::Input(format!(
            "randomize_top must be >= 2 to shuffle anything, got {randomize_top}"
        )));
    }
    let mut out = Vec::new();
    for query in queries {
        let truth = require_truth(query)?;
        let candidates = base_ranker(query)?;
        if candidates.is_empty() {
            continue;
        }
        for session in 0..sessions_per_query {
            let mut rng =
                ChaCha8Rng::seed_from_u64(derive_seed(config.seed, query.query_id, session as u64));
            let mut order: Vec<usize> = (0..candidates.len()).collect();
            let top = randomize_top.min(order.len());
            order[..top].shuffle(&mut rng);
            let ranking: Vec<u64> = order.iter().map(|&i| candidates[i].doc_id).collect();
            let observations = simulate_with_rng(&ranking, truth, config, &mut rng)?;
            for (position, obs) in observations.iter().enumerate() {
                let label = if obs.clicked {
                    1
                } else if obs.examined {
                    0
                } else {
                    continue;
                };
                let candidate = &candidates[order[position]];
                out.push(LabeledExample {
                    query_id: query.query_id,
                    searcher_id: query.searcher_id,
                    doc_id: candidate.doc_id,
                    features: candidate.features.clone(),
                    label,
                    slice: LabelSlice::Randomized,
                });
            }
        }
    }
    Ok(out)
}

const ORGANIC_SALT: u64 = 0x6F72_6761_6E69_6373;

/// Organic-slice collection: the base ranking is shown as-is and every
/// displayed result within `display_depth` is labeled by whether it was
/// clicked. Position bias is retained by construction: low-ranked results
/// are rarely examined yet still labeled 0.
pub fn collect_organic_labels(
    queries: &[Query],
    base_ranker: &mut CandidateSource,
    display_depth: usize,
    sessions_per_query: usize,
    config: &ClickModelConfig,
) -> Result<Vec<LabeledExample>> {
    if display_depth < 1 {
        return Err(Error::Input("display_depth must be >= 1".into()));
    }
    let mut out = Vec::new();
    for query in queries {
        let truth = require_truth(query)?;
        let candidates = base_ranker(query)?;
        if candidates.is_empty() {
            continue;
        }
        let ranking: Vec<u64> = candidates.iter().map(|c| c.doc_id).collect();
        for session in 0..sessions_per_query {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(
                config.seed ^ ORGANIC_SALT,
                query.query_id,
                session as u64,
            ));
            let observations = simulate_with_rng(&ranking, truth, config, &mut rng)?;
            for (candidate, obs) in candidates.iter().zip(&observations).take(display_depth) {
                out.push(LabeledExample {
                    query_id: query.query_id,
                    searcher_id: query.searcher_id,
                    doc_id: candidate.doc_id,
                    features: candidate.features.clone(),
                    label: u8::from(obs.clicked),
                    slice: LabelSlice::Organic,
                });
            }
        }
    }
    Ok(out)
}

fn require_truth(query: &Query) -> Result<&BTreeMap<u64, f64>> {
    query.ground_truth_utility.as_ref().ok_or_else(|| {
        Error::Input(format!(
            "query {} carries no ground-truth utilities; label collection needs the oracle",
            query.query_id
        ))
    })
}

/// Appends label-0 examples sampled uniformly from ranks >= `tail_start`
/// (1-based) of each query's base ranking: ceil(rate x positives) per
/// (query, searcher) group, never duplicating an already-labeled doc.
pub fn augment_easy_negatives(
    mut labeled: Vec<LabeledExample>,
    base_rankings: &BTreeMap<u64, Vec<ScoredCandidate>>,
    tail_start: usize,
    rate: f64,
    seed: u64,
) -> Result<Vec<LabeledExample>> {
    if tail_start < 1 {
        return Err(Error::Input("tail_start must be >= 1".into()));
    }
    if !(0.0..=1.0).contains(&rate) {
        return Err(Error::Input(format!(
            "easy-negative rate must be in [0, 1], got {rate}"
        )));
    }
    if rate == 0.0 {
        return Ok(labeled);
    }

    let mut positives: BTreeMap<(u64, u64), usize> = BTreeMap::new();
    let mut already: BTreeMap<(u64, u64), BTreeSet<u64>> = BTreeMap::new();
    for ex in &labeled {
        let group = (ex.query_id, ex.searcher_id);
        if ex.label == 1 {
            *positives.entry(group).or_default() += 1;
        }
        already.entry(group).or_default().insert(ex.doc_id);
    }

    for (&(query_id, searcher_id), &n_pos) in &positives {
        let Some(ranking) = base_rankings.get(&query_id) else {
            continue;
        };
        if ranking.len() < tail_start {
            continue;
        }
        let n_add = (rate * n_pos as f64).ceil() as usize;
        let seen = &already[&(query_id, searcher_id)];
        let mut tail: Vec<&ScoredCandidate> = ranking[tail_start - 1..]
            .iter()
            .filter(|c| !seen.contains(&c.doc_id))
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, query_id, u64::MAX));
        let take = n_add.min(tail.len());
        for i in 0..take {
            let j = i + rng.gen_range(0..tail.len() - i);
            tail.swap(i, j);
            labeled.push(LabeledExample {
                query_id,
                searcher_id,
                doc_id: tail[i].doc_id,
                features: tail[i].features.clone(),
                label: 0,
                slice: LabelSlice::EasyNegative,
            });
        }
    }
    Ok(labeled)
}

pub fn save_labels(labels: &[LabeledExample], path: &Path) -> Result<()> {
    model_io::save_jsonl(labels, path)
}

pub fn load_labels(path: &Path) -> Result<Vec<LabeledExample>> {
    model_io::load_jsonl(path, "run `collect-labels` to produce it")
}
