//! Federated blending: score each vertical for a (query, searcher) pair,
//! pick the primary, and merge secondary vertical blocks against the
//! primary's individual results on a shared calibrated score scale.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::Vertical;
use crate::error::{Error, Result};
use crate::intent::{composite_values, IntentVector, COMPOSITE_NAMES};
use crate::model_io;
use crate::optim::dot;
use crate::vertical_search::{pairwise_loss_and_gradient, RankerHyper};

pub const FEDERATION_FEATURE_DIM: usize = 13;

/// Layout of [`FederationFeatureVector::to_array`]. Aggregates first, then
/// the nine intent-by-vertical composites, then the bias.
pub const FEDERATION_FEATURE_NAMES: [&str; FEDERATION_FEATURE_DIM] = [
    "best_result_score",
    "mean_topk_score",
    "result_count_fraction",
    COMPOSITE_NAMES[0],
    COMPOSITE_NAMES[1],
    COMPOSITE_NAMES[2],
    COMPOSITE_NAMES[3],
    COMPOSITE_NAMES[4],
    COMPOSITE_NAMES[5],
    COMPOSITE_NAMES[6],
    COMPOSITE_NAMES[7],
    COMPOSITE_NAMES[8],
    "bias",
];

/// Features the federated scorer sees for one vertical's result list.
#[derive(Debug, Clone, PartialEq)]
pub struct FederationFeatureVector {
    pub best_result_score: f64,
    pub mean_topk_score: f64,
    pub result_count_fraction: f64,
    pub composite: [f64; 9],
    pub bias: f64,
}

impl FederationFeatureVector {
    pub fn to_array(&self) -> [f64; FEDERATION_FEATURE_DIM] {
        let mut out = [0.0; FEDERATION_FEATURE_DIM];
        out[0] = self.best_result_score;
        out[1] = self.mean_topk_score;
        out[2] = self.result_count_fraction;
        out[3..12].copy_from_slice(&self.composite);
        out[12] = self.bias;
        out
    }
}

/// One vertical's retrieved results plus its federated score.
#[derive(Debug, Clone, PartialEq)]
pub struct VerticalCandidate {
    pub vertical: Vertical,
    /// Ranker output, descending by score.
    pub top_results: Vec<(u64, f64)>,
    pub vertical_score: f64,
}

/// Trained federated scorer with per-vertical score calibration.
#[derive(Debug, Clone, PartialEq)]
pub struct FederationModel {
    pub weights: Vec<f64>,
    /// Offset that moves a vertical's ranker scores onto the federated
    /// score scale.
    pub calibration: BTreeMap<Vertical, f64>,
    pub block_size: usize,
}

/// One training observation: what every vertical offered and which one
/// the searcher clicked into.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FederationSession {
    pub query_id: u64,
    pub searcher_id: u64,
    pub intents: IntentVector,
    pub candidates: BTreeMap<Vertical, Vec<(u64, f64)>>,
    pub clicked_vertical: Vertical,
}

/// An entry on the blended page. Scores are on the merged (calibrated)
/// scale, so the items list is descending in `score`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PageItem {
    Result {
        doc_id: u64,
        vertical: Vertical,
        score: f64,
    },
    Block {
        vertical: Vertical,
        results: Vec<(u64, f64)>,
        score: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlendedPage {
    pub primary_vertical: Vertical,
    pub items: Vec<PageItem>,
}

/// Builds the scorer's feature vector for one vertical's result list.
/// `k` is the retrieval depth the list was truncated to.
pub fn extract_federation_features(
    results: &[(u64, f64)],
    k: usize,
    intents: &IntentVector,
    intent_threshold: f64,
    vertical: Vertical,
) -> FederationFeatureVector {
    assert!(k >= 1, "retrieval depth must be at least 1");
    assert!(!results.is_empty(), "empty verticals are dropped before scoring");
    let best = results.iter().map(|r| r.1).fold(f64::NEG_INFINITY, f64::max);
    let mean = results.iter().map(|r| r.1).sum::<f64>() / results.len() as f64;
    let fraction = (results.len() as f64 / k as f64).min(1.0);
    FederationFeatureVector {
        best_result_score: best,
        mean_topk_score: mean,
        result_count_fraction: fraction,
        composite: composite_values(intents, intent_threshold, vertical),
        bias: 1.0,
    }
}

/// Scores every non-empty vertical; empty ones are dropped. Errors only
/// when nothing retrieved anything.
pub fn score_verticals(
    model: &FederationModel,
    intents: &IntentVector,
    intent_threshold: f64,
    candidates: &BTreeMap<Vertical, Vec<(u64, f64)>>,
    k: usize,
) -> Result<Vec<VerticalCandidate>> {
    let mut out = Vec::new();
    for (&vertical, results) in candidates {
        if results.is_empty() {
            continue;
        }
        let phi = extract_federation_features(results, k, intents, intent_threshold, vertical);
        out.push(VerticalCandidate {
            vertical,
            top_results: results.clone(),
            vertical_score: dot(&model.weights, &phi.to_array()),
        });
    }
    if out.is_empty() {
        return Err(Error::NoResults);
    }
    Ok(out)
}

/// Splits candidates into the argmax-score primary and the rest. Ties go
/// to the earlier vertical in the fixed People < Jobs < Content order.
pub fn select_primary(
    candidates: Vec<VerticalCandidate>,
) -> (VerticalCandidate, Vec<VerticalCandidate>) {
    assert!(!candidates.is_empty(), "select_primary needs at least one candidate");
    let mut best = 0;
    for (i, c) in candidates.iter().enumerate().skip(1) {
        let incumbent = &candidates[best];
        if c.vertical_score > incumbent.vertical_score
            || (c.vertical_score == incumbent.vertical_score && c.vertical < incumbent.vertical)
        {
            best = i;
        }
    }
    let mut rest = candidates;
    let primary = rest.remove(best);
    (primary, rest)
}

/// Merges primary results and secondary blocks into one page.
///
/// Primary ranker scores move onto the federated scale via
/// `calibration[primary]`; each block competes at
/// `vertical_score + calibration[vertical]`. Blocks scoring below the last
/// primary result are dropped; survivors show their top `block_size`
/// results in vertical order. Equal scores show the result first, then
/// blocks in vertical order.
pub fn blend_page(
    primary: &VerticalCandidate,
    secondaries: &[VerticalCandidate],
    block_size: usize,
    calibration: &BTreeMap<Vertical, f64>,
) -> BlendedPage {
    assert!(block_size >= 1, "block_size must be at least 1");
    assert!(!primary.top_results.is_empty(), "primary vertical has no results");
    let offset_of = |v: Vertical| calibration.get(&v).copied().unwrap_or(0.0);

    let primary_offset = offset_of(primary.vertical);
    let results: Vec<(u64, f64)> = primary
        .top_results
        .iter()
        .map(|&(doc_id, score)| (doc_id, score + primary_offset))
        .collect();
    // The last shown primary result sets the bar a block must clear.
    let floor = results.last().unwrap().1;

    let mut blocks: Vec<(Vertical, &[(u64, f64)], f64)> = secondaries
        .iter()
        .map(|c| {
            (
                c.vertical,
                c.top_results.as_slice(),
                c.vertical_score + offset_of(c.vertical),
            )
        })
        .filter(|&(_, _, competing)| competing >= floor)
        .collect();
    blocks.sort_by(|a, b| b.2.partial_cmp(&a.2).unwrap().then(a.0.cmp(&b.0)));

    let mut items = Vec::with_capacity(results.len() + blocks.len());
    let mut block_iter = blocks.into_iter().peekable();
    for (doc_id, score) in results {
        while let Some(&(_, _, competing)) = block_iter.peek() {
            if competing <= score {
                break;
            }
            let (vertical, block_results, competing) = block_iter.next().unwrap();
            items.push(PageItem::Block {
                vertical,
                results: block_results.iter().take(block_size).copied().collect(),
                score: competing,
            });
        }
        items.push(PageItem::Result {
            doc_id,
            vertical: primary.vertical,
            score,
        });
    }
    for (vertical, block_results, competing) in block_iter {
        items.push(PageItem::Block {
            vertical,
            results: block_results.iter().take(block_size).copied().collect(),
            score: competing,
        });
    }
    BlendedPage {
        primary_vertical: primary.vertical,
        items,
    }
}

/// Trains the federated scorer on session-level clicks: per session the
/// clicked vertical's features are preferred over every other non-empty
/// vertical's. Calibration offsets are the training-set mean gap between
/// a vertical's federated score and its mean ranker score.
pub fn train_federator(
    sessions: &[FederationSession],
    k: usize,
    intent_threshold: f64,
    block_size: usize,
    hyper: &RankerHyper,
) -> Result<(FederationModel, usize)> {
    let distinct: std::collections::BTreeSet<Vertical> =
        sessions.iter().map(|s| s.clicked_vertical).collect();
    if distinct.len() < 2 {
        return Err(Error::Training(
            "federator training needs clicks on at least two distinct verticals".into(),
        ));
    }

    let mut pairs: Vec<(Vec<f64>, Vec<f64>)> = Vec::new();
    for session in sessions {
        let clicked = match session.candidates.get(&session.clicked_vertical) {
            Some(results) if !results.is_empty() => results,
            _ => continue,
        };
        let pos = extract_federation_features(
            clicked,
            k,
            &session.intents,
            intent_threshold,
            session.clicked_vertical,
        )
        .to_array()
        .to_vec();
        for (&vertical, results) in &session.candidates {
            if vertical == session.clicked_vertical || results.is_empty() {
                continue;
            }
            let neg =
                extract_federation_features(results, k, &session.intents, intent_threshold, vertical)
                    .to_array()
                    .to_vec();
            pairs.push((pos.clone(), neg));
        }
    }
    if pairs.is_empty() {
        return Err(Error::Training(
            "federator training produced no preference pairs: every session has a single \
             non-empty vertical"
                .into(),
        ));
    }

    let mut weights = vec![0.0; FEDERATION_FEATURE_DIM];
    for _ in 0..hyper.epochs {
        let (_, grad) = pairwise_loss_and_gradient(&weights, &pairs);
        for (w, g) in weights.iter_mut().zip(&grad) {
            *w -= hyper.learning_rate * g;
        }
    }

    let calibration = compute_calibration(sessions, &weights, k, intent_threshold);
    Ok((
        FederationModel {
            weights,
            calibration,
            block_size,
        },
        pairs.len(),
    ))
}

/// Per-vertical mean of (federated score - mean ranker score) over the
/// training sessions, so ranker_score + offset lands on the federated
/// scale. Unseen verticals get 0.
fn compute_calibration(
    sessions: &[FederationSession],
    weights: &[f64],
    k: usize,
    intent_threshold: f64,
) -> BTreeMap<Vertical, f64> {
    let mut sums: BTreeMap<Vertical, (f64, usize)> = BTreeMap::new();
    for session in sessions {
        for (&vertical, results) in &session.candidates {
            if results.is_empty() {
                continue;
            }
            let phi = extract_federation_features(results, k, &session.intents, intent_threshold, vertical);
            let fed = dot(weights, &phi.to_array());
            let entry = sums.entry(vertical).or_insert((0.0, 0));
            entry.0 += fed - phi.mean_topk_score;
            entry.1 += 1;
        }
    }
    Vertical::ALL
        .iter()
        .map(|&v| {
            let offset = sums.get(&v).map_or(0.0, |&(sum, n)| sum / n as f64);
            (v, offset)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct FederatorFile {
    weights: Vec<f64>,
    feature_names: Vec<String>,
    calibration: BTreeMap<Vertical, f64>,
    block_size: usize,
    tie_break_order: Vec<Vertical>,
}

pub const FEDERATOR_FILE: &str = "federator.json";

pub fn save_federator(model: &FederationModel, path: &Path) -> Result<()> {
    model_io::save_json(
        &FederatorFile {
            weights: model.weights.clone(),
            feature_names: FEDERATION_FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
            calibration: model.calibration.clone(),
            block_size: model.block_size,
            tie_break_order: Vertical::ALL.to_vec(),
        },
        path,
    )
}

pub fn load_federator(path: &Path) -> Result<FederationModel> {
    let file: FederatorFile = model_io::load_json(path, "run `train-federator` to produce it")?;
    if file.feature_names != FEDERATION_FEATURE_NAMES {
        return Err(Error::ParseJson {
            path: path.to_path_buf(),
            message: "feature_names do not match this build's federation feature layout".into(),
        });
    }
    if file.weights.len() != FEDERATION_FEATURE_DIM {
        return Err(Error::ParseJson {
            path: path.to_path_buf(),
            message: format!(
                "expected {FEDERATION_FEATURE_DIM} weights, got {}",
                file.weights.len()
            ),
        });
    }
    if file.tie_break_order != Vertical::ALL {
        return Err(Error::ParseJson {
            path: path.to_path_buf(),
            message: "tie_break_order does not match the fixed vertical order".into(),
        });
    }
    Ok(FederationModel {
        weights: file.weights,
        calibration: file.calibration,
        block_size: file.block_size,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn intents(hiring: f64, job_seeking: f64, content_consuming: f64) -> IntentVector {
        IntentVector {
            hiring,
            job_seeking,
            content_consuming,
        }
    }

    fn zero_model() -> FederationModel {
        FederationModel {
            weights: vec![0.0; FEDERATION_FEATURE_DIM],
            calibration: Vertical::ALL.iter().map(|&v| (v, 0.0)).collect(),
            block_size: 3,
        }
    }

    fn candidate(vertical: Vertical, scores: &[f64], vertical_score: f64) -> VerticalCandidate {
        VerticalCandidate {
            vertical,
            top_results: scores.iter().enumerate().map(|(i, &s)| (i as u64, s)).collect(),
            vertical_score,
        }
    }

    #[test]
    fn feature_layout_matches_names() {
        let phi = extract_federation_features(
            &[(0, 0.9), (1, 0.4)],
            10,
            &intents(0.9, 0.1, 0.1),
            0.5,
            Vertical::People,
        );
        let x = phi.to_array();
        assert_eq!(x[0], 0.9); // best
        assert!((x[1] - 0.65).abs() < 1e-12); // mean
        assert!((x[2] - 0.2).abs() < 1e-12); // 2 of 10
        assert_eq!(FEDERATION_FEATURE_NAMES[3], "hiring_x_people");
        assert_eq!(x[3], 1.0);
        assert_eq!(x[12], 1.0);
    }

    #[test]
    fn job_seeker_composite_fires_only_for_jobs_results() {
        let iv = intents(0.1, 0.9, 0.1);
        let jobs = extract_federation_features(&[(0, 1.0)], 5, &iv, 0.5, Vertical::Jobs).to_array();
        let people = extract_federation_features(&[(0, 1.0)], 5, &iv, 0.5, Vertical::People).to_array();
        let slot = |name: &str| {
            FEDERATION_FEATURE_NAMES.iter().position(|&n| n == name).unwrap()
        };
        assert_eq!(jobs[slot("job_seeking_x_jobs")], 1.0);
        assert_eq!(people[slot("job_seeking_x_jobs")], 0.0);
        // The active intent still pairs with the actual result type.
        assert_eq!(people[slot("job_seeking_x_people")], 1.0);
        assert_eq!(people[slot("hiring_x_people")], 0.0);
    }

    #[test]
    fn score_verticals_drops_empty_and_errors_when_all_empty() {
        let iv = intents(0.0, 0.0, 0.0);
        let mut candidates: BTreeMap<Vertical, Vec<(u64, f64)>> = BTreeMap::new();
        candidates.insert(Vertical::People, vec![]);
        candidates.insert(Vertical::Jobs, vec![(7, 0.5)]);
        let scored = score_verticals(&zero_model(), &iv, 0.5, &candidates, 10).unwrap();
        assert_eq!(scored.len(), 1);
        assert_eq!(scored[0].vertical, Vertical::Jobs);
        assert_eq!(scored[0].vertical_score, 0.0); // zero-weight model

        candidates.get_mut(&Vertical::Jobs).unwrap().clear();
        let err = score_verticals(&zero_model(), &iv, 0.5, &candidates, 10).unwrap_err();
        assert!(matches!(err, Error::NoResults));
    }

    #[test]
    fn select_primary_takes_argmax_with_fixed_tie_order() {
        let (primary, rest) = select_primary(vec![candidate(Vertical::Content, &[1.0], 0.4)]);
        assert_eq!(primary.vertical, Vertical::Content);
        assert!(rest.is_empty());

        let (primary, rest) = select_primary(vec![
            candidate(Vertical::People, &[1.0], 0.2),
            candidate(Vertical::Jobs, &[1.0], 0.9),
            candidate(Vertical::Content, &[1.0], 0.1),
        ]);
        assert_eq!(primary.vertical, Vertical::Jobs);
        assert_eq!(rest.len(), 2);

        // Exact tie resolves to the earlier vertical in the fixed order.
        let (primary, _) = select_primary(vec![
            candidate(Vertical::Jobs, &[1.0], 0.7),
            candidate(Vertical::People, &[1.0], 0.7),
        ]);
        assert_eq!(primary.vertical, Vertical::People);
    }

    #[test]
    fn select_primary_is_shift_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let base: Vec<VerticalCandidate> = Vertical::ALL
                .iter()
                .map(|&v| candidate(v, &[1.0], rng.gen_range(-1.0..1.0)))
                .collect();
            let shift: f64 = rng.gen_range(-10.0..10.0);
            let shifted: Vec<VerticalCandidate> = base
                .iter()
                .map(|c| VerticalCandidate {
                    vertical_score: c.vertical_score + shift,
                    ..c.clone()
                })
                .collect();
            let (p1, _) = select_primary(base);
            let (p2, _) = select_primary(shifted);
            assert_eq!(p1.vertical, p2.vertical);
        }
    }

    #[test]
    fn blend_merges_block_between_primary_results() {
        // Primary calibrated scores (5, 3, 1); one block competing at 4.
        let primary = candidate(Vertical::People, &[5.0, 3.0, 1.0], 2.0);
        let block = candidate(Vertical::Jobs, &[0.9, 0.8], 4.0);
        let page = blend_page(&primary, &[block], 3, &zero_model().calibration);
        let kinds: Vec<&str> = page
            .items
            .iter()
            .map(|item| match item {
                PageItem::Result { .. } => "result",
                PageItem::Block { .. } => "block",
            })
            .collect();
        assert_eq!(kinds, vec!["result", "block", "result", "result"]);
    }

    #[test]
    fn blend_without_secondaries_is_primary_only() {
        let primary = candidate(Vertical::Jobs, &[2.0, 1.0], 0.5);
        let page = blend_page(&primary, &[], 3, &zero_model().calibration);
        assert_eq!(page.items.len(), 2);
        assert!(page
            .items
            .iter()
            .all(|i| matches!(i, PageItem::Result { vertical: Vertical::Jobs, .. })));
    }

    #[test]
    fn blocks_below_every_primary_score_are_dropped() {
        let primary = candidate(Vertical::People, &[5.0, 3.0, 1.0], 2.0);
        let blocks = vec![
            candidate(Vertical::Jobs, &[0.9], 0.5),
            candidate(Vertical::Content, &[0.7], 0.99),
        ];
        let page = blend_page(&primary, &blocks, 3, &zero_model().calibration);
        assert_eq!(page.items.len(), 3);
        assert!(page.items.iter().all(|i| matches!(i, PageItem::Result { .. })));
    }

    #[test]
    fn calibration_offsets_shift_both_sides_of_the_merge() {
        // Raw primary scores (1, 0) + offset 4 -> (5, 4); block 2 + offset 1
        // -> 3 < 4, dropped. Without offsets the block would lead the page.
        let primary = candidate(Vertical::People, &[1.0, 0.0], 0.0);
        let block = candidate(Vertical::Jobs, &[0.9], 2.0);
        let mut calibration: BTreeMap<Vertical, f64> = zero_model().calibration;
        calibration.insert(Vertical::People, 4.0);
        calibration.insert(Vertical::Jobs, 1.0);
        let page = blend_page(&primary, &[block.clone()], 3, &calibration);
        assert!(page.items.iter().all(|i| matches!(i, PageItem::Result { .. })));

        let no_offsets = zero_model().calibration;
        let page = blend_page(&primary, &[block], 3, &no_offsets);
        assert!(matches!(page.items[0], PageItem::Block { .. }));
    }

    #[test]
    fn blocks_truncate_to_block_size_in_vertical_order() {
        let primary = candidate(Vertical::People, &[1.0], 0.0);
        let block = candidate(Vertical::Content, &[0.9, 0.8, 0.7, 0.6], 5.0);
        let page = blend_page(&primary, &[block], 2, &zero_model().calibration);
        match &page.items[0] {
            PageItem::Block { vertical, results, .. } => {
                assert_eq!(*vertical, Vertical::Content);
                assert_eq!(results, &[(0, 0.9), (1, 0.8)]);
            }
            other => panic!("expected a block first, got {other:?}"),
        }
    }

    #[test]
    fn random_blends_keep_primary_order_and_unique_blocks() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let n_primary = rng.gen_range(1..8);
            let scores: Vec<f64> = {
                let mut s: Vec<f64> = (0..n_primary).map(|_| rng.gen_range(-2.0..2.0)).collect();
                s.sort_by(|a, b| b.partial_cmp(a).unwrap());
                s
            };
            let primary = candidate(Vertical::Jobs, &scores, rng.gen_range(-1.0..1.0));
            let mut secondaries: Vec<VerticalCandidate> = Vec::new();
            for v in [Vertical::People, Vertical::Content] {
                if rng.gen::<f64>() < 0.8 {
                    let results = [rng.gen(), rng.gen()];
                    secondaries.push(candidate(v, &results, rng.gen_range(-3.0..3.0)));
                }
            }
            let mut calibration: BTreeMap<Vertical, f64> = BTreeMap::new();
            for &v in &Vertical::ALL {
                calibration.insert(v, rng.gen_range(-1.0..1.0));
            }
            let page = blend_page(&primary, &secondaries, 3, &calibration);

            let shown: Vec<u64> = page
                .items
                .iter()
                .filter_map(|i| match i {
                    PageItem::Result { doc_id, .. } => Some(*doc_id),
                    PageItem::Block { .. } => None,
                })
                .collect();
            let expected: Vec<u64> = primary.top_results.iter().map(|r| r.0).collect();
            assert_eq!(shown, expected, "primary order must survive the merge");

            let mut seen = std::collections::BTreeSet::new();
            for item in &page.items {
                if let PageItem::Block { vertical, .. } = item {
                    assert!(seen.insert(*vertical), "vertical {vertical} blocked twice");
                }
            }
            // The merged items list is descending on the shared scale.
            let page_scores: Vec<f64> = page
                .items
                .iter()
                .map(|i| match i {
                    PageItem::Result { score, .. } | PageItem::Block { score, .. } => *score,
                })
                .collect();
            assert!(page_scores.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    fn session(
        clicked: Vertical,
        iv: IntentVector,
        per_vertical: &[(Vertical, Vec<(u64, f64)>)],
    ) -> FederationSession {
        FederationSession {
            query_id: 0,
            searcher_id: 0,
            intents: iv,
            candidates: per_vertical.iter().cloned().collect(),
            clicked_vertical: clicked,
        }
    }

    fn intent_consistent_sessions() -> Vec<FederationSession> {
        // Equal result quality everywhere; only the intent composites vary.
        let spread = vec![(0u64, 0.8f64), (1, 0.6)];
        let all: Vec<(Vertical, Vec<(u64, f64)>)> =
            Vertical::ALL.iter().map(|&v| (v, spread.clone())).collect();
        let mut sessions = Vec::new();
        for i in 0..30 {
            sessions.push(FederationSession {
                query_id: i,
                ..session(Vertical::Jobs, intents(0.1, 0.9, 0.1), &all)
            });
            sessions.push(FederationSession {
                query_id: 100 + i,
                ..session(Vertical::People, intents(0.9, 0.1, 0.1), &all)
            });
            sessions.push(FederationSession {
                query_id: 200 + i,
                ..session(Vertical::Content, intents(0.1, 0.1, 0.9), &all)
            });
        }
        sessions
    }

    #[test]
    fn intent_consistent_clicks_learn_positive_matching_composites() {
        let hyper = RankerHyper {
            learning_rate: 0.5,
            epochs: 300,
            seed: 0,
        };
        let (model, pair_count) =
            train_federator(&intent_consistent_sessions(), 10, 0.5, 3, &hyper).unwrap();
        assert_eq!(pair_count, 180);
        let slot = |name: &str| {
            FEDERATION_FEATURE_NAMES.iter().position(|&n| n == name).unwrap()
        };
        assert!(model.weights[slot("job_seeking_x_jobs")] > 0.0);
        assert!(model.weights[slot("hiring_x_people")] > 0.0);
        assert!(model.weights[slot("content_consuming_x_content")] > 0.0);

        // And the trained scorer routes a job seeker to Jobs.
        let iv = intents(0.1, 0.9, 0.1);
        let candidates: BTreeMap<Vertical, Vec<(u64, f64)>> = Vertical::ALL
            .iter()
            .map(|&v| (v, vec![(0, 0.8), (1, 0.6)]))
            .collect();
        let scored = score_verticals(&model, &iv, 0.5, &candidates, 10).unwrap();
        let (primary, _) = select_primary(scored);
        assert_eq!(primary.vertical, Vertical::Jobs);
    }

    #[test]
    fn single_clicked_vertical_is_a_training_error() {
        let all = vec![
            (Vertical::People, vec![(0u64, 0.5f64)]),
            (Vertical::Jobs, vec![(1, 0.5)]),
        ];
        let sessions = vec![session(Vertical::Jobs, intents(0.0, 0.9, 0.0), &all); 5];
        let err = train_federator(&sessions, 10, 0.5, 3, &RankerHyper::default()).unwrap_err();
        assert!(err.to_string().contains("two distinct verticals"));
    }

    #[test]
    fn session_order_does_not_change_the_model() {
        let mut sessions = intent_consistent_sessions();
        let hyper = RankerHyper {
            learning_rate: 0.4,
            epochs: 50,
            seed: 0,
        };
        let (a, _) = train_federator(&sessions, 10, 0.5, 3, &hyper).unwrap();
        sessions.reverse();
        let (b, _) = train_federator(&sessions, 10, 0.5, 3, &hyper).unwrap();
        assert_eq!(a.weights, b.weights);
    }

    #[test]
    fn zero_epoch_training_exposes_raw_calibration_gaps() {
        // With zero weights every federated score is 0, so the offsets are
        // exactly -mean(ranker scores) per vertical.
        let sessions = vec![
            session(
                Vertical::Jobs,
                intents(0.0, 0.9, 0.0),
                &[
                    (Vertical::Jobs, vec![(0, 2.0), (1, 4.0)]),
                    (Vertical::People, vec![(2, 1.0)]),
                ],
            ),
            session(
                Vertical::People,
                intents(0.9, 0.0, 0.0),
                &[
                    (Vertical::Jobs, vec![(0, 6.0)]),
                    (Vertical::People, vec![(2, 3.0)]),
                ],
            ),
        ];
        let hyper = RankerHyper {
            learning_rate: 0.5,
            epochs: 0,
            seed: 0,
        };
        let (model, _) = train_federator(&sessions, 10, 0.5, 3, &hyper).unwrap();
        assert!((model.calibration[&Vertical::Jobs] - (-4.5)).abs() < 1e-12);
        assert!((model.calibration[&Vertical::People] - (-2.0)).abs() < 1e-12);
        assert_eq!(model.calibration[&Vertical::Content], 0.0);
    }

    #[test]
    fn federator_file_roundtrip_checks_layout() {
        let model = FederationModel {
            weights: (0..FEDERATION_FEATURE_DIM).map(|i| i as f64 * 0.1).collect(),
            calibration: Vertical::ALL.iter().map(|&v| (v, 0.25)).collect(),
            block_size: 4,
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(FEDERATOR_FILE);
        save_federator(&model, &path).unwrap();
        let back = load_federator(&path).unwrap();
        assert_eq!(back, model);

        let mut body: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
        body["tie_break_order"] = serde_json::json!(["content", "people", "jobs"]);
        std::fs::write(&path, serde_json::to_string(&body).unwrap()).unwrap();
        assert!(load_federator(&path).is_err());
    }

    #[test]
    fn page_items_serialize_with_kind_tags() {
        let page = BlendedPage {
            primary_vertical: Vertical::People,
            items: vec![
                PageItem::Result {
                    doc_id: 3,
                    vertical: Vertical::People,
                    score: 1.5,
                },
                PageItem::Block {
                    vertical: Vertical::Jobs,
                    results: vec![(9, 0.4)],
                    score: 1.0,
                },
            ],
        };
        let json = serde_json::to_string(&page).unwrap();
        assert!(json.contains("\"kind\":\"result\""));
        assert!(json.contains("\"kind\":\"block\""));
        let back: BlendedPage = serde_json::from_str(&json).unwrap();
        assert_eq!(back, page);
    }
}
