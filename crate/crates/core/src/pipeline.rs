//! End-to-end wiring of the pipeline stages. The CLI subcommands and the
//! evaluation harness both run through these functions so that a staged
//! run (one subcommand per artifact) and an in-process run produce the
//! same bytes for the same master seed.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{ClickConfig, ExpertiseConfig, FederationConfig, IntentConfig, RankerConfig};
use crate::corpus::{Archetype, Corpus, Query, Vertical};
use crate::error::{Error, Result};
use crate::expertise::{
    build_sparse_matrix, factorize, train_supervised_weights, ExpertiseFactors, ExpertiseModel,
};
use crate::federation::{
    blend_page, score_verticals, select_primary, train_federator, BlendedPage, FederationModel,
    FederationSession,
};
use crate::intent::{
    extract_intent_signals, predict_intents, train_intent_model, IntentModel, IntentRecord,
    IntentSignals, IntentTrainReport, IntentVector,
};
use crate::labels::{
    augment_easy_negatives, collect_organic_labels, collect_randomized_labels, derive_seed,
    LabeledExample, ScoredCandidate,
};
use crate::vertical_search::{
    build_index, extract_ranking_features, load_ranker, rank_results, ranker_file_name,
    retrieve_topk, InvertedIndex, RankingFeatureVector, RankingModel,
};

pub const EXPERTISE_MODEL_FILE: &str = "expertise_model.json";
pub const INTENT_MODEL_FILE: &str = "intent_model.json";
pub const INTENTS_FILE: &str = "intents.jsonl";
pub const LABELS_FILE: &str = "labels.jsonl";
pub const REPORT_FILE: &str = "report.json";
pub const PAGE_FILE: &str = "page.json";

/// Stage salts keep the RNG streams of different pipeline stages disjoint
/// under one master seed. Fed to [`derive_seed`] as the session argument.
const SALT_ALS_INIT: u64 = 0x0A15;
const SALT_RANDOMIZED_LABELS: u64 = 0x1A00;
const SALT_ORGANIC_LABELS: u64 = 0x1B00;
const SALT_EASY_NEGATIVES: u64 = 0x1C00;
const SALT_FEDERATION_CLICKS: u64 = 0x2A00;

/// The reference time for intent windows: the newest activity timestamp.
pub fn observation_time(corpus: &Corpus) -> u64 {
    corpus.activity.iter().map(|e| e.timestamp).max().unwrap_or(0)
}

/// Supervised signal combiner, confident-cell selection, then ALS.
pub fn train_expertise_stage(
    corpus: &Corpus,
    cfg: &ExpertiseConfig,
    master_seed: u64,
) -> Result<ExpertiseModel> {
    let (weights, _fit) = train_supervised_weights(corpus, cfg.damping, cfg.supervised_l2)?;
    let sparse = build_sparse_matrix(corpus, &weights, cfg.confidence_threshold, cfg.damping)?;
    let (factors, _report) = factorize(
        &sparse,
        cfg.k,
        cfg.lambda,
        cfg.als_max_sweeps,
        cfg.als_tol,
        derive_seed(master_seed, 0, SALT_ALS_INIT),
    )?;
    let skill_vocab = (0..corpus.n_skills() as u64)
        .map(|s| corpus.skill_pool(s).map(|pool| pool[0].clone()))
        .collect::<Result<Vec<String>>>()?;
    Ok(ExpertiseModel::new(weights, &factors, skill_vocab))
}

/// Intent heads trained on the planted archetypes as weak labels.
pub fn train_intent_stage(
    corpus: &Corpus,
    cfg: &IntentConfig,
) -> Result<(IntentModel, IntentTrainReport)> {
    let now = observation_time(corpus);
    let mut examples: Vec<(IntentSignals, [bool; 3])> = Vec::with_capacity(corpus.n_members());
    for (row, member) in corpus.members.iter().enumerate() {
        let signals = extract_intent_signals(corpus, member.member_id, now, cfg.window)?;
        let target = match corpus.planted.archetypes[row] {
            Archetype::Recruiter => [true, false, false],
            Archetype::JobSeeker => [false, true, false],
            Archetype::ContentConsumer => [false, false, true],
        };
        examples.push((signals, target));
    }
    train_intent_model(&examples, cfg.threshold, cfg.window, cfg.l2)
}

/// Per-member intent probabilities at the corpus observation time.
pub fn member_intent_map(
    corpus: &Corpus,
    model: &IntentModel,
) -> Result<BTreeMap<u64, IntentVector>> {
    let now = observation_time(corpus);
    let mut out = BTreeMap::new();
    for member in &corpus.members {
        let signals = extract_intent_signals(corpus, member.member_id, now, model.window)?;
        out.insert(member.member_id, predict_intents(model, &signals));
    }
    Ok(out)
}

pub fn intent_records(corpus: &Corpus, model: &IntentModel) -> Result<Vec<IntentRecord>> {
    Ok(member_intent_map(corpus, model)?
        .into_iter()
        .map(|(member_id, iv)| IntentRecord {
            member_id,
            hiring: iv.hiring,
            job_seeking: iv.job_seeking,
            content_consuming: iv.content_consuming,
        })
        .collect())
}

/// Everything needed to turn a query into per-vertical scored candidates.
pub struct SearchContext<'a> {
    pub corpus: &'a Corpus,
    pub factors: ExpertiseFactors,
    pub intents: BTreeMap<u64, IntentVector>,
    pub indexes: BTreeMap<Vertical, InvertedIndex>,
    pub retrieval_k: usize,
    pub intent_threshold: f64,
    pub location_scale: f64,
}

impl<'a> SearchContext<'a> {
    pub fn build(
        corpus: &'a Corpus,
        expertise: &ExpertiseModel,
        intent_model: &IntentModel,
        intent_threshold: f64,
        ranker_cfg: &RankerConfig,
    ) -> Result<Self> {
        Ok(SearchContext {
            corpus,
            factors: expertise.factors(),
            intents: member_intent_map(corpus, intent_model)?,
            indexes: Vertical::ALL.iter().map(|&v| (v, build_index(corpus, v))).collect(),
            retrieval_k: ranker_cfg.retrieval_k,
            intent_threshold,
            location_scale: ranker_cfg.location_scale,
        })
    }

    fn searcher_intents(&self, searcher_id: u64) -> Result<&IntentVector> {
        self.intents.get(&searcher_id).ok_or_else(|| Error::Lookup {
            kind: "member",
            id: searcher_id.to_string(),
        })
    }

    /// Text retrieval plus full feature extraction for one vertical.
    /// Candidates come back in descending text-score order.
    pub fn candidates(&self, query: &Query, vertical: Vertical) -> Result<Vec<ScoredCandidate>> {
        let intents = *self.searcher_intents(query.searcher_id)?;
        let hits = retrieve_topk(&self.indexes[&vertical], &query.terms, self.retrieval_k);
        hits.into_iter()
            .map(|(doc_id, text_score)| {
                let doc = self.corpus.doc(doc_id)?;
                let features = extract_ranking_features(
                    self.corpus,
                    &self.factors,
                    &intents,
                    self.intent_threshold,
                    self.location_scale,
                    query.searcher_id,
                    doc,
                    text_score,
                )?;
                Ok(ScoredCandidate {
                    doc_id,
                    features,
                    base_score: text_score,
                })
            })
            .collect()
    }

    /// Candidate lists for every query, keyed by query id.
    fn candidate_map(
        &self,
        queries: &[Query],
        vertical: Vertical,
    ) -> Result<BTreeMap<u64, Vec<ScoredCandidate>>> {
        queries
            .iter()
            .map(|q| Ok((q.query_id, self.candidates(q, vertical)?)))
            .collect()
    }
}

/// Which click log to simulate for ranker training.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelPlan {
    /// Shuffled top positions, examined-unclicked negatives, easy-negative
    /// tail augmentation. The debiased production recipe.
    Randomized,
    /// Base-order impressions with click/no-click labels at display depth;
    /// position bias leaks into the labels by construction.
    Organic,
}

/// Simulates click logs over `queries` and returns training labels for
/// one vertical.
pub fn collect_vertical_labels(
    ctx: &SearchContext,
    queries: &[Query],
    vertical: Vertical,
    click: &ClickConfig,
    master_seed: u64,
    plan: LabelPlan,
) -> Result<Vec<LabeledExample>> {
    let by_query = ctx.candidate_map(queries, vertical)?;
    let mut source = |q: &Query| {
        by_query
            .get(&q.query_id)
            .cloned()
            .ok_or_else(|| Error::Lookup {
                kind: "query",
                id: q.query_id.to_string(),
            })
    };
    let vertical_ix = Vertical::ALL.iter().position(|&v| v == vertical).unwrap() as u64;
    match plan {
        LabelPlan::Randomized => {
            let model = click.model(derive_seed(master_seed, vertical_ix, SALT_RANDOMIZED_LABELS));
            let labeled = collect_randomized_labels(
                queries,
                &mut source,
                click.randomize_top,
                click.sessions_per_query as usize,
                &model,
            )?;
            augment_easy_negatives(
                labeled,
                &by_query,
                click.tail_start,
                click.easy_negative_rate,
                derive_seed(master_seed, vertical_ix, SALT_EASY_NEGATIVES),
            )
        }
        LabelPlan::Organic => {
            let model = click.model(derive_seed(master_seed, vertical_ix, SALT_ORGANIC_LABELS));
            // Organic impressions are logged under the legacy production
            // ranking: retrieval score plus a hand-tuned nearest-first boost.
            // The boost is relevance-blind, so examination at these positions
            // is confounded with proximity and the labels inherit that bias.
            let mut display = by_query.clone();
            for cands in display.values_mut() {
                cands.sort_by(|a, b| {
                    let sa = a.base_score
                        + click.organic_location_boost * a.features.location_proximity;
                    let sb = b.base_score
                        + click.organic_location_boost * b.features.location_proximity;
                    sb.partial_cmp(&sa)
                        .unwrap_or(std::cmp::Ordering::Equal)
                        .then(a.doc_id.cmp(&b.doc_id))
                });
            }
            let mut display_source = |q: &Query| {
                display.get(&q.query_id).cloned().ok_or_else(|| Error::Lookup {
                    kind: "query",
                    id: q.query_id.to_string(),
                })
            };
            collect_organic_labels(
                queries,
                &mut display_source,
                click.organic_display_depth,
                click.sessions_per_query as usize,
                &model,
            )
        }
    }
}

/// Ranks one vertical's candidates for a query with a trained ranker.
pub fn ranked_results(
    ctx: &SearchContext,
    ranker: &RankingModel,
    query: &Query,
    vertical: Vertical,
) -> Result<Vec<(u64, f64)>> {
    let feats: Vec<(u64, RankingFeatureVector)> = ctx
        .candidates(query, vertical)?
        .into_iter()
        .map(|c| (c.doc_id, c.features))
        .collect();
    Ok(rank_results(ranker, &feats))
}

fn archetype_vertical(archetype: Archetype) -> Vertical {
    match archetype {
        Archetype::Recruiter => Vertical::People,
        Archetype::JobSeeker => Vertical::Jobs,
        Archetype::ContentConsumer => Vertical::Content,
    }
}

/// Simulates session-level vertical clicks for federator training: each
/// searcher clicks their archetype's vertical with probability 0.8, else
/// uniformly among the non-empty verticals.
pub fn simulate_federation_sessions(
    ctx: &SearchContext,
    rankers: &BTreeMap<Vertical, RankingModel>,
    queries: &[Query],
    master_seed: u64,
) -> Result<Vec<FederationSession>> {
    let mut sessions = Vec::new();
    for query in queries {
        let mut candidates: BTreeMap<Vertical, Vec<(u64, f64)>> = BTreeMap::new();
        for (&vertical, ranker) in rankers {
            let ranked = ranked_results(ctx, ranker, query, vertical)?;
            if !ranked.is_empty() {
                candidates.insert(vertical, ranked);
            }
        }
        if candidates.is_empty() {
            continue;
        }
        let row = ctx.corpus.member_row(query.searcher_id)?;
        let preferred = archetype_vertical(ctx.corpus.planted.archetypes[row]);
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(
            master_seed,
            query.query_id,
            SALT_FEDERATION_CLICKS,
        ));
        let coin: f64 = rng.gen();
        let clicked = if candidates.contains_key(&preferred) && coin < 0.8 {
            preferred
        } else {
            let options: Vec<Vertical> = candidates.keys().copied().collect();
            options[rng.gen_range(0..options.len())]
        };
        sessions.push(FederationSession {
            query_id: query.query_id,
            searcher_id: query.searcher_id,
            intents: *ctx.searcher_intents(query.searcher_id)?,
            candidates,
            clicked_vertical: clicked,
        });
    }
    Ok(sessions)
}

/// Simulates federation sessions over the training queries and fits the
/// federated scorer.
pub fn train_federator_stage(
    ctx: &SearchContext,
    rankers: &BTreeMap<Vertical, RankingModel>,
    cfg: &FederationConfig,
    master_seed: u64,
) -> Result<FederationModel> {
    let sessions =
        simulate_federation_sessions(ctx, rankers, ctx.corpus.train_queries(), master_seed)?;
    let hyper = crate::vertical_search::RankerHyper {
        learning_rate: cfg.learning_rate,
        epochs: cfg.epochs,
        seed: master_seed,
    };
    let (model, _pairs) =
        train_federator(&sessions, ctx.retrieval_k, ctx.intent_threshold, cfg.block_size, &hyper)?;
    Ok(model)
}

/// Full federated search for one query: rank every vertical, score and
/// pick the primary, blend the page.
pub fn run_search(
    ctx: &SearchContext,
    rankers: &BTreeMap<Vertical, RankingModel>,
    federator: &FederationModel,
    query: &Query,
) -> Result<BlendedPage> {
    let mut per_vertical: BTreeMap<Vertical, Vec<(u64, f64)>> = BTreeMap::new();
    for (&vertical, ranker) in rankers {
        per_vertical.insert(vertical, ranked_results(ctx, ranker, query, vertical)?);
    }
    let intents = ctx.searcher_intents(query.searcher_id)?;
    let scored = score_verticals(
        federator,
        intents,
        ctx.intent_threshold,
        &per_vertical,
        ctx.retrieval_k,
    )?;
    let (primary, secondaries) = select_primary(scored);
    Ok(blend_page(&primary, &secondaries, federator.block_size, &federator.calibration))
}

/// A free-text query issued from the command line rather than the corpus.
pub fn ad_hoc_query(text: &str, searcher_id: u64) -> Query {
    Query {
        query_id: u64::MAX,
        searcher_id,
        terms: text.split_whitespace().map(str::to_lowercase).collect(),
        ground_truth_utility: None,
    }
}

pub fn expertise_model_path(models_dir: &Path) -> PathBuf {
    models_dir.join(EXPERTISE_MODEL_FILE)
}

pub fn intent_model_path(models_dir: &Path) -> PathBuf {
    models_dir.join(INTENT_MODEL_FILE)
}

pub fn ranker_path(models_dir: &Path, vertical: Vertical) -> PathBuf {
    models_dir.join(ranker_file_name(vertical))
}

pub fn federator_path(models_dir: &Path) -> PathBuf {
    models_dir.join(crate::federation::FEDERATOR_FILE)
}

/// Loads all three vertical rankers from the models directory.
pub fn load_ranker_map(models_dir: &Path) -> Result<BTreeMap<Vertical, RankingModel>> {
    let mut out = BTreeMap::new();
    for &vertical in &Vertical::ALL {
        let (model, _hyper) = load_ranker(&ranker_path(models_dir, vertical), vertical)?;
        out.insert(vertical, model);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ExperimentConfig;
    use crate::corpus::{generate_corpus, GeneratorConfig};
    use crate::labels::LabelSlice;
    use crate::vertical_search::{train_ranker, FeatureMask};

    fn small_config() -> ExperimentConfig {
        let mut cfg = ExperimentConfig::default();
        cfg.corpus = GeneratorConfig {
            members: 60,
            skills: 12,
            companies: 8,
            industries: 4,
            jobs_docs: 50,
            content_docs: 50,
            train_queries: 40,
            eval_queries: 10,
            ..GeneratorConfig::default()
        };
        cfg.expertise.k = 4;
        cfg.ranker.epochs = 120;
        cfg.federation.epochs = 120;
        cfg.click.sessions_per_query = 4;
        // Candidate lists are short at this corpus size; keep a tail.
        cfg.click.tail_start = 5;
        cfg
    }

    struct Stack {
        corpus: Corpus,
        expertise: ExpertiseModel,
        intent: IntentModel,
    }

    fn build_stack(cfg: &ExperimentConfig) -> Stack {
        let corpus = generate_corpus(&cfg.corpus, cfg.seed).unwrap();
        let expertise = train_expertise_stage(&corpus, &cfg.expertise, cfg.seed).unwrap();
        let (intent, _) = train_intent_stage(&corpus, &cfg.intent).unwrap();
        Stack {
            corpus,
            expertise,
            intent,
        }
    }

    #[test]
    fn intent_stage_recovers_archetypes() {
        let cfg = small_config();
        let stack = build_stack(&cfg);
        let intents = member_intent_map(&stack.corpus, &stack.intent).unwrap();
        let mut correct = 0;
        for (row, member) in stack.corpus.members.iter().enumerate() {
            let iv = intents[&member.member_id];
            let scores = [iv.hiring, iv.job_seeking, iv.content_consuming];
            let argmax = (0..3).max_by(|&a, &b| scores[a].total_cmp(&scores[b])).unwrap();
            let want = match stack.corpus.planted.archetypes[row] {
                Archetype::Recruiter => 0,
                Archetype::JobSeeker => 1,
                Archetype::ContentConsumer => 2,
            };
            correct += usize::from(argmax == want);
        }
        // Weak labels plus bursty activity should make this nearly exact.
        assert!(
            correct * 10 >= stack.corpus.n_members() * 9,
            "only {correct}/{} archetypes recovered",
            stack.corpus.n_members()
        );
    }

    #[test]
    fn end_to_end_search_produces_a_deterministic_page() {
        let cfg = small_config();
        let stack = build_stack(&cfg);
        let ctx = SearchContext::build(
            &stack.corpus,
            &stack.expertise,
            &stack.intent,
            cfg.intent.threshold,
            &cfg.ranker,
        )
        .unwrap();

        let mut rankers = BTreeMap::new();
        for &vertical in &Vertical::ALL {
            let labels = collect_vertical_labels(
                &ctx,
                stack.corpus.train_queries(),
                vertical,
                &cfg.click,
                cfg.seed,
                LabelPlan::Randomized,
            )
            .unwrap();
            assert!(labels.iter().any(|l| l.label == 1), "{vertical}: no positives");
            assert!(labels.iter().any(|l| l.label == 0), "{vertical}: no negatives");
            assert!(labels.iter().any(|l| l.slice == LabelSlice::EasyNegative));
            let (model, _) = train_ranker(
                &labels,
                vertical,
                &cfg.ranker.hyper(cfg.seed),
                &FeatureMask::full(),
            )
            .unwrap();
            rankers.insert(vertical, model);
        }

        let federator = train_federator_stage(&ctx, &rankers, &cfg.federation, cfg.seed).unwrap();
        let query = &stack.corpus.eval_queries()[0];
        let page_a = run_search(&ctx, &rankers, &federator, query).unwrap();
        let page_b = run_search(&ctx, &rankers, &federator, query).unwrap();
        assert_eq!(page_a, page_b);
        assert!(!page_a.items.is_empty());

        // The whole stage chain is a pure function of (config, seed).
        let stack2 = build_stack(&cfg);
        assert_eq!(stack2.expertise, stack.expertise);
        let ctx2 = SearchContext::build(
            &stack2.corpus,
            &stack2.expertise,
            &stack2.intent,
            cfg.intent.threshold,
            &cfg.ranker,
        )
        .unwrap();
        let federator2 = train_federator_stage(&ctx2, &rankers, &cfg.federation, cfg.seed).unwrap();
        assert_eq!(federator2, federator);
    }

    #[test]
    fn organic_and_randomized_plans_draw_from_disjoint_streams() {
        let cfg = small_config();
        let stack = build_stack(&cfg);
        let ctx = SearchContext::build(
            &stack.corpus,
            &stack.expertise,
            &stack.intent,
            cfg.intent.threshold,
            &cfg.ranker,
        )
        .unwrap();
        let queries = &stack.corpus.train_queries()[..10];
        let randomized = collect_vertical_labels(
            &ctx,
            queries,
            Vertical::People,
            &cfg.click,
            cfg.seed,
            LabelPlan::Randomized,
        )
        .unwrap();
        let organic = collect_vertical_labels(
            &ctx,
            queries,
            Vertical::People,
            &cfg.click,
            cfg.seed,
            LabelPlan::Organic,
        )
        .unwrap();
        assert!(organic.iter().all(|l| l.slice == LabelSlice::Organic));
        assert_ne!(randomized, organic);
        // Same plan, same seed: byte-for-byte identical labels.
        let randomized_again = collect_vertical_labels(
            &ctx,
            queries,
            Vertical::People,
            &cfg.click,
            cfg.seed,
            LabelPlan::Randomized,
        )
        .unwrap();
        assert_eq!(randomized, randomized_again);
    }

    #[test]
    fn ad_hoc_queries_lowercase_their_terms() {
        let q = ad_hoc_query("Distributed  Systems", 7);
        assert_eq!(q.terms, vec!["distributed", "systems"]);
        assert_eq!(q.searcher_id, 7);
        assert!(q.ground_truth_utility.is_none());
    }
}
