//! End-to-end exercise of the library at reduced scale: generate a
//! corpus, persist it, train every stage, and serve blended pages. The
//! point is wiring, not quality; metric floors live in the acceptance
//! target of the command-line crate.

use std::collections::BTreeMap;

use fedrank_core::config::ExperimentConfig;
use fedrank_core::corpus::{generate_corpus, load_corpus, save_corpus, validate_corpus, GeneratorConfig, Vertical};
use fedrank_core::federation::PageItem;
use fedrank_core::pipeline::{
    collect_vertical_labels, run_search, train_expertise_stage, train_federator_stage,
    train_intent_stage, LabelPlan, SearchContext,
};
use fedrank_core::vertical_search::{train_ranker, FeatureMask};
use fedrank_core::Error;

fn small_config() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.corpus = GeneratorConfig {
        members: 60,
        skills: 12,
        companies: 8,
        industries: 4,
        jobs_docs: 80,
        content_docs: 80,
        train_queries: 80,
        eval_queries: 40,
        endorsements_per_member: 4,
        activity_horizon: 60,
        planted_rank: 3,
        homophily_weight: 0.5,
    };
    cfg
}

#[test]
fn generated_corpus_is_valid_reproducible_and_roundtrips_through_disk() {
    let cfg = small_config();
    let corpus = generate_corpus(&cfg.corpus, cfg.seed).expect("generate");
    assert!(validate_corpus(&corpus).is_empty(), "generator must satisfy its own invariants");

    let again = generate_corpus(&cfg.corpus, cfg.seed).expect("generate again");
    assert_eq!(corpus, again, "same config and seed must reproduce the corpus");

    let other_seed = generate_corpus(&cfg.corpus, cfg.seed + 1).expect("generate reseeded");
    assert_ne!(corpus, other_seed, "a different seed must change the corpus");

    let dir = tempfile::tempdir().expect("tempdir");
    save_corpus(&corpus, dir.path()).expect("save");
    let loaded = load_corpus(dir.path()).expect("load");
    assert_eq!(corpus, loaded, "persistence must roundtrip the corpus exactly");
}

#[test]
fn trained_stack_serves_blended_pages_for_every_evaluation_query() {
    let cfg = small_config();
    let corpus = generate_corpus(&cfg.corpus, cfg.seed).expect("generate");
    let expertise = train_expertise_stage(&corpus, &cfg.expertise, cfg.seed).expect("expertise");
    let (intent_model, report) = train_intent_stage(&corpus, &cfg.intent).expect("intent");
    assert!(
        report.heads.iter().all(|h| !h.fallback),
        "every intent head must fit a real decision boundary at this scale"
    );

    let ctx = SearchContext::build(&corpus, &expertise, &intent_model, cfg.intent.threshold, &cfg.ranker)
        .expect("context");
    let mut rankers = BTreeMap::new();
    for &vertical in &Vertical::ALL {
        let labels = collect_vertical_labels(
            &ctx,
            corpus.train_queries(),
            vertical,
            &cfg.click,
            cfg.seed,
            LabelPlan::Randomized,
        )
        .expect("labels");
        assert!(
            labels.iter().any(|l| l.label == 1) && labels.iter().any(|l| l.label == 0),
            "both label classes must occur for {vertical:?}"
        );
        let (model, _) =
            train_ranker(&labels, vertical, &cfg.ranker.hyper(cfg.seed), &FeatureMask::full())
                .expect("ranker");
        rankers.insert(vertical, model);
    }
    let federator =
        train_federator_stage(&ctx, &rankers, &cfg.federation, cfg.seed).expect("federator");

    let mut served = 0usize;
    for query in corpus.eval_queries() {
        let page = match run_search(&ctx, &rankers, &federator, query) {
            Ok(page) => page,
            // A query may retrieve nothing anywhere at this scale.
            Err(Error::NoResults) => continue,
            Err(other) => panic!("search failed for query {}: {other}", query.query_id),
        };
        served += 1;

        assert!(!page.items.is_empty(), "a served page cannot be empty");
        let mut block_verticals = Vec::new();
        for item in &page.items {
            match item {
                PageItem::Result { vertical, .. } => {
                    assert_eq!(*vertical, page.primary_vertical, "results come from the primary");
                }
                PageItem::Block { vertical, results, .. } => {
                    assert_ne!(*vertical, page.primary_vertical, "the primary never blocks");
                    assert!(!results.is_empty(), "an empty block must not render");
                    assert!(
                        results.len() <= federator.block_size,
                        "blocks are truncated to block_size"
                    );
                    block_verticals.push(*vertical);
                }
            }
        }
        let mut unique = block_verticals.clone();
        unique.sort();
        unique.dedup();
        assert_eq!(unique.len(), block_verticals.len(), "one block per vertical at most");
    }
    assert!(
        served >= corpus.eval_queries().len() / 2,
        "most evaluation queries must retrieve something, served {served}"
    );
}
