//! Ranking metrics against the planted ground truth, and the ablation
//! harness that compares system variants (feature sets, label sources) on
//! matched query sets.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::corpus::{Corpus, Vertical};
use crate::error::{Error, Result};
use crate::expertise::load_expertise_model;
use crate::intent::load_intent_model;
use crate::pipeline::{
    collect_vertical_labels, expertise_model_path, intent_model_path, LabelPlan, SearchContext,
};
use crate::vertical_search::{
    rank_results, train_ranker, FeatureMask, RankingFeatureVector, RankingModel,
};

/// NDCG@K with linear gain and discount 1/log2(rank + 1). The ideal DCG
/// runs over all judged documents (truncated at K), so missing a judged
/// document costs recall even when everything retrieved is ordered well.
/// Defined as 0 when the ideal DCG is 0.
pub fn ndcg_at_k(ranking: &[u64], truth: &BTreeMap<u64, f64>, k: usize) -> f64 {
    assert!(k >= 1, "K must be at least 1");
    let discount = |rank: usize| 1.0 / ((rank + 1) as f64).log2();
    let dcg: f64 = ranking
        .iter()
        .take(k)
        .enumerate()
        .map(|(i, doc)| truth.get(doc).copied().unwrap_or(0.0) * discount(i + 1))
        .sum();
    let mut ideal: Vec<f64> = truth.values().copied().collect();
    ideal.sort_by(|a, b| b.total_cmp(a));
    let idcg: f64 = ideal
        .iter()
        .take(k)
        .enumerate()
        .map(|(i, gain)| gain * discount(i + 1))
        .sum();
    if idcg <= 0.0 {
        0.0
    } else {
        dcg / idcg
    }
}

/// Reciprocal rank of the first result carrying the maximum judged
/// utility; 0 when no judged utility is positive or the ranking misses
/// every top-utility document.
pub fn reciprocal_rank(ranking: &[u64], truth: &BTreeMap<u64, f64>) -> f64 {
    let best = truth.values().copied().fold(0.0f64, f64::max);
    if best <= 0.0 {
        return 0.0;
    }
    for (i, doc) in ranking.iter().enumerate() {
        if truth.get(doc).copied().unwrap_or(0.0) == best {
            return 1.0 / (i + 1) as f64;
        }
    }
    0.0
}

/// FNV-1a, 64-bit.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// Hash of the full experiment config (seed included) for reproducibility
/// audits; identical runs carry identical digests.
pub fn config_digest(cfg: &ExperimentConfig) -> String {
    let canonical = serde_json::to_string(cfg).expect("config serializes");
    format!("{:016x}", fnv1a64(canonical.as_bytes()))
}

/// Metrics for one system variant over the evaluation queries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    /// K -> mean NDCG@K.
    pub ndcg_at_k: BTreeMap<u32, f64>,
    pub mrr: f64,
    pub n_queries: usize,
    pub config_digest: String,
}

/// All variants of one suite plus their pairwise metric deltas.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub suite: String,
    pub variants: BTreeMap<String, MetricReport>,
    /// "a_minus_b" -> metric name -> difference.
    pub deltas: BTreeMap<String, BTreeMap<String, f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Full,
    Bias,
    Homophily,
    Intent,
}

impl Suite {
    pub const ALL: [Suite; 4] = [Suite::Full, Suite::Bias, Suite::Homophily, Suite::Intent];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Full => "full",
            Suite::Bias => "bias",
            Suite::Homophily => "homophily",
            Suite::Intent => "intent",
        }
    }
}

impl std::str::FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|suite| suite.name() == s)
            .ok_or_else(|| Error::Input(format!(
                "unknown suite {s:?}; expected one of full, bias, homophily, intent"
            )))
    }
}

/// One comparable system configuration: which labels train the rankers
/// and which features they may use.
#[derive(Clone, Copy)]
struct VariantDef {
    name: &'static str,
    plan: LabelPlan,
    mask: fn() -> FeatureMask,
}

const FULL: VariantDef = VariantDef {
    name: "full",
    plan: LabelPlan::Randomized,
    mask: FeatureMask::full,
};
const TEXT_ONLY: VariantDef = VariantDef {
    name: "text_only",
    plan: LabelPlan::Randomized,
    mask: FeatureMask::text_only,
};
const TEXT_HOMOPHILY: VariantDef = VariantDef {
    name: "text_homophily",
    plan: LabelPlan::Randomized,
    mask: FeatureMask::text_and_homophily,
};
const NO_COMPOSITES: VariantDef = VariantDef {
    name: "no_composites",
    plan: LabelPlan::Randomized,
    mask: FeatureMask::without_composites,
};
const ORGANIC: VariantDef = VariantDef {
    name: "organic",
    plan: LabelPlan::Organic,
    mask: FeatureMask::full,
};

fn suite_variants(suite: Suite) -> Vec<VariantDef> {
    match suite {
        Suite::Full => vec![FULL, TEXT_HOMOPHILY, TEXT_ONLY, NO_COMPOSITES, ORGANIC],
        Suite::Bias => vec![FULL, ORGANIC],
        Suite::Homophily => vec![TEXT_HOMOPHILY, TEXT_ONLY],
        Suite::Intent => vec![FULL, NO_COMPOSITES],
    }
}

fn suite_deltas(suite: Suite) -> Vec<(&'static str, &'static str)> {
    match suite {
        Suite::Full => vec![
            ("text_homophily", "text_only"),
            ("full", "organic"),
            ("full", "no_composites"),
        ],
        Suite::Bias => vec![("full", "organic")],
        Suite::Homophily => vec![("text_homophily", "text_only")],
        Suite::Intent => vec![("full", "no_composites")],
    }
}

const NDCG_CUTOFFS: [usize; 2] = [5, 10];

/// Pre-extracted evaluation data for one query and vertical: candidate
/// features (shared by all variants) and the vertical-restricted truth.
struct VerticalEval {
    features: Vec<(u64, RankingFeatureVector)>,
    truth: BTreeMap<u64, f64>,
}

struct QueryEval {
    per_vertical: Vec<(Vertical, VerticalEval)>,
}

fn prepare_eval_data(ctx: &SearchContext) -> Result<Vec<QueryEval>> {
    let mut out = Vec::new();
    for query in ctx.corpus.eval_queries() {
        let truth = query.ground_truth_utility.as_ref().ok_or_else(|| {
            Error::Input(format!("query {} carries no ground truth", query.query_id))
        })?;
        let mut by_vertical: BTreeMap<Vertical, BTreeMap<u64, f64>> = BTreeMap::new();
        for (&doc_id, &utility) in truth {
            by_vertical
                .entry(ctx.corpus.doc(doc_id)?.vertical)
                .or_default()
                .insert(doc_id, utility);
        }
        let mut per_vertical = Vec::new();
        for (vertical, truth) in by_vertical {
            let features = ctx
                .candidates(query, vertical)?
                .into_iter()
                .map(|c| (c.doc_id, c.features))
                .collect();
            per_vertical.push((vertical, VerticalEval { features, truth }));
        }
        out.push(QueryEval { per_vertical });
    }
    Ok(out)
}

/// Scores one variant's rankers over the prepared evaluation data. Each
/// query contributes the mean over its judged verticals.
fn evaluate_variant(
    data: &[QueryEval],
    rankers: &BTreeMap<Vertical, RankingModel>,
    digest: &str,
) -> Result<MetricReport> {
    let mut ndcg_sums: BTreeMap<u32, f64> = NDCG_CUTOFFS.iter().map(|&k| (k as u32, 0.0)).collect();
    let mut rr_sum = 0.0;
    let mut n_queries = 0usize;
    for query in data {
        let mut per_k: BTreeMap<u32, f64> = NDCG_CUTOFFS.iter().map(|&k| (k as u32, 0.0)).collect();
        let mut rr = 0.0;
        let mut counted = 0usize;
        for (vertical, eval) in &query.per_vertical {
            if eval.truth.is_empty() {
                continue;
            }
            let ranking: Vec<u64> = rank_results(&rankers[vertical], &eval.features)
                .into_iter()
                .map(|(doc_id, _)| doc_id)
                .collect();
            for &k in &NDCG_CUTOFFS {
                *per_k.get_mut(&(k as u32)).unwrap() += ndcg_at_k(&ranking, &eval.truth, k);
            }
            rr += reciprocal_rank(&ranking, &eval.truth);
            counted += 1;
        }
        if counted == 0 {
            continue;
        }
        for (k, sum) in per_k {
            *ndcg_sums.get_mut(&k).unwrap() += sum / counted as f64;
        }
        rr_sum += rr / counted as f64;
        n_queries += 1;
    }
    if n_queries == 0 {
        return Err(Error::Input(
            "no evaluation query produced judged results; the corpus is too sparse to score".into(),
        ));
    }
    Ok(MetricReport {
        ndcg_at_k: ndcg_sums
            .into_iter()
            .map(|(k, sum)| (k, sum / n_queries as f64))
            .collect(),
        mrr: rr_sum / n_queries as f64,
        n_queries,
        config_digest: digest.to_string(),
    })
}

/// Loads the trained expertise and intent models, trains each variant's
/// rankers on freshly simulated click logs, and scores all variants on
/// the evaluation queries.
pub fn run_ablation(corpus: &Corpus, cfg: &ExperimentConfig, suite: Suite) -> Result<AblationReport> {
    let expertise = load_expertise_model(&expertise_model_path(&cfg.paths.models_dir))?;
    let intent_model = load_intent_model(&intent_model_path(&cfg.paths.models_dir))?;
    let ctx = SearchContext::build(corpus, &expertise, &intent_model, cfg.intent.threshold, &cfg.ranker)?;

    let variants = suite_variants(suite);
    let mut labels_by_plan: BTreeMap<&'static str, BTreeMap<Vertical, Vec<_>>> = BTreeMap::new();
    for variant in &variants {
        let key = plan_key(variant.plan);
        if labels_by_plan.contains_key(key) {
            continue;
        }
        let mut per_vertical = BTreeMap::new();
        for &vertical in &Vertical::ALL {
            per_vertical.insert(
                vertical,
                collect_vertical_labels(
                    &ctx,
                    corpus.train_queries(),
                    vertical,
                    &cfg.click,
                    cfg.seed,
                    variant.plan,
                )?,
            );
        }
        labels_by_plan.insert(key, per_vertical);
    }

    let data = prepare_eval_data(&ctx)?;
    let digest = config_digest(cfg);
    let mut reports: BTreeMap<String, MetricReport> = BTreeMap::new();
    for variant in &variants {
        let labels = &labels_by_plan[plan_key(variant.plan)];
        let mask = (variant.mask)();
        let mut rankers = BTreeMap::new();
        for &vertical in &Vertical::ALL {
            let (model, _) = train_ranker(
                &labels[&vertical],
                vertical,
                &cfg.ranker.hyper(cfg.seed),
                &mask,
            )?;
            rankers.insert(vertical, model);
        }
        reports.insert(variant.name.to_string(), evaluate_variant(&data, &rankers, &digest)?);
    }

    let mut deltas = BTreeMap::new();
    for (a, b) in suite_deltas(suite) {
        let (ra, rb) = (&reports[a], &reports[b]);
        let mut by_metric = BTreeMap::new();
        for &k in &NDCG_CUTOFFS {
            by_metric.insert(
                format!("ndcg@{k}"),
                ra.ndcg_at_k[&(k as u32)] - rb.ndcg_at_k[&(k as u32)],
            );
        }
        by_metric.insert("mrr".to_string(), ra.mrr - rb.mrr);
        deltas.insert(format!("{a}_minus_{b}"), by_metric);
    }

    Ok(AblationReport {
        suite: suite.name().to_string(),
        variants: reports,
        deltas,
    })
}

fn plan_key(plan: LabelPlan) -> &'static str {
    match plan {
        LabelPlan::Randomized => "randomized",
        LabelPlan::Organic => "organic",
    }
}

/// Renders the report as an aligned plain-text table.
pub fn format_table(report: &AblationReport) -> String {
    let name_width = report
        .variants
        .keys()
        .map(|n| n.len())
        .chain(report.deltas.keys().map(|n| n.len()))
        .chain(["variant".len()])
        .max()
        .unwrap_or(8);
    let mut out = String::new();
    let digest = report
        .variants
        .values()
        .next()
        .map(|r| r.config_digest.as_str())
        .unwrap_or("-");
    out.push_str(&format!("suite: {}  (config digest {digest})\n", report.suite));
    out.push_str(&format!(
        "{:<name_width$}  {:>8}  {:>8}  {:>8}  {:>9}\n",
        "variant", "ndcg@5", "ndcg@10", "mrr", "n_queries"
    ));
    for (name, r) in &report.variants {
        out.push_str(&format!(
            "{:<name_width$}  {:>8.4}  {:>8.4}  {:>8.4}  {:>9}\n",
            name,
            r.ndcg_at_k.get(&5).copied().unwrap_or(f64::NAN),
            r.ndcg_at_k.get(&10).copied().unwrap_or(f64::NAN),
            r.mrr,
            r.n_queries
        ));
    }
    if !report.deltas.is_empty() {
        out.push('\n');
        out.push_str(&format!(
            "{:<name_width$}  {:>8}  {:>8}  {:>8}\n",
            "delta", "ndcg@5", "ndcg@10", "mrr"
        ));
        for (name, by_metric) in &report.deltas {
            out.push_str(&format!(
                "{:<name_width$}  {:>8.4}  {:>8.4}  {:>8.4}\n",
                name,
                by_metric.get("ndcg@5").copied().unwrap_or(f64::NAN),
                by_metric.get("ndcg@10").copied().unwrap_or(f64::NAN),
                by_metric.get("mrr").copied().unwrap_or(f64::NAN),
            ));
        }
    }
    out
}
