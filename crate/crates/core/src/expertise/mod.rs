//! Member-skill expertise estimation in two steps: a supervised combiner
//! turns per-pair signals into confident probabilities for a sparse matrix,
//! and ALS factorization completes the unknown cells. The completed rows
//! also power the expertise-homophily ranking feature.

mod als;
mod pagerank;

pub use als::{factorize, ExpertiseFactors, FactorizeReport, SparseExpertiseMatrix};
pub use pagerank::{pagerank, EndorsementGraph};

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::model_io;
use crate::optim::{fit_logistic, sigmoid, LogisticFitReport};

pub const PAGERANK_TOL: f64 = 1e-12;
pub const PAGERANK_MAX_ITER: usize = 200;

/// Per-(member, skill) evidence fed to the supervised combiner.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpertiseSignals {
    /// Stationary score in the skill's endorsement subgraph.
    pub endorsement_pagerank: f64,
    /// Overlap between the skill's token pool and the profile text, in [0,1].
    pub skill_profile_similarity: f64,
    /// Copied from the profile, in [0,1].
    pub seniority: f64,
}

impl ExpertiseSignals {
    /// Bias-first feature layout used by the supervised weights.
    pub fn to_features(self) -> [f64; 4] {
        [
            1.0,
            self.endorsement_pagerank,
            self.skill_profile_similarity,
            self.seniority,
        ]
    }
}

/// Completed, clamped expertise scores for one member.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpertiseVector {
    pub member_id: u64,
    pub scores: Vec<f64>,
}

/// Signals for one (member, listed skill) pair plus its planted label.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalRow {
    pub member_row: usize,
    pub member_id: u64,
    pub skill_id: u64,
    pub signals: ExpertiseSignals,
    /// Planted expertise >= 0.5; training label for the combiner.
    pub expert: bool,
}

/// Signals for a single pair. Recomputes the skill's PageRank; use
/// [`signal_table`] when sweeping many pairs.
pub fn compute_expertise_signals(
    corpus: &Corpus,
    member_id: u64,
    skill_id: u64,
    damping: f64,
) -> Result<ExpertiseSignals> {
    let member = corpus.member(member_id)?;
    let pool = corpus.skill_pool(skill_id)?;
    let row = corpus.member_row(member_id)?;
    let graph = EndorsementGraph::for_skill(corpus, skill_id);
    let scores = pagerank(&graph, damping, PAGERANK_TOL, PAGERANK_MAX_ITER);
    Ok(ExpertiseSignals {
        endorsement_pagerank: scores[row],
        skill_profile_similarity: pool_overlap(pool, &member.profile_text),
        seniority: member.seniority,
    })
}

fn pool_overlap(pool: &[String], profile_text: &[String]) -> f64 {
    if pool.is_empty() {
        return 0.0;
    }
    let text: BTreeSet<&str> = profile_text.iter().map(String::as_str).collect();
    let hits = pool.iter().filter(|t| text.contains(t.as_str())).count();
    hits as f64 / pool.len() as f64
}

/// Signals and planted labels for every (member, listed skill) pair, in
/// member-row then skill order. Skill PageRanks are computed once each.
pub fn signal_table(corpus: &Corpus, damping: f64) -> Vec<SignalRow> {
    let mut per_skill: Vec<Option<Vec<f64>>> = vec![None; corpus.n_skills()];
    let mut rows = Vec::new();
    for (row, member) in corpus.members.iter().enumerate() {
        for &skill in &member.skills {
            let s = skill as usize;
            if s >= per_skill.len() {
                continue;
            }
            let scores = per_skill[s].get_or_insert_with(|| {
                let graph = EndorsementGraph::for_skill(corpus, skill);
                pagerank(&graph, damping, PAGERANK_TOL, PAGERANK_MAX_ITER)
            });
            let pool = &corpus.planted.skill_token_pools[s];
            rows.push(SignalRow {
                member_row: row,
                member_id: member.member_id,
                skill_id: skill,
                signals: ExpertiseSignals {
                    endorsement_pagerank: scores[row],
                    skill_profile_similarity: pool_overlap(pool, &member.profile_text),
                    seniority: member.seniority,
                },
                expert: corpus.planted.expertise(row, s) >= 0.5,
            });
        }
    }
    rows
}

/// p(expert | member, skill) from learned weights: sigmoid(bias + w.signals).
pub fn supervised_expertise_score(weights: &[f64], signals: &ExpertiseSignals) -> Result<f64> {
    let x = signals.to_features();
    if weights.len() != x.len() {
        return Err(Error::Input(format!(
            "expected {} supervised weights (bias + 3 signals), got {}",
            x.len(),
            weights.len()
        )));
    }
    if !x.iter().all(|v| v.is_finite()) {
        return Err(Error::Numeric("non-finite expertise signal".into()));
    }
    let z: f64 = weights.iter().zip(x).map(|(w, v)| w * v).sum();
    Ok(sigmoid(z))
}

/// Fits the supervised combiner on the given signal rows. Features are
/// standardized internally for conditioning and the learned weights are
/// folded back to raw signal scale, so they plug directly into
/// [`supervised_expertise_score`].
pub fn fit_supervised_weights(rows: &[SignalRow], l2: f64) -> Result<(Vec<f64>, LogisticFitReport)> {
    if rows.is_empty() {
        return Err(Error::Training(
            "no (member, listed skill) pairs to train the expertise combiner".into(),
        ));
    }
    let raw: Vec<[f64; 4]> = rows.iter().map(|r| r.signals.to_features()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| f64::from(r.expert)).collect();

    let dim = 4;
    let n = raw.len() as f64;
    let mut mean = vec![0.0; dim];
    let mut std = vec![0.0; dim];
    for x in &raw {
        for d in 1..dim {
            mean[d] += x[d];
        }
    }
    for m in mean.iter_mut() {
        *m /= n;
    }
    for x in &raw {
        for d in 1..dim {
            std[d] += (x[d] - mean[d]).powi(2);
        }
    }
    for s in std.iter_mut() {
        *s = (*s / n).sqrt();
        if *s < 1e-12 {
            *s = 1.0;
        }
    }
    std[0] = 1.0;

    let xs: Vec<Vec<f64>> = raw
        .iter()
        .map(|x| {
            (0..dim)
                .map(|d| if d == 0 { 1.0 } else { (x[d] - mean[d]) / std[d] })
                .collect()
        })
        .collect();
    let (w_std, report) = fit_logistic(&xs, &ys, l2, 1e-8, 200)?;

    let mut weights = vec![0.0; dim];
    weights[0] = w_std[0];
    for d in 1..dim {
        weights[d] = w_std[d] / std[d];
        weights[0] -= w_std[d] * mean[d] / std[d];
    }
    Ok((weights, report))
}

/// Trains the supervised combiner on all listed pairs of the corpus.
pub fn train_supervised_weights(
    corpus: &Corpus,
    damping: f64,
    l2: f64,
) -> Result<(Vec<f64>, LogisticFitReport)> {
    fit_supervised_weights(&signal_table(corpus, damping), l2)
}

/// Keeps only confident estimates: scores >= threshold (confident experts)
/// or <= 1 - threshold (confident non-experts) over listed pairs.
pub fn build_sparse_matrix(
    corpus: &Corpus,
    weights: &[f64],
    confidence_threshold: f64,
    damping: f64,
) -> Result<SparseExpertiseMatrix> {
    if !(confidence_threshold > 0.0 && confidence_threshold < 1.0) {
        return Err(Error::Input(format!(
            "confidence_threshold must be in (0, 1), got {confidence_threshold}"
        )));
    }
    let mut entries = std::collections::BTreeMap::new();
    for row in signal_table(corpus, damping) {
        let score = supervised_expertise_score(weights, &row.signals)?;
        if score >= confidence_threshold || score <= 1.0 - confidence_threshold {
            entries.insert((row.member_row, row.skill_id as usize), score);
        }
    }
    Ok(SparseExpertiseMatrix {
        entries,
        n_members: corpus.n_members(),
        n_skills: corpus.n_skills(),
    })
}

/// Completed expertise for one cell: dot product clamped to [0, 1].
pub fn infer_expertise(factors: &ExpertiseFactors, member_row: usize, skill: usize) -> Result<f64> {
    let m = factors.member_factors.get(member_row).ok_or(Error::Lookup {
        kind: "member row",
        id: member_row.to_string(),
    })?;
    let s = factors.skill_factors.get(skill).ok_or(Error::Lookup {
        kind: "skill",
        id: skill.to_string(),
    })?;
    let dot: f64 = m.iter().zip(s).map(|(a, b)| a * b).sum();
    Ok(dot.clamp(0.0, 1.0))
}

/// Completed, clamped skill-space row for one member.
pub fn expertise_row(factors: &ExpertiseFactors, member_row: usize) -> Vec<f64> {
    (0..factors.skill_factors.len())
        .map(|s| infer_expertise(factors, member_row, s).expect("row checked by caller"))
        .collect()
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// Cosine similarity between two members' completed skill-space rows;
/// 0 when either row is all-zero. Both rows must be in range.
pub fn expertise_homophily(factors: &ExpertiseFactors, row_a: usize, row_b: usize) -> f64 {
    let a = expertise_row(factors, row_a);
    let b = expertise_row(factors, row_b);
    cosine(&a, &b)
}

/// The member's mean completed expertise over a document's skills; the
/// homophily feature for Jobs and Content. Skills outside the vocabulary
/// are ignored.
pub fn expertise_skill_homophily(factors: &ExpertiseFactors, member_row: usize, skills: &[u64]) -> f64 {
    let row = expertise_row(factors, member_row);
    let vals: Vec<f64> = skills
        .iter()
        .filter_map(|&s| row.get(s as usize).copied())
        .collect();
    if vals.is_empty() {
        0.0
    } else {
        vals.iter().sum::<f64>() / vals.len() as f64
    }
}

/// On-disk expertise model: supervised combiner weights plus factor
/// matrices and the skill vocabulary they index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpertiseModel {
    #[serde(rename = "K")]
    pub k: usize,
    pub lambda: f64,
    pub weights: Vec<f64>,
    pub member_factors: Vec<Vec<f64>>,
    pub skill_factors: Vec<Vec<f64>>,
    pub skill_vocab: Vec<String>,
}

impl ExpertiseModel {
    pub fn new(weights: Vec<f64>, factors: &ExpertiseFactors, skill_vocab: Vec<String>) -> Self {
        ExpertiseModel {
            k: factors.k,
            lambda: factors.lambda,
            weights,
            member_factors: factors.member_factors.clone(),
            skill_factors: factors.skill_factors.clone(),
            skill_vocab,
        }
    }

    pub fn factors(&self) -> ExpertiseFactors {
        ExpertiseFactors {
            member_factors: self.member_factors.clone(),
            skill_factors: self.skill_factors.clone(),
            k: self.k,
            lambda: self.lambda,
        }
    }
}

pub fn save_expertise_model(model: &ExpertiseModel, path: &Path) -> Result<()> {
    model_io::save_json(model, path)
}

pub fn load_expertise_model(path: &Path) -> Result<ExpertiseModel> {
    model_io::load_json(path, "run `train-expertise` to produce it")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{generate_corpus, GeneratorConfig};

    fn corpus() -> Corpus {
        let cfg = GeneratorConfig {
            members: 40,
            skills: 10,
            jobs_docs: 0,
            content_docs: 0,
            train_queries: 0,
            eval_queries: 0,
            ..GeneratorConfig::default()
        };
        generate_corpus(&cfg, 17).unwrap()
    }

    #[test]
    fn zero_edge_skill_gives_uniform_pagerank_signal() {
        let corpus = corpus();
        // A skill nobody endorses: use one past the generated range by
        // rebuilding a corpus copy with an extra empty pool.
        let mut c = corpus.clone();
        c.planted.skill_token_pools.push(vec!["ghost".into()]);
        c.planted
            .skill_factors
            .push(vec![0.0; c.planted.rank]);
        let n = c.n_members() as f64;
        let ghost = (c.n_skills() - 1) as u64;
        let sig = compute_expertise_signals(&c, 0, ghost, 0.85).unwrap();
        assert!((sig.endorsement_pagerank - 1.0 / n).abs() < 1e-12);
        assert_eq!(sig.skill_profile_similarity, 0.0);
    }

    #[test]
    fn unknown_ids_are_lookup_errors() {
        let corpus = corpus();
        assert!(matches!(
            compute_expertise_signals(&corpus, 9999, 0, 0.85),
            Err(Error::Lookup { kind: "member", .. })
        ));
        assert!(matches!(
            compute_expertise_signals(&corpus, 0, 9999, 0.85),
            Err(Error::Lookup { kind: "skill", .. })
        ));
    }

    #[test]
    fn all_zero_weights_score_half() {
        let sig = ExpertiseSignals {
            endorsement_pagerank: 0.3,
            skill_profile_similarity: 0.7,
            seniority: 0.2,
        };
        assert_eq!(supervised_expertise_score(&[0.0; 4], &sig).unwrap(), 0.5);
    }

    #[test]
    fn zero_pagerank_with_only_pagerank_weight_scores_half() {
        let sig = ExpertiseSignals {
            endorsement_pagerank: 0.0,
            skill_profile_similarity: 0.9,
            seniority: 0.9,
        };
        let w = [0.0, 1.0, 0.0, 0.0];
        assert_eq!(supervised_expertise_score(&w, &sig).unwrap(), 0.5);
    }

    #[test]
    fn score_is_monotone_in_positive_weight_signals() {
        let w = [0.1, 2.0, 1.5, 0.7];
        let base = ExpertiseSignals {
            endorsement_pagerank: 0.2,
            skill_profile_similarity: 0.4,
            seniority: 0.5,
        };
        let s0 = supervised_expertise_score(&w, &base).unwrap();
        for bump in [
            ExpertiseSignals {
                endorsement_pagerank: 0.3,
                ..base
            },
            ExpertiseSignals {
                skill_profile_similarity: 0.5,
                ..base
            },
            ExpertiseSignals {
                seniority: 0.6,
                ..base
            },
        ] {
            let s1 = supervised_expertise_score(&w, &bump).unwrap();
            assert!(s1 > s0, "bump {bump:?} did not raise score");
        }
    }

    #[test]
    fn non_finite_signal_is_numeric_error() {
        let sig = ExpertiseSignals {
            endorsement_pagerank: f64::NAN,
            skill_profile_similarity: 0.0,
            seniority: 0.0,
        };
        assert!(matches!(
            supervised_expertise_score(&[0.0; 4], &sig),
            Err(Error::Numeric(_))
        ));
    }

    #[test]
    fn half_threshold_keeps_every_listed_pair() {
        let corpus = corpus();
        let listed: usize = corpus.members.iter().map(|m| m.skills.len()).sum();
        let weights = [0.3, 1.0, 1.0, 1.0];
        let e0 = build_sparse_matrix(&corpus, &weights, 0.5, 0.85).unwrap();
        assert_eq!(e0.entries.len(), listed);
    }

    #[test]
    fn out_of_range_threshold_is_rejected() {
        let corpus = corpus();
        assert!(build_sparse_matrix(&corpus, &[0.0; 4], 1.0, 0.85).is_err());
        assert!(build_sparse_matrix(&corpus, &[0.0; 4], 0.0, 0.85).is_err());
    }

    #[test]
    fn confident_filter_is_sparser_than_listed_pairs() {
        let corpus = corpus();
        let (weights, _) = train_supervised_weights(&corpus, 0.85, 1e-4).unwrap();
        let listed: usize = corpus.members.iter().map(|m| m.skills.len()).sum();
        let e0 = build_sparse_matrix(&corpus, &weights, 0.8, 0.85).unwrap();
        assert!(e0.entries.len() <= listed);
        assert!(e0.density() > 0.0);
    }

    #[test]
    fn homophily_of_identical_rows_is_one() {
        let factors = ExpertiseFactors {
            member_factors: vec![vec![0.5, 0.2], vec![0.5, 0.2], vec![0.0, 0.0]],
            skill_factors: vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![0.6, 0.3]],
            k: 2,
            lambda: 0.1,
        };
        assert!((expertise_homophily(&factors, 0, 1) - 1.0).abs() < 1e-12);
        assert_eq!(expertise_homophily(&factors, 0, 2), 0.0);
    }

    #[test]
    fn disjoint_support_rows_are_orthogonal() {
        let factors = ExpertiseFactors {
            member_factors: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            skill_factors: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            k: 2,
            lambda: 0.0,
        };
        assert_eq!(expertise_homophily(&factors, 0, 1), 0.0);
    }

    #[test]
    fn inferred_values_are_clamped() {
        let factors = ExpertiseFactors {
            member_factors: vec![vec![3.0], vec![-2.0]],
            skill_factors: vec![vec![1.0]],
            k: 1,
            lambda: 0.0,
        };
        assert_eq!(infer_expertise(&factors, 0, 0).unwrap(), 1.0);
        assert_eq!(infer_expertise(&factors, 1, 0).unwrap(), 0.0);
        assert!(matches!(
            infer_expertise(&factors, 5, 0),
            Err(Error::Lookup { .. })
        ));
    }

    #[test]
    fn model_file_roundtrip() {
        let factors = ExpertiseFactors {
            member_factors: vec![vec![0.1, 0.2]],
            skill_factors: vec![vec![0.3, 0.4]],
            k: 2,
            lambda: 0.1,
        };
        let model = ExpertiseModel::new(vec![0.0; 4], &factors, vec!["skill0".into()]);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("expertise_model.json");
        save_expertise_model(&model, &path).unwrap();
        let back = load_expertise_model(&path).unwrap();
        assert_eq!(back, model);
        let body = std::fs::read_to_string(&path).unwrap();
        assert!(body.contains("\"K\""));
    }
}
