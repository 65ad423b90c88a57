//! Structural validation of a corpus, independent of how it was produced.
//! Returns every violation rather than stopping at the first.

use std::collections::BTreeSet;
use std::fmt;

use super::Corpus;

/// One structural defect; `Display` names the entity and the rule broken.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation(pub String);

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

fn push(violations: &mut Vec<Violation>, msg: String) {
    violations.push(Violation(msg));
}

/// Checks referential integrity, id uniqueness, value ranges, and planted
/// truth dimensions. An empty corpus is valid.
pub fn validate_corpus(corpus: &Corpus) -> Vec<Violation> {
    let mut v = Vec::new();
    let n_skills = corpus.n_skills();
    let truth = &corpus.planted;

    let mut member_ids = BTreeSet::new();
    for m in &corpus.members {
        if !member_ids.insert(m.member_id) {
            push(&mut v, format!("duplicate member_id {}", m.member_id));
        }
        if !(0.0..=1.0).contains(&m.seniority) {
            push(
                &mut v,
                format!("member {} seniority {} outside [0, 1]", m.member_id, m.seniority),
            );
        }
        if !m.location.0.is_finite() || !m.location.1.is_finite() {
            push(&mut v, format!("member {} has non-finite location", m.member_id));
        }
        for &s in &m.skills {
            if s as usize >= n_skills {
                push(
                    &mut v,
                    format!("member {} lists unknown skill {}", m.member_id, s),
                );
            }
        }
    }

    let mut doc_ids = BTreeSet::new();
    for doc in corpus.docs.all() {
        if !doc_ids.insert(doc.doc_id) {
            push(&mut v, format!("duplicate doc_id {}", doc.doc_id));
        }
        for &s in &doc.skills {
            if s as usize >= n_skills {
                push(&mut v, format!("doc {} lists unknown skill {}", doc.doc_id, s));
            }
        }
        if let Some(subject) = doc.subject_member_id {
            if !member_ids.contains(&subject) {
                push(
                    &mut v,
                    format!("doc {} references unknown member {}", doc.doc_id, subject),
                );
            }
        }
        if let Some((x, y)) = doc.location {
            if !x.is_finite() || !y.is_finite() {
                push(&mut v, format!("doc {} has non-finite location", doc.doc_id));
            }
        }
    }

    for e in &corpus.endorsements {
        if e.endorser_id == e.endorsee_id {
            push(&mut v, format!("self-endorsement by member {}", e.endorser_id));
        }
        for id in [e.endorser_id, e.endorsee_id] {
            if !member_ids.contains(&id) {
                push(&mut v, format!("endorsement references unknown member {id}"));
            }
        }
        if e.skill_id as usize >= n_skills {
            push(&mut v, format!("endorsement references unknown skill {}", e.skill_id));
        }
    }

    for a in &corpus.activity {
        if !member_ids.contains(&a.member_id) {
            push(&mut v, format!("activity references unknown member {}", a.member_id));
        }
    }

    let mut query_ids = BTreeSet::new();
    for q in &corpus.queries {
        if !query_ids.insert(q.query_id) {
            push(&mut v, format!("duplicate query_id {}", q.query_id));
        }
        if !member_ids.contains(&q.searcher_id) {
            push(
                &mut v,
                format!("query {} references unknown searcher {}", q.query_id, q.searcher_id),
            );
        }
        if q.terms.is_empty() {
            push(&mut v, format!("query {} has no terms", q.query_id));
        }
        if let Some(truth) = &q.ground_truth_utility {
            for (&doc_id, &utility) in truth {
                if !doc_ids.contains(&doc_id) {
                    push(
                        &mut v,
                        format!("query {} grades unknown doc {}", q.query_id, doc_id),
                    );
                }
                if !utility.is_finite() || utility < 0.0 {
                    push(
                        &mut v,
                        format!("query {} doc {} has invalid utility {}", q.query_id, doc_id, utility),
                    );
                }
            }
        }
    }

    if truth.member_factors.len() != corpus.members.len() {
        push(
            &mut v,
            format!(
                "planted member_factors rows {} != member count {}",
                truth.member_factors.len(),
                corpus.members.len()
            ),
        );
    }
    if truth.archetypes.len() != corpus.members.len() {
        push(
            &mut v,
            format!(
                "planted archetypes rows {} != member count {}",
                truth.archetypes.len(),
                corpus.members.len()
            ),
        );
    }
    if truth.skill_factors.len() != n_skills {
        push(
            &mut v,
            format!(
                "planted skill_factors rows {} != skill count {}",
                truth.skill_factors.len(),
                n_skills
            ),
        );
    }
    for (i, row) in truth.member_factors.iter().enumerate() {
        if row.len() != truth.rank {
            push(&mut v, format!("planted member factor row {i} has wrong rank"));
        }
    }
    for (i, row) in truth.skill_factors.iter().enumerate() {
        if row.len() != truth.rank {
            push(&mut v, format!("planted skill factor row {i} has wrong rank"));
        }
    }
    if truth.train_query_count > corpus.queries.len() {
        push(
            &mut v,
            format!(
                "train_query_count {} exceeds query count {}",
                truth.train_query_count,
                corpus.queries.len()
            ),
        );
    }

    v
}
