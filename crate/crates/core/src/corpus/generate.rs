//! Deterministic synthetic corpus generation.
//!
//! The generator plants a low-rank member-skill expertise matrix and a
//! per-member archetype, then derives every observable signal from them:
//! listed skills, profile text, endorsements, activity logs, and the
//! ground-truth utility of every (query, document) pair. Identical
//! (config, seed) inputs produce byte-identical corpora.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{
    ActivityEvent, ActivityKind, Corpus, DocSet, Document, MemberProfile, Query, Vertical,
};

/// Planted behavioral archetype; drives titles, activity mix, and the
/// intent labels used to train the intent model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Archetype {
    Recruiter,
    JobSeeker,
    ContentConsumer,
}

/// Sizes and knobs for the synthetic corpus.
///
/// All distributions are artifact choices; they exist to make the planted
/// structure learnable at desk scale, not to model any real dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorConfig {
    pub members: usize,
    pub skills: usize,
    pub companies: usize,
    pub industries: usize,
    pub jobs_docs: usize,
    pub content_docs: usize,
    pub train_queries: usize,
    pub eval_queries: usize,
    pub endorsements_per_member: usize,
    /// Activity timestamps fall in `[0, activity_horizon)`.
    pub activity_horizon: u64,
    /// Rank of the planted expertise matrix (also the number of skill topics).
    pub planted_rank: usize,
    /// Weight of expertise homophily in the planted utility:
    /// `utility = text_relevance + homophily_weight * homophily`.
    pub homophily_weight: f64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            members: 300,
            skills: 40,
            companies: 30,
            industries: 8,
            jobs_docs: 500,
            content_docs: 500,
            train_queries: 300,
            eval_queries: 500,
            endorsements_per_member: 6,
            activity_horizon: 100,
            planted_rank: 3,
            homophily_weight: 0.5,
        }
    }
}

impl GeneratorConfig {
    /// Checks cross-field consistency; messages name the offending key.
    pub fn validate(&self) -> Result<()> {
        let err = |key: &str, message: &str| {
            Err(Error::Config {
                key: format!("corpus.{key}"),
                message: message.to_string(),
            })
        };
        if self.members > 0 && self.skills == 0 {
            return err("skills", "must be >= 1 when members > 0");
        }
        if self.members > 0 && self.planted_rank == 0 {
            return err("planted_rank", "must be >= 1 when members > 0");
        }
        if self.members > 0 && self.companies == 0 {
            return err("companies", "must be >= 1 when members > 0");
        }
        if self.members > 0 && self.industries == 0 {
            return err("industries", "must be >= 1 when members > 0");
        }
        if self.members > 0 && self.activity_horizon == 0 {
            return err("activity_horizon", "must be >= 1 when members > 0");
        }
        if self.jobs_docs > 0 && (self.companies == 0 || self.skills == 0 || self.planted_rank == 0)
        {
            return err("jobs_docs", "requires companies, skills and planted_rank >= 1");
        }
        if self.content_docs > 0 && (self.skills == 0 || self.planted_rank == 0) {
            return err("content_docs", "requires skills and planted_rank >= 1");
        }
        if (self.train_queries > 0 || self.eval_queries > 0) && self.members == 0 {
            return err("train_queries", "queries require members > 0");
        }
        if !self.homophily_weight.is_finite() || self.homophily_weight < 0.0 {
            return err("homophily_weight", "must be finite and >= 0");
        }
        Ok(())
    }
}

/// Ground-truth latent structure recorded alongside the corpus so that
/// oracles can score rankings and training can read planted labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedTruth {
    /// Upper bound on the rank of the planted expertise matrix.
    pub rank: usize,
    /// `members x rank`; expertise is the dot product with `skill_factors`.
    pub member_factors: Vec<Vec<f64>>,
    /// `skills x rank`.
    pub skill_factors: Vec<Vec<f64>>,
    /// Per member row.
    pub archetypes: Vec<Archetype>,
    /// Tokens associated with each skill; profile and document text draw
    /// from these pools.
    pub skill_token_pools: Vec<Vec<String>>,
    pub industry_token_pools: Vec<Vec<String>>,
    /// Homophily weight used in the planted utility.
    pub homophily_weight: f64,
    /// The first `train_query_count` queries are the training split.
    pub train_query_count: usize,
}

impl PlantedTruth {
    pub fn empty() -> Self {
        PlantedTruth {
            rank: 0,
            member_factors: Vec::new(),
            skill_factors: Vec::new(),
            archetypes: Vec::new(),
            skill_token_pools: Vec::new(),
            industry_token_pools: Vec::new(),
            homophily_weight: 0.0,
            train_query_count: 0,
        }
    }

    /// Planted expertise of a (member row, skill) cell, in [0, 1).
    pub fn expertise(&self, member_row: usize, skill: usize) -> f64 {
        dot(&self.member_factors[member_row], &self.skill_factors[skill])
    }

    /// Full planted expertise row of a member.
    pub fn expertise_row(&self, member_row: usize) -> Vec<f64> {
        (0..self.skill_factors.len())
            .map(|s| self.expertise(member_row, s))
            .collect()
    }

    /// True expertise homophily between a searcher and a document, used by
    /// the utility oracle. People documents compare planted rows by cosine;
    /// for Jobs and Content it is the searcher's mean planted expertise over
    /// the document's skills.
    pub fn homophily(&self, searcher_row: usize, doc: &Document, subject_row: Option<usize>) -> f64 {
        let searcher = self.expertise_row(searcher_row);
        match (doc.vertical, subject_row) {
            (Vertical::People, Some(row)) => cosine(&searcher, &self.expertise_row(row)),
            (Vertical::People, None) => 0.0,
            _ => mean_over_skills(&searcher, &doc.skills),
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let na = dot(a, a).sqrt();
    let nb = dot(b, b).sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot(a, b) / (na * nb)
    }
}

const GENERIC_TITLES: [&str; 8] = [
    "engineer",
    "manager",
    "analyst",
    "scientist",
    "designer",
    "consultant",
    "strategist",
    "writer",
];

fn skill_pool(skill: usize) -> Vec<String> {
    vec![
        format!("skill{skill}"),
        format!("skill{skill}_tool"),
        format!("skill{skill}_domain"),
    ]
}

fn industry_pool(industry: usize) -> Vec<String> {
    vec![format!("ind{industry}"), format!("ind{industry}_sector")]
}

/// Generates a corpus from planted latent structure. Deterministic:
/// identical (config, seed) pairs serialize to identical bytes.
pub fn generate_corpus(config: &GeneratorConfig, seed: u64) -> Result<Corpus> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = config.planted_rank;

    let skill_token_pools: Vec<Vec<String>> = (0..config.skills).map(skill_pool).collect();
    let industry_token_pools: Vec<Vec<String>> = (0..config.industries).map(industry_pool).collect();

    // Skill factors: each skill concentrates on one topic (skill id mod rank).
    let mut skill_factors = Vec::with_capacity(config.skills);
    for s in 0..config.skills {
        let topic = if r > 0 { s % r } else { 0 };
        let row: Vec<f64> = (0..r)
            .map(|t| {
                if t == topic {
                    0.75 + 0.25 * rng.gen::<f64>()
                } else {
                    0.12 * rng.gen::<f64>()
                }
            })
            .collect();
        skill_factors.push(row);
    }
    let skill_topics: Vec<usize> = (0..config.skills).map(|s| if r > 0 { s % r } else { 0 }).collect();
    let mut topic_skills: Vec<Vec<u64>> = vec![Vec::new(); r.max(1)];
    for (s, &t) in skill_topics.iter().enumerate() {
        topic_skills[t].push(s as u64);
    }

    // Member factors: a continuous mixture over topics with one dominant
    // component, scaled so every planted expertise value stays below 1.
    // The off-topic mass varies per member, which is what spreads pairwise
    // homophily out instead of collapsing it into same/different-topic bands.
    let mut member_factors = Vec::with_capacity(config.members);
    for _ in 0..config.members {
        let topic = rng.gen_range(0..r.max(1));
        let row: Vec<f64> = (0..r)
            .map(|t| {
                let raw = if t == topic {
                    0.55 + 0.45 * rng.gen::<f64>()
                } else {
                    0.25 * rng.gen::<f64>()
                };
                raw / 1.07
            })
            .collect();
        member_factors.push(row);
    }

    let archetypes: Vec<Archetype> = (0..config.members)
        .map(|_| {
            let u = rng.gen::<f64>();
            if u < 0.25 {
                Archetype::Recruiter
            } else if u < 0.65 {
                Archetype::JobSeeker
            } else {
                Archetype::ContentConsumer
            }
        })
        .collect();

    let planted = PlantedTruth {
        rank: r,
        member_factors,
        skill_factors,
        archetypes: archetypes.clone(),
        skill_token_pools: skill_token_pools.clone(),
        industry_token_pools: industry_token_pools.clone(),
        homophily_weight: config.homophily_weight,
        train_query_count: config.train_queries,
    };

    // Members: listed skills are the top planted skills plus occasional
    // low-expertise noise; profile text carries skill tokens in proportion
    // to planted expertise so textual similarity is informative.
    let mut members = Vec::with_capacity(config.members);
    for m in 0..config.members {
        let company = rng.gen_range(0..config.companies) as u64;
        let industry = company % config.industries as u64;
        let location = (100.0 * rng.gen::<f64>(), 100.0 * rng.gen::<f64>());

        let expertise_row = planted.expertise_row(m);
        let row_mean = expertise_row.iter().sum::<f64>() / expertise_row.len().max(1) as f64;
        let seniority = (2.0 * row_mean + 0.3 * (rng.gen::<f64>() - 0.5)).clamp(0.0, 1.0);

        let mut ranked: Vec<u64> = (0..config.skills as u64).collect();
        ranked.sort_by(|&a, &b| {
            expertise_row[b as usize]
                .partial_cmp(&expertise_row[a as usize])
                .unwrap()
                .then(a.cmp(&b))
        });
        let n_top = (5 + rng.gen_range(0..3)).min(config.skills);
        let mut skills: Vec<u64> = ranked[..n_top].to_vec();
        for _ in 0..6 {
            if rng.gen::<f64>() < 0.6 {
                let cand = rng.gen_range(0..config.skills) as u64;
                if !skills.contains(&cand) {
                    skills.push(cand);
                }
            }
        }
        skills.sort_unstable();

        let title = match archetypes[m] {
            Archetype::Recruiter if rng.gen::<f64>() < 0.85 => "recruiter".to_string(),
            _ => GENERIC_TITLES[rng.gen_range(0..GENERIC_TITLES.len())].to_string(),
        };

        let mut profile_text = Vec::new();
        for &s in &skills {
            let e = expertise_row[s as usize];
            // Every listed skill surfaces at least two tokens, so casual
            // listings land in the same text-match class as expert ones.
            let n_tok = ((3.0 * e).round() as usize).clamp(2, 3);
            profile_text.extend(skill_token_pools[s as usize][..n_tok].iter().cloned());
        }
        profile_text.extend(industry_token_pools[industry as usize].iter().cloned());
        if rng.gen::<f64>() < 0.5 && config.skills > 0 {
            let s = rng.gen_range(0..config.skills);
            let t = rng.gen_range(0..3);
            profile_text.push(skill_token_pools[s][t].clone());
        }

        members.push(MemberProfile {
            member_id: m as u64,
            title,
            company_id: company,
            industry_id: industry,
            location,
            skills,
            seniority,
            profile_text,
        });
    }

    // Endorsements concentrate on high-expertise (member, skill) pairs so
    // that per-skill endorsement PageRank tracks planted expertise.
    let mut endorsements = Vec::new();
    let mut seen = BTreeSet::new();
    for _ in 0..config.members * config.endorsements_per_member {
        if config.members < 2 {
            break;
        }
        let endorsee = rng.gen_range(0..config.members);
        let listed = &members[endorsee].skills;
        if listed.is_empty() {
            continue;
        }
        let weights: Vec<f64> = listed
            .iter()
            .map(|&s| planted.expertise(endorsee, s as usize).powi(2))
            .collect();
        let total: f64 = weights.iter().sum();
        let skill = if total <= 0.0 {
            listed[rng.gen_range(0..listed.len())]
        } else {
            let mut u = rng.gen::<f64>() * total;
            let mut chosen = listed[listed.len() - 1];
            for (i, &w) in weights.iter().enumerate() {
                if u < w {
                    chosen = listed[i];
                    break;
                }
                u -= w;
            }
            chosen
        };
        if rng.gen::<f64>() >= planted.expertise(endorsee, skill as usize) {
            continue;
        }
        let endorser = rng.gen_range(0..config.members);
        if endorser == endorsee {
            continue;
        }
        if seen.insert((endorser as u64, endorsee as u64, skill)) {
            endorsements.push(super::Endorsement {
                endorser_id: endorser as u64,
                endorsee_id: endorsee as u64,
                skill_id: skill,
            });
        }
    }

    // Documents. People docs mirror member profiles; Jobs and Content docs
    // draw their skills from a single topic so skill co-occurrence patterns
    // carry over to documents.
    let mut docs = DocSet::default();
    for m in &members {
        let mut text = m.profile_text.clone();
        text.push(m.title.clone());
        text.push(format!("comp{}", m.company_id));
        docs.people.push(Document {
            doc_id: m.member_id,
            vertical: Vertical::People,
            text,
            company_id: Some(m.company_id),
            location: Some(m.location),
            skills: m.skills.clone(),
            subject_member_id: Some(m.member_id),
        });
    }
    let mut next_doc_id = config.members as u64;
    for _ in 0..config.jobs_docs {
        let company = rng.gen_range(0..config.companies) as u64;
        let industry = (company % config.industries as u64) as usize;
        let location = (100.0 * rng.gen::<f64>(), 100.0 * rng.gen::<f64>());
        let topic = rng.gen_range(0..r.max(1));
        let n_sk = 2 + rng.gen_range(0..3);
        let skills = mixed_skills(&mut rng, &topic_skills[topic], n_sk, config.skills, 0.5);
        let mut text = Vec::new();
        for &s in &skills {
            text.extend(skill_token_pools[s as usize].iter().cloned());
        }
        text.extend(industry_token_pools[industry].iter().cloned());
        text.push("opening".to_string());
        text.push(format!("comp{company}"));
        docs.jobs.push(Document {
            doc_id: next_doc_id,
            vertical: Vertical::Jobs,
            text,
            company_id: Some(company),
            location: Some(location),
            skills,
            subject_member_id: None,
        });
        next_doc_id += 1;
    }
    for _ in 0..config.content_docs {
        // Posts carry their author's location.
        let location = (100.0 * rng.gen::<f64>(), 100.0 * rng.gen::<f64>());
        let topic = rng.gen_range(0..r.max(1));
        let n_sk = 2 + rng.gen_range(0..3);
        let skills = mixed_skills(&mut rng, &topic_skills[topic], n_sk, config.skills, 0.5);
        let mut text = Vec::new();
        for &s in &skills {
            text.extend(skill_token_pools[s as usize].iter().cloned());
        }
        text.push("slides".to_string());
        docs.content.push(Document {
            doc_id: next_doc_id,
            vertical: Vertical::Content,
            text,
            company_id: None,
            location: Some(location),
            skills,
            subject_member_id: None,
        });
        next_doc_id += 1;
    }

    // Activity: a couple of uniform background events per member plus a
    // recent archetype-specific burst inside the default intent window.
    let mut activity = Vec::new();
    for m in 0..config.members {
        let n_background = 1 + rng.gen_range(0..2);
        for _ in 0..n_background {
            let kind = match rng.gen_range(0..5) {
                0 => ActivityKind::JobSearch,
                1 => ActivityKind::JobApply,
                2 => ActivityKind::PeopleSearch,
                3 => ActivityKind::ContentView,
                _ => ActivityKind::RecruiterAction,
            };
            activity.push(ActivityEvent {
                member_id: m as u64,
                kind,
                timestamp: rng.gen_range(0..config.activity_horizon),
            });
        }
        let n_burst = 6 + rng.gen_range(0..5);
        for _ in 0..n_burst {
            let kind = match archetypes[m] {
                Archetype::Recruiter => {
                    if rng.gen::<f64>() < 0.6 {
                        ActivityKind::PeopleSearch
                    } else {
                        ActivityKind::RecruiterAction
                    }
                }
                Archetype::JobSeeker => {
                    if rng.gen::<f64>() < 0.5 {
                        ActivityKind::JobSearch
                    } else {
                        ActivityKind::JobApply
                    }
                }
                Archetype::ContentConsumer => ActivityKind::ContentView,
            };
            let back = rng.gen_range(0..25).min(config.activity_horizon - 1);
            activity.push(ActivityEvent {
                member_id: m as u64,
                kind,
                timestamp: config.activity_horizon - 1 - back,
            });
        }
    }

    // Queries: one or two tokens from an anchor skill pool, sometimes a
    // token from a same-topic skill. Every query records the planted
    // utility of each document sharing at least one term.
    let erows: Vec<Vec<f64>> = (0..config.members).map(|m| planted.expertise_row(m)).collect();
    let mut queries = Vec::new();
    let total_queries = config.train_queries + config.eval_queries;
    for qid in 0..total_queries {
        let searcher = rng.gen_range(0..config.members);
        let anchor = rng.gen_range(0..config.skills);
        let mut terms = vec![skill_token_pools[anchor][0].clone()];
        if rng.gen::<f64>() < 0.5 {
            terms.push(skill_token_pools[anchor][1].clone());
        }
        if rng.gen::<f64>() < 0.3 {
            let pool = &topic_skills[skill_topics[anchor]];
            let other = pool[rng.gen_range(0..pool.len())] as usize;
            let tok = skill_token_pools[other][0].clone();
            if !terms.contains(&tok) {
                terms.push(tok);
            }
        }

        let mut truth = std::collections::BTreeMap::new();
        for doc in docs.all() {
            let overlap = terms
                .iter()
                .filter(|t| doc.text.iter().any(|tok| tok == *t))
                .count();
            if overlap == 0 {
                continue;
            }
            let text_rel = overlap as f64 / terms.len() as f64;
            let subject_row = doc.subject_member_id.map(|id| id as usize);
            let h = homophily_with_rows(&erows, searcher, doc, subject_row);
            truth.insert(doc.doc_id, text_rel + config.homophily_weight * h);
        }
        queries.push(Query {
            query_id: qid as u64,
            searcher_id: searcher as u64,
            terms,
            ground_truth_utility: Some(truth),
        });
    }

    Ok(Corpus::new(members, endorsements, docs, activity, queries, planted))
}

fn homophily_with_rows(
    erows: &[Vec<f64>],
    searcher_row: usize,
    doc: &Document,
    subject_row: Option<usize>,
) -> f64 {
    let searcher = &erows[searcher_row];
    match (doc.vertical, subject_row) {
        (Vertical::People, Some(row)) => cosine(searcher, &erows[row]),
        (Vertical::People, None) => 0.0,
        _ => mean_over_skills(searcher, &doc.skills),
    }
}

fn mean_over_skills(row: &[f64], skills: &[u64]) -> f64 {
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

/// Draws up to `n` distinct skills, each independently taken from the full
/// skill range with probability `cross_p` and from `topic_pool` otherwise.
/// Documents built this way straddle topics, which makes their skill sets
/// discriminative for expertise homophily.
fn mixed_skills(
    rng: &mut ChaCha8Rng,
    topic_pool: &[u64],
    n: usize,
    total_skills: usize,
    cross_p: f64,
) -> Vec<u64> {
    let mut out: Vec<u64> = Vec::with_capacity(n);
    let mut attempts = 0;
    while out.len() < n && attempts < 20 * n.max(1) {
        attempts += 1;
        let cand = if total_skills > 0 && rng.gen::<f64>() < cross_p {
            rng.gen_range(0..total_skills) as u64
        } else if !topic_pool.is_empty() {
            topic_pool[rng.gen_range(0..topic_pool.len())]
        } else {
            break;
        };
        if !out.contains(&cand) {
            out.push(cand);
        }
    }
    out.sort_unstable();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_gives_empty_valid_corpus() {
        let cfg = GeneratorConfig {
            members: 0,
            skills: 0,
            companies: 0,
            industries: 0,
            jobs_docs: 0,
            content_docs: 0,
            train_queries: 0,
            eval_queries: 0,
            ..GeneratorConfig::default()
        };
        let corpus = generate_corpus(&cfg, 1).unwrap();
        assert!(corpus.members.is_empty());
        assert!(corpus.docs.is_empty());
        assert!(crate::corpus::validate_corpus(&corpus).is_empty());
    }

    #[test]
    fn generated_corpus_satisfies_invariants() {
        let cfg = GeneratorConfig {
            members: 60,
            skills: 12,
            jobs_docs: 40,
            content_docs: 40,
            train_queries: 20,
            eval_queries: 10,
            ..GeneratorConfig::default()
        };
        let corpus = generate_corpus(&cfg, 42).unwrap();
        let violations = crate::corpus::validate_corpus(&corpus);
        assert!(violations.is_empty(), "violations: {violations:?}");
    }

    #[test]
    fn same_seed_same_corpus() {
        let cfg = GeneratorConfig {
            members: 30,
            skills: 8,
            jobs_docs: 20,
            content_docs: 20,
            train_queries: 10,
            eval_queries: 5,
            ..GeneratorConfig::default()
        };
        let a = generate_corpus(&cfg, 7).unwrap();
        let b = generate_corpus(&cfg, 7).unwrap();
        assert_eq!(a, b);
        let c = generate_corpus(&cfg, 8).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn queries_require_members() {
        let cfg = GeneratorConfig {
            members: 0,
            skills: 0,
            companies: 0,
            industries: 0,
            jobs_docs: 0,
            content_docs: 0,
            train_queries: 3,
            eval_queries: 0,
            ..GeneratorConfig::default()
        };
        let err = generate_corpus(&cfg, 1).unwrap_err();
        assert!(err.to_string().contains("train_queries"));
    }

    #[test]
    fn planted_expertise_stays_in_unit_interval() {
        let cfg = GeneratorConfig {
            members: 50,
            skills: 10,
            jobs_docs: 0,
            content_docs: 0,
            train_queries: 0,
            eval_queries: 0,
            ..GeneratorConfig::default()
        };
        let corpus = generate_corpus(&cfg, 3).unwrap();
        for m in 0..50 {
            for s in 0..10 {
                let e = corpus.planted.expertise(m, s);
                assert!((0.0..1.0).contains(&e), "expertise {e} out of range");
            }
        }
    }
}
