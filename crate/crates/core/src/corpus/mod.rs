//! Domain entities and the synthetic professional-network corpus.
//!
//! A [`Corpus`] holds members, skill endorsements, documents for the three
//! verticals, activity logs, and queries, plus the planted latent structure
//! the generator used, so that oracles can score rankings against ground
//! truth. Loaded corpora are immutable and safe to share across threads.

mod generate;
mod io;
mod validate;

pub use generate::{generate_corpus, Archetype, GeneratorConfig, PlantedTruth};
pub use io::{load_corpus, save_corpus};
pub use validate::{validate_corpus, Violation};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A single-document-type search engine federated into one result page.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Vertical {
    People,
    Jobs,
    Content,
}

impl Vertical {
    /// Fixed order, also the documented tie-break order for federation.
    pub const ALL: [Vertical; 3] = [Vertical::People, Vertical::Jobs, Vertical::Content];

    pub fn name(self) -> &'static str {
        match self {
            Vertical::People => "people",
            Vertical::Jobs => "jobs",
            Vertical::Content => "content",
        }
    }
}

impl std::fmt::Display for Vertical {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Kinds of logged member activity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActivityKind {
    JobSearch,
    JobApply,
    PeopleSearch,
    ContentView,
    RecruiterAction,
}

/// A member profile: the unit of personalization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemberProfile {
    pub member_id: u64,
    pub title: String,
    pub company_id: u64,
    pub industry_id: u64,
    /// Planar coordinates; proximity is Euclidean distance.
    pub location: (f64, f64),
    pub skills: Vec<u64>,
    /// In [0, 1].
    pub seniority: f64,
    pub profile_text: Vec<String>,
}

/// A directed skill endorsement between two distinct members.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Endorsement {
    pub endorser_id: u64,
    pub endorsee_id: u64,
    pub skill_id: u64,
}

/// A document in one of the three verticals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: u64,
    pub vertical: Vertical,
    pub text: Vec<String>,
    pub company_id: Option<u64>,
    pub location: Option<(f64, f64)>,
    pub skills: Vec<u64>,
    /// People documents reference the member they describe.
    pub subject_member_id: Option<u64>,
}

/// One logged member action at an integer tick.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActivityEvent {
    pub member_id: u64,
    pub kind: ActivityKind,
    pub timestamp: u64,
}

/// A search query issued by a member.
///
/// `ground_truth_utility` is the planted relevance oracle: synthetic corpora
/// record `text relevance + w * expertise homophily` for every document that
/// shares at least one term with the query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Query {
    pub query_id: u64,
    pub searcher_id: u64,
    pub terms: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_truth_utility: Option<BTreeMap<u64, f64>>,
}

/// Documents stored per vertical, preserving file order for exact roundtrips.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DocSet {
    pub people: Vec<Document>,
    pub jobs: Vec<Document>,
    pub content: Vec<Document>,
}

impl DocSet {
    pub fn by_vertical(&self, vertical: Vertical) -> &[Document] {
        match vertical {
            Vertical::People => &self.people,
            Vertical::Jobs => &self.jobs,
            Vertical::Content => &self.content,
        }
    }

    pub fn all(&self) -> impl Iterator<Item = &Document> {
        self.people.iter().chain(&self.jobs).chain(&self.content)
    }

    pub fn len(&self) -> usize {
        self.people.len() + self.jobs.len() + self.content.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// An immutable corpus plus derived lookup tables.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub members: Vec<MemberProfile>,
    pub endorsements: Vec<Endorsement>,
    pub docs: DocSet,
    pub activity: Vec<ActivityEvent>,
    pub queries: Vec<Query>,
    pub planted: PlantedTruth,
    member_index: BTreeMap<u64, usize>,
    doc_index: BTreeMap<u64, (Vertical, usize)>,
    company_industry: BTreeMap<u64, u64>,
}

impl Corpus {
    /// Assembles a corpus and builds its lookup tables. Does not validate;
    /// call [`validate_corpus`] to check invariants.
    pub fn new(
        members: Vec<MemberProfile>,
        endorsements: Vec<Endorsement>,
        docs: DocSet,
        activity: Vec<ActivityEvent>,
        queries: Vec<Query>,
        planted: PlantedTruth,
    ) -> Self {
        let member_index = members
            .iter()
            .enumerate()
            .map(|(i, m)| (m.member_id, i))
            .collect();
        let mut doc_index = BTreeMap::new();
        for v in Vertical::ALL {
            for (i, d) in docs.by_vertical(v).iter().enumerate() {
                doc_index.insert(d.doc_id, (v, i));
            }
        }
        // Majority industry among a company's members, smaller industry id on
        // ties. Documents carry no industry of their own.
        let mut tallies: BTreeMap<u64, BTreeMap<u64, usize>> = BTreeMap::new();
        for m in &members {
            *tallies
                .entry(m.company_id)
                .or_default()
                .entry(m.industry_id)
                .or_default() += 1;
        }
        let company_industry = tallies
            .into_iter()
            .map(|(company, counts)| {
                let industry = counts
                    .into_iter()
                    .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)))
                    .map(|(ind, _)| ind)
                    .unwrap_or(0);
                (company, industry)
            })
            .collect();
        Corpus {
            members,
            endorsements,
            docs,
            activity,
            queries,
            planted,
            member_index,
            doc_index,
            company_industry,
        }
    }

    pub fn n_members(&self) -> usize {
        self.members.len()
    }

    pub fn n_skills(&self) -> usize {
        self.planted.skill_token_pools.len()
    }

    pub fn member(&self, member_id: u64) -> Result<&MemberProfile> {
        self.member_index
            .get(&member_id)
            .map(|&i| &self.members[i])
            .ok_or(Error::Lookup {
                kind: "member",
                id: member_id.to_string(),
            })
    }

    /// Row index of a member in matrix-shaped structures (factor matrices,
    /// planted truth), which follow `members` order.
    pub fn member_row(&self, member_id: u64) -> Result<usize> {
        self.member_index
            .get(&member_id)
            .copied()
            .ok_or(Error::Lookup {
                kind: "member",
                id: member_id.to_string(),
            })
    }

    pub fn doc(&self, doc_id: u64) -> Result<&Document> {
        self.doc_index
            .get(&doc_id)
            .map(|&(v, i)| &self.docs.by_vertical(v)[i])
            .ok_or(Error::Lookup {
                kind: "document",
                id: doc_id.to_string(),
            })
    }

    /// Industry of a company, derived as the majority industry among its
    /// members. `None` for companies with no members.
    pub fn company_industry(&self, company_id: u64) -> Option<u64> {
        self.company_industry.get(&company_id).copied()
    }

    /// Token pool of a skill; overlap with profile text is the
    /// skill-profile similarity signal.
    pub fn skill_pool(&self, skill_id: u64) -> Result<&[String]> {
        self.planted
            .skill_token_pools
            .get(skill_id as usize)
            .map(Vec::as_slice)
            .ok_or(Error::Lookup {
                kind: "skill",
                id: skill_id.to_string(),
            })
    }

    /// Queries reserved for label collection and model training.
    pub fn train_queries(&self) -> &[Query] {
        let n = self.planted.train_query_count.min(self.queries.len());
        &self.queries[..n]
    }

    /// Held-out queries for metric evaluation.
    pub fn eval_queries(&self) -> &[Query] {
        let n = self.planted.train_query_count.min(self.queries.len());
        &self.queries[n..]
    }
}
