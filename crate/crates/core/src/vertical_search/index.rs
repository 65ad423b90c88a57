//! Per-vertical inverted index and TF-IDF candidate retrieval.

use std::collections::BTreeMap;

use crate::corpus::{Corpus, Vertical};

/// Immutable token -> postings map for one vertical.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InvertedIndex {
    /// Postings sorted ascending by doc_id; term frequency per doc.
    postings: BTreeMap<String, Vec<(u64, u32)>>,
    doc_lengths: BTreeMap<u64, u32>,
    vertical: Vertical,
}

impl InvertedIndex {
    pub fn vertical(&self) -> Vertical {
        self.vertical
    }

    pub fn n_docs(&self) -> usize {
        self.doc_lengths.len()
    }

    pub fn postings(&self, token: &str) -> Option<&[(u64, u32)]> {
        self.postings.get(token).map(Vec::as_slice)
    }
}

/// Indexes every document of `vertical`.
pub fn build_index(corpus: &Corpus, vertical: Vertical) -> InvertedIndex {
    let mut postings: BTreeMap<String, BTreeMap<u64, u32>> = BTreeMap::new();
    let mut doc_lengths = BTreeMap::new();
    for doc in corpus.docs.by_vertical(vertical) {
        doc_lengths.insert(doc.doc_id, doc.text.len() as u32);
        for token in &doc.text {
            *postings
                .entry(token.clone())
                .or_default()
                .entry(doc.doc_id)
                .or_default() += 1;
        }
    }
    InvertedIndex {
        postings: postings
            .into_iter()
            .map(|(tok, by_doc)| (tok, by_doc.into_iter().collect()))
            .collect(),
        doc_lengths,
        vertical,
    }
}

/// Top-K documents by summed TF-IDF over the query terms:
/// `score = sum_term tf * (ln((N+1)/(df+1)) + 1)`. Documents matching no
/// term are excluded; ties break by ascending doc_id.
pub fn retrieve_topk(index: &InvertedIndex, query_terms: &[String], k: usize) -> Vec<(u64, f64)> {
    assert!(k >= 1, "retrieval depth must be >= 1");
    let n = index.doc_lengths.len() as f64;
    let mut scores: BTreeMap<u64, f64> = BTreeMap::new();
    for term in query_terms {
        let Some(postings) = index.postings.get(term) else {
            continue;
        };
        let idf = ((n + 1.0) / (postings.len() as f64 + 1.0)).ln() + 1.0;
        for &(doc_id, tf) in postings {
            *scores.entry(doc_id).or_default() += f64::from(tf) * idf;
        }
    }
    let mut ranked: Vec<(u64, f64)> = scores.into_iter().collect();
    ranked.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    ranked.truncate(k);
    ranked
}
