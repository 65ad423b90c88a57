//! Power-iteration PageRank over per-skill endorsement subgraphs.
//!
//! Nodes are all member rows of the corpus, including members untouched by
//! the skill, so scores always form a distribution over the whole member
//! set. Dangling mass is redistributed uniformly.

use std::collections::BTreeSet;

use crate::corpus::Corpus;

/// Directed endorsement graph for one skill. Edges are deduplicated and
/// self-loops dropped.
#[derive(Debug, Clone)]
pub struct EndorsementGraph {
    n: usize,
    out_edges: Vec<Vec<usize>>,
}

impl EndorsementGraph {
    /// Subgraph of endorsements for `skill_id`, endorser -> endorsee,
    /// over all member rows of the corpus.
    pub fn for_skill(corpus: &Corpus, skill_id: u64) -> Self {
        let n = corpus.n_members();
        let mut edge_set = BTreeSet::new();
        for e in &corpus.endorsements {
            if e.skill_id != skill_id || e.endorser_id == e.endorsee_id {
                continue;
            }
            let (Ok(u), Ok(v)) = (corpus.member_row(e.endorser_id), corpus.member_row(e.endorsee_id))
            else {
                continue;
            };
            edge_set.insert((u, v));
        }
        let mut out_edges = vec![Vec::new(); n];
        for (u, v) in edge_set {
            out_edges[u].push(v);
        }
        EndorsementGraph { n, out_edges }
    }

    pub fn n_nodes(&self) -> usize {
        self.n
    }

    pub fn n_edges(&self) -> usize {
        self.out_edges.iter().map(Vec::len).sum()
    }
}

/// Stationary distribution with the given damping factor, uniform teleport,
/// and uniform redistribution of dangling mass. Iterates until the L1
/// change drops below `tol` (or `max_iter`); the result is renormalized so
/// the scores sum to exactly 1 up to float error.
pub fn pagerank(graph: &EndorsementGraph, damping: f64, tol: f64, max_iter: usize) -> Vec<f64> {
    let n = graph.n;
    if n == 0 {
        return Vec::new();
    }
    let uniform = 1.0 / n as f64;
    let mut p = vec![uniform; n];
    for _ in 0..max_iter {
        let mut dangling = 0.0;
        for (u, outs) in graph.out_edges.iter().enumerate() {
            if outs.is_empty() {
                dangling += p[u];
            }
        }
        let base = (1.0 - damping) * uniform + damping * dangling * uniform;
        let mut next = vec![base; n];
        for (u, outs) in graph.out_edges.iter().enumerate() {
            if outs.is_empty() {
                continue;
            }
            let share = damping * p[u] / outs.len() as f64;
            for &v in outs {
                next[v] += share;
            }
        }
        let delta: f64 = next.iter().zip(&p).map(|(a, b)| (a - b).abs()).sum();
        p = next;
        if delta < tol {
            break;
        }
    }
    let total: f64 = p.iter().sum();
    for x in p.iter_mut() {
        *x /= total;
    }
    p
}
