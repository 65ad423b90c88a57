//! The 15-dimensional ranking feature vector and its extraction.
//!
//! Layout is fixed and named so model files and label files stay portable:
//! text match, expertise homophily, three profile-affinity features, nine
//! intent-by-result-type composites, and a trailing bias of 1.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Document, Vertical};
use crate::error::Result;
use crate::expertise::{expertise_homophily, expertise_skill_homophily, ExpertiseFactors};
use crate::intent::{composite_values, IntentVector, COMPOSITE_NAMES};

pub const FEATURE_DIM: usize = 15;

/// Canonical feature order; index i names `to_array()[i]`.
pub const FEATURE_NAMES: [&str; FEATURE_DIM] = [
    "text_match",
    "expertise_homophily",
    "industry_match",
    "company_match",
    "location_proximity",
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

/// Features for one (searcher, document) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BTreeMap<String, f64>", into = "BTreeMap<String, f64>")]
pub struct RankingFeatureVector {
    pub text_match: f64,
    pub expertise_homophily: f64,
    pub industry_match: f64,
    pub company_match: f64,
    pub location_proximity: f64,
    pub composite: [f64; 9],
    pub bias: f64,
}

impl RankingFeatureVector {
    pub fn to_array(&self) -> [f64; FEATURE_DIM] {
        let mut out = [0.0; FEATURE_DIM];
        out[0] = self.text_match;
        out[1] = self.expertise_homophily;
        out[2] = self.industry_match;
        out[3] = self.company_match;
        out[4] = self.location_proximity;
        out[5..14].copy_from_slice(&self.composite);
        out[14] = self.bias;
        out
    }

    pub fn from_array(x: [f64; FEATURE_DIM]) -> Self {
        let mut composite = [0.0; 9];
        composite.copy_from_slice(&x[5..14]);
        RankingFeatureVector {
            text_match: x[0],
            expertise_homophily: x[1],
            industry_match: x[2],
            company_match: x[3],
            location_proximity: x[4],
            composite,
            bias: x[14],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }
}

impl From<RankingFeatureVector> for BTreeMap<String, f64> {
    fn from(v: RankingFeatureVector) -> Self {
        FEATURE_NAMES
            .iter()
            .map(|s| s.to_string())
            .zip(v.to_array())
            .collect()
    }
}

impl TryFrom<BTreeMap<String, f64>> for RankingFeatureVector {
    type Error = String;

    fn try_from(map: BTreeMap<String, f64>) -> std::result::Result<Self, String> {
        let mut x = [0.0; FEATURE_DIM];
        for (i, name) in FEATURE_NAMES.iter().enumerate() {
            x[i] = *map
                .get(*name)
                .ok_or_else(|| format!("feature map missing `{name}`"))?;
        }
        if map.len() != FEATURE_DIM {
            return Err(format!(
                "feature map has {} entries, expected {FEATURE_DIM}",
                map.len()
            ));
        }
        Ok(RankingFeatureVector::from_array(x))
    }
}

/// Selects which feature dimensions a ranker variant may use; masked
/// dimensions are zeroed before training so their weights stay 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeatureMask {
    keep: [bool; FEATURE_DIM],
}

impl FeatureMask {
    pub fn full() -> Self {
        FeatureMask {
            keep: [true; FEATURE_DIM],
        }
    }

    /// Text match and bias only.
    pub fn text_only() -> Self {
        let mut keep = [false; FEATURE_DIM];
        keep[0] = true;
        keep[14] = true;
        FeatureMask { keep }
    }

    /// Text match, expertise homophily, and bias.
    pub fn text_and_homophily() -> Self {
        let mut keep = [false; FEATURE_DIM];
        keep[0] = true;
        keep[1] = true;
        keep[14] = true;
        FeatureMask { keep }
    }

    /// Everything except the nine composite features.
    pub fn without_composites() -> Self {
        let mut keep = [true; FEATURE_DIM];
        for slot in keep.iter_mut().take(14).skip(5) {
            *slot = false;
        }
        FeatureMask { keep }
    }

    pub fn apply(&self, x: &[f64; FEATURE_DIM]) -> [f64; FEATURE_DIM] {
        let mut out = *x;
        for (v, &keep) in out.iter_mut().zip(&self.keep) {
            if !keep {
                *v = 0.0;
            }
        }
        out
    }
}

/// Builds the feature vector for one retrieved document. `text_match` is
/// the retrieval score the candidate arrived with; homophily and the
/// affinity features depend on the document's vertical:
/// People compares completed expertise rows with the subject member,
/// Jobs and Content compare against the document's skill set, and only
/// Jobs carries location proximity `exp(-distance / scale)`.
#[allow(clippy::too_many_arguments)]
pub fn extract_ranking_features(
    corpus: &Corpus,
    factors: &ExpertiseFactors,
    intents: &IntentVector,
    intent_threshold: f64,
    location_scale: f64,
    searcher_id: u64,
    doc: &Document,
    text_match: f64,
) -> Result<RankingFeatureVector> {
    let searcher = corpus.member(searcher_id)?;
    let searcher_row = corpus.member_row(searcher_id)?;

    let mut homophily = 0.0;
    let mut industry_match = 0.0;
    let mut company_match = 0.0;
    match doc.vertical {
        Vertical::People => {
            if let Some(subject_id) = doc.subject_member_id {
                let subject = corpus.member(subject_id)?;
                let subject_row = corpus.member_row(subject_id)?;
                homophily = expertise_homophily(factors, searcher_row, subject_row);
                industry_match = f64::from(subject.industry_id == searcher.industry_id);
                company_match = f64::from(subject.company_id == searcher.company_id);
            }
        }
        Vertical::Jobs | Vertical::Content => {
            homophily = expertise_skill_homophily(factors, searcher_row, &doc.skills);
            if let Some(company) = doc.company_id {
                company_match = f64::from(company == searcher.company_id);
                if let Some(industry) = corpus.company_industry(company) {
                    industry_match = f64::from(industry == searcher.industry_id);
                }
            }
        }
    }

    // Any located result gets a proximity score: people near the searcher,
    // openings and posts from nearby places.
    let mut location_proximity = 0.0;
    if let Some((x, y)) = doc.location {
        let d = ((x - searcher.location.0).powi(2) + (y - searcher.location.1).powi(2)).sqrt();
        location_proximity = (-d / location_scale).exp();
    }

    Ok(RankingFeatureVector {
        text_match,
        expertise_homophily: homophily,
        industry_match,
        company_match,
        location_proximity,
        composite: composite_values(intents, intent_threshold, doc.vertical),
        bias: 1.0,
    })
}
