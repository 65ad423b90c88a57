//! Desk-scale personalized federated search over a synthetic
//! professional-network corpus.
//!
//! The pipeline: complete a sparse member-by-skill expertise matrix by
//! alternating least squares, derive homophily features from the completed
//! factors, infer searcher intents from profile and activity signals, rank
//! each vertical with a pairwise-trained linear model on debiased click
//! labels, and blend the verticals into one page with a federated scorer.
//! A seeded click simulator plays the role of the user, so every stage is
//! reproducible and measurable against planted ground truth.

pub mod config;
pub mod corpus;
pub mod error;
pub mod evaluation;
pub mod expertise;
pub mod federation;
pub mod intent;
pub mod labels;
pub mod model_io;
pub mod optim;
pub mod pipeline;
pub mod vertical_search;

pub use error::{Error, Result};
