//! Per-vertical retrieval and ranking: an inverted index for candidate
//! generation, a fixed feature layout, and a pairwise-trained linear ranker.

mod features;
mod index;
mod ranker;

pub use features::{
    extract_ranking_features, FeatureMask, RankingFeatureVector, FEATURE_DIM, FEATURE_NAMES,
};
pub use index::{build_index, retrieve_topk, InvertedIndex};
pub use ranker::{
    load_ranker, pairwise_loss_and_gradient, rank_results, ranker_file_name, save_ranker,
    train_ranker, RankerHyper, RankerReport, RankingModel,
};
