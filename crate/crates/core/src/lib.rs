//! Multimodal user-interest representations for short-video recommendation.
//!
//! Users and videos live in one embedding space. A user is a unit vector
//! built in closed form from preference-weighted video embeddings, either
//! from the user's watch history or from predicted preferences over the
//! current candidate set, and candidates are ranked by inner product.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, persistence,
//! the HTTP service and the CLI live in the `mmrec` crate.
#![no_std]
#![forbid(unsafe_code)]
extern crate alloc;

pub mod catalog;
pub mod cluster;
pub mod metrics;
pub mod preference;
pub mod ranker;
pub mod representation;
pub mod simulator;
pub mod vector;

pub use catalog::{Catalog, CatalogError, VideoEmbedding};
pub use cluster::{ClusterError, ClusterModel, ClusterParams};
pub use preference::{
    AttentionPredictor, Interaction, PreferenceParams, PreferencePredictor, ThresholdMode,
};
pub use ranker::{
    process_user_request, BlendWeights, ModePolicy, RankError, RankerConfig, Ranking,
    RecommendationRequest, RequestMode, ScoredCandidate, UsedMode,
};
pub use representation::{RepresentationError, RepresentationMode, UserRepresentation};
