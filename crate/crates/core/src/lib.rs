//! Training-free retrieval-augmented audio deepfake detection.
//!
//! A knowledge base of labeled reference utterances (CM embedding, profile
//! embedding, label, CM score) is searched with exact cosine top-k retrieval;
//! the retrieved labels or scores are ensembled into a prediction for each
//! query, and predictions are scored with EER and fixed-threshold accuracy.

pub mod ablation;
pub mod cli;
pub mod ensemble;
pub mod error;
pub mod eval;
pub mod kernel;
pub mod metrics;
pub mod retrieval;
pub mod store;
pub mod synthetic;
pub mod types;

pub use ablation::{ablation_run, apply_mask, AttributeMask};
pub use ensemble::{EnsembleStrategy, Prediction};
pub use error::{Error, Result};
pub use eval::{evaluate, EvalReport, Method};
pub use retrieval::{retrieve, retrieve_batch, NeighborSet, RetrievalStrategy};
pub use store::{KnowledgeBase, Matrix};
pub use types::{
    validate_vector, Attribute, CmScore, FeatureVector, KnowledgeEntry, Label, ProfileLayout, QueryRecord,
};
