//! Latent concept discovery in contextual embeddings.
//!
//! The pipeline clusters per-layer word representations with Ward
//! agglomerative clustering, scores every cluster against human-defined
//! concept schemes (POS, semantic tags, lexicons, surface-form properties),
//! and explains clusters that match no single concept as small unions of
//! concept classes.
//!
//! Modules follow the data flow:
//! [`corpus`] → [`embedding_store`] → [`clustering`] → [`alignment`] /
//! [`composition`], with [`annotator`] providing the concept schemes and
//! [`pipeline`] tying the stages together.

pub mod alignment;
pub mod annotator;
pub mod clustering;
pub mod composition;
pub mod corpus;
pub mod embedding_store;
pub mod error;
pub mod pipeline;
pub mod report;
pub mod synth;

pub use error::{Error, Result};
