//! Hypernym classification for financial instrument terms.
//!
//! The pipeline links term labels into three background knowledge graphs,
//! derives five fixed-width feature groups (word overlap, per-graph
//! inverse-hop lookups, and graph-embedding similarity), concatenates them
//! into a 50-wide signal vector, and trains a single dense sigmoid layer to
//! rank the ten hypernym classes. Evaluation runs stratified k-fold cross
//! validation with SMOTE applied to training splits only, plus a
//! leave-one-group-out ablation harness and weight introspection.

pub mod cli;
pub mod dataset;
pub mod embeddings;
pub mod error;
pub mod eval;
pub mod features;
pub mod kgstore;
pub mod linking;
pub mod model;
pub mod sparql;
mod util;

pub use error::{Error, Result};
