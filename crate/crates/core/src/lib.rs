//! Concept-based video retrieval and navigation.
//!
//! A shot-level concept index is organised into contexts, concepts and
//! videos. Concepts are compared by a hybrid of shot co-occurrence and
//! ontology distance, videos are ranked per concept by a TF-IDF-like
//! weight, and sessions browse the three levels through direct calls or
//! through gesture and voice commands.

pub mod cache;
pub mod corpus;
pub mod error;
pub mod evalstats;
pub mod gateway;
pub mod navigation;
pub mod similarity;
pub mod weighting;

pub use error::{Error, ParseError, Result};
