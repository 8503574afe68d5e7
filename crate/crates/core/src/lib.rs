//! Core library for building query-expansion ground truths from a
//! Wikipedia-shaped knowledge graph and analyzing the cycle structure of
//! the resulting query graphs.
//!
//! The pieces compose into a pipeline: [`kgraph`] stores the typed graph,
//! [`corpus`] ingests documents, [`linker`] maps text to articles,
//! [`retrieval`] ranks documents by exact title phrases, [`groundtruth`]
//! finds each query's expansion set by local search and assembles its query
//! graph, [`cycles`] enumerates bounded-length cycles and their structural
//! metrics, and [`expander`] turns selected cycles into expansion features
//! and scores them.

pub mod corpus;
pub mod cycles;
pub mod error;
pub mod expander;
pub mod groundtruth;
pub mod kgraph;
pub mod linker;
pub mod retrieval;
pub mod stats;

pub use error::{Error, Result};
