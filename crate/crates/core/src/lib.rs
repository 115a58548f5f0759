//! Retrofitting word embeddings to an ontology concept graph, and a multitask
//! convolutional document classifier to measure the effect downstream.
//!
//! The pipeline runs in stages, each a pure function over in-memory data with
//! a file format for handoff:
//!
//! 1. [`corpus`] tokenizes documents, builds a document-frequency vocabulary
//!    and encodes documents to fixed-length id sequences.
//! 2. [`embed`] trains skip-gram negative-sampling vectors.
//! 3. [`kgraph`] matches vocabulary words to concept names and links words
//!    that share a concept.
//! 4. [`retrofit`] pulls each vector toward its graph neighbours while
//!    keeping it close to its original.
//! 5. [`mtcnn`] trains the multitask CNN with embeddings fine-tuned.
//! 6. [`metrics`] scores predictions with micro/macro-F1 and bootstrap CIs.
//!
//! Data-parallel loops go through [`Execution`]; with the `parallel` feature
//! disabled everything runs on the calling thread.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod corpus;
pub mod embed;
mod error;
mod exec;
pub mod kgraph;
pub mod metrics;
pub mod mtcnn;
pub mod pipeline;
pub mod retrofit;
pub mod synth;

pub use error::{Error, Result};
pub use exec::{stage_seed, Execution};
