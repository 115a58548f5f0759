//! Baseline distributional embeddings: the matrix type, similarity queries,
//! the text file format, and skip-gram negative-sampling training.

mod io;
mod matrix;
mod sgns;

pub use io::{load_embeddings, save_embeddings, LoadReport, UnknownWords};
pub(crate) use matrix::dot;
pub use matrix::{cosine, nearest_neighbors, EmbeddingMatrix};
pub use sgns::{train_sgns, SgnsConfig, SgnsResult};
