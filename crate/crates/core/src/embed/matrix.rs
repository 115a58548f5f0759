use std::sync::Arc;

use crate::corpus::{Vocabulary, PAD, UNK};
use crate::error::{Error, Result};

/// Row-major `n x d` table of word vectors indexed by a vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    vocab: Arc<Vocabulary>,
    dim: usize,
    data: Vec<f64>,
}

impl EmbeddingMatrix {
    pub fn zeros(vocab: Arc<Vocabulary>, dim: usize) -> Self {
        let data = vec![0.0; vocab.len() * dim];
        EmbeddingMatrix { vocab, dim, data }
    }

    pub fn from_rows(vocab: Arc<Vocabulary>, dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Config("embedding dimension must be positive".into()));
        }
        if data.len() != vocab.len() * dim {
            return Err(Error::ShapeMismatch {
                what: "embedding matrix".into(),
                expected: vec![vocab.len(), dim],
                found: vec![data.len() / dim, dim],
            });
        }
        Ok(EmbeddingMatrix { vocab, dim, data })
    }

    pub fn vocab(&self) -> &Arc<Vocabulary> {
        &self.vocab
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> usize {
        self.vocab.len()
    }

    pub fn row(&self, id: usize) -> &[f64] {
        &self.data[id * self.dim..(id + 1) * self.dim]
    }

    pub fn row_mut(&mut self, id: usize) -> &mut [f64] {
        &mut self.data[id * self.dim..(id + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn vector(&self, word: &str) -> Result<&[f64]> {
        let id = self
            .vocab
            .id(word)
            .ok_or_else(|| Error::OutOfVocabulary(word.to_string()))?;
        Ok(self.row(id as usize))
    }

    /// Verify the matrix invariants: finite entries, zero PAD row, and no
    /// row norm above `max_norm`.
    pub fn validate(&self, max_norm: f64) -> Result<()> {
        if let Some(i) = self.data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Diverged(format!(
                "non-finite value in row {} ({})",
                i / self.dim,
                self.vocab.word((i / self.dim) as u32)
            )));
        }
        if self.row(PAD as usize).iter().any(|&v| v != 0.0) {
            return Err(Error::Config("PAD row must be zero".into()));
        }
        for id in 0..self.rows() {
            let n = norm(self.row(id));
            if n > max_norm {
                return Err(Error::Diverged(format!(
                    "row {id} ({}) has norm {n} > {max_norm}",
                    self.vocab.word(id as u32)
                )));
            }
        }
        Ok(())
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Cosine similarity. Errors if either vector is zero.
pub fn cosine(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok((dot(a, b) / (na * nb)).clamp(-1.0, 1.0))
}

/// The `k` words most similar to `word`, excluding the word itself and the
/// special tokens. Ties are broken by ascending word id; zero rows are skipped.
pub fn nearest_neighbors(
    emb: &EmbeddingMatrix,
    word: &str,
    k: usize,
) -> Result<Vec<(String, f64)>> {
    let query_id = emb
        .vocab
        .id(word)
        .ok_or_else(|| Error::OutOfVocabulary(word.to_string()))?;
    if k == 0 {
        return Ok(Vec::new());
    }
    let query = emb.row(query_id as usize);
    let mut scored: Vec<(u32, f64)> = Vec::new();
    for id in 0..emb.rows() as u32 {
        if id == query_id || id == PAD || id == UNK {
            continue;
        }
        match cosine(query, emb.row(id as usize)) {
            Ok(s) => scored.push((id, s)),
            Err(Error::ZeroVector) if norm(query) != 0.0 => continue,
            Err(e) => return Err(e),
        }
    }
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    scored.truncate(k);
    Ok(scored
        .into_iter()
        .map(|(id, s)| (emb.vocab.word(id).to_string(), s))
        .collect())
}
