use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use super::matrix::EmbeddingMatrix;
use crate::corpus::{Vocabulary, PAD};
use crate::error::{Error, Result};

/// What to do with a file row whose word the vocabulary does not contain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UnknownWords {
    #[default]
    Fail,
    Skip,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LoadReport {
    /// Words in the file but not the vocabulary (only with `UnknownWords::Skip`).
    pub skipped: Vec<String>,
    /// Vocabulary words with no row in the file; left as zero vectors.
    pub missing: Vec<String>,
}

/// Write the text format: a `n d` header, then `word v1 .. vd` per row.
pub fn save_embeddings(emb: &EmbeddingMatrix, path: &Path) -> Result<()> {
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(f);
    let io = |e| Error::io(path, e);
    writeln!(w, "{} {}", emb.rows(), emb.dim()).map_err(io)?;
    for id in 0..emb.rows() {
        w.write_all(emb.vocab().word(id as u32).as_bytes())
            .map_err(io)?;
        for v in emb.row(id) {
            // `{}` on f64 prints the shortest string that parses back exactly.
            write!(w, " {v}").map_err(io)?;
        }
        w.write_all(b"\n").map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Load a text-format embedding file against `vocab`.
///
/// `expected_dim`, when given, must match the header. Vocabulary words
/// absent from the file are zero-filled and listed in the report.
pub fn load_embeddings(
    path: &Path,
    vocab: Arc<Vocabulary>,
    expected_dim: Option<usize>,
    unknown: UnknownWords,
) -> Result<(EmbeddingMatrix, LoadReport)> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(f).lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::parse(path, 1, "missing header"))?
        .map_err(|e| Error::io(path, e))?;
    let (n, d) =
        parse_header(&header).ok_or_else(|| Error::parse(path, 1, "header must be `n d`"))?;
    if let Some(expected) = expected_dim {
        if expected != d {
            return Err(Error::DimensionMismatch { expected, found: d });
        }
    }
    let mut emb = EmbeddingMatrix::zeros(vocab.clone(), d);
    let mut seen = vec![false; vocab.len()];
    let mut report = LoadReport::default();
    let mut rows = 0;
    for (i, line) in lines.enumerate() {
        let lineno = i + 2;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.is_empty() {
            continue;
        }
        rows += 1;
        let mut fields = line.split(' ');
        let word = fields.next().unwrap_or_default();
        let values = fields
            .map(|s| s.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::parse(path, lineno, e.to_string()))?;
        if values.len() != d {
            return Err(Error::parse(
                path,
                lineno,
                format!(
                    "dimension mismatch: expected {d} values, found {}",
                    values.len()
                ),
            ));
        }
        match vocab.id(word) {
            Some(id) => {
                if seen[id as usize] {
                    return Err(Error::parse(
                        path,
                        lineno,
                        format!("duplicate word {word:?}"),
                    ));
                }
                seen[id as usize] = true;
                emb.row_mut(id as usize).copy_from_slice(&values);
            }
            None => match unknown {
                UnknownWords::Fail => {
                    return Err(Error::VocabularyMismatch(format!(
                        "{}:{lineno}: word {word:?} not in vocabulary",
                        path.display()
                    )))
                }
                UnknownWords::Skip => report.skipped.push(word.to_string()),
            },
        }
    }
    if rows != n {
        return Err(Error::parse(
            path,
            rows + 1,
            format!("header declares {n} rows, file has {rows}"),
        ));
    }
    if emb.row(PAD as usize).iter().any(|&v| v != 0.0) {
        return Err(Error::VocabularyMismatch("PAD row must be zero".into()));
    }
    report.missing = seen
        .iter()
        .enumerate()
        .filter(|(_, s)| !**s)
        .map(|(id, _)| vocab.word(id as u32).to_string())
        .collect();
    Ok((emb, report))
}

fn parse_header(line: &str) -> Option<(usize, usize)> {
    let mut it = line.split(' ');
    let n = it.next()?.parse().ok()?;
    let d = it.next()?.parse().ok()?;
    if it.next().is_some() || d == 0 {
        return None;
    }
    Some((n, d))
}
