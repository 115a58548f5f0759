use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::document::{RawDocument, Split, TaskSchema};
use super::tokenize::tokenize;
use super::vocab::{Vocabulary, PAD};
use crate::error::{Error, Result};
use crate::exec::Execution;

pub const DEFAULT_LENGTH: usize = 3000;

/// Fixed-length id sequence plus per-task class indices in schema order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodedDocument {
    pub id: String,
    pub split: Split,
    pub token_ids: Vec<u32>,
    pub labels: Vec<Option<usize>>,
}

pub fn encode_document(
    doc: &RawDocument,
    vocab: &Vocabulary,
    schema: &TaskSchema,
    length: usize,
) -> Result<EncodedDocument> {
    let mut token_ids: Vec<u32> = tokenize(&doc.text)
        .iter()
        .take(length)
        .map(|t| vocab.id_or_unk(t))
        .collect();
    token_ids.resize(length, PAD);
    let labels = schema
        .tasks()
        .map(|task| {
            doc.labels
                .get(&task)
                .map(|l| schema.class_index(task, l))
                .transpose()
        })
        .collect::<Result<Vec<_>>>()?;
    for task in doc.labels.keys() {
        if schema.labels(*task).is_none() {
            return Err(Error::UnknownTask(task.name().to_string()));
        }
    }
    Ok(EncodedDocument {
        id: doc.id.clone(),
        split: doc.split.unwrap_or(Split::Train),
        token_ids,
        labels,
    })
}

pub fn encode_corpus(
    docs: &[RawDocument],
    vocab: &Vocabulary,
    schema: &TaskSchema,
    length: usize,
    exec: Execution,
) -> Result<Vec<EncodedDocument>> {
    exec.map(docs, |d| encode_document(d, vocab, schema, length))
        .into_iter()
        .collect()
}

/// Sidecar written next to an encoded corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodedMeta {
    pub vocab_hash: String,
    pub length: usize,
    pub tasks: Vec<(String, usize)>,
    pub documents: usize,
}

pub fn write_encoded(path: &Path, docs: &[EncodedDocument]) -> Result<()> {
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(f);
    for d in docs {
        serde_json::to_writer(&mut w, d)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_encoded(path: &Path) -> Result<Vec<EncodedDocument>> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut docs = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.is_empty() {
            continue;
        }
        docs.push(
            serde_json::from_str(&line).map_err(|e| Error::parse(path, i + 1, e.to_string()))?,
        );
    }
    Ok(docs)
}
