use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use sha2::{Digest, Sha256};

use super::document::RawDocument;
use super::tokenize::tokenize;
use crate::error::{Error, Result};
use crate::exec::Execution;

pub const PAD: u32 = 0;
pub const UNK: u32 = 1;
pub const PAD_TOKEN: &str = "<pad>";
pub const UNK_TOKEN: &str = "<unk>";

/// Thresholded corpus vocabulary. Ids are dense; PAD is 0 and UNK is 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    words: Vec<String>,
    doc_freq: Vec<u64>,
    index: HashMap<String, u32>,
}

impl Vocabulary {
    /// Build from `(word, doc_freq)` pairs for the non-special words, in id order.
    pub fn from_entries(entries: Vec<(String, u64)>) -> Result<Self> {
        let mut words = vec![PAD_TOKEN.to_string(), UNK_TOKEN.to_string()];
        let mut doc_freq = vec![0, 0];
        for (w, df) in entries {
            words.push(w);
            doc_freq.push(df);
        }
        let mut index = HashMap::with_capacity(words.len());
        for (i, w) in words.iter().enumerate() {
            if index.insert(w.clone(), i as u32).is_some() {
                return Err(Error::VocabularyMismatch(format!("duplicate word {w:?}")));
            }
        }
        Ok(Vocabulary {
            words,
            doc_freq,
            index,
        })
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn id(&self, word: &str) -> Option<u32> {
        self.index.get(word).copied()
    }

    pub fn id_or_unk(&self, word: &str) -> u32 {
        self.id(word).unwrap_or(UNK)
    }

    pub fn word(&self, id: u32) -> &str {
        &self.words[id as usize]
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn doc_freq(&self, id: u32) -> u64 {
        self.doc_freq[id as usize]
    }

    pub fn is_special(id: u32) -> bool {
        id == PAD || id == UNK
    }

    /// TSV rendering: `word<TAB>doc_freq` per line in id order.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (w, df) in self.words.iter().zip(&self.doc_freq) {
            out.push_str(w);
            out.push('\t');
            out.push_str(&df.to_string());
            out.push('\n');
        }
        out
    }

    /// SHA-256 of the TSV rendering, hex encoded.
    pub fn content_hash(&self) -> String {
        let digest = Sha256::digest(self.to_tsv().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut f = File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(self.to_tsv().as_bytes())
            .map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut entries = Vec::new();
        let mut lines = 0;
        for (i, line) in BufReader::new(f).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            lines += 1;
            let (w, df) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(path, i + 1, "expected word<TAB>doc_freq"))?;
            let df: u64 = df
                .parse()
                .map_err(|_| Error::parse(path, i + 1, format!("bad doc_freq {df:?}")))?;
            let expect_special = match i {
                0 => Some(PAD_TOKEN),
                1 => Some(UNK_TOKEN),
                _ => None,
            };
            match expect_special {
                Some(s) if w != s => {
                    return Err(Error::parse(path, i + 1, format!("expected {s}")));
                }
                Some(_) => {}
                None => entries.push((w.to_string(), df)),
            }
        }
        if lines < 2 {
            return Err(Error::parse(path, lines, "missing special tokens"));
        }
        Vocabulary::from_entries(entries)
    }
}

/// Build the vocabulary of words whose document frequency is at least `min_df`.
///
/// Ids are assigned by descending document frequency, ties broken
/// lexicographically. Frequencies count the full token stream, before any
/// length truncation.
pub fn build_vocabulary(docs: &[RawDocument], min_df: u64, exec: Execution) -> Result<Vocabulary> {
    if docs.is_empty() {
        return Err(Error::NoDocuments);
    }
    let per_doc: Vec<HashSet<String>> = exec.map(docs, |d| tokenize(&d.text).into_iter().collect());
    let mut counts: HashMap<&str, u64> = HashMap::new();
    for set in &per_doc {
        for w in set {
            *counts.entry(w.as_str()).or_insert(0) += 1;
        }
    }
    let mut kept: Vec<(String, u64)> = counts
        .into_iter()
        .filter(|&(_, df)| df >= min_df)
        .map(|(w, df)| (w.to_string(), df))
        .collect();
    kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    Vocabulary::from_entries(kept)
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;

    fn docs(texts: &[&str]) -> Vec<RawDocument> {
        texts
            .iter()
            .enumerate()
            .map(|(i, t)| RawDocument {
                id: format!("d{i}"),
                text: t.to_string(),
                date: None,
                labels: BTreeMap::new(),
                split: None,
            })
            .collect()
    }

    #[test]
    fn empty_corpus_is_an_error() {
        let err = build_vocabulary(&[], 5, Execution::Sequential).unwrap_err();
        assert_eq!(err.to_string(), "no documents");
    }

    #[test]
    fn threshold_excludes_rare_words() {
        let mut texts = vec!["common"; 100];
        for t in texts.iter_mut().take(4) {
            *t = "common rare";
        }
        let v = build_vocabulary(&docs(&texts), 5, Execution::Sequential).unwrap();
        assert!(v.id("rare").is_none());
        assert_eq!(v.doc_freq(v.id("common").unwrap()), 100);
    }

    #[test]
    fn counts_documents_not_occurrences() {
        let v = build_vocabulary(
            &docs(&["tumor tumor tumor", "the tumor", "tumor mass"]),
            3,
            Execution::Sequential,
        )
        .unwrap();
        assert_eq!(v.doc_freq(v.id("tumor").unwrap()), 3);
        assert_eq!(v.len(), 3);
    }

    #[test]
    fn id_order_is_df_then_lexicographic() {
        let v = build_vocabulary(&docs(&["b a c", "b a", "c"]), 1, Execution::Sequential).unwrap();
        assert_eq!(v.words(), [PAD_TOKEN, UNK_TOKEN, "a", "b", "c"]);
        assert_eq!(v.id_or_unk("zzz"), UNK);
    }

    #[test]
    fn deterministic_across_execution_modes() {
        let texts: Vec<String> = (0..200)
            .map(|i| format!("w{} w{} shared", i % 7, i % 13))
            .collect();
        let refs: Vec<&str> = texts.iter().map(String::as_str).collect();
        let a = build_vocabulary(&docs(&refs), 2, Execution::Sequential).unwrap();
        let b = build_vocabulary(&docs(&refs), 2, Execution::Parallel).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.content_hash(), b.content_hash());
    }

    #[test]
    fn tsv_round_trip() {
        let v = build_vocabulary(&docs(&["x y", "x"]), 1, Execution::Sequential).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("vocab.tsv");
        v.save(&p).unwrap();
        assert_eq!(
            std::fs::read_to_string(&p).unwrap(),
            "<pad>\t0\n<unk>\t0\nx\t2\ny\t1\n"
        );
        assert_eq!(Vocabulary::load(&p).unwrap(), v);
        for (i, w) in v.words().iter().enumerate() {
            assert_eq!(v.word(v.id(w).unwrap()), w);
            assert_eq!(v.id(w).unwrap() as usize, i);
        }
    }
}
