//! Concept-name ingestion and the undirected word graph used for retrofitting.
//!
//! A vocabulary word is attached to a concept (CUI) when it equals a token
//! of one of the concept's names. Every concept matched by at least two
//! words contributes a clique over those words.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{tokenize, Vocabulary};
use crate::error::{Error, Result};
use crate::exec::Execution;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConceptRow {
    pub cui: String,
    pub source: String,
    pub name: String,
}

/// All names recorded under one CUI, in file order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConceptGroup {
    pub cui: String,
    pub rows: Vec<ConceptRow>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConceptFile {
    /// Groups in order of first appearance.
    pub groups: Vec<ConceptGroup>,
    pub malformed: usize,
}

/// Read a `CUI<TAB>SOURCE<TAB>NAME` file.
///
/// Rows with fewer than three fields or an empty CUI or name are counted as
/// malformed and skipped. A file with no rows yields zero groups; a file
/// whose rows are all malformed is an error.
pub fn load_concepts(path: &Path) -> Result<ConceptFile> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut order: Vec<String> = Vec::new();
    let mut by_cui: HashMap<String, Vec<ConceptRow>> = HashMap::new();
    let mut malformed = 0;
    let mut valid = 0;
    for line in BufReader::new(f).lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.splitn(3, '\t');
        let (Some(cui), Some(source), Some(name)) = (fields.next(), fields.next(), fields.next())
        else {
            malformed += 1;
            continue;
        };
        let (cui, name) = (cui.trim(), name.trim());
        if cui.is_empty() || name.is_empty() {
            malformed += 1;
            continue;
        }
        valid += 1;
        let row = ConceptRow {
            cui: cui.to_string(),
            source: source.trim().to_string(),
            name: name.to_string(),
        };
        by_cui
            .entry(row.cui.clone())
            .or_insert_with(|| {
                order.push(row.cui.clone());
                Vec::new()
            })
            .push(row);
    }
    if valid == 0 && malformed > 0 {
        return Err(Error::NoConcepts(path.to_path_buf()));
    }
    let groups = order
        .into_iter()
        .map(|cui| {
            let rows = by_cui.remove(&cui).unwrap_or_default();
            ConceptGroup { cui, rows }
        })
        .collect();
    Ok(ConceptFile { groups, malformed })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct MatchOptions {
    /// Use only the first name listed under each CUI.
    pub first_name_only: bool,
}

/// Map each CUI to the vocabulary ids that occur as tokens of its names.
/// CUIs matching fewer than two words are dropped.
pub fn match_vocabulary(
    groups: &[ConceptGroup],
    vocab: &Vocabulary,
    opts: MatchOptions,
    exec: Execution,
) -> BTreeMap<String, BTreeSet<u32>> {
    let matched: Vec<(String, BTreeSet<u32>)> = exec.map(groups, |g| {
        let take = if opts.first_name_only {
            1
        } else {
            g.rows.len()
        };
        let ids = g
            .rows
            .iter()
            .take(take)
            .flat_map(|r| tokenize(&r.name))
            .filter_map(|t| vocab.id(&t))
            .filter(|&id| !Vocabulary::is_special(id))
            .collect();
        (g.cui.clone(), ids)
    });
    let mut out: BTreeMap<String, BTreeSet<u32>> = BTreeMap::new();
    for (cui, ids) in matched {
        out.entry(cui).or_default().extend(ids);
    }
    out.retain(|_, ids| ids.len() >= 2);
    out
}

/// Undirected simple graph over vocabulary ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KnowledgeGraph {
    n_vocab: usize,
    edges: BTreeSet<(u32, u32)>,
    adjacency: Vec<Vec<u32>>,
}

impl KnowledgeGraph {
    /// Build from unordered pairs; self-loops are dropped and duplicates merged.
    pub fn from_edges(n_vocab: usize, pairs: impl IntoIterator<Item = (u32, u32)>) -> Result<Self> {
        let mut edges = BTreeSet::new();
        for (a, b) in pairs {
            if a as usize >= n_vocab || b as usize >= n_vocab {
                return Err(Error::Config(format!(
                    "edge ({a}, {b}) outside vocabulary of {n_vocab}"
                )));
            }
            if a != b {
                edges.insert((a.min(b), a.max(b)));
            }
        }
        let mut adjacency = vec![Vec::new(); n_vocab];
        for &(a, b) in &edges {
            adjacency[a as usize].push(b);
            adjacency[b as usize].push(a);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Ok(KnowledgeGraph {
            n_vocab,
            edges,
            adjacency,
        })
    }

    pub fn empty(n_vocab: usize) -> Self {
        KnowledgeGraph {
            n_vocab,
            edges: BTreeSet::new(),
            adjacency: vec![Vec::new(); n_vocab],
        }
    }

    pub fn n_vocab(&self) -> usize {
        self.n_vocab
    }

    /// Edges as `(low id, high id)` pairs in ascending order.
    pub fn edges(&self) -> &BTreeSet<(u32, u32)> {
        &self.edges
    }

    pub fn neighbors(&self, i: usize) -> &[u32] {
        &self.adjacency[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adjacency[i].len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }
}

/// Clique over each CUI's matched words, unioned across CUIs.
pub fn build_graph(
    matches: &BTreeMap<String, BTreeSet<u32>>,
    n_vocab: usize,
) -> Result<KnowledgeGraph> {
    let mut pairs = Vec::new();
    for ids in matches.values() {
        let ids: Vec<u32> = ids.iter().copied().collect();
        for (a, &i) in ids.iter().enumerate() {
            pairs.extend(ids[a + 1..].iter().map(|&j| (i, j)));
        }
    }
    KnowledgeGraph::from_edges(n_vocab, pairs)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceStats {
    pub source: String,
    pub rows: usize,
    pub matched_cuis: usize,
    /// Edges this source would produce on its own.
    pub edges: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphStats {
    pub node_count: usize,
    pub edge_count: usize,
    /// degree -> number of nodes with that degree, over nodes with degree >= 1.
    pub degree_histogram: BTreeMap<usize, usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sources: Vec<SourceStats>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vocab_hash: Option<String>,
}

pub fn graph_stats(g: &KnowledgeGraph) -> GraphStats {
    let mut degree_histogram = BTreeMap::new();
    for i in 0..g.n_vocab() {
        let deg = g.degree(i);
        if deg > 0 {
            *degree_histogram.entry(deg).or_insert(0) += 1;
        }
    }
    GraphStats {
        node_count: degree_histogram.values().sum(),
        edge_count: g.edge_count(),
        degree_histogram,
        sources: Vec::new(),
        vocab_hash: None,
    }
}

/// Per-source breakdown: rows, matched CUIs and edges using that source's names alone.
pub fn source_breakdown(
    groups: &[ConceptGroup],
    vocab: &Vocabulary,
    opts: MatchOptions,
    exec: Execution,
) -> Result<Vec<SourceStats>> {
    let mut sources: BTreeMap<&str, usize> = BTreeMap::new();
    for g in groups {
        for r in &g.rows {
            *sources.entry(r.source.as_str()).or_insert(0) += 1;
        }
    }
    sources
        .into_iter()
        .map(|(source, rows)| {
            let filtered: Vec<ConceptGroup> = groups
                .iter()
                .map(|g| ConceptGroup {
                    cui: g.cui.clone(),
                    rows: g
                        .rows
                        .iter()
                        .filter(|r| r.source == source)
                        .cloned()
                        .collect(),
                })
                .filter(|g| !g.rows.is_empty())
                .collect();
            let m = match_vocabulary(&filtered, vocab, opts, exec);
            let g = build_graph(&m, vocab.len())?;
            Ok(SourceStats {
                source: source.to_string(),
                rows,
                matched_cuis: m.len(),
                edges: g.edge_count(),
            })
        })
        .collect()
}

/// Write one `word_i<TAB>word_j` line per edge with the lexicographically smaller word first.
/// Lines are sorted.
pub fn save_edge_list(g: &KnowledgeGraph, vocab: &Vocabulary, path: &Path) -> Result<()> {
    let mut lines: Vec<(&str, &str)> = g
        .edges()
        .iter()
        .map(|&(a, b)| {
            let (wa, wb) = (vocab.word(a), vocab.word(b));
            if wa <= wb {
                (wa, wb)
            } else {
                (wb, wa)
            }
        })
        .collect();
    lines.sort_unstable();
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(f);
    for (a, b) in lines {
        writeln!(w, "{a}\t{b}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn load_edge_list(path: &Path, vocab: &Vocabulary) -> Result<KnowledgeGraph> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut pairs = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.is_empty() {
            continue;
        }
        let (a, b) = line
            .split_once('\t')
            .ok_or_else(|| Error::parse(path, i + 1, "expected word<TAB>word"))?;
        let id = |w: &str| {
            vocab.id(w).ok_or_else(|| {
                Error::VocabularyMismatch(format!(
                    "{}:{}: {w:?} not in vocabulary",
                    path.display(),
                    i + 1
                ))
            })
        };
        pairs.push((id(a)?, id(b)?));
    }
    KnowledgeGraph::from_edges(vocab.len(), pairs)
}
