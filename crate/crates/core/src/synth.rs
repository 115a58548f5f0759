//! Synthetic synonym-substitution benchmark.
//!
//! Every class of every task is signalled by a cue word drawn from a small
//! synonym group. Training and validation documents always use the first
//! member of each group; test documents use another member, which the
//! classifier never sees with a label. A concept file lists each synonym
//! group under one CUI, so retrofitting can pull the unseen forms toward the
//! trained ones.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use chrono::NaiveDate;
use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{RawDocument, Split, Task, TaskSchema};
use crate::error::{Error, Result};
use crate::kgraph::ConceptRow;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    /// Class count per task, in canonical task order.
    pub tasks: Vec<(Task, usize)>,
    pub train_docs: usize,
    pub validation_docs: usize,
    pub test_docs: usize,
    /// Tokens per document.
    pub doc_length: usize,
    /// Size of the label-independent filler vocabulary.
    pub filler_words: usize,
    /// Occurrences of each task's cue word per document.
    pub cue_repeats: usize,
    /// Members per synonym group.
    pub synonyms: usize,
    /// Test documents use a synonym never seen in training.
    pub substitute_test: bool,
    /// Class frequencies follow `1 / (rank + 1)^zipf`.
    pub zipf: f64,
    /// Probability that a non-site label is tied to the site label.
    pub correlation: f64,
    /// Concepts over filler words, adding edges unrelated to any label.
    pub distractor_concepts: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            tasks: vec![
                (Task::Site, 8),
                (Task::Subsite, 12),
                (Task::Laterality, 3),
                (Task::Behavior, 3),
                (Task::Histology, 16),
                (Task::Grade, 4),
            ],
            train_docs: 5000,
            validation_docs: 1000,
            test_docs: 1000,
            doc_length: 64,
            filler_words: 300,
            cue_repeats: 2,
            synonyms: 2,
            substitute_test: true,
            zipf: 1.0,
            correlation: 0.5,
            distractor_concepts: 40,
            seed: 1,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.synonyms < 2 {
            return Err(Error::Config(format!(
                "synonym groups need at least 2 members, got {}",
                self.synonyms
            )));
        }
        if self.tasks.is_empty() || self.tasks.iter().any(|(_, c)| *c < 2) {
            return Err(Error::Config("every task needs at least 2 classes".into()));
        }
        if self.train_docs == 0 || self.test_docs == 0 {
            return Err(Error::Config(
                "train and test document counts must be positive".into(),
            ));
        }
        if self.filler_words < 2 || self.cue_repeats == 0 {
            return Err(Error::Config(
                "need at least 2 filler words and 1 cue repeat".into(),
            ));
        }
        if self.doc_length < self.tasks.len() * self.cue_repeats {
            return Err(Error::Config(
                "documents too short to hold every cue".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.correlation) || !(self.zipf >= 0.0) {
            return Err(Error::Config(
                "correlation must be in [0, 1] and zipf >= 0".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthCorpus {
    pub documents: Vec<RawDocument>,
    pub concepts: Vec<ConceptRow>,
    pub schema: TaskSchema,
}

pub fn class_label(k: usize) -> String {
    format!("c{k:03}")
}

pub fn cue_word(task: Task, class: usize, member: usize) -> String {
    format!("{}{class}syn{member}", task.name())
}

fn filler_word(k: usize) -> String {
    const SYLLABLES: [&str; 16] = [
        "ta", "ne", "ri", "mo", "ka", "lu", "pe", "so", "vi", "da", "go", "mi", "ra", "tu", "be",
        "lo",
    ];
    let mut word = String::new();
    let mut n = k;
    loop {
        word.push_str(SYLLABLES[n % 16]);
        n /= 16;
        if n == 0 {
            break;
        }
    }
    word.push('x');
    word
}

const SOURCES: [&str; 3] = ["SNOMEDCT_US", "NCI", "ICD10"];

fn zipf_weights(n: usize, s: f64) -> Vec<f64> {
    (0..n).map(|k| 1.0 / ((k + 1) as f64).powf(s)).collect()
}

/// Generate the corpus, its label schema and the concept rows.
pub fn generate(cfg: &SynthConfig) -> Result<SynthCorpus> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut tasks = cfg.tasks.clone();
    tasks.sort_by_key(|(t, _)| *t);
    let schema = TaskSchema::new(
        tasks
            .iter()
            .map(|&(t, c)| (t, (0..c).map(class_label).collect()))
            .collect(),
    )?;
    let class_dists = tasks
        .iter()
        .map(|&(_, c)| WeightedIndex::new(zipf_weights(c, cfg.zipf)))
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| Error::Config(e.to_string()))?;
    let filler_dist = WeightedIndex::new(zipf_weights(cfg.filler_words, 1.0))
        .map_err(|e| Error::Config(e.to_string()))?;
    let fit_start = NaiveDate::from_ymd_opt(2010, 1, 1).expect("valid date");
    let test_start = NaiveDate::from_ymd_opt(2017, 1, 1).expect("valid date");

    let plan = [
        (Split::Train, cfg.train_docs),
        (Split::Validation, cfg.validation_docs),
        (Split::Test, cfg.test_docs),
    ];
    let mut documents = Vec::with_capacity(plan.iter().map(|p| p.1).sum());
    for (split, count) in plan {
        for _ in 0..count {
            let n = documents.len();
            let mut classes = Vec::with_capacity(tasks.len());
            for (k, dist) in class_dists.iter().enumerate() {
                let c = dist.sample(&mut rng);
                let tied = k > 0 && rng.gen::<f64>() < cfg.correlation;
                classes.push(if tied { classes[0] % tasks[k].1 } else { c });
            }
            let mut tokens: Vec<String> = Vec::with_capacity(cfg.doc_length);
            for (&(task, _), &c) in tasks.iter().zip(&classes) {
                let member = if split == Split::Test && cfg.substitute_test {
                    rng.gen_range(1..cfg.synonyms)
                } else {
                    0
                };
                for _ in 0..cfg.cue_repeats {
                    tokens.push(cue_word(task, c, member));
                }
            }
            while tokens.len() < cfg.doc_length {
                tokens.push(filler_word(filler_dist.sample(&mut rng)));
            }
            tokens.shuffle(&mut rng);
            let (start, span) = match split {
                Split::Test => (test_start, 700),
                _ => (fit_start, 2500),
            };
            let date = start + chrono::Duration::days(rng.gen_range(0..span));
            let labels: BTreeMap<Task, String> = tasks
                .iter()
                .zip(&classes)
                .map(|(&(t, _), &c)| (t, class_label(c)))
                .collect();
            documents.push(RawDocument {
                id: format!("doc{n:06}"),
                text: tokens.join(" "),
                date: Some(date),
                labels,
                split: Some(split),
            });
        }
    }

    let mut concepts = Vec::new();
    let mut cui = 0usize;
    let mut next_cui = || {
        cui += 1;
        format!("C{cui:07}")
    };
    for &(task, classes) in &tasks {
        for c in 0..classes {
            let id = next_cui();
            for m in 0..cfg.synonyms {
                // later members carry a qualifier that never occurs in the corpus
                let name = if m == 0 {
                    cue_word(task, c, m)
                } else {
                    format!("{} neoplasm", cue_word(task, c, m))
                };
                concepts.push(ConceptRow {
                    cui: id.clone(),
                    source: SOURCES[(c + m) % SOURCES.len()].to_string(),
                    name,
                });
            }
        }
    }
    for k in 0..cfg.distractor_concepts {
        let id = next_cui();
        let a = rng.gen_range(0..cfg.filler_words);
        let b = rng.gen_range(0..cfg.filler_words);
        for (j, name) in [filler_word(a), filler_word(b)].into_iter().enumerate() {
            concepts.push(ConceptRow {
                cui: id.clone(),
                source: SOURCES[(k + j) % SOURCES.len()].to_string(),
                name,
            });
        }
    }
    Ok(SynthCorpus {
        documents,
        concepts,
        schema,
    })
}

/// Write concept rows as `CUI<TAB>SOURCE<TAB>NAME`.
pub fn write_concepts(path: &Path, rows: &[ConceptRow]) -> Result<()> {
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(f);
    for r in rows {
        writeln!(w, "{}\t{}\t{}", r.cui, r.source, r.name).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::tokenize;

    fn small() -> SynthConfig {
        SynthConfig {
            train_docs: 200,
            validation_docs: 50,
            test_docs: 50,
            ..SynthConfig::default()
        }
    }

    #[test]
    fn deterministic_given_seed() {
        assert_eq!(generate(&small()).unwrap(), generate(&small()).unwrap());
        let other = SynthConfig { seed: 2, ..small() };
        assert_ne!(
            generate(&small()).unwrap().documents,
            generate(&other).unwrap().documents
        );
    }

    #[test]
    fn test_split_uses_unseen_synonyms() {
        let corpus = generate(&small()).unwrap();
        for d in &corpus.documents {
            let tokens = tokenize(&d.text);
            assert_eq!(tokens.len(), 64);
            let cues: Vec<&String> = tokens.iter().filter(|t| t.contains("syn")).collect();
            assert_eq!(cues.len(), 12);
            let test = d.split == Some(Split::Test);
            assert!(cues.iter().all(|c| c.ends_with("syn0") != test), "{}", d.id);
            for (task, label) in &d.labels {
                let k: usize = label[1..].parse().unwrap();
                let member = if test { 1 } else { 0 };
                assert!(tokens.contains(&cue_word(*task, k, member)));
            }
        }
        crate::corpus::check_split_dates(&corpus.documents).unwrap();
    }

    #[test]
    fn concepts_group_synonyms() {
        let corpus = generate(&small()).unwrap();
        let site3: Vec<&ConceptRow> = corpus
            .concepts
            .iter()
            .filter(|r| tokenize(&r.name)[0].starts_with("site3syn"))
            .collect();
        assert_eq!(site3.len(), 2);
        assert_eq!(site3[0].cui, site3[1].cui);
        let n_groups: usize = small().tasks.iter().map(|(_, c)| c).sum();
        assert_eq!(corpus.concepts.len(), 2 * n_groups + 2 * 40);
    }

    #[test]
    fn class_frequencies_are_imbalanced() {
        let corpus = generate(&small()).unwrap();
        let count = |label: &str| {
            corpus
                .documents
                .iter()
                .filter(|d| d.labels[&Task::Histology] == label)
                .count()
        };
        assert!(count("c000") > 3 * count("c015"));
    }

    #[test]
    fn rejects_singleton_synonym_groups() {
        let cfg = SynthConfig {
            synonyms: 1,
            ..small()
        };
        assert!(matches!(generate(&cfg), Err(Error::Config(_))));
    }

    #[test]
    fn filler_words_are_distinct() {
        let words: std::collections::BTreeSet<String> = (0..300).map(filler_word).collect();
        assert_eq!(words.len(), 300);
        assert!(words.iter().all(|w| tokenize(w) == vec![w.clone()]));
    }
}
