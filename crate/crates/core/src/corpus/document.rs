use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use chrono::NaiveDate;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The six classification tasks a document may be labelled for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Site,
    Subsite,
    Laterality,
    Behavior,
    Histology,
    Grade,
}

impl Task {
    pub const ALL: [Task; 6] = [
        Task::Site,
        Task::Subsite,
        Task::Laterality,
        Task::Behavior,
        Task::Histology,
        Task::Grade,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Task::Site => "site",
            Task::Subsite => "subsite",
            Task::Laterality => "laterality",
            Task::Behavior => "behavior",
            Task::Histology => "histology",
            Task::Grade => "grade",
        }
    }

    /// Class counts of the full-scale registry coding schema.
    pub fn default_class_count(self) -> usize {
        match self {
            Task::Site => 70,
            Task::Subsite => 324,
            Task::Laterality => 7,
            Task::Behavior => 4,
            Task::Histology => 572,
            Task::Grade => 9,
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Task::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| Error::UnknownTask(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Validation,
    Test,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawDocument {
    pub id: String,
    pub text: String,
    pub date: Option<NaiveDate>,
    pub labels: BTreeMap<Task, String>,
    pub split: Option<Split>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RawRecord {
    id: String,
    text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    date: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    labels: Option<BTreeMap<String, String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    split: Option<Split>,
}

fn parse_date(s: &str) -> Option<NaiveDate> {
    let day = s.get(..10)?;
    NaiveDate::parse_from_str(day, "%Y-%m-%d").ok()
}

impl RawDocument {
    fn from_record(r: RawRecord) -> std::result::Result<Self, String> {
        if r.id.is_empty() {
            return Err("empty id".into());
        }
        let date = match r.date {
            Some(d) => Some(parse_date(&d).ok_or_else(|| format!("bad date {d:?}"))?),
            None => None,
        };
        let mut labels = BTreeMap::new();
        for (k, v) in r.labels.unwrap_or_default() {
            let task = k.parse::<Task>().map_err(|e| e.to_string())?;
            labels.insert(task, v);
        }
        Ok(RawDocument {
            id: r.id,
            text: r.text,
            date,
            labels,
            split: r.split,
        })
    }

    fn to_record(&self) -> RawRecord {
        RawRecord {
            id: self.id.clone(),
            text: self.text.clone(),
            date: self.date.map(|d| d.format("%Y-%m-%d").to_string()),
            labels: (!self.labels.is_empty()).then(|| {
                self.labels
                    .iter()
                    .map(|(t, v)| (t.name().to_string(), v.clone()))
                    .collect()
            }),
            split: self.split,
        }
    }
}

/// Read a JSON Lines corpus. Blank lines are ignored; ids must be unique.
pub fn read_corpus(path: &Path) -> Result<Vec<RawDocument>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut docs = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: RawRecord =
            serde_json::from_str(&line).map_err(|e| Error::parse(path, i + 1, e.to_string()))?;
        let doc = RawDocument::from_record(record).map_err(|m| Error::parse(path, i + 1, m))?;
        if !seen.insert(doc.id.clone()) {
            return Err(Error::DuplicateId(doc.id));
        }
        docs.push(doc);
    }
    Ok(docs)
}

pub fn write_corpus(path: &Path, docs: &[RawDocument]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for d in docs {
        serde_json::to_writer(&mut w, &d.to_record())?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Check that every test document is dated strictly after every train or
/// validation document. Documents without a date or split are ignored.
pub fn check_split_dates(docs: &[RawDocument]) -> Result<()> {
    let latest_fit = docs
        .iter()
        .filter(|d| matches!(d.split, Some(Split::Train | Split::Validation)))
        .filter_map(|d| d.date.map(|t| (t, d)))
        .max_by_key(|(t, _)| *t);
    let earliest_test = docs
        .iter()
        .filter(|d| d.split == Some(Split::Test))
        .filter_map(|d| d.date.map(|t| (t, d)))
        .min_by_key(|(t, _)| *t);
    if let (Some((fit, fd)), Some((test, td))) = (latest_fit, earliest_test) {
        if test <= fit {
            return Err(Error::SplitDates {
                test_id: td.id.clone(),
                test_date: test.to_string(),
                other_id: fd.id.clone(),
                other_date: fit.to_string(),
            });
        }
    }
    Ok(())
}

/// Assign splits to undated-split documents by collection date: documents
/// dated before `cutoff` are shuffled into train and validation with the
/// given validation fraction, the rest become test. Documents with an
/// explicit split keep it; documents with neither split nor date go to train.
pub fn assign_splits(docs: &mut [RawDocument], cutoff: NaiveDate, val_fraction: f64, seed: u64) {
    let mut early: Vec<usize> = Vec::new();
    for (i, d) in docs.iter_mut().enumerate() {
        if d.split.is_some() {
            continue;
        }
        match d.date {
            Some(t) if t >= cutoff => d.split = Some(Split::Test),
            Some(_) => early.push(i),
            None => d.split = Some(Split::Train),
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    early.shuffle(&mut rng);
    let n_val = (early.len() as f64 * val_fraction).round() as usize;
    for (k, &i) in early.iter().enumerate() {
        docs[i].split = Some(if k < n_val {
            Split::Validation
        } else {
            Split::Train
        });
    }
}

/// Ordered label dictionaries, one per task present in the schema.
///
/// Tasks are kept in canonical order regardless of the order in the file.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskSchema {
    tasks: Vec<(Task, Vec<String>)>,
    index: HashMap<Task, HashMap<String, usize>>,
}

impl TaskSchema {
    pub fn new(mut tasks: Vec<(Task, Vec<String>)>) -> Result<Self> {
        tasks.sort_by_key(|(t, _)| *t);
        for w in tasks.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::Config(format!("task {} listed twice", w[0].0)));
            }
        }
        let mut index = HashMap::new();
        for (task, labels) in &tasks {
            if labels.len() < 2 {
                return Err(Error::Config(format!(
                    "task {task} needs at least 2 classes"
                )));
            }
            let map: HashMap<String, usize> = labels
                .iter()
                .enumerate()
                .map(|(i, l)| (l.clone(), i))
                .collect();
            if map.len() != labels.len() {
                return Err(Error::Config(format!("task {task} has duplicate labels")));
            }
            index.insert(*task, map);
        }
        Ok(TaskSchema { tasks, index })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let raw: BTreeMap<String, Vec<String>> =
            serde_json::from_str(&text).map_err(|e| Error::parse(path, 1, e.to_string()))?;
        let tasks = raw
            .into_iter()
            .map(|(k, v)| Ok((k.parse::<Task>()?, v)))
            .collect::<Result<Vec<_>>>()?;
        TaskSchema::new(tasks)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let map: serde_json::Map<String, serde_json::Value> = self
            .tasks
            .iter()
            .map(|(t, l)| (t.name().to_string(), serde_json::json!(l)))
            .collect();
        let text = serde_json::to_string_pretty(&map)?;
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn tasks(&self) -> impl Iterator<Item = Task> + '_ {
        self.tasks.iter().map(|(t, _)| *t)
    }

    pub fn len(&self) -> usize {
        self.tasks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tasks.is_empty()
    }

    pub fn labels(&self, task: Task) -> Option<&[String]> {
        self.tasks
            .iter()
            .find(|(t, _)| *t == task)
            .map(|(_, l)| l.as_slice())
    }

    /// `(task name, class count)` pairs in schema order.
    pub fn task_sizes(&self) -> Vec<(String, usize)> {
        self.tasks
            .iter()
            .map(|(t, l)| (t.name().to_string(), l.len()))
            .collect()
    }

    pub fn class_index(&self, task: Task, label: &str) -> Result<usize> {
        self.index
            .get(&task)
            .and_then(|m| m.get(label))
            .copied()
            .ok_or_else(|| Error::UnknownLabel {
                task: task.name().to_string(),
                value: label.to_string(),
            })
    }

    /// Warn-level check against the full-scale class counts; returns the
    /// tasks whose class count differs.
    pub fn differs_from_default(&self) -> Vec<(Task, usize, usize)> {
        self.tasks
            .iter()
            .filter(|(t, l)| l.len() != t.default_class_count())
            .map(|(t, l)| (*t, l.len(), t.default_class_count()))
            .collect()
    }
}
