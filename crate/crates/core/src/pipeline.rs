//! File-based stage orchestration.
//!
//! Each stage reads its inputs from a work directory and writes its outputs
//! next to them. Every artifact derived from the vocabulary carries a
//! `<file>.meta.json` sidecar with the vocabulary's content hash; stages
//! refuse inputs whose hash differs from the current vocabulary.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::corpus::{
    assign_splits, build_vocabulary, check_split_dates, encode_corpus, read_corpus, read_encoded,
    write_corpus, write_encoded, EncodedDocument, EncodedMeta, RawDocument, Split, Task,
    TaskSchema, Vocabulary,
};
use crate::embed::{
    load_embeddings, save_embeddings, train_sgns, EmbeddingMatrix, SgnsConfig, UnknownWords,
};
use crate::error::{Error, Result};
use crate::exec::{stage_seed, Execution};
use crate::kgraph::{
    build_graph, graph_stats, load_concepts, load_edge_list, match_vocabulary, save_edge_list,
    source_breakdown, GraphStats, MatchOptions,
};
use crate::metrics::{
    build_report, BootstrapConfig, MacroUniverse, MetricsReport, ReportConfig, TaskPredictions,
    ALL_SIX, SITE_LAT_BEH_HIST,
};
use crate::mtcnn::{
    predict, train as train_model, ModelConfig, ModelParams, TrainConfig, TrainHistory,
};
use crate::retrofit::{retrofit as retrofit_embeddings, RetrofitConfig};
use crate::synth::{generate, write_concepts, SynthConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CorpusConfig {
    pub min_df: u64,
    /// Encoded document length in tokens.
    pub length: usize,
    /// Documents without an explicit split dated on or after this day are test documents.
    pub cutoff: String,
    /// Share of pre-cutoff documents held out for validation.
    pub validation_fraction: f64,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        CorpusConfig {
            min_df: 5,
            length: crate::corpus::DEFAULT_LENGTH,
            cutoff: "2017-01-01".into(),
            validation_fraction: 0.1,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct GraphConfig {
    pub first_name_only: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelSettings {
    pub window_sizes: Vec<usize>,
    pub filters_per_window: usize,
    /// One loss weight per schema task; equal weights when absent.
    pub task_weights: Option<Vec<f64>>,
}

impl Default for ModelSettings {
    fn default() -> Self {
        ModelSettings {
            window_sizes: vec![3, 4, 5],
            filters_per_window: 300,
            task_weights: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MetricsConfig {
    pub resamples: usize,
    pub level: f64,
    pub strata_quantile: f64,
    pub macro_universe: MacroUniverse,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        MetricsConfig {
            resamples: 1000,
            level: 0.95,
            strata_quantile: 0.1,
            macro_universe: MacroUniverse::Observed,
        }
    }
}

/// Every stage's settings plus the global seed. Stage seeds inside the
/// sub-configs are ignored; each stage derives its own from `seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub seed: u64,
    pub exec: Execution,
    pub corpus: CorpusConfig,
    pub sgns: SgnsConfig,
    pub graph: GraphConfig,
    pub retrofit: RetrofitConfig,
    pub model: ModelSettings,
    pub training: TrainConfig,
    pub metrics: MetricsConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 1,
            exec: Execution::default(),
            corpus: CorpusConfig::default(),
            sgns: SgnsConfig::default(),
            graph: GraphConfig::default(),
            retrofit: RetrofitConfig::default(),
            model: ModelSettings::default(),
            training: TrainConfig::default(),
            metrics: MetricsConfig::default(),
        }
    }
}

impl PipelineConfig {
    /// Settings sized for the synthetic benchmark: short documents, 32-d
    /// vectors and 30 filters per window.
    pub fn benchmark(seed: u64) -> Self {
        PipelineConfig {
            seed,
            corpus: CorpusConfig {
                length: 64,
                ..CorpusConfig::default()
            },
            sgns: SgnsConfig {
                dim: 32,
                ..SgnsConfig::default()
            },
            model: ModelSettings {
                filters_per_window: 30,
                ..ModelSettings::default()
            },
            training: TrainConfig {
                epochs: 8,
                patience: Some(3),
                ..TrainConfig::default()
            },
            ..PipelineConfig::default()
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::parse(path, e.line(), e.to_string()))
    }

    fn cutoff(&self) -> Result<NaiveDate> {
        NaiveDate::parse_from_str(&self.corpus.cutoff, "%Y-%m-%d")
            .map_err(|e| Error::Config(format!("cutoff {:?}: {e}", self.corpus.cutoff)))
    }

    fn sgns_config(&self) -> SgnsConfig {
        SgnsConfig {
            seed: stage_seed(self.seed, "embed"),
            ..self.sgns.clone()
        }
    }

    fn retrofit_config(&self) -> RetrofitConfig {
        RetrofitConfig {
            exec: self.exec,
            ..self.retrofit.clone()
        }
    }

    fn train_config(&self) -> TrainConfig {
        TrainConfig {
            seed: stage_seed(self.seed, "train"),
            exec: self.exec,
            ..self.training.clone()
        }
    }

    fn report_config(&self) -> ReportConfig {
        ReportConfig {
            bootstrap: BootstrapConfig {
                resamples: self.metrics.resamples,
                level: self.metrics.level,
                seed: stage_seed(self.seed, "metrics"),
                exec: self.exec,
            },
            macro_universe: self.metrics.macro_universe,
            strata_quantile: self.metrics.strata_quantile,
        }
    }
}

/// File names inside a work directory.
#[derive(Debug, Clone)]
pub struct Workdir {
    root: PathBuf,
}

impl Workdir {
    pub fn new(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        std::fs::create_dir_all(&root).map_err(|e| Error::io(&root, e))?;
        Ok(Workdir { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn vocab(&self) -> PathBuf {
        self.root.join("vocab.tsv")
    }
    pub fn schema(&self) -> PathBuf {
        self.root.join("schema.json")
    }
    pub fn encoded(&self) -> PathBuf {
        self.root.join("encoded.jsonl")
    }
    pub fn embeddings(&self) -> PathBuf {
        self.root.join("embeddings.txt")
    }
    pub fn graph(&self) -> PathBuf {
        self.root.join("graph.tsv")
    }
    pub fn graph_stats(&self) -> PathBuf {
        self.root.join("graph.stats.json")
    }
    pub fn retrofitted(&self) -> PathBuf {
        self.root.join("retrofitted.txt")
    }
    pub fn retrofit_trace(&self) -> PathBuf {
        self.root.join("retrofit.trace.json")
    }
    pub fn model(&self, name: &str) -> PathBuf {
        self.root.join(format!("{name}.ckpt"))
    }
    pub fn history(&self, name: &str) -> PathBuf {
        self.root.join(format!("{name}.history.jsonl"))
    }
    pub fn report(&self) -> PathBuf {
        self.root.join("report.json")
    }
    pub fn report_tsv(&self) -> PathBuf {
        self.root.join("report.tsv")
    }
}

fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".meta.json");
    path.with_file_name(name)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::parse(path, e.line(), e.to_string()))
}

/// Sidecar written next to every vocabulary-dependent artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArtifactMeta {
    pub stage: String,
    pub vocab_hash: String,
    pub seed: u64,
}

fn write_meta(artifact: &Path, stage: &str, vocab_hash: &str, seed: u64) -> Result<()> {
    let meta = ArtifactMeta {
        stage: stage.into(),
        vocab_hash: vocab_hash.into(),
        seed,
    };
    write_json(&sidecar_path(artifact), &meta)
}

/// Fail unless `artifact` was produced against the vocabulary with `expected` hash.
pub fn check_meta(artifact: &Path, expected: &str) -> Result<ArtifactMeta> {
    let meta: ArtifactMeta = read_json(&sidecar_path(artifact))?;
    if meta.vocab_hash != expected {
        return Err(Error::VocabularyHash {
            expected: expected.into(),
            found: format!("{} (in {})", meta.vocab_hash, artifact.display()),
        });
    }
    Ok(meta)
}

fn load_vocab(wd: &Workdir) -> Result<(Arc<Vocabulary>, String)> {
    let vocab = Vocabulary::load(&wd.vocab())?;
    let hash = vocab.content_hash();
    Ok((Arc::new(vocab), hash))
}

fn load_encoded(wd: &Workdir, hash: &str) -> Result<(Vec<EncodedDocument>, EncodedMeta)> {
    let meta: EncodedMeta = read_json(&sidecar_path(&wd.encoded()))?;
    if meta.vocab_hash != hash {
        return Err(Error::VocabularyHash {
            expected: hash.into(),
            found: format!("{} (in {})", meta.vocab_hash, wd.encoded().display()),
        });
    }
    Ok((read_encoded(&wd.encoded())?, meta))
}

/// Label schema from the labels present in `docs`, each task's values sorted.
pub fn derive_schema(docs: &[RawDocument]) -> Result<TaskSchema> {
    let mut values: BTreeMap<Task, BTreeSet<String>> = BTreeMap::new();
    for d in docs {
        for (t, v) in &d.labels {
            values.entry(*t).or_default().insert(v.clone());
        }
    }
    TaskSchema::new(
        values
            .into_iter()
            .map(|(t, v)| (t, v.into_iter().collect()))
            .collect(),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreprocessSummary {
    pub documents: usize,
    pub train: usize,
    pub validation: usize,
    pub test: usize,
    pub vocab_size: usize,
    pub vocab_hash: String,
    /// Tasks whose class count differs from the full-scale schema.
    pub reduced_tasks: Vec<(String, usize, usize)>,
}

/// Tokenize, split, build the vocabulary and encode every document.
pub fn preprocess(
    corpus: &Path,
    schema: Option<&Path>,
    wd: &Workdir,
    cfg: &PipelineConfig,
) -> Result<PreprocessSummary> {
    let mut docs = read_corpus(corpus)?;
    if docs.is_empty() {
        return Err(Error::NoDocuments);
    }
    assign_splits(
        &mut docs,
        cfg.cutoff()?,
        cfg.corpus.validation_fraction,
        stage_seed(cfg.seed, "split"),
    );
    check_split_dates(&docs)?;
    let schema = match schema {
        Some(p) => TaskSchema::load(p)?,
        None => derive_schema(&docs)?,
    };
    let vocab = build_vocabulary(&docs, cfg.corpus.min_df, cfg.exec)?;
    let encoded = encode_corpus(&docs, &vocab, &schema, cfg.corpus.length, cfg.exec)?;
    let hash = vocab.content_hash();
    vocab.save(&wd.vocab())?;
    schema.save(&wd.schema())?;
    write_encoded(&wd.encoded(), &encoded)?;
    write_json(
        &sidecar_path(&wd.encoded()),
        &EncodedMeta {
            vocab_hash: hash.clone(),
            length: cfg.corpus.length,
            tasks: schema.task_sizes(),
            documents: encoded.len(),
        },
    )?;
    let count = |s| encoded.iter().filter(|d| d.split == s).count();
    Ok(PreprocessSummary {
        documents: encoded.len(),
        train: count(Split::Train),
        validation: count(Split::Validation),
        test: count(Split::Test),
        vocab_size: vocab.len(),
        vocab_hash: hash,
        reduced_tasks: schema
            .differs_from_default()
            .into_iter()
            .map(|(t, n, full)| (t.name().to_string(), n, full))
            .collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbedSummary {
    pub vocab_hash: String,
    pub dim: usize,
    pub epoch_losses: Vec<f64>,
}

/// Train skip-gram vectors on the text of every encoded document. Labels
/// are not used, so test documents contribute text as unlabelled data.
pub fn embed(wd: &Workdir, cfg: &PipelineConfig) -> Result<EmbedSummary> {
    let (vocab, hash) = load_vocab(wd)?;
    let (docs, _) = load_encoded(wd, &hash)?;
    let sgns = cfg.sgns_config();
    let result = train_sgns(&docs, vocab, &sgns)?;
    save_embeddings(&result.embeddings, &wd.embeddings())?;
    write_meta(&wd.embeddings(), "embed", &hash, sgns.seed)?;
    Ok(EmbedSummary {
        vocab_hash: hash,
        dim: sgns.dim,
        epoch_losses: result.epoch_losses,
    })
}

/// Match concept names to the vocabulary and write the edge list and stats.
pub fn graph(wd: &Workdir, concepts: &Path, cfg: &PipelineConfig) -> Result<GraphStats> {
    let (vocab, hash) = load_vocab(wd)?;
    let file = load_concepts(concepts)?;
    let opts = MatchOptions {
        first_name_only: cfg.graph.first_name_only,
    };
    let matches = match_vocabulary(&file.groups, &vocab, opts, cfg.exec);
    let g = build_graph(&matches, vocab.len())?;
    save_edge_list(&g, &vocab, &wd.graph())?;
    write_meta(&wd.graph(), "graph", &hash, cfg.seed)?;
    let mut stats = graph_stats(&g);
    stats.sources = source_breakdown(&file.groups, &vocab, opts, cfg.exec)?;
    stats.vocab_hash = Some(hash);
    write_json(&wd.graph_stats(), &stats)?;
    Ok(stats)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrofitTrace {
    pub vocab_hash: String,
    pub objective: Vec<f64>,
    pub energy: Vec<f64>,
    pub max_change: Vec<f64>,
    pub sweeps_run: usize,
}

/// Retrofit the baseline vectors to the graph.
pub fn retrofit(wd: &Workdir, cfg: &PipelineConfig) -> Result<RetrofitTrace> {
    let (vocab, hash) = load_vocab(wd)?;
    check_meta(&wd.embeddings(), &hash)?;
    check_meta(&wd.graph(), &hash)?;
    let (emb, _) = load_embeddings(&wd.embeddings(), vocab.clone(), None, UnknownWords::Fail)?;
    let g = load_edge_list(&wd.graph(), &vocab)?;
    let result = retrofit_embeddings(&emb, &g, &cfg.retrofit_config())?;
    save_embeddings(&result.embeddings, &wd.retrofitted())?;
    write_meta(&wd.retrofitted(), "retrofit", &hash, cfg.seed)?;
    let trace = RetrofitTrace {
        vocab_hash: hash,
        objective: result.objective_trace,
        energy: result.energy_trace,
        max_change: result.max_change,
        sweeps_run: result.sweeps_run,
    };
    write_json(&wd.retrofit_trace(), &trace)?;
    Ok(trace)
}

/// Train the classifier on the train split with early stopping on the
/// validation split, starting from the embeddings in `embeddings`.
pub fn train(
    wd: &Workdir,
    embeddings: &Path,
    name: &str,
    cfg: &PipelineConfig,
) -> Result<TrainHistory> {
    let (vocab, hash) = load_vocab(wd)?;
    check_meta(embeddings, &hash)?;
    let (docs, meta) = load_encoded(wd, &hash)?;
    let (emb, _) = load_embeddings(embeddings, vocab, None, UnknownWords::Fail)?;
    let model_cfg = model_config(&emb, &meta, cfg)?;
    let params = ModelParams::init(model_cfg, &emb)?;
    let (fit, val): (Vec<EncodedDocument>, Vec<EncodedDocument>) = docs
        .into_iter()
        .filter(|d| d.split != Split::Test)
        .partition(|d| d.split == Split::Train);
    let tc = cfg.train_config();
    let (trained, history) = train_model(params, &fit, &val, &tc)?;
    let path = wd.model(name);
    trained.save(&path)?;
    write_meta(&path, "train", &hash, tc.seed)?;
    let hist_path = wd.history(name);
    let f = File::create(&hist_path).map_err(|e| Error::io(&hist_path, e))?;
    let mut w = BufWriter::new(f);
    for rec in &history.epochs {
        serde_json::to_writer(&mut w, rec)?;
        w.write_all(b"\n").map_err(|e| Error::io(&hist_path, e))?;
    }
    w.flush().map_err(|e| Error::io(&hist_path, e))?;
    Ok(history)
}

fn model_config(
    emb: &EmbeddingMatrix,
    meta: &EncodedMeta,
    cfg: &PipelineConfig,
) -> Result<ModelConfig> {
    let task_weights = match &cfg.model.task_weights {
        Some(w) => w.clone(),
        None => vec![1.0; meta.tasks.len()],
    };
    let mc = ModelConfig {
        embedding_dim: emb.dim(),
        doc_length: meta.length,
        window_sizes: cfg.model.window_sizes.clone(),
        filters_per_window: cfg.model.filters_per_window,
        tasks: meta.tasks.clone(),
        task_weights,
        seed: stage_seed(cfg.seed, "init"),
    };
    mc.validate()?;
    Ok(mc)
}

/// Per-task predictions of `params` on `docs`, skipping unlabelled documents.
pub fn task_predictions(
    params: &ModelParams,
    docs: &[EncodedDocument],
    exec: Execution,
) -> Result<Vec<TaskPredictions>> {
    let preds = predict(params, docs, exec)?;
    let mut out = Vec::new();
    for (t, (name, classes)) in params.config.tasks.iter().enumerate() {
        let mut truth = Vec::new();
        let mut pred = Vec::new();
        let mut ids = Vec::new();
        for (d, p) in docs.iter().zip(&preds) {
            if let Some(l) = d.labels[t] {
                truth.push(l);
                pred.push(p[t]);
                ids.push(d.id.clone());
            }
        }
        if truth.is_empty() {
            continue;
        }
        out.push(TaskPredictions::new(name.clone(), truth, pred, *classes)?.with_doc_ids(ids)?);
    }
    Ok(out)
}

/// Score `params` on `docs`.
pub fn score(
    params: &ModelParams,
    docs: &[EncodedDocument],
    cfg: &PipelineConfig,
) -> Result<MetricsReport> {
    let per_task = task_predictions(params, docs, cfg.exec)?;
    let names: Vec<&str> = params
        .config
        .tasks
        .iter()
        .map(|(n, _)| n.as_str())
        .collect();
    let sets: Vec<Vec<String>> = [&ALL_SIX[..], &SITE_LAT_BEH_HIST[..]]
        .iter()
        .filter(|set| set.iter().all(|t| names.contains(t)))
        .map(|set| set.iter().map(|s| s.to_string()).collect())
        .collect();
    let joint = |set: &[String]| -> Option<Vec<TaskPredictions>> {
        let idx: Vec<usize> = set
            .iter()
            .map(|s| names.iter().position(|n| n == s))
            .collect::<Option<_>>()?;
        let covered: Vec<EncodedDocument> = docs
            .iter()
            .filter(|d| idx.iter().all(|&t| d.labels[t].is_some()))
            .cloned()
            .collect();
        if covered.is_empty() {
            return None;
        }
        let all = task_predictions(params, &covered, cfg.exec).ok()?;
        Some(all.into_iter().filter(|p| set.contains(&p.task)).collect())
    };
    build_report(&per_task, &sets, &joint, &cfg.report_config())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskDelta {
    pub task: String,
    pub micro_f1: f64,
    pub macro_f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhenotypeDelta {
    pub tasks: Vec<String>,
    pub accuracy: f64,
}

/// Retrofitted minus baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Deltas {
    pub tasks: Vec<TaskDelta>,
    pub mean_micro_f1: f64,
    pub mean_macro_f1: f64,
    pub phenotypes: Vec<PhenotypeDelta>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub seed: u64,
    pub vocab_hash: String,
    pub baseline: MetricsReport,
    pub retrofitted: MetricsReport,
    pub deltas: Deltas,
}

fn deltas(base: &MetricsReport, retro: &MetricsReport) -> Deltas {
    Deltas {
        tasks: base
            .tasks
            .iter()
            .zip(&retro.tasks)
            .map(|(b, r)| TaskDelta {
                task: b.task.clone(),
                micro_f1: r.micro_f1 - b.micro_f1,
                macro_f1: r.macro_f1 - b.macro_f1,
            })
            .collect(),
        mean_micro_f1: retro.mean_micro_f1 - base.mean_micro_f1,
        mean_macro_f1: retro.mean_macro_f1 - base.mean_macro_f1,
        phenotypes: base
            .phenotypes
            .iter()
            .zip(&retro.phenotypes)
            .map(|(b, r)| PhenotypeDelta {
                tasks: b.tasks.clone(),
                accuracy: r.accuracy - b.accuracy,
            })
            .collect(),
    }
}

/// Score two checkpoints on the test split and write `report.json` and `report.tsv`.
pub fn evaluate(
    wd: &Workdir,
    baseline: &Path,
    retrofitted: &Path,
    cfg: &PipelineConfig,
) -> Result<EvalReport> {
    let (_, hash) = load_vocab(wd)?;
    check_meta(baseline, &hash)?;
    check_meta(retrofitted, &hash)?;
    let (docs, _) = load_encoded(wd, &hash)?;
    let test: Vec<EncodedDocument> = docs
        .into_iter()
        .filter(|d| d.split == Split::Test)
        .collect();
    if test.is_empty() {
        return Err(Error::Empty("test split"));
    }
    let base = score(&ModelParams::load(baseline)?, &test, cfg)?;
    let retro = score(&ModelParams::load(retrofitted)?, &test, cfg)?;
    let report = EvalReport {
        seed: cfg.seed,
        vocab_hash: hash,
        deltas: deltas(&base, &retro),
        baseline: base,
        retrofitted: retro,
    };
    write_json(&wd.report(), &report)?;
    let tsv = format!(
        "# baseline\n{}# retrofitted\n{}",
        report.baseline.to_tsv(),
        report.retrofitted.to_tsv()
    );
    std::fs::write(wd.report_tsv(), tsv).map_err(|e| Error::io(wd.report_tsv(), e))?;
    Ok(report)
}

pub const BASELINE: &str = "baseline";
pub const RETROFITTED: &str = "retrofitted";

/// Run every stage in order and return the evaluation report.
pub fn run_all(
    corpus: &Path,
    schema: Option<&Path>,
    concepts: &Path,
    wd: &Workdir,
    cfg: &PipelineConfig,
) -> Result<EvalReport> {
    preprocess(corpus, schema, wd, cfg)?;
    embed(wd, cfg)?;
    graph(wd, concepts, cfg)?;
    retrofit(wd, cfg)?;
    train(wd, &wd.embeddings(), BASELINE, cfg)?;
    train(wd, &wd.retrofitted(), RETROFITTED, cfg)?;
    evaluate(wd, &wd.model(BASELINE), &wd.model(RETROFITTED), cfg)
}

/// Paths of a generated synthetic benchmark.
#[derive(Debug, Clone)]
pub struct SynthFiles {
    pub corpus: PathBuf,
    pub schema: PathBuf,
    pub concepts: PathBuf,
}

/// Generate the synthetic corpus, its schema and concept file under `dir`.
pub fn write_synth(dir: &Path, synth: &SynthConfig) -> Result<SynthFiles> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let corpus = generate(synth)?;
    let files = SynthFiles {
        corpus: dir.join("corpus.jsonl"),
        schema: dir.join("synth.schema.json"),
        concepts: dir.join("concepts.tsv"),
    };
    write_corpus(&files.corpus, &corpus.documents)?;
    corpus.schema.save(&files.schema)?;
    write_concepts(&files.concepts, &corpus.concepts)?;
    Ok(files)
}

/// Generate the synthetic benchmark with `seed` and run the whole pipeline on it.
pub fn run_benchmark(dir: &Path, synth: &SynthConfig, cfg: &PipelineConfig) -> Result<EvalReport> {
    let synth = SynthConfig {
        seed: stage_seed(cfg.seed, "synth"),
        ..synth.clone()
    };
    let files = write_synth(dir, &synth)?;
    let wd = Workdir::new(dir.join("work"))?;
    run_all(
        &files.corpus,
        Some(&files.schema),
        &files.concepts,
        &wd,
        cfg,
    )
}
