use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use retrokg::metrics::MacroUniverse;
use retrokg::pipeline::{self, PipelineConfig, Workdir};
use retrokg::retrofit::{Alpha, BetaScheme, SweepOrder, UpdateMode};
use retrokg::synth::SynthConfig;
use retrokg::Execution;

/// Retrofit word embeddings to a concept graph and measure the effect on a
/// multitask CNN document classifier.
#[derive(Parser, Debug)]
#[command(author, version, about, long_about = None)]
struct Cli {
    /// Global seed; every stage derives its own seed from it.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory holding the stage artifacts.
    #[arg(long, global = true, default_value = "work")]
    workdir: PathBuf,
    /// JSON pipeline config; explicit flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Run every stage on the calling thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Tokenize, split and encode a JSON Lines corpus.
    Preprocess(PreprocessArgs),
    /// Train skip-gram negative-sampling vectors.
    Embed(EmbedArgs),
    /// Build the synonym graph from a concept file.
    Graph(GraphArgs),
    /// Retrofit the vectors to the graph.
    Retrofit(RetrofitArgs),
    /// Train the multitask CNN from baseline or retrofitted vectors.
    Train(TrainArgs),
    /// Compare two checkpoints on the test split.
    Eval(EvalArgs),
    /// Generate the synthetic synonym-substitution benchmark.
    Synth(SynthArgs),
}

#[derive(Args, Debug)]
struct PreprocessArgs {
    #[arg(long)]
    corpus: PathBuf,
    /// Label schema JSON; derived from the corpus labels when absent.
    #[arg(long)]
    schema: Option<PathBuf>,
    #[arg(long)]
    min_df: Option<u64>,
    /// Encoded document length in tokens.
    #[arg(long)]
    length: Option<usize>,
    /// First test day (YYYY-MM-DD) for documents without an explicit split.
    #[arg(long)]
    cutoff: Option<String>,
    #[arg(long)]
    val_fraction: Option<f64>,
}

#[derive(Args, Debug)]
struct EmbedArgs {
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    window: Option<usize>,
    #[arg(long)]
    negatives: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
}

#[derive(Args, Debug)]
struct GraphArgs {
    /// Tab-separated `CUI SOURCE NAME` rows.
    #[arg(long)]
    concepts: PathBuf,
    /// Use only the first name listed under each CUI.
    #[arg(long)]
    first_name_only: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Beta {
    InvDegree,
    Const,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Order {
    Ascending,
    Descending,
}

#[derive(Args, Debug)]
struct RetrofitArgs {
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, value_enum)]
    beta: Option<Beta>,
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long, value_enum)]
    order: Option<Order>,
    /// Update every word from the previous sweep (parallel, not monotone).
    #[arg(long)]
    jacobi: bool,
}

#[derive(Args, Debug)]
struct TrainArgs {
    /// `baseline`, `retrofitted`, or a path to an embedding file.
    #[arg(long, default_value = "baseline")]
    embeddings: String,
    /// Checkpoint name inside the work directory; defaults to the embeddings name.
    #[arg(long)]
    name: Option<String>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    filters: Option<usize>,
    /// Comma-separated convolution window sizes.
    #[arg(long, value_delimiter = ',')]
    windows: Option<Vec<usize>>,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[arg(long)]
    baseline: Option<PathBuf>,
    #[arg(long)]
    retrofitted: Option<PathBuf>,
    #[arg(long)]
    resamples: Option<usize>,
    #[arg(long)]
    level: Option<f64>,
    /// Average macro-F1 over every schema class instead of observed classes.
    #[arg(long)]
    macro_over_schema: bool,
}

#[derive(Args, Debug)]
struct SynthArgs {
    /// Output directory for the corpus, schema and concept file.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    train_docs: Option<usize>,
    #[arg(long)]
    validation_docs: Option<usize>,
    #[arg(long)]
    test_docs: Option<usize>,
    #[arg(long)]
    synonyms: Option<usize>,
    /// Comma-separated class counts for the six tasks, in schema order.
    #[arg(long, value_delimiter = ',')]
    classes: Option<Vec<usize>>,
    /// Keep the training synonym in test documents.
    #[arg(long)]
    no_substitution: bool,
    /// Also run every stage with the benchmark settings into `<out>/work`.
    #[arg(long)]
    run: bool,
}

fn bad_input(e: impl Into<anyhow::Error>) -> anyhow::Error {
    anyhow::Error::new(BadInputMarker).context(e.into().to_string())
}

/// Marks an error caused by the caller's input rather than by the program.
#[derive(Debug)]
struct BadInputMarker;

impl std::fmt::Display for BadInputMarker {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("bad input")
    }
}

impl std::error::Error for BadInputMarker {}

/// Core errors are input problems except numerical divergence.
fn classify(e: retrokg::Error) -> anyhow::Error {
    match e {
        retrokg::Error::Diverged(_) => anyhow::Error::new(e),
        other => bad_input(other),
    }
}

fn print_json(value: &serde_json::Value) {
    println!(
        "{}",
        serde_json::to_string_pretty(value).expect("serializable")
    );
}

fn resolve(cli: &Cli, benchmark: bool) -> anyhow::Result<PipelineConfig> {
    let mut cfg = match &cli.config {
        Some(path) => PipelineConfig::load(path).map_err(classify)?,
        None if benchmark => PipelineConfig::benchmark(1),
        None => PipelineConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if cli.sequential {
        cfg.exec = Execution::Sequential;
    }
    match &cli.command {
        Command::Preprocess(a) => {
            set(&mut cfg.corpus.min_df, a.min_df);
            set(&mut cfg.corpus.length, a.length);
            set(&mut cfg.corpus.cutoff, a.cutoff.clone());
            set(&mut cfg.corpus.validation_fraction, a.val_fraction);
        }
        Command::Embed(a) => {
            set(&mut cfg.sgns.dim, a.dim);
            set(&mut cfg.sgns.window, a.window);
            set(&mut cfg.sgns.negatives, a.negatives);
            set(&mut cfg.sgns.epochs, a.epochs);
            set(&mut cfg.sgns.learning_rate, a.lr);
        }
        Command::Graph(a) => {
            cfg.graph.first_name_only |= a.first_name_only;
        }
        Command::Retrofit(a) => {
            if let Some(alpha) = a.alpha {
                cfg.retrofit.alpha = Alpha::Uniform(alpha);
            }
            if let Some(beta) = a.beta {
                cfg.retrofit.beta = match beta {
                    Beta::InvDegree => BetaScheme::InvDegree,
                    Beta::Const => BetaScheme::Const,
                };
            }
            if let Some(order) = a.order {
                cfg.retrofit.order = match order {
                    Order::Ascending => SweepOrder::Ascending,
                    Order::Descending => SweepOrder::Descending,
                };
            }
            set(&mut cfg.retrofit.iterations, a.iters);
            set(&mut cfg.retrofit.tolerance, a.tol);
            if a.jacobi {
                cfg.retrofit.mode = UpdateMode::Jacobi;
            }
        }
        Command::Train(a) => {
            set(&mut cfg.training.epochs, a.epochs);
            set(&mut cfg.training.batch_size, a.batch_size);
            set(&mut cfg.training.learning_rate, a.lr);
            set(&mut cfg.model.filters_per_window, a.filters);
            set(&mut cfg.model.window_sizes, a.windows.clone());
        }
        Command::Eval(a) => {
            set(&mut cfg.metrics.resamples, a.resamples);
            set(&mut cfg.metrics.level, a.level);
            if a.macro_over_schema {
                cfg.metrics.macro_universe = MacroUniverse::Schema;
            }
        }
        Command::Synth(_) => {}
    }
    Ok(cfg)
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn echo(cfg: &PipelineConfig) {
    eprintln!("seed: {}", cfg.seed);
    eprintln!(
        "resolved config: {}",
        serde_json::to_string(cfg).expect("serializable")
    );
}

fn require(path: &Path) -> anyhow::Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(bad_input(anyhow::anyhow!(
            "{}: no such file",
            path.display()
        )))
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let benchmark = matches!(&cli.command, Command::Synth(a) if a.run);
    let cfg = resolve(&cli, benchmark)?;
    echo(&cfg);
    let wd = || Workdir::new(&cli.workdir).map_err(classify);
    match &cli.command {
        Command::Preprocess(a) => {
            require(&a.corpus)?;
            let summary = pipeline::preprocess(&a.corpus, a.schema.as_deref(), &wd()?, &cfg)
                .map_err(classify)?;
            for (task, n, full) in &summary.reduced_tasks {
                eprintln!("warning: task {task} has {n} classes (full schema: {full})");
            }
            print_json(&json!(summary));
        }
        Command::Embed(_) => {
            let summary = pipeline::embed(&wd()?, &cfg).map_err(classify)?;
            print_json(&json!(summary));
        }
        Command::Graph(a) => {
            require(&a.concepts)?;
            let stats = pipeline::graph(&wd()?, &a.concepts, &cfg).map_err(classify)?;
            print_json(&json!(stats));
        }
        Command::Retrofit(_) => {
            let trace = pipeline::retrofit(&wd()?, &cfg).map_err(classify)?;
            print_json(&json!(trace));
        }
        Command::Train(a) => {
            let wd = wd()?;
            let (path, default_name) = match a.embeddings.as_str() {
                "baseline" => (wd.embeddings(), pipeline::BASELINE.to_string()),
                "retrofitted" => (wd.retrofitted(), pipeline::RETROFITTED.to_string()),
                other => {
                    let p = PathBuf::from(other);
                    let stem = p
                        .file_stem()
                        .unwrap_or_default()
                        .to_string_lossy()
                        .into_owned();
                    (p, stem)
                }
            };
            require(&path)?;
            let name = a.name.clone().unwrap_or(default_name);
            let history = pipeline::train(&wd, &path, &name, &cfg).map_err(classify)?;
            print_json(&json!({
                "checkpoint": wd.model(&name),
                "best_epoch": history.best_epoch,
                "epochs": history.epochs,
            }));
        }
        Command::Eval(a) => {
            let wd = wd()?;
            let base = a
                .baseline
                .clone()
                .unwrap_or_else(|| wd.model(pipeline::BASELINE));
            let retro = a
                .retrofitted
                .clone()
                .unwrap_or_else(|| wd.model(pipeline::RETROFITTED));
            require(&base)?;
            require(&retro)?;
            let report = pipeline::evaluate(&wd, &base, &retro, &cfg).map_err(classify)?;
            print_json(&json!(report));
        }
        Command::Synth(a) => {
            let defaults = SynthConfig::default();
            let mut synth = SynthConfig {
                seed: retrokg::stage_seed(cfg.seed, "synth"),
                substitute_test: !a.no_substitution,
                ..defaults.clone()
            };
            set(&mut synth.train_docs, a.train_docs);
            set(&mut synth.validation_docs, a.validation_docs);
            set(&mut synth.test_docs, a.test_docs);
            set(&mut synth.synonyms, a.synonyms);
            if let Some(classes) = &a.classes {
                if classes.len() > defaults.tasks.len() {
                    return Err(bad_input(anyhow::anyhow!(
                        "--classes takes at most {} counts",
                        defaults.tasks.len()
                    )));
                }
                synth.tasks = defaults
                    .tasks
                    .iter()
                    .zip(classes)
                    .map(|(&(t, _), &c)| (t, c))
                    .collect();
            }
            eprintln!(
                "synth config: {}",
                serde_json::to_string(&synth).expect("serializable")
            );
            let files = pipeline::write_synth(&a.out, &synth).map_err(classify)?;
            if a.run {
                let wd = Workdir::new(a.out.join("work")).map_err(classify)?;
                let report = pipeline::run_all(
                    &files.corpus,
                    Some(&files.schema),
                    &files.concepts,
                    &wd,
                    &cfg,
                )
                .map_err(classify)?;
                print_json(&json!(report));
            } else {
                print_json(&json!({
                    "corpus": files.corpus,
                    "schema": files.schema,
                    "concepts": files.concepts,
                }));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.chain().any(|c| c.is::<BadInputMarker>()) {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
