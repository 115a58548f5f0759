//! Classification metrics: micro/macro-F1, percentile bootstrap intervals,
//! prevalence-stratified accuracy and joint (phenotype) accuracy.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;

/// True and predicted class indices for one task over the same documents.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskPredictions {
    pub task: String,
    pub truth: Vec<usize>,
    pub pred: Vec<usize>,
    pub classes: usize,
    /// Optional document ids, used to check alignment across tasks.
    pub doc_ids: Vec<String>,
}

impl TaskPredictions {
    pub fn new(
        task: impl Into<String>,
        truth: Vec<usize>,
        pred: Vec<usize>,
        classes: usize,
    ) -> Result<Self> {
        let task = task.into();
        if truth.is_empty() {
            return Err(Error::Empty("predictions"));
        }
        if truth.len() != pred.len() {
            return Err(Error::Misaligned(format!(
                "task {task}: {} true labels vs {} predictions",
                truth.len(),
                pred.len()
            )));
        }
        if let Some(&bad) = truth.iter().chain(&pred).find(|&&c| c >= classes) {
            return Err(Error::LabelOutOfRange {
                task,
                label: bad,
                classes,
            });
        }
        Ok(TaskPredictions {
            task,
            truth,
            pred,
            classes,
            doc_ids: Vec::new(),
        })
    }

    pub fn with_doc_ids(mut self, ids: Vec<String>) -> Result<Self> {
        if ids.len() != self.truth.len() {
            return Err(Error::Misaligned(format!("task {}: id count", self.task)));
        }
        self.doc_ids = ids;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.truth.len()
    }

    pub fn is_empty(&self) -> bool {
        self.truth.is_empty()
    }

    pub fn accuracy(&self) -> f64 {
        let correct = self
            .truth
            .iter()
            .zip(&self.pred)
            .filter(|(t, p)| t == p)
            .count();
        correct as f64 / self.len() as f64
    }

    fn resample(&self, idx: &[usize]) -> TaskPredictions {
        TaskPredictions {
            task: self.task.clone(),
            truth: idx.iter().map(|&i| self.truth[i]).collect(),
            pred: idx.iter().map(|&i| self.pred[i]).collect(),
            classes: self.classes,
            doc_ids: Vec::new(),
        }
    }
}

/// Per-class (tp, fp, fn) from a single pass.
fn class_counts(p: &TaskPredictions) -> Vec<[u64; 3]> {
    let mut counts = vec![[0u64; 3]; p.classes];
    for (&t, &y) in p.truth.iter().zip(&p.pred) {
        if t == y {
            counts[t][0] += 1;
        } else {
            counts[y][1] += 1;
            counts[t][2] += 1;
        }
    }
    counts
}

fn f1(tp: u64, fp: u64, fn_: u64) -> f64 {
    let denom = 2 * tp + fp + fn_;
    if denom == 0 {
        0.0
    } else {
        (2 * tp) as f64 / denom as f64
    }
}

/// F1 over counts pooled across classes. For single-label multiclass data
/// this equals accuracy.
pub fn micro_f1(p: &TaskPredictions) -> Result<f64> {
    if p.is_empty() {
        return Err(Error::Empty("predictions"));
    }
    let (tp, fp, fn_) = class_counts(p)
        .iter()
        .fold((0, 0, 0), |(a, b, c), k| (a + k[0], b + k[1], c + k[2]));
    Ok(f1(tp, fp, fn_))
}

/// Which classes enter the macro average.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MacroUniverse {
    /// Classes appearing in the true labels or the predictions.
    #[default]
    Observed,
    /// Every schema class; classes never seen contribute F1 = 0.
    Schema,
}

/// Unweighted mean of per-class F1 over observed classes.
pub fn macro_f1(p: &TaskPredictions) -> Result<f64> {
    macro_f1_with(p, MacroUniverse::Observed)
}

pub fn macro_f1_with(p: &TaskPredictions, universe: MacroUniverse) -> Result<f64> {
    if p.is_empty() {
        return Err(Error::Empty("predictions"));
    }
    let counts = class_counts(p);
    let scores: Vec<f64> = counts
        .iter()
        .filter(|k| universe == MacroUniverse::Schema || k.iter().any(|&c| c > 0))
        .map(|k| f1(k[0], k[1], k[2]))
        .collect();
    Ok(scores.iter().sum::<f64>() / scores.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Micro,
    Macro(MacroUniverse),
}

impl Metric {
    pub fn eval(self, p: &TaskPredictions) -> Result<f64> {
        match self {
            Metric::Micro => micro_f1(p),
            Metric::Macro(u) => macro_f1_with(p, u),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BootstrapConfig {
    pub resamples: usize,
    pub level: f64,
    pub seed: u64,
    pub exec: Execution,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        BootstrapConfig {
            resamples: 1000,
            level: 0.95,
            seed: 1,
            exec: Execution::default(),
        }
    }
}

/// Linear interpolation between order statistics of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Percentile bootstrap interval of `metric`.
///
/// Resample `r` draws from its own ChaCha stream of `cfg.seed`, so the
/// interval does not depend on how resamples are scheduled across threads.
pub fn bootstrap_ci(
    p: &TaskPredictions,
    metric: Metric,
    cfg: &BootstrapConfig,
) -> Result<(f64, f64)> {
    if p.is_empty() {
        return Err(Error::Empty("predictions"));
    }
    if cfg.resamples < 100 {
        return Err(Error::Config(
            "bootstrap needs at least 100 resamples".into(),
        ));
    }
    if !(cfg.level > 0.0 && cfg.level < 1.0) {
        return Err(Error::Config("bootstrap level must be in (0, 1)".into()));
    }
    let n = p.len();
    let values = cfg.exec.map_range(cfg.resamples, |r| {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(r as u64);
        let idx: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
        metric.eval(&p.resample(&idx))
    });
    let mut values = values.into_iter().collect::<Result<Vec<f64>>>()?;
    values.sort_by(f64::total_cmp);
    let tail = (1.0 - cfg.level) / 2.0;
    Ok((quantile(&values, tail), quantile(&values, 1.0 - tail)))
}

/// Fraction of documents for which every task in `subset` is predicted correctly.
pub fn phenotype_accuracy(tasks: &[TaskPredictions], subset: &[&str]) -> Result<f64> {
    let chosen = subset
        .iter()
        .map(|name| {
            tasks
                .iter()
                .find(|t| t.task == *name)
                .ok_or_else(|| Error::UnknownTask(name.to_string()))
        })
        .collect::<Result<Vec<_>>>()?;
    let Some(first) = chosen.first() else {
        return Err(Error::Empty("task subset"));
    };
    for t in &chosen[1..] {
        if t.len() != first.len()
            || (!t.doc_ids.is_empty() && !first.doc_ids.is_empty() && t.doc_ids != first.doc_ids)
        {
            return Err(Error::Misaligned(format!(
                "tasks {} and {} cover different documents",
                first.task, t.task
            )));
        }
    }
    let n = first.len();
    let correct = (0..n)
        .filter(|&i| chosen.iter().all(|t| t.truth[i] == t.pred[i]))
        .count();
    Ok(correct as f64 / n as f64)
}

/// Accuracy on documents whose true class is among the most prevalent and
/// among the least prevalent `quantile` of classes.
///
/// Classes are ranked by true-label frequency; the stratum size is
/// `ceil(quantile * classes)` (at least one) and classes tied with the
/// boundary class are included.
pub fn prevalence_strata(p: &TaskPredictions, quantile: f64) -> Result<(f64, f64)> {
    if p.is_empty() {
        return Err(Error::Empty("predictions"));
    }
    if !(quantile > 0.0 && quantile <= 1.0) {
        return Err(Error::Config("quantile must be in (0, 1]".into()));
    }
    let mut freq: BTreeMap<usize, usize> = BTreeMap::new();
    for &t in &p.truth {
        *freq.entry(t).or_insert(0) += 1;
    }
    if freq.len() < 2 {
        return Err(Error::Config(
            "prevalence strata need at least 2 distinct true classes".into(),
        ));
    }
    let mut sorted: Vec<usize> = freq.values().copied().collect();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    let m = ((quantile * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    let top_cut = sorted[m - 1];
    let bottom_cut = sorted[sorted.len() - m];
    let stratum_acc = |keep: &dyn Fn(usize) -> bool| {
        let (mut n, mut ok) = (0usize, 0usize);
        for (&t, &y) in p.truth.iter().zip(&p.pred) {
            if keep(freq[&t]) {
                n += 1;
                ok += usize::from(t == y);
            }
        }
        ok as f64 / n as f64
    };
    Ok((
        stratum_acc(&|f| f >= top_cut),
        stratum_acc(&|f| f <= bottom_cut),
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Strata {
    pub quantile: f64,
    pub most_prevalent_accuracy: f64,
    pub least_prevalent_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskMetrics {
    pub task: String,
    pub documents: usize,
    pub micro_f1: f64,
    pub micro_f1_ci: Interval,
    pub macro_f1: f64,
    pub macro_f1_ci: Interval,
    pub strata: Option<Strata>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhenotypeMetrics {
    pub tasks: Vec<String>,
    pub documents: usize,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub resamples: usize,
    pub level: f64,
    pub seed: u64,
    pub macro_universe: MacroUniverse,
    pub tasks: Vec<TaskMetrics>,
    pub mean_micro_f1: f64,
    pub mean_macro_f1: f64,
    pub phenotypes: Vec<PhenotypeMetrics>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReportConfig {
    pub bootstrap: BootstrapConfig,
    pub macro_universe: MacroUniverse,
    pub strata_quantile: f64,
}

impl Default for ReportConfig {
    fn default() -> Self {
        ReportConfig {
            bootstrap: BootstrapConfig::default(),
            macro_universe: MacroUniverse::Observed,
            strata_quantile: 0.1,
        }
    }
}

pub const ALL_SIX: [&str; 6] = [
    "site",
    "subsite",
    "laterality",
    "behavior",
    "histology",
    "grade",
];
pub const SITE_LAT_BEH_HIST: [&str; 4] = ["site", "laterality", "behavior", "histology"];

/// Build the full report. `phenotype_sets` are task subsets scored jointly;
/// each is evaluated over the documents labelled for all of its tasks, and
/// subsets naming tasks absent from `tasks` are skipped.
pub fn build_report(
    tasks: &[TaskPredictions],
    phenotype_sets: &[Vec<String>],
    joint: &dyn Fn(&[String]) -> Option<Vec<TaskPredictions>>,
    cfg: &ReportConfig,
) -> Result<MetricsReport> {
    let macro_metric = Metric::Macro(cfg.macro_universe);
    let mut per_task = Vec::with_capacity(tasks.len());
    for (k, p) in tasks.iter().enumerate() {
        let boot = BootstrapConfig {
            seed: crate::exec::splitmix64(cfg.bootstrap.seed ^ k as u64),
            ..cfg.bootstrap
        };
        let (mlo, mhi) = bootstrap_ci(p, Metric::Micro, &boot)?;
        let (alo, ahi) = bootstrap_ci(p, macro_metric, &boot)?;
        let strata = prevalence_strata(p, cfg.strata_quantile)
            .ok()
            .map(|(most, least)| Strata {
                quantile: cfg.strata_quantile,
                most_prevalent_accuracy: most,
                least_prevalent_accuracy: least,
            });
        per_task.push(TaskMetrics {
            task: p.task.clone(),
            documents: p.len(),
            micro_f1: micro_f1(p)?,
            micro_f1_ci: Interval { lo: mlo, hi: mhi },
            macro_f1: macro_metric.eval(p)?,
            macro_f1_ci: Interval { lo: alo, hi: ahi },
            strata,
        });
    }
    let mut phenotypes = Vec::new();
    for set in phenotype_sets {
        if let Some(aligned) = joint(set) {
            if aligned.first().is_some_and(|t| !t.is_empty()) {
                let names: Vec<&str> = set.iter().map(String::as_str).collect();
                phenotypes.push(PhenotypeMetrics {
                    tasks: set.clone(),
                    documents: aligned[0].len(),
                    accuracy: phenotype_accuracy(&aligned, &names)?,
                });
            }
        }
    }
    let n = per_task.len().max(1) as f64;
    Ok(MetricsReport {
        resamples: cfg.bootstrap.resamples,
        level: cfg.bootstrap.level,
        seed: cfg.bootstrap.seed,
        macro_universe: cfg.macro_universe,
        mean_micro_f1: per_task.iter().map(|t| t.micro_f1).sum::<f64>() / n,
        mean_macro_f1: per_task.iter().map(|t| t.macro_f1).sum::<f64>() / n,
        tasks: per_task,
        phenotypes,
    })
}

impl MetricsReport {
    /// Task x {micro, macro} x {point, lo, hi} at three decimals.
    pub fn to_tsv(&self) -> String {
        let mut out =
            String::from("task\tmicro_f1\tmicro_lo\tmicro_hi\tmacro_f1\tmacro_lo\tmacro_hi\n");
        for t in &self.tasks {
            out.push_str(&format!(
                "{}\t{:.3}\t{:.3}\t{:.3}\t{:.3}\t{:.3}\t{:.3}\n",
                t.task,
                t.micro_f1,
                t.micro_f1_ci.lo,
                t.micro_f1_ci.hi,
                t.macro_f1,
                t.macro_f1_ci.lo,
                t.macro_f1_ci.hi
            ));
        }
        out
    }
}
