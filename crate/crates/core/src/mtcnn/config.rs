use serde::{Deserialize, Serialize};

use crate::corpus::Task;
use crate::error::{Error, Result};
use crate::exec::Execution;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub embedding_dim: usize,
    pub doc_length: usize,
    pub window_sizes: Vec<usize>,
    pub filters_per_window: usize,
    /// `(task name, class count)` in head order.
    pub tasks: Vec<(String, usize)>,
    pub task_weights: Vec<f64>,
    pub seed: u64,
}

impl ModelConfig {
    /// Full-scale defaults: windows 3/4/5 with 300 filters each and the six
    /// registry tasks at their coding-schema sizes.
    pub fn full_scale(embedding_dim: usize) -> Self {
        let tasks: Vec<(String, usize)> = Task::ALL
            .iter()
            .map(|t| (t.name().to_string(), t.default_class_count()))
            .collect();
        ModelConfig {
            embedding_dim,
            doc_length: crate::corpus::DEFAULT_LENGTH,
            window_sizes: vec![3, 4, 5],
            filters_per_window: 300,
            task_weights: vec![1.0; tasks.len()],
            tasks,
            seed: 1,
        }
    }

    pub fn total_filters(&self) -> usize {
        self.window_sizes.len() * self.filters_per_window
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.embedding_dim == 0 || self.doc_length == 0 || self.filters_per_window == 0 {
            return bad("embedding_dim, doc_length and filters_per_window must be positive".into());
        }
        if self.window_sizes.is_empty() {
            return bad("at least one window size is required".into());
        }
        for &k in &self.window_sizes {
            if k == 0 || k > self.doc_length {
                return bad(format!(
                    "window size {k} must be in 1..={}",
                    self.doc_length
                ));
            }
        }
        if self.tasks.is_empty() {
            return bad("at least one task is required".into());
        }
        for (name, classes) in &self.tasks {
            if *classes < 2 {
                return bad(format!("task {name} needs at least 2 classes"));
            }
        }
        if self.task_weights.len() != self.tasks.len() {
            return bad("one loss weight per task is required".into());
        }
        if self
            .task_weights
            .iter()
            .any(|w| !(*w >= 0.0) || !w.is_finite())
        {
            return bad("task weights must be finite and >= 0".into());
        }
        if self.task_weights.iter().all(|&w| w == 0.0) {
            return bad("task weights must not all be zero".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    /// Multiplicative learning-rate decay applied after every epoch.
    pub lr_decay: f64,
    /// Clip the global gradient norm of each step; `None` disables clipping.
    pub clip_norm: Option<f64>,
    /// Stop after this many epochs without a better validation score.
    pub patience: Option<usize>,
    /// Dropout rate on the pooled features; 0 disables.
    pub dropout: f64,
    /// L2 penalty on convolution and head weights; 0 disables.
    pub l2: f64,
    pub seed: u64,
    #[serde(skip)]
    pub exec: Execution,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 10,
            batch_size: 32,
            learning_rate: 0.05,
            momentum: 0.9,
            lr_decay: 1.0,
            clip_norm: Some(5.0),
            patience: Some(3),
            dropout: 0.0,
            l2: 0.0,
            seed: 1,
            exec: Execution::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be positive".into()));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::Config("learning rate must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.momentum) || !(self.lr_decay > 0.0) {
            return Err(Error::Config(
                "momentum must be in [0, 1) and lr_decay > 0".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.dropout) || self.l2 < 0.0 {
            return Err(Error::Config(
                "dropout must be in [0, 1) and l2 >= 0".into(),
            ));
        }
        if matches!(self.clip_norm, Some(c) if !(c > 0.0)) {
            return Err(Error::Config("clip norm must be positive".into()));
        }
        Ok(())
    }
}
