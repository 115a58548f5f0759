use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::TrainConfig;
use super::model::{batch_gradients, predict, Gradients};
use super::params::ModelParams;
use crate::corpus::{EncodedDocument, PAD};
use crate::error::{Error, Result};
use crate::exec::splitmix64;
use crate::metrics::{macro_f1, TaskPredictions};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub learning_rate: f64,
    pub train_loss: f64,
    /// Validation macro-F1 per task; empty without validation documents.
    pub val_macro_f1: Vec<f64>,
    pub val_mean_macro_f1: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
    /// Epoch (1-based) whose parameters were returned; 0 when none ran.
    pub best_epoch: usize,
}

/// Momentum SGD state over every parameter group.
struct Momentum {
    embedding: Vec<f64>,
    groups: Vec<Vec<f64>>,
}

impl Momentum {
    fn new(params: &ModelParams) -> Self {
        let mut groups = Vec::new();
        for b in &params.conv {
            groups.push(vec![0.0; b.kernel.len()]);
            groups.push(vec![0.0; b.bias.len()]);
        }
        for h in &params.heads {
            groups.push(vec![0.0; h.weight.len()]);
            groups.push(vec![0.0; h.bias.len()]);
        }
        Momentum {
            embedding: vec![0.0; params.embedding.len()],
            groups,
        }
    }

    fn step(&mut self, params: &mut ModelParams, grads: &Gradients, lr: f64, mu: f64, l2: f64) {
        let d = params.dim();
        // embedding: rows without gradient still coast on their velocity
        for v in &mut self.embedding {
            *v *= mu;
        }
        for (&row, g) in &grads.embedding {
            let off = row as usize * d;
            for (v, gj) in self.embedding[off..off + d].iter_mut().zip(g) {
                *v -= lr * gj;
            }
        }
        for (p, v) in params.embedding.iter_mut().zip(&self.embedding) {
            *p += v;
        }
        params.embedding[PAD as usize * d..(PAD as usize + 1) * d].fill(0.0);

        let mut targets: Vec<(&mut Vec<f64>, bool)> = Vec::new();
        for b in &mut params.conv {
            targets.push((&mut b.kernel, true));
            targets.push((&mut b.bias, false));
        }
        for h in &mut params.heads {
            targets.push((&mut h.weight, true));
            targets.push((&mut h.bias, false));
        }
        let grad_groups = grads
            .conv_kernel
            .iter()
            .zip(&grads.conv_bias)
            .flat_map(|(k, b)| [k, b])
            .chain(
                grads
                    .head_weight
                    .iter()
                    .zip(&grads.head_bias)
                    .flat_map(|(w, b)| [w, b]),
            );
        for (((param, decay), vel), g) in targets.into_iter().zip(&mut self.groups).zip(grad_groups)
        {
            for j in 0..param.len() {
                let mut gj = g[j];
                if decay && l2 > 0.0 {
                    gj += l2 * param[j];
                }
                vel[j] = mu * vel[j] - lr * gj;
                param[j] += vel[j];
            }
        }
    }
}

fn dropout_mask(rate: f64, total: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let keep = 1.0 / (1.0 - rate);
    (0..total)
        .map(|_| if rng.gen::<f64>() < rate { 0.0 } else { keep })
        .collect()
}

/// Per-task macro-F1 of `params` on labelled documents.
pub fn macro_f1_per_task(
    params: &ModelParams,
    docs: &[EncodedDocument],
    exec: crate::Execution,
) -> Result<Vec<f64>> {
    let preds = predict(params, docs, exec)?;
    params
        .config
        .tasks
        .iter()
        .enumerate()
        .map(|(t, (name, classes))| {
            let (truth, pred): (Vec<usize>, Vec<usize>) = docs
                .iter()
                .zip(&preds)
                .filter_map(|(d, p)| d.labels[t].map(|l| (l, p[t])))
                .unzip();
            if truth.is_empty() {
                return Ok(0.0);
            }
            macro_f1(&TaskPredictions::new(name.clone(), truth, pred, *classes)?)
        })
        .collect()
}

/// Train with mini-batch momentum SGD, returning the parameters of the epoch
/// with the best mean validation macro-F1 (the last epoch when there is no
/// validation set). Shuffling and dropout derive from `cfg.seed` only.
pub fn train(
    mut params: ModelParams,
    train_docs: &[EncodedDocument],
    val_docs: &[EncodedDocument],
    cfg: &TrainConfig,
) -> Result<(ModelParams, TrainHistory)> {
    cfg.validate()?;
    if train_docs.is_empty() {
        return Err(Error::Empty("training set"));
    }
    let mut history = TrainHistory {
        epochs: Vec::new(),
        best_epoch: 0,
    };
    if cfg.epochs == 0 {
        return Ok((params, history));
    }
    let mut momentum = Momentum::new(&params);
    let mut best: Option<(f64, ModelParams)> = None;
    let mut since_best = 0;
    let mut order: Vec<usize> = (0..train_docs.len()).collect();
    let mut lr = cfg.learning_rate;
    let total_filters = params.config.total_filters();

    for epoch in 1..=cfg.epochs {
        let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(cfg.seed ^ ((epoch as u64) << 32)));
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for (b, idx) in order.chunks(cfg.batch_size).enumerate() {
            let batch: Vec<&EncodedDocument> = idx.iter().map(|&i| &train_docs[i]).collect();
            let batch_seed = splitmix64(cfg.seed ^ ((epoch as u64) << 40) ^ b as u64);
            let (loss, mut grads) = batch_gradients(&params, &batch, cfg.exec, |k| {
                (cfg.dropout > 0.0).then(|| {
                    dropout_mask(
                        cfg.dropout,
                        total_filters,
                        splitmix64(batch_seed ^ k as u64),
                    )
                })
            })?;
            if let Some(clip) = cfg.clip_norm {
                let n = grads.norm();
                if n > clip {
                    grads.scale(clip / n);
                }
            }
            momentum.step(&mut params, &grads, lr, cfg.momentum, cfg.l2);
            loss_sum += loss * batch.len() as f64;
        }
        if !params.all_finite() {
            return Err(Error::Diverged(format!(
                "non-finite parameters after epoch {epoch}"
            )));
        }
        let (val_macro_f1, val_mean) = if val_docs.is_empty() {
            (Vec::new(), None)
        } else {
            let per_task = macro_f1_per_task(&params, val_docs, cfg.exec)?;
            let mean = per_task.iter().sum::<f64>() / per_task.len() as f64;
            (per_task, Some(mean))
        };
        history.epochs.push(EpochRecord {
            epoch,
            learning_rate: lr,
            train_loss: loss_sum / train_docs.len() as f64,
            val_macro_f1,
            val_mean_macro_f1: val_mean,
        });
        let score = val_mean.unwrap_or(epoch as f64);
        if best.as_ref().is_none_or(|(s, _)| score > *s) {
            best = Some((score, params.clone()));
            history.best_epoch = epoch;
            since_best = 0;
        } else {
            since_best += 1;
            if matches!(cfg.patience, Some(p) if since_best >= p) {
                break;
            }
        }
        lr *= cfg.lr_decay;
    }
    let (_, best_params) = best.expect("at least one epoch ran");
    Ok((best_params, history))
}
