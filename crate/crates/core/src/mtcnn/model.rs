//! Forward pass, multitask loss and exact backpropagation.

use std::collections::BTreeMap;

use super::params::ModelParams;
use crate::corpus::{EncodedDocument, PAD};
use crate::embed::dot;
use crate::error::{Error, Result};
use crate::exec::Execution;

/// Intermediate values of one forward pass, kept for backpropagation.
#[derive(Debug, Clone)]
pub struct Activations {
    /// Max-pooled rectified features, concatenated over windows.
    pub pooled: Vec<f64>,
    /// Per global filter: start position of the maximizing window, or `None`
    /// when the maximum pre-activation is not positive.
    pub argmax: Vec<Option<usize>>,
    /// Softmax output per task.
    pub probs: Vec<Vec<f64>>,
}

fn check_doc(params: &ModelParams, doc: &EncodedDocument) -> Result<()> {
    let len = params.config.doc_length;
    if doc.token_ids.len() != len {
        return Err(Error::LengthMismatch {
            expected: len,
            found: doc.token_ids.len(),
        });
    }
    if let Some(&t) = doc
        .token_ids
        .iter()
        .find(|&&t| t as usize >= params.vocab_size)
    {
        return Err(Error::VocabularyMismatch(format!(
            "document {} has id {t} outside vocabulary of {}",
            doc.id, params.vocab_size
        )));
    }
    Ok(())
}

pub(crate) fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Gather the document matrix, `doc_length x dim`, row-major.
fn gather(params: &ModelParams, doc: &EncodedDocument) -> Vec<f64> {
    let mut x = Vec::with_capacity(doc.token_ids.len() * params.dim());
    for &t in &doc.token_ids {
        x.extend_from_slice(params.embedding_row(t));
    }
    x
}

fn pool(params: &ModelParams, x: &[f64]) -> (Vec<f64>, Vec<Option<usize>>) {
    let d = params.dim();
    let len = params.config.doc_length;
    let f = params.config.filters_per_window;
    let mut pooled = Vec::with_capacity(params.config.total_filters());
    let mut argmax = Vec::with_capacity(params.config.total_filters());
    let mut best = vec![0.0f64; f];
    let mut best_pos = vec![0usize; f];
    for bank in &params.conv {
        let kd = bank.window * d;
        best.fill(f64::NEG_INFINITY);
        for p in 0..=len - bank.window {
            let slice = &x[p * d..p * d + kd];
            for (fi, (kernel, bias)) in bank.kernel.chunks_exact(kd).zip(&bank.bias).enumerate() {
                let z = bias + dot(kernel, slice);
                if z > best[fi] {
                    best[fi] = z;
                    best_pos[fi] = p;
                }
            }
        }
        for fi in 0..f {
            if best[fi] > 0.0 {
                pooled.push(best[fi]);
                argmax.push(Some(best_pos[fi]));
            } else {
                pooled.push(0.0);
                argmax.push(None);
            }
        }
    }
    (pooled, argmax)
}

fn heads(params: &ModelParams, pooled: &[f64]) -> Vec<Vec<f64>> {
    let total = pooled.len();
    params
        .heads
        .iter()
        .map(|h| {
            let logits: Vec<f64> = h
                .weight
                .chunks_exact(total)
                .zip(&h.bias)
                .map(|(row, b)| b + dot(row, pooled))
                .collect();
            softmax(&logits)
        })
        .collect()
}

/// Forward pass with rectified convolutions, max-over-time pooling and one
/// softmax head per task.
pub fn forward_activations(params: &ModelParams, doc: &EncodedDocument) -> Result<Activations> {
    check_doc(params, doc)?;
    let x = gather(params, doc);
    let (pooled, argmax) = pool(params, &x);
    let probs = heads(params, &pooled);
    Ok(Activations {
        pooled,
        argmax,
        probs,
    })
}

/// Per-task probability vectors for one document.
pub fn forward(params: &ModelParams, doc: &EncodedDocument) -> Result<Vec<Vec<f64>>> {
    Ok(forward_activations(params, doc)?.probs)
}

fn check_labels(params: &ModelParams, doc: &EncodedDocument) -> Result<()> {
    if doc.labels.len() != params.heads.len() {
        return Err(Error::Misaligned(format!(
            "document {} has {} labels for {} tasks",
            doc.id,
            doc.labels.len(),
            params.heads.len()
        )));
    }
    for ((name, classes), label) in params.config.tasks.iter().zip(&doc.labels) {
        if let Some(l) = *label {
            if l >= *classes {
                return Err(Error::LabelOutOfRange {
                    task: name.clone(),
                    label: l,
                    classes: *classes,
                });
            }
        }
    }
    Ok(())
}

fn doc_loss(params: &ModelParams, doc: &EncodedDocument, probs: &[Vec<f64>]) -> f64 {
    probs
        .iter()
        .zip(&doc.labels)
        .zip(&params.config.task_weights)
        .filter_map(|((p, label), w)| label.map(|l| -w * p[l].max(f64::MIN_POSITIVE).ln()))
        .sum()
}

/// Mean over the batch of the weighted sum of per-task cross-entropies.
/// Absent labels contribute nothing.
pub fn loss(params: &ModelParams, batch: &[&EncodedDocument]) -> Result<f64> {
    if batch.is_empty() {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for doc in batch {
        check_labels(params, doc)?;
        let probs = forward(params, doc)?;
        total += doc_loss(params, doc, &probs);
    }
    Ok(total / batch.len() as f64)
}

/// Gradients for every parameter group. Embedding gradients are sparse by row.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub embedding: BTreeMap<u32, Vec<f64>>,
    pub conv_kernel: Vec<Vec<f64>>,
    pub conv_bias: Vec<Vec<f64>>,
    pub head_weight: Vec<Vec<f64>>,
    pub head_bias: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn zeros(params: &ModelParams) -> Self {
        Gradients {
            embedding: BTreeMap::new(),
            conv_kernel: params
                .conv
                .iter()
                .map(|b| vec![0.0; b.kernel.len()])
                .collect(),
            conv_bias: params
                .conv
                .iter()
                .map(|b| vec![0.0; b.bias.len()])
                .collect(),
            head_weight: params
                .heads
                .iter()
                .map(|h| vec![0.0; h.weight.len()])
                .collect(),
            head_bias: params
                .heads
                .iter()
                .map(|h| vec![0.0; h.bias.len()])
                .collect(),
        }
    }

    pub fn add(&mut self, other: &Gradients) {
        for (row, g) in &other.embedding {
            let acc = self
                .embedding
                .entry(*row)
                .or_insert_with(|| vec![0.0; g.len()]);
            add_into(acc, g);
        }
        for (a, b) in self
            .conv_kernel
            .iter_mut()
            .chain(&mut self.conv_bias)
            .chain(&mut self.head_weight)
            .chain(&mut self.head_bias)
            .zip(
                other
                    .conv_kernel
                    .iter()
                    .chain(&other.conv_bias)
                    .chain(&other.head_weight)
                    .chain(&other.head_bias),
            )
        {
            add_into(a, b);
        }
    }

    pub fn scale(&mut self, s: f64) {
        for v in self.values_mut() {
            *v *= s;
        }
    }

    pub fn norm(&self) -> f64 {
        self.embedding
            .values()
            .chain(&self.conv_kernel)
            .chain(&self.conv_bias)
            .chain(&self.head_weight)
            .chain(&self.head_bias)
            .flat_map(|v| v.iter())
            .map(|x| x * x)
            .sum::<f64>()
            .sqrt()
    }

    fn values_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.embedding
            .values_mut()
            .chain(&mut self.conv_kernel)
            .chain(&mut self.conv_bias)
            .chain(&mut self.head_weight)
            .chain(&mut self.head_bias)
            .flat_map(|v| v.iter_mut())
    }
}

fn add_into(acc: &mut [f64], g: &[f64]) {
    for (a, b) in acc.iter_mut().zip(g) {
        *a += b;
    }
}

/// Accumulate one document's loss gradient, scaled by `scale`, into `grads`.
/// `mask`, when given, multiplies the pooled features (inverted dropout).
/// Returns the document's unscaled loss.
pub(crate) fn backward_doc(
    params: &ModelParams,
    doc: &EncodedDocument,
    scale: f64,
    mask: Option<&[f64]>,
    grads: &mut Gradients,
) -> Result<f64> {
    check_doc(params, doc)?;
    check_labels(params, doc)?;
    let d = params.dim();
    let x = gather(params, doc);
    let (mut pooled, argmax) = pool(params, &x);
    if let Some(m) = mask {
        for (p, k) in pooled.iter_mut().zip(m) {
            *p *= k;
        }
    }
    let probs = heads(params, &pooled);
    let loss = doc_loss(params, doc, &probs);

    let total = pooled.len();
    let mut d_pooled = vec![0.0; total];
    for (t, (head, p)) in params.heads.iter().zip(&probs).enumerate() {
        let Some(label) = doc.labels[t] else { continue };
        let w = params.config.task_weights[t];
        if w == 0.0 {
            continue;
        }
        for (c, &pc) in p.iter().enumerate() {
            let indicator = if c == label { 1.0 } else { 0.0 };
            let dz = w * (pc - indicator) * scale;
            if dz == 0.0 {
                continue;
            }
            grads.head_bias[t][c] += dz;
            let row = &head.weight[c * total..(c + 1) * total];
            let g_row = &mut grads.head_weight[t][c * total..(c + 1) * total];
            for j in 0..total {
                g_row[j] += dz * pooled[j];
                d_pooled[j] += dz * row[j];
            }
        }
    }
    if let Some(m) = mask {
        for (g, k) in d_pooled.iter_mut().zip(m) {
            *g *= k;
        }
    }

    let f = params.config.filters_per_window;
    for (b, bank) in params.conv.iter().enumerate() {
        let kd = bank.window * d;
        for fi in 0..f {
            let global = b * f + fi;
            let (Some(pos), g) = (argmax[global], d_pooled[global]) else {
                continue;
            };
            if g == 0.0 {
                continue;
            }
            grads.conv_bias[b][fi] += g;
            let kernel = &bank.kernel[fi * kd..(fi + 1) * kd];
            let g_kernel = &mut grads.conv_kernel[b][fi * kd..(fi + 1) * kd];
            let window = &x[pos * d..pos * d + kd];
            for j in 0..kd {
                g_kernel[j] += g * window[j];
            }
            for o in 0..bank.window {
                let token = doc.token_ids[pos + o];
                if token == PAD {
                    continue;
                }
                let row = grads.embedding.entry(token).or_insert_with(|| vec![0.0; d]);
                for j in 0..d {
                    row[j] += g * kernel[o * d + j];
                }
            }
        }
    }
    Ok(loss)
}

/// Documents per reduction chunk. Fixed so that results do not depend on the
/// number of worker threads.
pub(crate) const CHUNK: usize = 8;

/// Batch loss and its exact gradient. PAD never receives a gradient.
pub fn backward(
    params: &ModelParams,
    batch: &[&EncodedDocument],
    exec: Execution,
) -> Result<(f64, Gradients)> {
    batch_gradients(params, batch, exec, |_| None)
}

pub(crate) fn batch_gradients<M>(
    params: &ModelParams,
    batch: &[&EncodedDocument],
    exec: Execution,
    mask: M,
) -> Result<(f64, Gradients)>
where
    M: Fn(usize) -> Option<Vec<f64>> + Sync + Send,
{
    let mut grads = Gradients::zeros(params);
    if batch.is_empty() {
        return Ok((0.0, grads));
    }
    let scale = 1.0 / batch.len() as f64;
    let chunks: Vec<&[&EncodedDocument]> = batch.chunks(CHUNK).collect();
    let partial = exec.map_range(chunks.len(), |c| -> Result<(f64, Gradients)> {
        let mut g = Gradients::zeros(params);
        let mut loss = 0.0;
        for (k, doc) in chunks[c].iter().enumerate() {
            let m = mask(c * CHUNK + k);
            loss += backward_doc(params, doc, scale, m.as_deref(), &mut g)?;
        }
        Ok((loss, g))
    });
    let mut loss = 0.0;
    for p in partial {
        let (l, g) = p?;
        loss += l;
        grads.add(&g);
    }
    Ok((loss * scale, grads))
}

/// Argmax of each head; ties go to the lowest class index.
pub fn argmax(p: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in p.iter().enumerate() {
        if v > p[best] {
            best = i;
        }
    }
    best
}

/// Predicted class per task for every document.
pub fn predict(
    params: &ModelParams,
    docs: &[EncodedDocument],
    exec: Execution,
) -> Result<Vec<Vec<usize>>> {
    exec.map(docs, |d| {
        forward(params, d).map(|probs| probs.iter().map(|p| argmax(p)).collect())
    })
    .into_iter()
    .collect()
}
