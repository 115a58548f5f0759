use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::ModelConfig;
use crate::corpus::PAD;
use crate::embed::EmbeddingMatrix;
use crate::error::{Error, Result};

/// One convolution bank: `filters` kernels over `window` consecutive words.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvBank {
    pub window: usize,
    /// `filters x (window * dim)`; row `f` is kernel `f` laid out word by word.
    pub kernel: Vec<f64>,
    pub bias: Vec<f64>,
}

/// Affine softmax head for one task.
#[derive(Debug, Clone, PartialEq)]
pub struct Head {
    pub classes: usize,
    /// `classes x total_filters`, row-major.
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub config: ModelConfig,
    pub vocab_size: usize,
    /// `vocab_size x dim`, row-major; the PAD row stays zero.
    pub embedding: Vec<f64>,
    pub conv: Vec<ConvBank>,
    pub heads: Vec<Head>,
}

impl ModelParams {
    /// Fresh parameters with the embedding table copied from `emb`.
    ///
    /// Kernels and head weights are uniform in `±sqrt(6 / (fan_in + fan_out))`;
    /// biases start at zero.
    pub fn init(config: ModelConfig, emb: &EmbeddingMatrix) -> Result<Self> {
        config.validate()?;
        if emb.dim() != config.embedding_dim {
            return Err(Error::DimensionMismatch {
                expected: config.embedding_dim,
                found: emb.dim(),
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let d = config.embedding_dim;
        let f = config.filters_per_window;
        let conv = config
            .window_sizes
            .iter()
            .map(|&k| {
                let limit = (6.0 / (k * d + f) as f64).sqrt();
                ConvBank {
                    window: k,
                    kernel: (0..f * k * d)
                        .map(|_| rng.gen_range(-limit..limit))
                        .collect(),
                    bias: vec![0.0; f],
                }
            })
            .collect();
        let total = config.total_filters();
        let heads = config
            .tasks
            .iter()
            .map(|&(_, c)| {
                let limit = (6.0 / (total + c) as f64).sqrt();
                Head {
                    classes: c,
                    weight: (0..c * total)
                        .map(|_| rng.gen_range(-limit..limit))
                        .collect(),
                    bias: vec![0.0; c],
                }
            })
            .collect();
        let mut embedding = emb.as_slice().to_vec();
        embedding[PAD as usize * d..(PAD as usize + 1) * d].fill(0.0);
        Ok(ModelParams {
            config,
            vocab_size: emb.rows(),
            embedding,
            conv,
            heads,
        })
    }

    pub fn dim(&self) -> usize {
        self.config.embedding_dim
    }

    pub fn embedding_row(&self, id: u32) -> &[f64] {
        let d = self.dim();
        &self.embedding[id as usize * d..(id as usize + 1) * d]
    }

    pub fn all_finite(&self) -> bool {
        self.embedding.iter().all(|v| v.is_finite())
            && self
                .conv
                .iter()
                .all(|b| b.kernel.iter().chain(&b.bias).all(|v| v.is_finite()))
            && self
                .heads
                .iter()
                .all(|h| h.weight.iter().chain(&h.bias).all(|v| v.is_finite()))
    }

    /// Named tensors with their logical shapes, in checkpoint order.
    fn tensors(&self) -> Vec<(String, Vec<usize>, &[f64])> {
        let d = self.dim();
        let f = self.config.filters_per_window;
        let total = self.config.total_filters();
        let mut out = vec![(
            "embedding".to_string(),
            vec![self.vocab_size, d],
            self.embedding.as_slice(),
        )];
        for b in &self.conv {
            out.push((
                format!("conv{}.kernel", b.window),
                vec![f, b.window, d],
                &b.kernel,
            ));
            out.push((format!("conv{}.bias", b.window), vec![f], &b.bias));
        }
        for ((name, _), h) in self.config.tasks.iter().zip(&self.heads) {
            out.push((
                format!("head.{name}.weight"),
                vec![h.classes, total],
                &h.weight,
            ));
            out.push((format!("head.{name}.bias"), vec![h.classes], &h.bias));
        }
        out
    }

    fn tensors_mut(&mut self) -> Vec<&mut Vec<f64>> {
        let mut out = vec![&mut self.embedding];
        for b in &mut self.conv {
            out.push(&mut b.kernel);
            out.push(&mut b.bias);
        }
        for h in &mut self.heads {
            out.push(&mut h.weight);
            out.push(&mut h.bias);
        }
        out
    }

    /// Write a checkpoint: magic line, JSON header with config and tensor
    /// shapes, then every tensor as little-endian f64 in header order.
    pub fn save(&self, path: &Path) -> Result<()> {
        let header = CheckpointHeader {
            config: self.config.clone(),
            vocab_size: self.vocab_size,
            tensors: self
                .tensors()
                .into_iter()
                .map(|(name, shape, _)| TensorInfo { name, shape })
                .collect(),
        };
        let f = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(f);
        let io = |e| Error::io(path, e);
        let json = serde_json::to_vec(&header)?;
        w.write_all(MAGIC).map_err(io)?;
        w.write_all(&(json.len() as u64).to_le_bytes())
            .map_err(io)?;
        w.write_all(&json).map_err(io)?;
        for (_, _, data) in self.tensors() {
            for v in data {
                w.write_all(&v.to_le_bytes()).map_err(io)?;
            }
        }
        w.flush().map_err(io)
    }

    /// Read a checkpoint, rejecting unknown versions and shape mismatches.
    pub fn load(path: &Path) -> Result<Self> {
        let f = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut r = BufReader::new(f);
        let io = |e| Error::io(path, e);
        let mut magic = vec![0u8; MAGIC.len()];
        r.read_exact(&mut magic).map_err(io)?;
        if magic != MAGIC {
            return Err(Error::Checkpoint("unrecognized magic/version".into()));
        }
        let mut len = [0u8; 8];
        r.read_exact(&mut len).map_err(io)?;
        let mut json = vec![0u8; u64::from_le_bytes(len) as usize];
        r.read_exact(&mut json).map_err(io)?;
        let header: CheckpointHeader = serde_json::from_slice(&json)?;
        header.config.validate()?;
        let mut params = ModelParams::zeros(header.config, header.vocab_size);
        let expected: Vec<(String, Vec<usize>)> = params
            .tensors()
            .into_iter()
            .map(|(n, s, _)| (n, s))
            .collect();
        if expected.len() != header.tensors.len() {
            return Err(Error::Checkpoint(format!(
                "expected {} tensors, header lists {}",
                expected.len(),
                header.tensors.len()
            )));
        }
        for ((name, shape), info) in expected.iter().zip(&header.tensors) {
            if *name != info.name || *shape != info.shape {
                return Err(Error::ShapeMismatch {
                    what: format!("checkpoint tensor {}", info.name),
                    expected: shape.clone(),
                    found: info.shape.clone(),
                });
            }
        }
        let mut buf = [0u8; 8];
        for t in params.tensors_mut() {
            for v in t.iter_mut() {
                r.read_exact(&mut buf).map_err(io)?;
                *v = f64::from_le_bytes(buf);
            }
        }
        if r.read(&mut buf).map_err(io)? != 0 {
            return Err(Error::Checkpoint("trailing bytes".into()));
        }
        Ok(params)
    }

    fn zeros(config: ModelConfig, vocab_size: usize) -> Self {
        let d = config.embedding_dim;
        let f = config.filters_per_window;
        let total = config.total_filters();
        let conv = config
            .window_sizes
            .iter()
            .map(|&k| ConvBank {
                window: k,
                kernel: vec![0.0; f * k * d],
                bias: vec![0.0; f],
            })
            .collect();
        let heads = config
            .tasks
            .iter()
            .map(|&(_, c)| Head {
                classes: c,
                weight: vec![0.0; c * total],
                bias: vec![0.0; c],
            })
            .collect();
        ModelParams {
            vocab_size,
            embedding: vec![0.0; vocab_size * d],
            conv,
            heads,
            config,
        }
    }
}

const MAGIC: &[u8] = b"RETROKG-MTCNN v1\n";

#[derive(Debug, Serialize, Deserialize)]
struct CheckpointHeader {
    config: ModelConfig,
    vocab_size: usize,
    tensors: Vec<TensorInfo>,
}

#[derive(Debug, Serialize, Deserialize)]
struct TensorInfo {
    name: String,
    shape: Vec<usize>,
}
