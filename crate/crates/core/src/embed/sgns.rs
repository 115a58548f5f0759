//! Skip-gram with negative sampling.

use std::sync::Arc;

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::matrix::{dot, EmbeddingMatrix};
use crate::corpus::{EncodedDocument, Vocabulary, PAD};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SgnsConfig {
    pub dim: usize,
    /// Maximum context radius; each center draws its radius uniformly from `1..=window`.
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    /// Learning rate never decays below `learning_rate * min_lr_fraction`.
    pub min_lr_fraction: f64,
    /// Frequent-word subsampling threshold; 0 disables subsampling.
    pub subsample: f64,
    /// Divergence bound on row norms after training.
    pub max_norm: f64,
    pub seed: u64,
}

impl Default for SgnsConfig {
    fn default() -> Self {
        SgnsConfig {
            dim: 300,
            window: 5,
            negatives: 5,
            epochs: 5,
            learning_rate: 0.025,
            min_lr_fraction: 1e-4,
            subsample: 1e-3,
            max_norm: 100.0,
            seed: 1,
        }
    }
}

impl SgnsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 || self.window == 0 || self.negatives == 0 || self.epochs == 0 {
            return Err(Error::Config(
                "sgns dim, window, negatives and epochs must be positive".into(),
            ));
        }
        if !(self.learning_rate > 0.0) || !(0.0..=1.0).contains(&self.min_lr_fraction) {
            return Err(Error::Config("sgns learning rate must be positive".into()));
        }
        if self.subsample < 0.0 {
            return Err(Error::Config(
                "sgns subsample threshold must be >= 0".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SgnsResult {
    pub embeddings: EmbeddingMatrix,
    /// Mean loss per positive pair, one entry per epoch.
    pub epoch_losses: Vec<f64>,
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `-ln(sigmoid(x))`, stable for large |x|.
fn neg_log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        (-x).exp().ln_1p()
    } else {
        -x + x.exp().ln_1p()
    }
}

/// Train input vectors with skip-gram negative sampling.
///
/// Single-threaded and deterministic for a fixed seed. PAD positions are
/// removed before windowing, and windows never cross document boundaries.
pub fn train_sgns(
    docs: &[EncodedDocument],
    vocab: Arc<Vocabulary>,
    cfg: &SgnsConfig,
) -> Result<SgnsResult> {
    cfg.validate()?;
    if docs.is_empty() {
        return Err(Error::NoDocuments);
    }
    let n = vocab.len();
    let d = cfg.dim;
    let mut counts = vec![0u64; n];
    for doc in docs {
        for &t in &doc.token_ids {
            if (t as usize) >= n {
                return Err(Error::VocabularyMismatch(format!(
                    "document {} has id {t} outside vocabulary of {n}",
                    doc.id
                )));
            }
            if t != PAD {
                counts[t as usize] += 1;
            }
        }
    }
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(Error::EmptyTrainingCorpus);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut input: Vec<f64> = (0..n * d)
        .map(|_| (rng.gen::<f64>() - 0.5) / d as f64)
        .collect();
    input[..d].fill(0.0);
    let mut output = vec![0.0f64; n * d];

    let noise = WeightedIndex::new(counts.iter().map(|&c| (c as f64).powf(0.75)))
        .map_err(|e| Error::Config(format!("negative sampling table: {e}")))?;
    let keep_prob: Vec<f64> = counts
        .iter()
        .map(|&c| {
            if cfg.subsample == 0.0 || c == 0 {
                return 1.0;
            }
            let f = c as f64 / total as f64;
            (((f / cfg.subsample).sqrt() + 1.0) * cfg.subsample / f).min(1.0)
        })
        .collect();

    let planned = (total as f64) * cfg.epochs as f64;
    let mut processed = 0u64;
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    let mut grad_center = vec![0.0f64; d];
    let mut sentence: Vec<u32> = Vec::new();

    for _ in 0..cfg.epochs {
        let mut loss_sum = 0.0;
        let mut pairs = 0u64;
        for doc in docs {
            sentence.clear();
            for &t in &doc.token_ids {
                if t == PAD {
                    continue;
                }
                processed += 1;
                if keep_prob[t as usize] >= 1.0 || rng.gen::<f64>() < keep_prob[t as usize] {
                    sentence.push(t);
                }
            }
            let lr =
                cfg.learning_rate * (1.0 - processed as f64 / planned).max(cfg.min_lr_fraction);
            for (pos, &center) in sentence.iter().enumerate() {
                let radius = rng.gen_range(1..=cfg.window);
                let lo = pos.saturating_sub(radius);
                let hi = (pos + radius).min(sentence.len() - 1);
                for (cpos, &context) in sentence.iter().enumerate().take(hi + 1).skip(lo) {
                    if cpos == pos {
                        continue;
                    }
                    let c_off = center as usize * d;
                    grad_center.fill(0.0);
                    for k in 0..=cfg.negatives {
                        let (target, label) = if k == 0 {
                            (context as usize, 1.0)
                        } else {
                            let s = noise.sample(&mut rng);
                            if s == context as usize {
                                continue;
                            }
                            (s, 0.0)
                        };
                        let t_off = target * d;
                        let score = dot(&input[c_off..c_off + d], &output[t_off..t_off + d]);
                        loss_sum += if label == 1.0 {
                            neg_log_sigmoid(score)
                        } else {
                            neg_log_sigmoid(-score)
                        };
                        let g = (label - sigmoid(score)) * lr;
                        for j in 0..d {
                            grad_center[j] += g * output[t_off + j];
                            output[t_off + j] += g * input[c_off + j];
                        }
                    }
                    for j in 0..d {
                        input[c_off + j] += grad_center[j];
                    }
                    pairs += 1;
                }
            }
        }
        epoch_losses.push(if pairs == 0 {
            0.0
        } else {
            loss_sum / pairs as f64
        });
    }

    let embeddings = EmbeddingMatrix::from_rows(vocab, d, input)?;
    embeddings.validate(cfg.max_norm)?;
    Ok(SgnsResult {
        embeddings,
        epoch_losses,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Split;
    use crate::embed::cosine;

    fn encode(vocab: &Vocabulary, sentences: &[Vec<&str>]) -> Vec<EncodedDocument> {
        sentences
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let mut ids: Vec<u32> = s.iter().map(|w| vocab.id_or_unk(w)).collect();
                ids.push(PAD);
                EncodedDocument {
                    id: i.to_string(),
                    split: Split::Train,
                    token_ids: ids,
                    labels: vec![],
                }
            })
            .collect()
    }

    /// "aa" and "bb" fill the same slot of the same templates; "zz" lives in disjoint templates.
    fn template_corpus() -> (Arc<Vocabulary>, Vec<EncodedDocument>) {
        let words = [
            "aa", "bb", "zz", "p1", "p2", "p3", "q1", "q2", "q3", "r1", "r2",
        ];
        let vocab = Arc::new(
            Vocabulary::from_entries(words.iter().map(|w| (w.to_string(), 1)).collect()).unwrap(),
        );
        let mut sentences = Vec::new();
        for i in 0..400 {
            let slot = if i % 2 == 0 { "aa" } else { "bb" };
            sentences.push(vec!["p1", "p2", slot, "p3", "q1"]);
            sentences.push(vec!["q2", slot, "q3", "p2"]);
            sentences.push(vec!["r1", "zz", "r2"]);
        }
        let docs = encode(&vocab, &sentences);
        (vocab, docs)
    }

    fn small_cfg() -> SgnsConfig {
        SgnsConfig {
            dim: 16,
            window: 2,
            epochs: 5,
            subsample: 0.0,
            seed: 11,
            ..SgnsConfig::default()
        }
    }

    #[test]
    fn output_shape() {
        let (vocab, docs) = template_corpus();
        let r = train_sgns(&docs, vocab.clone(), &small_cfg()).unwrap();
        assert_eq!(r.embeddings.rows(), vocab.len());
        assert_eq!(r.embeddings.dim(), 16);
        assert!(r.embeddings.row(PAD as usize).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn shared_contexts_make_similar_vectors() {
        let (_, docs) = template_corpus();
        let (vocab, _) = template_corpus();
        let r = train_sgns(&docs, vocab, &small_cfg()).unwrap();
        let e = &r.embeddings;
        let ab = cosine(e.vector("aa").unwrap(), e.vector("bb").unwrap()).unwrap();
        let az = cosine(e.vector("aa").unwrap(), e.vector("zz").unwrap()).unwrap();
        assert!(ab > az, "cos(aa,bb)={ab} cos(aa,zz)={az}");
    }

    #[test]
    fn loss_decreases() {
        let (vocab, docs) = template_corpus();
        let r = train_sgns(&docs, vocab, &small_cfg()).unwrap();
        assert!(
            r.epoch_losses.last().unwrap() < &r.epoch_losses[0],
            "{:?}",
            r.epoch_losses
        );
    }

    #[test]
    fn deterministic_given_seed() {
        let (vocab, docs) = template_corpus();
        let a = train_sgns(&docs, vocab.clone(), &small_cfg()).unwrap();
        let b = train_sgns(&docs, vocab, &small_cfg()).unwrap();
        assert_eq!(a.embeddings.as_slice(), b.embeddings.as_slice());
        assert_eq!(a.epoch_losses, b.epoch_losses);
    }

    #[test]
    fn all_pad_corpus_rejected() {
        let vocab = Arc::new(Vocabulary::from_entries(vec![("a".into(), 1)]).unwrap());
        let docs = vec![EncodedDocument {
            id: "x".into(),
            split: Split::Train,
            token_ids: vec![PAD; 10],
            labels: vec![],
        }];
        assert!(matches!(
            train_sgns(&docs, vocab, &small_cfg()),
            Err(Error::EmptyTrainingCorpus)
        ));
    }

    #[test]
    fn stable_log_sigmoid() {
        assert!((neg_log_sigmoid(0.0) - std::f64::consts::LN_2).abs() < 1e-15);
        assert!(neg_log_sigmoid(800.0) >= 0.0);
        assert!((neg_log_sigmoid(-800.0) - 800.0).abs() < 1e-9);
    }
}
