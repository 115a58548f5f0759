//! Multitask convolutional document classifier.
//!
//! Parallel convolution banks over word windows share one max-pooled feature
//! vector that feeds an independent softmax head per task. Gradients are
//! derived by hand and reach the embedding table, so pre-trained vectors are
//! fine-tuned along with everything else.

mod config;
mod model;
mod params;
mod train;

pub use config::{ModelConfig, TrainConfig};
pub use model::{
    argmax, backward, forward, forward_activations, loss, predict, Activations, Gradients,
};
pub use params::{ConvBank, Head, ModelParams};
pub use train::{macro_f1_per_task, train, EpochRecord, TrainHistory};
