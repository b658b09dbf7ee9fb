//! A compact encoder-decoder CNN for two-class pixel labeling, with its own
//! convolution kernels, backpropagation, Adam, tiled training and inference,
//! and a model file format.

pub mod adam;
pub mod error;
pub mod gradcheck;
pub mod infer;
pub mod layers;
pub mod loss;
pub mod model;
pub mod serialize;
pub mod tensor;
pub mod train;

pub use crate::adam::{adam_step, AdamConfig, AdamState};
pub use crate::error::{NnError, Result};
pub use crate::infer::{infer, infer_source, CnnBinarizer, Precision};
pub use crate::loss::{cross_entropy, loss, softmax_channels, target_classes};
pub use crate::model::{build_model, ArchConfig, Gradients, LayerKind, LayerSpec, ModelParams};
pub use crate::serialize::{load_model, load_model_for, save_model};
pub use crate::tensor::{Scalar, Tensor};
pub use crate::train::{block_pairs, train, train_blocks, train_with, BlockPair, TrainConfig, TrainOutcome};
