//! Mini-batch training on 224x224 block pairs.

use std::path::Path;

use hdadbin_core::labeling::{HdadPair, SourceImage};
use hdadbin_core::tiling::{partition_blocks, partition_labels, TilingDescriptor};
use hdadbin_core::{ColorImage, GrayImage};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adam::{adam_step, AdamConfig, AdamState};
use crate::error::{NnError, Result};
use crate::loss::target_classes;
use crate::model::{build_model, ArchConfig, Gradients, ModelParams};
use crate::tensor::Tensor;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub seed: u64,
    pub input_channels: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let adam = AdamConfig::default();
        Self {
            epochs: 50,
            batch_size: 16,
            learning_rate: adam.learning_rate,
            beta1: adam.beta1,
            beta2: adam.beta2,
            epsilon: adam.epsilon,
            seed: 1,
            input_channels: 1,
        }
    }
}

impl TrainConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| NnError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| NnError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(NnError::Config(m.into()));
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1");
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad("learning_rate must be positive");
        }
        if !((0.0..1.0).contains(&self.beta1) && (0.0..1.0).contains(&self.beta2)) {
            return bad("beta1 and beta2 must lie in [0, 1)");
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return bad("epsilon must be positive");
        }
        self.arch().validate()
    }

    pub fn arch(&self) -> ArchConfig {
        ArchConfig {
            input_channels: self.input_channels,
            ..ArchConfig::default()
        }
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.learning_rate,
            beta1: self.beta1,
            beta2: self.beta2,
            epsilon: self.epsilon,
        }
    }
}

/// One network input with its per-pixel class targets.
#[derive(Clone, Debug)]
pub struct BlockPair {
    pub input: Tensor<f64>,
    pub target: Vec<u8>,
}

fn channel_planes(src: &SourceImage, channels: usize) -> Result<Vec<GrayImage>> {
    match (channels, src) {
        (1, s) => Ok(vec![s.to_gray()]),
        (3, SourceImage::Gray(g)) => Ok(vec![g.clone(), g.clone(), g.clone()]),
        (3, SourceImage::Color(c)) => (0..3).map(|k| color_plane(c, k)).collect(),
        (n, _) => Err(NnError::Architecture(format!("unsupported input channel count {n}"))),
    }
}

fn color_plane(c: &ColorImage, k: usize) -> Result<GrayImage> {
    let data = c.as_slice().chunks_exact(3).map(|px| px[k]).collect();
    Ok(GrayImage::from_vec(c.width(), c.height(), data)?)
}

/// Partitions a source into network inputs scaled to `[0, 1]`.
pub fn source_blocks(src: &SourceImage, channels: usize, side: usize) -> Result<(Vec<Tensor<f64>>, TilingDescriptor)> {
    let mut per_channel = Vec::with_capacity(channels);
    let mut desc = None;
    for plane in channel_planes(src, channels)? {
        let (blocks, d) = partition_blocks(&plane, side)?;
        desc = Some(d);
        per_channel.push(blocks);
    }
    let desc = desc.expect("at least one channel");
    let tensors = (0..desc.block_count())
        .map(|b| {
            let data = per_channel
                .iter()
                .flat_map(|blocks| blocks[b].as_slice().iter().map(|&v| v as f64 / 255.0))
                .collect();
            Tensor::from_vec(channels, side, side, data)
        })
        .collect::<Result<_>>()?;
    Ok((tensors, desc))
}

pub fn block_pairs(pairs: &[HdadPair], arch: &ArchConfig) -> Result<Vec<BlockPair>> {
    arch.validate()?;
    let mut out = Vec::new();
    for pair in pairs {
        let (inputs, _) = source_blocks(pair.source(), arch.input_channels, arch.block)?;
        let (labels, _) = partition_labels(pair.truth(), arch.block)?;
        out.extend(inputs.into_iter().zip(&labels).map(|(input, l)| BlockPair {
            input,
            target: target_classes(l),
        }));
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub model: ModelParams<f64>,
    /// Mean training loss of each epoch.
    pub history: Vec<f64>,
}

pub fn train(pairs: &[HdadPair], cfg: &TrainConfig) -> Result<TrainOutcome> {
    train_with(pairs, cfg, |_, _| {})
}

/// Like [`train`], calling `on_epoch(epoch, mean_loss)` after every epoch.
pub fn train_with(pairs: &[HdadPair], cfg: &TrainConfig, on_epoch: impl FnMut(usize, f64)) -> Result<TrainOutcome> {
    cfg.validate()?;
    if pairs.is_empty() {
        return Err(NnError::EmptyDataset);
    }
    let blocks = block_pairs(pairs, &cfg.arch())?;
    let model = build_model(cfg.arch(), cfg.seed)?;
    train_blocks(model, &blocks, cfg, on_epoch)
}

/// Trains `model` in place of a fresh one. Blocks are visited in an order
/// shuffled by the seed; per-block gradients of a batch run in parallel and
/// are summed in batch order, so results do not depend on thread count.
pub fn train_blocks(
    mut model: ModelParams<f64>,
    blocks: &[BlockPair],
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(usize, f64),
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if blocks.is_empty() {
        return Err(NnError::EmptyDataset);
    }
    let mut state = AdamState::new(&model, cfg.adam());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(1);
    let mut order: Vec<usize> = (0..blocks.len()).collect();
    let mut history = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let results: Vec<_> = batch
                .par_iter()
                .map(|&i| model.loss_and_gradients(&blocks[i].input, &blocks[i].target))
                .collect();
            let mut sum = Gradients::zeros_like(&model);
            for r in results {
                let (loss, g) = r?;
                total += loss;
                sum.add_assign(&g);
            }
            sum.scale(1.0 / batch.len() as f64);
            adam_step(&mut model, &sum, &mut state)?;
        }
        let mean = total / blocks.len() as f64;
        history.push(mean);
        on_epoch(epoch, mean);
    }
    Ok(TrainOutcome { model, history })
}

#[cfg(test)]
mod tests {
    use super::*;
    use hdadbin_core::{BinaryMap, Label};

    #[test]
    fn config_defaults_and_unknown_keys() {
        let cfg = TrainConfig::from_toml_str("epochs = 3\nseed = 9\n").unwrap();
        assert_eq!(cfg.epochs, 3);
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.batch_size, 16);
        assert!(TrainConfig::from_toml_str("epoch = 3\n").is_err());
        assert!(TrainConfig::from_toml_str("batch_size = 0\n").is_err());
        assert!(TrainConfig::from_toml_str("input_channels = 2\n").is_err());
    }

    #[test]
    fn blocks_cover_the_padded_image() {
        let gray = GrayImage::from_fn(300, 100, |x, _| (x % 256) as u8).unwrap();
        let truth = BinaryMap::from_fn(300, 100, |x, _| Label::from_foreground(x < 10)).unwrap();
        let pair = HdadPair::new("p", SourceImage::Gray(gray), truth, hdadbin_core::labeling::Provenance::Corrected).unwrap();
        let blocks = block_pairs(&[pair], &ArchConfig::default()).unwrap();
        assert_eq!(blocks.len(), 2);
        assert_eq!(blocks[0].input.shape(), [1, 224, 224]);
        assert_eq!(blocks[0].input.get(0, 0, 255 % 224), 31.0 / 255.0);
        assert_eq!(blocks[0].target[0], 0);
        assert_eq!(blocks[0].target[10], 1);
    }

    #[test]
    fn color_sources_keep_channels() {
        let c = ColorImage::filled(5, 5, [10, 20, 30]).unwrap();
        let (t, _) = source_blocks(&SourceImage::Color(c), 3, 8).unwrap();
        assert_eq!(t[0].shape(), [3, 8, 8]);
        assert_eq!(t[0].get(2, 7, 7), 30.0 / 255.0);
    }
}
