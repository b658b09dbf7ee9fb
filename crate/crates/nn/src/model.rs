//! The encoder-decoder network.
//!
//! Encoder level `l` is a stride-1 conv followed by a stride-2 conv. The
//! stride-2 output of every level is compressed to two channels by a 1x1
//! reduction. The decoder starts from the deepest reduced map; each
//! transposed conv doubles the side and, except for the last, its output is
//! concatenated with the reduced map of matching size.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{NnError, Result};
use crate::layers::{
    conv3x3_backward, conv3x3_forward, conv_out_side, deconv_backward, deconv_forward, pointwise_backward,
    pointwise_forward, relu_backward_in_place, relu_in_place,
};
use crate::loss::{cross_entropy, softmax_channels, softmax_residual};
use crate::tensor::{Scalar, Tensor};

/// Number of output classes. Channel 0 is foreground, channel 1 background.
pub const CLASSES: usize = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArchConfig {
    pub input_channels: usize,
    /// Channels of every encoder conv.
    pub width: usize,
    /// Encoder levels; each halves the side once.
    pub levels: usize,
    /// Side of the square input block.
    pub block: usize,
}

impl Default for ArchConfig {
    fn default() -> Self {
        Self {
            input_channels: 1,
            width: 32,
            levels: 5,
            block: 224,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LayerKind {
    Conv,
    Reduce,
    Deconv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    None,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LayerSpec {
    pub name: String,
    pub kind: LayerKind,
    /// `(height, width, out_channels)`.
    pub kernel: (usize, usize, usize),
    pub in_channels: usize,
    pub stride: usize,
    pub activation: Activation,
}

impl LayerSpec {
    pub fn weight_len(&self) -> usize {
        self.kernel.0 * self.kernel.1 * self.kernel.2 * self.in_channels
    }

    pub fn bias_len(&self) -> usize {
        self.kernel.2
    }

    pub fn parameter_count(&self) -> usize {
        self.weight_len() + self.bias_len()
    }

    fn fan_in(&self) -> usize {
        self.kernel.0 * self.kernel.1 * self.in_channels
    }
}

impl ArchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.input_channels == 0 || self.width == 0 || self.levels == 0 {
            return Err(NnError::Architecture(format!("degenerate architecture {self:?}")));
        }
        if !matches!(self.input_channels, 1 | 3) {
            return Err(NnError::Architecture(format!(
                "input must have 1 or 3 channels, not {}",
                self.input_channels
            )));
        }
        let scale = 1usize.checked_shl(self.levels as u32).unwrap_or(0);
        if scale == 0 || self.block == 0 || !self.block.is_multiple_of(scale) {
            return Err(NnError::Architecture(format!(
                "block side {} is not divisible by 2^{}",
                self.block, self.levels
            )));
        }
        Ok(())
    }

    /// Layers in storage order: encoder convs, reductions, then deconvs.
    pub fn layer_specs(&self) -> Vec<LayerSpec> {
        let l = self.levels;
        let mut specs = Vec::with_capacity(4 * l);
        for level in 1..=l {
            for (i, stride) in [(1, 1), (2, 2)] {
                specs.push(LayerSpec {
                    name: format!("CONV{level}_{i}"),
                    kind: LayerKind::Conv,
                    kernel: (3, 3, self.width),
                    in_channels: if level == 1 && i == 1 { self.input_channels } else { self.width },
                    stride,
                    activation: Activation::Relu,
                });
            }
        }
        for level in 1..=l {
            specs.push(LayerSpec {
                name: format!("REDUCE{level}"),
                kind: LayerKind::Reduce,
                kernel: (1, 1, CLASSES),
                in_channels: self.width,
                stride: 1,
                activation: Activation::None,
            });
        }
        for j in 1..=l {
            specs.push(LayerSpec {
                name: format!("DECONV{j}"),
                kind: LayerKind::Deconv,
                kernel: (3, 3, CLASSES),
                in_channels: if j == 1 { CLASSES } else { 2 * CLASSES },
                stride: 2,
                activation: if j == l { Activation::None } else { Activation::Relu },
            });
        }
        specs
    }

    pub fn parameter_count(&self) -> usize {
        self.layer_specs().iter().map(LayerSpec::parameter_count).sum()
    }

    /// `(layer name, [height, width, channels])` for every encoder conv and
    /// deconv, in network order.
    pub fn shape_chain(&self) -> Vec<(String, [usize; 3])> {
        let mut side = self.block;
        let mut chain = Vec::new();
        for spec in self.layer_specs() {
            match spec.kind {
                LayerKind::Conv => side = conv_out_side(side, spec.stride),
                LayerKind::Reduce => continue,
                LayerKind::Deconv => side *= 2,
            }
            chain.push((spec.name, [side, side, spec.kernel.2]));
        }
        chain
    }

    /// SHA-256 over a canonical description of the layer list.
    pub fn fingerprint(&self) -> [u8; 32] {
        let mut text = format!("in={};block={};", self.input_channels, self.block);
        for s in self.layer_specs() {
            text.push_str(&format!(
                "{}:{:?}:{}x{}x{}:{}:{}:{:?};",
                s.name, s.kind, s.kernel.0, s.kernel.1, s.kernel.2, s.in_channels, s.stride, s.activation
            ));
        }
        let digest = Sha256::digest(text.as_bytes());
        let mut out = [0u8; 32];
        out.copy_from_slice(digest.as_slice());
        out
    }

    fn conv_index(&self, level: usize, second: bool) -> usize {
        2 * level + usize::from(second)
    }

    fn reduce_index(&self, level: usize) -> usize {
        2 * self.levels + level
    }

    fn deconv_index(&self, j: usize) -> usize {
        3 * self.levels + j
    }
}

/// Weights and biases of one layer.
#[derive(Clone, Debug, PartialEq)]
pub struct Layer<T = f64> {
    pub weight: Vec<T>,
    pub bias: Vec<T>,
}

impl<T: Scalar> Layer<T> {
    fn zeros(spec: &LayerSpec) -> Self {
        Self {
            weight: vec![T::ZERO; spec.weight_len()],
            bias: vec![T::ZERO; spec.bias_len()],
        }
    }
}

/// Parameters of a built network.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams<T = f64> {
    arch: ArchConfig,
    specs: Vec<LayerSpec>,
    layers: Vec<Layer<T>>,
}

/// Per-layer gradients laid out like [`ModelParams`].
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub layers: Vec<Layer<f64>>,
}

impl Gradients {
    pub fn zeros_like<T: Scalar>(model: &ModelParams<T>) -> Self {
        Self {
            layers: model.specs.iter().map(Layer::zeros).collect(),
        }
    }

    pub fn add_assign(&mut self, other: &Gradients) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            for (x, y) in a.weight.iter_mut().zip(&b.weight) {
                *x += y;
            }
            for (x, y) in a.bias.iter_mut().zip(&b.bias) {
                *x += y;
            }
        }
    }

    pub fn scale(&mut self, s: f64) {
        for l in &mut self.layers {
            l.weight.iter_mut().chain(l.bias.iter_mut()).for_each(|v| *v *= s);
        }
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.layers.iter().flat_map(|l| l.weight.iter().chain(&l.bias).copied())
    }
}

/// Every intermediate map of one forward pass.
#[derive(Clone, Debug)]
pub struct ForwardTrace<T = f64> {
    pub input: Tensor<T>,
    /// Post-activation encoder outputs, `2 * levels` entries.
    pub encoder: Vec<Tensor<T>>,
    pub reduced: Vec<Tensor<T>>,
    pub decoder_inputs: Vec<Tensor<T>>,
    /// Deconv outputs; the last one holds the logits.
    pub decoder: Vec<Tensor<T>>,
    pub probs: Tensor<T>,
}

/// Builds the network with He-normal weights and zero biases.
pub fn build_model(arch: ArchConfig, seed: u64) -> Result<ModelParams<f64>> {
    let mut model = ModelParams::zeros(arch)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for (spec, layer) in model.specs.iter().zip(&mut model.layers) {
        let std = (2.0 / spec.fan_in() as f64).sqrt();
        let normal = Normal::new(0.0, std).expect("positive std");
        for w in &mut layer.weight {
            *w = normal.sample(&mut rng);
        }
    }
    Ok(model)
}

impl<T: Scalar> ModelParams<T> {
    pub fn zeros(arch: ArchConfig) -> Result<Self> {
        arch.validate()?;
        let specs = arch.layer_specs();
        let layers = specs.iter().map(Layer::zeros).collect();
        Ok(Self { arch, specs, layers })
    }

    /// Assembles a model from flat values in storage order (per layer,
    /// weights then bias).
    pub fn from_flat(arch: ArchConfig, values: &[T]) -> Result<Self> {
        let mut model = Self::zeros(arch)?;
        if values.len() != model.parameter_count() {
            return Err(NnError::Shape(format!(
                "{} values for a model with {} parameters",
                values.len(),
                model.parameter_count()
            )));
        }
        let mut rest = values;
        for layer in &mut model.layers {
            for dst in [&mut layer.weight, &mut layer.bias] {
                let (head, tail) = rest.split_at(dst.len());
                dst.copy_from_slice(head);
                rest = tail;
            }
        }
        Ok(model)
    }

    pub fn arch(&self) -> &ArchConfig {
        &self.arch
    }

    pub fn specs(&self) -> &[LayerSpec] {
        &self.specs
    }

    pub fn layers(&self) -> &[Layer<T>] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer<T>] {
        &mut self.layers
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.weight.len() + l.bias.len()).sum()
    }

    pub fn fingerprint(&self) -> [u8; 32] {
        self.arch.fingerprint()
    }

    /// All parameters in storage order.
    pub fn values(&self) -> impl Iterator<Item = T> + '_ {
        self.layers.iter().flat_map(|l| l.weight.iter().chain(&l.bias).copied())
    }

    pub fn values_mut(&mut self) -> impl Iterator<Item = &mut T> + '_ {
        self.layers.iter_mut().flat_map(|l| l.weight.iter_mut().chain(l.bias.iter_mut()))
    }

    pub fn cast<U: Scalar>(&self) -> ModelParams<U> {
        ModelParams {
            arch: self.arch,
            specs: self.specs.clone(),
            layers: self
                .layers
                .iter()
                .map(|l| Layer {
                    weight: l.weight.iter().map(|v| U::from_f64(v.to_f64())).collect(),
                    bias: l.bias.iter().map(|v| U::from_f64(v.to_f64())).collect(),
                })
                .collect(),
        }
    }

    pub fn check_input(&self, input: &Tensor<T>) -> Result<()> {
        let want = [self.arch.input_channels, self.arch.block, self.arch.block];
        if input.shape() != want {
            return Err(NnError::Shape(format!(
                "input is {:?}, the network expects {:?} (channels, height, width)",
                input.shape(),
                want
            )));
        }
        Ok(())
    }

    fn apply(&self, index: usize, x: &Tensor<T>) -> Tensor<T> {
        let (spec, layer) = (&self.specs[index], &self.layers[index]);
        let mut out = match spec.kind {
            LayerKind::Conv => conv3x3_forward(x, &layer.weight, &layer.bias, spec.stride),
            LayerKind::Reduce => pointwise_forward(x, &layer.weight, &layer.bias),
            LayerKind::Deconv => deconv_forward(x, &layer.weight, &layer.bias),
        };
        if spec.activation == Activation::Relu {
            relu_in_place(&mut out);
        }
        out
    }

    pub fn forward_trace(&self, input: &Tensor<T>) -> Result<ForwardTrace<T>> {
        self.check_input(input)?;
        let a = &self.arch;
        let levels = a.levels;
        let mut encoder: Vec<Tensor<T>> = Vec::with_capacity(2 * levels);
        let mut reduced = Vec::with_capacity(levels);
        for level in 0..levels {
            let x = encoder.last().unwrap_or(input);
            let first = self.apply(a.conv_index(level, false), x);
            let second = self.apply(a.conv_index(level, true), &first);
            reduced.push(self.apply(a.reduce_index(level), &second));
            encoder.push(first);
            encoder.push(second);
        }
        let mut decoder_inputs = Vec::with_capacity(levels);
        let mut decoder: Vec<Tensor<T>> = Vec::with_capacity(levels);
        for j in 0..levels {
            let x = match decoder.last() {
                None => reduced[levels - 1].clone(),
                Some(prev) => prev.concat(&reduced[levels - 1 - j])?,
            };
            decoder.push(self.apply(a.deconv_index(j), &x));
            decoder_inputs.push(x);
        }
        let probs = softmax_channels(decoder.last().expect("at least one level"));
        Ok(ForwardTrace {
            input: input.clone(),
            encoder,
            reduced,
            decoder_inputs,
            decoder,
            probs,
        })
    }

    /// Per-pixel class probabilities.
    pub fn forward(&self, input: &Tensor<T>) -> Result<Tensor<T>> {
        Ok(self.forward_trace(input)?.probs)
    }
}

impl ModelParams<f64> {
    /// Loss and parameter gradients for one block. `target` holds the class
    /// index per pixel (0 foreground, 1 background).
    pub fn loss_and_gradients(&self, input: &Tensor<f64>, target: &[u8]) -> Result<(f64, Gradients)> {
        let trace = self.forward_trace(input)?;
        let loss = cross_entropy(&trace.probs, target)?;
        Ok((loss, self.backward(&trace, target)?))
    }

    /// Reverse pass through softmax, decoder, reductions and encoder.
    pub fn backward(&self, trace: &ForwardTrace<f64>, target: &[u8]) -> Result<Gradients> {
        let a = &self.arch;
        let levels = a.levels;
        let mut grads = Gradients::zeros_like(self);
        let mut put = |index: usize, dw: Vec<f64>, db: Vec<f64>| {
            grads.layers[index] = Layer { weight: dw, bias: db };
        };

        let mut g = softmax_residual(&trace.probs, target)?;
        let mut d_reduced: Vec<Option<Tensor<f64>>> = vec![None; levels];
        for j in (0..levels).rev() {
            let idx = a.deconv_index(j);
            if self.specs[idx].activation == Activation::Relu {
                relu_backward_in_place(&mut g, &trace.decoder[j]);
            }
            let (dw, db, dx) = deconv_backward(&trace.decoder_inputs[j], &self.layers[idx].weight, &g);
            put(idx, dw, db);
            if j == 0 {
                d_reduced[levels - 1] = Some(dx);
            } else {
                let (d_prev, d_skip) = dx.split(CLASSES)?;
                d_reduced[levels - 1 - j] = Some(d_skip);
                g = d_prev;
            }
        }

        let mut d_above: Option<Tensor<f64>> = None;
        for level in (0..levels).rev() {
            let second = &trace.encoder[2 * level + 1];
            let first = &trace.encoder[2 * level];
            let r = a.reduce_index(level);
            let d_red = d_reduced[level].take().expect("every reduced map feeds the decoder");
            let (dw, db, mut d_second) = pointwise_backward(second, &self.layers[r].weight, &d_red);
            put(r, dw, db);
            if let Some(d) = d_above.take() {
                for (x, y) in d_second.data_mut().iter_mut().zip(d.data()) {
                    *x += y;
                }
            }
            relu_backward_in_place(&mut d_second, second);
            let c2 = a.conv_index(level, true);
            let (dw, db, d_first) =
                conv3x3_backward(first, &self.layers[c2].weight, &d_second, self.specs[c2].stride, true);
            put(c2, dw, db);
            let mut d_first = d_first.expect("requested");
            relu_backward_in_place(&mut d_first, first);
            let c1 = a.conv_index(level, false);
            let x = if level == 0 { &trace.input } else { &trace.encoder[2 * level - 1] };
            let (dw, db, dx) = conv3x3_backward(x, &self.layers[c1].weight, &d_first, self.specs[c1].stride, level > 0);
            put(c1, dw, db);
            d_above = dx;
        }
        Ok(grads)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layer_counts_and_order() {
        let specs = ArchConfig::default().layer_specs();
        assert_eq!(specs.len(), 20);
        let names: Vec<_> = specs.iter().map(|s| s.name.as_str()).collect();
        assert_eq!(&names[..3], &["CONV1_1", "CONV1_2", "CONV2_1"]);
        assert_eq!(names[9], "CONV5_2");
        assert_eq!(names[10], "REDUCE1");
        assert_eq!(names[15], "DECONV1");
        assert_eq!(names[19], "DECONV5");
        assert_eq!(specs[19].activation, Activation::None);
        assert_eq!(specs[18].activation, Activation::Relu);
    }

    #[test]
    fn validation() {
        assert!(ArchConfig { block: 100, ..Default::default() }.validate().is_err());
        assert!(ArchConfig { levels: 0, ..Default::default() }.validate().is_err());
        assert!(ArchConfig::default().validate().is_ok());
    }

    #[test]
    fn fingerprints_differ_by_architecture() {
        let a = ArchConfig::default();
        let b = ArchConfig { input_channels: 3, ..a };
        assert_ne!(a.fingerprint(), b.fingerprint());
        assert_eq!(a.fingerprint(), ArchConfig::default().fingerprint());
    }

    #[test]
    fn flat_round_trip() {
        let arch = ArchConfig { input_channels: 1, width: 2, levels: 2, block: 8 };
        let m = build_model(arch, 3).unwrap();
        let flat: Vec<f64> = m.values().collect();
        assert_eq!(ModelParams::from_flat(arch, &flat).unwrap(), m);
        assert!(ModelParams::from_flat(arch, &flat[1..]).is_err());
    }
}
