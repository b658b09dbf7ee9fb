//! Tiled inference.

use hdadbin_core::eval::Binarizer;
use hdadbin_core::labeling::SourceImage;
use hdadbin_core::tiling::stitch_blocks;
use hdadbin_core::{BinaryMap, GrayImage, Label};
use rayon::prelude::*;

use crate::error::Result;
use crate::model::ModelParams;
use crate::tensor::Scalar;
use crate::train::source_blocks;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Precision {
    #[default]
    Double,
    Single,
}

/// Partitions, runs every block, labels `P(foreground) >= 0.5` as
/// foreground, then stitches and crops.
pub fn infer_source<T: Scalar>(model: &ModelParams<T>, src: &SourceImage) -> Result<BinaryMap> {
    let arch = model.arch();
    let (inputs, desc) = source_blocks(src, arch.input_channels, arch.block)?;
    let half = T::from_f64(0.5);
    let maps = inputs
        .par_iter()
        .map(|input| {
            let probs = model.forward(&input.cast::<T>())?;
            let labels = probs.plane(0).iter().map(|&p| Label::from_foreground(p >= half)).collect();
            Ok(BinaryMap::from_labels(arch.block, arch.block, labels)?)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(stitch_blocks(&maps, &desc)?)
}

pub fn infer(model: &ModelParams<f64>, img: &GrayImage) -> Result<BinaryMap> {
    infer_source(model, &SourceImage::Gray(img.clone()))
}

/// A trained network behind the common binarizer interface.
#[derive(Clone, Debug)]
pub struct CnnBinarizer {
    model: ModelParams<f64>,
    single: Option<ModelParams<f32>>,
}

impl CnnBinarizer {
    pub fn new(model: ModelParams<f64>, precision: Precision) -> Self {
        let single = (precision == Precision::Single).then(|| model.cast());
        Self { model, single }
    }

    pub fn model(&self) -> &ModelParams<f64> {
        &self.model
    }

    pub fn binarize_source(&self, src: &SourceImage) -> Result<BinaryMap> {
        match &self.single {
            Some(m) => infer_source(m, src),
            None => infer_source(&self.model, src),
        }
    }
}

impl Binarizer for CnnBinarizer {
    fn name(&self) -> String {
        "CNN".into()
    }

    fn binarize(&self, img: &GrayImage) -> hdadbin_core::Result<BinaryMap> {
        self.binarize_source(&SourceImage::Gray(img.clone()))
            .map_err(|e| hdadbin_core::Error::Method(e.to_string()))
    }

    fn parameter_count(&self) -> Option<usize> {
        Some(self.model.parameter_count())
    }
}
