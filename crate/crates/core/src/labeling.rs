//! Semi-automatic ground-truth construction.
//!
//! Stage one fuses MLT and IHEGT maps by foreground union. Stage two removes
//! speckle with a center-weighted median filter and optionally applies a
//! hand-drawn correction layer.

use rayon::prelude::*;

use crate::classical::{mlt_with, MltWindow, ThresholdParams};
use crate::error::{Error, Result};
use crate::ihegt::{ihegt_with, IhegtConfig};
use crate::image::{to_grayscale, BinaryMap, ColorImage, GrayImage, Label};
use crate::integral::window;

/// Union of the two foreground sets.
pub fn fuse(a: &BinaryMap, b: &BinaryMap) -> Result<BinaryMap> {
    a.ensure_same_size(b)?;
    let labels = a
        .labels()
        .iter()
        .zip(b.labels())
        .map(|(&x, &y)| Label::from_foreground(x.is_foreground() || y.is_foreground()))
        .collect();
    BinaryMap::from_labels(a.width(), a.height(), labels)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CwmfParams {
    /// Odd window side.
    pub window: usize,
    /// How many times the center label enters the multiset.
    pub center_weight: usize,
}

impl Default for CwmfParams {
    fn default() -> Self {
        Self {
            window: 7,
            center_weight: 37,
        }
    }
}

impl CwmfParams {
    pub fn validate(&self) -> Result<()> {
        if self.window < 3 || self.window.is_multiple_of(2) {
            return Err(Error::InvalidParams(format!(
                "CWMF window must be odd and >= 3, got {}",
                self.window
            )));
        }
        if self.center_weight == 0 || self.center_weight.is_multiple_of(2) {
            return Err(Error::InvalidParams(format!(
                "CWMF center weight must be odd and >= 1, got {}",
                self.center_weight
            )));
        }
        Ok(())
    }
}

/// Foreground wins when it holds at least `ceil((size + 1) / 2)` of the
/// weighted multiset.
#[inline]
pub fn weighted_median_is_foreground(fg_count: usize, size: usize) -> bool {
    fg_count >= (size + 2) / 2
}

/// Center-weighted median over a binary map. Border windows are clipped to
/// the image and the median rank follows the clipped multiset size.
pub fn cwmf_denoise(map: &BinaryMap, p: &CwmfParams) -> Result<BinaryMap> {
    p.validate()?;
    let (w, h) = map.dimensions();
    // Foreground prefix counts.
    let stride = w + 1;
    let mut table = vec![0u32; stride * (h + 1)];
    for y in 0..h {
        let mut row = 0u32;
        for x in 0..w {
            row += u32::from(map.is_foreground(x, y));
            table[(y + 1) * stride + x + 1] = table[y * stride + x + 1] + row;
        }
    }
    let mut labels = vec![Label::Background; w * h];
    labels.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
        for (x, out) in row.iter_mut().enumerate() {
            let r = window(x, y, p.window, w, h);
            let fg_window = (table[(r.y1 + 1) * stride + r.x1 + 1] + table[r.y0 * stride + r.x0]
                - table[r.y0 * stride + r.x1 + 1]
                - table[(r.y1 + 1) * stride + r.x0]) as usize;
            let center = map.is_foreground(x, y);
            let size = r.area() - 1 + p.center_weight;
            let fg = if center {
                fg_window - 1 + p.center_weight
            } else {
                fg_window
            };
            *out = Label::from_foreground(weighted_median_is_foreground(fg, size));
        }
    });
    BinaryMap::from_labels(w, h, labels)
}

/// Per-pixel manual override.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Correction {
    Keep,
    ForceForeground,
    ForceBackground,
}

impl Correction {
    /// 8-bit encoding: 128 keep, 0 force foreground, 255 force background.
    pub fn from_intensity(v: u8) -> Option<Self> {
        match v {
            128 => Some(Correction::Keep),
            0 => Some(Correction::ForceForeground),
            255 => Some(Correction::ForceBackground),
            _ => None,
        }
    }

    pub fn intensity(self) -> u8 {
        match self {
            Correction::Keep => 128,
            Correction::ForceForeground => 0,
            Correction::ForceBackground => 255,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CorrectionLayer {
    width: usize,
    height: usize,
    ops: Vec<Correction>,
}

impl CorrectionLayer {
    pub fn keep_all(width: usize, height: usize) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidDimensions { width, height });
        }
        Ok(Self {
            width,
            height,
            ops: vec![Correction::Keep; width * height],
        })
    }

    pub fn from_gray(img: &GrayImage) -> Result<Self> {
        let mut ops = Vec::with_capacity(img.as_slice().len());
        for y in 0..img.height() {
            for x in 0..img.width() {
                let value = img.get(x, y);
                ops.push(Correction::from_intensity(value).ok_or(Error::InvalidCorrection { x, y, value })?);
            }
        }
        Ok(Self {
            width: img.width(),
            height: img.height(),
            ops,
        })
    }

    pub fn to_gray(&self) -> GrayImage {
        GrayImage::from_vec(self.width, self.height, self.ops.iter().map(|c| c.intensity()).collect())
            .expect("layer dimensions are valid")
    }

    pub fn dimensions(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn get(&self, x: usize, y: usize) -> Correction {
        self.ops[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, c: Correction) {
        self.ops[y * self.width + x] = c;
    }
}

pub fn apply_corrections(truth: &BinaryMap, layer: &CorrectionLayer) -> Result<BinaryMap> {
    if truth.dimensions() != layer.dimensions() {
        return Err(Error::mismatch(truth.dimensions(), layer.dimensions()));
    }
    let labels = truth
        .labels()
        .iter()
        .zip(&layer.ops)
        .map(|(&l, &c)| match c {
            Correction::Keep => l,
            Correction::ForceForeground => Label::Foreground,
            Correction::ForceBackground => Label::Background,
        })
        .collect();
    BinaryMap::from_labels(truth.width(), truth.height(), labels)
}

/// Source side of a training pair.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SourceImage {
    Color(ColorImage),
    Gray(GrayImage),
}

impl SourceImage {
    pub fn dimensions(&self) -> (usize, usize) {
        match self {
            SourceImage::Color(c) => c.dimensions(),
            SourceImage::Gray(g) => g.dimensions(),
        }
    }

    pub fn to_gray(&self) -> GrayImage {
        match self {
            SourceImage::Color(c) => to_grayscale(c),
            SourceImage::Gray(g) => g.clone(),
        }
    }
}

impl From<ColorImage> for SourceImage {
    fn from(c: ColorImage) -> Self {
        SourceImage::Color(c)
    }
}

impl From<GrayImage> for SourceImage {
    fn from(g: GrayImage) -> Self {
        SourceImage::Gray(g)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Provenance {
    Rough,
    Refined,
    Corrected,
}

/// A source image and its ground-truth map.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HdadPair {
    pub id: String,
    source: SourceImage,
    truth: BinaryMap,
    provenance: Provenance,
}

impl HdadPair {
    pub fn new(id: impl Into<String>, source: SourceImage, truth: BinaryMap, provenance: Provenance) -> Result<Self> {
        if source.dimensions() != truth.dimensions() {
            return Err(Error::mismatch(source.dimensions(), truth.dimensions()));
        }
        Ok(Self {
            id: id.into(),
            source,
            truth,
            provenance,
        })
    }

    pub fn source(&self) -> &SourceImage {
        &self.source
    }

    pub fn truth(&self) -> &BinaryMap {
        &self.truth
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    /// Replaces the truth with a later stage; provenance may not move back.
    pub fn advance(self, truth: BinaryMap, provenance: Provenance) -> Result<Self> {
        if provenance < self.provenance {
            return Err(Error::InvalidParams(format!(
                "provenance cannot move from {:?} back to {:?}",
                self.provenance, provenance
            )));
        }
        HdadPair::new(self.id, self.source, truth, provenance)
    }

    pub fn corrected(self, layer: &CorrectionLayer) -> Result<Self> {
        let truth = apply_corrections(&self.truth, layer)?;
        self.advance(truth, Provenance::Corrected)
    }
}

/// Settings for the automatic part of the labeling pipeline.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LabelingConfig {
    pub mlt: ThresholdParams,
    pub mlt_window: MltWindow,
    pub ihegt: IhegtConfig,
    pub cwmf: CwmfParams,
}

impl Default for LabelingConfig {
    fn default() -> Self {
        Self {
            mlt: ThresholdParams::mlt(),
            mlt_window: MltWindow::Local,
            ihegt: IhegtConfig::default(),
            cwmf: CwmfParams::default(),
        }
    }
}

/// Stage-one map: MLT union IHEGT.
pub fn rough_truth(gray: &GrayImage, cfg: &LabelingConfig) -> Result<BinaryMap> {
    let mlt_map = mlt_with(gray, &cfg.mlt, cfg.mlt_window)?;
    let (ihegt_map, _) = ihegt_with(gray, &cfg.ihegt)?;
    fuse(&mlt_map, &ihegt_map)
}

/// Both automatic stages: fused map followed by CWMF.
pub fn refined_truth(gray: &GrayImage, cfg: &LabelingConfig) -> Result<BinaryMap> {
    cwmf_denoise(&rough_truth(gray, cfg)?, &cfg.cwmf)
}

pub fn label_pair(src: impl Into<SourceImage>, id: &str) -> Result<HdadPair> {
    label_pair_with(src, id, &LabelingConfig::default())
}

pub fn label_pair_with(src: impl Into<SourceImage>, id: &str, cfg: &LabelingConfig) -> Result<HdadPair> {
    let source = src.into();
    let truth = refined_truth(&source.to_gray(), cfg)?;
    HdadPair::new(id, source, truth, Provenance::Refined)
}
