//! Pixel containers shared by every binarizer.
//!
//! All grids are row-major with `(x, y) = (column, row)` addressing and at
//! least one pixel in each dimension.

use crate::error::{Error, Result};

fn check_dims(width: usize, height: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidDimensions { width, height });
    }
    Ok(())
}

fn check_len(width: usize, height: usize, expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::BufferLength {
            width,
            height,
            expected,
            found,
        });
    }
    Ok(())
}

/// 8-bit single channel image.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize) -> Result<Self> {
        Self::filled(width, height, 0)
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Result<Self> {
        check_dims(width, height)?;
        Ok(Self {
            width,
            height,
            data: vec![value; width * height],
        })
    }

    pub fn from_vec(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        check_dims(width, height)?;
        check_len(width, height, width * height, data.len())?;
        Ok(Self {
            width,
            height,
            data,
        })
    }

    /// Builds an image by evaluating `f(x, y)` at every pixel.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u8) -> Result<Self> {
        check_dims(width, height)?;
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn dimensions(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: u8) {
        self.data[y * self.width + x] = value;
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [u8] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<u8> {
        self.data
    }

    /// 256-bin intensity histogram.
    pub fn histogram(&self) -> [u64; 256] {
        let mut hist = [0u64; 256];
        for &v in &self.data {
            hist[v as usize] += 1;
        }
        hist
    }
}

/// 8-bit RGB image, three interleaved bytes per pixel.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ColorImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl ColorImage {
    pub fn from_vec(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        check_dims(width, height)?;
        check_len(width, height, 3 * width * height, data.len())?;
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, rgb: [u8; 3]) -> Result<Self> {
        check_dims(width, height)?;
        let data = rgb.iter().copied().cycle().take(3 * width * height).collect();
        Ok(Self {
            width,
            height,
            data,
        })
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn dimensions(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> [u8; 3] {
        let i = 3 * (y * self.width + x);
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, rgb: [u8; 3]) {
        let i = 3 * (y * self.width + x);
        self.data[i..i + 3].copy_from_slice(&rgb);
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.data
    }

    /// Replicates a gray image into three equal channels.
    pub fn from_gray(gray: &GrayImage) -> Self {
        let data = gray.as_slice().iter().flat_map(|&v| [v, v, v]).collect();
        Self {
            width: gray.width(),
            height: gray.height(),
            data,
        }
    }
}

/// BT.601 luma of one RGB pixel, rounded to nearest.
#[inline]
pub fn luma(rgb: [u8; 3]) -> u8 {
    let y = 0.299 * rgb[0] as f64 + 0.587 * rgb[1] as f64 + 0.114 * rgb[2] as f64;
    y.round().clamp(0.0, 255.0) as u8
}

pub fn to_grayscale(img: &ColorImage) -> GrayImage {
    let data = img
        .as_slice()
        .chunks_exact(3)
        .map(|px| luma([px[0], px[1], px[2]]))
        .collect();
    GrayImage {
        width: img.width(),
        height: img.height(),
        data,
    }
}

/// Per-pixel class of a binarized image.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum Label {
    Foreground = 0,
    Background = 255,
}

impl Label {
    /// Intensity used when the label is written as an image.
    #[inline]
    pub fn intensity(self) -> u8 {
        self as u8
    }

    #[inline]
    pub fn is_foreground(self) -> bool {
        self == Label::Foreground
    }

    #[inline]
    pub fn from_foreground(fg: bool) -> Self {
        if fg {
            Label::Foreground
        } else {
            Label::Background
        }
    }

    #[inline]
    pub fn flipped(self) -> Self {
        match self {
            Label::Foreground => Label::Background,
            Label::Background => Label::Foreground,
        }
    }
}

/// Two-class label grid produced by every binarizer.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BinaryMap {
    width: usize,
    height: usize,
    labels: Vec<Label>,
}

impl BinaryMap {
    pub fn filled(width: usize, height: usize, label: Label) -> Result<Self> {
        check_dims(width, height)?;
        Ok(Self {
            width,
            height,
            labels: vec![label; width * height],
        })
    }

    pub fn from_labels(width: usize, height: usize, labels: Vec<Label>) -> Result<Self> {
        check_dims(width, height)?;
        check_len(width, height, width * height, labels.len())?;
        Ok(Self {
            width,
            height,
            labels,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> Label) -> Result<Self> {
        check_dims(width, height)?;
        let mut labels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                labels.push(f(x, y));
            }
        }
        Ok(Self {
            width,
            height,
            labels,
        })
    }

    /// Reads a label image: intensities below 128 are foreground.
    pub fn from_gray(img: &GrayImage) -> Self {
        let labels = img
            .as_slice()
            .iter()
            .map(|&v| Label::from_foreground(v < 128))
            .collect();
        Self {
            width: img.width(),
            height: img.height(),
            labels,
        }
    }

    /// Foreground = 0, background = 255.
    pub fn to_gray(&self) -> GrayImage {
        GrayImage {
            width: self.width,
            height: self.height,
            data: self.labels.iter().map(|l| l.intensity()).collect(),
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn dimensions(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> Label {
        self.labels[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, label: Label) {
        self.labels[y * self.width + x] = label;
    }

    #[inline]
    pub fn is_foreground(&self, x: usize, y: usize) -> bool {
        self.get(x, y).is_foreground()
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn labels_mut(&mut self) -> &mut [Label] {
        &mut self.labels
    }

    pub fn foreground_count(&self) -> usize {
        self.labels.iter().filter(|l| l.is_foreground()).count()
    }

    pub fn ensure_same_size(&self, other: &BinaryMap) -> Result<()> {
        if self.dimensions() != other.dimensions() {
            return Err(Error::mismatch(self.dimensions(), other.dimensions()));
        }
        Ok(())
    }
}
