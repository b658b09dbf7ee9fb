//! Binarization toolkit for degraded scanned drawings.
//!
//! * [`classical`]: Otsu, Niblack, Sauvola and the gradient-aware MLT rule.
//! * [`ihegt`]: iterative histogram-equalization global thresholding.
//! * [`labeling`]: MLT/IHEGT fusion, center-weighted median cleanup and
//!   correction layers for building ground truth.
//! * [`eval`]: recall, specificity, precision, F-measure, PSNR and reports.
//! * [`synth`]: synthetic degraded drawings with exact masks.
//!
//! The CNN binarizer lives in the `hdadbin-nn` crate.

pub mod classical;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod gradient;
pub mod ihegt;
pub mod image;
pub mod integral;
pub mod io;
pub mod labeling;
pub mod method;
pub mod synth;
pub mod tiling;

pub use crate::error::{Error, Result};
pub use crate::image::{to_grayscale, BinaryMap, ColorImage, GrayImage, Label};
