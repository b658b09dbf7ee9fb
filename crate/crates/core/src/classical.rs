//! Global (Otsu) and local (Niblack, Sauvola, MLT) threshold binarizers.
//!
//! Every local method labels a pixel foreground when its intensity is
//! strictly below the local threshold; ties go to background.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gradient::gradient_magnitude;
use crate::image::{BinaryMap, GrayImage, Label};
use crate::integral::{window, IntegralImage};

/// Side of the square block used by [`MltWindow::Block`].
pub const MLT_BLOCK_SIDE: usize = 256;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThresholdParams {
    /// Method coefficient.
    pub k: f64,
    /// Odd window side in pixels.
    pub w: usize,
    /// Dynamic range normalizer (Sauvola only).
    pub r: f64,
}

impl ThresholdParams {
    pub fn niblack() -> Self {
        Self { k: 0.1, w: 17, r: 128.0 }
    }

    pub fn sauvola() -> Self {
        Self { k: 0.5, w: 17, r: 128.0 }
    }

    pub fn mlt() -> Self {
        Self { k: 0.02, w: 17, r: 128.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.w < 3 || self.w.is_multiple_of(2) {
            return Err(Error::InvalidParams(format!("window side must be odd and >= 3, got {}", self.w)));
        }
        if !(self.r > 0.0) || !self.r.is_finite() {
            return Err(Error::InvalidParams(format!("R must be positive, got {}", self.r)));
        }
        if !self.k.is_finite() {
            return Err(Error::InvalidParams(format!("k must be finite, got {}", self.k)));
        }
        Ok(())
    }
}

/// Labels `v < t` foreground for every pixel.
pub fn apply_thresholds(img: &GrayImage, thresholds: &[f64]) -> BinaryMap {
    assert_eq!(img.as_slice().len(), thresholds.len());
    let labels = img
        .as_slice()
        .iter()
        .zip(thresholds)
        .map(|(&v, &t)| Label::from_foreground((v as f64) < t))
        .collect();
    BinaryMap::from_labels(img.width(), img.height(), labels).expect("dimensions come from a valid image")
}

fn per_pixel(img: &GrayImage, f: impl Fn(usize, usize) -> f64 + Sync) -> Vec<f64> {
    let w = img.width();
    let mut out = vec![0.0; w * img.height()];
    out.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
        for (x, t) in row.iter_mut().enumerate() {
            *t = f(x, y);
        }
    });
    out
}

// ---------------------------------------------------------------------------
// Otsu
// ---------------------------------------------------------------------------

/// `a * b` as a 256-bit `(high, low)` pair.
fn mul_wide(a: u128, b: u128) -> (u128, u128) {
    const M: u128 = u64::MAX as u128;
    let (a1, a0, b1, b0) = (a >> 64, a & M, b >> 64, b & M);
    let (lo, mid1, mid2, hi) = (a0 * b0, a1 * b0, a0 * b1, a1 * b1);
    let (lo, c1) = lo.overflowing_add(mid1 << 64);
    let (lo, c2) = lo.overflowing_add(mid2 << 64);
    (hi + (mid1 >> 64) + (mid2 >> 64) + c1 as u128 + c2 as u128, lo)
}

/// Threshold minimizing within-class variance, smallest on ties; `None` for
/// single-valued histograms.
///
/// Classes are `{v <= t}` and `{v > t}`. Minimizing the within-class scatter
/// is maximizing `S0^2 / n0 + S1^2 / n1` (class sums `S`, counts `n`); that
/// fraction is compared exactly so ties resolve by the rule, not by rounding.
/// Exact for histograms of up to 2^32 samples.
pub fn otsu_threshold_from_histogram(hist: &[u64; 256]) -> Option<u8> {
    let (mut n_tot, mut s_tot) = (0u128, 0u128);
    for (v, &c) in hist.iter().enumerate() {
        n_tot += c as u128;
        s_tot += c as u128 * v as u128;
    }
    let (mut n0, mut s0) = (0u128, 0u128);
    // Best (numerator, denominator).
    let mut best: Option<(usize, u128, u128)> = None;
    for (t, &c) in hist.iter().enumerate().take(255) {
        n0 += c as u128;
        s0 += c as u128 * t as u128;
        let (n1, s1) = (n_tot - n0, s_tot - s0);
        if n0 == 0 || n1 == 0 {
            continue;
        }
        let num = s0 * s0 * n1 + s1 * s1 * n0;
        let den = n0 * n1;
        let better = match best {
            None => true,
            Some((_, bn, bd)) => mul_wide(num, bd) > mul_wide(bn, den),
        };
        if better {
            best = Some((t, num, den));
        }
    }
    best.map(|(t, _, _)| t as u8)
}

pub fn otsu_threshold(img: &GrayImage) -> Option<u8> {
    otsu_threshold_from_histogram(&img.histogram())
}

/// Global Otsu: foreground iff intensity <= T*. A constant image has no
/// second class and maps to all background.
pub fn otsu(img: &GrayImage) -> BinaryMap {
    let labels = match otsu_threshold(img) {
        Some(t) => img.as_slice().iter().map(|&v| Label::from_foreground(v <= t)).collect(),
        None => vec![Label::Background; img.as_slice().len()],
    };
    BinaryMap::from_labels(img.width(), img.height(), labels).expect("dimensions come from a valid image")
}

// ---------------------------------------------------------------------------
// Niblack / Sauvola
// ---------------------------------------------------------------------------

pub fn niblack_thresholds(img: &GrayImage, p: &ThresholdParams) -> Result<Vec<f64>> {
    p.validate()?;
    let ii = IntegralImage::new(img);
    Ok(per_pixel(img, |x, y| {
        let (m, s) = ii.local_mean_std(x, y, p.w);
        m + p.k * s
    }))
}

/// `T = m + k * S`.
pub fn niblack(img: &GrayImage, p: &ThresholdParams) -> Result<BinaryMap> {
    Ok(apply_thresholds(img, &niblack_thresholds(img, p)?))
}

pub fn sauvola_thresholds(img: &GrayImage, p: &ThresholdParams) -> Result<Vec<f64>> {
    p.validate()?;
    let ii = IntegralImage::new(img);
    Ok(per_pixel(img, |x, y| {
        let (m, s) = ii.local_mean_std(x, y, p.w);
        m * (1.0 + p.k * (s / p.r - 1.0))
    }))
}

/// `T = m * (1 + k * (S / R - 1))`.
pub fn sauvola(img: &GrayImage, p: &ThresholdParams) -> Result<BinaryMap> {
    Ok(apply_thresholds(img, &sauvola_thresholds(img, p)?))
}

// ---------------------------------------------------------------------------
// MLT
// ---------------------------------------------------------------------------

/// Region over which MLT gathers its mean intensity, mean gradient and
/// maximum gradient.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum MltWindow {
    /// The `w x w` window of [`ThresholdParams`].
    #[default]
    Local,
    /// A fixed 256 x 256 block around the pixel.
    Block,
}

impl MltWindow {
    fn side(self, p: &ThresholdParams) -> usize {
        match self {
            MltWindow::Local => p.w,
            MltWindow::Block => MLT_BLOCK_SIDE,
        }
    }
}

/// MLT threshold from window statistics. `M = 0` means every gradient in
/// the window is zero; the exponent is then taken as 0.
#[inline]
pub fn mlt_threshold(mean: f64, mean_gradient: f64, max_gradient: f64, k: f64) -> f64 {
    let ratio = if max_gradient > 0.0 {
        mean_gradient / max_gradient
    } else {
        0.0
    };
    mean * (1.0 - k * (-ratio).exp())
}

pub fn mlt_thresholds(img: &GrayImage, p: &ThresholdParams, mode: MltWindow) -> Result<Vec<f64>> {
    p.validate()?;
    let side = mode.side(p);
    let (w, h) = img.dimensions();
    let ii = IntegralImage::new(img);
    let grad = gradient_magnitude(img);
    let gi = grad.integral();
    let gmax = grad.window_max(side);
    Ok(per_pixel(img, |x, y| {
        let r = window(x, y, side, w, h);
        let n = r.area() as f64;
        let mean = ii.rect_sum(r) as f64 / n;
        let mean_grad = gi.rect_sum(r) / n;
        mlt_threshold(mean, mean_grad, gmax[y * w + x], p.k)
    }))
}

/// `T = mu * (1 - k * exp(-mu_grad / M))` over the default local window.
pub fn mlt(img: &GrayImage, p: &ThresholdParams) -> Result<BinaryMap> {
    mlt_with(img, p, MltWindow::Local)
}

pub fn mlt_with(img: &GrayImage, p: &ThresholdParams, mode: MltWindow) -> Result<BinaryMap> {
    Ok(apply_thresholds(img, &mlt_thresholds(img, p, mode)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn params_validation() {
        assert!(ThresholdParams { k: 0.1, w: 4, r: 128.0 }.validate().is_err());
        assert!(ThresholdParams { k: 0.1, w: 1, r: 128.0 }.validate().is_err());
        assert!(ThresholdParams { k: 0.1, w: 3, r: 0.0 }.validate().is_err());
        assert!(ThresholdParams::sauvola().validate().is_ok());
    }

    #[test]
    fn otsu_constant_image_is_background() {
        let map = otsu(&GrayImage::filled(7, 5, 130).unwrap());
        assert_eq!(map.foreground_count(), 0);
    }

    #[test]
    fn wide_product() {
        assert_eq!(mul_wide(u128::MAX, u128::MAX), (u128::MAX - 1, 1));
        assert_eq!(mul_wide(1 << 64, 1 << 64), (1, 0));
        assert_eq!(mul_wide(12345, 678), (0, 12345 * 678));
    }

    #[test]
    fn otsu_two_levels() {
        // 40% at 50, 60% at 200.
        let img = GrayImage::from_fn(10, 10, |x, _| if x < 4 { 50 } else { 200 }).unwrap();
        assert_eq!(otsu_threshold(&img), Some(50));
        let map = otsu(&img);
        for y in 0..10 {
            for x in 0..10 {
                assert_eq!(map.is_foreground(x, y), x < 4);
            }
        }
    }

    #[test]
    fn niblack_constant_is_background() {
        let img = GrayImage::filled(20, 20, 100).unwrap();
        let t = niblack_thresholds(&img, &ThresholdParams::niblack()).unwrap();
        assert!(t.iter().all(|&t| t == 100.0));
        assert_eq!(niblack(&img, &ThresholdParams::niblack()).unwrap().foreground_count(), 0);
    }

    #[test]
    fn niblack_checkerboard_interior() {
        let img = GrayImage::from_fn(40, 40, |x, y| if (x + y) % 2 == 0 { 0 } else { 255 }).unwrap();
        // A 4x4 window holds eight of each value.
        let p = ThresholdParams { k: 0.1, w: 17, r: 128.0 };
        let ii = IntegralImage::new(&img);
        let r = crate::integral::Rect { x0: 10, y0: 10, x1: 13, y1: 13 };
        assert_eq!(ii.rect_mean_std(r), (127.5, 127.5));
        assert!((127.5 + 0.1 * 127.5 - 140.25f64).abs() < 1e-12);
        // Odd windows are near-balanced: T stays between 0 and 255.
        let map = niblack(&img, &p).unwrap();
        for y in 8..32 {
            for x in 8..32 {
                assert_eq!(map.is_foreground(x, y), img.get(x, y) == 0);
            }
        }
    }

    #[test]
    fn sauvola_flat_window_halves_mean() {
        let img = GrayImage::filled(30, 30, 180).unwrap();
        let t = sauvola_thresholds(&img, &ThresholdParams::sauvola()).unwrap();
        assert!(t.iter().all(|&t| t == 90.0));
    }

    #[test]
    fn sauvola_unit_ratio_keeps_mean() {
        let k = 0.5;
        let (m, s, r) = (128.0f64, 128.0, 128.0);
        assert_eq!(m * (1.0 + k * (s / r - 1.0)), 128.0);
    }

    #[test]
    fn mlt_uniform_block() {
        let img = GrayImage::filled(25, 25, 200).unwrap();
        let t = mlt_thresholds(&img, &ThresholdParams::mlt(), MltWindow::Local).unwrap();
        assert!(t.iter().all(|&t| (t - 196.0).abs() < 1e-12));
        assert_eq!(mlt(&img, &ThresholdParams::mlt()).unwrap().foreground_count(), 0);
    }

    #[test]
    fn mlt_equal_mean_and_max_gradient() {
        let t = mlt_threshold(100.0, 5.0, 5.0, 0.02);
        assert!((t / 100.0 - (1.0 - 0.02 * (-1.0f64).exp())).abs() < 1e-15);
        assert!((t / 100.0 - 0.99264).abs() < 1e-5);
    }

    #[test]
    fn mlt_block_mode_runs() {
        let img = GrayImage::from_fn(40, 30, |x, y| if (x / 5 + y / 5) % 2 == 0 { 40 } else { 220 }).unwrap();
        let map = mlt_with(&img, &ThresholdParams::mlt(), MltWindow::Block).unwrap();
        assert_eq!(map.dimensions(), (40, 30));
        // A 256 block covers the whole image, so every pixel shares one
        // threshold below the global mean.
        let t = mlt_thresholds(&img, &ThresholdParams::mlt(), MltWindow::Block).unwrap();
        assert!(t.iter().all(|&v| (v - t[0]).abs() < 1e-9));
    }
}
