//! Summed-area tables for constant-time window statistics.

use crate::image::GrayImage;

/// Inclusive pixel rectangle `[x0, x1] x [y0, y1]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Rect {
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
}

impl Rect {
    #[inline]
    pub fn area(&self) -> usize {
        (self.x1 - self.x0 + 1) * (self.y1 - self.y0 + 1)
    }
}

/// The `side x side` window around `(x, y)` clipped to a `width x height`
/// image.
///
/// Odd sides are centered. Even sides extend one pixel further up/left than
/// down/right (`side / 2` before, `side / 2 - 1` after).
#[inline]
pub fn window(x: usize, y: usize, side: usize, width: usize, height: usize) -> Rect {
    debug_assert!(side >= 1);
    let before = side / 2;
    let after = side - 1 - before;
    Rect {
        x0: x.saturating_sub(before),
        y0: y.saturating_sub(before),
        x1: (x + after).min(width - 1),
        y1: (y + after).min(height - 1),
    }
}

/// Prefix sums of intensities (`S1`) and squared intensities (`S2`), each
/// `(width + 1) x (height + 1)` with a zero first row and column.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntegralImage {
    width: usize,
    height: usize,
    sum: Vec<u64>,
    sum_sq: Vec<u64>,
}

impl IntegralImage {
    pub fn new(img: &GrayImage) -> Self {
        let (w, h) = img.dimensions();
        let stride = w + 1;
        let mut sum = vec![0u64; stride * (h + 1)];
        let mut sum_sq = vec![0u64; stride * (h + 1)];
        for y in 0..h {
            let mut row = 0u64;
            let mut row_sq = 0u64;
            for x in 0..w {
                let v = img.get(x, y) as u64;
                row += v;
                row_sq += v * v;
                let i = (y + 1) * stride + x + 1;
                sum[i] = sum[i - stride] + row;
                sum_sq[i] = sum_sq[i - stride] + row_sq;
            }
        }
        Self {
            width: w,
            height: h,
            sum,
            sum_sq,
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

    /// `S1[y][x]`: sum over `[0, x) x [0, y)`.
    #[inline]
    pub fn s1(&self, x: usize, y: usize) -> u64 {
        self.sum[y * (self.width + 1) + x]
    }

    /// `S2[y][x]`: sum of squares over `[0, x) x [0, y)`.
    #[inline]
    pub fn s2(&self, x: usize, y: usize) -> u64 {
        self.sum_sq[y * (self.width + 1) + x]
    }

    #[inline]
    fn rect_of(table: &[u64], stride: usize, r: Rect) -> u64 {
        let a = table[r.y0 * stride + r.x0];
        let b = table[r.y0 * stride + r.x1 + 1];
        let c = table[(r.y1 + 1) * stride + r.x0];
        let d = table[(r.y1 + 1) * stride + r.x1 + 1];
        d + a - b - c
    }

    #[inline]
    pub fn rect_sum(&self, r: Rect) -> u64 {
        Self::rect_of(&self.sum, self.width + 1, r)
    }

    #[inline]
    pub fn rect_sum_sq(&self, r: Rect) -> u64 {
        Self::rect_of(&self.sum_sq, self.width + 1, r)
    }

    /// Mean and population standard deviation over a rectangle.
    ///
    /// The variance numerator `n * S2 - S1^2` is formed in integers so a flat
    /// window yields exactly zero.
    #[inline]
    pub fn rect_mean_std(&self, r: Rect) -> (f64, f64) {
        let n = r.area() as u128;
        let s1 = self.rect_sum(r) as u128;
        let s2 = self.rect_sum_sq(r) as u128;
        let num = n * s2 - s1 * s1;
        let nf = n as f64;
        (s1 as f64 / nf, (num as f64).sqrt() / nf)
    }

    /// Statistics of the `w x w` window centered at `(x, y)`, truncated to
    /// the image.
    #[inline]
    pub fn local_mean_std(&self, x: usize, y: usize, w: usize) -> (f64, f64) {
        self.rect_mean_std(window(x, y, w, self.width, self.height))
    }
}

/// Free-function form of [`IntegralImage::new`].
pub fn integral_build(img: &GrayImage) -> IntegralImage {
    IntegralImage::new(img)
}

/// Real-valued prefix sums, used for gradient magnitudes.
#[derive(Clone, Debug)]
pub struct RealIntegral {
    width: usize,
    height: usize,
    sum: Vec<f64>,
}

impl RealIntegral {
    pub fn new(width: usize, height: usize, values: &[f64]) -> Self {
        assert_eq!(values.len(), width * height);
        let stride = width + 1;
        let mut sum = vec![0.0; stride * (height + 1)];
        for y in 0..height {
            let mut row = 0.0;
            for x in 0..width {
                row += values[y * width + x];
                let i = (y + 1) * stride + x + 1;
                sum[i] = sum[i - stride] + row;
            }
        }
        Self { width, height, sum }
    }

    #[inline]
    pub fn rect_sum(&self, r: Rect) -> f64 {
        let stride = self.width + 1;
        let a = self.sum[r.y0 * stride + r.x0];
        let b = self.sum[r.y0 * stride + r.x1 + 1];
        let c = self.sum[(r.y1 + 1) * stride + r.x0];
        let d = self.sum[(r.y1 + 1) * stride + r.x1 + 1];
        (d - b) - (c - a)
    }

    pub fn height(&self) -> usize {
        self.height
    }
}
