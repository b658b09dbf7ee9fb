//! Sobel gradient magnitudes and their window statistics.

use std::collections::VecDeque;

use crate::image::GrayImage;
use crate::integral::{Rect, RealIntegral};

/// Per-pixel non-negative gradient magnitude.
#[derive(Clone, Debug, PartialEq)]
pub struct GradientField {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl GradientField {
    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn integral(&self) -> RealIntegral {
        RealIntegral::new(self.width, self.height, &self.values)
    }

    /// Maximum magnitude inside the clipped `side x side` window of every
    /// pixel (same window convention as [`crate::integral::window`]).
    pub fn window_max(&self, side: usize) -> Vec<f64> {
        let before = side / 2;
        let after = side - 1 - before;
        let (w, h) = (self.width, self.height);
        let mut horiz = vec![0.0; w * h];
        for y in 0..h {
            let row = &self.values[y * w..(y + 1) * w];
            sliding_max(row, before, after, &mut horiz[y * w..(y + 1) * w]);
        }
        let mut out = vec![0.0; w * h];
        let mut col = vec![0.0; h];
        let mut col_out = vec![0.0; h];
        for x in 0..w {
            for y in 0..h {
                col[y] = horiz[y * w + x];
            }
            sliding_max(&col, before, after, &mut col_out);
            for y in 0..h {
                out[y * w + x] = col_out[y];
            }
        }
        out
    }

    /// Maximum over an arbitrary rectangle by direct scan.
    pub fn rect_max(&self, r: Rect) -> f64 {
        let mut m = 0.0f64;
        for y in r.y0..=r.y1 {
            for x in r.x0..=r.x1 {
                m = m.max(self.get(x, y));
            }
        }
        m
    }
}

/// `out[i] = max(input[i - before ..= i + after])`, clipped to the slice.
fn sliding_max(input: &[f64], before: usize, after: usize, out: &mut [f64]) {
    let n = input.len();
    let mut deque: VecDeque<usize> = VecDeque::new();
    let mut next = 0;
    for (i, slot) in out.iter_mut().enumerate() {
        let hi = (i + after).min(n - 1);
        while next <= hi {
            while let Some(&back) = deque.back() {
                if input[back] <= input[next] {
                    deque.pop_back();
                } else {
                    break;
                }
            }
            deque.push_back(next);
            next += 1;
        }
        let lo = i.saturating_sub(before);
        while let Some(&front) = deque.front() {
            if front < lo {
                deque.pop_front();
            } else {
                break;
            }
        }
        *slot = input[*deque.front().expect("window is never empty")];
    }
}

/// 3x3 Sobel magnitude `sqrt(gx^2 + gy^2)` with replicated borders.
pub fn gradient_magnitude(img: &GrayImage) -> GradientField {
    let (w, h) = img.dimensions();
    let px = |x: isize, y: isize| -> i32 {
        let cx = x.clamp(0, w as isize - 1) as usize;
        let cy = y.clamp(0, h as isize - 1) as usize;
        img.get(cx, cy) as i32
    };
    let mut values = Vec::with_capacity(w * h);
    for y in 0..h as isize {
        for x in 0..w as isize {
            let gx = (px(x + 1, y - 1) + 2 * px(x + 1, y) + px(x + 1, y + 1))
                - (px(x - 1, y - 1) + 2 * px(x - 1, y) + px(x - 1, y + 1));
            let gy = (px(x - 1, y + 1) + 2 * px(x, y + 1) + px(x + 1, y + 1))
                - (px(x - 1, y - 1) + 2 * px(x, y - 1) + px(x + 1, y - 1));
            values.push(((gx * gx + gy * gy) as f64).sqrt());
        }
    }
    GradientField {
        width: w,
        height: h,
        values,
    }
}
