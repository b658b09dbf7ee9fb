//! Synthetic degraded drawings with known clean masks.
//!
//! A page is drawn as line work (thin and thick lines, outlined and filled
//! rectangles, circles, short glyph-like strokes, some of them faded) on
//! off-white paper, then degraded with yellowing blotches, fold shading,
//! isolated speckles and low-amplitude sensor noise. The mask records only
//! the line work, so speckles and folds count as background.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::image::{BinaryMap, ColorImage, Label};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SynthConfig {
    pub width: usize,
    pub height: usize,
    pub seed: u64,
    /// Line-work primitives per 10,000 pixels.
    pub stroke_density: f64,
    /// Fraction of primitives drawn in faded ink.
    pub faded_fraction: f64,
    /// Speckles per 10,000 pixels.
    pub speckle_density: f64,
    pub yellowing: bool,
    pub folds: usize,
    /// Standard deviation of additive per-channel noise.
    pub noise_sigma: f64,
}

impl SynthConfig {
    pub fn new(width: usize, height: usize, seed: u64) -> Self {
        Self {
            width,
            height,
            seed,
            stroke_density: 4.0,
            faded_fraction: 0.25,
            speckle_density: 6.0,
            yellowing: true,
            folds: 1,
            noise_sigma: 1.5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SynthSample {
    pub image: ColorImage,
    pub mask: BinaryMap,
}

struct Canvas {
    width: usize,
    height: usize,
    /// Ink darkness in [0, 1] per pixel, 0 = no ink.
    ink: Vec<f64>,
    /// Ink gray level per pixel.
    tone: Vec<f64>,
}

impl Canvas {
    fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            ink: vec![0.0; width * height],
            tone: vec![255.0; width * height],
        }
    }

    fn dot(&mut self, cx: i64, cy: i64, radius: i64, tone: f64) {
        for dy in -radius..=radius {
            for dx in -radius..=radius {
                if radius > 1 && dx * dx + dy * dy > radius * radius {
                    continue;
                }
                let (x, y) = (cx + dx, cy + dy);
                if x < 0 || y < 0 || x >= self.width as i64 || y >= self.height as i64 {
                    continue;
                }
                let i = y as usize * self.width + x as usize;
                self.ink[i] = 1.0;
                self.tone[i] = self.tone[i].min(tone);
            }
        }
    }

    /// Thickness 1 draws a single-pixel Bresenham line; larger values stamp a
    /// square brush along it.
    fn line(&mut self, x0: i64, y0: i64, x1: i64, y1: i64, thickness: i64, tone: f64) {
        let (dx, dy) = ((x1 - x0).abs(), -(y1 - y0).abs());
        let (sx, sy) = (if x0 < x1 { 1 } else { -1 }, if y0 < y1 { 1 } else { -1 });
        let (mut x, mut y, mut err) = (x0, y0, dx + dy);
        let lo = -(thickness - 1) / 2;
        let hi = thickness / 2;
        loop {
            for oy in lo..=hi {
                for ox in lo..=hi {
                    self.dot(x + ox, y + oy, 0, tone);
                }
            }
            if x == x1 && y == y1 {
                break;
            }
            let e2 = 2 * err;
            if e2 >= dy {
                err += dy;
                x += sx;
            }
            if e2 <= dx {
                err += dx;
                y += sy;
            }
        }
    }

    fn rect_outline(&mut self, x0: i64, y0: i64, x1: i64, y1: i64, t: i64, tone: f64) {
        self.line(x0, y0, x1, y0, t, tone);
        self.line(x1, y0, x1, y1, t, tone);
        self.line(x1, y1, x0, y1, t, tone);
        self.line(x0, y1, x0, y0, t, tone);
    }

    fn rect_filled(&mut self, x0: i64, y0: i64, x1: i64, y1: i64, tone: f64) {
        for y in y0..=y1 {
            for x in x0..=x1 {
                self.dot(x, y, 0, tone);
            }
        }
    }

    fn circle(&mut self, cx: i64, cy: i64, r: i64, t: i64, tone: f64) {
        let steps = (8 * r).max(16);
        let mut prev = (cx + r, cy);
        for s in 1..=steps {
            let a = s as f64 / steps as f64 * std::f64::consts::TAU;
            let p = (cx + (r as f64 * a.cos()).round() as i64, cy + (r as f64 * a.sin()).round() as i64);
            self.line(prev.0, prev.1, p.0, p.1, t, tone);
            prev = p;
        }
    }
}

fn ink_tone(rng: &mut ChaCha8Rng, faded_fraction: f64) -> f64 {
    if rng.random_bool(faded_fraction.clamp(0.0, 1.0)) {
        rng.random_range(105.0..140.0)
    } else {
        rng.random_range(25.0..75.0)
    }
}

fn draw_primitive(c: &mut Canvas, rng: &mut ChaCha8Rng, faded_fraction: f64) {
    let (w, h) = (c.width as i64, c.height as i64);
    let tone = ink_tone(rng, faded_fraction);
    let thickness = *[1, 1, 2, 2, 3].get(rng.random_range(0..5)).unwrap();
    let x = rng.random_range(0..w);
    let y = rng.random_range(0..h);
    match rng.random_range(0..10) {
        // Long axis-aligned lines dominate engineering drawings.
        0..=3 => {
            let len = rng.random_range(w.min(h) / 4..=w.max(h));
            if rng.random_bool(0.5) {
                c.line(x, y, x + len, y, thickness, tone);
            } else {
                c.line(x, y, x, y + len, thickness, tone);
            }
        }
        4 => {
            let len = rng.random_range(10..=w.min(h).max(11) / 2);
            let (dx, dy) = (rng.random_range(-len..=len), rng.random_range(-len..=len));
            c.line(x, y, x + dx, y + dy, thickness, tone);
        }
        5 => {
            let (rw, rh) = (rng.random_range(12..60), rng.random_range(12..60));
            c.rect_outline(x, y, x + rw, y + rh, thickness, tone);
        }
        6 => {
            let (rw, rh) = (rng.random_range(6..22), rng.random_range(6..22));
            c.rect_filled(x, y, x + rw, y + rh, tone);
        }
        7 => {
            let r = rng.random_range(6..30);
            c.circle(x, y, r, thickness, tone);
        }
        _ => {
            // A short run of glyph-like strokes.
            let glyphs = rng.random_range(3..8);
            let size = rng.random_range(5..10);
            for g in 0..glyphs {
                let gx = x + g * (size + 2);
                let kind = rng.random_range(0..4);
                match kind {
                    0 => c.line(gx, y, gx, y + size, 1, tone),
                    1 => c.rect_outline(gx, y, gx + size / 2 + 1, y + size, 1, tone),
                    2 => {
                        c.line(gx, y + size, gx + size / 2, y, 1, tone);
                        c.line(gx + size / 2, y, gx + size, y + size, 1, tone);
                    }
                    _ => c.circle(gx + size / 2, y + size / 2, size / 2, 1, tone),
                }
            }
        }
    }
}

/// Renders one degraded page and its clean mask.
pub fn generate(cfg: &SynthConfig) -> SynthSample {
    let (w, h) = (cfg.width.max(1), cfg.height.max(1));
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let area = (w * h) as f64;

    let mut canvas = Canvas::new(w, h);
    let primitives = ((cfg.stroke_density * area / 10_000.0).round() as usize).max(1);
    for _ in 0..primitives {
        draw_primitive(&mut canvas, &mut rng, cfg.faded_fraction);
    }

    // Paper tint varies slightly page to page.
    let paper = [
        rng.random_range(228.0..240.0),
        rng.random_range(222.0..234.0),
        rng.random_range(205.0..220.0),
    ];
    let stain = [200.0, 168.0, 105.0];

    // Yellowing: a few broad Gaussian blotches.
    let mut yellow = vec![0.0f64; w * h];
    if cfg.yellowing {
        let blobs = rng.random_range(1..4);
        for _ in 0..blobs {
            let cx = rng.random_range(0.0..w as f64);
            let cy = rng.random_range(0.0..h as f64);
            let sigma = rng.random_range(0.15..0.45) * w.max(h) as f64;
            let amp = rng.random_range(0.4..0.85);
            for y in 0..h {
                for x in 0..w {
                    let d2 = (x as f64 - cx).powi(2) + (y as f64 - cy).powi(2);
                    let v = &mut yellow[y * w + x];
                    *v = (*v + amp * (-d2 / (2.0 * sigma * sigma)).exp()).min(0.9);
                }
            }
        }
    }

    // Folds: a broad shadow band with a bright crease down the middle.
    let mut fold = vec![0.0f64; w * h];
    for _ in 0..cfg.folds {
        let vertical = rng.random_bool(0.5);
        let pos = rng.random_range(0.2..0.8) * if vertical { w } else { h } as f64;
        let slope = rng.random_range(-0.05..0.05);
        let depth = rng.random_range(12.0..20.0);
        let sigma = rng.random_range(6.0..10.0);
        for y in 0..h {
            for x in 0..w {
                let (along, across) = if vertical { (y, x) } else { (x, y) };
                let d = across as f64 - (pos + slope * along as f64);
                let shade = -depth * (-d * d / (2.0 * sigma * sigma)).exp();
                let crease = 8.0 * (-d * d / 2.0).exp();
                fold[y * w + x] += shade + crease;
            }
        }
    }

    let noise = Normal::new(0.0, cfg.noise_sigma.max(0.0)).expect("finite sigma");
    let mut data = Vec::with_capacity(3 * w * h);
    for i in 0..w * h {
        let a = yellow[i];
        for ch in 0..3 {
            let base = paper[ch] * (1.0 - a) + stain[ch] * a + fold[i];
            let v = if canvas.ink[i] > 0.0 {
                // Ink keeps a trace of the stain underneath.
                canvas.tone[i] + 0.15 * (base - paper[ch])
            } else {
                base
            };
            let v = v + noise.sample(&mut rng);
            data.push(v.round().clamp(0.0, 255.0) as u8);
        }
    }
    let mut image = ColorImage::from_vec(w, h, data).expect("buffer sized from dimensions");

    // Speckles: isolated dark specks no larger than 2x2 or a plus sign.
    let specks = (cfg.speckle_density * area / 10_000.0).round() as usize;
    for _ in 0..specks {
        let (x, y) = (rng.random_range(0..w), rng.random_range(0..h));
        let v = rng.random_range(40.0..110.0f64).round() as u8;
        let shape: &[(i64, i64)] = match rng.random_range(0..3) {
            0 => &[(0, 0)],
            1 => &[(0, 0), (1, 0), (0, 1), (1, 1)],
            _ => &[(0, 0), (1, 0), (-1, 0), (0, 1), (0, -1)],
        };
        for &(dx, dy) in shape {
            let (px, py) = (x as i64 + dx, y as i64 + dy);
            if px >= 0 && py >= 0 && (px as usize) < w && (py as usize) < h {
                let i = py as usize * w + px as usize;
                if canvas.ink[i] == 0.0 {
                    image.set(px as usize, py as usize, [v, v, v.saturating_add(5)]);
                }
            }
        }
    }

    let mask = BinaryMap::from_labels(
        w,
        h,
        canvas.ink.iter().map(|&d| Label::from_foreground(d > 0.0)).collect(),
    )
    .expect("mask sized from dimensions");
    SynthSample { image, mask }
}
