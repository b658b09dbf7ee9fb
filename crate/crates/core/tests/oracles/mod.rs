//! Direct-loop reference implementations: no prefix sums, no deques.
#![allow(dead_code)]

use hdadbin_core::{BinaryMap, GrayImage, Label};

fn clip_window(x: usize, y: usize, side: usize, w: usize, h: usize) -> (usize, usize, usize, usize) {
    let before = side / 2;
    let after = side - 1 - before;
    (x.saturating_sub(before), y.saturating_sub(before), (x + after).min(w - 1), (y + after).min(h - 1))
}

/// Exact integer window sums, then mean and population standard deviation.
fn window_stats(img: &GrayImage, x: usize, y: usize, side: usize) -> (f64, f64) {
    let (x0, y0, x1, y1) = clip_window(x, y, side, img.width(), img.height());
    let (mut n, mut s1, mut s2) = (0u128, 0u128, 0u128);
    for yy in y0..=y1 {
        for xx in x0..=x1 {
            let v = img.get(xx, yy) as u128;
            n += 1;
            s1 += v;
            s2 += v * v;
        }
    }
    let var_n2 = n * s2 - s1 * s1;
    (s1 as f64 / n as f64, (var_n2 as f64).sqrt() / n as f64)
}

fn threshold_map(img: &GrayImage, t: impl Fn(usize, usize) -> f64) -> BinaryMap {
    BinaryMap::from_fn(img.width(), img.height(), |x, y| Label::from_foreground((img.get(x, y) as f64) < t(x, y))).unwrap()
}

pub fn niblack(img: &GrayImage, k: f64, w: usize) -> BinaryMap {
    threshold_map(img, |x, y| {
        let (m, s) = window_stats(img, x, y, w);
        m + k * s
    })
}

pub fn sauvola(img: &GrayImage, k: f64, w: usize, r: f64) -> BinaryMap {
    threshold_map(img, |x, y| {
        let (m, s) = window_stats(img, x, y, w);
        m * (1.0 + k * (s / r - 1.0))
    })
}

/// Sobel magnitude with replicated borders.
pub fn sobel(img: &GrayImage) -> Vec<f64> {
    let (w, h) = img.dimensions();
    let px = |x: isize, y: isize| img.get(x.clamp(0, w as isize - 1) as usize, y.clamp(0, h as isize - 1) as usize) as i64;
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h as isize {
        for x in 0..w as isize {
            let gx = (px(x + 1, y - 1) + 2 * px(x + 1, y) + px(x + 1, y + 1)) - (px(x - 1, y - 1) + 2 * px(x - 1, y) + px(x - 1, y + 1));
            let gy = (px(x - 1, y + 1) + 2 * px(x, y + 1) + px(x + 1, y + 1)) - (px(x - 1, y - 1) + 2 * px(x, y - 1) + px(x + 1, y - 1));
            out.push(((gx * gx + gy * gy) as f64).sqrt());
        }
    }
    out
}

pub fn mlt(img: &GrayImage, k: f64, side: usize) -> BinaryMap {
    let (w, h) = img.dimensions();
    let grad = sobel(img);
    threshold_map(img, |x, y| {
        let (x0, y0, x1, y1) = clip_window(x, y, side, w, h);
        let (mut n, mut sum, mut gsum, mut gmax) = (0usize, 0u64, 0.0f64, 0.0f64);
        for yy in y0..=y1 {
            for xx in x0..=x1 {
                n += 1;
                sum += img.get(xx, yy) as u64;
                gsum += grad[yy * w + xx];
                gmax = gmax.max(grad[yy * w + xx]);
            }
        }
        let mu = sum as f64 / n as f64;
        let ratio = if gmax > 0.0 { (gsum / n as f64) / gmax } else { 0.0 };
        mu * (1.0 - k * (-ratio).exp())
    })
}

/// Sorts the explicit multiset (center repeated) and takes its median.
pub fn cwmf(map: &BinaryMap, window: usize, center_weight: usize) -> BinaryMap {
    let (w, h) = map.dimensions();
    BinaryMap::from_fn(w, h, |x, y| {
        let (x0, y0, x1, y1) = clip_window(x, y, window, w, h);
        let mut values = Vec::new();
        for yy in y0..=y1 {
            for xx in x0..=x1 {
                let copies = if (xx, yy) == (x, y) { center_weight } else { 1 };
                values.extend(std::iter::repeat_n(map.get(xx, yy).intensity(), copies));
            }
        }
        values.sort_unstable();
        let size = values.len();
        // Rank ceil((size + 1) / 2), one-based.
        let median = values[(size + 1).div_ceil(2) - 1];
        Label::from_foreground(median == 0)
    })
    .unwrap()
}

/// Exhaustive Otsu: for every split `{v <= t} | {v > t}` with both classes
/// nonempty, the within-class scatter `sum_c sum_{v in c} (v - mean_c)^2`
/// compared as exact fractions. Smallest `t` wins ties.
pub fn otsu_threshold(hist: &[u64; 256]) -> Option<u8> {
    // scatter_c * n_c = n_c * sum v^2 - (sum v)^2, kept as numerator/denominator.
    let class = |range: std::ops::RangeInclusive<usize>| {
        let (mut n, mut s1, mut s2) = (0i128, 0i128, 0i128);
        for v in range {
            let c = hist[v] as i128;
            n += c;
            s1 += c * v as i128;
            s2 += c * (v * v) as i128;
        }
        (n, n * s2 - s1 * s1)
    };
    let mut best: Option<(u8, i128, i128)> = None;
    for t in 0..255usize {
        let (n0, a0) = class(0..=t);
        let (n1, a1) = class(t + 1..=255);
        if n0 == 0 || n1 == 0 {
            continue;
        }
        // a0 / n0 + a1 / n1 = (a0 n1 + a1 n0) / (n0 n1)
        let (num, den) = (a0 * n1 + a1 * n0, n0 * n1);
        let better = match best {
            None => true,
            Some((_, bn, bd)) => num * bd < bn * den,
        };
        if better {
            best = Some((t as u8, num, den));
        }
    }
    best.map(|(t, _, _)| t)
}

pub fn fuse(a: &BinaryMap, b: &BinaryMap) -> BinaryMap {
    BinaryMap::from_fn(a.width(), a.height(), |x, y| Label::from_foreground(a.is_foreground(x, y) || b.is_foreground(x, y))).unwrap()
}

/// Random test pages: noise, flat patches, strokes and saturated runs, so
/// windows hit zero variance, zero gradient and extreme values.
pub fn random_image(seed: u64, w: usize, h: usize) -> GrayImage {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut img = match seed % 4 {
        0 => GrayImage::from_fn(w, h, |_, _| rng.random()).unwrap(),
        1 => GrayImage::filled(w, h, rng.random_range(150..=255)).unwrap(),
        2 => GrayImage::from_fn(w, h, |_, _| rng.random_range(180..=255)).unwrap(),
        _ => GrayImage::from_fn(w, h, |x, y| ((x / 9 + y / 13) % 3 * 100) as u8).unwrap(),
    };
    for _ in 0..rng.random_range(0..6) {
        let (x0, y0) = (rng.random_range(0..w), rng.random_range(0..h));
        let (pw, ph) = (rng.random_range(1..w / 2), rng.random_range(1..h / 2));
        let v: u8 = rng.random();
        for y in y0..(y0 + ph).min(h) {
            for x in x0..(x0 + pw).min(w) {
                img.set(x, y, v);
            }
        }
    }
    for _ in 0..rng.random_range(0..5) {
        let y = rng.random_range(0..h);
        let v = rng.random_range(0..60);
        for x in 0..w {
            img.set(x, y, v);
        }
    }
    img
}

pub fn random_map(seed: u64, w: usize, h: usize) -> BinaryMap {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let density = [0.02, 0.1, 0.4, 0.5, 0.9][(seed % 5) as usize];
    let mut map = BinaryMap::from_fn(w, h, |_, _| Label::from_foreground(rng.random_bool(density))).unwrap();
    if seed.is_multiple_of(3) {
        let x = rng.random_range(0..w);
        for y in 0..h {
            map.set(x, y, Label::Foreground);
        }
    }
    map
}

pub fn random_histogram(seed: u64) -> [u64; 256] {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut hist = [0u64; 256];
    match seed % 4 {
        0 => hist.iter_mut().for_each(|c| *c = rng.random_range(0..1000)),
        1 => {
            for _ in 0..rng.random_range(2..6) {
                hist[rng.random_range(0..256)] += rng.random_range(1..1000);
            }
        }
        2 => {
            // Bimodal.
            let (a, b) = (rng.random_range(10..100), rng.random_range(150..240));
            for v in 0..256usize {
                let d = (v as i64 - a).abs().min((v as i64 - b).abs());
                hist[v] = (400 / (1 + d * d / 8)) as u64;
            }
        }
        _ => {
            // Mirror-symmetric pairs produce exact ties.
            let v = rng.random_range(0..128usize);
            let c = rng.random_range(1..50);
            hist[v] = c;
            hist[255 - v] = c;
            hist[127] = rng.random_range(0..3);
            hist[128] = hist[127];
        }
    }
    hist
}
