//! Forward and backward kernels for the three layer kinds.
//!
//! Weight layouts are `[out][in][ky][kx]` for both 3x3 kinds and `[out][in]`
//! for the pointwise reduction. All 3x3 kernels use zero padding 1.

use crate::tensor::{matmul, Scalar, Tensor};

/// Output side of a padded 3x3 convolution: `ceil(n / stride)`.
pub fn conv_out_side(n: usize, stride: usize) -> usize {
    n.div_ceil(stride)
}

/// Unrolls 3x3 patches into a `(channels * 9) x (oh * ow)` matrix.
fn im2col<T: Scalar>(x: &Tensor<T>, stride: usize, oh: usize, ow: usize) -> Vec<T> {
    let [c, h, w] = x.shape();
    let p = oh * ow;
    let mut cols = vec![T::ZERO; c * 9 * p];
    for ci in 0..c {
        let plane = x.plane(ci);
        for ky in 0..3 {
            for kx in 0..3 {
                let row = &mut cols[((ci * 9) + ky * 3 + kx) * p..][..p];
                for oy in 0..oh {
                    let iy = (oy * stride + ky) as isize - 1;
                    if iy < 0 || iy >= h as isize {
                        continue;
                    }
                    let src = &plane[iy as usize * w..][..w];
                    let dst = &mut row[oy * ow..][..ow];
                    for (ox, d) in dst.iter_mut().enumerate() {
                        let ix = (ox * stride + kx) as isize - 1;
                        if ix >= 0 && ix < w as isize {
                            *d = src[ix as usize];
                        }
                    }
                }
            }
        }
    }
    cols
}

/// Adjoint of [`im2col`].
fn col2im<T: Scalar>(cols: &[T], c: usize, h: usize, w: usize, stride: usize, oh: usize, ow: usize) -> Vec<T> {
    let p = oh * ow;
    let mut out = vec![T::ZERO; c * h * w];
    for ci in 0..c {
        let plane = &mut out[ci * h * w..][..h * w];
        for ky in 0..3 {
            for kx in 0..3 {
                let row = &cols[((ci * 9) + ky * 3 + kx) * p..][..p];
                for oy in 0..oh {
                    let iy = (oy * stride + ky) as isize - 1;
                    if iy < 0 || iy >= h as isize {
                        continue;
                    }
                    let dst = &mut plane[iy as usize * w..][..w];
                    let src = &row[oy * ow..][..ow];
                    for (ox, &g) in src.iter().enumerate() {
                        let ix = (ox * stride + kx) as isize - 1;
                        if ix >= 0 && ix < w as isize {
                            dst[ix as usize] += g;
                        }
                    }
                }
            }
        }
    }
    out
}

fn add_bias<T: Scalar>(data: &mut [T], bias: &[T], plane: usize) {
    for (chunk, &b) in data.chunks_mut(plane).zip(bias) {
        for v in chunk {
            *v += b;
        }
    }
}

fn bias_grad<T: Scalar>(dout: &Tensor<T>) -> Vec<T> {
    (0..dout.channels())
        .map(|c| dout.plane(c).iter().fold(T::ZERO, |acc, &v| acc + v))
        .collect()
}

pub fn conv3x3_forward<T: Scalar>(x: &Tensor<T>, weight: &[T], bias: &[T], stride: usize) -> Tensor<T> {
    let [c, h, w] = x.shape();
    let out_c = bias.len();
    debug_assert_eq!(weight.len(), out_c * c * 9);
    let (oh, ow) = (conv_out_side(h, stride), conv_out_side(w, stride));
    let cols = im2col(x, stride, oh, ow);
    let mut out = vec![T::ZERO; out_c * oh * ow];
    matmul(out_c, c * 9, oh * ow, weight, false, &cols, false, &mut out, false);
    add_bias(&mut out, bias, oh * ow);
    Tensor::from_vec(out_c, oh, ow, out).expect("conv output shape")
}

/// Returns `(dweight, dbias, dinput)`; the input gradient is skipped when
/// not requested.
pub fn conv3x3_backward<T: Scalar>(
    x: &Tensor<T>,
    weight: &[T],
    dout: &Tensor<T>,
    stride: usize,
    want_input: bool,
) -> (Vec<T>, Vec<T>, Option<Tensor<T>>) {
    let [c, h, w] = x.shape();
    let [out_c, oh, ow] = dout.shape();
    let (k, p) = (c * 9, oh * ow);
    let cols = im2col(x, stride, oh, ow);
    let mut dw = vec![T::ZERO; out_c * k];
    matmul(out_c, p, k, dout.data(), false, &cols, true, &mut dw, false);
    let dx = want_input.then(|| {
        let mut dcols = vec![T::ZERO; k * p];
        matmul(k, out_c, p, weight, true, dout.data(), false, &mut dcols, false);
        Tensor::from_vec(c, h, w, col2im(&dcols, c, h, w, stride, oh, ow)).expect("conv input shape")
    });
    (dw, bias_grad(dout), dx)
}

pub fn pointwise_forward<T: Scalar>(x: &Tensor<T>, weight: &[T], bias: &[T]) -> Tensor<T> {
    let [c, h, w] = x.shape();
    let out_c = bias.len();
    let mut out = vec![T::ZERO; out_c * h * w];
    matmul(out_c, c, h * w, weight, false, x.data(), false, &mut out, false);
    add_bias(&mut out, bias, h * w);
    Tensor::from_vec(out_c, h, w, out).expect("pointwise output shape")
}

pub fn pointwise_backward<T: Scalar>(x: &Tensor<T>, weight: &[T], dout: &Tensor<T>) -> (Vec<T>, Vec<T>, Tensor<T>) {
    let [c, h, w] = x.shape();
    let out_c = dout.channels();
    let p = h * w;
    let mut dw = vec![T::ZERO; out_c * c];
    matmul(out_c, p, c, dout.data(), false, x.data(), true, &mut dw, false);
    let mut dx = vec![T::ZERO; c * p];
    matmul(c, out_c, p, weight, true, dout.data(), false, &mut dx, false);
    (dw, bias_grad(dout), Tensor::from_vec(c, h, w, dx).expect("pointwise input shape"))
}

/// Output index of input `i` under tap `k` for the stride-2 transposed
/// convolution, or `None` when it falls outside `0..2n`.
#[inline]
fn up_index(i: usize, k: usize, n: usize) -> Option<usize> {
    let o = (2 * i + k) as isize - 1;
    (o >= 0 && o < 2 * n as isize).then_some(o as usize)
}

/// Stride-2 transposed 3x3 convolution; every output side is twice the input.
pub fn deconv_forward<T: Scalar>(x: &Tensor<T>, weight: &[T], bias: &[T]) -> Tensor<T> {
    let [c, h, w] = x.shape();
    let out_c = bias.len();
    debug_assert_eq!(weight.len(), out_c * c * 9);
    let (oh, ow) = (2 * h, 2 * w);
    let mut out = vec![T::ZERO; out_c * oh * ow];
    for o in 0..out_c {
        let dst = &mut out[o * oh * ow..][..oh * ow];
        for ci in 0..c {
            let src = x.plane(ci);
            for ky in 0..3 {
                for kx in 0..3 {
                    let wv = weight[((o * c + ci) * 3 + ky) * 3 + kx];
                    for iy in 0..h {
                        let Some(oy) = up_index(iy, ky, h) else { continue };
                        let row = &src[iy * w..][..w];
                        let drow = &mut dst[oy * ow..][..ow];
                        for (ix, &v) in row.iter().enumerate() {
                            if let Some(ox) = up_index(ix, kx, w) {
                                drow[ox] += wv * v;
                            }
                        }
                    }
                }
            }
        }
    }
    add_bias(&mut out, bias, oh * ow);
    Tensor::from_vec(out_c, oh, ow, out).expect("deconv output shape")
}

pub fn deconv_backward<T: Scalar>(x: &Tensor<T>, weight: &[T], dout: &Tensor<T>) -> (Vec<T>, Vec<T>, Tensor<T>) {
    let [c, h, w] = x.shape();
    let [out_c, _, ow] = dout.shape();
    let mut dw = vec![T::ZERO; weight.len()];
    let mut dx = vec![T::ZERO; c * h * w];
    for o in 0..out_c {
        let g = dout.plane(o);
        for ci in 0..c {
            let src = x.plane(ci);
            let dsrc = &mut dx[ci * h * w..][..h * w];
            for ky in 0..3 {
                for kx in 0..3 {
                    let wi = ((o * c + ci) * 3 + ky) * 3 + kx;
                    let wv = weight[wi];
                    let mut acc = T::ZERO;
                    for iy in 0..h {
                        let Some(oy) = up_index(iy, ky, h) else { continue };
                        let grow = &g[oy * ow..][..ow];
                        for ix in 0..w {
                            if let Some(ox) = up_index(ix, kx, w) {
                                let gv = grow[ox];
                                acc += gv * src[iy * w + ix];
                                dsrc[iy * w + ix] += wv * gv;
                            }
                        }
                    }
                    dw[wi] += acc;
                }
            }
        }
    }
    (dw, bias_grad(dout), Tensor::from_vec(c, h, w, dx).expect("deconv input shape"))
}

pub fn relu_in_place<T: Scalar>(t: &mut Tensor<T>) {
    for v in t.data_mut() {
        if !(*v > T::ZERO) {
            *v = T::ZERO;
        }
    }
}

/// Zeroes gradient entries where the activation output was clipped.
pub fn relu_backward_in_place<T: Scalar>(grad: &mut Tensor<T>, activated: &Tensor<T>) {
    for (g, &a) in grad.data_mut().iter_mut().zip(activated.data()) {
        if !(a > T::ZERO) {
            *g = T::ZERO;
        }
    }
}
