//! Per-pixel softmax and two-class cross-entropy.

use hdadbin_core::BinaryMap;

use crate::error::{NnError, Result};
use crate::model::CLASSES;
use crate::tensor::{Scalar, Tensor};

/// Probabilities are clamped to `[PROB_FLOOR, 1 - PROB_FLOOR]` inside the log.
pub const PROB_FLOOR: f64 = 1e-12;

/// Class index per pixel: 0 for foreground, 1 for background.
pub fn target_classes(map: &BinaryMap) -> Vec<u8> {
    map.labels().iter().map(|l| u8::from(!l.is_foreground())).collect()
}

pub fn softmax_channels<T: Scalar>(logits: &Tensor<T>) -> Tensor<T> {
    let [c, h, w] = logits.shape();
    let n = h * w;
    let mut out = logits.clone();
    let data = out.data_mut();
    for p in 0..n {
        let mut m = data[p];
        for k in 1..c {
            m = m.max(data[k * n + p]);
        }
        let mut sum = T::ZERO;
        for k in 0..c {
            let e = (data[k * n + p] - m).exp();
            data[k * n + p] = e;
            sum += e;
        }
        for k in 0..c {
            data[k * n + p] = data[k * n + p] / sum;
        }
    }
    out
}

fn check(probs: &Tensor<f64>, target: &[u8]) -> Result<()> {
    if probs.channels() != CLASSES || target.len() != probs.plane_len() {
        return Err(NnError::Shape(format!(
            "prediction {:?} against {} target pixels",
            probs.shape(),
            target.len()
        )));
    }
    if let Some(bad) = target.iter().find(|&&t| t as usize >= CLASSES) {
        return Err(NnError::Shape(format!("target class {bad} out of range")));
    }
    Ok(())
}

/// Mean of `-ln p(true class)` over pixels.
pub fn cross_entropy(probs: &Tensor<f64>, target: &[u8]) -> Result<f64> {
    check(probs, target)?;
    let n = probs.plane_len();
    let data = probs.data();
    let sum: f64 = target
        .iter()
        .enumerate()
        .map(|(p, &t)| -data[t as usize * n + p].clamp(PROB_FLOOR, 1.0 - PROB_FLOOR).ln())
        .sum();
    Ok(sum / n as f64)
}

pub fn loss(probs: &Tensor<f64>, target: &BinaryMap) -> Result<f64> {
    cross_entropy(probs, &target_classes(target))
}

/// Gradient of [`cross_entropy`] with respect to the logits: `(p - y) / N`.
pub fn softmax_residual(probs: &Tensor<f64>, target: &[u8]) -> Result<Tensor<f64>> {
    check(probs, target)?;
    let n = probs.plane_len();
    let mut g = probs.clone();
    let data = g.data_mut();
    for (p, &t) in target.iter().enumerate() {
        data[t as usize * n + p] -= 1.0;
    }
    let inv = 1.0 / n as f64;
    data.iter_mut().for_each(|v| *v *= inv);
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn softmax_of_zeros_is_half() {
        let p = softmax_channels(&Tensor::<f64>::zeros(2, 3, 3).unwrap());
        assert!(p.data().iter().all(|&v| v == 0.5));
    }

    #[test]
    fn uniform_prediction_costs_ln2() {
        let p = Tensor::from_vec(2, 2, 2, vec![0.5; 8]).unwrap();
        let l = cross_entropy(&p, &[0, 1, 1, 0]).unwrap();
        assert!((l - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn perfect_prediction_costs_nothing() {
        let p = Tensor::from_vec(2, 1, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let l = cross_entropy(&p, &[0, 1]).unwrap();
        assert!((0.0..1e-11).contains(&l));
        // Confidently wrong stays finite.
        let l = cross_entropy(&p, &[1, 0]).unwrap();
        assert!((l + PROB_FLOOR.ln()).abs() < 1e-9);
    }

    #[test]
    fn extreme_logits_stay_finite() {
        let t = Tensor::from_vec(2, 1, 1, vec![1000.0, -1000.0]).unwrap();
        let p = softmax_channels(&t);
        assert_eq!(p.data(), &[1.0, 0.0]);
    }

    #[test]
    fn shape_errors() {
        let p = Tensor::from_vec(2, 1, 2, vec![0.5; 4]).unwrap();
        assert!(cross_entropy(&p, &[0]).is_err());
        assert!(cross_entropy(&p, &[0, 2]).is_err());
    }
}
