//! Finite-difference verification of the analytic gradients.
//!
//! ReLU makes the loss piecewise smooth. When a perturbation of `h` flips an
//! activation on one side, the central difference straddles a kink and is
//! not an oracle for the derivative at the point; the one-sided difference
//! from the side whose activation pattern is unchanged is used instead.

use crate::error::Result;
use crate::loss::cross_entropy;
use crate::model::{ForwardTrace, ModelParams};
use crate::tensor::Tensor;

/// Denominator floor of the relative error. Below it the central difference
/// is dominated by `f64` roundoff in the loss (about `1e-16 / h`).
pub const RELATIVE_FLOOR: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheck {
    pub parameters: usize,
    pub worst_relative_error: f64,
    pub worst_index: usize,
    /// Parameters whose perturbation crossed an activation kink.
    pub one_sided: usize,
}

fn activation_pattern(trace: &ForwardTrace<f64>) -> Vec<bool> {
    let relu_maps = trace.encoder.iter().chain(&trace.decoder[..trace.decoder.len() - 1]);
    relu_maps.flat_map(|t| t.data().iter().map(|&v| v > 0.0)).collect()
}

fn evaluate(arch_model: &ModelParams<f64>, values: &[f64], input: &Tensor<f64>, target: &[u8]) -> Result<(f64, Vec<bool>)> {
    let m = ModelParams::from_flat(*arch_model.arch(), values)?;
    let trace = m.forward_trace(input)?;
    Ok((cross_entropy(&trace.probs, target)?, activation_pattern(&trace)))
}

pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(RELATIVE_FLOOR)
}

/// Compares every analytic gradient entry against finite differences of
/// step `h`.
pub fn check_gradients(model: &ModelParams<f64>, input: &Tensor<f64>, target: &[u8], h: f64) -> Result<GradCheck> {
    let (_, grads) = model.loss_and_gradients(input, target)?;
    let base: Vec<f64> = model.values().collect();
    let (l0, pattern) = evaluate(model, &base, input, target)?;
    let mut report = GradCheck {
        parameters: base.len(),
        worst_relative_error: 0.0,
        worst_index: 0,
        one_sided: 0,
    };
    let mut probe = base.clone();
    for (i, analytic) in grads.values().enumerate() {
        probe[i] = base[i] + h;
        let (lp, pp) = evaluate(model, &probe, input, target)?;
        probe[i] = base[i] - h;
        let (lm, pm) = evaluate(model, &probe, input, target)?;
        probe[i] = base[i];
        let numeric = match (pp == pattern, pm == pattern) {
            (false, true) => (l0 - lm) / h,
            (true, false) => (lp - l0) / h,
            _ => (lp - lm) / (2.0 * h),
        };
        if (pp == pattern) != (pm == pattern) {
            report.one_sided += 1;
        }
        let rel = relative_error(analytic, numeric);
        if rel > report.worst_relative_error {
            report.worst_relative_error = rel;
            report.worst_index = i;
        }
    }
    Ok(report)
}
