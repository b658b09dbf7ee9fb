use serde::{Deserialize, Serialize};

use crate::error::{NnError, Result};
use crate::model::{Gradients, Layer, ModelParams};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Moment accumulators, laid out like the parameters they track.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    pub first: Vec<Layer<f64>>,
    pub second: Vec<Layer<f64>>,
    pub step: u64,
}

impl AdamState {
    pub fn new(model: &ModelParams<f64>, config: AdamConfig) -> Self {
        let zeros = Gradients::zeros_like(model).layers;
        Self {
            config,
            first: zeros.clone(),
            second: zeros,
            step: 0,
        }
    }
}

fn same_layout(a: &[Layer<f64>], b: &[Layer<f64>]) -> bool {
    a.len() == b.len()
        && a
            .iter()
            .zip(b)
            .all(|(x, y)| x.weight.len() == y.weight.len() && x.bias.len() == y.bias.len())
}

/// One bias-corrected Adam update.
pub fn adam_step(model: &mut ModelParams<f64>, grads: &Gradients, state: &mut AdamState) -> Result<()> {
    if !same_layout(model.layers(), &grads.layers) || !same_layout(model.layers(), &state.first) {
        return Err(NnError::Shape("gradient or optimizer state does not match the model".into()));
    }
    state.step += 1;
    let AdamConfig {
        learning_rate,
        beta1,
        beta2,
        epsilon,
    } = state.config;
    let t = state.step as i32;
    let c1 = 1.0 - beta1.powi(t);
    let c2 = 1.0 - beta2.powi(t);
    let params = model.values_mut();
    let g = grads.values();
    let m = state.first.iter_mut().flat_map(|l| l.weight.iter_mut().chain(l.bias.iter_mut()));
    let v = state.second.iter_mut().flat_map(|l| l.weight.iter_mut().chain(l.bias.iter_mut()));
    for (((p, g), m), v) in params.zip(g).zip(m).zip(v) {
        *m = beta1 * *m + (1.0 - beta1) * g;
        *v = beta2 * *v + (1.0 - beta2) * g * g;
        let m_hat = *m / c1;
        let v_hat = *v / c2;
        *p -= learning_rate * m_hat / (v_hat.sqrt() + epsilon);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_model, ArchConfig};

    fn tiny() -> ModelParams<f64> {
        build_model(ArchConfig { input_channels: 1, width: 2, levels: 1, block: 4 }, 1).unwrap()
    }

    #[test]
    fn zero_gradient_leaves_parameters() {
        let mut m = tiny();
        let before = m.clone();
        let mut s = AdamState::new(&m, AdamConfig::default());
        adam_step(&mut m, &Gradients::zeros_like(&before), &mut s).unwrap();
        assert_eq!(m, before);
        assert_eq!(s.step, 1);
    }

    #[test]
    fn first_step_closed_form() {
        let mut m = tiny();
        let before: Vec<f64> = m.values().collect();
        let mut g = Gradients::zeros_like(&m);
        g.layers.iter_mut().for_each(|l| l.weight.iter_mut().chain(l.bias.iter_mut()).for_each(|v| *v = 1.0));
        let mut s = AdamState::new(&m, AdamConfig::default());
        adam_step(&mut m, &g, &mut s).unwrap();
        let expect = -1e-3 / (1.0 + 1e-8);
        for (a, b) in m.values().zip(&before) {
            assert!(((a - b) - expect).abs() < 1e-15);
        }
    }

    #[test]
    fn layout_mismatch_is_rejected() {
        let mut m = tiny();
        let other = build_model(ArchConfig { input_channels: 3, width: 2, levels: 1, block: 4 }, 1).unwrap();
        let mut s = AdamState::new(&m, AdamConfig::default());
        assert!(adam_step(&mut m, &Gradients::zeros_like(&other), &mut s).is_err());
        assert_eq!(s.step, 0);
    }
}
