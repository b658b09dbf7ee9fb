//! Iterative histogram-equalization global thresholding.
//!
//! Each round shifts the image up by `255 - mean`, freezes pixels that
//! saturate at 255 as background, and stretches the survivors so the
//! darkest one lands on 0. The loop ends once the mean stops moving.

use crate::error::{Error, Result};
use crate::image::{BinaryMap, GrayImage, Label};

pub const DEFAULT_MAX_ITERATIONS: usize = 100;

/// Consecutive means closer than this count as equal.
pub const MEAN_TOLERANCE: f64 = 1e-9;

/// Which pixels contribute to the per-round mean.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum MeanDomain {
    /// Every pixel, saturated background included.
    #[default]
    WholeMap,
    /// Only pixels not yet frozen as background.
    ExcludeBackground,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct IhegtConfig {
    pub max_iterations: usize,
    pub mean_domain: MeanDomain,
}

impl Default for IhegtConfig {
    fn default() -> Self {
        Self {
            max_iterations: DEFAULT_MAX_ITERATIONS,
            mean_domain: MeanDomain::WholeMap,
        }
    }
}

/// Why the loop stopped.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Termination {
    MeanConverged,
    IterationCap,
    AllBackground,
}

#[derive(Clone, Debug)]
pub struct IhegtState {
    pub working: Vec<f64>,
    pub background_mask: Vec<bool>,
    pub prev_mean: Option<f64>,
    pub iteration: usize,
}

impl IhegtState {
    pub fn new(img: &GrayImage) -> Self {
        Self {
            working: img.as_slice().iter().map(|&v| v as f64).collect(),
            background_mask: vec![false; img.as_slice().len()],
            prev_mean: None,
            iteration: 0,
        }
    }

    fn mean(&self, domain: MeanDomain) -> Option<f64> {
        let (sum, n) = match domain {
            MeanDomain::WholeMap => (self.working.iter().sum::<f64>(), self.working.len()),
            MeanDomain::ExcludeBackground => self
                .working
                .iter()
                .zip(&self.background_mask)
                .filter(|(_, &bg)| !bg)
                .fold((0.0, 0), |(s, n), (&v, _)| (s + v, n + 1)),
        };
        (n > 0).then(|| sum / n as f64)
    }

    pub fn all_background(&self) -> bool {
        self.background_mask.iter().all(|&bg| bg)
    }

    /// Runs one round. Returns `Some` when the loop should stop.
    pub fn step(&mut self, domain: MeanDomain) -> Option<Termination> {
        let Some(mean) = self.mean(domain) else {
            return Some(Termination::AllBackground);
        };
        if let Some(prev) = self.prev_mean {
            if (mean - prev).abs() < MEAN_TOLERANCE {
                return Some(Termination::MeanConverged);
            }
        }
        self.prev_mean = Some(mean);
        self.iteration += 1;

        let shift = 255.0 - mean;
        for (v, bg) in self.working.iter_mut().zip(self.background_mask.iter_mut()) {
            if *bg {
                continue;
            }
            *v += shift;
            if *v >= 255.0 {
                *v = 255.0;
                *bg = true;
            }
        }

        let min = self
            .working
            .iter()
            .zip(&self.background_mask)
            .filter(|(_, &bg)| !bg)
            .map(|(&v, _)| v)
            .fold(f64::INFINITY, f64::min);
        if !min.is_finite() {
            return Some(Termination::AllBackground);
        }
        for (v, &bg) in self.working.iter_mut().zip(&self.background_mask) {
            if !bg {
                *v = stretch(*v, min);
            }
        }
        None
    }
}

/// `255 - 255 * (255 - v) / (255 - min)`; needs `min < 255`.
#[inline]
pub fn stretch(v: f64, min: f64) -> f64 {
    255.0 - 255.0 * (255.0 - v) / (255.0 - min)
}

/// Binarizes with the default configuration and the given iteration cap.
pub fn ihegt_binarize(img: &GrayImage, max_iterations: usize) -> Result<BinaryMap> {
    ihegt_with(
        img,
        &IhegtConfig {
            max_iterations,
            ..IhegtConfig::default()
        },
    )
    .map(|(map, _)| map)
}

/// Full run returning the map, the stop reason and the round count.
pub fn ihegt_with(img: &GrayImage, cfg: &IhegtConfig) -> Result<(BinaryMap, IhegtTrace)> {
    if cfg.max_iterations == 0 {
        return Err(Error::InvalidParams("max_iterations must be at least 1".into()));
    }
    let mut state = IhegtState::new(img);
    let termination = loop {
        if state.iteration >= cfg.max_iterations {
            break Termination::IterationCap;
        }
        if let Some(t) = state.step(cfg.mean_domain) {
            break t;
        }
    };
    let labels = state
        .background_mask
        .iter()
        .map(|&bg| Label::from_foreground(!bg))
        .collect();
    let map = BinaryMap::from_labels(img.width(), img.height(), labels)?;
    Ok((
        map,
        IhegtTrace {
            termination,
            iterations: state.iteration,
        },
    ))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct IhegtTrace {
    pub termination: Termination,
    pub iterations: usize,
}
