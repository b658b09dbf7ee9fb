//! Named, parameterized binarizers for the command line and reports.

use std::str::FromStr;

use crate::classical::{mlt_with, niblack, otsu, sauvola, MltWindow, ThresholdParams};
use crate::error::{Error, Result};
use crate::eval::Binarizer;
use crate::ihegt::{ihegt_with, IhegtConfig};
use crate::image::{BinaryMap, GrayImage};
use crate::labeling::{refined_truth, LabelingConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MethodKind {
    Otsu,
    Niblack,
    Sauvola,
    Mlt,
    Ihegt,
    /// The automatic labeling pipeline (MLT + IHEGT fusion, then CWMF).
    Pipeline,
}

impl MethodKind {
    pub const ALL: [MethodKind; 6] = [
        MethodKind::Otsu,
        MethodKind::Niblack,
        MethodKind::Sauvola,
        MethodKind::Mlt,
        MethodKind::Ihegt,
        MethodKind::Pipeline,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MethodKind::Otsu => "otsu",
            MethodKind::Niblack => "niblack",
            MethodKind::Sauvola => "sauvola",
            MethodKind::Mlt => "mlt",
            MethodKind::Ihegt => "ihegt",
            MethodKind::Pipeline => "pipeline",
        }
    }

    /// Paper-default parameters for the method's threshold rule.
    pub fn default_params(self) -> ThresholdParams {
        match self {
            MethodKind::Niblack => ThresholdParams::niblack(),
            MethodKind::Sauvola => ThresholdParams::sauvola(),
            _ => ThresholdParams::mlt(),
        }
    }
}

impl FromStr for MethodKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MethodKind::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidParams(format!("unknown method `{s}`")))
    }
}

/// A fully configured classical method.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClassicalMethod {
    pub kind: MethodKind,
    pub params: ThresholdParams,
    pub mlt_window: MltWindow,
    pub ihegt: IhegtConfig,
    pub labeling: LabelingConfig,
}

impl ClassicalMethod {
    pub fn new(kind: MethodKind) -> Self {
        Self {
            kind,
            params: kind.default_params(),
            mlt_window: MltWindow::Local,
            ihegt: IhegtConfig::default(),
            labeling: LabelingConfig::default(),
        }
    }

    pub fn run(&self, img: &GrayImage) -> Result<BinaryMap> {
        match self.kind {
            MethodKind::Otsu => Ok(otsu(img)),
            MethodKind::Niblack => niblack(img, &self.params),
            MethodKind::Sauvola => sauvola(img, &self.params),
            MethodKind::Mlt => mlt_with(img, &self.params, self.mlt_window),
            MethodKind::Ihegt => ihegt_with(img, &self.ihegt).map(|(m, _)| m),
            MethodKind::Pipeline => refined_truth(img, &self.labeling),
        }
    }
}

impl Binarizer for ClassicalMethod {
    fn name(&self) -> String {
        self.kind.name().to_string()
    }

    fn binarize(&self, img: &GrayImage) -> Result<BinaryMap> {
        self.run(img)
    }
}
