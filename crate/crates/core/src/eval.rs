//! Pixel-level accuracy metrics, PSNR and dataset reports.
//!
//! Foreground is the positive class. Ratios with a zero denominator are
//! reported as 0.

use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;
use crate::image::{BinaryMap, GrayImage};
use crate::labeling::HdadPair;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Confusion {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    pub fn_: u64,
}

impl Confusion {
    pub fn total(&self) -> u64 {
        self.tp + self.tn + self.fp + self.fn_
    }

    pub fn errors(&self) -> u64 {
        self.fp + self.fn_
    }
}

impl std::ops::Add for Confusion {
    type Output = Confusion;

    fn add(self, o: Confusion) -> Confusion {
        Confusion {
            tp: self.tp + o.tp,
            tn: self.tn + o.tn,
            fp: self.fp + o.fp,
            fn_: self.fn_ + o.fn_,
        }
    }
}

pub fn confusion(pred: &BinaryMap, truth: &BinaryMap) -> Result<Confusion> {
    pred.ensure_same_size(truth)?;
    let mut c = Confusion::default();
    for (p, t) in pred.labels().iter().zip(truth.labels()) {
        match (p.is_foreground(), t.is_foreground()) {
            (true, true) => c.tp += 1,
            (false, false) => c.tn += 1,
            (true, false) => c.fp += 1,
            (false, true) => c.fn_ += 1,
        }
    }
    Ok(c)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct Metrics {
    pub recall: f64,
    pub specificity: f64,
    pub precision: f64,
    pub f_measure: f64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn metrics(c: &Confusion) -> Metrics {
    let recall = ratio(c.tp, c.tp + c.fn_);
    let precision = ratio(c.tp, c.tp + c.fp);
    let f_measure = if recall + precision > 0.0 {
        2.0 * recall * precision / (recall + precision)
    } else {
        0.0
    };
    Metrics {
        recall,
        specificity: ratio(c.tn, c.tn + c.fp),
        precision,
        f_measure,
    }
}

/// PSNR from a squared-error sum over `pixels` pixels; `inf` when equal.
fn psnr_from_errors(errors: u64, pixels: u64) -> f64 {
    if errors == 0 {
        return f64::INFINITY;
    }
    // Each differing pixel contributes 255^2, so 255^2 / MSE = pixels / errors.
    10.0 * (pixels as f64 / errors as f64).log10()
}

/// PSNR of the 0/255 encodings; `f64::INFINITY` for identical maps.
pub fn psnr(pred: &BinaryMap, truth: &BinaryMap) -> Result<f64> {
    pred.ensure_same_size(truth)?;
    let a = pred.to_gray();
    let b = truth.to_gray();
    Ok(psnr_gray(&a, &b))
}

fn psnr_gray(a: &GrayImage, b: &GrayImage) -> f64 {
    let sse: f64 = a
        .as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(&x, &y)| {
            let d = x as f64 - y as f64;
            d * d
        })
        .sum();
    if sse == 0.0 {
        return f64::INFINITY;
    }
    let mse = sse / a.as_slice().len() as f64;
    10.0 * (255.0 * 255.0 / mse).log10()
}

/// PSNR value as printed in reports.
pub fn format_psnr(v: f64) -> String {
    if v.is_infinite() {
        "inf".to_string()
    } else {
        format!("{v:.4}")
    }
}

/// Anything that turns a gray image into a label map.
pub trait Binarizer: Sync {
    fn name(&self) -> String;
    fn binarize(&self, img: &GrayImage) -> Result<BinaryMap>;
    /// Trainable parameter count for learned methods.
    fn parameter_count(&self) -> Option<usize> {
        None
    }
}

/// Wraps a closure as a named [`Binarizer`].
pub struct FnBinarizer<F> {
    name: String,
    f: F,
}

impl<F> FnBinarizer<F>
where
    F: Fn(&GrayImage) -> Result<BinaryMap> + Sync,
{
    pub fn new(name: impl Into<String>, f: F) -> Self {
        Self { name: name.into(), f }
    }
}

impl<F> Binarizer for FnBinarizer<F>
where
    F: Fn(&GrayImage) -> Result<BinaryMap> + Sync,
{
    fn name(&self) -> String {
        self.name.clone()
    }

    fn binarize(&self, img: &GrayImage) -> Result<BinaryMap> {
        (self.f)(img)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub enum Aggregation {
    /// Mean of per-image metrics.
    #[default]
    Macro,
    /// Metrics of the summed confusion counts.
    Micro,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvalRow {
    pub id: String,
    pub confusion: Confusion,
    pub metrics: Metrics,
    pub psnr: f64,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvalReport {
    pub method: String,
    pub aggregation: Aggregation,
    pub rows: Vec<EvalRow>,
    pub aggregate: Metrics,
    /// Mean PSNR over images with a finite value; `inf` if none.
    pub psnr: f64,
    /// Images whose PSNR was infinite and left out of the mean.
    pub infinite_psnr: usize,
    pub mean_seconds: f64,
    pub parameter_count: Option<usize>,
}

impl EvalReport {
    /// Aggregates already-scored rows. Rows are kept sorted by id so the
    /// fold order, and with it the result, ignores input order.
    pub fn from_rows(method: String, mut rows: Vec<EvalRow>, aggregation: Aggregation, parameter_count: Option<usize>) -> Self {
        rows.sort_by(|a, b| a.id.cmp(&b.id));
        let n = rows.len().max(1) as f64;
        let aggregate = match aggregation {
            Aggregation::Macro => {
                let mut m = Metrics::default();
                for r in &rows {
                    m.recall += r.metrics.recall;
                    m.specificity += r.metrics.specificity;
                    m.precision += r.metrics.precision;
                    m.f_measure += r.metrics.f_measure;
                }
                Metrics {
                    recall: m.recall / n,
                    specificity: m.specificity / n,
                    precision: m.precision / n,
                    f_measure: m.f_measure / n,
                }
            }
            Aggregation::Micro => metrics(&rows.iter().fold(Confusion::default(), |a, r| a + r.confusion)),
        };
        let psnr = match aggregation {
            Aggregation::Macro => {
                let finite: Vec<f64> = rows.iter().map(|r| r.psnr).filter(|p| p.is_finite()).collect();
                if finite.is_empty() {
                    f64::INFINITY
                } else {
                    finite.iter().sum::<f64>() / finite.len() as f64
                }
            }
            Aggregation::Micro => {
                let total = rows.iter().fold(Confusion::default(), |a, r| a + r.confusion);
                psnr_from_errors(total.errors(), total.total())
            }
        };
        let infinite_psnr = match aggregation {
            Aggregation::Macro => rows.iter().filter(|r| r.psnr.is_infinite()).count(),
            Aggregation::Micro => 0,
        };
        let mean_seconds = rows.iter().map(|r| r.seconds).sum::<f64>() / n;
        Self {
            method,
            aggregation,
            rows,
            aggregate,
            psnr,
            infinite_psnr,
            mean_seconds,
            parameter_count,
        }
    }

    /// Per-image table followed by the aggregate row.
    pub fn render_rows(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "method: {}", self.method);
        let _ = writeln!(
            out,
            "{:<24} {:>8} {:>8} {:>8} {:>8} {:>10} {:>10}",
            "Image", "Re", "Sp", "Pr", "F-m", "PSNR", "time (s)"
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:<24} {:>8.4} {:>8.4} {:>8.4} {:>8.4} {:>10} {:>10.3}",
                r.id,
                r.metrics.recall,
                r.metrics.specificity,
                r.metrics.precision,
                r.metrics.f_measure,
                format_psnr(r.psnr),
                r.seconds
            );
        }
        let _ = writeln!(
            out,
            "{:<24} {:>8.4} {:>8.4} {:>8.4} {:>8.4} {:>10} {:>10.3}",
            format!("{:?} mean", self.aggregation),
            self.aggregate.recall,
            self.aggregate.specificity,
            self.aggregate.precision,
            self.aggregate.f_measure,
            format_psnr(self.psnr),
            self.mean_seconds
        );
        out.push_str(&self.footnotes());
        out
    }

    fn footnotes(&self) -> String {
        let mut out = String::from("Ratios with a zero denominator are reported as 0.\n");
        if self.infinite_psnr > 0 {
            let _ = writeln!(
                out,
                "{} image(s) matched exactly (PSNR inf) and are excluded from the PSNR mean.",
                self.infinite_psnr
            );
        }
        out
    }

    /// CSV with one record per image and a final `aggregate` record.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("method,id,tp,tn,fp,fn,re,sp,pr,fm,psnr,seconds\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{:.6},{:.6},{:.6},{:.6},{},{:.6}",
                self.method,
                r.id,
                r.confusion.tp,
                r.confusion.tn,
                r.confusion.fp,
                r.confusion.fn_,
                r.metrics.recall,
                r.metrics.specificity,
                r.metrics.precision,
                r.metrics.f_measure,
                format_psnr(r.psnr),
                r.seconds
            );
        }
        let total = self.rows.iter().fold(Confusion::default(), |a, r| a + r.confusion);
        let _ = writeln!(
            out,
            "{},aggregate,{},{},{},{},{:.6},{:.6},{:.6},{:.6},{},{:.6}",
            self.method,
            total.tp,
            total.tn,
            total.fp,
            total.fn_,
            self.aggregate.recall,
            self.aggregate.specificity,
            self.aggregate.precision,
            self.aggregate.f_measure,
            format_psnr(self.psnr),
            self.mean_seconds
        );
        out
    }
}

/// One row per method with the accuracy columns plus parameter count and
/// time per image.
pub fn render_comparison(reports: &[EvalReport]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<16} {:>8} {:>8} {:>8} {:>8} {:>10} {:>14} {:>10}",
        "Method", "Re", "Sp", "Pr", "F-m", "PSNR", "#(parameters)", "time (s)"
    );
    for r in reports {
        let params = r.parameter_count.map_or_else(|| "-".to_string(), group_thousands);
        let _ = writeln!(
            out,
            "{:<16} {:>8.4} {:>8.4} {:>8.4} {:>8.4} {:>10} {:>14} {:>10.3}",
            r.method,
            r.aggregate.recall,
            r.aggregate.specificity,
            r.aggregate.precision,
            r.aggregate.f_measure,
            format_psnr(r.psnr),
            params,
            r.mean_seconds
        );
    }
    out.push_str("Ratios with a zero denominator are reported as 0.\n");
    let excluded: usize = reports.iter().map(|r| r.infinite_psnr).sum();
    if excluded > 0 {
        let _ = writeln!(out, "{excluded} exact match(es) with PSNR inf excluded from PSNR means.");
    }
    out
}

fn group_thousands(n: usize) -> String {
    let digits = n.to_string();
    let mut out = String::new();
    for (i, ch) in digits.chars().enumerate() {
        if i > 0 && (digits.len() - i).is_multiple_of(3) {
            out.push(',');
        }
        out.push(ch);
    }
    out
}

/// Scores one prediction against its truth.
pub fn score(id: &str, pred: &BinaryMap, truth: &BinaryMap, seconds: f64) -> Result<EvalRow> {
    let c = confusion(pred, truth)?;
    Ok(EvalRow {
        id: id.to_string(),
        confusion: c,
        metrics: metrics(&c),
        psnr: psnr(pred, truth)?,
        seconds,
    })
}

/// Runs `method` over every pair, rows in input order.
pub fn evaluate_dataset(method: &dyn Binarizer, pairs: &[HdadPair], aggregation: Aggregation) -> Result<EvalReport> {
    if pairs.is_empty() {
        return Err(crate::error::Error::InvalidParams("no pairs to evaluate".into()));
    }
    let rows = pairs
        .par_iter()
        .map(|pair| {
            let gray = pair.source().to_gray();
            let start = Instant::now();
            let pred = method.binarize(&gray)?;
            let seconds = start.elapsed().as_secs_f64();
            score(&pair.id, &pred, pair.truth(), seconds)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EvalReport::from_rows(method.name(), rows, aggregation, method.parameter_count()))
}
