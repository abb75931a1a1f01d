//! Evaluation metrics and uncertainty diagnostics: mean absolute error, mean
//! ensemble spread, relative L2, percentage normalized mean square error,
//! Gaussian kernel density estimates, and 95%-interval coverage.
//!
//! NMSE here is the global sum-of-squares ratio times 100,
//! `100 * sum((pred - truth)^2) / sum(truth^2)`; the per-sample variant is
//! reported in the breakdown table.

use serde::{Deserialize, Serialize};

use crate::ensemble::{relative_l2_loss, PredictionStats};
use crate::error::{CoreError, Result};
use crate::tensor::Tensor;

/// Mean absolute elementwise deviation over all samples and grid points.
pub fn mae(pred: &Tensor, truth: &Tensor) -> Result<f64> {
    if pred.shape() != truth.shape() {
        return Err(CoreError::ShapeMismatch {
            op: "mae",
            left: pred.shape().to_vec(),
            right: truth.shape().to_vec(),
        });
    }
    let total: f64 = pred
        .data()
        .iter()
        .zip(truth.data())
        .map(|(p, t)| (p - t).abs())
        .sum();
    Ok(total / pred.numel() as f64)
}

/// Flat mean of the ensemble standard-deviation field.
pub fn mean_std(stats: &PredictionStats) -> f64 {
    stats.std.data().iter().sum::<f64>() / stats.std.numel() as f64
}

/// Global percentage NMSE: `100 * sum((pred-truth)^2) / sum(truth^2)`.
pub fn nmse_percent(pred: &Tensor, truth: &Tensor) -> Result<f64> {
    if pred.shape() != truth.shape() {
        return Err(CoreError::ShapeMismatch {
            op: "nmse_percent",
            left: pred.shape().to_vec(),
            right: truth.shape().to_vec(),
        });
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for (p, t) in pred.data().iter().zip(truth.data()) {
        let d = p - t;
        num += d * d;
        den += t * t;
    }
    if den == 0.0 {
        return Err(CoreError::ZeroNormTruth { sample: 0 });
    }
    Ok(100.0 * num / den)
}

/// Mean per-sample relative L2 error, in percent.
pub fn rel_l2_percent(pred: &Tensor, truth: &Tensor) -> Result<f64> {
    Ok(100.0 * relative_l2_loss(pred, truth)?)
}

/// Fraction of points where `lower95 <= truth <= upper95`.
pub fn ci_coverage(stats: &PredictionStats, truth: &Tensor) -> Result<f64> {
    if stats.mean.shape() != truth.shape() {
        return Err(CoreError::ShapeMismatch {
            op: "ci_coverage",
            left: stats.mean.shape().to_vec(),
            right: truth.shape().to_vec(),
        });
    }
    let hits = truth
        .data()
        .iter()
        .zip(stats.lower95.data())
        .zip(stats.upper95.data())
        .filter(|((t, lo), hi)| **lo <= **t && **t <= **hi)
        .count();
    Ok(hits as f64 / truth.numel() as f64)
}

/// A kernel density estimate at one probe location.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PointPdf {
    /// Grid coordinates of the probed point (set by the caller).
    pub location: Vec<f64>,
    pub abscissae: Vec<f64>,
    pub density: Vec<f64>,
    pub bandwidth: f64,
    /// True when the sample was constant and the density is the documented
    /// single-bin spike of unit trapezoidal mass.
    pub degenerate: bool,
}

/// Gaussian KDE with Silverman's bandwidth
/// `0.9 min(sd, iqr/1.34) n^(-1/5)`, evaluated on `abscissae`.
/// Needs at least 30 values; a zero-variance sample yields the spike
/// representation with `degenerate = true`.
pub fn empirical_pdf(values: &[f64], abscissae: &[f64]) -> Result<PointPdf> {
    if values.len() < 30 {
        return Err(CoreError::InvalidArgument(format!(
            "kernel density estimate needs >= 30 values, got {}",
            values.len()
        )));
    }
    if abscissae.len() < 2 {
        return Err(CoreError::InvalidArgument(
            "need at least two evaluation abscissae".into(),
        ));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    let sd = var.sqrt();

    if values.iter().all(|&v| v == values[0]) {
        // All-constant sample: put unit mass in the bin nearest the value.
        let target = values[0];
        let nearest = abscissae
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| {
                (*a - target).abs().partial_cmp(&(*b - target).abs()).unwrap()
            })
            .map(|(i, _)| i)
            .unwrap();
        let mut density = vec![0.0; abscissae.len()];
        let dx = if nearest + 1 < abscissae.len() {
            abscissae[nearest + 1] - abscissae[nearest]
        } else {
            abscissae[nearest] - abscissae[nearest - 1]
        };
        density[nearest] = 1.0 / dx;
        return Ok(PointPdf {
            location: Vec::new(),
            abscissae: abscissae.to_vec(),
            density,
            bandwidth: 0.0,
            degenerate: true,
        });
    }

    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let iqr = quantile(&sorted, 0.75) - quantile(&sorted, 0.25);
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    let bandwidth = 0.9 * spread * n.powf(-0.2);

    let norm = 1.0 / (n * bandwidth * (2.0 * std::f64::consts::PI).sqrt());
    let density: Vec<f64> = abscissae
        .iter()
        .map(|&x| {
            let mut acc = 0.0;
            for &v in values {
                let z = (x - v) / bandwidth;
                acc += (-0.5 * z * z).exp();
            }
            acc * norm
        })
        .collect();
    Ok(PointPdf {
        location: Vec::new(),
        abscissae: abscissae.to_vec(),
        density,
        bandwidth,
        degenerate: false,
    })
}

/// Linear-interpolation quantile of pre-sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let w = pos - lo as f64;
    sorted[lo] * (1.0 - w) + sorted[hi] * w
}

/// Trapezoidal integral of a [`PointPdf`]; the invariant check.
pub fn pdf_mass(pdf: &PointPdf) -> f64 {
    let mut mass = 0.0;
    for w in pdf.abscissae.windows(2).zip(pdf.density.windows(2)) {
        let (x, d) = w;
        mass += 0.5 * (x[1] - x[0]) * (d[0] + d[1]);
    }
    mass
}

/// One row of the per-sample breakdown.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampleMetrics {
    pub sample: usize,
    pub mae: f64,
    pub rel_l2_percent: f64,
    pub nmse_percent: f64,
    pub coverage95: f64,
}

/// Aggregate evaluation of an ensemble's predictions against ground truth.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub mae: f64,
    pub mean_std: f64,
    pub rel_l2_percent: f64,
    pub nmse_percent: f64,
    pub coverage95: f64,
    pub per_sample: Vec<SampleMetrics>,
}

/// Builds the full report from prediction statistics and ground truth.
pub fn build_report(stats: &PredictionStats, truth: &Tensor) -> Result<EvalReport> {
    let count = truth.shape()[0];
    let per = truth.numel() / count;
    let mut per_sample = Vec::with_capacity(count);
    for s in 0..count {
        let idx = [s];
        let pm = stats.mean.gather_rows(&idx);
        let tr = truth.gather_rows(&idx);
        let sample_stats = PredictionStats {
            mean: pm.clone(),
            std: stats.std.gather_rows(&idx),
            lower95: stats.lower95.gather_rows(&idx),
            upper95: stats.upper95.gather_rows(&idx),
        };
        per_sample.push(SampleMetrics {
            sample: s,
            mae: mae(&pm, &tr)?,
            rel_l2_percent: rel_l2_percent(&pm, &tr)?,
            nmse_percent: nmse_percent(&pm, &tr)?,
            coverage95: ci_coverage(&sample_stats, &tr)?,
        });
    }
    let _ = per;
    Ok(EvalReport {
        mae: mae(&stats.mean, truth)?,
        mean_std: mean_std(stats),
        rel_l2_percent: rel_l2_percent(&stats.mean, truth)?,
        nmse_percent: nmse_percent(&stats.mean, truth)?,
        coverage95: ci_coverage(stats, truth)?,
        per_sample,
    })
}
