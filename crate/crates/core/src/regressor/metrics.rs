use serde::{Deserialize, Serialize};

use super::network::{column, Estimate, RegressorModel};
use crate::{Error, Result};

pub const HISTOGRAM_BINS: usize = 20;

/// Counts over `HISTOGRAM_BINS` uniform bins; `edges` has one more entry
/// than `counts` and the last bin is closed on the right.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Histogram {
    /// Bins spanning the observed range. A zero-width range is widened to
    /// `[v − 0.5, v + 0.5]`.
    pub fn of(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty("histogram values"));
        }
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !(lo.is_finite() && hi.is_finite()) {
            return Err(Error::invalid("histogram values must be finite"));
        }
        let (lo, hi) = if lo == hi { (lo - 0.5, hi + 0.5) } else { (lo, hi) };
        let width = (hi - lo) / HISTOGRAM_BINS as f64;
        let edges = (0..=HISTOGRAM_BINS)
            .map(|i| if i == HISTOGRAM_BINS { hi } else { lo + width * i as f64 })
            .collect();
        let mut counts = vec![0; HISTOGRAM_BINS];
        for &v in values {
            let k = (((v - lo) / width) as usize).min(HISTOGRAM_BINS - 1);
            counts[k] += 1;
        }
        Ok(Self { edges, counts })
    }
}

/// Regression metrics of outputs `y` against targets `a`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// Pearson correlation; `None` when either side has zero variance.
    pub correlation_r: Option<f64>,
    /// Least-squares line `y = α a + β`; `None` for constant targets.
    pub fit_alpha: Option<f64>,
    pub fit_beta: Option<f64>,
    /// `F_j = 1 − |y_j − a_j| / a_j`; `None` where `a_j = 0`.
    pub accuracy: Vec<Option<f64>>,
    pub mean_accuracy: Option<f64>,
    /// Sample standard deviation of the defined `F_j`.
    pub accuracy_sd: Option<f64>,
    pub error_histogram: Histogram,
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (`n − 1` denominator); zero for one value.
pub fn sample_sd(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

pub fn metrics(targets: &[f64], outputs: &[f64]) -> Result<Metrics> {
    if targets.is_empty() {
        return Err(Error::Empty("targets"));
    }
    if targets.len() != outputs.len() {
        return Err(Error::DimensionMismatch { expected: targets.len(), got: outputs.len() });
    }
    let ma = mean(targets);
    let my = mean(outputs);
    let (mut saa, mut syy, mut say) = (0.0, 0.0, 0.0);
    for (&a, &y) in targets.iter().zip(outputs) {
        saa += (a - ma) * (a - ma);
        syy += (y - my) * (y - my);
        say += (a - ma) * (y - my);
    }
    let correlation_r = (saa > 0.0 && syy > 0.0).then(|| (say / (saa * syy).sqrt()).clamp(-1.0, 1.0));
    let fit_alpha = (saa > 0.0).then(|| say / saa);
    let fit_beta = fit_alpha.map(|alpha| my - alpha * ma);
    let accuracy: Vec<Option<f64>> = targets
        .iter()
        .zip(outputs)
        .map(|(&a, &y)| (a != 0.0).then(|| 1.0 - (y - a).abs() / a.abs()))
        .collect();
    let defined: Vec<f64> = accuracy.iter().flatten().copied().collect();
    let (mean_accuracy, accuracy_sd) = if defined.is_empty() {
        (None, None)
    } else {
        (Some(mean(&defined)), Some(sample_sd(&defined)))
    };
    let errors: Vec<f64> = outputs.iter().zip(targets).map(|(y, a)| y - a).collect();
    Ok(Metrics {
        correlation_r,
        fit_alpha,
        fit_beta,
        accuracy,
        mean_accuracy,
        accuracy_sd,
        error_histogram: Histogram::of(&errors)?,
    })
}

/// Per-dimension metrics for row-wise targets and outputs.
pub fn metrics_by_dimension(targets: &[Vec<f64>], outputs: &[Vec<f64>]) -> Result<Vec<Metrics>> {
    let dims = targets.first().map_or(0, Vec::len);
    if dims == 0 {
        return Err(Error::Empty("targets"));
    }
    if targets.len() != outputs.len() {
        return Err(Error::DimensionMismatch { expected: targets.len(), got: outputs.len() });
    }
    for row in targets.iter().chain(outputs) {
        if row.len() != dims {
            return Err(Error::DimensionMismatch { expected: dims, got: row.len() });
        }
    }
    (0..dims).map(|d| metrics(&column(targets, d), &column(outputs, d))).collect()
}

/// Statistics of repeated acquisitions at one parameter value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepeatedEstimate {
    pub estimates: Vec<Estimate>,
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
    /// Histogram of the first estimated quantity.
    pub histogram: Histogram,
}

pub fn evaluate_repeated(model: &RegressorModel, strings: &[Vec<f64>]) -> Result<RepeatedEstimate> {
    if strings.len() < 2 {
        return Err(Error::invalid(format!("need at least 2 acquisitions, got {}", strings.len())));
    }
    let estimates = model.estimate_batch(strings)?;
    let values: Vec<Vec<f64>> = estimates.iter().map(|e| e.values.clone()).collect();
    let dims = model.n_outputs();
    let mean = (0..dims).map(|d| self::mean(&column(&values, d))).collect();
    let sd = (0..dims).map(|d| sample_sd(&column(&values, d))).collect();
    Ok(RepeatedEstimate { histogram: Histogram::of(&column(&values, 0))?, estimates, mean, sd })
}
