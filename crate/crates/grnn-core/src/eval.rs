//! Evaluation metrics (mean squared error and variance of deviation), the
//! historical-average and persistence baselines, and the evaluation report.
//!
//! Metrics are computed in original units; callers invert any normalization
//! before scoring. VD uses the population form (divisor n*T): a high VD
//! relative to MSE means errors are dispersed, the signature of predictions
//! that lag the truth and miss peaks.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{GrnnError, Result};
use crate::online::TrainConfig;

fn check_shapes(truth: &Array2<f64>, prediction: &Array2<f64>) -> Result<()> {
    if truth.dim() != prediction.dim() {
        return Err(GrnnError::Contract(format!(
            "truth shape {:?} != prediction shape {:?}",
            truth.dim(),
            prediction.dim()
        )));
    }
    if truth.is_empty() {
        return Err(GrnnError::Contract("empty panels".into()));
    }
    Ok(())
}

/// Mean squared error over every segment and interval.
pub fn mse(truth: &Array2<f64>, prediction: &Array2<f64>) -> Result<f64> {
    check_shapes(truth, prediction)?;
    let mut acc = 0.0;
    for (x, o) in truth.iter().zip(prediction.iter()) {
        let e = x - o;
        acc += e * e;
    }
    Ok(acc / truth.len() as f64)
}

/// Variance of deviation: population variance of the error distribution.
pub fn vd(truth: &Array2<f64>, prediction: &Array2<f64>) -> Result<f64> {
    check_shapes(truth, prediction)?;
    let count = truth.len() as f64;
    let mut sum = 0.0;
    for (x, o) in truth.iter().zip(prediction.iter()) {
        sum += x - o;
    }
    let mean = sum / count;
    let mut acc = 0.0;
    for (x, o) in truth.iter().zip(prediction.iter()) {
        let d = (x - o) - mean;
        acc += d * d;
    }
    Ok(acc / count)
}

/// Per-segment mean squared error (one value per row).
pub fn per_segment_mse(truth: &Array2<f64>, prediction: &Array2<f64>) -> Result<Vec<f64>> {
    check_shapes(truth, prediction)?;
    let cols = truth.ncols() as f64;
    Ok((0..truth.nrows())
        .map(|i| {
            truth
                .row(i)
                .iter()
                .zip(prediction.row(i).iter())
                .map(|(x, o)| (x - o) * (x - o))
                .sum::<f64>()
                / cols
        })
        .collect())
}

/// Historical average: the prediction for interval t is the mean of all
/// prior observations at the same within-day offset. Intervals with no
/// prior same-offset data fall back to the segment's mean over all prior
/// intervals; the very first interval falls back to its own value.
pub fn historical_average(panel: &Array2<f64>, period: usize) -> Result<Array2<f64>> {
    if period == 0 {
        return Err(GrnnError::Parameter("period must be >= 1".into()));
    }
    let (n, l) = panel.dim();
    if l < period {
        return Err(GrnnError::Contract(format!(
            "panel length {l} is shorter than one period {period}"
        )));
    }
    let mut pred = Array2::<f64>::zeros((n, l));
    for i in 0..n {
        // running sums per within-day offset plus a running total
        let mut offset_sum = vec![0.0; period];
        let mut offset_count = vec![0usize; period];
        let mut total_sum = 0.0;
        for t in 0..l {
            let slot = t % period;
            pred[[i, t]] = if offset_count[slot] > 0 {
                offset_sum[slot] / offset_count[slot] as f64
            } else if t > 0 {
                total_sum / t as f64
            } else {
                panel[[i, 0]]
            };
            offset_sum[slot] += panel[[i, t]];
            offset_count[slot] += 1;
            total_sum += panel[[i, t]];
        }
    }
    Ok(pred)
}

/// Naive one-step persistence: the prediction for t is the observation at
/// t-1 (and the observation itself at t = 0).
pub fn persistence(panel: &Array2<f64>) -> Result<Array2<f64>> {
    let (n, l) = panel.dim();
    if l < 2 {
        return Err(GrnnError::Contract(
            "persistence needs at least two intervals".into(),
        ));
    }
    let mut pred = Array2::<f64>::zeros((n, l));
    for i in 0..n {
        pred[[i, 0]] = panel[[i, 0]];
        for t in 1..l {
            pred[[i, t]] = panel[[i, t - 1]];
        }
    }
    Ok(pred)
}

/// Summary of one evaluation span.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub mse: f64,
    pub vd: f64,
    pub per_segment_mse: Vec<f64>,
    pub n: usize,
    pub t_eval: usize,
    pub config: Option<TrainConfig>,
}

impl EvalReport {
    pub fn compute(
        truth: &Array2<f64>,
        prediction: &Array2<f64>,
        config: Option<TrainConfig>,
    ) -> Result<Self> {
        let mse = mse(truth, prediction)?;
        let vd = vd(truth, prediction)?;
        debug_assert!(vd <= mse + 1e-9 * mse.abs().max(1.0));
        Ok(Self {
            mse,
            vd,
            per_segment_mse: per_segment_mse(truth, prediction)?,
            n: truth.nrows(),
            t_eval: truth.ncols(),
            config,
        })
    }

    /// Delimited per-segment table: `segment_id,mse`.
    pub fn per_segment_csv(&self, segment_ids: &[String]) -> String {
        let mut out = String::from("segment_id,mse\n");
        for (id, m) in segment_ids.iter().zip(&self.per_segment_mse) {
            out.push_str(id);
            out.push(',');
            out.push_str(&m.to_string());
            out.push('\n');
        }
        out
    }
}
