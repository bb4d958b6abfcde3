//! Per-sample evaluation latency.

use std::hint::black_box;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::datagen::WindowedDataset;
use crate::error::{invalid, Error, Result};
use crate::predictor::Predictor;

pub const MIN_REPEATS: usize = 30;
pub const WARMUP_PREDICTIONS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatencyStats {
    /// Median seconds per prediction over the repeats.
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub repeats: usize,
    /// Parameters touched per prediction (`D * L` for the functional filter).
    pub evaluation_size: usize,
}

impl LatencyStats {
    pub fn iqr(&self) -> f64 {
        self.q3 - self.q1
    }
}

/// Times `repeats` passes of single-window predictions over `eval`, after
/// discarding [`WARMUP_PREDICTIONS`] calls. Only the predict calls are timed.
pub fn timing_probe(model: &dyn Predictor, eval: &WindowedDataset, repeats: usize) -> Result<LatencyStats> {
    if repeats < MIN_REPEATS {
        return Err(invalid("repeats", format!("must be >= {MIN_REPEATS}, got {repeats}")));
    }
    if eval.is_empty() {
        return Err(Error::Empty("evaluation windows"));
    }
    if eval.lags() != model.lags() {
        return Err(Error::DimensionMismatch {
            context: "evaluation windows",
            expected: model.lags(),
            actual: eval.lags(),
        });
    }
    for i in 0..WARMUP_PREDICTIONS {
        black_box(model.predict_unchecked(black_box(eval.window(i % eval.len()))));
    }
    let mut per_sample: Vec<f64> = (0..repeats)
        .map(|_| {
            let start = Instant::now();
            for w in eval.windows() {
                black_box(model.predict_unchecked(black_box(w)));
            }
            start.elapsed().as_secs_f64() / eval.len() as f64
        })
        .collect();
    per_sample.sort_by(f64::total_cmp);
    let q = |p: f64| crate::fwf::percentile(&per_sample, p);
    Ok(LatencyStats {
        median: q(0.5),
        q1: q(0.25),
        q3: q(0.75),
        repeats,
        evaluation_size: model.evaluation_size(),
    })
}
