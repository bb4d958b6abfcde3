use crate::datagen::WindowedDataset;
use crate::error::{check_all_finite, Error, Result};
use crate::par::{self, Execution};

/// A fitted filter mapping a newest-first window to a scalar estimate.
pub trait Predictor: Sync {
    /// Window length the model expects.
    fn lags(&self) -> usize;

    /// Prediction without input validation.
    fn predict_unchecked(&self, window: &[f64]) -> f64;

    /// Number of stored parameters touched per evaluation.
    fn evaluation_size(&self) -> usize;

    fn predict(&self, window: &[f64]) -> Result<f64> {
        if window.len() != self.lags() {
            return Err(Error::DimensionMismatch {
                context: "prediction window",
                expected: self.lags(),
                actual: window.len(),
            });
        }
        check_all_finite("prediction window", window)?;
        Ok(self.predict_unchecked(window))
    }

    fn predict_dataset(&self, data: &WindowedDataset, exec: Execution) -> Result<Vec<f64>> {
        if data.lags() != self.lags() {
            return Err(Error::DimensionMismatch {
                context: "dataset lags",
                expected: self.lags(),
                actual: data.lags(),
            });
        }
        check_all_finite("prediction window", data.flat_windows())?;
        let parts = par::map_chunks(exec, data.len(), 256, |range| {
            range.map(|i| self.predict_unchecked(data.window(i))).collect::<Vec<_>>()
        });
        Ok(parts.into_iter().flatten().collect())
    }
}

/// Mean squared difference between predictions and targets.
pub fn mse(predictions: &[f64], targets: &[f64]) -> f64 {
    debug_assert_eq!(predictions.len(), targets.len());
    if targets.is_empty() {
        return 0.0;
    }
    predictions
        .iter()
        .zip(targets)
        .map(|(p, t)| (p - t).powi(2))
        .sum::<f64>()
        / targets.len() as f64
}
