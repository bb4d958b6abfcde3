use nalgebra::{DMatrix, DVector};

use crate::datagen::{embed_windows, WindowedDataset};
use crate::error::{check_all_finite, Error, Result};
use crate::linalg::{self, DEFAULT_EPSILON};
use crate::predictor::Predictor;

/// Linear FIR Wiener filter estimated from sample moments.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearWienerModel {
    pub(crate) lags: usize,
    pub(crate) horizon: usize,
    pub(crate) weights: DVector<f64>,
    pub(crate) autocorrelation: DMatrix<f64>,
    pub(crate) crosscorrelation: DVector<f64>,
    pub(crate) effective_rank: usize,
}

pub fn wiener_fit(series_x: &[f64], series_z: &[f64], lags: usize, horizon: usize) -> Result<LinearWienerModel> {
    let data = embed_windows(series_x, series_z, lags, horizon)?;
    wiener_fit_dataset(&data, DEFAULT_EPSILON)
}

/// `w = R^+ rho_z` with `R = (1/N') sum x_i x_i^T` and `rho_z = (1/N') sum z_i x_i`.
pub fn wiener_fit_dataset(data: &WindowedDataset, epsilon: f64) -> Result<LinearWienerModel> {
    if data.is_empty() {
        return Err(Error::Empty("training windows"));
    }
    check_all_finite("training window", data.flat_windows())?;
    check_all_finite("training target", data.targets())?;
    let lags = data.lags();
    let n = data.len() as f64;
    let mut r = DMatrix::zeros(lags, lags);
    let mut rho = DVector::zeros(lags);
    for (w, &z) in data.windows().zip(data.targets()) {
        let x = DVector::from_column_slice(w);
        r.ger(1.0, &x, &x, 1.0);
        rho.axpy(z, &x, 1.0);
    }
    r /= n;
    rho /= n;
    linalg::symmetrize(&mut r);
    let pinv = linalg::spectral_pinv(&r, epsilon, 0.0)?;
    Ok(LinearWienerModel {
        lags,
        horizon: data.horizon(),
        weights: &pinv.matrix * &rho,
        autocorrelation: r,
        crosscorrelation: rho,
        effective_rank: pinv.effective_rank,
    })
}

impl LinearWienerModel {
    pub fn weights(&self) -> &DVector<f64> {
        &self.weights
    }

    pub fn autocorrelation(&self) -> &DMatrix<f64> {
        &self.autocorrelation
    }

    pub fn crosscorrelation(&self) -> &DVector<f64> {
        &self.crosscorrelation
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn effective_rank(&self) -> usize {
        self.effective_rank
    }
}

impl Predictor for LinearWienerModel {
    fn lags(&self) -> usize {
        self.lags
    }

    fn predict_unchecked(&self, window: &[f64]) -> f64 {
        self.weights.iter().zip(window).map(|(w, x)| w * x).sum()
    }

    fn evaluation_size(&self) -> usize {
        self.lags
    }
}
