use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::datagen::{embed_windows, WindowedDataset};
use crate::error::{check_all_finite, invalid, Error, Result};
use crate::par::{self, Execution};
use crate::predictor::Predictor;

/// `exp(-||a - b||^2 / (2 sigma^2))`.
#[inline]
pub fn gaussian_kernel(a: &[f64], b: &[f64], sigma: f64) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (-d2 / (2.0 * sigma * sigma)).exp()
}

/// Which algorithm produced a [`DictionaryModel`], with its own parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelVariant {
    Klms { step_size: f64 },
    Krls { ridge: f64 },
    Krr { lambda: f64 },
}

impl KernelVariant {
    pub fn name(&self) -> &'static str {
        match self {
            KernelVariant::Klms { .. } => "klms",
            KernelVariant::Krls { .. } => "krls",
            KernelVariant::Krr { .. } => "krr",
        }
    }

    pub fn parameter(&self) -> f64 {
        match *self {
            KernelVariant::Klms { step_size } => step_size,
            KernelVariant::Krls { ridge } => ridge,
            KernelVariant::Krr { lambda } => lambda,
        }
    }
}

/// Kernel expansion `f(x) = sum_j alpha_j G_sigma(x, c_j)` over stored windows.
#[derive(Debug, Clone, PartialEq)]
pub struct DictionaryModel {
    pub(crate) variant: KernelVariant,
    pub(crate) lags: usize,
    pub(crate) horizon: usize,
    pub(crate) sigma: f64,
    pub(crate) centers: Vec<f64>,
    pub(crate) coefficients: Vec<f64>,
    /// `(K + ridge I)^-1` maintained by KRLS.
    pub(crate) inverse_gram: Option<DMatrix<f64>>,
}

impl DictionaryModel {
    fn empty(variant: KernelVariant, lags: usize, horizon: usize, sigma: f64) -> Self {
        Self {
            variant,
            lags,
            horizon,
            sigma,
            centers: Vec::new(),
            coefficients: Vec::new(),
            inverse_gram: None,
        }
    }

    pub fn variant(&self) -> KernelVariant {
        self.variant
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    pub fn center(&self, j: usize) -> &[f64] {
        &self.centers[j * self.lags..(j + 1) * self.lags]
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn inverse_gram(&self) -> Option<&DMatrix<f64>> {
        self.inverse_gram.as_ref()
    }

    fn kernel_vector(&self, x: &[f64]) -> DVector<f64> {
        let m = self.centers.len() / self.lags;
        DVector::from_iterator(m, (0..m).map(|j| gaussian_kernel(x, self.center(j), self.sigma)))
    }
}

impl Predictor for DictionaryModel {
    fn lags(&self) -> usize {
        self.lags
    }

    fn predict_unchecked(&self, window: &[f64]) -> f64 {
        self.centers
            .chunks_exact(self.lags)
            .zip(&self.coefficients)
            .map(|(c, a)| a * gaussian_kernel(window, c, self.sigma))
            .sum()
    }

    fn evaluation_size(&self) -> usize {
        self.centers.len()
    }
}

fn check_sigma(sigma: f64) -> Result<()> {
    if sigma > 0.0 && sigma.is_finite() {
        Ok(())
    } else {
        Err(invalid("sigma", format!("must be finite and > 0, got {sigma}")))
    }
}

fn check_data(data: &WindowedDataset) -> Result<()> {
    if data.is_empty() {
        return Err(Error::Empty("training windows"));
    }
    check_all_finite("training window", data.flat_windows())?;
    check_all_finite("training target", data.targets())
}

pub fn klms_fit(
    series_x: &[f64],
    series_z: &[f64],
    lags: usize,
    horizon: usize,
    sigma: f64,
    step_size: f64,
) -> Result<DictionaryModel> {
    let data = embed_windows(series_x, series_z, lags, horizon)?;
    Ok(klms_fit_dataset(&data, sigma, step_size)?.0)
}

/// One pass of kernel LMS. Every window joins the dictionary with
/// coefficient `step_size * e_t`, `e_t` being the error of the prediction
/// made before the update. Returns the model and those prior errors.
pub fn klms_fit_dataset(data: &WindowedDataset, sigma: f64, step_size: f64) -> Result<(DictionaryModel, Vec<f64>)> {
    check_sigma(sigma)?;
    if !(step_size > 0.0 && step_size.is_finite()) && step_size != 0.0 {
        return Err(invalid("step_size", format!("must be finite and >= 0, got {step_size}")));
    }
    check_data(data)?;
    let mut model = DictionaryModel::empty(KernelVariant::Klms { step_size }, data.lags(), data.horizon(), sigma);
    model.centers.reserve(data.flat_windows().len());
    let mut errors = Vec::with_capacity(data.len());
    for (x, &z) in data.windows().zip(data.targets()) {
        let e = z - model.predict_unchecked(x);
        errors.push(e);
        model.centers.extend_from_slice(x);
        model.coefficients.push(step_size * e);
    }
    Ok((model, errors))
}

pub fn krls_fit(
    series_x: &[f64],
    series_z: &[f64],
    lags: usize,
    horizon: usize,
    sigma: f64,
    ridge: f64,
) -> Result<DictionaryModel> {
    let data = embed_windows(series_x, series_z, lags, horizon)?;
    krls_fit_dataset(&data, sigma, ridge)
}

/// Exact kernel RLS: after `n` samples the coefficients are
/// `(K_n + ridge I)^-1 z_n`, built by rank-one growth of the inverse.
pub fn krls_fit_dataset(data: &WindowedDataset, sigma: f64, ridge: f64) -> Result<DictionaryModel> {
    check_sigma(sigma)?;
    if !(ridge >= 0.0 && ridge.is_finite()) {
        return Err(invalid("ridge", format!("must be finite and >= 0, got {ridge}")));
    }
    check_data(data)?;
    let mut model = DictionaryModel::empty(KernelVariant::Krls { ridge }, data.lags(), data.horizon(), sigma);
    let mut q = DMatrix::<f64>::zeros(0, 0);
    let mut alpha = DVector::<f64>::zeros(0);
    for (x, &z) in data.windows().zip(data.targets()) {
        let h = model.kernel_vector(x);
        let qh = &q * &h;
        let schur = 1.0 + ridge - h.dot(&qh);
        if !(schur > 1e-14 * (1.0 + ridge)) {
            return Err(Error::Conditioning(format!(
                "KRLS Schur complement {schur:e} at sample {}; increase the ridge",
                model.len()
            )));
        }
        let e = z - h.dot(&alpha);
        let n = q.nrows();
        let mut grown = DMatrix::zeros(n + 1, n + 1);
        grown.view_mut((0, 0), (n, n)).copy_from(&q);
        grown.view_mut((0, 0), (n, n)).ger(1.0 / schur, &qh, &qh, 1.0);
        for i in 0..n {
            grown[(i, n)] = -qh[i] / schur;
            grown[(n, i)] = -qh[i] / schur;
        }
        grown[(n, n)] = 1.0 / schur;
        q = grown;

        let mut next = DVector::zeros(n + 1);
        next.rows_mut(0, n).copy_from(&(&alpha - &qh * (e / schur)));
        next[n] = e / schur;
        alpha = next;
        model.centers.extend_from_slice(x);
    }
    model.coefficients = alpha.as_slice().to_vec();
    model.inverse_gram = Some(q);
    Ok(model)
}

/// Kernel ridge regression `alpha = (K + lambda I)^-1 z`. With `lambda`
/// read as observation noise variance this is also the GP posterior mean.
pub fn krr_fit(data: &WindowedDataset, sigma: f64, lambda: f64, exec: Execution) -> Result<DictionaryModel> {
    check_sigma(sigma)?;
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(invalid("lambda", format!("must be finite and > 0, got {lambda}")));
    }
    check_data(data)?;
    let n = data.len();
    let rows = par::map_indexed(exec, n, |i| {
        let xi = data.window(i);
        (0..n).map(|j| gaussian_kernel(xi, data.window(j), sigma)).collect::<Vec<f64>>()
    });
    let mut gram = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
    for i in 0..n {
        gram[(i, i)] += lambda;
    }
    let chol = gram.cholesky().ok_or_else(|| {
        Error::Conditioning(format!(
            "Gram matrix + {lambda:e} I is not positive definite; try lambda >= {:e}",
            lambda * 10.0
        ))
    })?;
    let alpha = chol.solve(&DVector::from_column_slice(data.targets()));
    check_all_finite("krr coefficients", alpha.as_slice())
        .map_err(|_| Error::Conditioning(format!("non-finite solution; try lambda >= {:e}", lambda * 10.0)))?;
    let mut model = DictionaryModel::empty(KernelVariant::Krr { lambda }, data.lags(), data.horizon(), sigma);
    model.centers = data.flat_windows().to_vec();
    model.coefficients = alpha.as_slice().to_vec();
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::rng;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn random_data(n: usize, lags: usize, seed: u64) -> WindowedDataset {
        let mut r = rng::stream(seed, rng::Stream::Testing, 0);
        let w: Vec<f64> = (0..n * lags).map(|_| r.sample::<f64, _>(StandardNormal)).collect();
        let z: Vec<f64> = w.chunks(lags).map(|c| c[0].sin() + 0.3 * c[lags - 1] * c[0]).collect();
        WindowedDataset::from_parts(lags, w, z).unwrap()
    }

    fn dense_solve(data: &WindowedDataset, sigma: f64, ridge: f64) -> DVector<f64> {
        let n = data.len();
        let k = DMatrix::from_fn(n, n, |i, j| gaussian_kernel(data.window(i), data.window(j), sigma))
            + DMatrix::identity(n, n) * ridge;
        k.lu().solve(&DVector::from_column_slice(data.targets())).unwrap()
    }

    #[test]
    fn klms_first_sample_and_zero_step() {
        let data = random_data(20, 3, 1);
        let (m, errors) = klms_fit_dataset(&data, 1.0, 0.4).unwrap();
        assert_eq!(errors[0], data.targets()[0]);
        assert_eq!(m.coefficients()[0], 0.4 * data.targets()[0]);
        assert_eq!(m.len(), 20);

        let (m0, _) = klms_fit_dataset(&data, 1.0, 0.0).unwrap();
        assert!(data.windows().all(|w| m0.predict(w).unwrap() == 0.0));
    }

    #[test]
    fn klms_learning_curve_trends_down() {
        let data = random_data(3000, 2, 2);
        let (_, errors) = klms_fit_dataset(&data, 1.0, 0.5).unwrap();
        let sq: Vec<f64> = errors.iter().map(|e| e * e).collect();
        let avg = |r: std::ops::Range<usize>| sq[r.clone()].iter().sum::<f64>() / r.len() as f64;
        // Non-overlapping 100-sample block means, compared at a coarse stride.
        let blocks: Vec<f64> = (0..30).map(|b| avg(b * 100..(b + 1) * 100)).collect();
        for k in (0..30).step_by(10).collect::<Vec<_>>().windows(2) {
            let (a, b) = (k[0], k[1]);
            let early = blocks[a..a + 5].iter().sum::<f64>();
            let late = blocks[b..b + 5].iter().sum::<f64>();
            assert!(late <= early, "{blocks:?}");
        }
        assert!(blocks[29] < blocks[0]);
    }

    #[test]
    fn krls_single_sample_interpolates() {
        let data = random_data(1, 3, 3);
        let m = krls_fit_dataset(&data, 0.8, 0.0).unwrap();
        assert!((m.predict(data.window(0)).unwrap() - data.targets()[0]).abs() < 1e-15);
    }

    #[test]
    fn krls_matches_batch_solve() {
        let data = random_data(50, 3, 4);
        let m = krls_fit_dataset(&data, 1.2, 0.1).unwrap();
        let oracle = dense_solve(&data, 1.2, 0.1);
        let diff = (DVector::from_column_slice(m.coefficients()) - &oracle).norm();
        assert!(diff <= 1e-8 * oracle.norm(), "{diff}");
    }

    #[test]
    fn krls_huge_ridge_shrinks_to_zero() {
        let data = random_data(30, 2, 5);
        let m = krls_fit_dataset(&data, 1.0, 1e12).unwrap();
        assert!(m.coefficients().iter().all(|a| a.abs() < 1e-10));
    }

    #[test]
    fn krls_duplicate_without_ridge_is_conditioning_error() {
        let data = WindowedDataset::from_parts(1, vec![0.5, 0.5], vec![1.0, 1.0]).unwrap();
        assert!(matches!(krls_fit_dataset(&data, 1.0, 0.0), Err(Error::Conditioning(_))));
    }

    #[test]
    fn krr_matches_dense_solve_and_interpolates() {
        let data = random_data(10, 2, 6);
        let m = krr_fit(&data, 1.0, 1e-12, Execution::Parallel).unwrap();
        let preds = m.predict_dataset(&data, Execution::Sequential).unwrap();
        let z = data.targets();
        let mean = z.iter().sum::<f64>() / z.len() as f64;
        let var = z.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / z.len() as f64;
        assert!(crate::predictor::mse(&preds, z) <= 1e-8 * var);

        let data = random_data(80, 3, 7);
        let m = krr_fit(&data, 0.9, 0.05, Execution::Sequential).unwrap();
        let oracle = dense_solve(&data, 0.9, 0.05);
        assert!((DVector::from_column_slice(m.coefficients()) - &oracle).norm() <= 1e-8 * oracle.norm());
    }

    #[test]
    fn krr_one_point_small_lambda() {
        let data = WindowedDataset::from_parts(2, vec![0.3, -0.7], vec![2.5]).unwrap();
        let m = krr_fit(&data, 1.0, 1e-12, Execution::Sequential).unwrap();
        assert!((m.predict(&[0.3, -0.7]).unwrap() - 2.5).abs() < 1e-10);
        assert!(krr_fit(&data, 1.0, 0.0, Execution::Sequential).is_err());
    }

    #[test]
    fn krr_duplicates_match_deduplicated_at_scaled_lambda() {
        // Points a, a, b with equal targets at a: the stationarity conditions
        // reduce to the 2-point problem with the duplicate's lambda halved.
        let a = [0.2, 0.1];
        let b = [-0.5, 0.9];
        let dup = WindowedDataset::from_parts(2, [a, a, b].concat(), vec![1.0, 1.0, -0.4]).unwrap();
        let lambda = 0.3;
        let m3 = krr_fit(&dup, 1.0, lambda, Execution::Sequential).unwrap();
        // Oracle: alpha_a total = 2 alpha, solve [[2k_aa + lambda, k_ab],[2k_ab, k_bb + lambda]].
        let kaa = 1.0;
        let kab = gaussian_kernel(&a, &b, 1.0);
        let kbb = 1.0;
        let m = DMatrix::from_row_slice(2, 2, &[2.0 * kaa + lambda, kab, 2.0 * kab, kbb + lambda]);
        let sol = m.lu().solve(&DVector::from_vec(vec![1.0, -0.4])).unwrap();
        let probe = [0.05, 0.4];
        let oracle = 2.0 * sol[0] * gaussian_kernel(&probe, &a, 1.0) + sol[1] * gaussian_kernel(&probe, &b, 1.0);
        assert!((m3.predict(&probe).unwrap() - oracle).abs() < 1e-12);
    }
}
