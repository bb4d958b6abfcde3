//! The functional Wiener filter.
//!
//! Fitting estimates the moment matrix `U` and the cross-correlation
//! `rho = (1/N') sum_i z_i phi(x_i)`, then solves `w = U^+ rho` with the
//! spectral pseudo-inverse. Prediction is `<phi(window), w>`, whose cost
//! depends only on `D * L`.

use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::correntropy::{self, MomentCorrentropy};
use crate::datagen::{embed_windows, WindowedDataset};
use crate::error::{check_all_finite, invalid, Error, Result};
use crate::featuremap::{embed_dataset, EmbeddedDataset, FeatureMapSpec};
use crate::linalg::{self, DEFAULT_EPSILON};
use crate::par::Execution;
use crate::predictor::Predictor;

/// Hyperparameters of a fit besides the feature map and window length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// Relative eigenvalue cutoff of the pseudo-inverse.
    pub epsilon: f64,
    /// Steps between a window's newest sample and its target.
    pub horizon: usize,
    /// Remove the feature and target means before solving.
    pub centered: bool,
    /// Optional `U + ridge I` regularization, 0 disables it.
    pub ridge: f64,
    #[serde(skip)]
    pub exec: Execution,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            epsilon: DEFAULT_EPSILON,
            horizon: 1,
            centered: false,
            ridge: 0.0,
            exec: Execution::default(),
        }
    }
}

impl FitOptions {
    pub fn with_horizon(horizon: usize) -> Self {
        Self {
            horizon,
            ..Self::default()
        }
    }
}

/// Fitted filter. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct FwfModel {
    pub(crate) spec: FeatureMapSpec,
    pub(crate) lags: usize,
    pub(crate) horizon: usize,
    pub(crate) weights: DVector<f64>,
    pub(crate) rho: DVector<f64>,
    pub(crate) epsilon: f64,
    pub(crate) ridge: f64,
    pub(crate) centered: bool,
    pub(crate) offset: f64,
    pub(crate) desired_power: f64,
    pub(crate) theoretical_mmse: f64,
    pub(crate) effective_rank: usize,
    pub(crate) eigenvalues: DVector<f64>,
    pub(crate) support: (f64, f64),
    inv_sqrt: Vec<f64>,
}

pub(crate) fn inv_sqrt_table(dims: usize) -> Vec<f64> {
    (0..dims).map(|d| if d == 0 { 1.0 } else { 1.0 / (d as f64).sqrt() }).collect()
}

/// Cross-correlation `(1/N') sum_i z_i phi(x_i)`.
pub fn estimate_rho(embedded: &EmbeddedDataset, exec: Execution) -> Result<DVector<f64>> {
    if embedded.targets.len() != embedded.len() {
        return Err(Error::DimensionMismatch {
            context: "targets vs windows",
            expected: embedded.len(),
            actual: embedded.targets.len(),
        });
    }
    if embedded.is_empty() {
        return Err(Error::Empty("no windows"));
    }
    let sum = linalg::weighted_column_sum(&embedded.features, &embedded.targets, exec);
    Ok(sum / embedded.len() as f64)
}

/// Windows `series_x`, pairs each window with `series_z` shifted by
/// `options.horizon` and fits the filter.
pub fn fit(
    series_x: &[f64],
    series_z: &[f64],
    lags: usize,
    spec: &FeatureMapSpec,
    options: &FitOptions,
) -> Result<FwfModel> {
    let data = embed_windows(series_x, series_z, lags, options.horizon)?;
    fit_dataset(&data, spec, options)
}

/// Fits the filter on prepared windows. `options.horizon` is only recorded.
pub fn fit_dataset(data: &WindowedDataset, spec: &FeatureMapSpec, options: &FitOptions) -> Result<FwfModel> {
    if data.is_empty() {
        return Err(Error::Empty("training windows"));
    }
    check_all_finite("training target", data.targets())?;
    let embedded = embed_dataset(data, spec, options.exec)?;
    let u = correntropy::estimate_u_with(&embedded, options.centered, options.exec)?;
    let rho_raw = estimate_rho(&embedded, options.exec)?;
    let n = data.len() as f64;
    let z_mean = data.targets().iter().sum::<f64>() / n;
    let z_power = data.targets().iter().map(|z| z * z).sum::<f64>() / n;

    let (rho, desired_power) = if options.centered {
        (&rho_raw - u.feature_mean() * z_mean, z_power - z_mean * z_mean)
    } else {
        (rho_raw, z_power)
    };
    let model = solve(&u, rho, desired_power, spec, data.lags(), options)?;
    let offset = if options.centered {
        z_mean - model.weights.dot(u.feature_mean())
    } else {
        0.0
    };
    Ok(FwfModel {
        offset,
        support: training_support(data),
        ..model
    })
}

fn solve(
    u: &MomentCorrentropy,
    rho: DVector<f64>,
    desired_power: f64,
    spec: &FeatureMapSpec,
    lags: usize,
    options: &FitOptions,
) -> Result<FwfModel> {
    let pinv = u.pseudo_inverse_with_ridge(options.epsilon, options.ridge)?;
    let weights = &pinv.matrix * &rho;
    let theoretical_mmse = desired_power - rho.dot(&weights);
    Ok(FwfModel {
        spec: *spec,
        lags,
        horizon: options.horizon,
        weights,
        rho,
        epsilon: options.epsilon,
        ridge: options.ridge,
        centered: options.centered,
        offset: 0.0,
        desired_power,
        theoretical_mmse,
        effective_rank: pinv.effective_rank,
        eigenvalues: pinv.eigenvalues,
        support: (0.0, 0.0),
        inv_sqrt: inv_sqrt_table(spec.dims()),
    })
}

/// 5th and 95th percentiles of the distinct input samples seen in training.
fn training_support(data: &WindowedDataset) -> (f64, f64) {
    let mut samples: Vec<f64> = data.window(0).to_vec();
    samples.extend((1..data.len()).map(|i| data.window(i)[0]));
    samples.sort_by(f64::total_cmp);
    (percentile(&samples, 0.05), percentile(&samples, 0.95))
}

/// Linearly interpolated percentile of sorted data.
pub(crate) fn percentile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

impl FwfModel {
    /// Model with given weights and no training statistics, e.g. for
    /// evaluating a known filter.
    pub fn with_weights(spec: FeatureMapSpec, lags: usize, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != spec.dims() * lags {
            return Err(Error::DimensionMismatch {
                context: "weights",
                expected: spec.dims() * lags,
                actual: weights.len(),
            });
        }
        check_all_finite("weights", &weights)?;
        let n = weights.len();
        Ok(Self {
            spec,
            lags,
            horizon: 0,
            weights: DVector::from_vec(weights),
            rho: DVector::zeros(n),
            epsilon: DEFAULT_EPSILON,
            ridge: 0.0,
            centered: false,
            offset: 0.0,
            desired_power: 0.0,
            theoretical_mmse: 0.0,
            effective_rank: 0,
            eigenvalues: DVector::zeros(n),
            support: (0.0, 0.0),
            inv_sqrt: inv_sqrt_table(spec.dims()),
        })
    }

    #[allow(clippy::too_many_arguments)]
    pub(crate) fn from_stored(
        spec: FeatureMapSpec,
        lags: usize,
        horizon: usize,
        weights: DVector<f64>,
        rho: DVector<f64>,
        epsilon: f64,
        ridge: f64,
        centered: bool,
        offset: f64,
        desired_power: f64,
        theoretical_mmse: f64,
        effective_rank: usize,
        eigenvalues: DVector<f64>,
        support: (f64, f64),
    ) -> Self {
        Self {
            spec,
            lags,
            horizon,
            weights,
            rho,
            epsilon,
            ridge,
            centered,
            offset,
            desired_power,
            theoretical_mmse,
            effective_rank,
            eigenvalues,
            support,
            inv_sqrt: inv_sqrt_table(spec.dims()),
        }
    }

    pub fn spec(&self) -> &FeatureMapSpec {
        &self.spec
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn weights(&self) -> &DVector<f64> {
        &self.weights
    }

    pub fn rho(&self) -> &DVector<f64> {
        &self.rho
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn ridge(&self) -> f64 {
        self.ridge
    }

    pub fn is_centered(&self) -> bool {
        self.centered
    }

    /// Constant added to every prediction (nonzero only for centered fits).
    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// Training estimate of `E[z^2]` (the target variance for centered fits).
    pub fn desired_power(&self) -> f64 {
        self.desired_power
    }

    /// `E[z^2] - rho^T U^+ rho`, the error predicted before evaluating anything.
    pub fn theoretical_mmse(&self) -> f64 {
        self.theoretical_mmse
    }

    pub fn effective_rank(&self) -> usize {
        self.effective_rank
    }

    /// Eigenvalues of the training moment matrix, ascending.
    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    /// 5th and 95th percentile of the training inputs.
    pub fn support(&self) -> (f64, f64) {
        self.support
    }

    pub fn feature_dim(&self) -> usize {
        self.weights.len()
    }

    /// Describes a rank-deficient moment matrix, if the fit had one.
    pub fn rank_warning(&self) -> Option<String> {
        (self.effective_rank < self.feature_dim()).then(|| {
            format!(
                "moment matrix rank {} of {} at relative cutoff {:e}",
                self.effective_rank,
                self.feature_dim(),
                self.epsilon
            )
        })
    }

    /// `f_tau(x) = sum_d w[tau * D + d] phi_d(x)` for one lag.
    #[inline]
    pub fn mode_value(&self, tau: usize, x: f64) -> f64 {
        let dims = self.spec.dims();
        let w = &self.weights.as_slice()[tau * dims..(tau + 1) * dims];
        let u = x / self.spec.sigma();
        let mut phi = (-0.5 * u * u).exp();
        let mut acc = w[0] * phi;
        for d in 1..dims {
            phi *= u * self.inv_sqrt[d];
            acc += w[d] * phi;
        }
        acc
    }

    /// Splits the weights into per-lag scalar functions sampled on `grid`.
    pub fn extract_modes(&self, grid: &[f64]) -> Result<ModeSet> {
        if grid.is_empty() {
            return Err(Error::Empty("mode grid"));
        }
        check_all_finite("mode grid", grid)?;
        let functions = DMatrix::from_fn(self.lags, grid.len(), |tau, g| self.mode_value(tau, grid[g]));
        let (lo, hi) = self.support;
        let inside: Vec<usize> = (0..grid.len()).filter(|&g| grid[g] >= lo && grid[g] <= hi).collect();
        let flatness = (0..self.lags)
            .map(|tau| {
                if inside.is_empty() {
                    return 0.0;
                }
                let vals: Vec<f64> = inside.iter().map(|&g| functions[(tau, g)]).collect();
                let mean = vals.iter().sum::<f64>() / vals.len() as f64;
                vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / vals.len() as f64
            })
            .collect();
        Ok(ModeSet {
            grid: grid.to_vec(),
            functions,
            flatness,
            offset: self.offset,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        crate::format::save_model(&crate::format::StoredModel::Fwf(self.clone()), path)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        match crate::format::load_model(path)? {
            crate::format::StoredModel::Fwf(m) => Ok(m),
            other => Err(Error::Format(format!("expected an fwf model, found {}", other.variant_name()))),
        }
    }
}

impl Predictor for FwfModel {
    fn lags(&self) -> usize {
        self.lags
    }

    #[inline]
    fn predict_unchecked(&self, window: &[f64]) -> f64 {
        // Summed lag by lag so the result matches the mode decomposition bit for bit.
        window
            .iter()
            .enumerate()
            .fold(self.offset, |acc, (tau, &x)| acc + self.mode_value(tau, x))
    }

    fn evaluation_size(&self) -> usize {
        self.weights.len()
    }
}

/// Per-lag functions learned by a fitted filter.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeSet {
    pub grid: Vec<f64>,
    /// `L x G`; row `tau` samples `f_tau` on the grid.
    pub functions: DMatrix<f64>,
    /// Variance of each row over the grid points inside the training support.
    pub flatness: Vec<f64>,
    /// Constant term of the filter, not attributed to any lag.
    pub offset: f64,
}

impl ModeSet {
    pub fn lags(&self) -> usize {
        self.functions.nrows()
    }

    /// Sum of per-lag functions at grid indices `idx[tau]`, plus the offset.
    pub fn reconstruct(&self, idx: &[usize]) -> Result<f64> {
        if idx.len() != self.lags() {
            return Err(invalid("idx", format!("expected {} grid indices", self.lags())));
        }
        let mut acc = self.offset;
        for (tau, &g) in idx.iter().enumerate() {
            if g >= self.grid.len() {
                return Err(Error::IndexOutOfRange(format!("grid index {g}")));
            }
            acc += self.functions[(tau, g)];
        }
        Ok(acc)
    }

    /// Writes `tau,x,f_tau_x` rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "tau,x,f_tau_x")?;
        for tau in 0..self.lags() {
            for (g, x) in self.grid.iter().enumerate() {
                writeln!(out, "{tau},{x},{}", self.functions[(tau, g)])?;
            }
        }
        Ok(())
    }
}

/// Evenly spaced grid of `points` values on `[lo, hi]`.
pub fn linspace(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..points)
            .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::rng::{self, Stream};
    use crate::featuremap::map_window;
    use crate::predictor::mse;
    use rand_distr::{Distribution, StandardNormal};

    fn normal_series(n: usize, seed: u64) -> Vec<f64> {
        let mut r = rng::stream(seed, Stream::Testing, 0);
        (0..n).map(|_| StandardNormal.sample(&mut r)).collect()
    }

    fn features(data: &WindowedDataset, spec: &FeatureMapSpec) -> Vec<Vec<f64>> {
        data.windows().map(|w| map_window(w, spec).unwrap().vector_view().to_vec()).collect()
    }

    #[test]
    fn zero_target_gives_zero_model() {
        let x = normal_series(200, 1);
        let spec = FeatureMapSpec::new(1.0, 6).unwrap();
        let m = fit(&x, &vec![0.0; 200], 3, &spec, &FitOptions::default()).unwrap();
        assert!(m.weights().iter().all(|&w| w == 0.0));
        assert_eq!(m.theoretical_mmse(), 0.0);
        assert_eq!(m.predict(&[0.3, -1.0, 2.0]).unwrap(), 0.0);
    }

    #[test]
    fn rho_of_unit_targets_is_feature_mean() {
        let x = normal_series(150, 2);
        let data = embed_windows(&x, &vec![1.0; 150], 2, 0).unwrap();
        let spec = FeatureMapSpec::new(0.8, 5).unwrap();
        let emb = embed_dataset(&data, &spec, Execution::Sequential).unwrap();
        let rho = estimate_rho(&emb, Execution::Sequential).unwrap();
        let feats = features(&data, &spec);
        for k in 0..rho.len() {
            let mean = feats.iter().map(|f| f[k]).sum::<f64>() / feats.len() as f64;
            assert!((rho[k] - mean).abs() < 1e-14);
        }
    }

    #[test]
    fn rho_of_feature_target_is_moment_row() {
        let x = normal_series(300, 3);
        let spec = FeatureMapSpec::new(1.0, 4).unwrap();
        let lags = 3;
        let probe = embed_windows(&x, &x, lags, 0).unwrap();
        // Target for window i is phi_1 of its newest sample.
        let z: Vec<f64> = features(&probe, &spec).iter().map(|f| f[1]).collect();
        let data = WindowedDataset::from_parts(lags, probe.flat_windows().to_vec(), z).unwrap();
        let emb = embed_dataset(&data, &spec, Execution::Sequential).unwrap();
        let rho = estimate_rho(&emb, Execution::Sequential).unwrap();
        let u = correntropy::estimate_u(&emb, Execution::Sequential).unwrap();
        for k in 0..rho.len() {
            assert!((rho[k] - u.matrix()[(1, k)]).abs() < 1e-12);
        }
    }

    #[test]
    fn exactly_representable_target() {
        let x = normal_series(600, 4);
        let spec = FeatureMapSpec::new(1.0, 4).unwrap();
        let lags = 3;
        let probe = embed_windows(&x, &x, lags, 0).unwrap();
        let a = normal_series(spec.dims() * lags, 5);
        let z: Vec<f64> = features(&probe, &spec)
            .iter()
            .map(|f| f.iter().zip(&a).map(|(p, q)| p * q).sum())
            .collect();
        let data = WindowedDataset::from_parts(lags, probe.flat_windows().to_vec(), z.clone()).unwrap();
        let m = fit_dataset(&data, &spec, &FitOptions::default()).unwrap();
        assert_eq!(m.effective_rank(), spec.dims() * lags);
        let pred = m.predict_dataset(&data, Execution::Sequential).unwrap();
        let n = z.len() as f64;
        let mean = z.iter().sum::<f64>() / n;
        let var = z.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let power = z.iter().map(|v| v * v).sum::<f64>() / n;
        assert!(mse(&pred, &z) <= 1e-10 * var);
        assert!(m.theoretical_mmse().abs() <= 1e-10 * power);
    }

    #[test]
    fn unit_weight_predicts_gaussian_of_newest_sample() {
        let spec = FeatureMapSpec::new(0.7, 5).unwrap();
        let mut w = vec![0.0; 15];
        w[0] = 1.0;
        let m = FwfModel::with_weights(spec, 3, w).unwrap();
        for x0 in [-1.5f64, 0.0, 0.4, 2.0] {
            let expected = (-x0 * x0 / (2.0 * 0.49)).exp();
            assert!((m.predict(&[x0, 9.0, -3.0]).unwrap() - expected).abs() < 1e-15);
        }
        assert!(matches!(m.predict(&[1.0]), Err(Error::DimensionMismatch { .. })));
        let zero = FwfModel::with_weights(spec, 3, vec![0.0; 15]).unwrap();
        assert_eq!(zero.predict(&[1.0, 2.0, 3.0]).unwrap(), 0.0);
    }

    #[test]
    fn matches_min_norm_least_squares() {
        let x = normal_series(160, 6);
        let z: Vec<f64> = x.iter().map(|v| v.sin() + 0.1 * v * v).collect();
        let spec = FeatureMapSpec::new(1.2, 5).unwrap();
        let data = embed_windows(&x, &z, 4, 1).unwrap();
        let m = fit_dataset(&data, &spec, &FitOptions::default()).unwrap();
        let feats = features(&data, &spec);
        let phi = DMatrix::from_fn(feats.len(), feats[0].len(), |i, k| feats[i][k]);
        let svd = phi.clone().svd(true, true);
        let tol = 1e-5 * svd.singular_values.max();
        let w = svd.solve(&DVector::from_column_slice(data.targets()), tol).unwrap();
        let oracle = &phi * &w;
        let pred = m.predict_dataset(&data, Execution::Sequential).unwrap();
        for (p, o) in pred.iter().zip(oracle.iter()) {
            assert!((p - o).abs() <= 1e-8 * o.abs().max(1.0), "{p} vs {o}");
        }
    }

    #[test]
    fn residuals_are_orthogonal_to_retained_eigenvectors() {
        let x = normal_series(400, 7);
        let z: Vec<f64> = x.iter().map(|v| v.tanh()).collect();
        let spec = FeatureMapSpec::new(1.0, 8).unwrap();
        let data = embed_windows(&x, &z, 3, 1).unwrap();
        let m = fit_dataset(&data, &spec, &FitOptions::default()).unwrap();
        let emb = embed_dataset(&data, &spec, Execution::Sequential).unwrap();
        let u = correntropy::estimate_u(&emb, Execution::Sequential).unwrap();
        let spectrum = u.spectrum().unwrap();
        let cutoff = m.epsilon() * spectrum.lambda_max();
        let pred = m.predict_dataset(&data, Execution::Sequential).unwrap();
        let resid: Vec<f64> = data.targets().iter().zip(&pred).map(|(z, p)| z - p).collect();
        let g = linalg::weighted_column_sum(&emb.features, &resid, Execution::Sequential) / resid.len() as f64;
        for (k, &lambda) in spectrum.eigenvalues.iter().enumerate() {
            if lambda > cutoff {
                assert!(g.dot(&spectrum.eigenvectors.column(k)).abs() <= 1e-8);
            }
        }
        // Wiener equation: U w matches rho inside the retained eigenspace.
        let r = u.matrix() * m.weights() - m.rho();
        for (k, &lambda) in spectrum.eigenvalues.iter().enumerate() {
            if lambda > cutoff {
                assert!(r.dot(&spectrum.eigenvectors.column(k)).abs() <= 1e-8 * m.rho().norm());
            }
        }
    }

    #[test]
    fn theoretical_matches_training_mse_at_full_rank() {
        let x = normal_series(1000, 8);
        let z: Vec<f64> = (0..1000).map(|i| if i > 0 { x[i - 1] * x[i] } else { 0.0 }).collect();
        let spec = FeatureMapSpec::new(1.5, 5).unwrap();
        let data = embed_windows(&x, &z, 2, 0).unwrap();
        let m = fit_dataset(&data, &spec, &FitOptions::default()).unwrap();
        assert_eq!(m.effective_rank(), 10);
        let pred = m.predict_dataset(&data, Execution::Sequential).unwrap();
        let gap = (mse(&pred, data.targets()) - m.theoretical_mmse()) / m.desired_power();
        assert!((-1e-6..=1e-3).contains(&gap), "gap {gap}");
    }

    #[test]
    fn centering_recovers_constant_target() {
        let x = normal_series(300, 9);
        let spec = FeatureMapSpec::new(1.0, 3).unwrap();
        let opts = FitOptions {
            centered: true,
            ..FitOptions::default()
        };
        let m = fit(&x, &vec![2.5; 300], 2, &spec, &opts).unwrap();
        assert!((m.offset() - 2.5).abs() < 1e-9);
        assert!(m.weights().norm() < 1e-9);
        assert!(m.desired_power().abs() < 1e-12);
    }

    #[test]
    fn modes_reconstruct_prediction_exactly() {
        let x = normal_series(500, 10);
        let z: Vec<f64> = (0..500).map(|i| x[i].powi(2) - if i > 1 { x[i - 2] } else { 0.0 }).collect();
        let spec = FeatureMapSpec::new(1.0, 10).unwrap();
        let m = fit(&x, &z, 3, &spec, &FitOptions::with_horizon(0)).unwrap();
        let grid = linspace(-2.0, 2.0, 21);
        let modes = m.extract_modes(&grid).unwrap();
        for idx in [[0, 5, 20], [10, 10, 10], [3, 17, 8]] {
            let window: Vec<f64> = idx.iter().map(|&g| grid[g]).collect();
            assert_eq!(modes.reconstruct(&idx).unwrap(), m.predict(&window).unwrap());
        }
        assert!(m.extract_modes(&[]).is_err());
        assert!(modes.reconstruct(&[0, 0]).is_err());
        assert!(modes.reconstruct(&[0, 0, 21]).is_err());

        let zero = FwfModel::with_weights(spec, 3, vec![0.0; 30]).unwrap();
        let zm = zero.extract_modes(&grid).unwrap();
        assert!(zm.functions.iter().all(|&v| v == 0.0));
        assert!(zm.flatness.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn mode_csv_layout() {
        let spec = FeatureMapSpec::new(1.0, 2).unwrap();
        let m = FwfModel::with_weights(spec, 2, vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        let mut out = Vec::new();
        m.extract_modes(&[0.0, 1.0]).unwrap().write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "tau,x,f_tau_x");
        assert_eq!(lines.len(), 5);
        assert_eq!(lines[1], "0,0,1");
        assert_eq!(lines[4], "1,1,0");
    }

    #[test]
    fn joint_rescaling_leaves_predictions_unchanged() {
        let x = normal_series(100, 11);
        let z: Vec<f64> = x.iter().map(|v| v.cos()).collect();
        let c = 3.7;
        let xs: Vec<f64> = x.iter().map(|v| v * c).collect();
        let a = fit(&x, &z, 3, &FeatureMapSpec::new(0.9, 6).unwrap(), &FitOptions::default()).unwrap();
        let b = fit(&xs, &z, 3, &FeatureMapSpec::new(0.9 * c, 6).unwrap(), &FitOptions::default()).unwrap();
        let da = embed_windows(&x, &z, 3, 1).unwrap();
        let db = embed_windows(&xs, &z, 3, 1).unwrap();
        let pa = a.predict_dataset(&da, Execution::Sequential).unwrap();
        let pb = b.predict_dataset(&db, Execution::Sequential).unwrap();
        for (p, q) in pa.iter().zip(&pb) {
            assert!((p - q).abs() <= 1e-10 * p.abs().max(1.0));
        }
    }

    #[test]
    fn rank_deficiency_is_a_warning() {
        let x = vec![0.0; 50];
        let z: Vec<f64> = (0..50).map(|i| i as f64).collect();
        let m = fit(&x, &z, 2, &FeatureMapSpec::new(1.0, 4).unwrap(), &FitOptions::default()).unwrap();
        assert!(m.effective_rank() < 8);
        assert!(m.rank_warning().is_some());
    }

    #[test]
    fn parallel_fit_is_bit_identical() {
        let x = normal_series(1500, 12);
        let z: Vec<f64> = x.iter().map(|v| v.sin()).collect();
        let spec = FeatureMapSpec::new(1.0, 7).unwrap();
        let seq = FitOptions {
            exec: Execution::Sequential,
            ..FitOptions::default()
        };
        let par = FitOptions {
            exec: Execution::Parallel,
            ..FitOptions::default()
        };
        let a = fit(&x, &z, 4, &spec, &seq).unwrap();
        let b = fit(&x, &z, 4, &spec, &par).unwrap();
        assert_eq!(a, b);
    }
}
