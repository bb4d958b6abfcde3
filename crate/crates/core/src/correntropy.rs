//! Moment-wise correntropy: second moments of the windowed feature vectors.
//!
//! For embedded windows `phi(x_i)` of dimension `D * L` the estimate is
//! `U = (1/N') sum_i phi(x_i) phi(x_i)^T`. Entry `(d1, t, d2, s)` of the
//! underlying four-way tensor lives at `U[t * D + d1, s * D + d2]`.

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::featuremap::{self, EmbeddedDataset, FeatureMapSpec};
pub use crate::linalg::SpectralPseudoInverse;
use crate::linalg::{self, Spectrum};
use crate::par::Execution;

/// Running sums of outer products, mergeable across chunks or threads.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentAccumulator {
    dims: usize,
    lags: usize,
    outer_sum: DMatrix<f64>,
    feature_sum: DVector<f64>,
    count: usize,
}

impl MomentAccumulator {
    pub fn new(dims: usize, lags: usize) -> Self {
        let n = dims * lags;
        Self {
            dims,
            lags,
            outer_sum: DMatrix::zeros(n, n),
            feature_sum: DVector::zeros(n),
            count: 0,
        }
    }

    pub fn add(&mut self, embedded: &EmbeddedDataset, exec: Execution) -> Result<()> {
        check_shape(embedded, self.dims, self.lags)?;
        self.outer_sum += linalg::outer_product_sum(&embedded.features, exec);
        let ones = vec![1.0; embedded.len()];
        self.feature_sum += linalg::weighted_column_sum(&embedded.features, &ones, exec);
        self.count += embedded.len();
        Ok(())
    }

    pub fn merge(&mut self, other: &MomentAccumulator) -> Result<()> {
        if (self.dims, self.lags) != (other.dims, other.lags) {
            return Err(Error::DimensionMismatch {
                context: "moment accumulator merge",
                expected: self.dims * self.lags,
                actual: other.dims * other.lags,
            });
        }
        self.outer_sum += &other.outer_sum;
        self.feature_sum += &other.feature_sum;
        self.count += other.count;
        Ok(())
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn finish(&self, centered: bool) -> Result<MomentCorrentropy> {
        if self.count == 0 {
            return Err(Error::Empty("no windows accumulated"));
        }
        let n = self.count as f64;
        let mut matrix = &self.outer_sum / n;
        let mean = &self.feature_sum / n;
        if centered {
            matrix -= &mean * mean.transpose();
        }
        linalg::symmetrize(&mut matrix);
        Ok(MomentCorrentropy {
            matrix,
            dims: self.dims,
            lags: self.lags,
            sample_count: self.count,
            feature_mean: mean,
            centered,
            spectrum: OnceLock::new(),
        })
    }
}

fn check_shape(embedded: &EmbeddedDataset, dims: usize, lags: usize) -> Result<()> {
    if embedded.spec.dims() != dims || embedded.lags != lags || embedded.feature_dim() != dims * lags {
        return Err(Error::DimensionMismatch {
            context: "embedded window dimension",
            expected: dims * lags,
            actual: embedded.feature_dim(),
        });
    }
    Ok(())
}

/// Unfolded `(D L) x (D L)` moment-wise correntropy matrix.
#[derive(Debug, Clone)]
pub struct MomentCorrentropy {
    matrix: DMatrix<f64>,
    dims: usize,
    lags: usize,
    sample_count: usize,
    feature_mean: DVector<f64>,
    centered: bool,
    spectrum: OnceLock<Spectrum>,
}

/// Raw (uncentered) second-moment estimate.
pub fn estimate_u(embedded: &EmbeddedDataset, exec: Execution) -> Result<MomentCorrentropy> {
    estimate_u_with(embedded, false, exec)
}

/// Second-moment estimate, optionally with the feature mean removed.
pub fn estimate_u_with(embedded: &EmbeddedDataset, centered: bool, exec: Execution) -> Result<MomentCorrentropy> {
    let mut acc = MomentAccumulator::new(embedded.spec.dims(), embedded.lags);
    acc.add(embedded, exec)?;
    acc.finish(centered)
}

impl MomentCorrentropy {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn lags(&self) -> usize {
        self.lags
    }

    pub fn sample_count(&self) -> usize {
        self.sample_count
    }

    pub fn is_centered(&self) -> bool {
        self.centered
    }

    /// Empirical mean of the feature vectors.
    pub fn feature_mean(&self) -> &DVector<f64> {
        &self.feature_mean
    }

    /// Eigensystem of the matrix, computed on first use.
    pub fn spectrum(&self) -> Result<&Spectrum> {
        if let Some(s) = self.spectrum.get() {
            return Ok(s);
        }
        let s = Spectrum::of(&self.matrix)?;
        Ok(self.spectrum.get_or_init(|| s))
    }

    pub fn tensor_entry(&self, d1: usize, t: usize, d2: usize, s: usize) -> Result<f64> {
        if d1 >= self.dims || d2 >= self.dims || t >= self.lags || s >= self.lags {
            return Err(Error::IndexOutOfRange(format!(
                "({d1}, {t}, {d2}, {s}) for D = {}, L = {}",
                self.dims, self.lags
            )));
        }
        Ok(self.matrix[(t * self.dims + d1, s * self.dims + d2)])
    }

    pub fn pseudo_inverse(&self, epsilon: f64) -> Result<SpectralPseudoInverse> {
        self.pseudo_inverse_with_ridge(epsilon, 0.0)
    }

    /// `(U + ridge I)^+`; `ridge = 0` is the plain spectral pseudo-inverse.
    pub fn pseudo_inverse_with_ridge(&self, epsilon: f64, ridge: f64) -> Result<SpectralPseudoInverse> {
        linalg::spectral_pinv(&self.matrix, epsilon, ridge)
    }

    /// Data-dependent kernel `phi(x)^T U phi(y)` between two windows.
    pub fn ku_kernel(&self, x: &[f64], y: &[f64], spec: &FeatureMapSpec) -> Result<f64> {
        for w in [x, y] {
            if w.len() != self.lags {
                return Err(Error::DimensionMismatch {
                    context: "ku_kernel window",
                    expected: self.lags,
                    actual: w.len(),
                });
            }
        }
        if spec.dims() != self.dims {
            return Err(Error::DimensionMismatch {
                context: "ku_kernel feature dims",
                expected: self.dims,
                actual: spec.dims(),
            });
        }
        let px = DVector::from_vec(featuremap::map_window(x, spec)?.vector_view().to_vec());
        let py = DVector::from_vec(featuremap::map_window(y, spec)?.vector_view().to_vec());
        Ok(px.dot(&(&self.matrix * py)))
    }

    /// Trace of the `(t, s)` lag block, an estimate of the correntropy
    /// `E[G_sigma(X_t, X_s)]` that sharpens as `D` grows.
    pub fn correntropy_block_trace(&self, t: usize, s: usize) -> Result<f64> {
        (0..self.dims).map(|d| self.tensor_entry(d, t, d, s)).sum()
    }
}
