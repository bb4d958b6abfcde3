//! Explicit finite-rank approximation of the Gaussian RKHS.
//!
//! A scalar `x` maps to `phi_d(x) = exp(-x^2 / 2 sigma^2) (x / sigma)^d / sqrt(d!)`
//! for degrees `d = 0..D-1`, so that `<phi(x), phi(y)>` is the Taylor
//! truncation of `exp(-(x - y)^2 / 2 sigma^2)` after `D` terms. A window of
//! `L` samples maps to a `D x L` tensor whose lag-major unfolding is the
//! feature vector used everywhere else in the crate.
//!
//! Inputs with `|x| / sigma` large enough that the Gaussian envelope
//! underflows map to the zero vector. That is the saturation region of the
//! map, not an error.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::datagen::WindowedDataset;
use crate::error::{check_all_finite, check_finite, invalid, Error, Result};
use crate::par::{self, Execution};

/// Upper bound on the enumerated multivariate feature dimension.
pub const MULTIVARIATE_CAPACITY: usize = 1_000_000;

/// Kernel size and number of retained degrees per scalar sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureMapSpec {
    sigma: f64,
    dims: usize,
}

impl FeatureMapSpec {
    pub fn new(sigma: f64, dims: usize) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(invalid("sigma", format!("must be finite and > 0, got {sigma}")));
        }
        if dims == 0 {
            return Err(invalid("dims", "must be >= 1"));
        }
        Ok(Self { sigma, dims })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    /// Writes `phi_0(x) .. phi_{D-1}(x)` into `out` without validating `x`.
    #[inline]
    pub fn fill(&self, x: f64, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.dims);
        let u = x / self.sigma;
        let log_env = -0.5 * u * u;
        if log_env > -700.0 {
            let mut phi = log_env.exp();
            out[0] = phi;
            for (d, slot) in out.iter_mut().enumerate().skip(1) {
                phi *= u / (d as f64).sqrt();
                *slot = phi;
            }
            return;
        }
        // Subnormal envelope: build each feature in log space instead.
        let log_u = u.abs().ln();
        let mut log_norm = 0.0;
        for (d, slot) in out.iter_mut().enumerate() {
            if d > 0 {
                log_norm += 0.5 * (d as f64).ln();
            }
            let mag = (log_env + d as f64 * log_u - log_norm).exp();
            *slot = if u < 0.0 && d % 2 == 1 { -mag } else { mag };
        }
    }
}

/// Feature vector of a single scalar.
pub fn map_scalar(x: f64, spec: &FeatureMapSpec) -> Result<Vec<f64>> {
    check_finite("map_scalar input", x)?;
    let mut out = vec![0.0; spec.dims];
    spec.fill(x, &mut out);
    Ok(out)
}

/// Truncated Gaussian kernel, summed in closed form.
pub fn truncated_kernel(x: f64, y: f64, spec: &FeatureMapSpec) -> Result<f64> {
    check_finite("truncated_kernel input", x)?;
    check_finite("truncated_kernel input", y)?;
    let s2 = spec.sigma * spec.sigma;
    let ratio = x * y / s2;
    let log_env = -(x * x + y * y) / (2.0 * s2);
    if log_env > -600.0 || ratio == 0.0 {
        let mut term = log_env.exp();
        let mut sum = term;
        for d in 1..spec.dims {
            term *= ratio / d as f64;
            sum += term;
        }
        return Ok(sum);
    }
    // The envelope alone underflows here while the products need not.
    let log_r = ratio.abs().ln();
    let negative = ratio < 0.0;
    let mut log_fact = 0.0;
    let mut sum = 0.0;
    for d in 0..spec.dims {
        if d > 0 {
            log_fact += (d as f64).ln();
        }
        let mag = (log_env + d as f64 * log_r - log_fact).exp();
        sum += if negative && d % 2 == 1 { -mag } else { mag };
    }
    Ok(sum)
}

/// Bound on `|truncated_kernel - gaussian|` from the neglected Taylor tail.
///
/// Terms are summed until they stop contributing at double precision.
pub fn truncation_tail_bound(x: f64, y: f64, spec: &FeatureMapSpec) -> f64 {
    let s2 = spec.sigma * spec.sigma;
    let r = (x * y / s2).abs();
    let envelope = (-(x * x + y * y) / (2.0 * s2)).exp();
    // r^D / D! via logs, then the tail recurrence.
    let mut term = if r == 0.0 {
        if spec.dims == 0 { 1.0 } else { 0.0 }
    } else {
        let log_fact: f64 = (1..=spec.dims).map(|k| (k as f64).ln()).sum();
        (spec.dims as f64 * r.ln() - log_fact).exp()
    };
    let mut tail = 0.0;
    let mut d = spec.dims;
    while term > 0.0 {
        tail += term;
        d += 1;
        term *= r / d as f64;
        if term < tail * 1e-18 && d as f64 > r {
            break;
        }
    }
    envelope * tail
}

/// Embedding of one window: a `D x L` tensor stored as its lag-major unfolding.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowEmbedding {
    dims: usize,
    lags: usize,
    vector: Vec<f64>,
}

impl WindowEmbedding {
    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn lags(&self) -> usize {
        self.lags
    }

    /// Entry `(d, tau)` of the tensor.
    pub fn tensor_entry(&self, d: usize, tau: usize) -> f64 {
        self.vector[tau * self.dims + d]
    }

    /// Flat view with `vector[tau * D + d] = tensor[d, tau]`.
    pub fn vector_view(&self) -> &[f64] {
        &self.vector
    }

    pub fn to_tensor(&self) -> DMatrix<f64> {
        // Column-major storage of a D x L matrix is exactly the lag-major unfolding.
        DMatrix::from_column_slice(self.dims, self.lags, &self.vector)
    }

    pub fn from_tensor(tensor: &DMatrix<f64>) -> Self {
        Self {
            dims: tensor.nrows(),
            lags: tensor.ncols(),
            vector: tensor.as_slice().to_vec(),
        }
    }

    /// Tensor inner product, summed over degree and lag.
    pub fn inner(&self, other: &WindowEmbedding) -> f64 {
        (0..self.lags)
            .map(|tau| {
                (0..self.dims)
                    .map(|d| self.tensor_entry(d, tau) * other.tensor_entry(d, tau))
                    .sum::<f64>()
            })
            .sum()
    }
}

/// Maps a newest-first window `window[tau] = x(t - tau)`.
pub fn map_window(window: &[f64], spec: &FeatureMapSpec) -> Result<WindowEmbedding> {
    if window.is_empty() {
        return Err(Error::Empty("window"));
    }
    check_all_finite("window sample", window)?;
    let mut vector = vec![0.0; spec.dims * window.len()];
    fill_window(window, spec, &mut vector);
    Ok(WindowEmbedding {
        dims: spec.dims,
        lags: window.len(),
        vector,
    })
}

#[inline]
pub(crate) fn fill_window(window: &[f64], spec: &FeatureMapSpec, out: &mut [f64]) {
    for (x, chunk) in window.iter().zip(out.chunks_exact_mut(spec.dims)) {
        spec.fill(*x, chunk);
    }
}

/// All windows of a dataset mapped into feature space, one column per window.
#[derive(Debug, Clone)]
pub struct EmbeddedDataset {
    pub spec: FeatureMapSpec,
    pub lags: usize,
    /// `(D * L) x N'` matrix.
    pub features: DMatrix<f64>,
    pub targets: Vec<f64>,
}

impl EmbeddedDataset {
    pub fn len(&self) -> usize {
        self.features.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.features.ncols() == 0
    }

    pub fn feature_dim(&self) -> usize {
        self.features.nrows()
    }
}

/// Maps every window of `data`.
pub fn embed_dataset(data: &WindowedDataset, spec: &FeatureMapSpec, exec: Execution) -> Result<EmbeddedDataset> {
    check_all_finite("window sample", data.flat_windows())?;
    let dl = spec.dims * data.lags();
    let n = data.len();
    let chunks = par::map_chunks(exec, n, 512, |range| {
        let mut block = vec![0.0; dl * range.len()];
        for (i, out) in range.zip(block.chunks_exact_mut(dl)) {
            fill_window(data.window(i), spec, out);
        }
        block
    });
    let flat: Vec<f64> = chunks.into_iter().flatten().collect();
    Ok(EmbeddedDataset {
        spec: *spec,
        lags: data.lags(),
        features: DMatrix::from_vec(dl, n, flat),
        targets: data.targets().to_vec(),
    })
}

/// Dimension `sum_{d=0..k} p^d` of the enumerated multivariate map.
pub fn multivariate_dim(p: usize, max_degree: usize) -> Option<usize> {
    let mut total: usize = 0;
    let mut level: usize = 1;
    for d in 0..=max_degree {
        if d > 0 {
            level = level.checked_mul(p)?;
        }
        total = total.checked_add(level)?;
    }
    Some(total)
}

/// Index tuples of degree `d` over `p` coordinates in lexicographic order.
pub fn multivariate_indices(p: usize, d: usize) -> Vec<Vec<usize>> {
    let mut tuples = vec![Vec::new()];
    for _ in 0..d {
        tuples = tuples
            .into_iter()
            .flat_map(|prefix: Vec<usize>| {
                (0..p).map(move |j| {
                    let mut t = prefix.clone();
                    t.push(j);
                    t
                })
            })
            .collect();
    }
    tuples
}

/// Taylor feature map for a vector input, enumerating every ordered index
/// tuple of each degree up to `max_degree`.
pub fn map_multivariate(x: &[f64], sigma: f64, max_degree: usize) -> Result<Vec<f64>> {
    if x.is_empty() {
        return Err(Error::Empty("multivariate input"));
    }
    check_all_finite("map_multivariate input", x)?;
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(invalid("sigma", format!("must be finite and > 0, got {sigma}")));
    }
    let p = x.len();
    let total = multivariate_dim(p, max_degree).unwrap_or(usize::MAX);
    if total > MULTIVARIATE_CAPACITY {
        return Err(Error::Capacity {
            requested: total,
            limit: MULTIVARIATE_CAPACITY,
        });
    }
    let norm2: f64 = x.iter().map(|v| v * v).sum();
    let mut level = vec![(-norm2 / (2.0 * sigma * sigma)).exp()];
    let mut out = Vec::with_capacity(total);
    out.extend_from_slice(&level);
    for d in 1..=max_degree {
        let scale = 1.0 / (sigma * (d as f64).sqrt());
        level = level
            .iter()
            .flat_map(|&prefix| x.iter().map(move |&xj| prefix * xj * scale))
            .collect();
        out.extend_from_slice(&level);
    }
    Ok(out)
}

/// Closed-form truncated kernel for vector inputs.
pub fn truncated_kernel_multivariate(x: &[f64], y: &[f64], sigma: f64, max_degree: usize) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            context: "truncated_kernel_multivariate",
            expected: x.len(),
            actual: y.len(),
        });
    }
    let s2 = sigma * sigma;
    let nx: f64 = x.iter().map(|v| v * v).sum();
    let ny: f64 = y.iter().map(|v| v * v).sum();
    let dot: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let mut term = 1.0;
    let mut sum = 1.0;
    for d in 1..=max_degree {
        term *= dot / (s2 * d as f64);
        sum += term;
    }
    Ok((-(nx + ny) / (2.0 * s2)).exp() * sum)
}
