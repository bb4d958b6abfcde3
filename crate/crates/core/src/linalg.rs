//! Dense symmetric linear algebra shared by the filter and the baselines.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::par::{self, Execution};

/// Relative tolerance below which negative eigenvalues are treated as roundoff.
pub const PSD_TOLERANCE: f64 = 1e-8;

/// Default relative eigenvalue cutoff for pseudo-inversion.
pub const DEFAULT_EPSILON: f64 = 1e-10;

/// Columns per partial sum when accumulating outer products.
pub(crate) const ACCUMULATION_CHUNK: usize = 256;

/// Eigendecomposition of a symmetric PSD matrix.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub eigenvalues: DVector<f64>,
    pub eigenvectors: DMatrix<f64>,
}

impl Spectrum {
    pub fn of(matrix: &DMatrix<f64>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::DimensionMismatch {
                context: "eigendecomposition",
                expected: matrix.nrows(),
                actual: matrix.ncols(),
            });
        }
        let eig = SymmetricEigen::try_new(matrix.clone(), f64::EPSILON, 0)
            .ok_or_else(|| Error::Conditioning("symmetric eigensolver did not converge".into()))?;
        Ok(Self {
            eigenvalues: eig.eigenvalues,
            eigenvectors: eig.eigenvectors,
        })
    }

    pub fn lambda_max(&self) -> f64 {
        self.eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn lambda_min(&self) -> f64 {
        self.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Fails when the most negative eigenvalue is beyond roundoff.
    pub fn check_psd(&self) -> Result<()> {
        if self.eigenvalues.is_empty() {
            return Ok(());
        }
        let lambda_min = self.lambda_min();
        let lambda_max = self.lambda_max();
        let scale = self.eigenvalues.amax();
        if lambda_min < 0.0 && lambda_min < -PSD_TOLERANCE * scale {
            return Err(Error::PsdViolation {
                lambda_min,
                lambda_max,
            });
        }
        Ok(())
    }
}

/// Moore-Penrose inverse of a PSD matrix built from its eigensystem.
#[derive(Debug, Clone)]
pub struct SpectralPseudoInverse {
    pub matrix: DMatrix<f64>,
    /// Relative eigenvalue threshold that was applied.
    pub cutoff: f64,
    pub effective_rank: usize,
    /// Eigenvalues of the source matrix after clamping, ascending.
    pub eigenvalues: DVector<f64>,
    /// Eigenvectors spanning the retained subspace, one per column.
    pub retained: DMatrix<f64>,
}

/// Pseudo-inverse of a symmetric PSD matrix.
///
/// Negative eigenvalues within roundoff are clamped to zero, then every
/// eigenvalue at or below `epsilon * lambda_max` is discarded and the rest are
/// reciprocated. A positive `ridge` shifts the spectrum by `ridge` first,
/// giving the `(A + ridge I)^-1` path.
pub fn spectral_pinv(matrix: &DMatrix<f64>, epsilon: f64, ridge: f64) -> Result<SpectralPseudoInverse> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(crate::error::invalid("epsilon", format!("must lie in (0, 1), got {epsilon}")));
    }
    if !(ridge >= 0.0 && ridge.is_finite()) {
        return Err(crate::error::invalid("ridge", format!("must be finite and >= 0, got {ridge}")));
    }
    let spectrum = Spectrum::of(matrix)?;
    spectrum.check_psd()?;

    let n = matrix.nrows();
    let clamped = spectrum.eigenvalues.map(|l| l.max(0.0) + ridge);
    let lambda_max = clamped.iter().copied().fold(0.0, f64::max);
    let threshold = epsilon * lambda_max;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| clamped[a].total_cmp(&clamped[b]));
    let eigenvalues = DVector::from_iterator(n, order.iter().map(|&i| clamped[i]));

    let keep: Vec<usize> = order
        .iter()
        .copied()
        .filter(|&i| lambda_max > 0.0 && clamped[i] > threshold)
        .collect();
    let mut retained = DMatrix::zeros(n, keep.len());
    let mut scaled = DMatrix::zeros(n, keep.len());
    for (col, &i) in keep.iter().enumerate() {
        let q = spectrum.eigenvectors.column(i);
        retained.set_column(col, &q);
        scaled.set_column(col, &(q / clamped[i]));
    }
    let mut inverse = &scaled * retained.transpose();
    symmetrize(&mut inverse);

    Ok(SpectralPseudoInverse {
        matrix: inverse,
        cutoff: epsilon,
        effective_rank: keep.len(),
        eigenvalues,
        retained,
    })
}

/// Copies the lower triangle onto the upper one so the result is exactly symmetric.
pub fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for j in 0..n {
        for i in (j + 1)..n {
            let v = m[(i, j)];
            m[(j, i)] = v;
        }
    }
}

/// Sum of `x_i x_i^T` over the columns of `columns`, exactly symmetric.
///
/// Partial sums over fixed chunks of columns are formed independently and
/// reduced in chunk order.
pub fn outer_product_sum(columns: &DMatrix<f64>, exec: Execution) -> DMatrix<f64> {
    let dim = columns.nrows();
    let partials = par::map_chunks(exec, columns.ncols(), ACCUMULATION_CHUNK, |range| {
        let block = columns.columns(range.start, range.len());
        block * block.transpose()
    });
    let mut total = DMatrix::zeros(dim, dim);
    for p in partials {
        total += p;
    }
    symmetrize(&mut total);
    total
}

/// `columns * weights`, accumulated with the same chunking as [`outer_product_sum`].
pub fn weighted_column_sum(columns: &DMatrix<f64>, weights: &[f64], exec: Execution) -> DVector<f64> {
    let partials = par::map_chunks(exec, columns.ncols(), ACCUMULATION_CHUNK, |range| {
        let block = columns.columns(range.start, range.len());
        block * DVector::from_column_slice(&weights[range])
    });
    let mut total = DVector::zeros(columns.nrows());
    for p in partials {
        total += p;
    }
    total
}

/// Relative Frobenius distance `||a - b|| / max(||b||, tiny)`.
pub fn relative_frobenius(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
}
