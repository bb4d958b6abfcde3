use std::ops::Range;

use crate::error::{Error, Result};

/// Sliding windows over an input series with aligned targets.
///
/// Window `i` is newest-first: `window(i)[tau] = x[first_index + i - tau]`,
/// and its target is `z[first_index + i + horizon]`.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowedDataset {
    lags: usize,
    horizon: usize,
    first_index: usize,
    windows: Vec<f64>,
    targets: Vec<f64>,
}

impl WindowedDataset {
    /// Builds a dataset from explicit windows (row-major, `lags` per row).
    pub fn from_parts(lags: usize, windows: Vec<f64>, targets: Vec<f64>) -> Result<Self> {
        if lags == 0 {
            return Err(crate::error::invalid("lags", "must be >= 1"));
        }
        if windows.len() != lags * targets.len() {
            return Err(Error::DimensionMismatch {
                context: "windowed dataset",
                expected: lags * targets.len(),
                actual: windows.len(),
            });
        }
        Ok(Self {
            lags,
            horizon: 0,
            first_index: lags - 1,
            windows,
            targets,
        })
    }

    pub fn lags(&self) -> usize {
        self.lags
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Series index of the newest sample in window 0.
    pub fn first_index(&self) -> usize {
        self.first_index
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn window(&self, i: usize) -> &[f64] {
        &self.windows[i * self.lags..(i + 1) * self.lags]
    }

    pub fn windows(&self) -> impl Iterator<Item = &[f64]> {
        self.windows.chunks_exact(self.lags)
    }

    pub fn flat_windows(&self) -> &[f64] {
        &self.windows
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }
}

/// All full windows of `series_x` of length `lags`, each paired with the
/// target `horizon` steps after its newest sample.
///
/// A series of length `N` yields `N - lags + 1 - horizon` windows.
pub fn embed_windows(series_x: &[f64], series_z: &[f64], lags: usize, horizon: usize) -> Result<WindowedDataset> {
    if series_x.len() != series_z.len() {
        return Err(Error::DimensionMismatch {
            context: "input/target series",
            expected: series_x.len(),
            actual: series_z.len(),
        });
    }
    if lags == 0 {
        return Err(crate::error::invalid("lags", "must be >= 1"));
    }
    let needed = lags + horizon;
    if series_x.len() < needed {
        return Err(Error::SeriesTooShort {
            needed,
            have: series_x.len(),
        });
    }
    let first = lags - 1;
    windows_for_targets(series_x, series_z, lags, horizon, (first + horizon)..series_z.len())
}

/// Windows whose target index falls in `targets`, reading inputs from
/// anywhere before it. Used to build test sets that may look back into the
/// training region for input context.
pub fn windows_for_targets(
    series_x: &[f64],
    series_z: &[f64],
    lags: usize,
    horizon: usize,
    targets: Range<usize>,
) -> Result<WindowedDataset> {
    if lags == 0 {
        return Err(crate::error::invalid("lags", "must be >= 1"));
    }
    if targets.is_empty() {
        return Err(Error::Empty("target range"));
    }
    let earliest = lags - 1 + horizon;
    if targets.start < earliest {
        return Err(Error::SeriesTooShort {
            needed: earliest + 1,
            have: targets.start + 1,
        });
    }
    if targets.end > series_z.len() || targets.end - horizon > series_x.len() {
        return Err(Error::IndexOutOfRange(format!(
            "target range {targets:?} beyond series of length {}",
            series_z.len()
        )));
    }
    let count = targets.len();
    let mut windows = Vec::with_capacity(count * lags);
    for j in targets.clone() {
        let newest = j - horizon;
        windows.extend((0..lags).map(|tau| series_x[newest - tau]));
    }
    Ok(WindowedDataset {
        lags,
        horizon,
        first_index: targets.start - horizon,
        windows,
        targets: series_z[targets].to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_series_gives_one_window() {
        let x = [1.0, 2.0, 3.0];
        let w = embed_windows(&x, &x, 3, 0).unwrap();
        assert_eq!(w.len(), 1);
        assert_eq!(w.window(0), &[3.0, 2.0, 1.0]);
    }

    #[test]
    fn zero_horizon_target_is_newest_sample() {
        let x: Vec<f64> = (0..20).map(|i| (i as f64).sin()).collect();
        let w = embed_windows(&x, &x, 4, 0).unwrap();
        assert_eq!(w.len(), 17);
        for i in 0..w.len() {
            assert_eq!(w.targets()[i], w.window(i)[0]);
        }
    }

    #[test]
    fn windows_overlap_consistently() {
        let x: Vec<f64> = (0..30).map(|i| i as f64 * 0.5).collect();
        let z: Vec<f64> = x.iter().map(|v| v * 2.0).collect();
        let w = embed_windows(&x, &z, 5, 2).unwrap();
        assert_eq!(w.len(), 30 - 5 + 1 - 2);
        for i in 0..w.len() - 1 {
            assert_eq!(&w.window(i)[..4], &w.window(i + 1)[1..]);
        }
        assert_eq!(w.targets()[0], z[4 + 2]);
    }

    #[test]
    fn too_short_is_rejected() {
        let x = [1.0, 2.0];
        assert!(matches!(embed_windows(&x, &x, 2, 1), Err(Error::SeriesTooShort { .. })));
        assert!(embed_windows(&x, &x[..1], 1, 0).is_err());
    }

    #[test]
    fn target_range_windows() {
        let x: Vec<f64> = (0..50).map(|i| i as f64).collect();
        let w = windows_for_targets(&x, &x, 3, 1, 40..45).unwrap();
        assert_eq!(w.len(), 5);
        assert_eq!(w.window(0), &[39.0, 38.0, 37.0]);
        assert_eq!(w.targets()[0], 40.0);
        assert!(windows_for_targets(&x, &x, 3, 1, 2..5).is_err());
    }
}
