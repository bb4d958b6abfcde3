//! Binary model files.
//!
//! Layout, all integers and floats little-endian:
//!
//! ```text
//! magic     4 bytes  "FWFM"
//! version   u16      1
//! variant   u8       0 fwf, 1 linear wiener, 2 klms, 3 krls, 4 krr
//! flags     u8       bit 0: centered fit (fwf only)
//! ```
//!
//! followed by a variant body.
//!
//! * fwf: `D, L, horizon, effective_rank` as u32, then `sigma, epsilon,
//!   ridge, offset, desired_power, theoretical_mmse, support_lo,
//!   support_hi` as f64, then `w`, `rho` and the moment-matrix eigenvalues,
//!   `D * L` f64 each.
//! * linear wiener: `L, horizon, effective_rank` as u32, then `w` (L),
//!   `rho_z` (L) and `R` (L * L, column-major).
//! * dictionary models: `L, n_centers, horizon, has_inverse` as u32, then
//!   `sigma, parameter` as f64, the centers (`n * L`), the coefficients
//!   (`n`) and, when `has_inverse` is 1, the `n x n` inverse Gram matrix.
//!
//! A file must be consumed exactly; short or over-long files are rejected.

use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::baselines::{DictionaryModel, KernelVariant, LinearWienerModel};
use crate::error::{Error, Result};
use crate::featuremap::FeatureMapSpec;
use crate::fwf::FwfModel;

pub const MAGIC: &[u8; 4] = b"FWFM";
pub const VERSION: u16 = 1;

/// Any model the file format can hold.
#[derive(Debug, Clone, PartialEq)]
pub enum StoredModel {
    Fwf(FwfModel),
    LinearWiener(LinearWienerModel),
    Dictionary(DictionaryModel),
}

impl StoredModel {
    pub fn variant_name(&self) -> &'static str {
        match self {
            StoredModel::Fwf(_) => "fwf",
            StoredModel::LinearWiener(_) => "linear_wiener",
            StoredModel::Dictionary(m) => m.variant().name(),
        }
    }

    pub fn as_predictor(&self) -> &dyn crate::Predictor {
        match self {
            StoredModel::Fwf(m) => m,
            StoredModel::LinearWiener(m) => m,
            StoredModel::Dictionary(m) => m,
        }
    }
}

struct Writer(Vec<u8>);

impl Writer {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u16(&mut self, v: u16) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u32(&mut self, v: usize) -> Result<()> {
        let v = u32::try_from(v).map_err(|_| Error::Format(format!("{v} does not fit in u32")))?;
        self.0.extend_from_slice(&v.to_le_bytes());
        Ok(())
    }
    fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64s(&mut self, vs: &[f64]) {
        for &v in vs {
            self.f64(v);
        }
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len()).ok_or_else(|| {
            Error::Format(format!("truncated file: need {n} bytes at offset {}", self.pos))
        })?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }
    fn u32(&mut self) -> Result<usize> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()) as usize)
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let bytes = n
            .checked_mul(8)
            .ok_or_else(|| Error::Format("array length overflow".into()))?;
        let raw = self.take(bytes)?;
        Ok(raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
    }
    fn finish(&self) -> Result<()> {
        if self.pos != self.buf.len() {
            return Err(Error::Format(format!(
                "{} trailing bytes after model body",
                self.buf.len() - self.pos
            )));
        }
        Ok(())
    }
}

pub fn encode(model: &StoredModel) -> Result<Vec<u8>> {
    let mut w = Writer(Vec::new());
    w.0.extend_from_slice(MAGIC);
    w.u16(VERSION);
    match model {
        StoredModel::Fwf(m) => {
            w.u8(0);
            w.u8(m.centered as u8);
            w.u32(m.spec.dims())?;
            w.u32(m.lags)?;
            w.u32(m.horizon)?;
            w.u32(m.effective_rank)?;
            for v in [
                m.spec.sigma(),
                m.epsilon,
                m.ridge,
                m.offset,
                m.desired_power,
                m.theoretical_mmse,
                m.support.0,
                m.support.1,
            ] {
                w.f64(v);
            }
            w.f64s(m.weights.as_slice());
            w.f64s(m.rho.as_slice());
            w.f64s(m.eigenvalues.as_slice());
        }
        StoredModel::LinearWiener(m) => {
            w.u8(1);
            w.u8(0);
            w.u32(m.lags)?;
            w.u32(m.horizon)?;
            w.u32(m.effective_rank)?;
            w.f64s(m.weights.as_slice());
            w.f64s(m.crosscorrelation.as_slice());
            w.f64s(m.autocorrelation.as_slice());
        }
        StoredModel::Dictionary(m) => {
            w.u8(match m.variant {
                KernelVariant::Klms { .. } => 2,
                KernelVariant::Krls { .. } => 3,
                KernelVariant::Krr { .. } => 4,
            });
            w.u8(0);
            w.u32(m.lags)?;
            w.u32(m.len())?;
            w.u32(m.horizon)?;
            w.u32(m.inverse_gram.is_some() as usize)?;
            w.f64(m.sigma);
            w.f64(m.variant.parameter());
            w.f64s(&m.centers);
            w.f64s(&m.coefficients);
            if let Some(q) = &m.inverse_gram {
                w.f64s(q.as_slice());
            }
        }
    }
    Ok(w.0)
}

pub fn decode(bytes: &[u8]) -> Result<StoredModel> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let version = r.u16()?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let variant = r.u8()?;
    let flags = r.u8()?;
    let model = match variant {
        0 => {
            let dims = r.u32()?;
            let lags = r.u32()?;
            let horizon = r.u32()?;
            let effective_rank = r.u32()?;
            let sigma = r.f64()?;
            let epsilon = r.f64()?;
            let ridge = r.f64()?;
            let offset = r.f64()?;
            let desired_power = r.f64()?;
            let theoretical_mmse = r.f64()?;
            let support = (r.f64()?, r.f64()?);
            let spec = FeatureMapSpec::new(sigma, dims).map_err(|e| Error::Format(e.to_string()))?;
            if lags == 0 {
                return Err(Error::Format("zero lags".into()));
            }
            let n = dims
                .checked_mul(lags)
                .ok_or_else(|| Error::Format("shape overflow".into()))?;
            let weights = DVector::from_vec(r.f64s(n)?);
            let rho = DVector::from_vec(r.f64s(n)?);
            let eigenvalues = DVector::from_vec(r.f64s(n)?);
            StoredModel::Fwf(FwfModel::from_stored(
                spec,
                lags,
                horizon,
                weights,
                rho,
                epsilon,
                ridge,
                flags & 1 == 1,
                offset,
                desired_power,
                theoretical_mmse,
                effective_rank,
                eigenvalues,
                support,
            ))
        }
        1 => {
            let lags = r.u32()?;
            let horizon = r.u32()?;
            let effective_rank = r.u32()?;
            if lags == 0 {
                return Err(Error::Format("zero lags".into()));
            }
            let weights = DVector::from_vec(r.f64s(lags)?);
            let crosscorrelation = DVector::from_vec(r.f64s(lags)?);
            let autocorrelation = DMatrix::from_vec(lags, lags, r.f64s(lags * lags)?);
            StoredModel::LinearWiener(LinearWienerModel {
                lags,
                horizon,
                weights,
                autocorrelation,
                crosscorrelation,
                effective_rank,
            })
        }
        2..=4 => {
            let lags = r.u32()?;
            let n = r.u32()?;
            let horizon = r.u32()?;
            let has_inverse = r.u32()?;
            let sigma = r.f64()?;
            let parameter = r.f64()?;
            if lags == 0 {
                return Err(Error::Format("zero lags".into()));
            }
            let variant = match variant {
                2 => KernelVariant::Klms { step_size: parameter },
                3 => KernelVariant::Krls { ridge: parameter },
                _ => KernelVariant::Krr { lambda: parameter },
            };
            let centers = r.f64s(n.checked_mul(lags).ok_or_else(|| Error::Format("shape overflow".into()))?)?;
            let coefficients = r.f64s(n)?;
            let inverse_gram = match has_inverse {
                0 => None,
                1 => Some(DMatrix::from_vec(n, n, r.f64s(n.checked_mul(n).ok_or_else(|| Error::Format("shape overflow".into()))?)?)),
                other => return Err(Error::Format(format!("bad inverse flag {other}"))),
            };
            StoredModel::Dictionary(DictionaryModel {
                variant,
                lags,
                horizon,
                sigma,
                centers,
                coefficients,
                inverse_gram,
            })
        }
        other => return Err(Error::Format(format!("unknown variant tag {other}"))),
    };
    r.finish()?;
    Ok(model)
}

pub fn save_model(model: &StoredModel, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, encode(model)?)?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<StoredModel> {
    decode(&std::fs::read(path)?)
}
