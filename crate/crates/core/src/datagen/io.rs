use std::io::Write;
use std::ops::Range;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Column selector for [`load_csv`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Column {
    Index(usize),
    Name(String),
}

impl From<usize> for Column {
    fn from(i: usize) -> Self {
        Column::Index(i)
    }
}

impl From<&str> for Column {
    fn from(s: &str) -> Self {
        Column::Name(s.to_string())
    }
}

/// Reads one numeric column. The first row is treated as a header when its
/// selected field is not numeric (or when the column is selected by name).
pub fn load_csv(path: impl AsRef<Path>, column: &Column) -> Result<Vec<f64>> {
    let file = std::fs::File::open(path)?;
    read_csv(file, column)
}

pub fn read_csv<R: std::io::Read>(reader: R, column: &Column) -> Result<Vec<f64>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut index = match column {
        Column::Index(i) => Some(*i),
        Column::Name(_) => None,
    };
    let mut values = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| Error::Csv {
            line: e.position().map(|p| p.line()).unwrap_or(0),
            message: e.to_string(),
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(row as u64 + 1);
        if row == 0 {
            if let Column::Name(name) = column {
                let found = record.iter().position(|h| h == name);
                index = Some(found.ok_or_else(|| Error::MissingColumn(name.clone()))?);
                continue;
            }
        }
        let col = index.unwrap_or(0);
        let field = record.get(col).ok_or_else(|| Error::Csv {
            line,
            message: format!("row has no column {col}"),
        })?;
        match field.parse::<f64>() {
            Ok(v) if v.is_finite() => values.push(v),
            Ok(v) => {
                return Err(Error::Csv {
                    line,
                    message: format!("non-finite value {v}"),
                })
            }
            Err(_) if row == 0 => continue,
            Err(_) => {
                return Err(Error::Csv {
                    line,
                    message: format!("cannot parse `{field}` as a number"),
                })
            }
        }
    }
    Ok(values)
}

/// Writes a series as `index,value`.
pub fn write_series_csv<W: Write>(mut out: W, series: &[f64]) -> Result<()> {
    writeln!(out, "index,value")?;
    for (i, v) in series.iter().enumerate() {
        writeln!(out, "{i},{v}")?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// Divide by the Euclidean norm of the training slice.
    #[default]
    UnitNorm,
    /// Divide by the largest absolute value of the training slice.
    MaxAbs,
}

/// Scales a series by a factor computed on `train_range` only. Returns the
/// scaled series and the divisor.
pub fn normalize(series: &[f64], train_range: Range<usize>, mode: Normalization) -> Result<(Vec<f64>, f64)> {
    if train_range.is_empty() || train_range.end > series.len() {
        return Err(invalid("train_range", format!("{train_range:?} invalid for length {}", series.len())));
    }
    let slice = &series[train_range];
    let scale = match mode {
        Normalization::UnitNorm => slice.iter().map(|v| v * v).sum::<f64>().sqrt(),
        Normalization::MaxAbs => slice.iter().fold(0.0f64, |m, v| m.max(v.abs())),
    };
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(invalid("series", "training slice has zero or non-finite scale"));
    }
    Ok((series.iter().map(|v| v / scale).collect(), scale))
}

pub fn denormalize(series: &[f64], scale: f64) -> Vec<f64> {
    series.iter().map(|v| v * scale).collect()
}
