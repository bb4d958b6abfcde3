//! Report files and the per-figure data tables derived from a report.
//!
//! | figure         | columns                                      |
//! |----------------|----------------------------------------------|
//! | `mse_vs_n`     | `method,N,mse_mean,mse_var`                  |
//! | `mse_vs_noise` | `method,N,noise,mse_mean,mse_var`            |
//! | `dl_sweep`     | `D,L,train_mse,theoretical_mse,test_mse`     |
//! | `modes`        | `tau,x,f`                                    |
//!
//! `mse_vs_n` uses the first noise level of the run. `dl_sweep` has one row
//! per (D, L) pair of the FWF grid, taken at the largest N and first noise
//! level with the best sigma for that pair.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

use super::config::MethodKind;
use super::runner::{select_best, ExperimentReport, Summary};

/// Figure data sets a report can produce.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure {
    MseVsN,
    MseVsNoise,
    DlSweep,
    Modes,
}

impl Figure {
    pub const ALL: [Figure; 4] = [Figure::MseVsN, Figure::MseVsNoise, Figure::DlSweep, Figure::Modes];

    pub fn id(self) -> &'static str {
        match self {
            Figure::MseVsN => "mse_vs_n",
            Figure::MseVsNoise => "mse_vs_noise",
            Figure::DlSweep => "dl_sweep",
            Figure::Modes => "modes",
        }
    }

    pub fn header(self) -> &'static [&'static str] {
        match self {
            Figure::MseVsN => &["method", "N", "mse_mean", "mse_var"],
            Figure::MseVsNoise => &["method", "N", "noise", "mse_mean", "mse_var"],
            Figure::DlSweep => &["D", "L", "train_mse", "theoretical_mse", "test_mse"],
            Figure::Modes => &["tau", "x", "f"],
        }
    }

    pub fn from_id(id: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|f| f.id() == id)
            .ok_or_else(|| Error::Config(format!("unknown figure `{id}`")))
    }
}

/// A tidy table with string cells, written as CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct FigureTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl FigureTable {
    fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let csv_err = |e: csv::Error| Error::Csv {
            line: 0,
            message: e.to_string(),
        };
        w.write_record(&self.header).map_err(csv_err)?;
        for row in &self.rows {
            w.write_record(row).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: std::io::Read>(input: R) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
        let csv_err = |e: csv::Error| Error::Csv {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        };
        let header = r.headers().map_err(csv_err)?.iter().map(String::from).collect();
        let rows = r
            .records()
            .map(|rec| rec.map(|rec| rec.iter().map(String::from).collect()))
            .collect::<std::result::Result<_, _>>()
            .map_err(csv_err)?;
        Ok(Self { header, rows })
    }

    /// Values of a named column.
    pub fn column(&self, name: &str) -> Result<Vec<&str>> {
        let k = self
            .header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))?;
        Ok(self.rows.iter().map(|r| r[k].as_str()).collect())
    }
}

/// Builds the data table behind `figure`. An empty report gives a header-only
/// table; a report lacking the figure's axes is an error naming the column.
pub fn emit_plot_data(report: &ExperimentReport, figure: Figure) -> Result<FigureTable> {
    let mut table = FigureTable::new(figure.header());
    if report.cells.is_empty() {
        return Ok(table);
    }
    match figure {
        Figure::MseVsN => {
            let noise = report.selected.first().map(|s| s.noise.to_bits());
            for s in report.selected.iter().filter(|s| Some(s.noise.to_bits()) == noise) {
                table.rows.push(vec![
                    s.method.clone(),
                    s.n.to_string(),
                    s.test_mse_mean.to_string(),
                    s.test_mse_var.to_string(),
                ]);
            }
        }
        Figure::MseVsNoise => {
            for s in &report.selected {
                table.rows.push(vec![
                    s.method.clone(),
                    s.n.to_string(),
                    s.noise.to_string(),
                    s.test_mse_mean.to_string(),
                    s.test_mse_var.to_string(),
                ]);
            }
        }
        Figure::DlSweep => table.rows = dl_sweep_rows(report)?,
        Figure::Modes => {
            let modes = report.modes.as_ref().ok_or_else(|| Error::MissingColumn("f".into()))?;
            for (tau, row) in modes.functions.iter().enumerate() {
                for (x, f) in modes.grid.iter().zip(row) {
                    table.rows.push(vec![tau.to_string(), x.to_string(), f.to_string()]);
                }
            }
        }
    }
    Ok(table)
}

fn dl_sweep_rows(report: &ExperimentReport) -> Result<Vec<Vec<String>>> {
    let fwf: Vec<&Summary> = report
        .summaries
        .iter()
        .filter(|s| s.hyper.method == MethodKind::Fwf)
        .collect();
    if fwf.is_empty() {
        return Err(Error::MissingColumn("D".into()));
    }
    let max_n = fwf.iter().map(|s| s.n).max().unwrap_or(0);
    let noise = fwf[0].noise.to_bits();
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    for s in &fwf {
        let pair = (s.hyper.dims.unwrap_or(0), s.hyper.lags);
        if !pairs.contains(&pair) {
            pairs.push(pair);
        }
    }
    let text = |v: Option<f64>| v.map_or_else(|| "NaN".to_string(), |v| v.to_string());
    let mut rows = Vec::new();
    for (d, l) in pairs {
        let pool: Vec<&&Summary> = fwf
            .iter()
            .filter(|s| s.n == max_n && s.noise.to_bits() == noise)
            .filter(|s| s.hyper.dims == Some(d) && s.hyper.lags == l)
            .collect();
        let best = select_best(pool.iter().map(|s| (s.test_mse_mean.unwrap_or(f64::INFINITY), s.hyper.sigma)));
        let s = best.map(|i| pool[i]);
        rows.push(vec![
            d.to_string(),
            l.to_string(),
            text(s.and_then(|s| s.train_mse_mean)),
            text(s.and_then(|s| s.theoretical_mmse_mean)),
            text(s.and_then(|s| s.test_mse_mean)),
        ]);
    }
    Ok(rows)
}

/// Writes `report.json`, `timings.csv` and one CSV per figure the report can
/// produce into `dir`. Returns the figure ids written.
pub fn write_report(report: &ExperimentReport, dir: impl AsRef<Path>) -> Result<Vec<&'static str>> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let json = serde_json::to_string_pretty(report).map_err(|e| Error::Format(e.to_string()))?;
    fs::write(dir.join("report.json"), json + "\n")?;
    write_timings(report, fs::File::create(dir.join("timings.csv"))?)?;
    write_figures(report, dir)
}

/// Writes every figure the report supports; missing axes skip the figure.
pub fn write_figures(report: &ExperimentReport, dir: impl AsRef<Path>) -> Result<Vec<&'static str>> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for fig in Figure::ALL {
        match emit_plot_data(report, fig) {
            Ok(table) => {
                table.write_csv(fs::File::create(dir.join(format!("{}.csv", fig.id())))?)?;
                written.push(fig.id());
            }
            Err(Error::MissingColumn(_)) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(written)
}

/// `cell,method,N,noise,fold,fit_seconds,eval_seconds_per_sample`.
pub fn write_timings<W: Write>(report: &ExperimentReport, mut out: W) -> Result<()> {
    writeln!(out, "cell,method,N,noise,fold,fit_seconds,eval_seconds_per_sample")?;
    for t in &report.timings {
        let c = &report.cells[t.cell];
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            t.cell, c.method, c.n, c.noise, c.fold, t.fit_seconds, t.eval_seconds_per_sample
        )?;
    }
    Ok(())
}

pub fn load_report(path: impl AsRef<Path>) -> Result<ExperimentReport> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Format(e.to_string()))
}
