//! `fwf` command-line interface.
//!
//! Every verb exits 0 on success. Failures print one JSON line
//! `{"error": <kind>, "message": <text>}` to stderr and exit with status 1
//! (2 for usage errors).

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use fwf_core::baselines::{klms_fit_dataset, krls_fit_dataset, krr_fit, wiener_fit_dataset};
use fwf_core::bench::{
    emit_plot_data, generate_task, load_report, run_experiment, timing_probe, write_figures, write_report,
    ExperimentSpec, Figure, TaskSpec,
};
use fwf_core::datagen::{embed_windows, load_csv, write_series_csv, Column, WindowedDataset};
use fwf_core::format::{load_model, save_model, StoredModel};
use fwf_core::fwf::{fit_dataset, linspace, FitOptions};
use fwf_core::{mse, Error, Execution, FeatureMapSpec};

#[derive(Parser)]
#[command(name = "fwf", version, about = "Functional Wiener filter and kernel baselines")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Fwf,
    LinearWiener,
    Klms,
    Krls,
    Krr,
    Gpr,
}

#[derive(Clone, Copy, ValueEnum)]
enum TaskName {
    Stationary,
    MackeyGlass,
    Lorenz,
}

#[derive(Clone, Copy, ValueEnum)]
enum Side {
    Input,
    Target,
}

#[derive(clap::Args)]
struct SeriesArgs {
    /// CSV file holding the input series.
    #[arg(long)]
    input: PathBuf,
    /// Input column, by 0-based index or header name.
    #[arg(long, default_value = "0")]
    column: String,
    /// Target column; defaults to the input column (one-series prediction).
    #[arg(long)]
    target_column: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a model on a CSV series and save it.
    Fit {
        #[command(flatten)]
        series: SeriesArgs,
        #[arg(long, value_enum, default_value = "fwf")]
        method: Method,
        #[arg(long)]
        lags: usize,
        /// Feature dimensions per lag (fwf).
        #[arg(long, default_value_t = 30)]
        dims: usize,
        /// Kernel size.
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        /// Relative eigenvalue cutoff (fwf, linear wiener).
        #[arg(long, default_value_t = 1e-10)]
        epsilon: f64,
        /// Step size (klms), ridge (krls), lambda (krr) or noise variance (gpr).
        #[arg(long)]
        param: Option<f64>,
        /// Remove feature and target means before solving (fwf).
        #[arg(long)]
        centered: bool,
        #[arg(long, default_value_t = 1)]
        horizon: usize,
        /// Model file to write.
        #[arg(long)]
        out: PathBuf,
    },
    /// Predict with a saved model, writing `index,prediction`.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "0")]
        column: String,
        /// Output CSV; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Export the per-lag functions of an fwf model as `tau,x,f_tau_x`.
    Modes {
        #[arg(long)]
        model: PathBuf,
        /// Grid bounds; default to the training support.
        #[arg(long, allow_hyphen_values = true)]
        min: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        max: Option<f64>,
        #[arg(long, default_value_t = 101)]
        points: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run an experiment config and write its report and figure data.
    Bench {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory; defaults to the config's `output_dir`, else `.`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Run cells on one thread.
        #[arg(long)]
        sequential: bool,
    },
    /// Measure per-sample prediction latency of a saved model.
    Timing {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "0")]
        column: String,
        #[arg(long, default_value_t = 30)]
        repeats: usize,
    },
    /// Write figure CSVs from a saved report.
    Emit {
        /// `report.json` written by `bench`.
        #[arg(long)]
        input: PathBuf,
        /// Figure id (mse_vs_n, mse_vs_noise, dl_sweep, modes); all when absent.
        #[arg(long)]
        figure: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a synthetic series as `index,value`.
    Generate {
        #[arg(long, value_enum)]
        task: TaskName,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "input")]
        series: Side,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn column(spec: &str) -> Column {
    spec.parse::<usize>().map(Column::Index).unwrap_or_else(|_| Column::Name(spec.to_string()))
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>, Error> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(std::io::stdout().lock())),
    })
}

fn print_json(value: serde_json::Value) {
    println!("{value}");
}

fn require(param: Option<f64>, what: &'static str) -> Result<f64, Error> {
    param.ok_or_else(|| Error::InvalidParameter {
        name: "param",
        reason: format!("{what} is required for this method"),
    })
}

#[allow(clippy::too_many_arguments)]
fn fit_model(
    data: &WindowedDataset,
    method: Method,
    dims: usize,
    sigma: f64,
    epsilon: f64,
    param: Option<f64>,
    centered: bool,
    horizon: usize,
) -> Result<StoredModel, Error> {
    Ok(match method {
        Method::Fwf => {
            let spec = FeatureMapSpec::new(sigma, dims)?;
            let opts = FitOptions {
                epsilon,
                horizon,
                centered,
                ..FitOptions::default()
            };
            StoredModel::Fwf(fit_dataset(data, &spec, &opts)?)
        }
        Method::LinearWiener => StoredModel::LinearWiener(wiener_fit_dataset(data, epsilon)?),
        Method::Klms => StoredModel::Dictionary(klms_fit_dataset(data, sigma, require(param, "step size")?)?.0),
        Method::Krls => StoredModel::Dictionary(krls_fit_dataset(data, sigma, param.unwrap_or(0.0))?),
        Method::Krr | Method::Gpr => {
            StoredModel::Dictionary(krr_fit(data, sigma, require(param, "lambda")?, Execution::Parallel)?)
        }
    })
}

/// Every full window of `x`, newest sample first, in time order.
fn all_windows(x: &[f64], lags: usize) -> Result<WindowedDataset, Error> {
    embed_windows(x, x, lags, 0)
}

fn run(command: Command) -> Result<(), Error> {
    match command {
        Command::Fit {
            series,
            method,
            lags,
            dims,
            sigma,
            epsilon,
            param,
            centered,
            horizon,
            out,
        } => {
            let x = load_csv(&series.input, &column(&series.column))?;
            let z = match &series.target_column {
                Some(c) => load_csv(&series.input, &column(c))?,
                None => x.clone(),
            };
            let data = embed_windows(&x, &z, lags, horizon)?;
            let model = fit_model(&data, method, dims, sigma, epsilon, param, centered, horizon)?;
            save_model(&model, &out)?;
            let pred = model.as_predictor().predict_dataset(&data, Execution::Parallel)?;
            let mut line = json!({
                "model": out.display().to_string(),
                "method": model.variant_name(),
                "windows": data.len(),
                "train_mse": mse(&pred, data.targets()),
            });
            if let StoredModel::Fwf(m) = &model {
                line["theoretical_mmse"] = json!(m.theoretical_mmse());
                line["effective_rank"] = json!(m.effective_rank());
                if let Some(w) = m.rank_warning() {
                    line["warning"] = json!(w);
                }
            }
            print_json(line);
        }
        Command::Predict {
            model,
            input,
            column: col,
            out,
        } => {
            let model = load_model(&model)?;
            let p = model.as_predictor();
            let horizon = match &model {
                StoredModel::Fwf(m) => m.horizon(),
                StoredModel::LinearWiener(m) => m.horizon(),
                StoredModel::Dictionary(m) => m.horizon(),
            };
            let x = load_csv(&input, &column(&col))?;
            let data = all_windows(&x, p.lags())?;
            let pred = p.predict_dataset(&data, Execution::Parallel)?;
            let mut w = output(out.as_deref())?;
            writeln!(w, "index,prediction")?;
            for (i, v) in pred.iter().enumerate() {
                writeln!(w, "{},{v}", data.first_index() + i + horizon)?;
            }
            w.flush()?;
        }
        Command::Modes {
            model,
            min,
            max,
            points,
            out,
        } => {
            let model = match load_model(&model)? {
                StoredModel::Fwf(m) => m,
                other => {
                    return Err(Error::Format(format!(
                        "modes need an fwf model, found {}",
                        other.variant_name()
                    )))
                }
            };
            let (lo, hi) = model.support();
            let grid = linspace(min.unwrap_or(lo), max.unwrap_or(hi), points);
            let modes = model.extract_modes(&grid)?;
            let mut w = output(out.as_deref())?;
            modes.write_csv(&mut w)?;
            w.flush()?;
        }
        Command::Bench {
            config,
            seed,
            out,
            sequential,
        } => {
            let mut spec = ExperimentSpec::from_file(&config)?;
            if let Some(s) = seed {
                spec.seed = s;
            }
            let dir = out
                .or_else(|| spec.output_dir.clone())
                .unwrap_or_else(|| PathBuf::from("."));
            let exec = if sequential {
                Execution::Sequential
            } else {
                Execution::Parallel
            };
            let report = run_experiment(&spec, exec)?;
            let figures = write_report(&report, &dir)?;
            let failed = report.cells.iter().filter(|c| c.error.is_some()).count();
            print_json(json!({
                "report": dir.join("report.json").display().to_string(),
                "spec_hash": report.spec_hash,
                "cells": report.cells.len(),
                "failed_cells": failed,
                "failed_methods": report.failed_methods,
                "figures": figures,
            }));
        }
        Command::Timing {
            model,
            input,
            column: col,
            repeats,
        } => {
            let model = load_model(&model)?;
            let p = model.as_predictor();
            let x = load_csv(&input, &column(&col))?;
            let data = all_windows(&x, p.lags())?;
            let stats = timing_probe(p, &data, repeats)?;
            print_json(json!({
                "method": model.variant_name(),
                "median_seconds": stats.median,
                "q1_seconds": stats.q1,
                "q3_seconds": stats.q3,
                "repeats": stats.repeats,
                "evaluation_size": stats.evaluation_size,
            }));
        }
        Command::Emit { input, figure, out } => {
            let report = load_report(&input)?;
            let written = match figure {
                Some(id) => {
                    let fig = Figure::from_id(&id)?;
                    std::fs::create_dir_all(&out)?;
                    let table = emit_plot_data(&report, fig)?;
                    table.write_csv(File::create(out.join(format!("{}.csv", fig.id())))?)?;
                    vec![fig.id()]
                }
                None => write_figures(&report, &out)?,
            };
            print_json(json!({ "figures": written }));
        }
        Command::Generate {
            task,
            n,
            seed,
            series,
            out,
        } => {
            let spec = match task {
                TaskName::Stationary => TaskSpec::StationarySystem {
                    input_scale: Default::default(),
                },
                TaskName::MackeyGlass => TaskSpec::MackeyGlass {
                    params: Default::default(),
                },
                TaskName::Lorenz => TaskSpec::LorenzXz {
                    params: Default::default(),
                },
            };
            let s = generate_task(&spec, n, seed, 0)?;
            let values = match series {
                Side::Input => &s.input,
                Side::Target => &s.target,
            };
            let mut w = output(out.as_deref())?;
            write_series_csv(&mut w, values)?;
            w.flush()?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            if !e.use_stderr() {
                // --help / --version
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let message = e.render().to_string();
            let first = message.lines().next().unwrap_or("").trim_start_matches("error: ");
            eprintln!("{}", json!({ "error": "usage", "message": first }));
            return ExitCode::from(2);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", json!({ "error": e.kind(), "message": e.to_string() }));
            ExitCode::from(1)
        }
    }
}
