//! Cross-validated evaluation of every method and hyperparameter in an
//! [`ExperimentSpec`].

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::baselines::{klms_fit_dataset, krls_fit_dataset, krr_fit, wiener_fit_dataset};
use crate::datagen::{kfold_splits, windows_for_targets, Fold, FoldPlan, WindowedDataset};
use crate::error::{Error, Result};
use crate::featuremap::FeatureMapSpec;
use crate::format::StoredModel;
use crate::fwf::{fit_dataset, linspace, FitOptions};
use crate::linalg::DEFAULT_EPSILON;
use crate::par::{self, Execution};
use crate::predictor::mse;

use super::config::{ExperimentSpec, Hyper, MethodKind, MethodSpec};
use super::task::{generate_task, TaskSeries};

/// Outcome of one (noise, method, hyperparameter, N, fold) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub method: String,
    pub hyper: Hyper,
    pub n: usize,
    pub noise: f64,
    pub fold: usize,
    pub seed: u64,
    pub train_mse: Option<f64>,
    pub test_mse: Option<f64>,
    pub theoretical_mmse: Option<f64>,
    pub effective_rank: Option<usize>,
    pub error: Option<String>,
}

/// Fold statistics of one (noise, method, hyperparameter, N) combination.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub method: String,
    pub hyper: Hyper,
    pub n: usize,
    pub noise: f64,
    pub folds_ok: usize,
    pub train_mse_mean: Option<f64>,
    pub test_mse_mean: Option<f64>,
    /// Population variance of the fold test MSEs.
    pub test_mse_var: Option<f64>,
    pub theoretical_mmse_mean: Option<f64>,
}

/// Best hyperparameters of a method at one (N, noise).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub method: String,
    pub n: usize,
    pub noise: f64,
    pub hyper: Hyper,
    pub train_mse_mean: f64,
    pub test_mse_mean: f64,
    pub test_mse_var: f64,
    pub theoretical_mmse_mean: Option<f64>,
}

/// Per-lag functions of the selected filter at the largest N.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModesReport {
    pub hyper: Hyper,
    pub n: usize,
    pub grid: Vec<f64>,
    /// `functions[tau][g]`.
    pub functions: Vec<Vec<f64>>,
    pub flatness: Vec<f64>,
    pub offset: f64,
}

/// Wall-clock measurements of one cell. Not part of the reproducible report.
#[derive(Debug, Clone, PartialEq)]
pub struct CellTiming {
    pub cell: usize,
    pub fit_seconds: f64,
    pub eval_seconds_per_sample: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub name: String,
    pub spec_hash: String,
    pub seed: u64,
    pub horizon: usize,
    pub folds: usize,
    pub test_len: usize,
    pub cells: Vec<CellResult>,
    pub summaries: Vec<Summary>,
    pub selected: Vec<Selection>,
    /// Methods for which every cell failed.
    pub failed_methods: Vec<String>,
    pub modes: Option<ModesReport>,
    #[serde(skip)]
    pub timings: Vec<CellTiming>,
}

impl ExperimentReport {
    /// Report with no cells, as produced for a spec that evaluates nothing.
    pub fn empty(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            spec_hash: String::new(),
            seed: 0,
            horizon: 0,
            folds: 0,
            test_len: 0,
            cells: Vec::new(),
            summaries: Vec::new(),
            selected: Vec::new(),
            failed_methods: Vec::new(),
            modes: None,
            timings: Vec::new(),
        }
    }
}

/// Fits one model of the family described by `hyper` on `train`.
pub fn fit_hyper(hyper: &Hyper, train: &WindowedDataset, horizon: usize, exec: Execution) -> Result<StoredModel> {
    let sigma = || hyper.sigma.ok_or_else(|| Error::Config(format!("{} needs sigma", hyper.method.name())));
    let param = || hyper.param.ok_or_else(|| Error::Config(format!("{} needs a parameter", hyper.method.name())));
    Ok(match hyper.method {
        MethodKind::Fwf => {
            let dims = hyper.dims.ok_or_else(|| Error::Config("fwf needs dims".into()))?;
            let spec = FeatureMapSpec::new(sigma()?, dims)?;
            let opts = FitOptions {
                epsilon: hyper.param.unwrap_or(DEFAULT_EPSILON),
                horizon,
                centered: hyper.centered,
                ridge: 0.0,
                exec,
            };
            StoredModel::Fwf(fit_dataset(train, &spec, &opts)?)
        }
        MethodKind::LinearWiener => StoredModel::LinearWiener(wiener_fit_dataset(train, DEFAULT_EPSILON)?),
        MethodKind::Klms => StoredModel::Dictionary(klms_fit_dataset(train, sigma()?, param()?)?.0),
        MethodKind::Krls => StoredModel::Dictionary(krls_fit_dataset(train, sigma()?, param()?)?),
        MethodKind::Krr | MethodKind::Gpr => StoredModel::Dictionary(krr_fit(train, sigma()?, param()?, exec)?),
    })
}

/// Samples the series needs ahead of the earliest training target so every
/// window has full input context.
fn lead(spec: &ExperimentSpec) -> usize {
    let max_lags = spec
        .methods
        .iter()
        .flat_map(|m| m.grid())
        .map(|h| h.lags)
        .max()
        .unwrap_or(1);
    max_lags - 1 + spec.horizon()
}

/// Length of series an experiment consumes.
pub fn required_length(spec: &ExperimentSpec) -> usize {
    let max_n = spec.sample_sizes.iter().copied().max().unwrap_or(0);
    lead(spec) + max_n + spec.folds * spec.test_len
}

/// Training and test windows of one fold, for a method with `lags`.
pub fn fold_datasets(
    series: &TaskSeries,
    fold: &Fold,
    lags: usize,
) -> Result<(WindowedDataset, WindowedDataset)> {
    let (x, z) = series.for_fold(fold.train.clone())?;
    let train = windows_for_targets(&x, &z, lags, series.horizon, fold.train.clone())?;
    let test = windows_for_targets(&x, &z, lags, series.horizon, fold.test.clone())?;
    Ok((train, test))
}

struct Evaluation {
    train_mse: f64,
    test_mse: f64,
    theoretical_mmse: Option<f64>,
    effective_rank: Option<usize>,
    fit_seconds: f64,
    eval_seconds_per_sample: f64,
}

fn evaluate(series: &TaskSeries, fold: &Fold, hyper: &Hyper) -> Result<Evaluation> {
    let (train, test) = fold_datasets(series, fold, hyper.lags)?;
    let exec = Execution::Sequential;
    let start = Instant::now();
    let model = fit_hyper(hyper, &train, series.horizon, exec)?;
    let fit_seconds = start.elapsed().as_secs_f64();
    let predictor = model.as_predictor();
    let train_pred = predictor.predict_dataset(&train, exec)?;
    let start = Instant::now();
    let test_pred = predictor.predict_dataset(&test, exec)?;
    let eval_seconds_per_sample = start.elapsed().as_secs_f64() / test.len() as f64;
    let (theoretical_mmse, effective_rank) = match &model {
        StoredModel::Fwf(m) => (Some(m.theoretical_mmse()), Some(m.effective_rank())),
        StoredModel::LinearWiener(m) => (None, Some(m.effective_rank())),
        StoredModel::Dictionary(_) => (None, None),
    };
    let train_mse = mse(&train_pred, train.targets());
    let test_mse = mse(&test_pred, test.targets());
    if !train_mse.is_finite() || !test_mse.is_finite() {
        return Err(Error::NonFinite {
            context: "fold mse",
            value: if train_mse.is_finite() { test_mse } else { train_mse },
        });
    }
    Ok(Evaluation {
        train_mse,
        test_mse,
        theoretical_mmse,
        effective_rank,
        fit_seconds,
        eval_seconds_per_sample,
    })
}

struct CellKey {
    noise_idx: usize,
    method_idx: usize,
    hyper: Hyper,
    n: usize,
    fold: usize,
}

fn method_labels(methods: &[MethodSpec]) -> Vec<String> {
    methods
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let name = m.kind().name();
            let dup = methods.iter().filter(|o| o.kind() == m.kind()).count() > 1;
            if dup {
                format!("{name}#{i}")
            } else {
                name.to_string()
            }
        })
        .collect()
}

fn mean_var(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var)
}

/// Index of the best candidate: lowest mean test MSE, ties going to the
/// larger sigma.
pub(crate) fn select_best<I>(candidates: I) -> Option<usize>
where
    I: IntoIterator<Item = (f64, Option<f64>)>,
{
    let mut best: Option<(usize, f64, f64)> = None;
    for (i, (score, sigma)) in candidates.into_iter().enumerate() {
        let s = sigma.unwrap_or(0.0);
        let better = match best {
            None => true,
            Some((_, bs, bsig)) => score < bs || (score == bs && s > bsig),
        };
        if better {
            best = Some((i, score, s));
        }
    }
    best.map(|(i, _, _)| i)
}

/// Runs every cell of `spec` and assembles the report. Cells are spread over
/// threads with `exec`; the report does not depend on it.
pub fn run_experiment(spec: &ExperimentSpec, exec: Execution) -> Result<ExperimentReport> {
    spec.validate()?;
    let horizon = spec.horizon();
    let len = required_length(spec);
    let base = generate_task(&spec.task, len, spec.seed, horizon)?;
    let noisy: Vec<TaskSeries> = spec
        .noise_levels
        .iter()
        .enumerate()
        .map(|(k, &std)| base.with_input_noise(std, spec.seed, k as u32))
        .collect::<Result<_>>()?;
    let total = base.len();
    let plans: Vec<FoldPlan> = spec
        .sample_sizes
        .iter()
        .map(|&n| kfold_splits(total, n, spec.folds, spec.test_len))
        .collect::<Result<_>>()?;
    let labels = method_labels(&spec.methods);

    let mut keys = Vec::new();
    for noise_idx in 0..spec.noise_levels.len() {
        for (method_idx, m) in spec.methods.iter().enumerate() {
            for hyper in m.grid() {
                for (n_idx, &n) in spec.sample_sizes.iter().enumerate() {
                    for fold in 0..plans[n_idx].folds.len() {
                        keys.push((
                            CellKey {
                                noise_idx,
                                method_idx,
                                hyper,
                                n,
                                fold,
                            },
                            n_idx,
                        ));
                    }
                }
            }
        }
    }

    let outcomes = par::map_indexed(exec, keys.len(), |i| {
        let (key, n_idx) = &keys[i];
        evaluate(&noisy[key.noise_idx], &plans[*n_idx].folds[key.fold], &key.hyper)
    });

    let mut cells = Vec::with_capacity(keys.len());
    let mut timings = Vec::new();
    for (i, ((key, _), outcome)) in keys.iter().zip(outcomes).enumerate() {
        let mut cell = CellResult {
            method: labels[key.method_idx].clone(),
            hyper: key.hyper,
            n: key.n,
            noise: spec.noise_levels[key.noise_idx],
            fold: key.fold,
            seed: spec.seed,
            train_mse: None,
            test_mse: None,
            theoretical_mmse: None,
            effective_rank: None,
            error: None,
        };
        match outcome {
            Ok(e) => {
                cell.train_mse = Some(e.train_mse);
                cell.test_mse = Some(e.test_mse);
                cell.theoretical_mmse = e.theoretical_mmse;
                cell.effective_rank = e.effective_rank;
                timings.push(CellTiming {
                    cell: i,
                    fit_seconds: e.fit_seconds,
                    eval_seconds_per_sample: e.eval_seconds_per_sample,
                });
            }
            Err(err) => cell.error = Some(format!("{}: {err}", err.kind())),
        }
        cells.push(cell);
    }

    let summaries = summarize(&cells);
    let selected = select(spec, &labels, &summaries);
    let failed_methods = labels
        .iter()
        .filter(|l| cells.iter().filter(|c| &c.method == *l).all(|c| c.error.is_some()))
        .cloned()
        .collect();
    let modes = extract_selected_modes(spec, &labels, &selected, &noisy[0], &plans)?;

    Ok(ExperimentReport {
        name: spec.name.clone(),
        spec_hash: spec.hash(),
        seed: spec.seed,
        horizon,
        folds: spec.folds,
        test_len: spec.test_len,
        cells,
        summaries,
        selected,
        failed_methods,
        modes,
        timings,
    })
}

/// Groups consecutive cells of the same (noise, method, hyper, N). Relies on
/// folds being the innermost loop of the cell order.
fn summarize(cells: &[CellResult]) -> Vec<Summary> {
    let mut out = Vec::new();
    let mut start = 0;
    while start < cells.len() {
        let c = &cells[start];
        let mut end = start + 1;
        while end < cells.len() {
            let d = &cells[end];
            if d.method != c.method || d.hyper != c.hyper || d.n != c.n || d.noise.to_bits() != c.noise.to_bits() {
                break;
            }
            end += 1;
        }
        let group = &cells[start..end];
        let ok: Vec<&CellResult> = group.iter().filter(|c| c.error.is_none()).collect();
        let (test_mean, test_var, train_mean, theo) = if ok.is_empty() {
            (None, None, None, None)
        } else {
            let tests: Vec<f64> = ok.iter().filter_map(|c| c.test_mse).collect();
            let trains: Vec<f64> = ok.iter().filter_map(|c| c.train_mse).collect();
            let (m, v) = mean_var(&tests);
            let theo: Vec<f64> = ok.iter().filter_map(|c| c.theoretical_mmse).collect();
            let theo = (!theo.is_empty()).then(|| mean_var(&theo).0);
            (Some(m), Some(v), Some(mean_var(&trains).0), theo)
        };
        out.push(Summary {
            method: c.method.clone(),
            hyper: c.hyper,
            n: c.n,
            noise: c.noise,
            folds_ok: ok.len(),
            train_mse_mean: train_mean,
            test_mse_mean: test_mean,
            test_mse_var: test_var,
            theoretical_mmse_mean: theo,
        });
        start = end;
    }
    out
}

fn select(spec: &ExperimentSpec, labels: &[String], summaries: &[Summary]) -> Vec<Selection> {
    let mut out = Vec::new();
    for &noise in &spec.noise_levels {
        for label in labels {
            for &n in &spec.sample_sizes {
                // Only hyperparameters that succeeded on every fold compete.
                let pool: Vec<&Summary> = summaries
                    .iter()
                    .filter(|s| &s.method == label && s.n == n && s.noise.to_bits() == noise.to_bits())
                    .filter(|s| s.folds_ok == spec.folds)
                    .collect();
                let best = select_best(pool.iter().map(|s| (s.test_mse_mean.unwrap_or(f64::INFINITY), s.hyper.sigma)));
                if let Some(i) = best {
                    let s = pool[i];
                    out.push(Selection {
                        method: label.clone(),
                        n,
                        noise,
                        hyper: s.hyper,
                        train_mse_mean: s.train_mse_mean.unwrap_or(f64::NAN),
                        test_mse_mean: s.test_mse_mean.unwrap_or(f64::NAN),
                        test_mse_var: s.test_mse_var.unwrap_or(f64::NAN),
                        theoretical_mmse_mean: s.theoretical_mmse_mean,
                    });
                }
            }
        }
    }
    out
}

fn extract_selected_modes(
    spec: &ExperimentSpec,
    labels: &[String],
    selected: &[Selection],
    series: &TaskSeries,
    plans: &[FoldPlan],
) -> Result<Option<ModesReport>> {
    let Some(grid_spec) = spec.modes else {
        return Ok(None);
    };
    let Some(max_n) = spec.sample_sizes.iter().copied().max() else {
        return Ok(None);
    };
    let noise = spec.noise_levels[0];
    let Some(sel) = spec
        .methods
        .iter()
        .zip(labels)
        .filter(|(m, _)| m.kind() == MethodKind::Fwf)
        .find_map(|(_, label)| {
            selected
                .iter()
                .find(|s| &s.method == label && s.n == max_n && s.noise.to_bits() == noise.to_bits())
        })
    else {
        return Ok(None);
    };
    let n_idx = spec.sample_sizes.iter().position(|&n| n == max_n).unwrap_or(0);
    let fold = &plans[n_idx].folds[0];
    let (train, _) = fold_datasets(series, fold, sel.hyper.lags)?;
    let StoredModel::Fwf(model) = fit_hyper(&sel.hyper, &train, series.horizon, Execution::Sequential)? else {
        return Ok(None);
    };
    let grid = linspace(grid_spec.min, grid_spec.max, grid_spec.points);
    let modes = model.extract_modes(&grid)?;
    let functions = (0..modes.lags())
        .map(|tau| modes.functions.row(tau).iter().copied().collect())
        .collect();
    Ok(Some(ModesReport {
        hyper: sel.hyper,
        n: max_n,
        grid,
        functions,
        flatness: modes.flatness,
        offset: modes.offset,
    }))
}

/// Mean test MSE of `sigma` candidates for one method over a fold plan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmaScore {
    pub sigma: f64,
    pub test_mse_mean: f64,
    pub test_mse_var: f64,
    /// Mean theoretical MMSE, FWF only.
    pub theoretical_mmse_mean: Option<f64>,
}

/// Evaluates `method` at each sigma in `sigma_grid` (other hyperparameters
/// take the first value of their grid) and returns the sigma with the lowest
/// mean test MSE, ties going to the larger sigma.
pub fn grid_search_sigma(
    method: &MethodSpec,
    series: &TaskSeries,
    sigma_grid: &[f64],
    plan: &FoldPlan,
    exec: Execution,
) -> Result<(f64, Vec<SigmaScore>)> {
    if sigma_grid.is_empty() {
        return Err(Error::Empty("sigma grid"));
    }
    let template = *method.grid().first().ok_or(Error::Empty("method grid"))?;
    if template.sigma.is_none() {
        return Err(Error::Config(format!("{} has no kernel size", method.kind().name())));
    }
    let scores = par::map_indexed(exec, sigma_grid.len(), |i| -> Result<SigmaScore> {
        let hyper = Hyper {
            sigma: Some(sigma_grid[i]),
            ..template
        };
        let evals: Vec<Evaluation> = plan
            .folds
            .iter()
            .map(|f| evaluate(series, f, &hyper))
            .collect::<Result<_>>()?;
        let tests: Vec<f64> = evals.iter().map(|e| e.test_mse).collect();
        let (m, v) = mean_var(&tests);
        let theo: Vec<f64> = evals.iter().filter_map(|e| e.theoretical_mmse).collect();
        Ok(SigmaScore {
            sigma: sigma_grid[i],
            test_mse_mean: m,
            test_mse_var: v,
            theoretical_mmse_mean: (!theo.is_empty()).then(|| mean_var(&theo).0),
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let best = select_best(scores.iter().map(|s| (s.test_mse_mean, Some(s.sigma)))).unwrap_or(0);
    Ok((scores[best].sigma, scores))
}
