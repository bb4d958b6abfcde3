//! Turns a [`TaskSpec`] into an input/target series pair.

use std::ops::Range;

use crate::datagen::{
    add_noise_stream, gen_lorenz, gen_mackey_glass, gen_stationary_system_with, load_csv, normalize, InputScale,
    Normalization,
};
use crate::error::{Error, Result};

use super::config::TaskSpec;

/// Input and target series of equal length, with the horizon the task uses.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskSeries {
    pub input: Vec<f64>,
    pub target: Vec<f64>,
    pub horizon: usize,
    /// Per-fold normalization applied to CSV tasks.
    pub normalization: Option<Normalization>,
}

impl TaskSeries {
    pub fn len(&self) -> usize {
        self.target.len()
    }

    pub fn is_empty(&self) -> bool {
        self.target.is_empty()
    }

    /// Copy with i.i.d. Gaussian noise added to the input only. Each noise
    /// level index draws from its own substream of `seed`.
    pub fn with_input_noise(&self, std: f64, seed: u64, level: u32) -> Result<Self> {
        Ok(Self {
            input: add_noise_stream(&self.input, std, seed, level)?,
            ..self.clone()
        })
    }

    /// Scales input and target by the training-range statistic when the task
    /// asks for it. Returns the series to use for one fold.
    pub fn for_fold(&self, train: Range<usize>) -> Result<(Vec<f64>, Vec<f64>)> {
        match self.normalization {
            None => Ok((self.input.clone(), self.target.clone())),
            Some(mode) => {
                let (_, scale) = normalize(&self.target, train, mode)?;
                let x = self.input.iter().map(|v| v / scale).collect();
                let z = self.target.iter().map(|v| v / scale).collect();
                Ok((x, z))
            }
        }
    }
}

/// Generates (or loads) at least `len` samples for `task`. Synthetic tasks
/// produce exactly `len` samples; CSV tasks return the whole column.
pub fn generate_task(task: &TaskSpec, len: usize, seed: u64, horizon: usize) -> Result<TaskSeries> {
    let plain = |input: Vec<f64>, target: Vec<f64>| TaskSeries {
        input,
        target,
        horizon,
        normalization: None,
    };
    match task {
        TaskSpec::StationarySystem { input_scale } => {
            let (x, z) = stationary(len, seed, *input_scale)?;
            Ok(plain(x, z))
        }
        TaskSpec::ZeroTarget => {
            let (x, _) = stationary(len, seed, InputScale::default())?;
            Ok(plain(x, vec![0.0; len]))
        }
        TaskSpec::MackeyGlass { params } => {
            let s = gen_mackey_glass(len, params)?;
            Ok(plain(s.clone(), s))
        }
        TaskSpec::LorenzXz { params } => {
            let s = gen_lorenz(len, params)?;
            Ok(plain(s.x, s.z))
        }
        TaskSpec::Csv {
            path,
            column,
            normalize,
        } => {
            let s = load_csv(path, column)?;
            if s.len() < len {
                return Err(Error::SeriesTooShort { needed: len, have: s.len() });
            }
            Ok(TaskSeries {
                input: s.clone(),
                target: s,
                horizon,
                normalization: *normalize,
            })
        }
    }
}

fn stationary(len: usize, seed: u64, scale: InputScale) -> Result<(Vec<f64>, Vec<f64>)> {
    let s = gen_stationary_system_with(len + crate::datagen::STATIONARY_MEMORY_DEPTH, seed, scale)?;
    let from = s.valid_from;
    let x = s.input[from..from + len].to_vec();
    let z = s.output[from..from + len].to_vec();
    Ok((x, z))
}
