//! Experiment configuration, read from TOML with unknown keys rejected.
//!
//! ```toml
//! name = "stationary"
//! seed = 7
//! sample_sizes = [250, 500, 1000, 2000]   # default [250, 500, 1000, 2000, 4000]
//! folds = 5            # default 5
//! test_len = 300       # default 300
//! horizon = 0          # default depends on the task
//! noise_levels = [0.0] # input noise std devs, default [0.0]
//!
//! [task]
//! kind = "stationary_system"   # | mackey_glass | lorenz_xz | csv | zero_target
//!
//! [[methods]]
//! kind = "fwf"                 # | linear_wiener | klms | krls | krr | gpr
//! sigma = [0.5, 1.0, 2.0]
//! dims = [30]
//! lags = [5]
//!
//! [modes]                      # optional, fwf only
//! min = -3.0
//! max = 3.0
//! points = 121
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::datagen::{Column, InputScale, LorenzParams, MackeyGlassParams, Normalization, DEFAULT_TEST_LEN};
use crate::error::{Error, Result};
use crate::linalg::DEFAULT_EPSILON;

fn default_folds() -> usize {
    5
}

fn default_test_len() -> usize {
    DEFAULT_TEST_LEN
}

fn default_sample_sizes() -> Vec<usize> {
    vec![250, 500, 1000, 2000, 4000]
}

fn default_noise() -> Vec<f64> {
    vec![0.0]
}

fn default_epsilon() -> Vec<f64> {
    vec![DEFAULT_EPSILON]
}

/// Everything that determines an experiment's report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    pub task: TaskSpec,
    pub methods: Vec<MethodSpec>,
    #[serde(default = "default_sample_sizes")]
    pub sample_sizes: Vec<usize>,
    #[serde(default = "default_folds")]
    pub folds: usize,
    #[serde(default = "default_test_len")]
    pub test_len: usize,
    #[serde(default)]
    pub horizon: Option<usize>,
    #[serde(default = "default_noise")]
    pub noise_levels: Vec<f64>,
    #[serde(default)]
    pub modes: Option<ModeGrid>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

/// Signal pair the methods are evaluated on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TaskSpec {
    /// Gaussian input through the five-lag nonlinear system; horizon 0.
    StationarySystem {
        #[serde(default)]
        input_scale: InputScale,
    },
    /// One-step prediction of the Mackey-Glass series.
    MackeyGlass {
        #[serde(default)]
        params: MackeyGlassParams,
    },
    /// Lorenz x component in, z component out; horizon 5.
    LorenzXz {
        #[serde(default)]
        params: LorenzParams,
    },
    /// One-step prediction of a column read from disk.
    Csv {
        path: PathBuf,
        column: Column,
        #[serde(default)]
        normalize: Option<Normalization>,
    },
    /// Stationary-system input with an identically zero target.
    ZeroTarget,
}

impl TaskSpec {
    pub fn default_horizon(&self) -> usize {
        match self {
            TaskSpec::StationarySystem { .. } | TaskSpec::ZeroTarget => 0,
            TaskSpec::LorenzXz { .. } => 5,
            TaskSpec::MackeyGlass { .. } | TaskSpec::Csv { .. } => 1,
        }
    }
}

/// A method and the grid of hyperparameters to search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MethodSpec {
    Fwf {
        sigma: Vec<f64>,
        dims: Vec<usize>,
        lags: Vec<usize>,
        #[serde(default = "default_epsilon")]
        epsilon: Vec<f64>,
        #[serde(default)]
        centered: bool,
    },
    LinearWiener {
        lags: Vec<usize>,
    },
    Klms {
        sigma: Vec<f64>,
        lags: Vec<usize>,
        step_size: Vec<f64>,
    },
    Krls {
        sigma: Vec<f64>,
        lags: Vec<usize>,
        ridge: Vec<f64>,
    },
    Krr {
        sigma: Vec<f64>,
        lags: Vec<usize>,
        lambda: Vec<f64>,
    },
    /// Gaussian-process posterior mean, evaluated as KRR with
    /// `lambda = noise_variance`.
    Gpr {
        sigma: Vec<f64>,
        lags: Vec<usize>,
        noise_variance: Vec<f64>,
    },
}

/// Method family, used to label report rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodKind {
    Fwf,
    LinearWiener,
    Klms,
    Krls,
    Krr,
    Gpr,
}

impl MethodKind {
    pub fn name(self) -> &'static str {
        match self {
            MethodKind::Fwf => "fwf",
            MethodKind::LinearWiener => "linear_wiener",
            MethodKind::Klms => "klms",
            MethodKind::Krls => "krls",
            MethodKind::Krr => "krr",
            MethodKind::Gpr => "gpr",
        }
    }
}

/// One point of a method's hyperparameter grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyper {
    pub method: MethodKind,
    pub lags: usize,
    pub sigma: Option<f64>,
    pub dims: Option<usize>,
    /// epsilon (fwf), step size (klms), ridge (krls), lambda (krr/gpr).
    pub param: Option<f64>,
    #[serde(default)]
    pub centered: bool,
}

impl MethodSpec {
    pub fn kind(&self) -> MethodKind {
        match self {
            MethodSpec::Fwf { .. } => MethodKind::Fwf,
            MethodSpec::LinearWiener { .. } => MethodKind::LinearWiener,
            MethodSpec::Klms { .. } => MethodKind::Klms,
            MethodSpec::Krls { .. } => MethodKind::Krls,
            MethodSpec::Krr { .. } => MethodKind::Krr,
            MethodSpec::Gpr { .. } => MethodKind::Gpr,
        }
    }

    /// Sigma values searched by this method (empty for linear Wiener).
    pub fn sigma_grid(&self) -> &[f64] {
        match self {
            MethodSpec::Fwf { sigma, .. }
            | MethodSpec::Klms { sigma, .. }
            | MethodSpec::Krls { sigma, .. }
            | MethodSpec::Krr { sigma, .. }
            | MethodSpec::Gpr { sigma, .. } => sigma,
            MethodSpec::LinearWiener { .. } => &[],
        }
    }

    /// Cartesian product of the grid, in a fixed order.
    pub fn grid(&self) -> Vec<Hyper> {
        let kind = self.kind();
        let base = |lags, sigma, dims, param| Hyper {
            method: kind,
            lags,
            sigma,
            dims,
            param,
            centered: false,
        };
        let kernel = |sigma: &[f64], lags: &[usize], params: &[f64]| {
            let mut out = Vec::new();
            for &l in lags {
                for &s in sigma {
                    for &p in params {
                        out.push(base(l, Some(s), None, Some(p)));
                    }
                }
            }
            out
        };
        match self {
            MethodSpec::Fwf {
                sigma,
                dims,
                lags,
                epsilon,
                centered,
            } => {
                let mut out = Vec::new();
                for &d in dims {
                    for &l in lags {
                        for &s in sigma {
                            for &e in epsilon {
                                out.push(Hyper {
                                    centered: *centered,
                                    ..base(l, Some(s), Some(d), Some(e))
                                });
                            }
                        }
                    }
                }
                out
            }
            MethodSpec::LinearWiener { lags } => lags.iter().map(|&l| base(l, None, None, None)).collect(),
            MethodSpec::Klms { sigma, lags, step_size } => kernel(sigma, lags, step_size),
            MethodSpec::Krls { sigma, lags, ridge } => kernel(sigma, lags, ridge),
            MethodSpec::Krr { sigma, lags, lambda } => kernel(sigma, lags, lambda),
            MethodSpec::Gpr {
                sigma,
                lags,
                noise_variance,
            } => kernel(sigma, lags, noise_variance),
        }
    }

    fn check(&self) -> Result<()> {
        let empty = |name: &str, len: usize| {
            if len == 0 {
                Err(Error::Config(format!("{}: grid `{name}` is empty", self.kind().name())))
            } else {
                Ok(())
            }
        };
        match self {
            MethodSpec::Fwf {
                sigma,
                dims,
                lags,
                epsilon,
                ..
            } => {
                empty("sigma", sigma.len())?;
                empty("dims", dims.len())?;
                empty("lags", lags.len())?;
                empty("epsilon", epsilon.len())?;
            }
            MethodSpec::LinearWiener { lags } => empty("lags", lags.len())?,
            MethodSpec::Klms { sigma, lags, step_size } => {
                empty("sigma", sigma.len())?;
                empty("lags", lags.len())?;
                empty("step_size", step_size.len())?;
            }
            MethodSpec::Krls { sigma, lags, ridge } => {
                empty("sigma", sigma.len())?;
                empty("lags", lags.len())?;
                empty("ridge", ridge.len())?;
            }
            MethodSpec::Krr { sigma, lags, lambda } => {
                empty("sigma", sigma.len())?;
                empty("lags", lags.len())?;
                empty("lambda", lambda.len())?;
            }
            MethodSpec::Gpr {
                sigma,
                lags,
                noise_variance,
            } => {
                empty("sigma", sigma.len())?;
                empty("lags", lags.len())?;
                empty("noise_variance", noise_variance.len())?;
            }
        }
        Ok(())
    }
}

/// Abscissae for exporting the learned per-lag functions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeGrid {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl ExperimentSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())?;
        let mut spec = Self::from_toml(&text)?;
        // Relative CSV paths are resolved against the config file.
        if let TaskSpec::Csv { path: data, .. } = &mut spec.task {
            if data.is_relative() {
                if let Some(dir) = path.as_ref().parent() {
                    *data = dir.join(&*data);
                }
            }
        }
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            return Err(Error::Config("no methods".into()));
        }
        if self.sample_sizes.is_empty() || self.sample_sizes.contains(&0) {
            return Err(Error::Config("sample_sizes must be a non-empty list of positive sizes".into()));
        }
        if self.noise_levels.is_empty() || self.noise_levels.iter().any(|s| !(*s >= 0.0 && s.is_finite())) {
            return Err(Error::Config("noise_levels must be a non-empty list of finite values >= 0".into()));
        }
        if self.folds == 0 || self.test_len == 0 {
            return Err(Error::Config("folds and test_len must be >= 1".into()));
        }
        if let Some(m) = &self.modes {
            if m.points == 0 || !(m.min <= m.max) {
                return Err(Error::Config("modes grid needs points >= 1 and min <= max".into()));
            }
        }
        self.methods.iter().try_for_each(MethodSpec::check)
    }

    pub fn horizon(&self) -> usize {
        self.horizon.unwrap_or_else(|| self.task.default_horizon())
    }

    /// SHA-256 of the canonical JSON encoding, hex encoded.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("spec serializes");
        Sha256::digest(&canonical).iter().map(|b| format!("{b:02x}")).collect()
    }
}
