//! Signal generators for the synthetic benchmark tasks.

use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use super::rng::{self, Stream};
use crate::error::{invalid, Error, Result};

/// Number of past samples the stationary system's output depends on.
pub const STATIONARY_MEMORY_DEPTH: usize = 5;

const DIVERGENCE_LIMIT: f64 = 1e6;

/// How the variance parameter of the stationary system's input is read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputScale {
    /// Input ~ N(0, pi) with variance pi.
    #[default]
    VariancePi,
    /// Input ~ N(0, pi^2), i.e. standard deviation pi.
    StdDevPi,
}

impl InputScale {
    pub fn std_dev(self) -> f64 {
        match self {
            InputScale::VariancePi => std::f64::consts::PI.sqrt(),
            InputScale::StdDevPi => std::f64::consts::PI,
        }
    }
}

/// Input and output of the stationary nonlinear system.
#[derive(Debug, Clone, PartialEq)]
pub struct StationarySeries {
    pub input: Vec<f64>,
    pub output: Vec<f64>,
    /// Outputs before this index used zero-padded inputs.
    pub valid_from: usize,
}

/// Contribution of lag `tau` to the stationary system's output.
pub fn stationary_component(tau: usize, x: f64) -> f64 {
    match tau {
        0 => 0.5 * x.tanh().powi(2),
        1 => x.sin().powi(3),
        2 => 0.5 * x.tanh().powi(3),
        3 => 0.2 * x.sin().powi(2),
        4 => 0.75 * x.tanh().powi(2),
        _ => 0.0,
    }
}

/// Output of the stationary system for a given input, zero-padding before index 0.
pub fn stationary_response(input: &[f64]) -> Vec<f64> {
    (0..input.len())
        .map(|n| {
            (0..STATIONARY_MEMORY_DEPTH)
                .map(|tau| {
                    let x = if n >= tau { input[n - tau] } else { 0.0 };
                    stationary_component(tau, x)
                })
                .sum()
        })
        .collect()
}

pub fn gen_stationary_system(n: usize, seed: u64) -> Result<StationarySeries> {
    gen_stationary_system_with(n, seed, InputScale::default())
}

pub fn gen_stationary_system_with(n: usize, seed: u64, scale: InputScale) -> Result<StationarySeries> {
    if n <= STATIONARY_MEMORY_DEPTH {
        return Err(invalid("n", format!("must exceed {STATIONARY_MEMORY_DEPTH}, got {n}")));
    }
    let mut rng = rng::stream(seed, Stream::StationaryInput, 0);
    let std = scale.std_dev();
    let input: Vec<f64> = (0..n)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            std * z
        })
        .collect();
    let output = stationary_response(&input);
    Ok(StationarySeries {
        input,
        output,
        valid_from: STATIONARY_MEMORY_DEPTH - 1,
    })
}

/// Initial history of the delay equation on `[-delay, 0]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum History {
    Constant(f64),
    /// Independent uniform draws in `[low, high)` per history step.
    Seeded { seed: u64, low: f64, high: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MackeyGlassParams {
    pub beta: f64,
    pub gamma: f64,
    pub power: f64,
    pub delay: f64,
    pub dt: f64,
    pub subsample: usize,
    pub transient_steps: usize,
    pub history: History,
}

impl Default for MackeyGlassParams {
    fn default() -> Self {
        Self {
            beta: 0.2,
            gamma: 0.1,
            power: 10.0,
            delay: 30.0,
            dt: 0.1,
            subsample: 6,
            transient_steps: 1000,
            history: History::Constant(1.2),
        }
    }
}

/// Mackey-Glass series integrated with classical RK4.
///
/// The delayed state at the two RK4 half-step stages is the cubic Hermite
/// interpolant of the stored trajectory, built from the states and
/// derivatives already computed at neighbouring steps.
pub fn gen_mackey_glass(n: usize, params: &MackeyGlassParams) -> Result<Vec<f64>> {
    let p = params;
    for (name, v) in [("beta", p.beta), ("gamma", p.gamma), ("power", p.power), ("delay", p.delay), ("dt", p.dt)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::InvalidParameter {
                name,
                reason: format!("must be finite and > 0, got {v}"),
            });
        }
    }
    if p.subsample == 0 {
        return Err(invalid("subsample", "must be >= 1"));
    }
    let lag_steps = (p.delay / p.dt).round() as usize;
    if lag_steps == 0 || ((lag_steps as f64) * p.dt - p.delay).abs() > 1e-9 * p.delay {
        return Err(invalid("delay", "must be a positive multiple of dt"));
    }

    let history: Vec<f64> = match p.history {
        History::Constant(c) => vec![c; lag_steps + 1],
        History::Seeded { seed, low, high } => {
            let mut rng = rng::stream(seed, Stream::MackeyGlassHistory, 0);
            (0..=lag_steps).map(|_| rng.random_range(low..high)).collect()
        }
    };

    let total_steps = p.transient_steps + n * p.subsample;
    // Index `k` of `xs` holds x at step k - lag_steps; history occupies 0..=lag_steps.
    let mut xs = Vec::with_capacity(total_steps + lag_steps + 1);
    let mut fs = Vec::with_capacity(total_steps + lag_steps + 1);
    xs.extend_from_slice(&history);
    fs.resize(lag_steps + 1, 0.0);

    let production = |delayed: f64| p.beta * delayed / (1.0 + delayed.abs().powf(p.power));
    let rhs = |x: f64, delayed: f64| production(delayed) - p.gamma * x;

    // Derivative at step 0 uses the history value one delay back.
    let last = lag_steps;
    fs[last] = rhs(xs[last], xs[0]);

    let mut out = Vec::with_capacity(n);
    for step in 0..total_steps {
        let cur = lag_steps + step;
        let d0 = cur - lag_steps;
        let d1 = d0 + 1;
        let delayed_now = xs[d0];
        let delayed_next = xs[d1];
        // The history is piecewise constant, so its slope at the join is zero.
        let f1 = if d1 == lag_steps { 0.0 } else { fs[d1] };
        let delayed_mid = 0.5 * (xs[d0] + xs[d1]) + p.dt * (fs[d0] - f1) / 8.0;

        let x = xs[cur];
        let k1 = rhs(x, delayed_now);
        let k2 = rhs(x + 0.5 * p.dt * k1, delayed_mid);
        let k3 = rhs(x + 0.5 * p.dt * k2, delayed_mid);
        let k4 = rhs(x + p.dt * k3, delayed_next);
        let next = x + p.dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if !next.is_finite() || next.abs() > DIVERGENCE_LIMIT {
            return Err(Error::Divergence {
                step,
                magnitude: next.abs(),
            });
        }
        xs.push(next);
        fs.push(rhs(next, delayed_next));

        let done = step + 1;
        if done > p.transient_steps && (done - p.transient_steps).is_multiple_of(p.subsample) {
            out.push(next);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LorenzParams {
    pub sigma: f64,
    pub rho: f64,
    pub beta: f64,
    pub dt: f64,
    pub subsample: usize,
    pub transient_steps: usize,
    pub x0: [f64; 3],
}

impl Default for LorenzParams {
    fn default() -> Self {
        Self {
            sigma: 10.0,
            rho: 28.0,
            beta: 8.0 / 3.0,
            dt: 0.01,
            subsample: 2,
            transient_steps: 1000,
            x0: [1.0, 1.0, 1.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LorenzSeries {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
}

fn lorenz_rhs(p: &LorenzParams, s: [f64; 3]) -> [f64; 3] {
    [
        p.sigma * (s[1] - s[0]),
        s[0] * (p.rho - s[2]) - s[1],
        s[0] * s[1] - p.beta * s[2],
    ]
}

fn axpy(s: [f64; 3], h: f64, k: [f64; 3]) -> [f64; 3] {
    [s[0] + h * k[0], s[1] + h * k[1], s[2] + h * k[2]]
}

/// Lorenz trajectory integrated with RK4 after a discarded transient.
pub fn gen_lorenz(n: usize, params: &LorenzParams) -> Result<LorenzSeries> {
    let p = params;
    if !(p.dt > 0.0 && p.dt.is_finite()) {
        return Err(invalid("dt", "must be finite and > 0"));
    }
    if p.subsample == 0 {
        return Err(invalid("subsample", "must be >= 1"));
    }
    let mut s = p.x0;
    let mut series = LorenzSeries {
        x: Vec::with_capacity(n),
        y: Vec::with_capacity(n),
        z: Vec::with_capacity(n),
    };
    let total = p.transient_steps + n * p.subsample;
    let h = p.dt;
    for step in 0..total {
        let k1 = lorenz_rhs(p, s);
        let k2 = lorenz_rhs(p, axpy(s, 0.5 * h, k1));
        let k3 = lorenz_rhs(p, axpy(s, 0.5 * h, k2));
        let k4 = lorenz_rhs(p, axpy(s, h, k3));
        for i in 0..3 {
            s[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        let magnitude = s.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if !magnitude.is_finite() || magnitude > DIVERGENCE_LIMIT {
            return Err(Error::Divergence { step, magnitude });
        }
        let done = step + 1;
        if done > p.transient_steps && (done - p.transient_steps).is_multiple_of(p.subsample) {
            series.x.push(s[0]);
            series.y.push(s[1]);
            series.z.push(s[2]);
        }
    }
    Ok(series)
}

/// Adds i.i.d. `N(0, std^2)` noise. `std == 0` returns the input unchanged.
pub fn add_noise(series: &[f64], std: f64, seed: u64) -> Result<Vec<f64>> {
    add_noise_stream(series, std, seed, 0)
}

/// [`add_noise`] on a numbered substream, so several noise levels drawn from
/// one seed stay independent.
pub fn add_noise_stream(series: &[f64], std: f64, seed: u64, substream: u32) -> Result<Vec<f64>> {
    if !(std >= 0.0 && std.is_finite()) {
        return Err(invalid("std", format!("must be finite and >= 0, got {std}")));
    }
    if std == 0.0 {
        return Ok(series.to_vec());
    }
    let normal = Normal::new(0.0, std).map_err(|e| invalid("std", e.to_string()))?;
    let mut rng = rng::stream(seed, Stream::Noise, substream);
    Ok(series.iter().map(|&v| v + normal.sample(&mut rng)).collect())
}
