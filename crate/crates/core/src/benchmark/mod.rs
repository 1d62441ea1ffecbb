//! Tracking experiments: the leader-following formation, a synthetic
//! sinusoidal target, tracking-error records and sampling-period sweeps.

mod formation;
mod synthetic;

pub use formation::{
    build_step_cost, formation_constraints, leader_position, measurement_stream, oracle_solution, run_benchmark,
    sample_measurements, step_count, Axis, FormationProblem, FormationSpec, LissajousSpec, SampledCost,
};
pub use synthetic::{run_synthetic, SinusoidTarget};

use nalgebra::DVector;
use rayon::prelude::*;

use crate::engine::{PCConfig, StepRecord};
use crate::error::{Error, Result};

/// Iterates, exact optima and tracking errors `E_k = ‖x_k − x*_k‖` of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub duration: f64,
    /// `t_0, …, t_K`
    pub times: Vec<f64>,
    pub iterates: Vec<DVector<f64>>,
    pub oracle_optima: Vec<DVector<f64>>,
    pub errors: Vec<f64>,
    /// One entry per prediction-correction step (`K` entries).
    pub steps: Vec<StepRecord>,
    /// `max E_k` over `t_k > 2D/3`.
    pub asymptotic_error: f64,
}

impl TrajectoryRecord {
    pub(crate) fn with_capacity(duration: f64, steps: usize) -> Self {
        Self {
            duration,
            times: Vec::with_capacity(steps + 1),
            iterates: Vec::with_capacity(steps + 1),
            oracle_optima: Vec::with_capacity(steps + 1),
            errors: Vec::with_capacity(steps + 1),
            steps: Vec::with_capacity(steps),
            asymptotic_error: f64::NAN,
        }
    }

    pub(crate) fn push(&mut self, t: f64, x: DVector<f64>, optimum: DVector<f64>) {
        self.errors.push((&x - &optimum).norm());
        self.times.push(t);
        self.iterates.push(x);
        self.oracle_optima.push(optimum);
    }

    pub(crate) fn finish(&mut self) {
        self.asymptotic_error = asymptotic_error(&self.times, &self.errors, self.duration);
    }

    /// Errors over the steady-state window `t_k > 2D/3`.
    pub fn steady_state_errors(&self) -> Vec<f64> {
        let start = 2.0 * self.duration / 3.0;
        self.times
            .iter()
            .zip(&self.errors)
            .filter(|(t, _)| **t > start)
            .map(|(_, e)| *e)
            .collect()
    }
}

/// `max_{t_k > 2D/3} E_k`; NaN when the window is empty.
pub fn asymptotic_error(times: &[f64], errors: &[f64], duration: f64) -> f64 {
    let start = 2.0 * duration / 3.0;
    times
        .iter()
        .zip(errors)
        .filter(|(t, _)| **t > start)
        .map(|(_, e)| *e)
        .fold(f64::NAN, f64::max)
}

/// How measurement noise is set in a sampling-period sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NoiseRule {
    /// Keep the spec's `σᵢ`.
    Fixed,
    /// `σᵢ = 0.01·T_s`, so noise does not mask the `T_s` dependence.
    ScaledByTs,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub ts: f64,
    pub asymptotic_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    /// Least-squares slope of `log E∞` against `log T_s`; `None` with fewer
    /// than two distinct `T_s` or a nonpositive error.
    pub slope: Option<f64>,
}

/// Fits `log y = a + s·log x` by least squares and returns `s`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    if xs.iter().chain(ys).any(|v| !(*v > 0.0 && v.is_finite())) {
        return None;
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    Some(sxy / sxx)
}

/// Runs the formation benchmark once per sampling period (in parallel) and
/// fits the log-log slope of the asymptotic error.
pub fn sweep_ts(
    spec: &FormationSpec,
    template: &PCConfig,
    ts_values: &[f64],
    noise_rule: NoiseRule,
    duration: f64,
) -> Result<SweepTable> {
    sweep_with(ts_values, |ts| {
        let mut spec = spec.clone();
        if noise_rule == NoiseRule::ScaledByTs {
            spec.sigmas = vec![0.01 * ts; spec.followers];
        }
        let cfg = PCConfig { ts, ..*template };
        Ok(run_benchmark(&spec, &cfg, duration)?.asymptotic_error)
    })
}

/// Same as [`sweep_ts`] for the noiseless sinusoidal target started at `a·𝟙`.
pub fn sweep_ts_synthetic(
    target: &SinusoidTarget,
    template: &PCConfig,
    ts_values: &[f64],
    duration: f64,
) -> Result<SweepTable> {
    sweep_with(ts_values, |ts| {
        let cfg = PCConfig { ts, ..*template };
        Ok(run_synthetic(target, &crate::prox::Zero, target.start(), &cfg, duration)?.asymptotic_error)
    })
}

fn sweep_with<F>(ts_values: &[f64], run: F) -> Result<SweepTable>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    if ts_values.is_empty() {
        return Err(Error::param("ts_values", "sweep needs at least one sampling period"));
    }
    let rows = ts_values
        .par_iter()
        .map(|&ts| {
            Ok(SweepRow {
                ts,
                asymptotic_error: run(ts)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let xs: Vec<f64> = rows.iter().map(|r| r.ts).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.asymptotic_error).collect();
    Ok(SweepTable {
        slope: loglog_slope(&xs, &ys),
        rows,
    })
}
