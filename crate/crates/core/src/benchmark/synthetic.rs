use nalgebra::{DMatrix, DVector};

use crate::costs::{DerivativeBounds, NonsmoothCost, SmoothCost};
use crate::engine::{run_online, PCConfig};
use crate::error::{Error, Result};
use crate::linalg;

use super::{formation::step_count, TrajectoryRecord};

/// `f(x; t) = ½‖x − r(t)‖²` with `r(t) = a·sin(ωt)·𝟙`.
///
/// `m = L = 1`, `C₁ = C₂ = 0`, `C₀ = aω√n`, `C₃ = aω²√n`, and with `g = 0`
/// the optimum is `r(t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinusoidTarget {
    pub amplitude: f64,
    pub omega: f64,
    pub dimension: usize,
}

impl SinusoidTarget {
    pub fn new(amplitude: f64, omega: f64, dimension: usize) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::param("dimension", "must be at least 1"));
        }
        if !(amplitude.is_finite() && omega.is_finite()) {
            return Err(Error::param("amplitude, omega", "must be finite"));
        }
        Ok(Self {
            amplitude,
            omega,
            dimension,
        })
    }

    pub fn target(&self, t: f64) -> DVector<f64> {
        DVector::from_element(self.dimension, self.amplitude * (self.omega * t).sin())
    }

    pub fn bounds(&self) -> DerivativeBounds {
        let scale = self.amplitude.abs() * (self.dimension as f64).sqrt();
        DerivativeBounds {
            c0: scale * self.omega.abs(),
            c1: 0.0,
            c2: 0.0,
            c3: scale * self.omega * self.omega,
        }
    }

    /// Default starting point `a·𝟙`.
    pub fn start(&self) -> DVector<f64> {
        DVector::from_element(self.dimension, self.amplitude)
    }
}

impl SmoothCost for SinusoidTarget {
    fn dim(&self) -> usize {
        self.dimension
    }
    fn gradient(&self, x: &DVector<f64>, t: f64) -> DVector<f64> {
        x - self.target(t)
    }
    fn hessian(&self, _x: &DVector<f64>, _t: f64) -> DMatrix<f64> {
        DMatrix::identity(self.dimension, self.dimension)
    }
    fn gradient_time(&self, _x: &DVector<f64>, t: f64) -> Option<DVector<f64>> {
        Some(DVector::from_element(
            self.dimension,
            -self.amplitude * self.omega * (self.omega * t).cos(),
        ))
    }
    fn prox(&self, v: &DVector<f64>, t: f64, rho: f64) -> Result<DVector<f64>> {
        if !(rho > 0.0) {
            return Err(Error::param("rho", format!("must be positive, got {rho}")));
        }
        Ok((v + self.target(t) * rho) / (1.0 + rho))
    }
    fn has_exact_prox(&self) -> bool {
        true
    }
    fn value(&self, x: &DVector<f64>, t: f64) -> Option<f64> {
        Some(0.5 * (x - self.target(t)).norm_squared())
    }
    fn strong_convexity(&self) -> f64 {
        1.0
    }
    fn smoothness(&self) -> f64 {
        1.0
    }
}

/// Tracks the sinusoid with `g = 0` from `x0` over `duration` seconds.
pub fn run_synthetic(
    target: &SinusoidTarget,
    g: &dyn NonsmoothCost,
    x0: DVector<f64>,
    cfg: &PCConfig,
    duration: f64,
) -> Result<TrajectoryRecord> {
    linalg::check_len(&x0, target.dimension, "initial point")?;
    let steps = step_count(duration, cfg.ts);
    let recs = run_online(target, g, x0.clone(), 0.0, steps, cfg)?;
    let mut record = TrajectoryRecord::with_capacity(duration, steps);
    record.push(0.0, x0, target.target(0.0));
    for rec in recs {
        record.push(rec.t, rec.x_corr.clone(), target.target(rec.t));
        record.steps.push(rec);
    }
    record.finish();
    Ok(record)
}
