//! Online prediction-correction loop.
//!
//! At `t_k` the solver builds a second-order Taylor model `h_k` of the next
//! cost's gradient and runs `P` splitting steps on `h_k + g` from `x_k`. When
//! `f(·; t_{k+1})` is revealed it runs `C` splitting steps on `f + g` starting
//! from the prediction.

use nalgebra::DVector;

use crate::costs::{NonsmoothCost, SmoothCost};
use crate::error::{Error, Result};
use crate::linalg;
use crate::quadratic::QuadraticCost;
use crate::splitting::{banach_picard, SplitConfig, SplitState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DerivativeMode {
    /// Use `∇ₜₓ f` supplied by the cost model.
    Analytic,
    /// First-order backward difference of consecutive gradients at `x_k`.
    BackwardDifference,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PCConfig {
    /// Prediction steps `P`; zero means the prediction is `x_k` itself.
    pub prediction_steps: usize,
    /// Correction steps `C ≥ 1`.
    pub correction_steps: usize,
    /// Sampling period `T_s`.
    pub ts: f64,
    pub derivative_mode: DerivativeMode,
    pub split: SplitConfig,
}

impl PCConfig {
    pub fn new(
        prediction_steps: usize,
        correction_steps: usize,
        ts: f64,
        derivative_mode: DerivativeMode,
        split: SplitConfig,
    ) -> Result<Self> {
        let cfg = Self {
            prediction_steps,
            correction_steps,
            ts,
            derivative_mode,
            split,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.correction_steps < 1 {
            return Err(Error::param("C", "correction steps must be at least 1"));
        }
        if !(self.ts > 0.0 && self.ts.is_finite()) {
            return Err(Error::param(
                "Ts",
                format!("sampling period must be positive, got {}", self.ts),
            ));
        }
        SplitConfig::new(self.split.method, self.split.rho).map(|_| ())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OnlineState {
    pub k: usize,
    /// Current iterate `x_k`.
    pub x: DVector<f64>,
    /// `∇ₓ f(x_k; t_{k−1})`, needed in backward-difference mode from `k ≥ 1`.
    pub prev_grad: Option<DVector<f64>>,
    /// Auxiliary variable left by the last Douglas-Rachford phase. Each phase
    /// restarts from `z₀ = x_init`, so this is informational only.
    pub warm_z: Option<DVector<f64>>,
}

impl OnlineState {
    pub fn new(x0: DVector<f64>) -> Self {
        Self {
            k: 0,
            x: x0,
            prev_grad: None,
            warm_z: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    /// `t_{k+1}`
    pub t: f64,
    /// `x̃_{k+1|k}`
    pub x_pred: DVector<f64>,
    /// `x_{k+1}`
    pub x_corr: DVector<f64>,
    pub pred_residual: f64,
    pub corr_residual: f64,
}

/// Source of the `∇ₜₓ f(x_k; t_k)` term in the Taylor model.
#[derive(Debug, Clone, Copy)]
pub enum TimeDerivative<'a> {
    Analytic,
    /// Carries `∇ₓ f(x_k; t_{k−1})`.
    BackwardDifference(&'a DVector<f64>),
    /// Drop the time term (tangent model of `f(·; t_k)`).
    Zero,
}

/// `(∇ₓ f(x_k; t_k) − ∇ₓ f(x_k; t_{k−1})) / T_s`
pub fn backward_difference_grad_time(grad_now: &DVector<f64>, grad_prev: &DVector<f64>, ts: f64) -> DVector<f64> {
    (grad_now - grad_prev) / ts
}

/// Quadratic `h_k` with
/// `∇h_k(x) = ∇ₓf(x_k; t_k) + ∇ₓₓf(x_k; t_k)(x − x_k) + T_s ∇ₜₓf(x_k; t_k)`.
///
/// The model inherits `m` and `L` from `f`.
pub fn build_prediction_cost(
    f: &dyn SmoothCost,
    x_k: &DVector<f64>,
    t_k: f64,
    ts: f64,
    source: TimeDerivative<'_>,
) -> Result<QuadraticCost> {
    linalg::check_len(x_k, f.dim(), "prediction base point")?;
    let grad = f.gradient(x_k, t_k);
    let hess = linalg::symmetrize(&f.hessian(x_k, t_k));
    let drift = match source {
        TimeDerivative::Analytic => f.gradient_time(x_k, t_k).ok_or(Error::MissingCapability(
            "analytic derivative mode needs the cost to provide ∇ₜₓf; use backward differences instead",
        ))?,
        TimeDerivative::BackwardDifference(prev) => {
            linalg::check_len(prev, f.dim(), "previous gradient")?;
            backward_difference_grad_time(&grad, prev, ts)
        }
        TimeDerivative::Zero => DVector::zeros(f.dim()),
    };
    let linear = grad - &hess * x_k + drift * ts;
    QuadraticCost::with_bounds(hess, linear, f.strong_convexity(), f.smoothness())
}

/// `P` splitting steps on `h_k + g` from `x_k`.
///
/// In backward-difference mode without a cached previous gradient (the first
/// step), the time term is dropped.
pub fn predict(
    state: &OnlineState,
    f: &dyn SmoothCost,
    g: &dyn NonsmoothCost,
    cfg: &PCConfig,
    t_k: f64,
) -> Result<SplitState> {
    let init = SplitState::from_primal(cfg.split.method, state.x.clone());
    if cfg.prediction_steps == 0 {
        return Ok(init);
    }
    let source = match (cfg.derivative_mode, state.prev_grad.as_ref()) {
        (DerivativeMode::Analytic, _) => TimeDerivative::Analytic,
        (DerivativeMode::BackwardDifference, Some(prev)) => TimeDerivative::BackwardDifference(prev),
        (DerivativeMode::BackwardDifference, None) => TimeDerivative::Zero,
    };
    let model = build_prediction_cost(f, &state.x, t_k, cfg.ts, source)?;
    cfg.split.check_against(model.l())?;
    banach_picard(init, &model, t_k, g, &cfg.split, cfg.prediction_steps)
}

/// `C` splitting steps on `f(·; t_{k+1}) + g` from the prediction.
pub fn correct(
    x_pred: &DVector<f64>,
    f_next: &dyn SmoothCost,
    t_next: f64,
    g: &dyn NonsmoothCost,
    cfg: &PCConfig,
) -> Result<SplitState> {
    if cfg.correction_steps < 1 {
        return Err(Error::param("C", "correction steps must be at least 1"));
    }
    cfg.split.check_against(f_next.smoothness())?;
    let init = SplitState::from_primal(cfg.split.method, x_pred.clone());
    banach_picard(init, f_next, t_next, g, &cfg.split, cfg.correction_steps)
}

/// One full prediction-correction step from `t_k` to `t_{k+1} = t_k + T_s`.
///
/// `f_now` is evaluated at `t_k` and `f_next` at `t_{k+1}`; they may be the
/// same continuous-time model or two sampled costs. In backward-difference
/// mode the caller stores `∇ₓ f(x_k; t_{k−1})` in `state.prev_grad`.
pub fn pc_step(
    state: &mut OnlineState,
    f_now: &dyn SmoothCost,
    f_next: &dyn SmoothCost,
    g: &dyn NonsmoothCost,
    cfg: &PCConfig,
    t_k: f64,
) -> Result<StepRecord> {
    let t_next = t_k + cfg.ts;
    let pred = predict(state, f_now, g, cfg, t_k)?;
    let x_pred = pred.output().clone();
    let corr = correct(&x_pred, f_next, t_next, g, cfg)?;
    let x_corr = corr.output().clone();
    state.k += 1;
    state.x = x_corr.clone();
    state.prev_grad = None;
    state.warm_z = corr.z.clone();
    Ok(StepRecord {
        t: t_next,
        x_pred,
        x_corr,
        pred_residual: pred.residual,
        corr_residual: corr.residual,
    })
}

/// Runs the loop for `horizon_steps` samples of a continuous-time cost.
pub fn run_online(
    f: &dyn SmoothCost,
    g: &dyn NonsmoothCost,
    x0: DVector<f64>,
    t0: f64,
    horizon_steps: usize,
    cfg: &PCConfig,
) -> Result<Vec<StepRecord>> {
    cfg.validate()?;
    linalg::check_len(&x0, f.dim(), "initial point")?;
    let mut state = OnlineState::new(x0);
    let mut records = Vec::with_capacity(horizon_steps);
    for k in 0..horizon_steps {
        let t_k = t0 + k as f64 * cfg.ts;
        if cfg.derivative_mode == DerivativeMode::BackwardDifference && k > 0 {
            state.prev_grad = Some(f.gradient(&state.x, t_k - cfg.ts));
        }
        let rec = pc_step(&mut state, f, f, g, cfg, t_k).map_err(|e| e.at_step(k))?;
        records.push(rec);
    }
    Ok(records)
}
