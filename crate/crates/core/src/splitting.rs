//! Forward-backward and Douglas-Rachford splitting for `min φ(x) + γ(x)`,
//! their Banach-Picard iteration, and closed-form contraction rates.

use nalgebra::DVector;

use crate::costs::{NonsmoothCost, SmoothCost};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    ForwardBackward,
    DouglasRachford,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::ForwardBackward => "FB",
            Method::DouglasRachford => "DR",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitConfig {
    pub method: Method,
    pub rho: f64,
}

impl SplitConfig {
    pub fn new(method: Method, rho: f64) -> Result<Self> {
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::StepSize {
                rho,
                requirement: "rho > 0".into(),
            });
        }
        Ok(Self { method, rho })
    }

    /// Step-size from [`balanced_step`] for the given constants.
    pub fn balanced(method: Method, m: f64, l: f64) -> Result<Self> {
        Self::new(method, balanced_step(method, m, l)?)
    }

    /// Checks the step-size precondition against a cost with gradient constant `L`.
    pub fn check_against(&self, l: f64) -> Result<()> {
        if self.method == Method::ForwardBackward && self.rho >= 2.0 / l {
            return Err(Error::StepSize {
                rho: self.rho,
                requirement: format!("rho < 2/L = {}", 2.0 / l),
            });
        }
        Ok(())
    }

    pub fn rate(&self, m: f64, l: f64) -> Result<RateEstimate> {
        match self.method {
            Method::ForwardBackward => contraction_fb(self.rho, m, l),
            Method::DouglasRachford => contraction_dr(self.rho, m, l),
        }
    }
}

/// Iterate of a splitting method.
///
/// For Douglas-Rachford, `z` is the auxiliary variable, `x = prox_{ρφ}(z)`
/// after every step, and `y = prox_{ργ}(2x − z)` is the point produced by the
/// last step (it lies in the domain of `γ`).
#[derive(Debug, Clone, PartialEq)]
pub struct SplitState {
    pub x: DVector<f64>,
    pub z: Option<DVector<f64>>,
    pub y: Option<DVector<f64>>,
    /// `‖x⁺ − x‖` (FB) or `‖z⁺ − z‖` (DR) of the last step; zero before any step.
    pub residual: f64,
}

impl SplitState {
    /// Starting state from a primal point. Douglas-Rachford starts with `z₀ = x_init`.
    pub fn from_primal(method: Method, x: DVector<f64>) -> Self {
        let z = match method {
            Method::ForwardBackward => None,
            Method::DouglasRachford => Some(x.clone()),
        };
        Self {
            x,
            z,
            y: None,
            residual: 0.0,
        }
    }

    /// The point handed on by a phase: the last `y` for Douglas-Rachford, `x` otherwise.
    pub fn output(&self) -> &DVector<f64> {
        self.y.as_ref().unwrap_or(&self.x)
    }
}

/// Per-step base rate `ζ` and trajectory prefactor of a splitting method.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateEstimate {
    pub zeta: f64,
    pub prefactor: f64,
}

impl RateEstimate {
    /// `ζ(k) = ζᵏ · prefactor`; `ζ(0)` is the prefactor itself.
    pub fn horizon(&self, k: usize) -> f64 {
        self.zeta.powi(k as i32) * self.prefactor
    }
}

fn check_moduli(m: f64, l: f64) -> Result<()> {
    if !(m > 0.0 && l >= m && l.is_finite()) {
        return Err(Error::param("m, L", format!("need 0 < m ≤ L, got m = {m}, L = {l}")));
    }
    Ok(())
}

/// `ζ_FB = max{|1 − ρm|, |1 − ρL|}`, valid for `0 < ρ < 2/L`.
pub fn contraction_fb(rho: f64, m: f64, l: f64) -> Result<RateEstimate> {
    check_moduli(m, l)?;
    if !(rho > 0.0 && rho < 2.0 / l) {
        return Err(Error::StepSize {
            rho,
            requirement: format!("0 < rho < 2/L = {}", 2.0 / l),
        });
    }
    Ok(RateEstimate {
        zeta: (1.0 - rho * m).abs().max((1.0 - rho * l).abs()),
        prefactor: 1.0,
    })
}

/// `ζ_DR = max{1/(1 + ρm), ρL/(1 + ρL)}` with prefactor `(1 + ρL)/(1 + ρm)`.
pub fn contraction_dr(rho: f64, m: f64, l: f64) -> Result<RateEstimate> {
    check_moduli(m, l)?;
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::StepSize {
            rho,
            requirement: "rho > 0".into(),
        });
    }
    Ok(RateEstimate {
        zeta: (1.0 / (1.0 + rho * m)).max(rho * l / (1.0 + rho * l)),
        prefactor: (1.0 + rho * l) / (1.0 + rho * m),
    })
}

/// Step-size minimizing the method's rate: `2/(m + L)` for FB, `1/√(mL)` for DR.
pub fn balanced_step(method: Method, m: f64, l: f64) -> Result<f64> {
    check_moduli(m, l)?;
    Ok(match method {
        Method::ForwardBackward => 2.0 / (m + l),
        Method::DouglasRachford => 1.0 / (m * l).sqrt(),
    })
}

/// One forward-backward step `prox_{ργ}(x − ρ∇φ(x))` on `φ = f(·; t)`.
pub fn fb_step(
    x: &DVector<f64>,
    smooth: &dyn SmoothCost,
    t: f64,
    nonsmooth: &dyn NonsmoothCost,
    rho: f64,
) -> Result<DVector<f64>> {
    let l = smooth.smoothness();
    if !(rho > 0.0 && rho < 2.0 / l) {
        return Err(Error::StepSize {
            rho,
            requirement: format!("0 < rho < 2/L = {}", 2.0 / l),
        });
    }
    let forward = x - smooth.gradient(x, t) * rho;
    nonsmooth.prox(&forward, rho)
}

/// One Douglas-Rachford step on the auxiliary variable:
/// `x = prox_{ρφ}(z)`, `y = prox_{ργ}(2x − z)`, `z⁺ = z + y − x`.
pub fn dr_step(
    state: &SplitState,
    smooth: &dyn SmoothCost,
    t: f64,
    nonsmooth: &dyn NonsmoothCost,
    rho: f64,
) -> Result<SplitState> {
    if !smooth.has_exact_prox() {
        return Err(Error::MissingCapability(
            "Douglas-Rachford needs a closed-form prox of the smooth part; use a quadratic model or forward-backward",
        ));
    }
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::StepSize {
            rho,
            requirement: "rho > 0".into(),
        });
    }
    let z = state.z.as_ref().unwrap_or(&state.x);
    let x = smooth.prox(z, t, rho)?;
    let y = nonsmooth.prox(&(&x * 2.0 - z), rho)?;
    let step = &y - &x;
    let z_next = z + &step;
    let x_next = smooth.prox(&z_next, t, rho)?;
    Ok(SplitState {
        x: x_next,
        z: Some(z_next),
        y: Some(y),
        residual: step.norm(),
    })
}

/// Applies the configured splitting operator exactly `steps` times.
pub fn banach_picard(
    initial: SplitState,
    smooth: &dyn SmoothCost,
    t: f64,
    nonsmooth: &dyn NonsmoothCost,
    config: &SplitConfig,
    steps: usize,
) -> Result<SplitState> {
    let mut state = initial;
    for _ in 0..steps {
        state = match config.method {
            Method::ForwardBackward => {
                let next = fb_step(&state.x, smooth, t, nonsmooth, config.rho)?;
                let residual = (&next - &state.x).norm();
                SplitState {
                    x: next,
                    z: None,
                    y: None,
                    residual,
                }
            }
            Method::DouglasRachford => dr_step(&state, smooth, t, nonsmooth, config.rho)?,
        };
    }
    Ok(state)
}

/// `‖x − prox_{ργ}(x − ρ∇φ(x))‖`, zero exactly at solutions of `0 ∈ ∇φ(x) + ∂γ(x)`.
pub fn fixed_point_residual(
    x: &DVector<f64>,
    smooth: &dyn SmoothCost,
    t: f64,
    nonsmooth: &dyn NonsmoothCost,
    rho: f64,
) -> Result<f64> {
    let forward = x - smooth.gradient(x, t) * rho;
    Ok((x - nonsmooth.prox(&forward, rho)?).norm())
}
