//! Cost-model abstractions for `min_x f(x; t) + g(x)`.
//!
//! The smooth part `f` is strongly convex with Lipschitz gradient, uniformly in
//! time, and is accessed through its derivatives. The nonsmooth part `g` is a
//! closed proper convex function accessed only through its proximal map.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;

/// Time-varying smooth cost `f(x; t)` with strong convexity modulus `m` and
/// gradient Lipschitz constant `L`, both declared by the model builder.
pub trait SmoothCost: Send + Sync {
    fn dim(&self) -> usize;

    /// `∇ₓ f(x; t)`
    fn gradient(&self, x: &DVector<f64>, t: f64) -> DVector<f64>;

    /// `∇ₓₓ f(x; t)`
    fn hessian(&self, x: &DVector<f64>, t: f64) -> DMatrix<f64>;

    /// `∇ₜₓ f(x; t)`, when the model can provide it analytically.
    fn gradient_time(&self, _x: &DVector<f64>, _t: f64) -> Option<DVector<f64>> {
        None
    }

    /// Closed-form `prox_{ρ f(·; t)}(v)`.
    fn prox(&self, _v: &DVector<f64>, _t: f64, _rho: f64) -> Result<DVector<f64>> {
        Err(Error::MissingCapability(
            "smooth cost has no closed-form proximal map; use a quadratic model or forward-backward splitting",
        ))
    }

    fn has_exact_prox(&self) -> bool {
        false
    }

    /// Optional scalar evaluator, only used for validation.
    fn value(&self, _x: &DVector<f64>, _t: f64) -> Option<f64> {
        None
    }

    /// Strong convexity modulus `m`.
    fn strong_convexity(&self) -> f64;

    /// Gradient Lipschitz constant `L`.
    fn smoothness(&self) -> f64;
}

/// Closed proper convex function exposed through its proximal map.
pub trait NonsmoothCost: Send + Sync {
    /// `prox_{ρ g}(x)`
    fn prox(&self, x: &DVector<f64>, rho: f64) -> Result<DVector<f64>>;

    /// `refl_{ρ g}(x) = 2 prox_{ρ g}(x) − x`
    fn reflect(&self, x: &DVector<f64>, rho: f64) -> Result<DVector<f64>> {
        Ok(self.prox(x, rho)? * 2.0 - x)
    }
}

impl<T: NonsmoothCost + ?Sized> NonsmoothCost for &T {
    fn prox(&self, x: &DVector<f64>, rho: f64) -> Result<DVector<f64>> {
        (**self).prox(x, rho)
    }
}

impl<T: NonsmoothCost + ?Sized> NonsmoothCost for std::sync::Arc<T> {
    fn prox(&self, x: &DVector<f64>, rho: f64) -> Result<DVector<f64>> {
        (**self).prox(x, rho)
    }
}

/// Uniform bounds on the higher derivatives of `f`:
/// `‖∇ₜₓf‖ ≤ C₀`, `‖∇ₓₓₓf‖ ≤ C₁`, `‖∇ₓₜₓf‖ ≤ C₂`, `‖∇ₜₜₓf‖ ≤ C₃`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DerivativeBounds {
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

impl DerivativeBounds {
    pub fn new(c0: f64, c1: f64, c2: f64, c3: f64) -> Result<Self> {
        for (name, v) in [("C0", c0), ("C1", c1), ("C2", c2), ("C3", c3)] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::param(name, format!("must be finite and nonnegative, got {v}")));
            }
        }
        Ok(Self { c0, c1, c2, c3 })
    }
}

/// Tolerance on sampled Hessian eigenvalues against the declared `[m, L]`.
pub const SPECTRUM_TOL: f64 = 1e-8;

/// Summary of [`validate_smooth_cost`] over a set of sample points.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothCostCheck {
    pub samples: usize,
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
    pub max_asymmetry: f64,
    /// Largest relative mismatch between the gradient and central differences
    /// of the scalar evaluator; `None` when the cost has no evaluator.
    pub max_gradient_mismatch: Option<f64>,
}

/// Checks a smooth cost's declared constants against sampled Hessians.
///
/// Fails if `L ≥ m > 0` does not hold, if a sampled Hessian is asymmetric or
/// has an eigenvalue outside `[m − 1e−8, L + 1e−8]`, or if the gradient
/// disagrees with central differences of [`SmoothCost::value`].
pub fn validate_smooth_cost(cost: &dyn SmoothCost, samples: &[(DVector<f64>, f64)]) -> Result<SmoothCostCheck> {
    let (m, l) = (cost.strong_convexity(), cost.smoothness());
    if !(m > 0.0 && l >= m && l.is_finite()) {
        return Err(Error::param("m, L", format!("need L ≥ m > 0, got m = {m}, L = {l}")));
    }
    let mut check = SmoothCostCheck {
        samples: samples.len(),
        min_eigenvalue: f64::INFINITY,
        max_eigenvalue: f64::NEG_INFINITY,
        max_asymmetry: 0.0,
        max_gradient_mismatch: None,
    };
    for (x, t) in samples {
        linalg::check_len(x, cost.dim(), "validation sample")?;
        let h = cost.hessian(x, *t);
        let asym = linalg::asymmetry(&h);
        check.max_asymmetry = check.max_asymmetry.max(asym);
        if asym > linalg::SYMMETRY_TOL {
            return Err(Error::NotPositiveDefinite {
                detail: format!("Hessian at t = {t} is asymmetric ({asym:e})"),
            });
        }
        let (lo, hi) = linalg::extreme_eigenvalues(&h);
        check.min_eigenvalue = check.min_eigenvalue.min(lo);
        check.max_eigenvalue = check.max_eigenvalue.max(hi);
        if lo < m - SPECTRUM_TOL || hi > l + SPECTRUM_TOL {
            return Err(Error::param(
                "m, L",
                format!("Hessian spectrum [{lo}, {hi}] at t = {t} leaves declared [{m}, {l}]"),
            ));
        }
        if cost.value(x, *t).is_some() {
            let g = cost.gradient(x, *t);
            let mut worst: f64 = 0.0;
            for i in 0..x.len() {
                let h_i = 1e-5 * (1.0 + x[i].abs());
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[i] += h_i;
                xm[i] -= h_i;
                let fd =
                    (cost.value(&xp, *t).unwrap_or(f64::NAN) - cost.value(&xm, *t).unwrap_or(f64::NAN)) / (2.0 * h_i);
                worst = worst.max((fd - g[i]).abs() / (1.0 + g[i].abs()));
            }
            check.max_gradient_mismatch = Some(check.max_gradient_mismatch.unwrap_or(0.0).max(worst));
            if !(worst <= 1e-5) {
                return Err(Error::param(
                    "gradient",
                    format!("disagrees with central differences of the value by {worst:e} at t = {t}"),
                ));
            }
        }
    }
    Ok(check)
}
