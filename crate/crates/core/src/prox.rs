//! Proximal operators of common nonsmooth terms.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::costs::NonsmoothCost;
use crate::error::{Error, Result};
use crate::linalg;

fn check_rho(rho: f64) -> Result<()> {
    if rho > 0.0 && rho.is_finite() {
        Ok(())
    } else {
        Err(Error::param("rho", format!("must be positive, got {rho}")))
    }
}

/// Soft-thresholding, the prox of `ρ·weight·‖x‖₁`.
pub fn prox_l1(x: &DVector<f64>, rho: f64, weight: f64) -> Result<DVector<f64>> {
    check_rho(rho)?;
    if !(weight > 0.0 && weight.is_finite()) {
        return Err(Error::param("weight", format!("must be positive, got {weight}")));
    }
    let thr = rho * weight;
    Ok(x.map(|xi| xi.signum() * (xi.abs() - thr).max(0.0)))
}

/// Euclidean projection onto `{x : Ax = b}`. Independent of `ρ`.
///
/// Factorizes `AAᵀ` on every call; use [`AffineIndicator`] to reuse it.
pub fn prox_affine_indicator(x: &DVector<f64>, a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    AffineIndicator::new(a.clone(), b.clone())?.project(x)
}

/// `g ≡ 0`; its prox is the identity.
#[derive(Debug, Clone, Copy, Default)]
pub struct Zero;

impl NonsmoothCost for Zero {
    fn prox(&self, x: &DVector<f64>, rho: f64) -> Result<DVector<f64>> {
        check_rho(rho)?;
        Ok(x.clone())
    }
}

/// `g(x) = weight·‖x‖₁`
#[derive(Debug, Clone, Copy)]
pub struct L1Norm {
    pub weight: f64,
}

impl NonsmoothCost for L1Norm {
    fn prox(&self, x: &DVector<f64>, rho: f64) -> Result<DVector<f64>> {
        prox_l1(x, rho, self.weight)
    }
}

/// Indicator of the box `lower ≤ x ≤ upper` (componentwise, bounds may be infinite).
#[derive(Debug, Clone, PartialEq)]
pub struct BoxIndicator {
    lower: DVector<f64>,
    upper: DVector<f64>,
}

impl BoxIndicator {
    pub fn new(lower: DVector<f64>, upper: DVector<f64>) -> Result<Self> {
        linalg::check_len(&upper, lower.len(), "box bounds")?;
        if lower.iter().zip(upper.iter()).any(|(l, u)| !(l <= u)) {
            return Err(Error::param("lower, upper", "empty box"));
        }
        Ok(Self { lower, upper })
    }

    /// `{x : x ≤ 0}` in `n` dimensions.
    pub fn nonpositive(n: usize) -> Self {
        Self {
            lower: DVector::from_element(n, f64::NEG_INFINITY),
            upper: DVector::zeros(n),
        }
    }
}

impl NonsmoothCost for BoxIndicator {
    fn prox(&self, x: &DVector<f64>, rho: f64) -> Result<DVector<f64>> {
        check_rho(rho)?;
        linalg::check_len(x, self.lower.len(), "box projection input")?;
        Ok(DVector::from_fn(x.len(), |i, _| {
            x[i].clamp(self.lower[i], self.upper[i])
        }))
    }
}

/// Indicator of the affine set `{x : Ax = b}` with a cached factorization of `AAᵀ`.
#[derive(Debug, Clone)]
pub struct AffineIndicator {
    a: DMatrix<f64>,
    b: DVector<f64>,
    gram: Cholesky<f64, Dyn>,
}

const GRAM: &str = "A·Aᵀ (affine projection; A must have full row rank)";

impl AffineIndicator {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>) -> Result<Self> {
        linalg::check_len(&b, a.nrows(), "affine constraint right-hand side")?;
        if a.nrows() > a.ncols() {
            return Err(Error::Singular { factorization: GRAM });
        }
        let gram = linalg::cholesky(&a * a.transpose(), GRAM)?;
        // Cholesky accepts numerically rank-deficient Gram matrices with tiny pivots.
        let diag = gram.l_dirty().diagonal();
        let (lo, hi) = diag.iter().fold((f64::INFINITY, 0.0_f64), |(lo, hi), d| {
            (lo.min(d.abs()), hi.max(d.abs()))
        });
        if a.nrows() > 0 && lo <= 1e-7 * hi {
            return Err(Error::Singular { factorization: GRAM });
        }
        Ok(Self { a, b, gram })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn rhs(&self) -> &DVector<f64> {
        &self.b
    }

    /// `x − Aᵀ(AAᵀ)⁻¹(Ax − b)`
    pub fn project(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        linalg::check_len(x, self.a.ncols(), "affine projection input")?;
        if self.a.nrows() == 0 {
            return Ok(x.clone());
        }
        let r = &self.a * x - &self.b;
        Ok(x - self.a.transpose() * self.gram.solve(&r))
    }

    /// `‖Ax − b‖`
    pub fn violation(&self, x: &DVector<f64>) -> f64 {
        (&self.a * x - &self.b).norm()
    }
}

impl NonsmoothCost for AffineIndicator {
    fn prox(&self, x: &DVector<f64>, rho: f64) -> Result<DVector<f64>> {
        check_rho(rho)?;
        self.project(x)
    }
}
