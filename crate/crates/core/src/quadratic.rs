use nalgebra::{DMatrix, DVector};

use crate::costs::SmoothCost;
use crate::error::{Error, Result};
use crate::linalg;

/// Time-invariant quadratic `φ(x) = ½ xᵀQx + qᵀx` with symmetric positive-definite `Q`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticCost {
    q_mat: DMatrix<f64>,
    q_vec: DVector<f64>,
    m: f64,
    l: f64,
}

impl QuadraticCost {
    /// Builds the cost and sets `m`, `L` to the extreme eigenvalues of `Q`.
    pub fn new(q_mat: DMatrix<f64>, q_vec: DVector<f64>) -> Result<Self> {
        let n = Self::check_shape(&q_mat, &q_vec)?;
        let (m, l) = linalg::extreme_eigenvalues(&q_mat);
        if !(m > 0.0) {
            return Err(Error::NotPositiveDefinite {
                detail: format!("smallest eigenvalue of the {n}×{n} Hessian is {m}"),
            });
        }
        Ok(Self { q_mat, q_vec, m, l })
    }

    /// Builds the cost with declared constants, e.g. inherited from the
    /// function a Taylor model was taken from. The spectrum is not recomputed.
    pub fn with_bounds(q_mat: DMatrix<f64>, q_vec: DVector<f64>, m: f64, l: f64) -> Result<Self> {
        Self::check_shape(&q_mat, &q_vec)?;
        if !(m > 0.0 && l >= m && l.is_finite()) {
            return Err(Error::param("m, L", format!("need L ≥ m > 0, got m = {m}, L = {l}")));
        }
        Ok(Self { q_mat, q_vec, m, l })
    }

    fn check_shape(q_mat: &DMatrix<f64>, q_vec: &DVector<f64>) -> Result<usize> {
        let n = linalg::check_square(q_mat, "quadratic Hessian")?;
        linalg::check_len(q_vec, n, "quadratic linear term")?;
        let asym = linalg::asymmetry(q_mat);
        if asym > linalg::SYMMETRY_TOL {
            return Err(Error::NotPositiveDefinite {
                detail: format!("Hessian is not symmetric (relative asymmetry {asym:e})"),
            });
        }
        Ok(n)
    }

    pub fn hessian_matrix(&self) -> &DMatrix<f64> {
        &self.q_mat
    }

    pub fn linear_term(&self) -> &DVector<f64> {
        &self.q_vec
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn l(&self) -> f64 {
        self.l
    }

    pub fn eval(&self, x: &DVector<f64>) -> f64 {
        0.5 * x.dot(&(&self.q_mat * x)) + self.q_vec.dot(x)
    }

    pub fn grad(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.q_mat * x + &self.q_vec
    }

    /// Unconstrained minimizer `−Q⁻¹q`.
    pub fn minimizer(&self) -> Result<DVector<f64>> {
        Ok(-linalg::solve_spd(
            self.q_mat.clone(),
            &self.q_vec,
            "quadratic Hessian Q",
        )?)
    }
}

/// `prox_{ρφ}(v)`: solves `(I + ρQ) y = v − ρq` by Cholesky.
pub fn prox_quadratic(cost: &QuadraticCost, v: &DVector<f64>, rho: f64) -> Result<DVector<f64>> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::param("rho", format!("must be positive, got {rho}")));
    }
    let n = cost.q_mat.nrows();
    linalg::check_len(v, n, "prox_quadratic input")?;
    let system = DMatrix::identity(n, n) + &cost.q_mat * rho;
    let rhs = v - &cost.q_vec * rho;
    linalg::solve_spd(system, &rhs, "I + ρQ")
}

impl SmoothCost for QuadraticCost {
    fn dim(&self) -> usize {
        self.q_vec.len()
    }

    fn gradient(&self, x: &DVector<f64>, _t: f64) -> DVector<f64> {
        self.grad(x)
    }

    fn hessian(&self, _x: &DVector<f64>, _t: f64) -> DMatrix<f64> {
        self.q_mat.clone()
    }

    fn gradient_time(&self, _x: &DVector<f64>, _t: f64) -> Option<DVector<f64>> {
        Some(DVector::zeros(self.q_vec.len()))
    }

    fn prox(&self, v: &DVector<f64>, _t: f64, rho: f64) -> Result<DVector<f64>> {
        prox_quadratic(self, v, rho)
    }

    fn has_exact_prox(&self) -> bool {
        true
    }

    fn value(&self, x: &DVector<f64>, _t: f64) -> Option<f64> {
        Some(self.eval(x))
    }

    fn strong_convexity(&self) -> f64 {
        self.m
    }

    fn smoothness(&self) -> f64 {
        self.l
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::costs::validate_smooth_cost;
    use crate::testutil::{power_iteration, random_spd};
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn dv(v: &[f64]) -> DVector<f64> {
        DVector::from_row_slice(v)
    }

    #[test]
    fn diagonal_bounds() {
        let c = QuadraticCost::new(DMatrix::from_diagonal(&dv(&[1.0, 10.0])), DVector::zeros(2)).unwrap();
        assert_relative_eq!(c.m(), 1.0, epsilon = 1e-14);
        assert_relative_eq!(c.l(), 10.0, epsilon = 1e-14);
        let id = QuadraticCost::new(DMatrix::identity(3, 3), DVector::zeros(3)).unwrap();
        assert_relative_eq!(id.m(), 1.0, epsilon = 1e-14);
        assert_relative_eq!(id.l(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn bounds_match_power_iteration() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..5 {
            let q = random_spd(&mut rng, 5, 0.3, 4.0);
            let c = QuadraticCost::new(q.clone(), DVector::zeros(5)).unwrap();
            let (lo, hi) = power_iteration(&q);
            assert!((c.l() - hi).abs() <= 1e-8 * hi, "L {} vs {}", c.l(), hi);
            assert!((c.m() - lo).abs() <= 1e-8 * hi, "m {} vs {}", c.m(), lo);
        }
    }

    #[test]
    fn rejects_indefinite_and_asymmetric() {
        let indef = DMatrix::from_diagonal(&dv(&[1.0, -1.0]));
        assert!(matches!(
            QuadraticCost::new(indef, DVector::zeros(2)),
            Err(Error::NotPositiveDefinite { .. })
        ));
        let asym = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 0.0, 2.0]);
        assert!(QuadraticCost::new(asym, DVector::zeros(2)).is_err());
        let rect = DMatrix::zeros(2, 3);
        assert!(matches!(
            QuadraticCost::new(rect, DVector::zeros(2)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn prox_closed_forms() {
        let c = QuadraticCost::new(DMatrix::identity(1, 1), DVector::zeros(1)).unwrap();
        assert_relative_eq!(prox_quadratic(&c, &dv(&[4.0]), 1.0).unwrap()[0], 2.0, epsilon = 1e-14);
        let c2 = QuadraticCost::new(DMatrix::identity(2, 2) * 2.0, DVector::zeros(2)).unwrap();
        assert_relative_eq!(
            prox_quadratic(&c2, &dv(&[3.0, 3.0]), 0.5).unwrap(),
            dv(&[1.5, 1.5]),
            epsilon = 1e-14
        );
        assert!(prox_quadratic(&c2, &dv(&[3.0, 3.0]), 0.0).is_err());
        assert!(prox_quadratic(&c2, &dv(&[3.0, 3.0]), -1.0).is_err());
    }

    #[test]
    fn prox_matches_inner_gradient_descent() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let q = random_spd(&mut rng, 5, 0.5, 3.0);
        let lin = crate::testutil::random_vector(&mut rng, 5, 2.0);
        let c = QuadraticCost::new(q, lin).unwrap();
        let v = crate::testutil::random_vector(&mut rng, 5, 3.0);
        let rho = 0.7;
        let y = prox_quadratic(&c, &v, rho).unwrap();

        // Independent route: gradient descent on φ(y) + ‖y − v‖²/(2ρ).
        let lip = c.l() + 1.0 / rho;
        let mut w = v.clone();
        for _ in 0..20_000 {
            let g = c.grad(&w) + (&w - &v) / rho;
            w -= g / lip;
        }
        assert_relative_eq!(y, w, epsilon = 1e-10);

        // First-order optimality Qy + q + (y − v)/ρ = 0.
        let resid = c.grad(&y) + (&y - &v) / rho;
        assert!(resid.norm() <= 1e-10 * (1.0 + v.norm()));
    }

    #[test]
    fn validation_accepts_declared_and_rejects_wrong_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let q = random_spd(&mut rng, 4, 1.0, 5.0);
        let c = QuadraticCost::new(q.clone(), DVector::zeros(4)).unwrap();
        let samples: Vec<_> = (0..5)
            .map(|i| (crate::testutil::random_vector(&mut rng, 4, 1.0), i as f64))
            .collect();
        let check = validate_smooth_cost(&c, &samples).unwrap();
        assert!(check.max_gradient_mismatch.unwrap() < 1e-6);

        let wrong = QuadraticCost::with_bounds(q, DVector::zeros(4), c.m() + 0.5, c.l()).unwrap();
        assert!(validate_smooth_cost(&wrong, &samples).is_err());
    }
}
