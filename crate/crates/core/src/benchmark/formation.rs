//! Leader-following rigid formation tracked by a fusion center.
//!
//! The leader `x⁰` moves on a Lissajous curve. Follower `i` measures one
//! coordinate of the leader, `zⁱ = vᵢᵀx⁰ + nⁱ`, and the stacked positions
//! `x = (x⁰, x¹, …, xᴺ)` are estimated by regularized least squares subject to
//! the formation constraints `xⁱ − x⁰ = d(cos θᵢ, sin θᵢ)`.

use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::costs::{DerivativeBounds, SmoothCost};
use crate::engine::{pc_step, DerivativeMode, OnlineState, PCConfig};
use crate::error::{Error, Result};
use crate::linalg;
use crate::prox::AffineIndicator;
use crate::quadratic::QuadraticCost;

use super::TrajectoryRecord;

/// Planar Lissajous curve `(A sin(aωt), A sin(bωt + φ))` with `ω = 2π/period`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LissajousSpec {
    pub amplitude: f64,
    pub ratio: (u32, u32),
    pub period: f64,
    pub phase: f64,
}

impl Default for LissajousSpec {
    fn default() -> Self {
        Self {
            amplitude: 3.0,
            ratio: (1, 3),
            period: 40.0,
            phase: FRAC_PI_2,
        }
    }
}

impl LissajousSpec {
    fn omega(&self) -> (f64, f64) {
        let w = 2.0 * PI / self.period;
        (self.ratio.0 as f64 * w, self.ratio.1 as f64 * w)
    }

    pub fn position(&self, t: f64) -> [f64; 2] {
        let (wx, wy) = self.omega();
        [
            self.amplitude * (wx * t).sin(),
            self.amplitude * (wy * t + self.phase).sin(),
        ]
    }

    pub fn velocity(&self, t: f64) -> [f64; 2] {
        let (wx, wy) = self.omega();
        [
            self.amplitude * wx * (wx * t).cos(),
            self.amplitude * wy * (wy * t + self.phase).cos(),
        ]
    }

    /// Componentwise bounds on `|ẋ⁰|` and `|ẍ⁰|`.
    fn rate_bounds(&self) -> ([f64; 2], [f64; 2]) {
        let (wx, wy) = self.omega();
        let a = self.amplitude.abs();
        ([a * wx, a * wy], [a * wx * wx, a * wy * wy])
    }
}

pub fn leader_position(spec: &LissajousSpec, t: f64) -> DVector<f64> {
    DVector::from_row_slice(&spec.position(t))
}

/// Measured leader coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
}

impl Axis {
    fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FormationSpec {
    pub followers: usize,
    /// Formation radius `d`.
    pub radius: f64,
    /// Regularization weight `λ`.
    pub lambda: f64,
    /// Noise standard deviation per follower.
    pub sigmas: Vec<f64>,
    /// Measured axis per follower.
    pub directions: Vec<Axis>,
    pub leader: LissajousSpec,
    pub seed: u64,
}

impl FormationSpec {
    /// Ten followers on the unit circle, `λ = 10`, `σ = 0.1`; the first six
    /// measure the leader's x coordinate and the last four its y coordinate.
    pub fn paper_defaults(seed: u64) -> Self {
        let followers = 10;
        Self {
            followers,
            radius: 1.0,
            lambda: 10.0,
            sigmas: vec![0.1; followers],
            directions: (0..followers).map(|i| if i < 6 { Axis::X } else { Axis::Y }).collect(),
            leader: LissajousSpec::default(),
            seed,
        }
    }

    /// State dimension `2(N + 1)`.
    pub fn dim(&self) -> usize {
        2 * (self.followers + 1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.followers == 0 {
            return Err(Error::param("N", "need at least one follower"));
        }
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(Error::param("d", format!("must be positive, got {}", self.radius)));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::param("lambda", format!("must be positive, got {}", self.lambda)));
        }
        if self.sigmas.len() != self.followers {
            return Err(Error::param(
                "sigmas",
                format!("need {} entries, got {}", self.followers, self.sigmas.len()),
            ));
        }
        if self.sigmas.iter().any(|s| !(*s >= 0.0 && s.is_finite())) {
            return Err(Error::param("sigmas", "must be finite and nonnegative"));
        }
        if self.directions.len() != self.followers {
            return Err(Error::param(
                "directions",
                format!("need {} entries, got {}", self.followers, self.directions.len()),
            ));
        }
        if !(self.directions.contains(&Axis::X) && self.directions.contains(&Axis::Y)) {
            return Err(Error::param(
                "directions",
                "both leader coordinates must be measured by some follower",
            ));
        }
        if !(self.leader.period > 0.0 && self.leader.period.is_finite()) {
            return Err(Error::param("leader.period", "must be positive"));
        }
        Ok(())
    }

    /// `M = Σ vᵢvᵢᵀ`, diagonal.
    fn measurement_counts(&self) -> [f64; 2] {
        let mut counts = [0.0; 2];
        for d in &self.directions {
            counts[d.index()] += 1.0;
        }
        counts
    }
}

/// Formation constraints `Ax = b` with block rows `[−I … I …]` and
/// `b = d(cos 2π(i−1)/N, sin 2π(i−1)/N)`.
pub fn formation_constraints(followers: usize, radius: f64) -> (DMatrix<f64>, DVector<f64>) {
    let n = 2 * (followers + 1);
    let mut a = DMatrix::zeros(2 * followers, n);
    let mut b = DVector::zeros(2 * followers);
    for i in 0..followers {
        let theta = 2.0 * PI * i as f64 / followers as f64;
        for c in 0..2 {
            a[(2 * i + c, c)] = -1.0;
            a[(2 * i + c, 2 * (i + 1) + c)] = 1.0;
        }
        b[2 * i] = radius * theta.cos();
        b[2 * i + 1] = radius * theta.sin();
    }
    (a, b)
}

/// Random stream for the measurements taken at sample `k`.
pub fn measurement_stream(seed: u64, k: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(k);
    rng
}

/// One noisy reading per follower, `zⁱ = vᵢᵀx⁰ + σᵢ·ξ`, `ξ ~ N(0, 1)`.
pub fn sample_measurements<R: Rng>(spec: &FormationSpec, leader_pos: &[f64; 2], rng: &mut R) -> Vec<f64> {
    spec.directions
        .iter()
        .zip(&spec.sigmas)
        .map(|(dir, sigma)| {
            let xi: f64 = rng.sample(StandardNormal);
            leader_pos[dir.index()] + sigma * xi
        })
        .collect()
}

fn step_quadratic(
    spec: &FormationSpec,
    hessian: &DMatrix<f64>,
    measurements: &[f64],
    x_prev: &DVector<f64>,
    m: f64,
    l: f64,
) -> Result<QuadraticCost> {
    linalg::check_len(x_prev, spec.dim(), "regularization anchor")?;
    if measurements.len() != spec.directions.len() {
        return Err(Error::DimensionMismatch {
            context: "measurements",
            expected: spec.directions.len(),
            found: measurements.len(),
        });
    }
    let mut q = x_prev * (-spec.lambda);
    for (dir, z) in spec.directions.iter().zip(measurements) {
        q[dir.index()] -= z;
    }
    QuadraticCost::with_bounds(hessian.clone(), q, m, l)
}

fn step_hessian(spec: &FormationSpec) -> DMatrix<f64> {
    let mut h = DMatrix::identity(spec.dim(), spec.dim()) * spec.lambda;
    let counts = spec.measurement_counts();
    h[(0, 0)] += counts[0];
    h[(1, 1)] += counts[1];
    h
}

/// `f(x) = Σ ½(zⁱ − vᵢᵀx⁰)² + (λ/2)‖x − x_prev‖²` and `g = ι_{Ax=b}`.
pub fn build_step_cost(
    spec: &FormationSpec,
    measurements: &[f64],
    x_prev: &DVector<f64>,
) -> Result<(QuadraticCost, AffineIndicator)> {
    let h = step_hessian(spec);
    let (m, l) = linalg::extreme_eigenvalues(&h);
    let cost = step_quadratic(spec, &h, measurements, x_prev, m, l)?;
    let (a, b) = formation_constraints(spec.followers, spec.radius);
    Ok((cost, AffineIndicator::new(a, b)?))
}

/// Exact minimizer of `φ` over `{Ax = b}` via one KKT solve.
pub fn oracle_solution(cost: &QuadraticCost, a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    linalg::solve_kkt(cost.hessian_matrix(), cost.linear_term(), a, b)
}

/// Sampled cost of one step together with its time derivative.
#[derive(Debug, Clone)]
pub struct SampledCost {
    pub cost: QuadraticCost,
    pub drift: Option<DVector<f64>>,
}

impl SmoothCost for SampledCost {
    fn dim(&self) -> usize {
        self.cost.dim()
    }
    fn gradient(&self, x: &DVector<f64>, _t: f64) -> DVector<f64> {
        self.cost.grad(x)
    }
    fn hessian(&self, _x: &DVector<f64>, _t: f64) -> DMatrix<f64> {
        self.cost.hessian_matrix().clone()
    }
    fn gradient_time(&self, _x: &DVector<f64>, _t: f64) -> Option<DVector<f64>> {
        self.drift.clone()
    }
    fn prox(&self, v: &DVector<f64>, _t: f64, rho: f64) -> Result<DVector<f64>> {
        crate::quadratic::prox_quadratic(&self.cost, v, rho)
    }
    fn has_exact_prox(&self) -> bool {
        true
    }
    fn value(&self, x: &DVector<f64>, _t: f64) -> Option<f64> {
        Some(self.cost.eval(x))
    }
    fn strong_convexity(&self) -> f64 {
        self.cost.m()
    }
    fn smoothness(&self) -> f64 {
        self.cost.l()
    }
}

/// A formation instance with the constraint factorization and Hessian cached.
#[derive(Debug, Clone)]
pub struct FormationProblem {
    spec: FormationSpec,
    constraint: Arc<AffineIndicator>,
    hessian: DMatrix<f64>,
    m: f64,
    l: f64,
}

impl FormationProblem {
    pub fn new(spec: FormationSpec) -> Result<Self> {
        spec.validate()?;
        let (a, b) = formation_constraints(spec.followers, spec.radius);
        let constraint = Arc::new(AffineIndicator::new(a, b)?);
        let hessian = step_hessian(&spec);
        let (m, l) = linalg::extreme_eigenvalues(&hessian);
        Ok(Self {
            spec,
            constraint,
            hessian,
            m,
            l,
        })
    }

    pub fn spec(&self) -> &FormationSpec {
        &self.spec
    }

    pub fn constraint(&self) -> &Arc<AffineIndicator> {
        &self.constraint
    }

    /// `(m, L)` of every step cost; the Hessian does not depend on the data.
    pub fn moduli(&self) -> (f64, f64) {
        (self.m, self.l)
    }

    /// Bounds from the leader motion: `C₀ ≥ ‖M ẋ⁰‖`, `C₃ ≥ ‖M ẍ⁰‖`, `C₁ = C₂ = 0`.
    /// The anchor displacement is trajectory dependent and not included.
    pub fn derivative_bounds(&self) -> DerivativeBounds {
        let counts = self.spec.measurement_counts();
        let (vel, acc) = self.spec.leader.rate_bounds();
        let c0 = (counts[0] * vel[0]).hypot(counts[1] * vel[1]);
        let c3 = (counts[0] * acc[0]).hypot(counts[1] * acc[1]);
        DerivativeBounds {
            c0,
            c1: 0.0,
            c2: 0.0,
            c3,
        }
    }

    /// Feasible configuration with the leader at `center`.
    pub fn formation_at(&self, center: &[f64; 2]) -> DVector<f64> {
        let mut x = DVector::zeros(self.spec.dim());
        x[0] = center[0];
        x[1] = center[1];
        let b = self.constraint.rhs();
        for i in 0..self.spec.followers {
            x[2 * (i + 1)] = center[0] + b[2 * i];
            x[2 * (i + 1) + 1] = center[1] + b[2 * i + 1];
        }
        x
    }

    pub fn step_cost(&self, measurements: &[f64], x_prev: &DVector<f64>) -> Result<QuadraticCost> {
        step_quadratic(&self.spec, &self.hessian, measurements, x_prev, self.m, self.l)
    }

    pub fn measure(&self, k: u64, t: f64) -> Vec<f64> {
        let mut rng = measurement_stream(self.spec.seed, k);
        sample_measurements(&self.spec, &self.spec.leader.position(t), &mut rng)
    }

    /// `∇ₜₓf` of the step cost at `t_k` whose anchor was `anchor` while the
    /// next anchor is `x_k`: the noiseless measurement rate `−M ẋ⁰(t_k)` on
    /// the leader block plus the anchor displacement `−λ(x_k − anchor)/T_s`.
    pub fn gradient_drift(&self, t_k: f64, x_k: &DVector<f64>, anchor: &DVector<f64>, ts: f64) -> DVector<f64> {
        let mut d = (x_k - anchor) * (-self.spec.lambda / ts);
        let counts = self.spec.measurement_counts();
        let vel = self.spec.leader.velocity(t_k);
        d[0] -= counts[0] * vel[0];
        d[1] -= counts[1] * vel[1];
        d
    }

    pub fn oracle(&self, cost: &QuadraticCost) -> Result<DVector<f64>> {
        oracle_solution(cost, self.constraint.matrix(), self.constraint.rhs())
    }
}

/// Number of samples in `duration` at period `ts`, rounded down.
pub fn step_count(duration: f64, ts: f64) -> usize {
    ((duration / ts) * (1.0 + 1e-12)).floor() as usize
}

/// Runs the online solver on the formation problem for `duration` seconds.
///
/// At each sample the fresh cost is anchored at the solver's previous iterate,
/// and the exact minimizer of the same instance defines the tracking error.
pub fn run_benchmark(spec: &FormationSpec, cfg: &PCConfig, duration: f64) -> Result<TrajectoryRecord> {
    cfg.validate()?;
    let problem = FormationProblem::new(spec.clone())?;
    let steps = step_count(duration, cfg.ts);
    let g = problem.constraint().clone();

    let x0 = problem.formation_at(&spec.leader.position(0.0));
    let mut anchor = x0.clone();
    let mut cost = problem.step_cost(&problem.measure(0, 0.0), &anchor)?;
    let mut record = TrajectoryRecord::with_capacity(duration, steps);
    record.push(0.0, x0.clone(), problem.oracle(&cost)?);

    let mut prev_cost: Option<QuadraticCost> = None;
    let mut state = OnlineState::new(x0);
    for k in 0..steps {
        let t_k = k as f64 * cfg.ts;
        let t_next = (k + 1) as f64 * cfg.ts;
        let (rec, next, next_anchor, optimum) = (|| -> Result<_> {
            let now = SampledCost {
                drift: Some(problem.gradient_drift(t_k, &state.x, &anchor, cfg.ts)),
                cost: cost.clone(),
            };
            if cfg.derivative_mode == DerivativeMode::BackwardDifference {
                state.prev_grad = prev_cost.as_ref().map(|c| c.grad(&state.x));
            }
            let next = problem.step_cost(&problem.measure(k as u64 + 1, t_next), &state.x)?;
            let next_anchor = state.x.clone();
            let rec = pc_step(&mut state, &now, &next, g.as_ref(), cfg, t_k)?;
            let optimum = problem.oracle(&next)?;
            Ok((rec, next, next_anchor, optimum))
        })()
        .map_err(|e| e.at_step(k))?;
        record.push(rec.t, rec.x_corr.clone(), optimum);
        record.steps.push(rec);
        prev_cost = Some(std::mem::replace(&mut cost, next));
        anchor = next_anchor;
    }
    record.finish();
    Ok(record)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn constraints_for_one_and_two_followers() {
        let (a, b) = formation_constraints(1, 1.0);
        assert_eq!(b, DVector::from_vec(vec![1.0, 0.0]));
        assert_eq!(
            a,
            DMatrix::from_row_slice(2, 4, &[-1.0, 0.0, 1.0, 0.0, 0.0, -1.0, 0.0, 1.0])
        );
        let (_, b) = formation_constraints(2, 1.0);
        assert_relative_eq!(b, DVector::from_vec(vec![1.0, 0.0, -1.0, 0.0]), epsilon = 1e-15);
    }

    #[test]
    fn leader_defaults() {
        let l = LissajousSpec::default();
        let p0 = l.position(0.0);
        assert_eq!(p0[0], 0.0);
        assert_relative_eq!(p0[1], 3.0, epsilon = 1e-15);
        let p1 = l.position(40.0);
        assert_relative_eq!(p1[0], p0[0], epsilon = 1e-12);
        assert_relative_eq!(p1[1], p0[1], epsilon = 1e-12);
        for i in 0..4000 {
            let p = l.position(i as f64 * 0.01);
            assert!(p[0].abs() <= 3.0 && p[1].abs() <= 3.0);
        }
    }

    #[test]
    fn velocity_matches_finite_difference() {
        let l = LissajousSpec::default();
        for t in [0.0, 3.3, 17.1] {
            let h = 1e-6;
            let (p, m) = (l.position(t + h), l.position(t - h));
            let v = l.velocity(t);
            assert_relative_eq!((p[0] - m[0]) / (2.0 * h), v[0], epsilon = 1e-7);
            assert_relative_eq!((p[1] - m[1]) / (2.0 * h), v[1], epsilon = 1e-7);
        }
    }

    #[test]
    fn noiseless_measurements() {
        let mut spec = FormationSpec::paper_defaults(1);
        spec.sigmas = vec![0.0; 10];
        let z = sample_measurements(&spec, &[2.0, 5.0], &mut measurement_stream(1, 0));
        assert_eq!(&z[..6], &[2.0; 6]);
        assert_eq!(&z[6..], &[5.0; 4]);
    }

    #[test]
    fn measurement_noise_has_declared_spread() {
        let spec = FormationSpec {
            followers: 1,
            radius: 1.0,
            lambda: 1.0,
            sigmas: vec![0.1],
            directions: vec![Axis::X],
            leader: LissajousSpec::default(),
            seed: 99,
        };
        let n = 100_000;
        let xs: Vec<f64> = (0..n)
            .map(|k| sample_measurements(&spec, &[1.0, 0.0], &mut measurement_stream(99, k))[0])
            .collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let std = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0)).sqrt();
        assert!((mean - 1.0).abs() < 0.002, "mean {mean}");
        assert!((0.099..=0.101).contains(&std), "std {std}");
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let spec = FormationSpec::paper_defaults(5);
        let a = sample_measurements(&spec, &[0.0, 0.0], &mut measurement_stream(5, 3));
        let b = sample_measurements(&spec, &[0.0, 0.0], &mut measurement_stream(5, 3));
        let c = sample_measurements(&spec, &[0.0, 0.0], &mut measurement_stream(5, 4));
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn paper_default_moduli() {
        let p = FormationProblem::new(FormationSpec::paper_defaults(0)).unwrap();
        assert_eq!(p.moduli(), (10.0, 16.0));
        let (cost, _) = build_step_cost(p.spec(), &[0.0; 10], &DVector::zeros(22)).unwrap();
        assert_eq!(cost.hessian_matrix()[(0, 0)], 16.0);
        assert_eq!(cost.hessian_matrix()[(1, 1)], 14.0);
        assert_eq!(cost.hessian_matrix()[(5, 5)], 10.0);
    }

    #[test]
    fn step_cost_without_measurement_mismatch_is_pure_regularizer() {
        // Leader exactly where it is measured: only the regularizer pulls.
        let spec = FormationSpec {
            followers: 1,
            radius: 1.0,
            lambda: 2.0,
            sigmas: vec![0.0],
            directions: vec![Axis::X],
            leader: LissajousSpec::default(),
            seed: 0,
        };
        let x_prev = DVector::from_vec(vec![1.0, 2.0, 3.0, 4.0]);
        let (cost, _) = build_step_cost(&spec, &[1.0], &x_prev).unwrap();
        assert_eq!(cost.grad(&x_prev), DVector::zeros(4));
        // Measuring 1.5 instead: leader x-residual −(1.5 − 1) only.
        let (cost, _) = build_step_cost(&spec, &[1.5], &x_prev).unwrap();
        assert_eq!(cost.grad(&x_prev), DVector::from_vec(vec![-0.5, 0.0, 0.0, 0.0]));
        assert_relative_eq!(cost.minimizer().unwrap()[1], 2.0, epsilon = 1e-14);
    }

    #[test]
    fn spec_validation() {
        let mut s = FormationSpec::paper_defaults(0);
        s.directions = vec![Axis::X; 10];
        assert!(s.validate().is_err());
        let mut s = FormationSpec::paper_defaults(0);
        s.sigmas.pop();
        assert!(s.validate().is_err());
        let mut s = FormationSpec::paper_defaults(0);
        s.leader.period = 0.0;
        assert!(s.validate().is_err());
    }

    #[test]
    fn step_count_rounds_down() {
        assert_eq!(step_count(100.0, 0.1), 1000);
        assert_eq!(step_count(100.0, 0.05), 2000);
        assert_eq!(step_count(100.0, 0.3), 333);
        assert_eq!(step_count(1.0, 0.4), 2);
    }
}
