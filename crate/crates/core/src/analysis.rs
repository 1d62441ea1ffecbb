//! Closed-form convergence conditions and error bounds of the
//! prediction-correction scheme, and an empirical check of the Lipschitz
//! continuity of the tilted solution mapping.

use nalgebra::DVector;

use crate::costs::{DerivativeBounds, NonsmoothCost, SmoothCost};
use crate::error::{Error, Result};
use crate::splitting::{balanced_step, fb_step, fixed_point_residual, Method, RateEstimate, SplitConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// Only `C₀` is assumed; the recursion is affine in the error.
    Linear,
    /// Third-order bounds `C₁..C₃` are assumed as well.
    Quadratic,
}

/// Error recursion `e_{k+1} ≤ η₂e_k² + η₁e_k + η₀`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EtaCoefficients {
    pub eta2: f64,
    pub eta1: f64,
    pub eta0: f64,
    pub regime: Regime,
}

impl EtaCoefficients {
    pub fn bound(&self, e: f64) -> f64 {
        self.eta2 * e * e + self.eta1 * e + self.eta0
    }

    /// `η₀/(1 − η₁)` when `η₁ < 1`.
    pub fn asymptote(&self) -> Option<f64> {
        (self.eta1 < 1.0).then(|| self.eta0 / (1.0 - self.eta1))
    }
}

/// Multi-step contraction factors `ζ(P)`, `ζ(C)`, `ζ(P+C)` and the problem data
/// the bounds depend on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeInputs {
    pub zeta_p: f64,
    pub zeta_c: f64,
    pub zeta_pc: f64,
    pub m: f64,
    pub l: f64,
    pub bounds: DerivativeBounds,
    pub ts: f64,
    pub tau: f64,
}

impl RegimeInputs {
    pub fn from_rate(
        rate: &RateEstimate,
        p: usize,
        c: usize,
        m: f64,
        l: f64,
        bounds: DerivativeBounds,
        ts: f64,
        tau: f64,
    ) -> Result<Self> {
        if !(tau > 0.0 && tau < 1.0) {
            return Err(Error::param("tau", format!("must lie in (0, 1), got {tau}")));
        }
        Ok(Self {
            zeta_p: rate.horizon(p),
            zeta_c: rate.horizon(c),
            zeta_pc: rate.horizon(p + c),
            m,
            l,
            bounds,
            ts,
            tau,
        })
    }
}

/// Left-hand side of the linear-convergence condition
/// `ζ(C)[ζ(P) + (ζ(P) + 1)·2L/m] < 1` and whether it holds.
pub fn theorem1_condition(zeta_p: f64, zeta_c: f64, m: f64, l: f64) -> (f64, bool) {
    let lhs = zeta_c * (zeta_p + (zeta_p + 1.0) * 2.0 * l / m);
    (lhs, lhs < 1.0)
}

/// η-coefficients when only `‖∇ₜₓf‖ ≤ C₀` is assumed.
pub fn eta_linear(zeta_p: f64, zeta_c: f64, m: f64, l: f64, c0: f64, ts: f64) -> EtaCoefficients {
    let (eta1, _) = theorem1_condition(zeta_p, zeta_c, m, l);
    let eta0 = zeta_c * (2.0 * (zeta_p + 1.0) * (1.0 + l / m) + zeta_p) * c0 * ts / m;
    EtaCoefficients {
        eta2: 0.0,
        eta1,
        eta0,
        regime: Regime::Linear,
    }
}

/// `C₀C₁/m² + C₂/m`, the sensitivity of the Taylor error to the tracking error.
fn taylor_sensitivity(m: f64, b: &DerivativeBounds) -> f64 {
    b.c0 * b.c1 / (m * m) + b.c2 / m
}

/// η-coefficients under the third-order derivative bounds.
pub fn eta_quadratic(zeta_p: f64, zeta_c: f64, m: f64, b: &DerivativeBounds, ts: f64) -> EtaCoefficients {
    let eta2 = zeta_c * (zeta_p + 1.0) * b.c1 / (2.0 * m);
    let eta1 = zeta_c * (zeta_p + ts * (zeta_p + 1.0) * taylor_sensitivity(m, b));
    let curvature = b.c0 * b.c0 * b.c1 / m.powi(3) + 2.0 * b.c0 * b.c2 / (m * m) + b.c3 / m;
    let eta0 = zeta_c * (zeta_p * ts * b.c0 / m + (zeta_p + 1.0) * 0.5 * ts * ts * curvature);
    EtaCoefficients {
        eta2,
        eta1,
        eta0,
        regime: Regime::Quadratic,
    }
}

/// Upper bound `T̄_s` on the sampling period in the quadratic regime.
///
/// Returns `+∞` when the Taylor error does not depend on the tracking error
/// (`C₀C₁/m² + C₂/m = 0`) or `ζ(C) = 0`.
pub fn ts_bar(tau: f64, zeta_p: f64, zeta_c: f64, zeta_pc: f64, m: f64, b: &DerivativeBounds) -> Result<f64> {
    if zeta_pc >= tau {
        return Err(Error::Infeasible(format!("ζ(P+C) = {zeta_pc} is not below τ = {tau}")));
    }
    let denom = zeta_c * (zeta_p + 1.0) * taylor_sensitivity(m, b);
    if denom == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok((tau - zeta_pc) / denom)
}

/// Radius `R̄ = (2m/C₁)(C₀C₁/m² + C₂/m)(T̄_s − T_s)` of the quadratic-regime
/// convergence region. `+∞` when `C₁ = 0` or `T̄_s = +∞`; an error when `T_s > T̄_s`.
pub fn r_bar(ts_bar_val: f64, ts: f64, m: f64, b: &DerivativeBounds) -> Result<f64> {
    // T_s = T̄_s is the boundary of the region and evaluates to zero.
    if !(ts <= ts_bar_val) {
        return Err(Error::Infeasible(format!("T_s = {ts} is not below T̄_s = {ts_bar_val}")));
    }
    if b.c1 == 0.0 || ts_bar_val.is_infinite() {
        return Ok(f64::INFINITY);
    }
    Ok(2.0 * m / b.c1 * taylor_sensitivity(m, b) * (ts_bar_val - ts))
}

/// Iterates `e_{k+1} = η₂e_k² + η₁e_k + η₀` from `e0`; returns `steps + 1` values.
pub fn error_envelope(e0: f64, etas: &EtaCoefficients, steps: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(steps + 1);
    let mut e = e0;
    out.push(e);
    for _ in 0..steps {
        e = etas.bound(e);
        out.push(e);
    }
    out
}

/// Closed form `τᵏe₀ + η₀(1 − τᵏ)/(1 − τ)` of the contracted envelope.
pub fn contracted_envelope(e0: f64, tau: f64, eta0: f64, k: usize) -> f64 {
    let tk = tau.powi(k as i32);
    tk * e0 + eta0 * (1.0 - tk) / (1.0 - tau)
}

/// Everything the bounds say about one configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub rate: RateEstimate,
    pub zeta_p: f64,
    pub zeta_c: f64,
    pub zeta_pc: f64,
    pub theorem1_lhs: f64,
    pub theorem1_holds: bool,
    pub linear: EtaCoefficients,
    pub quadratic: EtaCoefficients,
    /// `Err` carries the reason the quadratic-regime bounds are infeasible.
    pub ts_bar: std::result::Result<f64, String>,
    pub r_bar: std::result::Result<f64, String>,
    /// `η₀/(1 − η₁)` of the linear regime, when `η₁ < 1`.
    pub asymptote_estimate: Option<f64>,
    /// Same for the quadratic regime.
    pub asymptote_quadratic: Option<f64>,
}

/// Evaluates every condition and bound for a splitting configuration.
pub fn convergence_report(
    split: &SplitConfig,
    p: usize,
    c: usize,
    m: f64,
    l: f64,
    bounds: DerivativeBounds,
    ts: f64,
    tau: f64,
) -> Result<ConvergenceReport> {
    let rate = split.rate(m, l)?;
    let inp = RegimeInputs::from_rate(&rate, p, c, m, l, bounds, ts, tau)?;
    let (lhs, holds) = theorem1_condition(inp.zeta_p, inp.zeta_c, m, l);
    let linear = eta_linear(inp.zeta_p, inp.zeta_c, m, l, bounds.c0, ts);
    let quadratic = eta_quadratic(inp.zeta_p, inp.zeta_c, m, &bounds, ts);
    let tsb = ts_bar(tau, inp.zeta_p, inp.zeta_c, inp.zeta_pc, m, &bounds).map_err(|e| e.to_string());
    let rb = match &tsb {
        Ok(v) => r_bar(*v, ts, m, &bounds).map_err(|e| e.to_string()),
        Err(e) => Err(e.clone()),
    };
    Ok(ConvergenceReport {
        rate,
        zeta_p: inp.zeta_p,
        zeta_c: inp.zeta_c,
        zeta_pc: inp.zeta_pc,
        theorem1_lhs: lhs,
        theorem1_holds: holds,
        asymptote_estimate: linear.asymptote(),
        asymptote_quadratic: quadratic.asymptote(),
        linear,
        quadratic,
        ts_bar: tsb,
        r_bar: rb,
    })
}

/// Iterations used to solve each tilted problem.
pub const TILT_ORACLE_ITERATIONS: usize = 10_000;

/// Outcome of [`solution_map_lipschitz_test`].
#[derive(Debug, Clone, PartialEq)]
pub struct LipschitzReport {
    /// `1/m`
    pub bound: f64,
    pub max_ratio: f64,
    pub pairs_checked: usize,
    pub pairs_skipped: usize,
    pub violations: usize,
    /// Largest fixed-point residual among the tilted solutions.
    pub max_oracle_residual: f64,
    /// Set when some tilted problem was not solved to `oracle_tolerance`.
    pub inconclusive: bool,
}

impl LipschitzReport {
    pub fn holds(&self) -> bool {
        !self.inconclusive && self.violations == 0
    }
}

/// Solves `min φ(y) + γ(y) − ⟨p, y⟩` with forward-backward iterations.
pub fn tilted_solution(
    smooth: &dyn SmoothCost,
    t: f64,
    nonsmooth: &dyn NonsmoothCost,
    tilt: &DVector<f64>,
    iterations: usize,
) -> Result<(DVector<f64>, f64)> {
    let tilted = Tilted { inner: smooth, tilt };
    let rho = balanced_step(Method::ForwardBackward, smooth.strong_convexity(), smooth.smoothness())?;
    let mut y = DVector::zeros(smooth.dim());
    for _ in 0..iterations {
        y = fb_step(&y, &tilted, t, nonsmooth, rho)?;
    }
    let res = fixed_point_residual(&y, &tilted, t, nonsmooth, rho)?;
    Ok((y, res))
}

struct Tilted<'a> {
    inner: &'a dyn SmoothCost,
    tilt: &'a DVector<f64>,
}

impl SmoothCost for Tilted<'_> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn gradient(&self, x: &DVector<f64>, t: f64) -> DVector<f64> {
        self.inner.gradient(x, t) - self.tilt
    }
    fn hessian(&self, x: &DVector<f64>, t: f64) -> nalgebra::DMatrix<f64> {
        self.inner.hessian(x, t)
    }
    fn strong_convexity(&self) -> f64 {
        self.inner.strong_convexity()
    }
    fn smoothness(&self) -> f64 {
        self.inner.smoothness()
    }
}

/// Checks `‖S(p) − S(q)‖ ≤ ‖p − q‖/m + tolerance` over all pairs of `tilts`,
/// where `S(p)` solves `∇φ(y) + ∂γ(y) ∋ p`.
pub fn solution_map_lipschitz_test(
    smooth: &dyn SmoothCost,
    t: f64,
    nonsmooth: &dyn NonsmoothCost,
    tilts: &[DVector<f64>],
    tolerance: f64,
    oracle_tolerance: f64,
) -> Result<LipschitzReport> {
    let m = smooth.strong_convexity();
    let mut sols = Vec::with_capacity(tilts.len());
    let mut max_res: f64 = 0.0;
    for p in tilts {
        let (y, res) = tilted_solution(smooth, t, nonsmooth, p, TILT_ORACLE_ITERATIONS)?;
        max_res = max_res.max(res);
        sols.push(y);
    }
    let mut report = LipschitzReport {
        bound: 1.0 / m,
        max_ratio: 0.0,
        pairs_checked: 0,
        pairs_skipped: 0,
        violations: 0,
        max_oracle_residual: max_res,
        inconclusive: !(max_res <= oracle_tolerance),
    };
    for i in 0..tilts.len() {
        for j in (i + 1)..tilts.len() {
            let dp = (&tilts[i] - &tilts[j]).norm();
            if dp == 0.0 {
                report.pairs_skipped += 1;
                continue;
            }
            let ds = (&sols[i] - &sols[j]).norm();
            report.pairs_checked += 1;
            report.max_ratio = report.max_ratio.max(ds / dp);
            if ds > dp / m + tolerance {
                report.violations += 1;
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prox::{L1Norm, Zero};
    use crate::quadratic::QuadraticCost;
    use crate::splitting::{contraction_dr, contraction_fb};
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;

    fn bounds(c0: f64, c1: f64, c2: f64, c3: f64) -> DerivativeBounds {
        DerivativeBounds::new(c0, c1, c2, c3).unwrap()
    }

    #[test]
    fn theorem1_examples() {
        let exact = contraction_fb(1.0, 1.0, 1.0).unwrap();
        let (lhs, holds) = theorem1_condition(exact.horizon(1), exact.horizon(1), 1.0, 1.0);
        assert_eq!((lhs, holds), (0.0, true));

        let r = contraction_fb(2.0 / 3.0, 1.0, 2.0).unwrap();
        assert_relative_eq!(r.zeta, 1.0 / 3.0, epsilon = 1e-15);
        let (lhs, holds) = theorem1_condition(r.horizon(1), r.horizon(2), 1.0, 2.0);
        assert_relative_eq!(lhs, 17.0 / 27.0, epsilon = 1e-14);
        assert!(holds);

        for zp in [0.0, 0.3, 1.0] {
            let (lhs, holds) = theorem1_condition(zp, 1.0, 1.0, 3.0);
            assert!(lhs >= 6.0 && !holds);
        }
    }

    #[test]
    fn eta_linear_examples() {
        let e = eta_linear(0.4, 0.0, 1.0, 5.0, 3.0, 0.2);
        assert_eq!((e.eta2, e.eta1, e.eta0), (0.0, 0.0, 0.0));
        let e = eta_linear(1.0, 0.1, 1.0, 1.0, 1.0, 0.1);
        assert_relative_eq!(e.eta1, 0.5, epsilon = 1e-15);
        assert_relative_eq!(e.eta0, 0.09, epsilon = 1e-15);
        assert_eq!(e.regime, Regime::Linear);
        let small = eta_linear(1.0, 0.1, 1.0, 1.0, 1.0, 1e-6);
        assert_eq!(small.eta1, e.eta1);
        assert_relative_eq!(small.eta0, 0.9e-6, epsilon = 1e-18);
    }

    #[test]
    fn eta_linear_slope_equals_theorem1_lhs() {
        for (zp, zc, m, l) in [(0.3, 0.2, 1.0, 4.0), (1.7, 0.01, 2.0, 2.5), (0.0, 0.9, 0.5, 9.0)] {
            assert_eq!(
                eta_linear(zp, zc, m, l, 1.0, 0.1).eta1,
                theorem1_condition(zp, zc, m, l).0
            );
        }
    }

    #[test]
    fn eta_quadratic_examples() {
        let e = eta_quadratic(0.5, 0.5, 1.0, &bounds(1.0, 1.0, 1.0, 1.0), 0.1);
        assert_relative_eq!(e.eta2, 0.375, epsilon = 1e-15);
        assert_relative_eq!(e.eta1, 0.4, epsilon = 1e-15);
        assert_relative_eq!(e.eta0, 0.04, epsilon = 1e-15);

        let e = eta_quadratic(0.3, 0.2, 2.0, &bounds(1.5, 0.0, 0.0, 0.0), 0.1);
        assert_eq!(e.eta2, 0.0);
        assert_relative_eq!(e.eta1, 0.2 * 0.3, epsilon = 1e-15);
        assert_relative_eq!(e.eta0, 0.2 * 0.3 * 0.1 * 1.5 / 2.0, epsilon = 1e-15);

        let z = eta_quadratic(0.5, 0.0, 1.0, &bounds(1.0, 1.0, 1.0, 1.0), 0.1);
        assert_eq!((z.eta2, z.eta1, z.eta0), (0.0, 0.0, 0.0));
    }

    #[test]
    fn ts_bar_examples() {
        let b = bounds(1.0, 1.0, 1.0, 0.0);
        assert_relative_eq!(ts_bar(0.5, 0.5, 0.2, 0.1, 1.0, &b).unwrap(), 2.0 / 3.0, epsilon = 1e-14);
        assert!(matches!(ts_bar(0.1, 0.5, 0.2, 0.1, 1.0, &b), Err(Error::Infeasible(_))));
        assert_eq!(
            ts_bar(0.5, 0.5, 0.2, 0.1, 1.0, &bounds(1.0, 0.0, 0.0, 1.0)).unwrap(),
            f64::INFINITY
        );
    }

    #[test]
    fn r_bar_examples() {
        let b = bounds(1.0, 1.0, 1.0, 0.0);
        assert_relative_eq!(r_bar(2.0 / 3.0, 1.0 / 6.0, 1.0, &b).unwrap(), 2.0, epsilon = 1e-14);
        assert!(r_bar(0.5, 0.5 - 1e-12, 1.0, &b).unwrap() < 1e-10);
        assert_eq!(r_bar(0.5, 0.5, 1.0, &b).unwrap(), 0.0);
        assert!(matches!(r_bar(0.5, 0.6, 1.0, &b), Err(Error::Infeasible(_))));
        assert_eq!(
            r_bar(0.5, 0.1, 1.0, &bounds(1.0, 0.0, 1.0, 0.0)).unwrap(),
            f64::INFINITY
        );
    }

    #[test]
    fn r_bar_matches_eta_form() {
        // R̄ = (τ − η₁)/η₂ with η₁, η₂ of the quadratic regime, for FB where ζ(P+C) = ζ(P)ζ(C).
        let b = bounds(0.7, 1.3, 0.4, 2.0);
        let r = contraction_fb(0.25, 1.0, 4.0).unwrap();
        let (zp, zc, zpc) = (r.horizon(2), r.horizon(3), r.horizon(5));
        let tau = 0.5;
        let tsb = ts_bar(tau, zp, zc, zpc, 1.0, &b).unwrap();
        let ts = 0.3 * tsb;
        let e = eta_quadratic(zp, zc, 1.0, &b, ts);
        assert_relative_eq!(
            r_bar(tsb, ts, 1.0, &b).unwrap(),
            (tau - e.eta1) / e.eta2,
            epsilon = 1e-10
        );
    }

    #[test]
    fn envelope_examples() {
        let e = EtaCoefficients {
            eta2: 0.0,
            eta1: 0.5,
            eta0: 0.1,
            regime: Regime::Linear,
        };
        let env = error_envelope(1.0, &e, 60);
        assert_relative_eq!(env[1], 0.6, epsilon = 1e-15);
        assert_relative_eq!(env[2], 0.4, epsilon = 1e-15);
        assert_relative_eq!(env[3], 0.3, epsilon = 1e-15);
        assert_relative_eq!(env[60], 0.2, epsilon = 1e-12);
        assert_relative_eq!(e.asymptote().unwrap(), 0.2, epsilon = 1e-15);
        for (k, v) in env.iter().enumerate() {
            assert_relative_eq!(*v, contracted_envelope(1.0, 0.5, 0.1, k), epsilon = 1e-14);
        }

        let zero = EtaCoefficients {
            eta2: 0.0,
            eta1: 0.0,
            eta0: 0.0,
            regime: Regime::Linear,
        };
        assert_eq!(error_envelope(3.0, &zero, 4), vec![3.0, 0.0, 0.0, 0.0, 0.0]);

        let q = EtaCoefficients {
            eta2: 1.0,
            eta1: 0.2,
            eta0: 0.01,
            regime: Regime::Quadratic,
        };
        let env = error_envelope(2.0, &q, 5);
        assert!(env.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(error_envelope(2.0, &q, 0), vec![2.0]);
    }

    #[test]
    fn report_for_exact_quadratic() {
        let split = SplitConfig::new(Method::ForwardBackward, 0.5).unwrap();
        let rep = convergence_report(&split, 1, 2, 2.0, 2.0, bounds(1.0, 0.0, 0.0, 0.0), 0.1, 0.5).unwrap();
        assert_eq!(rep.rate.zeta, 0.0);
        assert_eq!(rep.theorem1_lhs, 0.0);
        assert_eq!(rep.asymptote_estimate, Some(0.0));
    }

    #[test]
    fn report_marks_infeasible_quadratic_regime() {
        let split = SplitConfig::new(Method::DouglasRachford, 0.08).unwrap();
        let rep = convergence_report(&split, 0, 1, 10.0, 16.0, bounds(1.0, 1.0, 0.0, 0.0), 0.1, 0.1).unwrap();
        assert!(rep.ts_bar.is_err() && rep.r_bar.is_err());
        let dr = contraction_dr(0.08, 10.0, 16.0).unwrap();
        assert_eq!(rep.zeta_p, dr.prefactor);
    }

    #[test]
    fn lipschitz_tight_for_identity() {
        let phi = QuadraticCost::new(DMatrix::identity(1, 1), DVector::zeros(1)).unwrap();
        let tilts: Vec<_> = [-2.0, 0.5, 3.0].iter().map(|&v| DVector::from_element(1, v)).collect();
        let rep = solution_map_lipschitz_test(&phi, 0.0, &Zero, &tilts, 1e-9, 1e-10).unwrap();
        assert_relative_eq!(rep.max_ratio, 1.0, epsilon = 1e-9);
        assert!(rep.holds());
        assert_eq!(rep.pairs_checked, 3);
    }

    #[test]
    fn lipschitz_with_l1_and_repeated_tilt() {
        let phi = QuadraticCost::new(DMatrix::from_element(1, 1, 4.0), DVector::zeros(1)).unwrap();
        let tilts: Vec<_> = [-3.0, -0.5, 0.2, 0.2, 2.5, 7.0]
            .iter()
            .map(|&v| DVector::from_element(1, v))
            .collect();
        let rep = solution_map_lipschitz_test(&phi, 0.0, &L1Norm { weight: 1.0 }, &tilts, 1e-9, 1e-10).unwrap();
        assert!(rep.max_ratio <= 0.25 + 1e-9);
        assert_eq!(rep.pairs_skipped, 1);
        assert!(rep.holds());
    }
}
