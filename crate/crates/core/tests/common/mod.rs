#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use pcsplit::prox::L1Norm;
use pcsplit::splitting::fb_step;
use pcsplit::QuadraticCost;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform_vector(rng: &mut ChaCha8Rng, n: usize, half_width: f64) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.random_range(-half_width..half_width))
}

/// SPD matrix with smallest eigenvalue `m` and largest `l`.
pub fn spd_with_spectrum(rng: &mut ChaCha8Rng, n: usize, m: f64, l: f64) -> DMatrix<f64> {
    let mut eig: Vec<f64> = (0..n).map(|_| rng.random_range(m..=l)).collect();
    eig[0] = m;
    eig[n - 1] = l;
    let u = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0)).qr().q();
    let q = &u * DMatrix::from_diagonal(&DVector::from_vec(eig)) * u.transpose();
    (&q + q.transpose()) * 0.5
}

pub struct L1Instance {
    pub cost: QuadraticCost,
    pub g: L1Norm,
}

pub fn l1_instance(rng: &mut ChaCha8Rng, n: usize) -> L1Instance {
    let l: f64 = rng.random_range(1.0..10.0);
    let m = l * rng.random_range(0.05..=1.0);
    let q = spd_with_spectrum(rng, n, m, l);
    let lin = uniform_vector(rng, n, 3.0);
    L1Instance {
        cost: QuadraticCost::with_bounds(q, lin, m, l).unwrap(),
        g: L1Norm {
            weight: rng.random_range(0.1..1.0),
        },
    }
}

/// 10⁴ forward-backward iterations at `ρ = 2/(m + L)` from the origin.
pub fn fb_reference(inst: &L1Instance) -> DVector<f64> {
    let rho = 2.0 / (inst.cost.m() + inst.cost.l());
    let mut x = DVector::zeros(inst.cost.hessian_matrix().nrows());
    for _ in 0..10_000 {
        x = fb_step(&x, &inst.cost, 0.0, &inst.g, rho).unwrap();
    }
    x
}

/// Projection onto `{Ax = b}` through the normal equations, solved by LU.
pub fn project_affine(x: &DVector<f64>, a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let gram = a * a.transpose();
    let mult = gram.lu().solve(&(a * x - b)).unwrap();
    x - a.transpose() * mult
}
