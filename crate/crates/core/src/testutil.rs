//! Random instance generators and brute-force oracles for unit tests.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

pub fn random_vector<R: Rng>(rng: &mut R, n: usize, scale: f64) -> DVector<f64> {
    DVector::from_fn(n, |_, _| scale * rng.sample::<f64, _>(StandardNormal))
}

pub fn random_orthogonal<R: Rng>(rng: &mut R, n: usize) -> DMatrix<f64> {
    let g = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    g.qr().q()
}

/// SPD matrix with smallest eigenvalue `lo`, largest `hi`, the rest uniform in between.
pub fn random_spd<R: Rng>(rng: &mut R, n: usize, lo: f64, hi: f64) -> DMatrix<f64> {
    let u = random_orthogonal(rng, n);
    let mut eig: Vec<f64> = (0..n).map(|_| rng.random_range(lo..=hi)).collect();
    eig[0] = lo;
    if n > 1 {
        eig[n - 1] = hi;
    }
    let d = DMatrix::from_diagonal(&DVector::from_vec(eig));
    let q = &u * d * u.transpose();
    (&q + q.transpose()) * 0.5
}

/// Extreme eigenvalues of an SPD matrix by power iteration on `Q` and on `λ_max I − Q`.
pub fn power_iteration(q: &DMatrix<f64>) -> (f64, f64) {
    fn dominant(m: &DMatrix<f64>) -> f64 {
        let n = m.nrows();
        let mut v = DVector::from_fn(n, |i, _| 1.0 + 0.1 * i as f64);
        v /= v.norm();
        let mut lambda = 0.0;
        for _ in 0..50_000 {
            let w = m * &v;
            lambda = v.dot(&w);
            let norm = w.norm();
            if norm == 0.0 {
                return 0.0;
            }
            v = w / norm;
        }
        lambda
    }
    let hi = dominant(q);
    let shifted = DMatrix::identity(q.nrows(), q.nrows()) * hi - q;
    let lo = hi - dominant(&shifted);
    (lo, hi)
}
