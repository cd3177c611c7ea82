//! Oracles shared by the integration tests. Nothing here calls into the
//! library's construction code.
#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::Rng;

/// Block-diagonal `[[0, 1], [-1, 0]]`.
pub fn omega_std(n: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    for k in (0..n).step_by(2) {
        m[(k, k + 1)] = 1.0;
        m[(k + 1, k)] = -1.0;
    }
    m
}

/// Random nondegenerate antisymmetric matrix and SPD matrix of size `n`.
pub fn random_pair<R: Rng>(rng: &mut R, n: usize) -> (DMatrix<f64>, DMatrix<f64>) {
    loop {
        let m = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let c = rng.random_range(0.5..2.0);
        let w = &m - m.transpose() + omega_std(n) * c;
        let sv = w.singular_values();
        if sv.iter().cloned().fold(f64::INFINITY, f64::min) < 0.1 {
            continue;
        }
        let l = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let g0 = &l * l.transpose() + DMatrix::identity(n, n) * 0.5;
        return (w, g0);
    }
}

/// `J` for the pair `(W, G0)` through a Cholesky factor and the Newton
/// iteration `U <- (U + U^{-T}) / 2` for the orthogonal polar factor.
pub fn polar_oracle(w: &DMatrix<f64>, g0: &DMatrix<f64>) -> DMatrix<f64> {
    let n = w.nrows();
    let l = g0.clone().cholesky().expect("SPD").l();
    let l_inv = l.clone().try_inverse().expect("invertible");
    // L^T A L^{-T} with A = -G0^{-1} W simplifies to -L^{-1} W L^{-T}
    let b = -(&l_inv * w * l_inv.transpose());
    let mut u = b;
    for _ in 0..100 {
        let next = (&u + u.clone().try_inverse().expect("invertible").transpose()) * 0.5;
        let done = (&next - &u).norm() < 1e-15 * n as f64;
        u = next;
        if done {
            break;
        }
    }
    l_inv.transpose() * u * l.transpose()
}

/// Round sphere of radius 1/2 in the chart `w = z2 / z1`.
pub fn fubini_study_factor(w: &[f64]) -> f64 {
    let r2: f64 = w.iter().map(|x| x * x).sum();
    1.0 / ((1.0 + r2) * (1.0 + r2))
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |a, v| a.max(v.abs()))
}
