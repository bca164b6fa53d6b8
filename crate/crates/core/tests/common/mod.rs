//! Independent numerical oracles shared by the integration tests.
#![allow(dead_code)]

use faer::{c64, Mat, MatRef};
use proptest::test_runner::Config;
use rand::Rng;
use rmtlab::seeding::rng_from_seed;

/// Eigenvalues of a real symmetric matrix by cyclic Jacobi rotations, ascending.
pub fn jacobi_symmetric(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let n = a.len();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        let diag: f64 = (0..n).map(|i| a[i][i] * a[i][i]).sum();
        if off <= 1e-30 * diag.max(1e-300) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut vals: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    vals.sort_by(f64::total_cmp);
    vals
}

/// Eigenvalues of a Hermitian matrix through its real embedding
/// `[[Re, -Im], [Im, Re]]`, which doubles every eigenvalue.
pub fn hermitian_oracle(h: MatRef<'_, c64>) -> Vec<f64> {
    let n = h.nrows();
    let mut r = vec![vec![0.0; 2 * n]; 2 * n];
    for i in 0..n {
        for j in 0..n {
            let z = h[(i, j)];
            r[i][j] = z.re;
            r[i + n][j + n] = z.re;
            r[i][j + n] = -z.im;
            r[i + n][j] = z.im;
        }
    }
    jacobi_symmetric(r).into_iter().step_by(2).collect()
}

/// Singular values of `m`, ascending, via the oracle on `M M*`.
pub fn singular_values_oracle(m: MatRef<'_, c64>) -> Vec<f64> {
    let g = if m.nrows() <= m.ncols() { m * m.adjoint() } else { m.adjoint() * m };
    hermitian_oracle(g.as_ref()).into_iter().map(|x| x.max(0.0).sqrt()).collect()
}

pub fn random_complex(rows: usize, cols: usize, seed: u64) -> Mat<c64> {
    let mut rng = rng_from_seed(seed);
    Mat::from_fn(rows, cols, |_, _| {
        c64::new(2.0 * rng.random::<f64>() - 1.0, 2.0 * rng.random::<f64>() - 1.0)
    })
}

pub fn random_hermitian(n: usize, seed: u64) -> Mat<c64> {
    let g = random_complex(n, n, seed);
    Mat::from_fn(n, n, |i, j| (g[(i, j)] + g[(j, i)].conj()) * 0.5)
}

/// Haar-ish unitary from the QR factor of a random complex matrix.
pub fn random_unitary(n: usize, seed: u64) -> Mat<c64> {
    random_complex(n, n, seed).qr().compute_thin_Q()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// One-sample Kolmogorov–Smirnov distance to a continuous CDF.
pub fn ks_distance(mut xs: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter().enumerate().fold(0.0, |d: f64, (i, &x)| {
        let f = cdf(x);
        d.max((f - i as f64 / n).abs()).max(((i + 1) as f64 / n - f).abs())
    })
}

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-x / std::f64::consts::SQRT_2)
}

/// Proptest settings without on-disk failure persistence.
pub fn cases(n: u32) -> Config {
    Config { cases: n, failure_persistence: None, ..Config::default() }
}
