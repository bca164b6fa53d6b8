mod common;

use common::*;
use faer::linalg::solvers::DenseSolveCore;
use faer::{c64, Mat};
use proptest::prelude::*;
use rmtlab::atoms::AtomDistribution;
use rmtlab::spectral::*;

fn data(rows: usize, cols: usize, seed: u64) -> DataMatrix {
    DataMatrix::from_mat(random_complex(rows, cols, seed)).unwrap()
}

proptest! {
    #![proptest_config(cases(128))]

    #[test]
    fn svd_invariants(p in 1usize..7, extra in 0usize..5, seed in any::<u64>()) {
        let m = data(p, p + extra, seed);
        let d = svd_full(&m).unwrap();
        let diag = d.diagnostics(&m);
        prop_assert!(diag.within(1e-8), "{diag:?}");
        prop_assert!(d.sigma.windows(2).all(|w| w[0] <= w[1]));
        for (s, l) in d.sigma.iter().zip(&d.lambda) {
            prop_assert!((s * s / m.n() as f64 - l).abs() <= 1e-12 * l.max(1.0));
        }
        let oracle = singular_values_oracle(m.entries());
        prop_assert!(max_abs_diff(&d.sigma, &oracle) < 1e-8);
    }

    #[test]
    fn svd_is_unitarily_invariant(p in 1usize..6, extra in 0usize..4, seed in any::<u64>()) {
        let n = p + extra;
        let m = random_complex(p, n, seed);
        let u = random_unitary(p, seed ^ 1);
        let v = random_unitary(n, seed ^ 2);
        let rotated = &u * &m * v.adjoint();
        let s1 = singular_values(m.as_ref()).unwrap();
        let s2 = singular_values(rotated.as_ref()).unwrap();
        prop_assert!(max_abs_diff(&s1, &s2) < 1e-10);
    }

    #[test]
    fn covariance_duality(p in 1usize..6, extra in 0usize..4, seed in any::<u64>()) {
        let m = data(p, p + extra, seed);
        let w = covariance(&m);
        let wc = companion_covariance(&m);
        let big = hermitian_oracle(w.as_ref());
        let small = hermitian_oracle(wc.as_ref());
        // The n - p smallest eigenvalues of W vanish; the rest are the companion's.
        prop_assert!(big[..extra].iter().all(|x| x.abs() < 1e-10));
        prop_assert!(max_abs_diff(&big[extra..], &small) < 1e-10);
        prop_assert!(max_abs_diff(&spectrum(&m).unwrap(), &small) < 1e-10);
        for i in 0..w.nrows() {
            for j in 0..w.ncols() {
                prop_assert!((w[(i, j)] - w[(j, i)].conj()).norm() == 0.0);
            }
        }
    }

    #[test]
    fn augmented_spectrum(p in 1usize..6, extra in 0usize..4, seed in any::<u64>()) {
        let m = data(p, p + extra, seed);
        let aug = augment(&m);
        let k = p + m.n();
        for i in 0..k {
            prop_assert_eq!(aug.mat[(i, i)], c64::new(0.0, 0.0));
            for j in 0..k {
                prop_assert_eq!(aug.mat[(i, j)], aug.mat[(j, i)].conj());
            }
        }
        let expected = augmented_spectrum_from_sigma(&svd_full(&m).unwrap().sigma, m.n());
        prop_assert!(max_abs_diff(&aug.eigenvalues().unwrap(), &expected) < 1e-9);
    }

    #[test]
    fn interlacing_holds(p in 1usize..6, extra in 0usize..4, seed in any::<u64>()) {
        let m = data(p, p + extra, seed);
        prop_assert!(interlace_check(&m).unwrap().max_violation() < 1e-8);
        let h = random_hermitian(p + extra + 1, seed);
        prop_assert!(hermitian_interlace_check(h.as_ref()).unwrap() < 1e-8);
    }

    #[test]
    fn weyl_inequality(seed in any::<u64>(), scale in 1e-3f64..10.0) {
        let m = data(4, 7, seed);
        let e = random_complex(4, 7, seed.wrapping_add(1));
        let other = DataMatrix::from_fn(4, 7, |i, j| m.entries()[(i, j)] + e[(i, j)] * scale).unwrap();
        let (shift, op) = weyl_distance(&m, &other).unwrap();
        prop_assert!(shift <= op + 1e-9);
    }

    #[test]
    fn eigenvector_coordinate_formula(n in 1usize..7, seed in any::<u64>()) {
        let a = random_hermitian(n, seed);
        for i in 1..=n {
            match eigvec_coordinate_identity(a.as_ref(), i) {
                Ok((x, f)) => prop_assert!((x - f).abs() < 1e-8, "i = {i}: {x} vs {f}"),
                Err(rmtlab::Error::Precondition(_)) => {}
                Err(e) => return Err(TestCaseError::fail(e.to_string())),
            }
        }
    }

    #[test]
    fn singular_vector_coordinate_formula(p in 1usize..5, extra in 1usize..4, seed in any::<u64>()) {
        let m = data(p, p + extra, seed);
        for i in 1..=p {
            for side in [CoordinateSide::LastColumn, CoordinateSide::LastRow] {
                match singvec_coordinate_identity(&m, i, side) {
                    Ok((x, f)) => prop_assert!((x - f).abs() < 1e-8, "{side:?} i = {i}: {x} vs {f}"),
                    Err(rmtlab::Error::Precondition(_)) => {}
                    Err(e) => return Err(TestCaseError::fail(e.to_string())),
                }
            }
        }
    }

    #[test]
    fn stieltjes_schur_agree(n in 1usize..7, seed in any::<u64>(), re in -3.0f64..3.0, im in 0.05f64..3.0) {
        let w = random_hermitian(n, seed);
        let z = c64::new(re, im);
        let (s, schur) = stieltjes_pair(w.as_ref(), z).unwrap();
        prop_assert!((s - schur).norm() < 1e-8 * (1.0 + s.norm()));
        prop_assert!(s.im > 0.0);
    }
}

#[test]
fn covariance_of_zero_and_scalar() {
    let z = DataMatrix::from_fn(2, 3, |_, _| c64::new(0.0, 0.0)).unwrap();
    let w = covariance(&z);
    assert!((0..3).all(|i| (0..3).all(|j| w[(i, j)].norm() == 0.0)));
}

#[test]
fn svd_reconstructs_random_5x7() {
    let m = data(5, 7, 99);
    let d = svd_full(&m).unwrap();
    let r = d.reconstruct();
    let err = (0..5)
        .flat_map(|i| (0..7).map(move |j| (i, j)))
        .map(|(i, j)| (r[(i, j)] - m.entries()[(i, j)]).norm())
        .fold(0.0, f64::max);
    assert!(err < 1e-8);
}

#[test]
fn augment_row_vector_oracle() {
    // [[0,1,0],[1,0,0],[0,0,0]] has characteristic polynomial -x(x²-1).
    let m = DataMatrix::from_real_fn(1, 2, |_, j| if j == 0 { 1.0 } else { 0.0 }).unwrap();
    let ev = augment(&m).eigenvalues().unwrap();
    assert!(max_abs_diff(&ev, &[-1.0, 0.0, 1.0]) < 1e-12);
}

#[test]
fn interlacing_over_100_seeds_3x5() {
    for s in 0..100 {
        assert!(interlace_check(&data(3, 5, s)).unwrap().max_violation() < 1e-8);
    }
}

#[test]
fn eigvec_identity_two_by_two_closed_form() {
    // A = [[a, b], [b̄, d]]: |x_2|² for eigenvalue λ is (λ - a)² / ((λ - a)² + |b|²).
    let (a, b, d) = (0.3, c64::new(0.7, -0.4), -1.1);
    let m = Mat::from_fn(2, 2, |i, j| match (i, j) {
        (0, 0) => c64::new(a, 0.0),
        (1, 1) => c64::new(d, 0.0),
        (0, 1) => b,
        _ => b.conj(),
    });
    let vals = hermitian_oracle(m.as_ref());
    for (i, lam) in vals.iter().enumerate() {
        let closed = (lam - a).powi(2) / ((lam - a).powi(2) + b.norm_sqr());
        let (x, f) = eigvec_coordinate_identity(m.as_ref(), i + 1).unwrap();
        assert!((x - closed).abs() < 1e-12 && (f - closed).abs() < 1e-12);
    }
}

#[test]
fn dominant_last_column_localizes() {
    // A weakly coupled last column of norm s: the top right singular vector
    // concentrates on the last coordinate as s grows.
    let mut prev = 0.0;
    for s in [2.0, 10.0, 100.0] {
        let m = DataMatrix::from_real_fn(2, 3, |i, j| match (i, j) {
            (0, 0) => 1.0,
            (1, 1) => 0.5,
            (0, 2) => 0.1,
            (1, 2) => s,
            _ => 0.0,
        })
        .unwrap();
        let (x, f) = singvec_coordinate_identity(&m, 2, CoordinateSide::LastColumn).unwrap();
        assert!((x - f).abs() < 1e-10);
        assert!(x > prev);
        prev = x;
    }
    assert!(1.0 - prev < 1e-4);
}

#[test]
fn stieltjes_random_6x6_against_inversion() {
    let w = random_hermitian(6, 5);
    let z = c64::new(1.0, 1.0);
    let (s, schur) = stieltjes_pair(w.as_ref(), z).unwrap();
    let mut shifted = w.clone();
    for i in 0..6 {
        shifted[(i, i)] -= z;
    }
    let inv = shifted.partial_piv_lu().inverse();
    let trace: c64 = (0..6).map(|i| inv[(i, i)]).sum::<c64>() / 6.0;
    assert!((s - trace).norm() < 1e-10);
    assert!((schur - trace).norm() < 1e-10);
}

#[test]
fn entry_variance_complex_gaussian() {
    let m = generate_matrix(200, 400, &AtomDistribution::standard_complex_gaussian(), 11).unwrap();
    let e = m.entries();
    let var: f64 = (0..200).flat_map(|i| (0..400).map(move |j| (i, j))).map(|(i, j)| e[(i, j)].norm_sqr()).sum::<f64>()
        / (200.0 * 400.0);
    assert!((var - 1.0).abs() < 0.02);
}

#[test]
fn rademacher_scalar_matrix() {
    for seed in 0..20 {
        let m = generate_matrix(1, 1, &AtomDistribution::rademacher(), seed).unwrap();
        let x = m.entries()[(0, 0)];
        assert!(x.im == 0.0 && x.re.abs() == 1.0);
    }
}

#[test]
fn projection_second_moment() {
    let h = random_subspace(1000, 50, 3).unwrap();
    let samples = project_distance(&AtomDistribution::rademacher(), h.as_ref(), 200, 17).unwrap();
    let mean_sq = samples.iter().map(|x| x * x).sum::<f64>() / samples.len() as f64;
    assert!((mean_sq - 50.0).abs() < 1.0, "{mean_sq}");
}

#[test]
fn projection_rejects_non_orthonormal_basis() {
    let h = Mat::from_fn(3, 1, |_, _| c64::new(1.0, 0.0));
    assert!(project_distance(&AtomDistribution::rademacher(), h.as_ref(), 1, 0).is_err());
}
