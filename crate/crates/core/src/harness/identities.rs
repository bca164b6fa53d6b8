//! Randomized sweep over the exact finite-dimensional spectral identities.

use faer::{c64, Mat};
use rand::Rng;
use serde::Serialize;

use crate::atoms::AtomDistribution;
use crate::error::{Error, Result};
use crate::seeding::rng_from_seed;
use crate::spectral::{
    augment, augmented_spectrum_from_sigma, companion_covariance, eigvec_coordinate_identity,
    generate_matrix, hermitian_interlace_check, interlace_check, singular_values,
    singvec_coordinate_identity, stieltjes_pair, weyl_distance, CoordinateSide, DataMatrix,
};
use crate::trials::run_trials;

/// Worst residual of one identity over the sweep.
#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct IdentityStat {
    pub checked: usize,
    /// Instances skipped because a simplicity precondition failed.
    pub skipped: usize,
    pub max_residual: f64,
}

impl IdentityStat {
    fn record(&mut self, r: Result<f64>) -> Result<()> {
        match r {
            Ok(v) => {
                self.checked += 1;
                self.max_residual = self.max_residual.max(v);
                Ok(())
            }
            Err(Error::Precondition(_)) => {
                self.skipped += 1;
                Ok(())
            }
            Err(e) => Err(e),
        }
    }

    fn merge(&mut self, o: &IdentityStat) {
        self.checked += o.checked;
        self.skipped += o.skipped;
        self.max_residual = self.max_residual.max(o.max_residual);
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct IdentitySweep {
    pub instances: usize,
    pub augmented_spectrum: IdentityStat,
    pub interlacing_rows: IdentityStat,
    pub interlacing_columns: IdentityStat,
    pub hermitian_interlacing: IdentityStat,
    pub weyl: IdentityStat,
    pub eigenvector_coordinate: IdentityStat,
    pub singular_vector_coordinate: IdentityStat,
    pub stieltjes_schur: IdentityStat,
}

impl IdentitySweep {
    pub fn stats(&self) -> [(&'static str, &IdentityStat); 8] {
        [
            ("augmented_spectrum", &self.augmented_spectrum),
            ("interlacing_rows", &self.interlacing_rows),
            ("interlacing_columns", &self.interlacing_columns),
            ("hermitian_interlacing", &self.hermitian_interlacing),
            ("weyl", &self.weyl),
            ("eigenvector_coordinate", &self.eigenvector_coordinate),
            ("singular_vector_coordinate", &self.singular_vector_coordinate),
            ("stieltjes_schur", &self.stieltjes_schur),
        ]
    }

    pub fn max_residual(&self) -> f64 {
        self.stats().iter().map(|(_, s)| s.max_residual).fold(0.0, f64::max)
    }

    /// Accumulates another sweep's counts and worst residuals.
    pub fn merge(&mut self, o: &IdentitySweep) {
        self.instances += o.instances;
        self.augmented_spectrum.merge(&o.augmented_spectrum);
        self.interlacing_rows.merge(&o.interlacing_rows);
        self.interlacing_columns.merge(&o.interlacing_columns);
        self.hermitian_interlacing.merge(&o.hermitian_interlacing);
        self.weyl.merge(&o.weyl);
        self.eigenvector_coordinate.merge(&o.eigenvector_coordinate);
        self.singular_vector_coordinate.merge(&o.singular_vector_coordinate);
        self.stieltjes_schur.merge(&o.stieltjes_schur);
    }
}

/// Runs every identity on `instances` random matrices with `2 <= p < n <= max_dim`
/// (so both row and column deletions leave a valid minor) and entries from `dist`. Residuals are relative to `max(1, ‖M‖_op)` (or its
/// square for `W`-level quantities).
pub fn identity_sweep(
    dist: &AtomDistribution,
    instances: usize,
    max_dim: usize,
    master: u64,
) -> Result<IdentitySweep> {
    if max_dim < 3 {
        return Err(Error::InvalidArgument(format!("max_dim must be at least 3, got {max_dim}")));
    }
    let parts = run_trials(instances, master, |_, seed| one_instance(dist, max_dim, seed))?;
    let mut total = IdentitySweep::default();
    for p in &parts {
        total.merge(p);
    }
    Ok(total)
}

fn one_instance(dist: &AtomDistribution, max_dim: usize, seed: u64) -> Result<IdentitySweep> {
    let mut rng = rng_from_seed(seed);
    let n = rng.random_range(3..=max_dim);
    let p = rng.random_range(2..n);
    let m = generate_matrix(p, n, dist, rng.random())?;
    check_matrix(&m, rng.random())
}

/// Runs every identity on one matrix; `seed` drives the Weyl perturbation and
/// the Stieltjes evaluation point.
pub fn check_matrix(m: &DataMatrix, seed: u64) -> Result<IdentitySweep> {
    let mut rng = rng_from_seed(seed);
    let (p, n) = (m.p(), m.n());
    let m = m.clone();
    let mut s = IdentitySweep { instances: 1, ..Default::default() };

    let sigma = singular_values(m.entries())?;
    let scale = sigma.last().copied().unwrap_or(0.0).max(1.0);

    let aug = augment(&m).eigenvalues()?;
    let expect = augmented_spectrum_from_sigma(&sigma, n);
    s.augmented_spectrum.record(Ok(max_abs_diff(&aug, &expect) / scale))?;

    let il = interlace_check(&m)?;
    if il.row_deletions > 0 {
        s.interlacing_rows.record(Ok(il.max_row_violation / scale))?;
    }
    if il.column_deletions > 0 {
        s.interlacing_columns.record(Ok(il.max_column_violation / scale))?;
    }

    let w = companion_covariance(&m);
    let wscale = scale * scale / n as f64;
    let wscale = wscale.max(1.0);
    s.hermitian_interlacing.record(hermitian_interlace_check(w.as_ref()).map(|v| v / wscale))?;

    // Weyl: |σ_i(M) - σ_i(M+E)| <= ‖E‖_op for a random perturbation.
    let amp = rng.random_range(0.01..1.0);
    let e = generate_matrix(p, n, &AtomDistribution::standard_complex_gaussian(), rng.random())?;
    let perturbed = Mat::from_fn(p, n, |i, j| m.entries()[(i, j)] + e.entries()[(i, j)] * amp);
    let other = DataMatrix::from_mat(perturbed)?;
    let (shift, op) = weyl_distance(&m, &other)?;
    s.weyl.record(Ok((shift - op).max(0.0) / scale))?;

    for i in 1..=p {
        s.eigenvector_coordinate.record(eigvec_coordinate_identity(w.as_ref(), i).map(|(a, b)| (a - b).abs()))?;
        for side in [CoordinateSide::LastColumn, CoordinateSide::LastRow] {
            let applicable = match side {
                CoordinateSide::LastColumn => n >= 2,
                CoordinateSide::LastRow => p >= 2,
            };
            if applicable {
                s.singular_vector_coordinate
                    .record(singvec_coordinate_identity(&m, i, side).map(|(a, b)| (a - b).abs()))?;
            }
        }
    }

    let z = c64::new(rng.random_range(-1.0..5.0), rng.random_range(0.05..2.0));
    s.stieltjes_schur.record(stieltjes_pair(w.as_ref(), z).map(|(a, b)| (a - b).norm() * z.im))?;
    Ok(s)
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
