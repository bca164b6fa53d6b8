//! Data matrices and their exact spectral objects.
//!
//! Spectral positions (`i` arguments) are 1-based, matching `σ_1 ≤ … ≤ σ_p`.
//! Matrix columns returned by accessors are 0-based, as in `faer`.

use std::io::Write;
use std::sync::Once;

use faer::linalg::solvers::Solve;
use faer::{c64, Mat, MatRef, Par, Side};
use serde::Serialize;

use crate::atoms::AtomDistribution;
use crate::error::{Error, Result};
use crate::seeding::{derive_seed, rng_from_seed};

/// Relative tolerance under which singular values count as repeated.
pub const DEGENERACY_TOL: f64 = 1e-12;

static INIT: Once = Once::new();

/// Pins dense kernels to sequential execution so results are independent of
/// thread scheduling; trial-level parallelism is handled by the harness.
pub fn init_linalg() {
    INIT.call_once(|| faer::set_global_parallelism(Par::Seq));
}

/// A `p × n` data matrix with `p <= n`.
#[derive(Debug, Clone)]
pub struct DataMatrix {
    entries: Mat<c64>,
    transposed: bool,
    atom: String,
    seed: Option<u64>,
    is_real: bool,
}

impl DataMatrix {
    /// Ingests a matrix, transposing it when it has more rows than columns.
    pub fn from_mat(m: Mat<c64>) -> Result<Self> {
        if m.nrows() == 0 || m.ncols() == 0 {
            return Err(Error::InvalidArgument(format!(
                "data matrix must be non-empty, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let transposed = m.nrows() > m.ncols();
        let entries = if transposed { m.transpose().to_owned() } else { m };
        let is_real = (0..entries.ncols())
            .all(|j| (0..entries.nrows()).all(|i| entries[(i, j)].im == 0.0));
        Ok(DataMatrix {
            entries,
            transposed,
            atom: "explicit".into(),
            seed: None,
            is_real,
        })
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl FnMut(usize, usize) -> c64) -> Result<Self> {
        Self::from_mat(Mat::from_fn(rows, cols, f))
    }

    pub fn from_real_fn(
        rows: usize,
        cols: usize,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self> {
        Self::from_mat(Mat::from_fn(rows, cols, |i, j| c64::new(f(i, j), 0.0)))
    }

    pub fn with_provenance(mut self, atom: impl Into<String>, seed: Option<u64>) -> Self {
        self.atom = atom.into();
        self.seed = seed;
        self
    }

    pub fn p(&self) -> usize {
        self.entries.nrows()
    }

    pub fn n(&self) -> usize {
        self.entries.ncols()
    }

    pub fn y(&self) -> f64 {
        self.p() as f64 / self.n() as f64
    }

    pub fn entries(&self) -> MatRef<'_, c64> {
        self.entries.as_ref()
    }

    pub fn was_transposed(&self) -> bool {
        self.transposed
    }

    pub fn atom(&self) -> &str {
        &self.atom
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn is_real(&self) -> bool {
        self.is_real
    }

    /// CSV rows `i, j, re, im` (0-based indices).
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["i", "j", "re", "im"])?;
        for i in 0..self.p() {
            for j in 0..self.n() {
                let z = self.entries[(i, j)];
                w.write_record([
                    i.to_string(),
                    j.to_string(),
                    z.re.to_string(),
                    z.im.to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Draws a `p × n` matrix of iid entries from `dist`, filled row by row from a
/// single ChaCha8 stream seeded with `seed`.
pub fn generate_matrix(
    p: usize,
    n: usize,
    dist: &AtomDistribution,
    seed: u64,
) -> Result<DataMatrix> {
    if p == 0 || n == 0 {
        return Err(Error::InvalidArgument(format!(
            "matrix dimensions must be positive, got {p}x{n}"
        )));
    }
    let sampler = dist.sampler();
    let mut rng = rng_from_seed(seed);
    let mut values = Vec::with_capacity(p * n);
    for _ in 0..p * n {
        values.push(sampler.sample(&mut rng));
    }
    Ok(DataMatrix::from_fn(p, n, |i, j| values[i * n + j])?.with_provenance(dist.name(), Some(seed)))
}

/// `W = (1/n) M*M`, an `n × n` Hermitian matrix.
pub fn covariance(m: &DataMatrix) -> Mat<c64> {
    init_linalg();
    let scale = 1.0 / m.n() as f64;
    let mut w = m.entries.adjoint() * &m.entries;
    scale_in_place(&mut w, scale);
    w
}

/// Companion `(1/n) M M*`, a `p × p` Hermitian matrix carrying the nontrivial spectrum.
pub fn companion_covariance(m: &DataMatrix) -> Mat<c64> {
    init_linalg();
    let scale = 1.0 / m.n() as f64;
    let mut w = &m.entries * m.entries.adjoint();
    scale_in_place(&mut w, scale);
    w
}

/// Scales a computed Gram matrix and makes it exactly Hermitian: the lower
/// triangle is mirrored and the diagonal made real.
fn scale_in_place(m: &mut Mat<c64>, s: f64) {
    for j in 0..m.ncols() {
        m[(j, j)] = c64::new(m[(j, j)].re * s, 0.0);
        for i in j + 1..m.nrows() {
            m[(i, j)] *= s;
            m[(j, i)] = m[(i, j)].conj();
        }
    }
}

/// Ascending eigenvalues of a Hermitian matrix (lower triangle is read).
pub fn hermitian_eigenvalues(a: MatRef<'_, c64>) -> Result<Vec<f64>> {
    init_linalg();
    if a.nrows() == 0 {
        return Ok(Vec::new());
    }
    a.self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Solver(format!("Hermitian eigensolver: {e:?}")))
}

/// Ascending eigenvalues with eigenvectors in the columns.
pub fn hermitian_eigen(a: MatRef<'_, c64>) -> Result<(Vec<f64>, Mat<c64>)> {
    init_linalg();
    if a.nrows() == 0 {
        return Ok((Vec::new(), Mat::zeros(0, 0)));
    }
    let eig = a
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Solver(format!("Hermitian eigensolver: {e:?}")))?;
    let vals = eig.S().column_vector().iter().map(|z| z.re).collect();
    Ok((vals, eig.U().to_owned()))
}

/// Ascending eigenvalues `λ_1 ≤ … ≤ λ_p` of `W`, from the `p × p` companion
/// matrix; real data uses a real Gram matrix. Rounding negatives clamp to 0.
pub fn spectrum(m: &DataMatrix) -> Result<Vec<f64>> {
    init_linalg();
    let scale = 1.0 / m.n() as f64;
    let mut vals = if m.is_real {
        let r = Mat::<f64>::from_fn(m.p(), m.n(), |i, j| m.entries[(i, j)].re);
        let mut g = &r * r.transpose();
        for j in 0..g.ncols() {
            for i in 0..g.nrows() {
                g[(i, j)] *= scale;
            }
        }
        g.self_adjoint_eigenvalues(Side::Lower)
            .map_err(|e| Error::Solver(format!("real Gram eigensolver: {e:?}")))?
    } else {
        hermitian_eigenvalues(companion_covariance(m).as_ref())?
    };
    vals.iter_mut().for_each(|x| *x = x.max(0.0));
    vals.sort_by(f64::total_cmp);
    Ok(vals)
}

/// Ascending singular values of an arbitrary matrix (`min(rows, cols)` of them).
pub fn singular_values(m: MatRef<'_, c64>) -> Result<Vec<f64>> {
    init_linalg();
    if m.nrows() == 0 || m.ncols() == 0 {
        return Ok(Vec::new());
    }
    let mut s = m
        .singular_values()
        .map_err(|e| Error::Solver(format!("SVD did not converge: {e:?}")))?;
    s.sort_by(f64::total_cmp);
    Ok(s)
}

/// Thin SVD of an arbitrary matrix with ascending singular values.
///
/// Column `k` of `left` / `right` pairs with `sigma[k]`:
/// `M right_k = σ_k left_k`, `M* left_k = σ_k right_k`. Each right vector is
/// rotated so its largest-magnitude coordinate is real and positive.
#[derive(Debug, Clone)]
pub struct RawSvd {
    pub sigma: Vec<f64>,
    pub left: Mat<c64>,
    pub right: Mat<c64>,
}

pub fn svd_raw(m: MatRef<'_, c64>) -> Result<RawSvd> {
    init_linalg();
    let (rows, cols) = (m.nrows(), m.ncols());
    let r = rows.min(cols);
    if r == 0 {
        return Ok(RawSvd {
            sigma: Vec::new(),
            left: Mat::zeros(rows, 0),
            right: Mat::zeros(cols, 0),
        });
    }
    let svd = m
        .thin_svd()
        .map_err(|e| Error::Solver(format!("SVD did not converge: {e:?}")))?;
    let s = svd.S().column_vector();
    let (fu, fv) = (svd.U(), svd.V());
    // faer orders singular values nonincreasingly.
    let sigma: Vec<f64> = (0..r).rev().map(|k| s[k].re).collect();
    let mut left = Mat::<c64>::zeros(rows, r);
    let mut right = Mat::<c64>::zeros(cols, r);
    for (dst, src) in (0..r).zip((0..r).rev()) {
        let mut best = 0;
        let mut best_abs = -1.0;
        for i in 0..cols {
            let a = fv[(i, src)].norm();
            if a > best_abs {
                best_abs = a;
                best = i;
            }
        }
        let pivot = fv[(best, src)];
        let phase = if pivot.norm() > 0.0 {
            pivot.conj() / pivot.norm()
        } else {
            c64::new(1.0, 0.0)
        };
        for i in 0..cols {
            right[(i, dst)] = fv[(i, src)] * phase;
        }
        for i in 0..rows {
            left[(i, dst)] = fu[(i, src)] * phase;
        }
    }
    Ok(RawSvd { sigma, left, right })
}

/// Singular value system of a data matrix.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    pub n: usize,
    pub p: usize,
    /// Ascending `σ_1 ≤ … ≤ σ_p`.
    pub sigma: Vec<f64>,
    /// `λ_i = σ_i² / n`.
    pub lambda: Vec<f64>,
    /// `p × p`, column `k` is `v_{k+1}`.
    pub left: Mat<c64>,
    /// `n × p`, column `k` is `u_{k+1}`.
    pub right: Mat<c64>,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SvdDiagnostics {
    /// `max_i ‖M u_i - σ_i v_i‖`.
    pub max_right_residual: f64,
    /// `max_i ‖M* v_i - σ_i u_i‖`.
    pub max_left_residual: f64,
    /// `max |U*U - I|` entrywise.
    pub right_orthogonality: f64,
    /// `max |V*V - I|` entrywise.
    pub left_orthogonality: f64,
    pub op_norm: f64,
}

impl SvdDiagnostics {
    pub fn within(&self, rel_tol: f64) -> bool {
        let scale = self.op_norm.max(1.0);
        self.max_right_residual <= rel_tol * scale
            && self.max_left_residual <= rel_tol * scale
            && self.right_orthogonality <= rel_tol
            && self.left_orthogonality <= rel_tol
    }
}

impl SpectralDecomposition {
    pub fn diagnostics(&self, m: &DataMatrix) -> SvdDiagnostics {
        let mu = m.entries() * &self.right;
        let mv = m.entries().adjoint() * &self.left;
        let mut r1: f64 = 0.0;
        let mut r2: f64 = 0.0;
        for k in 0..self.p {
            let a: f64 = (0..self.p)
                .map(|i| (mu[(i, k)] - self.left[(i, k)] * self.sigma[k]).norm_sqr())
                .sum();
            let b: f64 = (0..self.n)
                .map(|i| (mv[(i, k)] - self.right[(i, k)] * self.sigma[k]).norm_sqr())
                .sum();
            r1 = r1.max(a.sqrt());
            r2 = r2.max(b.sqrt());
        }
        SvdDiagnostics {
            max_right_residual: r1,
            max_left_residual: r2,
            right_orthogonality: orthogonality_defect(self.right.as_ref()),
            left_orthogonality: orthogonality_defect(self.left.as_ref()),
            op_norm: self.sigma.last().copied().unwrap_or(0.0),
        }
    }

    /// Reconstruction `Σ σ_i v_i u_i*`.
    pub fn reconstruct(&self) -> Mat<c64> {
        let mut scaled = self.left.clone();
        for k in 0..self.p {
            for i in 0..self.p {
                scaled[(i, k)] *= self.sigma[k];
            }
        }
        &scaled * self.right.adjoint()
    }

    /// CSV rows `index, sigma, lambda` (1-based index).
    pub fn write_spectrum_csv<W: Write>(&self, out: W) -> Result<()> {
        write_spectrum_csv(out, &self.sigma, &self.lambda)
    }
}

pub fn write_spectrum_csv<W: Write>(out: W, sigma: &[f64], lambda: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["index", "sigma", "lambda"])?;
    for (i, (s, l)) in sigma.iter().zip(lambda).enumerate() {
        w.write_record([(i + 1).to_string(), s.to_string(), l.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// `max |Q*Q - I|` entrywise.
pub fn orthogonality_defect(q: MatRef<'_, c64>) -> f64 {
    let g = q.adjoint() * q;
    let mut worst: f64 = 0.0;
    for j in 0..g.ncols() {
        for i in 0..g.nrows() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g[(i, j)] - c64::new(target, 0.0)).norm());
        }
    }
    worst
}

/// Full singular value system, checked against its own residuals.
pub fn svd_full(m: &DataMatrix) -> Result<SpectralDecomposition> {
    let raw = svd_raw(m.entries())?;
    let n = m.n();
    let lambda = raw.sigma.iter().map(|s| s * s / n as f64).collect();
    let dec = SpectralDecomposition {
        n,
        p: m.p(),
        sigma: raw.sigma,
        lambda,
        left: raw.left,
        right: raw.right,
    };
    let diag = dec.diagnostics(m);
    if !diag.within(1e-8) {
        return Err(Error::Solver(format!(
            "SVD residuals too large: {diag:?}"
        )));
    }
    Ok(dec)
}

/// The Hermitian block matrix `[[0, M], [M*, 0]]`.
#[derive(Debug, Clone)]
pub struct AugmentedMatrix {
    pub mat: Mat<c64>,
}

impl AugmentedMatrix {
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        hermitian_eigenvalues(self.mat.as_ref())
    }
}

pub fn augment(m: &DataMatrix) -> AugmentedMatrix {
    let (p, n) = (m.p(), m.n());
    let e = m.entries();
    let mat = Mat::from_fn(p + n, p + n, |i, j| match (i < p, j < p) {
        (true, false) => e[(i, j - p)],
        (false, true) => e[(j, i - p)].conj(),
        _ => c64::new(0.0, 0.0),
    });
    AugmentedMatrix { mat }
}

/// Expected augmented spectrum `{±σ_i} ∪ {0}^{n-p}`, ascending.
pub fn augmented_spectrum_from_sigma(sigma: &[f64], n: usize) -> Vec<f64> {
    let mut out: Vec<f64> = sigma.iter().flat_map(|&s| [s, -s]).collect();
    out.extend(std::iter::repeat(0.0).take(n - sigma.len()));
    out.sort_by(f64::total_cmp);
    out
}

pub fn delete_row(m: MatRef<'_, c64>, k: usize) -> Mat<c64> {
    Mat::from_fn(m.nrows() - 1, m.ncols(), |i, j| m[(i + usize::from(i >= k), j)])
}

pub fn delete_column(m: MatRef<'_, c64>, k: usize) -> Mat<c64> {
    Mat::from_fn(m.nrows(), m.ncols() - 1, |i, j| m[(i, j + usize::from(j >= k))])
}

pub fn principal_minor(a: MatRef<'_, c64>, k: usize) -> Mat<c64> {
    Mat::from_fn(a.nrows() - 1, a.ncols() - 1, |i, j| {
        a[(i + usize::from(i >= k), j + usize::from(j >= k))]
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct InterlaceReport {
    pub row_deletions: usize,
    pub column_deletions: usize,
    pub max_row_violation: f64,
    pub max_column_violation: f64,
}

impl InterlaceReport {
    pub fn max_violation(&self) -> f64 {
        self.max_row_violation.max(self.max_column_violation)
    }
}

/// Worst violation of `lower_i <= minor_i <= upper_i` where the bounds come from
/// the full ascending spectrum `full`.
///
/// When the minor has one value fewer: `full_i <= minor_i <= full_{i+1}`.
/// When it has as many (column deletion with `p < n`): `full_{i-1} <= minor_i <= full_i`
/// with `full_0 = 0`.
fn interlace_violation(full: &[f64], minor: &[f64]) -> f64 {
    let mut worst: f64 = 0.0;
    for (i, &t) in minor.iter().enumerate() {
        let (lo, hi) = if minor.len() + 1 == full.len() {
            (full[i], full[i + 1])
        } else {
            (if i == 0 { 0.0 } else { full[i - 1] }, full[i])
        };
        worst = worst.max(lo - t).max(t - hi);
    }
    worst
}

/// Cauchy interlacing for every single-row and single-column deletion.
pub fn interlace_check(m: &DataMatrix) -> Result<InterlaceReport> {
    let e = m.entries();
    let full = singular_values(e)?;
    let mut report = InterlaceReport {
        row_deletions: 0,
        column_deletions: 0,
        max_row_violation: 0.0,
        max_column_violation: 0.0,
    };
    if m.p() > 1 {
        for k in 0..m.p() {
            let minor = singular_values(delete_row(e, k).as_ref())?;
            report.max_row_violation = report.max_row_violation.max(interlace_violation(&full, &minor));
            report.row_deletions += 1;
        }
    }
    if m.n() > 1 {
        for k in 0..m.n() {
            let minor = singular_values(delete_column(e, k).as_ref())?;
            report.max_column_violation =
                report.max_column_violation.max(interlace_violation(&full, &minor));
            report.column_deletions += 1;
        }
    }
    Ok(report)
}

/// Hermitian interlacing `λ_i(A_n) <= λ_i(A_{n-1}) <= λ_{i+1}(A_n)` over every
/// principal minor; returns the worst violation.
pub fn hermitian_interlace_check(a: MatRef<'_, c64>) -> Result<f64> {
    check_hermitian(a)?;
    let full = hermitian_eigenvalues(a)?;
    let mut worst: f64 = 0.0;
    for k in 0..a.nrows() {
        let minor = hermitian_eigenvalues(principal_minor(a, k).as_ref())?;
        for (i, &t) in minor.iter().enumerate() {
            worst = worst.max(full[i] - t).max(t - full[i + 1]);
        }
    }
    Ok(worst)
}

/// `(max_i |σ_i(M) - σ_i(N)|, ‖M - N‖_op)`.
pub fn weyl_distance(m: &DataMatrix, other: &DataMatrix) -> Result<(f64, f64)> {
    let (a, b) = (m.entries(), other.entries());
    if a.nrows() != b.nrows() || a.ncols() != b.ncols() {
        return Err(Error::ShapeMismatch {
            expected: (a.nrows(), a.ncols()),
            actual: (b.nrows(), b.ncols()),
        });
    }
    let sa = singular_values(a)?;
    let sb = singular_values(b)?;
    let shift = sa
        .iter()
        .zip(&sb)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    let diff = Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] - b[(i, j)]);
    let op = singular_values(diff.as_ref())?.last().copied().unwrap_or(0.0);
    Ok((shift, op))
}

fn check_hermitian(a: MatRef<'_, c64>) -> Result<()> {
    if a.nrows() != a.ncols() {
        return Err(Error::ShapeMismatch {
            expected: (a.nrows(), a.nrows()),
            actual: (a.nrows(), a.ncols()),
        });
    }
    let mut scale: f64 = 1.0;
    let mut defect: f64 = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            scale = scale.max(a[(i, j)].norm());
            defect = defect.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    if defect > 1e-12 * scale {
        return Err(Error::InvalidArgument(format!(
            "matrix is not Hermitian (defect {defect:.3e})"
        )));
    }
    Ok(())
}

fn check_index(i: usize, len: usize) -> Result<usize> {
    if i == 0 || i > len {
        return Err(Error::InvalidArgument(format!(
            "spectral index {i} outside 1..={len}"
        )));
    }
    Ok(i - 1)
}

/// `(|x|² measured, |x|² from the minor formula)` for the last coordinate of
/// the `i`-th eigenvector of a Hermitian `A`.
pub fn eigvec_coordinate_identity(a: MatRef<'_, c64>, i: usize) -> Result<(f64, f64)> {
    check_hermitian(a)?;
    let n = a.nrows();
    let k = check_index(i, n)?;
    let (vals, vecs) = hermitian_eigen(a)?;
    let scale = vals.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let tol = DEGENERACY_TOL * scale;
    let lam = vals[k];
    if (k > 0 && lam - vals[k - 1] <= tol) || (k + 1 < n && vals[k + 1] - lam <= tol) {
        return Err(Error::Precondition(format!(
            "eigenvalue λ_{i} = {lam} is not simple"
        )));
    }
    let measured = vecs[(n - 1, k)].norm_sqr();
    if n == 1 {
        return Ok((measured, 1.0));
    }
    let minor = Mat::from_fn(n - 1, n - 1, |r, c| a[(r, c)]);
    let (mvals, mvecs) = hermitian_eigen(minor.as_ref())?;
    let mut sum = 0.0;
    for (j, &mu) in mvals.iter().enumerate() {
        if (mu - lam).abs() <= tol {
            return Err(Error::Precondition(format!(
                "λ_{i}(A) = {lam} collides with eigenvalue {mu} of the minor"
            )));
        }
        let proj: c64 = (0..n - 1).map(|r| mvecs[(r, j)].conj() * a[(r, n - 1)]).sum();
        sum += proj.norm_sqr() / (mu - lam).powi(2);
    }
    Ok((measured, 1.0 / (1.0 + sum)))
}

/// Which coordinate the singular-vector formula isolates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CoordinateSide {
    /// Last coordinate of the right vector `u_i`, via the last column `X`.
    LastColumn,
    /// Last coordinate of the left vector `v_i`, via the last row `Y*`.
    LastRow,
}

/// `(measured, formula)` for the singular-vector coordinate identity.
pub fn singvec_coordinate_identity(
    m: &DataMatrix,
    i: usize,
    side: CoordinateSide,
) -> Result<(f64, f64)> {
    let e = m.entries();
    let (p, n) = (m.p(), m.n());
    let full = svd_raw(e)?;
    let k = check_index(i, full.sigma.len())?;
    let sigma_max = full.sigma.last().copied().unwrap_or(0.0);
    let tol = DEGENERACY_TOL * sigma_max.max(1.0);
    let s = full.sigma[k];
    if (k > 0 && s - full.sigma[k - 1] <= tol)
        || (k + 1 < full.sigma.len() && full.sigma[k + 1] - s <= tol)
    {
        return Err(Error::Precondition(format!("σ_{i} = {s} is repeated")));
    }
    let (measured, minor, vector): (f64, Mat<c64>, Vec<c64>) = match side {
        CoordinateSide::LastColumn => (
            full.right[(n - 1, k)].norm_sqr(),
            Mat::from_fn(p, n - 1, |r, c| e[(r, c)]),
            (0..p).map(|r| e[(r, n - 1)]).collect(),
        ),
        CoordinateSide::LastRow => (
            full.left[(p - 1, k)].norm_sqr(),
            Mat::from_fn(p - 1, n, |r, c| e[(r, c)]),
            (0..n).map(|c| e[(p - 1, c)].conj()).collect(),
        ),
    };
    let ms = svd_raw(minor.as_ref())?;
    // Left vectors for a column deletion, right vectors for a row deletion.
    let basis = match side {
        CoordinateSide::LastColumn => &ms.left,
        CoordinateSide::LastRow => &ms.right,
    };
    let mut sum = 0.0;
    for (j, &sj) in ms.sigma.iter().enumerate() {
        if (sj - s).abs() <= tol {
            return Err(Error::Precondition(format!(
                "σ_{i} = {s} collides with singular value {sj} of the minor"
            )));
        }
        let proj: c64 = vector
            .iter()
            .enumerate()
            .map(|(r, x)| basis[(r, j)].conj() * x)
            .sum();
        sum += sj * sj / (sj * sj - s * s).powi(2) * proj.norm_sqr();
    }
    Ok((measured, 1.0 / (1.0 + sum)))
}

/// `(s_empirical, s_schur)` for a Hermitian `W` at `z`.
pub fn stieltjes_pair(w: MatRef<'_, c64>, z: c64) -> Result<(c64, c64)> {
    check_hermitian(w)?;
    let n = w.nrows();
    if n == 0 {
        return Err(Error::InvalidArgument("empty matrix".into()));
    }
    let vals = hermitian_eigenvalues(w)?;
    let dist = vals
        .iter()
        .map(|&l| (c64::new(l, 0.0) - z).norm())
        .fold(f64::INFINITY, f64::min);
    if dist <= 1e-12 {
        return Err(Error::Precondition(format!(
            "z = {z} lies within 1e-12 of the spectrum"
        )));
    }
    let one = c64::new(1.0, 0.0);
    let empirical: c64 = vals.iter().map(|&l| one / (c64::new(l, 0.0) - z)).sum::<c64>() / n as f64;
    let mut schur = c64::new(0.0, 0.0);
    for k in 0..n {
        let mut denom = w[(k, k)] - z;
        if n > 1 {
            let mut wk = principal_minor(w, k);
            for d in 0..n - 1 {
                wk[(d, d)] -= z;
            }
            let ak = Mat::<c64>::from_fn(n - 1, 1, |r, _| w[(r + usize::from(r >= k), k)]);
            let x = wk.partial_piv_lu().solve(&ak);
            let quad: c64 = (0..n - 1).map(|r| ak[(r, 0)].conj() * x[(r, 0)]).sum();
            denom -= quad;
        }
        if !(denom.re.is_finite() && denom.im.is_finite()) || denom.norm() == 0.0 {
            return Err(Error::Precondition(format!(
                "Schur complement at k = {k} is singular for z = {z}"
            )));
        }
        schur += one / denom;
    }
    Ok((empirical, schur / n as f64))
}

/// Checks that the columns of `h` are orthonormal within `1e-10`.
pub fn check_orthonormal(h: MatRef<'_, c64>) -> Result<()> {
    let defect = orthogonality_defect(h);
    if defect > 1e-10 {
        return Err(Error::InvalidArgument(format!(
            "basis columns are not orthonormal (defect {defect:.3e})"
        )));
    }
    Ok(())
}

/// `‖π_H x‖` for `H` spanned by the orthonormal columns of `h`.
pub fn projection_norm(x: &[c64], h: MatRef<'_, c64>) -> f64 {
    (0..h.ncols())
        .map(|c| {
            (0..h.nrows())
                .map(|r| h[(r, c)].conj() * x[r])
                .sum::<c64>()
                .norm_sqr()
        })
        .sum::<f64>()
        .sqrt()
}

/// Samples of `‖π_H X‖` for `X` with iid entries from `dist`; trial `t` draws
/// from the stream seeded by `derive_seed(seed, t)`.
pub fn project_distance(
    dist: &AtomDistribution,
    h: MatRef<'_, c64>,
    trials: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    check_orthonormal(h)?;
    let sampler = dist.sampler();
    let n = h.nrows();
    Ok((0..trials as u64)
        .map(|t| {
            let mut rng = rng_from_seed(derive_seed(seed, t));
            let x: Vec<c64> = (0..n).map(|_| sampler.sample(&mut rng)).collect();
            projection_norm(&x, h)
        })
        .collect())
}

/// A `d`-dimensional subspace of `C^n` drawn from the unitarily invariant law
/// (thin QR of a complex Gaussian matrix).
pub fn random_subspace(n: usize, d: usize, seed: u64) -> Result<Mat<c64>> {
    init_linalg();
    if d > n {
        return Err(Error::InvalidArgument(format!(
            "subspace dimension {d} exceeds ambient dimension {n}"
        )));
    }
    if d == 0 {
        return Ok(Mat::zeros(n, 0));
    }
    let g = generate_matrix(n, d, &AtomDistribution::standard_complex_gaussian(), seed)?;
    // generate_matrix transposes tall inputs back to wide; undo that here.
    let g = if g.was_transposed() {
        g.entries().transpose().to_owned()
    } else {
        g.entries().to_owned()
    };
    Ok(g.qr().compute_thin_Q())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cm(rows: &[&[f64]]) -> DataMatrix {
        DataMatrix::from_fn(rows.len(), rows[0].len(), |i, j| c64::new(rows[i][j], 0.0)).unwrap()
    }

    #[test]
    fn transposes_tall_input() {
        let m = cm(&[&[1.0], &[2.0], &[3.0]]);
        assert!(m.was_transposed());
        assert_eq!((m.p(), m.n()), (1, 3));
    }

    #[test]
    fn scalar_covariance() {
        let m = cm(&[&[2.0]]);
        assert_eq!(covariance(&m)[(0, 0)], c64::new(4.0, 0.0));
        let z = cm(&[&[0.0, 0.0], &[0.0, 0.0]]);
        assert!(covariance(&z).as_ref().norm_max() == 0.0);
    }

    #[test]
    fn diagonal_svd() {
        let m = cm(&[&[3.0, 0.0], &[0.0, 5.0]]);
        let d = svd_full(&m).unwrap();
        assert!((d.sigma[0] - 3.0).abs() < 1e-14 && (d.sigma[1] - 5.0).abs() < 1e-14);
        assert!((d.right[(0, 0)].norm() - 1.0).abs() < 1e-14);
        assert!((d.right[(1, 1)].norm() - 1.0).abs() < 1e-14);
        // phase convention: largest coordinate real positive
        assert!(d.right[(0, 0)].re > 0.0 && d.right[(0, 0)].im == 0.0);
    }

    #[test]
    fn augment_small_cases() {
        let one = cm(&[&[1.0]]);
        let ev = augment(&one).eigenvalues().unwrap();
        assert!((ev[0] + 1.0).abs() < 1e-14 && (ev[1] - 1.0).abs() < 1e-14);
        let row = cm(&[&[1.0, 0.0]]);
        let ev = augment(&row).eigenvalues().unwrap();
        for (a, b) in ev.iter().zip([-1.0, 0.0, 1.0]) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_matrix_interlaces_with_equality() {
        let z = DataMatrix::from_fn(3, 5, |_, _| c64::new(0.0, 0.0)).unwrap();
        assert_eq!(interlace_check(&z).unwrap().max_violation(), 0.0);
    }

    #[test]
    fn weyl_identity_and_rank_one() {
        let m = generate_matrix(3, 4, &AtomDistribution::standard_complex_gaussian(), 1).unwrap();
        assert_eq!(weyl_distance(&m, &m).unwrap(), (0.0, 0.0));
        let mut e = m.entries().to_owned();
        e[(0, 0)] += c64::new(1e-3, 0.0);
        let n = DataMatrix::from_mat(e).unwrap();
        let (d, op) = weyl_distance(&m, &n).unwrap();
        assert!((op - 1e-3).abs() < 1e-12);
        assert!(d <= 1e-3 + 1e-9);
        let other = generate_matrix(4, 3, &AtomDistribution::rademacher(), 1).unwrap();
        let tall = generate_matrix(3, 5, &AtomDistribution::rademacher(), 1).unwrap();
        assert!(matches!(weyl_distance(&other, &tall), Err(Error::ShapeMismatch { .. })));
    }

    #[test]
    fn eigvec_identity_diagonal_and_two_by_two() {
        let a = Mat::from_fn(3, 3, |i, j| {
            c64::new(if i == j { [1.0, 2.0, 5.0][i] } else { 0.0 }, 0.0)
        });
        let (measured, formula) = eigvec_coordinate_identity(a.as_ref(), 3).unwrap();
        assert_eq!((measured, formula), (1.0, 1.0));
        assert!(matches!(
            eigvec_coordinate_identity(a.as_ref(), 1),
            Err(Error::Precondition(_))
        ));
        // [[0, b],[b, 0]]: eigenvectors (1, ±1)/√2 so |x|² = 1/2; formula 1/(1 + b²/λ²) = 1/2.
        let b = Mat::from_fn(2, 2, |i, j| c64::new(if i != j { 0.7 } else { 0.0 }, 0.0));
        for i in 1..=2 {
            let (m, f) = eigvec_coordinate_identity(b.as_ref(), i).unwrap();
            assert!((m - 0.5).abs() < 1e-14 && (f - 0.5).abs() < 1e-14);
        }
    }

    #[test]
    fn singvec_identity_edge_cases() {
        let row = generate_matrix(1, 5, &AtomDistribution::standard_complex_gaussian(), 3).unwrap();
        let (m, f) = singvec_coordinate_identity(&row, 1, CoordinateSide::LastRow).unwrap();
        assert!((m - 1.0).abs() < 1e-14 && f == 1.0);
        // Orthogonal dominant last column: coordinate approaches 1.
        let mut prev = 0.0;
        for s in [10.0, 100.0, 1000.0] {
            let mut e = Mat::<c64>::zeros(2, 3);
            e[(0, 0)] = c64::new(1.0, 0.0);
            e[(1, 1)] = c64::new(0.5, 0.0);
            e[(0, 2)] = c64::new(0.0, 0.0);
            e[(1, 2)] = c64::new(s, 0.0);
            e[(1, 1)] = c64::new(0.0, 0.0);
            e[(0, 1)] = c64::new(0.5, 0.0);
            let m = DataMatrix::from_mat(e).unwrap();
            let (meas, form) = singvec_coordinate_identity(&m, 2, CoordinateSide::LastColumn).unwrap();
            assert!((meas - form).abs() < 1e-10);
            assert!(meas >= prev);
            prev = meas;
        }
        assert!(prev > 1.0 - 1e-6);
    }

    #[test]
    fn stieltjes_scalar() {
        let w = Mat::from_fn(1, 1, |_, _| c64::new(2.0, 0.0));
        let z = c64::new(0.5, 1.0);
        let (a, b) = stieltjes_pair(w.as_ref(), z).unwrap();
        let expect = c64::new(1.0, 0.0) / (c64::new(2.0, 0.0) - z);
        assert!((a - expect).norm() < 1e-15 && (b - expect).norm() < 1e-15);
        assert!(stieltjes_pair(w.as_ref(), c64::new(2.0, 0.0)).is_err());
    }

    #[test]
    fn projection_trivial_subspaces() {
        let full = random_subspace(6, 6, 9).unwrap();
        let x: Vec<c64> = (0..6).map(|i| c64::new(i as f64, 1.0)).collect();
        let norm: f64 = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        assert!((projection_norm(&x, full.as_ref()) - norm).abs() < 1e-12);
        let empty = random_subspace(6, 0, 9).unwrap();
        assert_eq!(projection_norm(&x, empty.as_ref()), 0.0);
        let bad = Mat::from_fn(3, 1, |_, _| c64::new(1.0, 0.0));
        assert!(project_distance(&AtomDistribution::rademacher(), bad.as_ref(), 1, 0).is_err());
    }

    #[test]
    fn generation_is_deterministic() {
        let d = AtomDistribution::rademacher();
        let a = generate_matrix(4, 6, &d, 11).unwrap();
        let b = generate_matrix(4, 6, &d, 11).unwrap();
        assert_eq!(a.entries(), b.entries());
        let one = generate_matrix(1, 1, &d, 5).unwrap();
        assert_eq!(one.entries()[(0, 0)].norm(), 1.0);
    }

    #[test]
    fn spectrum_matches_svd() {
        for atom in [AtomDistribution::rademacher(), AtomDistribution::standard_complex_gaussian()] {
            let m = generate_matrix(5, 8, &atom, 4).unwrap();
            let lam = spectrum(&m).unwrap();
            let d = svd_full(&m).unwrap();
            for (a, b) in lam.iter().zip(&d.lambda) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }
}
