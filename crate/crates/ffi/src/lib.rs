//! C interface to `rmtlab`.
//!
//! Every function returns an [`RmtStatus`]; results travel through out
//! pointers. On failure the message is kept per thread and can be read with
//! [`rmt_last_error`]. Handles are opaque and must be released with their
//! `_free` function. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use faer::c64;
use rmtlab::atoms::{match_order, AtomDistribution};
use rmtlab::harness::{run_experiment, ExperimentConfig};
use rmtlab::mp::MpModel;
use rmtlab::spectral::{generate_matrix, spectrum, svd_full, DataMatrix, SpectralDecomposition};
use rmtlab::stats::sine_kernel;
use rmtlab::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RmtStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidDistribution = 3,
    UnknownAtom = 4,
    MatchInfeasible = 5,
    Solver = 6,
    Precondition = 7,
    Config = 8,
    Io = 9,
    BufferTooSmall = 10,
    Panic = 11,
    Other = 12,
}

/// Which singular vector family [`rmt_svd_vector`] reads.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RmtVectorSide {
    /// `u_i ∈ C^n`.
    Right = 0,
    /// `v_i ∈ C^p`.
    Left = 1,
}

/// An atom law.
pub struct RmtAtom(AtomDistribution);

/// A `p × n` data matrix with `p ≤ n`.
pub struct RmtMatrix(DataMatrix);

/// Singular value system of a data matrix.
pub struct RmtSvd(SpectralDecomposition);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> RmtStatus {
    match err {
        Error::InvalidArgument(_) | Error::ShapeMismatch { .. } | Error::Unsupported(_) => RmtStatus::InvalidArgument,
        Error::InvalidDistribution(_) | Error::TruncationTooAggressive { .. } => RmtStatus::InvalidDistribution,
        Error::UnknownAtom(_) => RmtStatus::UnknownAtom,
        Error::MatchInfeasible { .. } => RmtStatus::MatchInfeasible,
        Error::Solver(_) => RmtStatus::Solver,
        Error::Precondition(_) | Error::Degenerate(_) | Error::EmptyWindow => RmtStatus::Precondition,
        Error::Config { .. } => RmtStatus::Config,
        Error::Io(_) | Error::Json(_) | Error::Csv(_) => RmtStatus::Io,
        Error::Trial { source, .. } => status_of(source),
    }
}

struct Fail(RmtStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

/// Runs `f`, converting errors and panics into a status and the thread's last error.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> RmtStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => RmtStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            RmtStatus::Panic
        }
    }
}

fn non_null<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    // SAFETY: callers pass either null or a pointer obtained from this library.
    unsafe { p.as_ref() }.ok_or_else(|| Fail(RmtStatus::NullPointer, format!("{what} is null")))
}

fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    // SAFETY: callers pass either null or a valid, writable pointer.
    unsafe { p.as_mut() }.ok_or_else(|| Fail(RmtStatus::NullPointer, format!("{what} is null")))
}

fn string_arg(p: *const c_char, what: &str) -> Result<String, Fail> {
    if p.is_null() {
        return Err(Fail(RmtStatus::NullPointer, format!("{what} is null")));
    }
    // SAFETY: non-null and NUL-terminated by contract.
    let s = unsafe { CStr::from_ptr(p) };
    s.to_str()
        .map(str::to_owned)
        .map_err(|_| Fail(RmtStatus::InvalidArgument, format!("{what} is not valid UTF-8")))
}

fn buffer<'a>(p: *mut f64, len: usize, needed: usize, what: &str) -> Result<&'a mut [f64], Fail> {
    if p.is_null() {
        return Err(Fail(RmtStatus::NullPointer, format!("{what} is null")));
    }
    if len < needed {
        return Err(Fail(RmtStatus::BufferTooSmall, format!("{what} holds {len} values, {needed} needed")));
    }
    // SAFETY: non-null and at least `len >= needed` elements by contract.
    Ok(unsafe { std::slice::from_raw_parts_mut(p, needed) })
}

fn model(y: f64) -> Result<MpModel, Fail> {
    Ok(MpModel::new(y)?)
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn rmt_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn rmt_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Resolves a catalog name such as `"rademacher"` or
/// `"gauss-divisible:t=0.5:base=rademacher"`.
#[no_mangle]
pub extern "C" fn rmt_atom_from_name(name: *const c_char, atom_out: *mut *mut RmtAtom) -> RmtStatus {
    guard(|| {
        let slot = out(atom_out, "atom_out")?;
        let name = string_arg(name, "name")?;
        let atom = AtomDistribution::from_name(&name)?;
        *slot = Box::into_raw(Box::new(RmtAtom(atom)));
        Ok(())
    })
}

/// Releases an atom; null is ignored.
#[no_mangle]
pub extern "C" fn rmt_atom_free(atom: *mut RmtAtom) {
    if !atom.is_null() {
        // SAFETY: produced by `Box::into_raw` in this library.
        drop(unsafe { Box::from_raw(atom) });
    }
}

/// Exact `E Re(ζ)^m Im(ζ)^l`.
#[no_mangle]
pub extern "C" fn rmt_atom_mixed_moment(atom: *const RmtAtom, m: usize, l: usize, value_out: *mut f64) -> RmtStatus {
    guard(|| {
        let a = non_null(atom, "atom")?;
        *out(value_out, "value_out")? = a.0.mixed_moment(m, l)?;
        Ok(())
    })
}

/// Whether two atoms agree on every mixed moment of total order `<= k`.
#[no_mangle]
pub extern "C" fn rmt_atom_match_order(
    a: *const RmtAtom,
    b: *const RmtAtom,
    k: usize,
    matched_out: *mut bool,
) -> RmtStatus {
    guard(|| {
        let (a, b) = (non_null(a, "a")?, non_null(b, "b")?);
        *out(matched_out, "matched_out")? = match_order(&a.0, &b.0, k)?.matched;
        Ok(())
    })
}

/// Draws a `p × n` matrix of iid entries; bit-reproducible for a given seed.
/// A tall request (`p > n`) is stored transposed.
#[no_mangle]
pub extern "C" fn rmt_matrix_generate(
    p: usize,
    n: usize,
    atom: *const RmtAtom,
    seed: u64,
    matrix_out: *mut *mut RmtMatrix,
) -> RmtStatus {
    guard(|| {
        let slot = out(matrix_out, "matrix_out")?;
        let a = non_null(atom, "atom")?;
        let m = generate_matrix(p, n, &a.0, seed)?;
        *slot = Box::into_raw(Box::new(RmtMatrix(m)));
        Ok(())
    })
}

/// Builds a matrix from `rows × cols` row-major interleaved `(re, im)` pairs.
#[no_mangle]
pub extern "C" fn rmt_matrix_from_values(
    rows: usize,
    cols: usize,
    values: *const f64,
    len: usize,
    matrix_out: *mut *mut RmtMatrix,
) -> RmtStatus {
    guard(|| {
        let slot = out(matrix_out, "matrix_out")?;
        if values.is_null() {
            return Err(Fail(RmtStatus::NullPointer, "values is null".into()));
        }
        let needed = 2 * rows * cols;
        if len < needed {
            return Err(Fail(RmtStatus::BufferTooSmall, format!("values holds {len} numbers, {needed} needed")));
        }
        // SAFETY: non-null with at least `needed` elements by contract.
        let v = unsafe { std::slice::from_raw_parts(values, needed) };
        let m = DataMatrix::from_fn(rows, cols, |i, j| {
            let k = 2 * (i * cols + j);
            c64::new(v[k], v[k + 1])
        })?;
        *slot = Box::into_raw(Box::new(RmtMatrix(m)));
        Ok(())
    })
}

#[no_mangle]
pub extern "C" fn rmt_matrix_free(matrix: *mut RmtMatrix) {
    if !matrix.is_null() {
        // SAFETY: produced by `Box::into_raw` in this library.
        drop(unsafe { Box::from_raw(matrix) });
    }
}

/// Stored dimensions, `p ≤ n`.
#[no_mangle]
pub extern "C" fn rmt_matrix_dims(matrix: *const RmtMatrix, p_out: *mut usize, n_out: *mut usize) -> RmtStatus {
    guard(|| {
        let m = non_null(matrix, "matrix")?;
        *out(p_out, "p_out")? = m.0.p();
        *out(n_out, "n_out")? = m.0.n();
        Ok(())
    })
}

/// Ascending eigenvalues `λ_1 ≤ … ≤ λ_p` of `(1/n) M M*` into `values[0..p]`.
#[no_mangle]
pub extern "C" fn rmt_matrix_spectrum(matrix: *const RmtMatrix, values: *mut f64, len: usize) -> RmtStatus {
    guard(|| {
        let m = non_null(matrix, "matrix")?;
        let dst = buffer(values, len, m.0.p(), "values")?;
        dst.copy_from_slice(&spectrum(&m.0)?);
        Ok(())
    })
}

/// Full singular value system, checked against its residuals.
#[no_mangle]
pub extern "C" fn rmt_svd_compute(matrix: *const RmtMatrix, svd_out: *mut *mut RmtSvd) -> RmtStatus {
    guard(|| {
        let slot = out(svd_out, "svd_out")?;
        let m = non_null(matrix, "matrix")?;
        *slot = Box::into_raw(Box::new(RmtSvd(svd_full(&m.0)?)));
        Ok(())
    })
}

#[no_mangle]
pub extern "C" fn rmt_svd_free(svd: *mut RmtSvd) {
    if !svd.is_null() {
        // SAFETY: produced by `Box::into_raw` in this library.
        drop(unsafe { Box::from_raw(svd) });
    }
}

/// Ascending singular values `σ_1 ≤ … ≤ σ_p` into `values[0..p]`.
#[no_mangle]
pub extern "C" fn rmt_svd_sigma(svd: *const RmtSvd, values: *mut f64, len: usize) -> RmtStatus {
    guard(|| {
        let s = non_null(svd, "svd")?;
        buffer(values, len, s.0.p, "values")?.copy_from_slice(&s.0.sigma);
        Ok(())
    })
}

/// Singular vector `index` (0-based, paired with `σ_{index+1}`) as interleaved
/// `(re, im)` pairs: `2n` numbers for the right side, `2p` for the left.
#[no_mangle]
pub extern "C" fn rmt_svd_vector(
    svd: *const RmtSvd,
    side: RmtVectorSide,
    index: usize,
    values: *mut f64,
    len: usize,
) -> RmtStatus {
    guard(|| {
        let s = non_null(svd, "svd")?;
        if index >= s.0.p {
            return Err(Fail(RmtStatus::InvalidArgument, format!("index {index} outside 0..{}", s.0.p)));
        }
        let mat = match side {
            RmtVectorSide::Right => &s.0.right,
            RmtVectorSide::Left => &s.0.left,
        };
        let dst = buffer(values, len, 2 * mat.nrows(), "values")?;
        for r in 0..mat.nrows() {
            dst[2 * r] = mat[(r, index)].re;
            dst[2 * r + 1] = mat[(r, index)].im;
        }
        Ok(())
    })
}

/// Spectral edges `((1-√y)², (1+√y)²)` for `0 < y ≤ 1`.
#[no_mangle]
pub extern "C" fn rmt_mp_edges(y: f64, a_out: *mut f64, b_out: *mut f64) -> RmtStatus {
    guard(|| {
        let m = model(y)?;
        *out(a_out, "a_out")? = m.a;
        *out(b_out, "b_out")? = m.b;
        Ok(())
    })
}

#[no_mangle]
pub extern "C" fn rmt_mp_density(x: f64, y: f64, value_out: *mut f64) -> RmtStatus {
    guard(|| {
        *out(value_out, "value_out")? = model(y)?.density(x);
        Ok(())
    })
}

#[no_mangle]
pub extern "C" fn rmt_mp_cdf(x: f64, y: f64, value_out: *mut f64) -> RmtStatus {
    guard(|| {
        *out(value_out, "value_out")? = model(y)?.cdf(x);
        Ok(())
    })
}

#[no_mangle]
pub extern "C" fn rmt_mp_quantile(q: f64, y: f64, value_out: *mut f64) -> RmtStatus {
    guard(|| {
        if !(0.0..=1.0).contains(&q) {
            return Err(Fail(RmtStatus::InvalidArgument, format!("q = {q} outside [0, 1]")));
        }
        *out(value_out, "value_out")? = model(y)?.quantile(q);
        Ok(())
    })
}

/// MP Stieltjes transform at `z = re + i·im`, `im > 0`.
#[no_mangle]
pub extern "C" fn rmt_mp_stieltjes(re: f64, im: f64, y: f64, re_out: *mut f64, im_out: *mut f64) -> RmtStatus {
    guard(|| {
        let s = model(y)?.stieltjes(c64::new(re, im))?;
        *out(re_out, "re_out")? = s.re;
        *out(im_out, "im_out")? = s.im;
        Ok(())
    })
}

/// Dyson sine kernel `sin(π(x-y)) / (π(x-y))`, 1 on the diagonal.
#[no_mangle]
pub extern "C" fn rmt_sine_kernel(x: f64, y: f64) -> f64 {
    sine_kernel(x, y)
}

/// Parses config text, runs the experiment and returns the report as JSON.
/// `json_out` must be released with [`rmt_string_free`]. `passed_out` may be null.
#[no_mangle]
pub extern "C" fn rmt_run_config(config: *const c_char, json_out: *mut *mut c_char, passed_out: *mut bool) -> RmtStatus {
    guard(|| {
        let slot = out(json_out, "json_out")?;
        let text = string_arg(config, "config")?;
        let cfg: ExperimentConfig = text.parse()?;
        let report = run_experiment(&cfg)?;
        if !passed_out.is_null() {
            *out(passed_out, "passed_out")? = report.passed;
        }
        let json = CString::new(report.to_json()?).map_err(|e| Fail(RmtStatus::Other, e.to_string()))?;
        *slot = json.into_raw();
        Ok(())
    })
}

/// Releases a string returned by this library; null is ignored.
#[no_mangle]
pub extern "C" fn rmt_string_free(s: *mut c_char) {
    if !s.is_null() {
        // SAFETY: produced by `CString::into_raw` in this library.
        drop(unsafe { CString::from_raw(s) });
    }
}
