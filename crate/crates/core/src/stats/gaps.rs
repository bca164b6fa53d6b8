//! Gap statistics: the bulk gap property, `Q_i` and the regularized gap.

use serde::Serialize;

use super::bulk_indices;
use crate::error::{Error, Result};
use crate::serde_ext::f64_or_sentinel;
use crate::spectral::{spectrum, DataMatrix, DEGENERACY_TOL};

#[derive(Debug, Clone, Copy, Serialize)]
pub struct QValue {
    pub index: usize,
    #[serde(serialize_with = "f64_or_sentinel")]
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegularizedGapRequest {
    pub i0: usize,
    pub l: usize,
    /// Number of leading rows kept.
    pub p: usize,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct RegularizedGap {
    pub i0: usize,
    pub l: usize,
    pub p: usize,
    pub c1: f64,
    pub g: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GapReport {
    pub epsilon: f64,
    pub c: f64,
    pub c1: f64,
    pub bulk_indices: Option<(usize, usize)>,
    /// `min λ_{i+1} - λ_i` over bulk `i`; infinite for an empty bulk.
    #[serde(serialize_with = "f64_or_sentinel")]
    pub min_bulk_gap: f64,
    /// `n^{-1-c}`.
    pub threshold: f64,
    pub gap_property_holds: bool,
    pub q_values: Vec<QValue>,
    pub regularized: Vec<RegularizedGap>,
}

/// `Q_i = (1/n)(Σ_{j≠i} |σ_j-σ_i|^{-2} + (n-p)/σ_i² + Σ_j |σ_j+σ_i|^{-2})`
/// for ascending `sigma` and 1-based `i`. Infinite when `σ_i` is repeated or
/// vanishes (relative to `DEGENERACY_TOL · σ_max`).
pub fn q_value(sigma: &[f64], n: usize, i: usize) -> Result<f64> {
    let p = sigma.len();
    if i == 0 || i > p {
        return Err(Error::InvalidArgument(format!("index {i} outside 1..={p}")));
    }
    if p > n {
        return Err(Error::InvalidArgument(format!("p = {p} exceeds n = {n}")));
    }
    let smax = sigma.iter().cloned().fold(0.0, f64::max);
    let tol = DEGENERACY_TOL * smax;
    let si = sigma[i - 1];
    if si <= tol {
        return Ok(f64::INFINITY);
    }
    let mut sum = (n - p) as f64 / (si * si);
    for (j, &sj) in sigma.iter().enumerate() {
        if j != i - 1 {
            let d = (sj - si).abs();
            if d <= tol {
                return Ok(f64::INFINITY);
            }
            sum += 1.0 / (d * d);
        }
        sum += 1.0 / (sj + si).powi(2);
    }
    Ok(sum / n as f64)
}

/// The regularized gap
/// `inf_{1 ≤ i_- ≤ i0-l < i0 ≤ i_+ ≤ p} √N0 (σ_{i_+} - σ_{i_-}) / min(i_+ - i_-, log^{C1} N0)^{log^{0.9} N0}`
/// for ascending `sigma` (length `p`), natural logarithms.
///
/// Shrinking the admissible `i_-` range as `l` grows means the value is
/// nondecreasing in `l`.
pub fn regularized_gap(sigma: &[f64], i0: usize, l: usize, n0: usize, c1: f64) -> Result<f64> {
    let p = sigma.len();
    if l == 0 || l >= i0 || i0 > p {
        return Err(Error::InvalidArgument(format!(
            "regularized gap needs 1 <= l < i0 <= p, got l = {l}, i0 = {i0}, p = {p}"
        )));
    }
    if n0 < 2 {
        return Err(Error::InvalidArgument(format!("N0 must be at least 2, got {n0}")));
    }
    let ln = (n0 as f64).ln();
    let cap = ln.powf(c1);
    let expo = ln.powf(0.9);
    let scale = (n0 as f64).sqrt();
    let mut best = f64::INFINITY;
    for im in 1..=i0 - l {
        for ip in i0..=p {
            let width = ((ip - im) as f64).min(cap);
            let v = scale * (sigma[ip - 1] - sigma[im - 1]) / width.powf(expo);
            best = best.min(v);
        }
    }
    Ok(best)
}

fn sigma_from_lambda(lambda: &[f64], n: usize) -> Vec<f64> {
    lambda.iter().map(|l| (n as f64 * l).sqrt()).collect()
}

/// Gap statistics of `m`: bulk gap property at exponent `c`, `Q_i` at the
/// requested bulk indices (with `σ_i = √(n λ_i)`), and regularized gaps of row-truncated minors with
/// `N0 = p + n` taken from the full matrix.
pub fn gap_report(
    m: &DataMatrix,
    eps: f64,
    c: f64,
    c1: f64,
    q_indices: &[usize],
    requests: &[RegularizedGapRequest],
) -> Result<GapReport> {
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::InvalidArgument(format!("eps must lie in (0, 1/2), got {eps}")));
    }
    if !(c > 0.0) || !(c1 > 0.0) {
        return Err(Error::InvalidArgument(format!("c and C1 must be positive, got {c}, {c1}")));
    }
    let (p, n) = (m.p(), m.n());
    let bulk = bulk_indices(p, eps);
    for &i in q_indices {
        match bulk {
            Some((lo, hi)) if i >= lo && i <= hi => {}
            _ => {
                return Err(Error::Precondition(format!(
                    "index {i} is outside the bulk range {bulk:?}"
                )))
            }
        }
    }
    for r in requests {
        if r.p == 0 || r.p > p || r.l == 0 || r.l >= r.i0 || r.i0 > r.p {
            return Err(Error::Precondition(format!(
                "regularized gap request {r:?} needs 1 <= l < i0 <= p' <= {p}"
            )));
        }
    }

    let lambda = spectrum(m)?;
    let min_bulk_gap = match bulk {
        Some((lo, hi)) => (lo..=hi.min(p - 1))
            .map(|i| lambda[i] - lambda[i - 1])
            .fold(f64::INFINITY, f64::min),
        None => f64::INFINITY,
    };
    let threshold = (n as f64).powf(-1.0 - c);

    let sigma = sigma_from_lambda(&lambda, n);
    let q_values = q_indices
        .iter()
        .map(|&i| Ok(QValue { index: i, value: q_value(&sigma, n, i)? }))
        .collect::<Result<Vec<_>>>()?;

    let n0 = p + n;
    let mut regularized = Vec::with_capacity(requests.len());
    for r in requests {
        let s = if r.p == p {
            sigma.clone()
        } else {
            let minor = DataMatrix::from_mat(m.entries().subrows(0, r.p).to_owned())?;
            sigma_from_lambda(&spectrum(&minor)?, n)
        };
        regularized.push(RegularizedGap {
            i0: r.i0,
            l: r.l,
            p: r.p,
            c1,
            g: regularized_gap(&s, r.i0, r.l, n0, c1)?,
        });
    }

    Ok(GapReport {
        epsilon: eps,
        c,
        c1,
        bulk_indices: bulk,
        min_bulk_gap,
        threshold,
        gap_property_holds: min_bulk_gap >= threshold,
        q_values,
        regularized,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use faer::c64;

    #[test]
    fn q_direct_sum() {
        let sigma = [1.0, 2.0, 3.0, 4.0];
        // i = 2: Σ_{j≠i} 1/(σj-2)² = 1 + 1 + 1/4; (n-p) = 0; Σ_j 1/(σj+2)² = 1/9+1/16+1/25+1/36
        let expect = (2.25 + 1.0 / 9.0 + 1.0 / 16.0 + 1.0 / 25.0 + 1.0 / 36.0) / 4.0;
        assert!((q_value(&sigma, 4, 2).unwrap() - expect).abs() < 1e-15);
        assert!(q_value(&[1.0, 1.0, 2.0], 3, 1).unwrap().is_infinite());
        assert!(q_value(&[0.0, 1.0], 3, 1).unwrap().is_infinite());
    }

    #[test]
    fn repeated_singular_value_is_infinite() {
        // Orthogonal rows of equal norm give a repeated σ.
        let m = DataMatrix::from_real_fn(2, 3, |i, j| if i == j { 2.0 } else { 0.0 }).unwrap();
        let r = gap_report(&m, 0.4, 0.5, 10.0, &[1], &[]).unwrap();
        assert!(r.q_values[0].value.is_infinite());
        let json = serde_json::to_string(&r).unwrap();
        assert!(json.contains("\"inf\""));
    }

    #[test]
    fn regularized_tiny_exhaustive() {
        let sigma = [0.5, 1.25, 2.0];
        let n0 = 6;
        let ln = (n0 as f64).ln();
        let f = |im: usize, ip: usize| {
            (n0 as f64).sqrt() * (sigma[ip - 1] - sigma[im - 1])
                / ((ip - im) as f64).min(ln.powf(10.0)).powf(ln.powf(0.9))
        };
        let expect = [(1, 2), (1, 3)].iter().map(|&(a, b)| f(a, b)).fold(f64::INFINITY, f64::min);
        assert_eq!(regularized_gap(&sigma, 2, 1, n0, 10.0).unwrap(), expect);
        assert!(regularized_gap(&sigma, 2, 2, n0, 10.0).is_err());
    }

    #[test]
    fn report_on_small_matrix() {
        let m = DataMatrix::from_fn(6, 8, |i, j| c64::new((i * 7 + j * 3) as f64 % 5.0 - 2.0, (i + 2 * j) as f64 % 3.0 - 1.0)).unwrap();
        let req = [RegularizedGapRequest { i0: 3, l: 1, p: 5 }];
        let r = gap_report(&m, 0.2, 0.5, 10.0, &[2, 3], &req).unwrap();
        assert!(r.min_bulk_gap >= 0.0);
        assert_eq!(r.regularized.len(), 1);
        assert!(gap_report(&m, 0.2, 0.5, 10.0, &[1], &[]).is_err());
        let bad = [RegularizedGapRequest { i0: 3, l: 1, p: 7 }];
        assert!(gap_report(&m, 0.2, 0.5, 10.0, &[], &bad).is_err());
    }
}
