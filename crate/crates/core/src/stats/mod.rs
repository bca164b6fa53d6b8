//! Spectral statistics: interval counts, concentration, bulk containment,
//! delocalization, gaps, correlation functions and the four-moment comparator.

mod correlation;
mod fourmoment;
mod gaps;

pub use correlation::{
    averaged_correlation, kpoint_correlation, l2_error_vs_sine, sine_det_prediction, sine_kernel,
    sine_prediction_binned, BinSpec, CorrelationEstimate, MIN_CORRELATION_SAMPLES,
};
pub use fourmoment::{
    ensemble_spectra, four_moment_compare, four_moment_compare_many, four_moment_from_spectra,
    EnsembleSpec,
    FourMomentPlan, FourMomentResult, TestFunctionSpec, MATCH_PROBE_ORDER,
};
pub use gaps::{gap_report, q_value, regularized_gap, GapReport, QValue, RegularizedGap, RegularizedGapRequest};

use serde::Serialize;

use crate::atoms::AtomDistribution;
use crate::error::{Error, Result};
use crate::mp::MpModel;
use crate::serde_ext::f64_or_sentinel;
use crate::spectral::{spectrum, DataMatrix, SpectralDecomposition};

/// Ascending eigenvalues of `W` with their provenance.
#[derive(Debug, Clone, Serialize)]
pub struct SpectrumSample {
    pub lambda: Vec<f64>,
    /// `σ_i = √(n λ_i)`.
    pub sigma: Vec<f64>,
    pub n: usize,
    pub p: usize,
    pub y: f64,
    pub atom: String,
    pub seed: Option<u64>,
}

impl SpectrumSample {
    pub fn from_matrix(m: &DataMatrix) -> Result<Self> {
        let lambda = spectrum(m)?;
        Self::build(lambda, m.n(), m.atom().to_string(), m.seed())
    }

    /// Draws a `p × n` matrix from `dist` and keeps only its spectrum.
    pub fn generate(p: usize, n: usize, dist: &AtomDistribution, seed: u64) -> Result<Self> {
        Self::from_matrix(&crate::spectral::generate_matrix(p, n, dist, seed)?)
    }

    /// Wraps an explicit spectrum; it must be ascending, nonnegative and have `p ≤ n` entries.
    pub fn from_lambda(lambda: Vec<f64>, n: usize) -> Result<Self> {
        if lambda.iter().any(|x| !(*x >= 0.0) || !x.is_finite()) {
            return Err(Error::InvalidArgument("eigenvalues must be finite and nonnegative".into()));
        }
        if lambda.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidArgument("eigenvalues must be ascending".into()));
        }
        Self::build(lambda, n, "explicit".into(), None)
    }

    fn build(lambda: Vec<f64>, n: usize, atom: String, seed: Option<u64>) -> Result<Self> {
        let p = lambda.len();
        if p == 0 || p > n {
            return Err(Error::InvalidArgument(format!("need 1 <= p <= n, got p = {p}, n = {n}")));
        }
        let sigma = lambda.iter().map(|l| (n as f64 * l).sqrt()).collect();
        Ok(SpectrumSample { lambda, sigma, n, p, y: p as f64 / n as f64, atom, seed })
    }

    pub fn model(&self) -> Result<MpModel> {
        MpModel::from_dims(self.p, self.n)
    }
}

/// 1-based bulk index range `⌈εp⌉ ..= ⌊(1-ε)p⌋`, clipped to `1..=p`;
/// `None` when empty.
pub fn bulk_indices(p: usize, eps: f64) -> Option<(usize, usize)> {
    if !(eps > 0.0) || eps >= 0.5 {
        return None;
    }
    let lo = ((eps * p as f64).ceil() as usize).max(1);
    let hi = (((1.0 - eps) * p as f64).floor() as usize).min(p);
    (lo <= hi).then_some((lo, hi))
}

/// Number of eigenvalues in the closed interval `[lo, hi]`.
pub fn count_interval(s: &SpectrumSample, lo: f64, hi: f64) -> Result<usize> {
    if !(lo <= hi) {
        return Err(Error::InvalidArgument(format!("interval [{lo}, {hi}] has lo > hi")));
    }
    let start = s.lambda.partition_point(|&x| x < lo);
    let end = s.lambda.partition_point(|&x| x <= hi);
    Ok(end.saturating_sub(start))
}

#[derive(Debug, Clone, Serialize)]
pub struct ConcentrationResult {
    pub count: usize,
    /// `p ∫_I ρ`.
    pub expected: f64,
    pub deviation: f64,
    /// `deviation / p`.
    pub ratio: f64,
}

/// Compares `N_I` with `p ∫_I ρ_MP`. `I` must lie in `[a+eps, b-eps]`.
pub fn concentration_test(
    s: &SpectrumSample,
    lo: f64,
    hi: f64,
    model: &MpModel,
    eps: f64,
) -> Result<ConcentrationResult> {
    if !(eps >= 0.0) {
        return Err(Error::InvalidArgument(format!("eps must be nonnegative, got {eps}")));
    }
    if !(lo <= hi) {
        return Err(Error::InvalidArgument(format!("interval [{lo}, {hi}] has lo > hi")));
    }
    if lo < model.a + eps || hi > model.b - eps {
        return Err(Error::Precondition(format!(
            "interval [{lo}, {hi}] leaves the bulk window [{}, {}]",
            model.a + eps,
            model.b - eps
        )));
    }
    let count = count_interval(s, lo, hi)?;
    let expected = s.p as f64 * (model.cdf(hi) - model.cdf(lo));
    let deviation = (count as f64 - expected).abs();
    Ok(ConcentrationResult { count, expected, deviation, ratio: deviation / s.p as f64 })
}

#[derive(Debug, Clone, Serialize)]
pub struct BulkContainment {
    pub holds: bool,
    /// Largest `ε'` with all bulk eigenvalues in `[a+ε', b-ε']`; infinite
    /// when the index range is empty.
    #[serde(serialize_with = "f64_or_sentinel")]
    pub margin: f64,
    /// 1-based inclusive range of the bulk indices, if any.
    pub indices: Option<(usize, usize)>,
}

/// Checks that the bulk eigenvalues stay strictly inside `(a, b)`.
pub fn bulk_containment(s: &SpectrumSample, model: &MpModel, eps: f64) -> Result<BulkContainment> {
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("eps must be positive, got {eps}")));
    }
    let Some((lo, hi)) = bulk_indices(s.p, eps) else {
        return Ok(BulkContainment { holds: true, margin: f64::INFINITY, indices: None });
    };
    let min = s.lambda[lo - 1];
    let max = s.lambda[hi - 1];
    let margin = (min - model.a).min(model.b - max);
    Ok(BulkContainment { holds: margin > 0.0, margin, indices: Some((lo, hi)) })
}

/// Largest `N_I / (n|I|)` over a dyadic family of intervals inside
/// `[a+eps, b-eps]` with lengths from `log²n / n` upwards and starting points
/// every half length.
pub fn eigen_upper_check(s: &SpectrumSample, model: &MpModel, eps: f64) -> Result<f64> {
    let lo = model.a + eps;
    let hi = model.b - eps;
    if !(hi > lo) {
        return Err(Error::Precondition(format!("bulk window [{lo}, {hi}] is empty")));
    }
    let n = s.n as f64;
    let mut len = n.ln().powi(2) / n;
    let mut best: f64 = 0.0;
    while len <= hi - lo {
        let mut start = lo;
        while start + len <= hi + 1e-12 {
            best = best.max(interval_ratio(s, start, start + len)?);
            start += 0.5 * len;
        }
        len *= 2.0;
    }
    Ok(best)
}

/// `N_I / (n |I|)` for a single interval of positive length.
pub fn interval_ratio(s: &SpectrumSample, lo: f64, hi: f64) -> Result<f64> {
    if !(hi > lo) {
        return Err(Error::InvalidArgument(format!("interval [{lo}, {hi}] has no length")));
    }
    Ok(count_interval(s, lo, hi)? as f64 / (s.n as f64 * (hi - lo)))
}

#[derive(Debug, Clone, Serialize)]
pub struct DelocalizationStat {
    /// Number of singular vector pairs whose `λ_i` lies in the window.
    pub vectors: usize,
    /// Largest coordinate modulus over those `u_i` and `v_i`.
    pub max_coordinate: f64,
    /// `√n · max_coordinate`.
    pub normalized: f64,
    /// Mean over those pairs of `max(‖u_i‖_∞, ‖v_i‖_∞)`.
    pub mean_coordinate: f64,
}

/// Sup-norm coordinates of the singular vectors with `λ_i ∈ [a+eps, b-eps]`.
pub fn delocalization_stat(
    d: &SpectralDecomposition,
    model: &MpModel,
    eps: f64,
) -> Result<DelocalizationStat> {
    let (lo, hi) = (model.a + eps, model.b - eps);
    let mut count = 0;
    let mut max: f64 = 0.0;
    let mut sum = 0.0;
    for k in 0..d.p {
        if !(d.lambda[k] >= lo && d.lambda[k] <= hi) {
            continue;
        }
        let u = (0..d.n).map(|r| d.right[(r, k)].norm()).fold(0.0, f64::max);
        let v = (0..d.p).map(|r| d.left[(r, k)].norm()).fold(0.0, f64::max);
        let m = u.max(v);
        count += 1;
        max = max.max(m);
        sum += m;
    }
    if count == 0 {
        return Err(Error::EmptyWindow);
    }
    Ok(DelocalizationStat {
        vectors: count,
        max_coordinate: max,
        normalized: max * (d.n as f64).sqrt(),
        mean_coordinate: sum / count as f64,
    })
}

/// Empirical frequency of an event over independent trials.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FrequencyReport {
    pub trials: usize,
    pub events: usize,
    pub frequency: f64,
    /// Binomial standard error `√(f(1-f)/trials)`.
    pub stderr: f64,
}

impl FrequencyReport {
    pub fn from_flags(flags: impl IntoIterator<Item = bool>) -> Self {
        let (mut trials, mut events) = (0, 0);
        for f in flags {
            trials += 1;
            events += f as usize;
        }
        let frequency = if trials == 0 { f64::NAN } else { events as f64 / trials as f64 };
        let stderr = (frequency * (1.0 - frequency) / trials as f64).sqrt();
        FrequencyReport { trials, events, frequency, stderr }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::svd_full;
    use faer::{c64, Mat};

    fn sample(l: &[f64], n: usize) -> SpectrumSample {
        SpectrumSample::from_lambda(l.to_vec(), n).unwrap()
    }

    #[test]
    fn counts() {
        let s = sample(&[1.0, 2.0, 3.0], 3);
        assert_eq!(count_interval(&s, 1.5, 2.5).unwrap(), 1);
        assert_eq!(count_interval(&s, 5.0, 6.0).unwrap(), 0);
        assert_eq!(count_interval(&s, 1.0, 3.0).unwrap(), 3);
        assert!(count_interval(&s, 2.0, 1.0).is_err());
    }

    #[test]
    fn rejects_unsorted() {
        assert!(SpectrumSample::from_lambda(vec![2.0, 1.0], 2).is_err());
        assert!(SpectrumSample::from_lambda(vec![-1.0], 2).is_err());
        assert!(SpectrumSample::from_lambda(vec![1.0, 2.0, 3.0], 2).is_err());
    }

    #[test]
    fn concentration_degenerate_interval() {
        let m = MpModel::new(1.0).unwrap();
        let s = SpectrumSample::from_lambda(m.classical_locations(100), 100).unwrap();
        let r = concentration_test(&s, 1.3, 1.3, &m, 0.1).unwrap();
        assert_eq!(r.expected, 0.0);
        assert!(concentration_test(&s, 0.05, 1.0, &m, 0.1).is_err());
    }

    #[test]
    fn quantiles_are_contained() {
        let m = MpModel::new(1.0).unwrap();
        let s = SpectrumSample::from_lambda(m.classical_locations(200), 200).unwrap();
        let b = bulk_containment(&s, &m, 0.1).unwrap();
        assert!(b.holds && b.margin > 0.0);
        let b = bulk_containment(&s, &m, 0.5).unwrap();
        assert!(b.holds && b.margin.is_infinite() && b.indices.is_none());
    }

    #[test]
    fn quantile_upper_ratio() {
        let m = MpModel::new(1.0).unwrap();
        let s = SpectrumSample::from_lambda(m.classical_locations(500), 500).unwrap();
        assert!(eigen_upper_check(&s, &m, 0.1).unwrap() <= 2.0);
        assert_eq!(interval_ratio(&s, -1.0, -0.5).unwrap(), 0.0);
    }

    #[test]
    fn delocalization_extremes() {
        let one = DataMatrix::from_fn(1, 1, |_, _| c64::new(1.0, 0.0)).unwrap();
        let d = svd_full(&one).unwrap();
        let m = MpModel::new(1.0).unwrap();
        let s = delocalization_stat(&d, &m, 0.0).unwrap();
        assert!((s.normalized - 1.0).abs() < 1e-12);

        // One nonzero per row: singular vectors are standard basis vectors.
        let n = 4;
        let mut mat = Mat::<c64>::zeros(n, n);
        for i in 0..n {
            mat[(i, (i + 1) % n)] = c64::new(2.0 - 0.3 * i as f64, 0.0);
        }
        let dm = DataMatrix::from_mat(mat).unwrap();
        let d = svd_full(&dm).unwrap();
        let s = delocalization_stat(&d, &MpModel::new(1.0).unwrap(), 0.0).unwrap();
        assert!((s.normalized - 2.0).abs() < 1e-10);

        assert!(matches!(
            delocalization_stat(&d, &MpModel::new(1.0).unwrap(), 1.99),
            Err(Error::EmptyWindow)
        ));
    }

    #[test]
    fn bulk_range() {
        assert_eq!(bulk_indices(100, 0.1), Some((10, 90)));
        assert_eq!(bulk_indices(100, 0.5), None);
    }
}
