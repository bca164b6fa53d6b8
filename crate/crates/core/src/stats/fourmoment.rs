//! Monte Carlo comparison of smooth statistics of individual eigenvalues
//! across two ensembles.

use rand::Rng;
use serde::Serialize;

use super::bulk_indices;
use crate::atoms::{matched_order, AtomDistribution};
use crate::error::{Error, Result};
use crate::seeding::rng_from_seed;
use crate::spectral::{generate_matrix, spectrum};
use crate::trials::{mean_and_stderr, run_trials};

/// Highest order probed when recording how well two atom laws match.
pub const MATCH_PROBE_ORDER: usize = 6;

/// Atom law and dimensions of a data-matrix ensemble.
#[derive(Debug, Clone)]
pub struct EnsembleSpec {
    pub atom: AtomDistribution,
    pub p: usize,
    pub n: usize,
}

impl Serialize for EnsembleSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("EnsembleSpec", 3)?;
        st.serialize_field("atom", self.atom.name())?;
        st.serialize_field("p", &self.p)?;
        st.serialize_field("n", &self.n)?;
        st.end()
    }
}

/// Ascending spectra of `trials` independent draws; trial `t` uses seed
/// `derive_seed(master, t)`.
pub fn ensemble_spectra(spec: &EnsembleSpec, trials: usize, master: u64) -> Result<Vec<Vec<f64>>> {
    run_trials(trials, master, |_, seed| {
        spectrum(&generate_matrix(spec.p, spec.n, &spec.atom, seed)?)
    })
}

/// `G(x) = Π_j exp(-(x_j - μ_j)² / 2w²)`, applied to `x_j = n λ_{i_j}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestFunctionSpec {
    pub centers: Vec<f64>,
    pub width: f64,
}

impl TestFunctionSpec {
    pub fn new(centers: Vec<f64>, width: f64) -> Result<Self> {
        if centers.is_empty() || centers.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument("test function needs finite centers".into()));
        }
        if !(width > 0.0) || !width.is_finite() {
            return Err(Error::InvalidArgument(format!("width must be positive, got {width}")));
        }
        Ok(TestFunctionSpec { centers, width })
    }

    pub fn arity(&self) -> usize {
        self.centers.len()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let q: f64 = x
            .iter()
            .zip(&self.centers)
            .map(|(x, m)| ((x - m) / self.width).powi(2))
            .sum();
        (-0.5 * q).exp()
    }

    /// Bounds on `sup_x |∇^j G(x)|` (Frobenius norm of the derivative tensor)
    /// for `j = 0..=5`.
    pub fn derivative_bounds(&self) -> [f64; 6] {
        let m: Vec<f64> = (0..=5).map(|a| hermite_envelope_max(a) / self.width.powi(a as i32)).collect();
        let k = self.arity();
        let mut out = [0.0; 6];
        for (j, o) in out.iter_mut().enumerate() {
            let mut total = 0.0;
            for_each_composition(j, k, &mut |parts| {
                let mut term = factorial(j);
                for &a in parts {
                    term *= m[a] * m[a] / factorial(a);
                }
                total += term;
            });
            *o = total.sqrt();
        }
        out
    }

    /// Smallest `c0 ≥ 0` with every derivative bound at most `n^{c0}`.
    pub fn certificate_exponent(&self, n: usize) -> f64 {
        let ln = (n as f64).ln();
        self.derivative_bounds()
            .iter()
            .map(|b| (b.ln() / ln).max(0.0))
            .fold(0.0, f64::max)
    }

    /// `count` functions with centers `base[j] + U(-spread, spread)` and
    /// widths `U(width_lo, width_hi)`, drawn from `seed`.
    pub fn family(
        count: usize,
        base: &[f64],
        spread: f64,
        (width_lo, width_hi): (f64, f64),
        seed: u64,
    ) -> Result<Vec<Self>> {
        if !(width_lo > 0.0 && width_hi >= width_lo) || !(spread >= 0.0) {
            return Err(Error::InvalidArgument("invalid test-function family parameters".into()));
        }
        let mut rng = rng_from_seed(seed);
        (0..count)
            .map(|_| {
                let centers = base.iter().map(|b| b + spread * (2.0 * rng.random::<f64>() - 1.0)).collect();
                let width = width_lo + (width_hi - width_lo) * rng.random::<f64>();
                Self::new(centers, width)
            })
            .collect()
    }
}

fn factorial(a: usize) -> f64 {
    (1..=a).map(|i| i as f64).product()
}

fn for_each_composition(total: usize, parts: usize, f: &mut dyn FnMut(&[usize])) {
    fn rec(rest: usize, slot: usize, buf: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
        if slot + 1 == buf.len() {
            buf[slot] = rest;
            f(buf);
            return;
        }
        for a in 0..=rest {
            buf[slot] = a;
            rec(rest - a, slot + 1, buf, f);
        }
    }
    let mut buf = vec![0; parts];
    rec(total, 0, &mut buf, f);
}

/// Probabilists' Hermite polynomial `He_a(t)`.
fn hermite(a: usize, t: f64) -> f64 {
    let (mut h0, mut h1) = (1.0, t);
    if a == 0 {
        return h0;
    }
    for k in 1..a {
        let h2 = t * h1 - k as f64 * h0;
        h0 = h1;
        h1 = h2;
    }
    h1
}

/// `sup_t |He_a(t) e^{-t²/2}|`, the sup of the `a`-th derivative of
/// `e^{-t²/2}`. Its critical points are the roots of `He_{a+1}`, located by
/// sign changes on a grid and polished by bisection.
fn hermite_envelope_max(a: usize) -> f64 {
    let f = |t: f64| (hermite(a, t) * (-0.5 * t * t).exp()).abs();
    let mut best = f(0.0);
    let steps = 4000;
    let (lo, hi) = (-8.0, 8.0);
    let step = (hi - lo) / steps as f64;
    for s in 0..steps {
        let (mut x0, mut x1) = (lo + s as f64 * step, lo + (s + 1) as f64 * step);
        let (mut f0, f1) = (hermite(a + 1, x0), hermite(a + 1, x1));
        if f0 == 0.0 {
            best = best.max(f(x0));
            continue;
        }
        if f0 * f1 > 0.0 {
            continue;
        }
        for _ in 0..80 {
            let mid = 0.5 * (x0 + x1);
            let fm = hermite(a + 1, mid);
            if f0 * fm <= 0.0 {
                x1 = mid;
            } else {
                x0 = mid;
                f0 = fm;
            }
        }
        best = best.max(f(0.5 * (x0 + x1)));
    }
    best
}

/// Shared protocol of a four-moment comparison.
#[derive(Debug, Clone, Serialize)]
pub struct FourMomentPlan {
    /// 1-based eigenvalue indices `i_1, …, i_k`.
    pub indices: Vec<usize>,
    /// Bulk parameter the indices must respect.
    pub eps: f64,
    pub trials: usize,
    pub seed_a: u64,
    pub seed_b: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FourMomentResult {
    pub test_function: TestFunctionSpec,
    pub mean_a: f64,
    pub stderr_a: f64,
    pub mean_b: f64,
    pub stderr_b: f64,
    /// `|E_A G - E_B G|`.
    pub delta: f64,
    pub stderr_delta: f64,
    /// Largest `k ≤ 6` to which the two atom laws match.
    pub matched_order: usize,
}

impl FourMomentResult {
    /// `delta` in units of its standard error.
    pub fn z_score(&self) -> f64 {
        if self.stderr_delta > 0.0 {
            self.delta / self.stderr_delta
        } else if self.delta == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

pub fn four_moment_compare(
    a: &EnsembleSpec,
    b: &EnsembleSpec,
    g: &TestFunctionSpec,
    plan: &FourMomentPlan,
) -> Result<FourMomentResult> {
    let mut v = four_moment_compare_many(a, b, std::slice::from_ref(g), plan)?;
    Ok(v.remove(0))
}

/// Evaluates every test function on one shared set of spectra per ensemble.
pub fn four_moment_compare_many(
    a: &EnsembleSpec,
    b: &EnsembleSpec,
    gs: &[TestFunctionSpec],
    plan: &FourMomentPlan,
) -> Result<Vec<FourMomentResult>> {
    if plan.trials < 2 {
        return Err(Error::Precondition(format!(
            "standard errors need at least 2 trials, got {}",
            plan.trials
        )));
    }
    if (a.p, a.n) != (b.p, b.n) {
        return Err(Error::ShapeMismatch { expected: (a.p, a.n), actual: (b.p, b.n) });
    }
    if plan.indices.is_empty() {
        return Err(Error::InvalidArgument("no eigenvalue indices given".into()));
    }
    let Some((lo, hi)) = bulk_indices(a.p, plan.eps) else {
        return Err(Error::Precondition(format!("bulk is empty at eps = {}", plan.eps)));
    };
    if let Some(i) = plan.indices.iter().find(|&&i| i < lo || i > hi) {
        return Err(Error::Precondition(format!("index {i} is outside the bulk {lo}..={hi}")));
    }
    if let Some(g) = gs.iter().find(|g| g.arity() != plan.indices.len()) {
        return Err(Error::InvalidArgument(format!(
            "test function arity {} does not match {} indices",
            g.arity(),
            plan.indices.len()
        )));
    }
    let order = matched_order(&a.atom, &b.atom, MATCH_PROBE_ORDER)?;
    let sa = ensemble_spectra(a, plan.trials, plan.seed_a)?;
    let sb = ensemble_spectra(b, plan.trials, plan.seed_b)?;
    Ok(four_moment_from_spectra(&sa, &sb, a.n, &plan.indices, gs, order))
}

/// Evaluates each `G` on `(n λ_{i_1}, …)` of precomputed ascending spectra.
/// Indices are 1-based and must be valid for every spectrum.
pub fn four_moment_from_spectra(
    sa: &[Vec<f64>],
    sb: &[Vec<f64>],
    n: usize,
    indices: &[usize],
    gs: &[TestFunctionSpec],
    matched_order: usize,
) -> Vec<FourMomentResult> {
    let n = n as f64;
    let pick = |s: &Vec<f64>| -> Vec<f64> { indices.iter().map(|&i| n * s[i - 1]).collect() };
    let xa: Vec<Vec<f64>> = sa.iter().map(pick).collect();
    let xb: Vec<Vec<f64>> = sb.iter().map(pick).collect();
    gs.iter()
        .map(|g| {
            let va: Vec<f64> = xa.iter().map(|x| g.eval(x)).collect();
            let vb: Vec<f64> = xb.iter().map(|x| g.eval(x)).collect();
            let (mean_a, stderr_a) = mean_and_stderr(&va);
            let (mean_b, stderr_b) = mean_and_stderr(&vb);
            FourMomentResult {
                test_function: g.clone(),
                mean_a,
                stderr_a,
                mean_b,
                stderr_b,
                delta: (mean_a - mean_b).abs(),
                stderr_delta: stderr_a.hypot(stderr_b),
                matched_order,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn envelope_maxima() {
        assert!((hermite_envelope_max(0) - 1.0).abs() < 1e-15);
        assert!((hermite_envelope_max(1) - (-0.5f64).exp()).abs() < 1e-12);
        assert!((hermite_envelope_max(2) - 1.0).abs() < 1e-12);
        // He_3 e^{-t²/2} peaks at the roots of He_4: t² = 3 - √6.
        let t2: f64 = 3.0 - 6f64.sqrt();
        let t = t2.sqrt();
        let expect = (t * t2 - 3.0 * t).abs() * (-0.5 * t2).exp();
        assert!((hermite_envelope_max(3) - expect).abs() < 1e-12);
    }

    #[test]
    fn bounds_scale_with_width() {
        let g = TestFunctionSpec::new(vec![0.0], 1.0).unwrap();
        let h = TestFunctionSpec::new(vec![0.0], 2.0).unwrap();
        let (bg, bh) = (g.derivative_bounds(), h.derivative_bounds());
        for j in 0..6 {
            assert!((bh[j] - bg[j] / 2f64.powi(j as i32)).abs() < 1e-12);
        }
        assert_eq!(bg[0], 1.0);
        let two = TestFunctionSpec::new(vec![0.0, 1.0], 1.0).unwrap();
        let b2 = two.derivative_bounds();
        // Gradient: |∇G|² ≤ 2 M1² for two factors.
        assert!((b2[1] - (2.0f64).sqrt() * (-0.5f64).exp()).abs() < 1e-12);
        assert!(g.certificate_exponent(400) >= 0.0);
        assert!(TestFunctionSpec::new(vec![0.0], 0.0).is_err());
    }

    #[test]
    fn family_is_seeded() {
        let a = TestFunctionSpec::family(5, &[10.0], 1.0, (1.0, 2.0), 7).unwrap();
        let b = TestFunctionSpec::family(5, &[10.0], 1.0, (1.0, 2.0), 7).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|g| g.width >= 1.0 && (g.centers[0] - 10.0).abs() <= 1.0));
    }

    #[test]
    fn identical_streams_give_zero() {
        let spec = EnsembleSpec { atom: AtomDistribution::rademacher(), p: 20, n: 20 };
        let g = TestFunctionSpec::new(vec![20.0], 1.5).unwrap();
        let plan = FourMomentPlan { indices: vec![10], eps: 0.1, trials: 8, seed_a: 5, seed_b: 5 };
        let r = four_moment_compare(&spec, &spec, &g, &plan).unwrap();
        assert_eq!(r.delta, 0.0);
        assert_eq!(r.matched_order, MATCH_PROBE_ORDER);
        let bad = FourMomentPlan { trials: 1, ..plan.clone() };
        assert!(four_moment_compare(&spec, &spec, &g, &bad).is_err());
        let outside = FourMomentPlan { indices: vec![1], ..plan };
        assert!(four_moment_compare(&spec, &spec, &g, &outside).is_err());
    }
}
