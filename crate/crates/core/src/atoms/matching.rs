//! Moment matching: order checks, bounded third-order matches, and
//! Gauss-divisible fourth-order matches.

use faer::c64;
use faer::linalg::solvers::Solve;
use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{truncate::TruncatedLaw, AtomDistribution, AtomKind, MomentTable, MOMENT_TOL};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentDiscrepancy {
    pub m: usize,
    pub l: usize,
    pub discrepancy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatchReport {
    pub order: usize,
    pub matched: bool,
    /// Largest discrepancy over `m + l <= order`, whether or not it exceeds tolerance.
    pub worst: Option<MomentDiscrepancy>,
}

/// Checks whether `a` and `b` agree on every mixed moment with `m + l <= k`.
pub fn match_order(a: &AtomDistribution, b: &AtomDistribution, k: usize) -> Result<MatchReport> {
    if k < 1 {
        return Err(Error::InvalidArgument("match order must be >= 1".into()));
    }
    a.moment_table(k)?.compare(&b.moment_table(k)?, k)
}

/// Largest `k <= max_k` to which `a` and `b` match (0 if they differ at order 1).
pub fn matched_order(a: &AtomDistribution, b: &AtomDistribution, max_k: usize) -> Result<usize> {
    let ta = a.moment_table(max_k)?;
    let tb = b.moment_table(max_k)?;
    let mut order = 0;
    for k in 1..=max_k {
        if !ta.compare(&tb, k)?.matched {
            break;
        }
        order = k;
    }
    Ok(order)
}

/// Complex law whose real and imaginary parts are iid copies of `real / √2`.
pub fn complexify(real: &AtomDistribution) -> Result<AtomDistribution> {
    if !real.is_real() {
        return Err(Error::InvalidArgument(format!(
            "complexify expects a real law, got '{}'",
            real.name()
        )));
    }
    let name = format!("complex:{}", real.name());
    match real.kind() {
        AtomKind::StandardRealGaussian => {
            Ok(AtomDistribution::standard_complex_gaussian().with_name(name))
        }
        AtomKind::GaussDivisible { t, base } => {
            Ok(AtomDistribution::gauss_divisible(complexify(base)?, *t)?.with_name(name))
        }
        _ => {
            let (points, probs) = discrete_points(real).ok_or_else(|| {
                Error::Unsupported(format!("complexify of '{}'", real.name()))
            })?;
            let h = std::f64::consts::FRAC_1_SQRT_2;
            let mut support = Vec::with_capacity(points.len() * points.len());
            let mut weights = Vec::with_capacity(points.len() * points.len());
            for (x, px) in points.iter().zip(&probs) {
                for (y, py) in points.iter().zip(&probs) {
                    support.push(c64::new(x.re * h, y.re * h));
                    weights.push(px * py);
                }
            }
            AtomDistribution::discrete(name, support, weights)
        }
    }
}

/// Support and probabilities of a law that is discrete after any truncation.
fn discrete_points(dist: &AtomDistribution) -> Option<(Vec<c64>, Vec<f64>)> {
    match dist.kind() {
        AtomKind::Discrete { support, probs } => Some((support.clone(), probs.clone())),
        AtomKind::Truncated(tr) => {
            let (support, probs) = match &tr.law {
                TruncatedLaw::Unchanged => discrete_points(&tr.base)?,
                TruncatedLaw::Discrete { support, probs } => (support.clone(), probs.clone()),
                _ => return None,
            };
            Some((
                support.iter().map(|z| (z - tr.shift) * tr.rescale).collect(),
                probs,
            ))
        }
        _ => None,
    }
}

// ---------------------------------------------------------------------------
// Third-order matching
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct ThirdOrderMatch {
    pub law: AtomDistribution,
    /// Achieved support radius `max |ζ|`.
    pub radius: f64,
    /// Worst mixed-moment discrepancy against the target, `m + l <= 3`.
    pub residual: f64,
}

/// Finds a discrete law with bounded support matching `target` to third order.
///
/// Two constructions are tried: a four-point law found by Levenberg–Marquardt
/// continuation from a symmetric cross, and an eight-point mixture of
/// two-point laws along four directions, whose skews solve a linear system.
/// The candidate with the smaller radius wins.
pub fn solve_third_order_match(target: &MomentTable) -> Result<ThirdOrderMatch> {
    if target.order() < 3 {
        return Err(Error::InvalidArgument(format!(
            "third-order matching needs a table of order >= 3, got {}",
            target.order()
        )));
    }
    let g = |m, l| target.get(m, l).unwrap();
    let cov = [[g(2, 0), g(1, 1)], [g(1, 1), g(0, 2)]];
    let third = [g(3, 0), g(2, 1), g(1, 2), g(0, 3)];
    let (evals, evecs) = sym2_eigen(cov);
    if evals[0] < -MOMENT_TOL {
        return Err(Error::InvalidArgument(
            "target covariance is not positive semidefinite".into(),
        ));
    }

    let mut candidates: Vec<Vec<(c64, f64)>> = Vec::new();
    if evals[0] <= 1e-12 {
        // All mass on the line spanned by the top eigenvector.
        let d = [evecs[0][1], evecs[1][1]];
        let skew = eval_cubic(&third, d);
        let (pts, probs) = two_point(skew);
        let scale = evals[1].max(0.0).sqrt();
        candidates.push(
            pts.iter()
                .zip(&probs)
                .map(|(x, p)| (c64::new(x * scale * d[0], x * scale * d[1]), *p))
                .collect(),
        );
    } else {
        let sqrt_e = [evals[0].sqrt(), evals[1].sqrt()];
        // L = Σ^{1/2}, A = Σ^{-1/2}
        let mut l_mat = [[0.0; 2]; 2];
        let mut a_mat = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    l_mat[i][j] += evecs[i][k] * sqrt_e[k] * evecs[j][k];
                    a_mat[i][j] += evecs[i][k] / sqrt_e[k] * evecs[j][k];
                }
            }
        }
        let white = transform_third(&third, &a_mat);
        let map = |z: [f64; 2]| {
            c64::new(
                l_mat[0][0] * z[0] + l_mat[0][1] * z[1],
                l_mat[1][0] * z[0] + l_mat[1][1] * z[1],
            )
        };
        if let Some(pts) = four_point_search(&white) {
            candidates.push(pts.into_iter().map(|(z, w)| (map(z), w)).collect());
        }
        candidates.push(
            direction_mixture(&white)?
                .into_iter()
                .map(|(z, w)| (map(z), w))
                .collect(),
        );
    }

    let mut best: Option<ThirdOrderMatch> = None;
    let mut best_residual = f64::INFINITY;
    for cand in candidates {
        let (support, mut probs): (Vec<c64>, Vec<f64>) = cand.into_iter().unzip();
        let total: f64 = probs.iter().sum();
        probs.iter_mut().for_each(|p| *p /= total);
        let law = match AtomDistribution::discrete("match3", support, probs) {
            Ok(l) => l,
            Err(_) => continue,
        };
        let report = law.moment_table(3)?.compare(target, 3)?;
        let residual = report.worst.map_or(0.0, |w| w.discrepancy);
        best_residual = best_residual.min(residual);
        if !report.matched {
            continue;
        }
        let radius = law.support_radius().unwrap_or(f64::INFINITY);
        if best.as_ref().map_or(true, |b| radius < b.radius) {
            best = Some(ThirdOrderMatch {
                law,
                radius,
                residual,
            });
        }
    }
    best.ok_or(Error::MatchInfeasible {
        reason: "no third-order candidate met the moment tolerance".into(),
        residual: best_residual,
    })
}

/// Eigen-decomposition of a symmetric 2×2 matrix; ascending eigenvalues, eigenvectors in columns.
fn sym2_eigen(m: [[f64; 2]; 2]) -> ([f64; 2], [[f64; 2]; 2]) {
    let (a, b, d) = (m[0][0], m[0][1], m[1][1]);
    let mean = 0.5 * (a + d);
    let rad = (0.25 * (a - d) * (a - d) + b * b).sqrt();
    let (lo, hi) = (mean - rad, mean + rad);
    if b.abs() < 1e-300 {
        return if a <= d {
            ([a, d], [[1.0, 0.0], [0.0, 1.0]])
        } else {
            ([d, a], [[0.0, 1.0], [1.0, 0.0]])
        };
    }
    let theta = 0.5 * (2.0 * b).atan2(a - d);
    let (s, c) = theta.sin_cos();
    // (c, s) is the eigenvector of the larger eigenvalue.
    ([lo, hi], [[-s, c], [c, s]])
}

/// Third-moment tensor coefficients `(t30, t21, t12, t03)` under `x ↦ A x`.
///
/// Entry `t[s]` carries `s` y-indices, so the full tensor is `T_{ijk} = t[i+j+k]`.
fn transform_third(t: &[f64; 4], a: &[[f64; 2]; 2]) -> [f64; 4] {
    let mut out = [0.0; 4];
    for (slot, o) in out.iter_mut().enumerate() {
        let row = |pos: usize| usize::from(pos >= 3 - slot);
        let (r0, r1, r2) = (row(0), row(1), row(2));
        let mut s = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    s += a[r0][i] * a[r1][j] * a[r2][k] * t[i + j + k];
                }
            }
        }
        *o = s;
    }
    out
}

/// `E (d·X)³` for a direction `d`.
fn eval_cubic(t: &[f64; 4], d: [f64; 2]) -> f64 {
    t[0] * d[0].powi(3) + 3.0 * t[1] * d[0] * d[0] * d[1] + 3.0 * t[2] * d[0] * d[1] * d[1]
        + t[3] * d[1].powi(3)
}

/// Mean-zero, unit-variance two-point law with third moment `skew`.
pub(crate) fn two_point(skew: f64) -> ([f64; 2], [f64; 2]) {
    let a = 0.5 * (skew + (skew * skew + 4.0).sqrt());
    let p = 1.0 / (1.0 + a * a);
    ([a, -1.0 / a], [p, 1.0 - p])
}

/// Eight-point law in whitened coordinates: two-point laws of variance 2 along
/// the directions `kπ/4`, each with weight 1/4.
fn direction_mixture(white: &[f64; 4]) -> Result<Vec<([f64; 2], f64)>> {
    let dirs: Vec<[f64; 2]> = (0..4)
        .map(|k| {
            let th = k as f64 * std::f64::consts::FRAC_PI_4;
            [th.cos(), th.sin()]
        })
        .collect();
    let coef = 0.25 * 2f64.powf(1.5);
    let sys = Mat::<f64>::from_fn(4, 4, |r, k| {
        let (c, s) = (dirs[k][0], dirs[k][1]);
        coef * c.powi(3 - r as i32) * s.powi(r as i32)
    });
    let rhs = Mat::<f64>::from_fn(4, 1, |r, _| white[r]);
    let skews = sys.partial_piv_lu().solve(&rhs);
    let mut out = Vec::with_capacity(8);
    for (k, d) in dirs.iter().enumerate() {
        let s = skews[(k, 0)];
        if !s.is_finite() {
            return Err(Error::Solver("direction mixture system is singular".into()));
        }
        let (pts, probs) = two_point(s);
        for (x, p) in pts.iter().zip(&probs) {
            let r = x * std::f64::consts::SQRT_2;
            out.push(([r * d[0], r * d[1]], 0.25 * p));
        }
    }
    Ok(out)
}

const LM_POINTS: usize = 4;
const LM_PARAMS: usize = 3 * LM_POINTS;
const LM_RESIDUALS: usize = 9;

fn lm_unpack(theta: &[f64]) -> ([[f64; 2]; LM_POINTS], [f64; LM_POINTS]) {
    let mut pts = [[0.0; 2]; LM_POINTS];
    for (j, p) in pts.iter_mut().enumerate() {
        *p = [theta[2 * j], theta[2 * j + 1]];
    }
    let g = &theta[2 * LM_POINTS..];
    let gmax = g.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut w = [0.0; LM_POINTS];
    let mut total = 0.0;
    for j in 0..LM_POINTS {
        w[j] = (g[j] - gmax).exp();
        total += w[j];
    }
    w.iter_mut().for_each(|x| *x /= total);
    (pts, w)
}

fn lm_residuals(theta: &[f64], tgt: &[f64; 4]) -> [f64; LM_RESIDUALS] {
    let (pts, w) = lm_unpack(theta);
    let mut r = [0.0; LM_RESIDUALS];
    for j in 0..LM_POINTS {
        let [x, y] = pts[j];
        let wj = w[j];
        r[0] += wj * x;
        r[1] += wj * y;
        r[2] += wj * x * x;
        r[3] += wj * x * y;
        r[4] += wj * y * y;
        r[5] += wj * x * x * x;
        r[6] += wj * x * x * y;
        r[7] += wj * x * y * y;
        r[8] += wj * y * y * y;
    }
    r[2] -= 1.0;
    r[4] -= 1.0;
    for k in 0..4 {
        r[5 + k] -= tgt[k];
    }
    r
}

fn norm(r: &[f64]) -> f64 {
    r.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Minimum-norm Levenberg–Marquardt iterations on the moment residuals.
fn lm_solve(theta: &mut [f64; LM_PARAMS], tgt: &[f64; 4], tol: f64, max_iter: usize) -> f64 {
    let mut r = lm_residuals(theta, tgt);
    let mut rn = norm(&r);
    let mut mu = 1e-3;
    for _ in 0..max_iter {
        if rn < tol {
            break;
        }
        let mut jac = Mat::<f64>::zeros(LM_RESIDUALS, LM_PARAMS);
        for c in 0..LM_PARAMS {
            let h = 1e-7 * theta[c].abs().max(1.0);
            let mut tp = *theta;
            let mut tm = *theta;
            tp[c] += h;
            tm[c] -= h;
            let rp = lm_residuals(&tp, tgt);
            let rm = lm_residuals(&tm, tgt);
            for k in 0..LM_RESIDUALS {
                jac[(k, c)] = (rp[k] - rm[k]) / (2.0 * h);
            }
        }
        let jjt = &jac * jac.transpose();
        let mut improved = false;
        for _ in 0..30 {
            let mut sys = jjt.clone();
            for k in 0..LM_RESIDUALS {
                sys[(k, k)] += mu;
            }
            let rhs = Mat::<f64>::from_fn(LM_RESIDUALS, 1, |k, _| r[k]);
            let y = sys.partial_piv_lu().solve(&rhs);
            let step = jac.transpose() * &y;
            let mut cand = *theta;
            for c in 0..LM_PARAMS {
                cand[c] -= step[(c, 0)];
            }
            let rc = lm_residuals(&cand, tgt);
            let rcn = norm(&rc);
            if rcn.is_finite() && rcn < rn {
                *theta = cand;
                r = rc;
                rn = rcn;
                mu = (mu / 3.0).max(1e-15);
                improved = true;
                break;
            }
            mu *= 4.0;
        }
        if !improved {
            break;
        }
    }
    rn
}

/// Four-point continuation search in whitened coordinates.
fn four_point_search(white: &[f64; 4]) -> Option<Vec<([f64; 2], f64)>> {
    let s2 = std::f64::consts::SQRT_2;
    let cross: [f64; LM_PARAMS] = [s2, 0.0, -s2, 0.0, 0.0, s2, 0.0, -s2, 0.0, 0.0, 0.0, 0.0];
    let seed = white.iter().fold(0x5eed_u64, |h, v| h.rotate_left(13) ^ v.to_bits());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for attempt in 0..6 {
        let mut theta = cross;
        if attempt > 0 {
            let rot: f64 = rng.random::<f64>() * std::f64::consts::PI;
            let (sn, cs) = rot.sin_cos();
            for j in 0..LM_POINTS {
                let (x, y) = (theta[2 * j], theta[2 * j + 1]);
                theta[2 * j] = cs * x - sn * y;
                theta[2 * j + 1] = sn * x + cs * y;
            }
        }
        if let Some(sol) = continuation(theta, white) {
            let (pts, w) = lm_unpack(&sol);
            return Some(pts.iter().zip(w).map(|(p, w)| (*p, w)).collect());
        }
    }
    None
}

fn continuation(mut theta: [f64; LM_PARAMS], white: &[f64; 4]) -> Option<[f64; LM_PARAMS]> {
    let mut s: f64 = 0.0;
    let mut step: f64 = 0.25;
    while s < 1.0 {
        let next = (s + step).min(1.0);
        let tgt = white.map(|v| v * next);
        let mut trial = theta;
        if lm_solve(&mut trial, &tgt, 1e-12, 100) < 1e-11 {
            theta = trial;
            s = next;
            step = (step * 1.5).min(0.5);
        } else {
            step *= 0.5;
            if step < 1e-4 {
                return None;
            }
        }
    }
    (lm_solve(&mut theta, white, 1e-15, 200) < 1e-12).then_some(theta)
}

// ---------------------------------------------------------------------------
// Fourth-order Gauss-divisible matching
// ---------------------------------------------------------------------------

/// Supremum of Gaussian fractions `t` for which a real law with third and
/// fourth moments `(m3, m4)` is Gauss divisible to fourth order, i.e. for which
/// the base moments `m3 / (1-t)^{3/2}` and `(m4 - 6t(1-t) - 3t²)/(1-t)²`
/// are realizable (`β4 >= 1 + β3²`).
pub fn max_gauss_fraction(m3: f64, m4: f64) -> f64 {
    let f = |t: f64| (m4 - 1.0) - 4.0 * t + 2.0 * t * t - m3 * m3 / (1.0 - t);
    if f(0.0) <= 0.0 {
        return 0.0;
    }
    if m3 == 0.0 && m4 - 3.0 >= 0.0 {
        return 1.0;
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Base moments after removing a Gaussian fraction `t`.
fn base_moments(m3: f64, m4: f64, t: f64) -> (f64, f64) {
    let s = 1.0 - t;
    (m3 / s.powf(1.5), (m4 - 6.0 * t * s - 3.0 * t * t) / (s * s))
}

/// Real standardized law `{r1, 0, r2}` with third and fourth moments `(b3, b4)`.
fn three_point_from_moments(b3: f64, b4: f64) -> Result<AtomDistribution> {
    let c = b4 - b3 * b3;
    if c < 1.0 - 1e-12 {
        return Err(Error::MatchInfeasible {
            reason: format!("base kurtosis {b4} below 1 + skew² = {}", 1.0 + b3 * b3),
            residual: 1.0 - c,
        });
    }
    let disc = (b3 * b3 + 4.0 * c).sqrt();
    let r1 = 0.5 * (b3 - disc);
    let r2 = 0.5 * (b3 + disc);
    let w1 = 1.0 / (r1 * (r1 - r2));
    let w2 = 1.0 / (r2 * (r2 - r1));
    let w0 = (1.0 - w1 - w2).max(0.0);
    let total = w0 + w1 + w2;
    AtomDistribution::discrete(
        "three-point-base",
        vec![c64::new(r1, 0.0), c64::new(0.0, 0.0), c64::new(r2, 0.0)],
        vec![w1 / total, w0 / total, w2 / total],
    )
}

/// True when real and imaginary parts behave as iid copies up to fourth order.
fn iid_components(d: &AtomDistribution) -> Result<bool> {
    for total in 1..=4 {
        for m in 0..=total {
            let l = total - m;
            let joint = d.mixed_moment(m, l)?;
            let split = d.mixed_moment(m, 0)? * d.mixed_moment(0, l)?;
            if (joint - split).abs() > MOMENT_TOL {
                return Ok(false);
            }
        }
        if (d.mixed_moment(total, 0)? - d.mixed_moment(0, total)?).abs() > MOMENT_TOL {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Gauss-divisible law matching `target` to fourth order.
///
/// `t` defaults to half the largest feasible Gaussian fraction. Complex
/// targets must have iid real and imaginary parts; each component is matched
/// separately. Fails with [`Error::MatchInfeasible`] when no Gauss-divisible
/// law with positive `t` matches (e.g. Rademacher, whose kurtosis is minimal).
pub fn gauss_divisible_match(target: &AtomDistribution, t: Option<f64>) -> Result<AtomDistribution> {
    let (m3, m4, complex) = if target.is_real() {
        (target.mixed_moment(3, 0)?, target.mixed_moment(4, 0)?, false)
    } else {
        if !iid_components(target)? {
            return Err(Error::Unsupported(format!(
                "order-4 Gauss-divisible matching of '{}' needs iid real and imaginary parts",
                target.name()
            )));
        }
        (
            2f64.powf(1.5) * target.mixed_moment(3, 0)?,
            4.0 * target.mixed_moment(4, 0)?,
            true,
        )
    };
    let t_max = max_gauss_fraction(m3, m4);
    let t = match t {
        Some(t) => {
            if !(t > 0.0 && t < 1.0) {
                return Err(Error::InvalidArgument(format!(
                    "gauss-divisible weight t must lie in (0,1), got {t}"
                )));
            }
            t
        }
        None => {
            if t_max <= 1e-12 {
                let probe = 0.01;
                let (b3, b4) = base_moments(m3, m4, probe);
                return Err(Error::MatchInfeasible {
                    reason: format!(
                        "'{}' admits no Gauss-divisible fourth-order match for any t > 0 \
                         (kurtosis {m4} leaves no room for a Gaussian component)",
                        target.name()
                    ),
                    residual: 1.0 + b3 * b3 - b4,
                });
            }
            0.5 * t_max
        }
    };
    let (b3, b4) = base_moments(m3, m4, t);
    let base = three_point_from_moments(b3, b4)?;
    let base = if complex { complexify(&base)? } else { base };
    let out = AtomDistribution::gauss_divisible(base, t)?
        .with_name(format!("match4:t={t}:base={}", target.name()));
    let report = match_order(&out, target, 4)?;
    if !report.matched {
        return Err(Error::MatchInfeasible {
            reason: format!("fourth-order verification failed for '{}'", target.name()),
            residual: report.worst.map_or(0.0, |w| w.discrepancy),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    #[test]
    fn spec_match_examples() {
        let r = AtomDistribution::rademacher();
        let g = AtomDistribution::standard_real_gaussian();
        assert!(match_order(&r, &r, 4).unwrap().matched);
        assert!(match_order(&r, &g, 3).unwrap().matched);
        let rep = match_order(&r, &g, 4).unwrap();
        assert!(!rep.matched);
        let w = rep.worst.unwrap();
        assert_eq!((w.m, w.l), (4, 0));
        assert!((w.discrepancy - 2.0).abs() < 1e-12);
        let cb = AtomDistribution::complex_bernoulli();
        let cg = AtomDistribution::standard_complex_gaussian();
        assert!(match_order(&cb, &cg, 3).unwrap().matched);
        assert!(match_order(&r, &r, 0).is_err());
    }

    #[test]
    fn rademacher_vs_complex_gaussian_order_one() {
        let r = AtomDistribution::rademacher();
        let cg = AtomDistribution::standard_complex_gaussian();
        assert_eq!(matched_order(&r, &cg, 4).unwrap(), 1);
    }

    #[test]
    fn complexify_rademacher_is_complex_bernoulli() {
        let c = complexify(&AtomDistribution::rademacher()).unwrap();
        let cb = AtomDistribution::complex_bernoulli();
        assert_eq!(matched_order(&c, &cb, 8).unwrap(), 8);
    }

    #[test]
    fn two_point_moments() {
        for &s in &[-3.0, -0.5, 0.0, 1.0, 7.0] {
            let (x, p) = two_point(s);
            let m = |k: i32| p[0] * x[0].powi(k) + p[1] * x[1].powi(k);
            assert!(m(1).abs() < 1e-14);
            assert!((m(2) - 1.0).abs() < 1e-13);
            assert!((m(3) - s).abs() < 1e-12);
        }
    }

    #[test]
    fn sym2_eigen_reconstructs() {
        let m = [[0.7, 0.2], [0.2, 0.3]];
        let (e, v) = sym2_eigen(m);
        for i in 0..2 {
            for j in 0..2 {
                let r: f64 = (0..2).map(|k| v[i][k] * e[k] * v[j][k]).sum();
                assert!((r - m[i][j]).abs() < 1e-14);
            }
        }
        assert!(e[0] <= e[1]);
    }

    #[test]
    fn third_order_real_skew_one() {
        let mut entries = BTreeMap::new();
        entries.insert((2, 0), 1.0);
        entries.insert((1, 1), 0.0);
        entries.insert((0, 2), 0.0);
        entries.insert((3, 0), 1.0);
        entries.insert((2, 1), 0.0);
        entries.insert((1, 2), 0.0);
        entries.insert((0, 3), 0.0);
        let target = MomentTable::from_entries(3, entries).unwrap();
        let out = solve_third_order_match(&target).unwrap();
        assert!(out.law.moment_table(3).unwrap().compare(&target, 3).unwrap().matched);
    }

    #[test]
    fn third_order_complex_gaussian() {
        let target = AtomDistribution::standard_complex_gaussian().moment_table(3).unwrap();
        let out = solve_third_order_match(&target).unwrap();
        assert!(out.radius <= 10.0);
        assert!(out.residual <= 1e-9);
    }

    #[test]
    fn third_order_skewed_complex() {
        let base = AtomDistribution::discrete_standardized(
            "skewed",
            vec![c64::new(3.0, 1.0), c64::new(-0.5, 0.2), c64::new(0.1, -1.0)],
            vec![0.1, 0.6, 0.3],
        )
        .unwrap();
        let target = base.moment_table(3).unwrap();
        let out = solve_third_order_match(&target).unwrap();
        assert!(out.residual <= 1e-9);
    }

    #[test]
    fn gauss_divisible_fourth_order() {
        let three = AtomDistribution::three_point(3.0).unwrap();
        let m = gauss_divisible_match(&three, None).unwrap();
        assert!(match_order(&m, &three, 4).unwrap().matched);
        let kurt2 = AtomDistribution::three_point(2.0).unwrap();
        let m = gauss_divisible_match(&kurt2, Some(0.2)).unwrap();
        assert!(match_order(&m, &kurt2, 4).unwrap().matched);
        let cb = AtomDistribution::complex_bernoulli();
        assert!(matches!(
            gauss_divisible_match(&cb, None),
            Err(Error::MatchInfeasible { .. })
        ));
        let ck = complexify(&kurt2).unwrap();
        let m = gauss_divisible_match(&ck, None).unwrap();
        assert!(match_order(&m, &ck, 4).unwrap().matched);
    }

    #[test]
    fn rademacher_has_no_gauss_divisible_match() {
        let r = AtomDistribution::rademacher();
        assert_eq!(max_gauss_fraction(0.0, 1.0), 0.0);
        assert!(matches!(
            gauss_divisible_match(&r, None),
            Err(Error::MatchInfeasible { .. })
        ));
        assert!(gauss_divisible_match(&r, Some(0.1)).is_err());
    }

    #[test]
    fn max_fraction_kurtosis_two() {
        // β4 = 1 at t = 1 - 1/√2 for a symmetric law with kurtosis 2.
        let t = max_gauss_fraction(0.0, 2.0);
        assert!((t - (1.0 - std::f64::consts::FRAC_1_SQRT_2)).abs() < 1e-12);
    }
}
