//! Truncation to `|ζ| <= K` followed by re-standardization.

use faer::c64;
use statrs::function::erf::erfc;
use statrs::function::gamma::{gamma, gamma_lr};

use super::{binomial, AtomDistribution, AtomKind, MixtureForm, Truncation};
use crate::error::{Error, Result};

/// Quadrature points used when a truncated law has no closed form.
pub const QUADRATURE_POINTS: usize = 100_000;

/// Conditional law of the base on `|ζ| <= K`, before shift and rescale.
#[derive(Debug, Clone, PartialEq)]
pub(crate) enum TruncatedLaw {
    /// The base already lives inside the disc.
    Unchanged,
    Discrete {
        support: Vec<c64>,
        probs: Vec<f64>,
    },
    /// Real Gaussian mixture `Σ w_j N(c_j, var)` conditioned on `[-K, K]`.
    RealMixture {
        centers: Vec<f64>,
        weights: Vec<f64>,
        var: f64,
    },
    /// Circular complex Gaussian with `E|G|² = var` conditioned on the disc.
    CenteredComplexGaussian { var: f64 },
}

impl Truncation {
    pub(crate) fn support_bound(&self) -> f64 {
        match &self.law {
            TruncatedLaw::Unchanged => self
                .base
                .support_radius()
                .map(|r| (r + self.shift.norm()) * self.rescale)
                .unwrap_or((self.radius + self.shift.norm()) * self.rescale),
            TruncatedLaw::Discrete { support, probs } => support
                .iter()
                .zip(probs)
                .filter(|(_, p)| **p > 0.0)
                .map(|(z, _)| ((z - self.shift) * self.rescale).norm())
                .fold(0.0, f64::max),
            _ => (self.radius + self.shift.norm()) * self.rescale,
        }
    }

    pub(crate) fn mixed_moment(&self, m: usize, l: usize) -> Result<f64> {
        let (cr, ci) = (self.shift.re, self.shift.im);
        let mut total = 0.0;
        for a in 0..=m {
            for b in 0..=l {
                let raw = self.raw_moment(a, b)?;
                if raw == 0.0 {
                    continue;
                }
                total += binomial(m, a)
                    * binomial(l, b)
                    * (-cr).powi((m - a) as i32)
                    * (-ci).powi((l - b) as i32)
                    * raw;
            }
        }
        Ok(total * self.rescale.powi((m + l) as i32))
    }

    /// Conditional moment `E[Re^a Im^b | |ζ| <= K]` of the base.
    fn raw_moment(&self, a: usize, b: usize) -> Result<f64> {
        conditional_moment(&self.law, &self.base, self.radius, a, b)
    }
}

fn conditional_moment(
    law: &TruncatedLaw,
    base: &AtomDistribution,
    radius: f64,
    a: usize,
    b: usize,
) -> Result<f64> {
    match law {
        TruncatedLaw::Unchanged => base.mixed_moment(a, b),
        TruncatedLaw::Discrete { support, probs } => Ok(support
            .iter()
            .zip(probs)
            .map(|(z, p)| p * z.re.powi(a as i32) * z.im.powi(b as i32))
            .sum()),
        TruncatedLaw::RealMixture {
            centers,
            weights,
            var,
        } => {
            if b > 0 {
                return Ok(0.0);
            }
            let (num, mass) = real_mixture_partial(centers, weights, *var, radius, a);
            Ok(num / mass)
        }
        TruncatedLaw::CenteredComplexGaussian { var } => {
            let mass = complex_gaussian_partial(*var, radius, 0, 0);
            Ok(complex_gaussian_partial(*var, radius, a, b) / mass)
        }
    }
}

/// Returns `(E[X^a; |X|<=K], P(|X|<=K))` for a real Gaussian mixture.
fn real_mixture_partial(
    centers: &[f64],
    weights: &[f64],
    var: f64,
    radius: f64,
    a: usize,
) -> (f64, f64) {
    let sd = var.sqrt();
    let mut num = 0.0;
    let mut mass = 0.0;
    for (&c, &w) in centers.iter().zip(weights) {
        let lo = (-radius - c) / sd;
        let hi = (radius - c) / sd;
        let j = truncated_normal_partials(lo, hi, a);
        mass += w * j[0];
        let mut s = 0.0;
        for (k, jk) in j.iter().enumerate() {
            s += binomial(a, k) * c.powi((a - k) as i32) * sd.powi(k as i32) * jk;
        }
        num += w * s;
    }
    (num, mass)
}

/// `J_k = ∫_lo^hi y^k φ(y) dy` for `k = 0..=order`.
fn truncated_normal_partials(lo: f64, hi: f64, order: usize) -> Vec<f64> {
    let phi = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let upper_tail = |x: f64| 0.5 * erfc(x / std::f64::consts::SQRT_2);
    let mut j = Vec::with_capacity(order + 1);
    j.push(upper_tail(lo) - upper_tail(hi));
    if order >= 1 {
        j.push(phi(lo) - phi(hi));
    }
    for k in 2..=order {
        let v = (k - 1) as f64 * j[k - 2] + lo.powi((k - 1) as i32) * phi(lo)
            - hi.powi((k - 1) as i32) * phi(hi);
        j.push(v);
    }
    j
}

/// `E[Re^a Im^b; |G| <= K]` for a circular complex Gaussian with `E|G|² = var`.
fn complex_gaussian_partial(var: f64, radius: f64, a: usize, b: usize) -> f64 {
    if a % 2 == 1 || b % 2 == 1 {
        return 0.0;
    }
    let k = a + b;
    // E[cos^a θ sin^b θ] = (a-1)!!(b-1)!!/(a+b)!! for uniform θ.
    let angular = super::double_factorial_odd(a) * super::double_factorial_odd(b)
        / (1..=k / 2).map(|j| (2 * j) as f64).product::<f64>();
    // |G|² ~ var · Exp(1), so E[|G|^k; |G| <= K] = var^{k/2} γ(k/2 + 1, K²/var).
    let s = k as f64 / 2.0 + 1.0;
    let radial = var.powf(k as f64 / 2.0) * gamma(s) * gamma_lr(s, radius * radius / var);
    angular * radial
}

/// Truncates `dist` to `|ζ| <= k_radius` and re-standardizes to mean 0,
/// variance 1.
pub fn truncate_standardize(dist: &AtomDistribution, k_radius: f64) -> Result<AtomDistribution> {
    if !(k_radius >= 3.0) || !k_radius.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "truncation radius must be a finite value >= 3, got {k_radius}"
        )));
    }
    let name = format!("truncated:K={k_radius}:base={}", dist.name());

    if dist.support_radius().is_some_and(|r| r <= k_radius) {
        let tr = Truncation {
            base: Box::new(dist.clone()),
            radius: k_radius,
            shift: c64::new(0.0, 0.0),
            rescale: 1.0,
            mass: 1.0,
            law: TruncatedLaw::Unchanged,
        };
        return Ok(AtomDistribution::from_parts(
            name,
            AtomKind::Truncated(tr),
            dist.is_real(),
        ));
    }

    let form = dist.mixture_form().ok_or_else(|| {
        Error::Unsupported(format!(
            "truncating '{}' at a radius smaller than its existing truncation",
            dist.name()
        ))
    })?;
    let (law, mass) = conditional_law(&form, k_radius);
    // Unreachable for standardized laws at K >= 3 (Chebyshev gives mass >= 8/9).
    if !(mass >= 0.5) {
        return Err(Error::TruncationTooAggressive {
            radius: k_radius,
            mass,
        });
    }

    let moment = |a, b| conditional_moment(&law, dist, k_radius, a, b);
    let shift = c64::new(moment(1, 0)?, moment(0, 1)?);
    let second = moment(2, 0)? + moment(0, 2)?;
    let var = second - shift.norm_sqr();
    if !(var > 0.0) {
        return Err(Error::InvalidDistribution(format!(
            "truncation of '{}' at {k_radius} has zero variance",
            dist.name()
        )));
    }
    let tr = Truncation {
        base: Box::new(dist.clone()),
        radius: k_radius,
        shift,
        rescale: var.sqrt().recip(),
        mass,
        law,
    };
    let bound = tr.support_bound();
    if bound > 2.0 * k_radius {
        return Err(Error::InvalidDistribution(format!(
            "re-standardized support radius {bound} exceeds 2K = {}",
            2.0 * k_radius
        )));
    }
    Ok(AtomDistribution::from_parts(
        name,
        AtomKind::Truncated(tr),
        dist.is_real(),
    ))
}

fn conditional_law(form: &MixtureForm, radius: f64) -> (TruncatedLaw, f64) {
    if form.var == 0.0 {
        let mut support = Vec::new();
        let mut probs = Vec::new();
        for (z, w) in form.centers.iter().zip(&form.weights) {
            if z.norm() <= radius && *w > 0.0 {
                support.push(*z);
                probs.push(*w);
            }
        }
        let mass: f64 = probs.iter().sum();
        probs.iter_mut().for_each(|p| *p /= mass);
        return (TruncatedLaw::Discrete { support, probs }, mass);
    }
    if !form.complex {
        let centers: Vec<f64> = form.centers.iter().map(|c| c.re).collect();
        let (_, mass) = real_mixture_partial(&centers, &form.weights, form.var, radius, 0);
        return (
            TruncatedLaw::RealMixture {
                centers,
                weights: form.weights.clone(),
                var: form.var,
            },
            mass,
        );
    }
    if form.centers.len() == 1 && form.centers[0] == c64::new(0.0, 0.0) {
        let mass = complex_gaussian_partial(form.var, radius, 0, 0);
        return (TruncatedLaw::CenteredComplexGaussian { var: form.var }, mass);
    }
    discretize_complex_mixture(form, radius)
}

/// Midpoint-rule discretization of a complex Gaussian mixture on the disc,
/// using about [`QUADRATURE_POINTS`] nodes.
fn discretize_complex_mixture(form: &MixtureForm, radius: f64) -> (TruncatedLaw, f64) {
    // Grid side chosen so that the disc holds ~QUADRATURE_POINTS cells.
    let side = ((QUADRATURE_POINTS as f64) * 4.0 / std::f64::consts::PI).sqrt().ceil() as usize;
    let h = 2.0 * radius / side as f64;
    let norm = 1.0 / (std::f64::consts::PI * form.var);
    let mut support = Vec::with_capacity(QUADRATURE_POINTS + side);
    let mut probs = Vec::with_capacity(QUADRATURE_POINTS + side);
    for ix in 0..side {
        let x = -radius + (ix as f64 + 0.5) * h;
        for iy in 0..side {
            let y = -radius + (iy as f64 + 0.5) * h;
            let z = c64::new(x, y);
            if z.norm() > radius {
                continue;
            }
            let dens: f64 = form
                .centers
                .iter()
                .zip(&form.weights)
                .map(|(c, w)| w * norm * (-(z - c).norm_sqr() / form.var).exp())
                .sum();
            support.push(z);
            probs.push(dens * h * h);
        }
    }
    let mass: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|p| *p /= mass);
    (TruncatedLaw::Discrete { support, probs }, mass.min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atoms::gauss_divisible_mix;

    fn moments_ok(d: &AtomDistribution) {
        assert!(d.mixed_moment(1, 0).unwrap().abs() < 1e-10);
        assert!(d.mixed_moment(0, 1).unwrap().abs() < 1e-10);
        let v = d.mixed_moment(2, 0).unwrap() + d.mixed_moment(0, 2).unwrap();
        assert!((v - 1.0).abs() < 1e-10, "variance {v}");
    }

    #[test]
    fn rademacher_unchanged() {
        let r = AtomDistribution::rademacher();
        let t = truncate_standardize(&r, 10.0).unwrap();
        match t.kind() {
            AtomKind::Truncated(tr) => {
                assert_eq!(tr.shift, c64::new(0.0, 0.0));
                assert_eq!(tr.rescale, 1.0);
            }
            _ => unreachable!(),
        }
        for m in 0..8 {
            assert_eq!(t.mixed_moment(m, 0).unwrap(), r.mixed_moment(m, 0).unwrap());
        }
    }

    #[test]
    fn real_gaussian_at_three() {
        let g = AtomDistribution::standard_real_gaussian();
        let t = truncate_standardize(&g, 3.0).unwrap();
        moments_ok(&t);
        // Closed form: Var(N(0,1) | |x|<=3) = 1 - 2·3·φ(3)/(2Φ(3)-1).
        let phi3 = (-4.5f64).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let mass = 1.0 - erfc(3.0 / std::f64::consts::SQRT_2);
        let var = 1.0 - 6.0 * phi3 / mass;
        match t.kind() {
            AtomKind::Truncated(tr) => assert!((tr.rescale - var.sqrt().recip()).abs() < 1e-12),
            _ => unreachable!(),
        }
        let m4 = t.mixed_moment(4, 0).unwrap();
        assert!(m4 <= 9.0 * t.mixed_moment(2, 0).unwrap());
    }

    #[test]
    fn complex_gaussian_analytic() {
        let g = AtomDistribution::standard_complex_gaussian();
        let t = truncate_standardize(&g, 3.0).unwrap();
        moments_ok(&t);
        assert!(t.support_radius().unwrap() <= 6.0);
        // Rotational symmetry: E Re² = E Im².
        let a = t.mixed_moment(2, 0).unwrap();
        let b = t.mixed_moment(0, 2).unwrap();
        assert!((a - b).abs() < 1e-14);
        // Full disc limit recovers the untruncated Gaussian moments.
        let wide = complex_gaussian_partial(1.0, 60.0, 2, 2);
        assert!((wide - 0.25).abs() < 1e-13);
        let wide4 = complex_gaussian_partial(1.0, 60.0, 4, 0);
        assert!((wide4 - 0.75).abs() < 1e-13);
    }

    #[test]
    fn complex_mixture_quadrature() {
        let base = gauss_divisible_mix(&AtomDistribution::complex_bernoulli(), 0.5).unwrap();
        let t = truncate_standardize(&base, 3.0).unwrap();
        moments_ok(&t);
    }

    #[test]
    fn real_mixture_matches_quadrature() {
        let base = gauss_divisible_mix(&AtomDistribution::rademacher(), 0.3).unwrap();
        let t = truncate_standardize(&base, 3.0).unwrap();
        moments_ok(&t);
        // Independent midpoint-rule conditional fourth moment.
        let s = 0.7f64.sqrt();
        let sd = 0.3f64.sqrt();
        let dens = |x: f64| {
            let f = |c: f64| (-(x - c) * (x - c) / (2.0 * 0.3)).exp() / (sd * (2.0 * std::f64::consts::PI).sqrt());
            0.5 * f(s) + 0.5 * f(-s)
        };
        let nq = 200_000;
        let h = 6.0 / nq as f64;
        let (mut m0, mut m2, mut m4) = (0.0, 0.0, 0.0);
        for i in 0..nq {
            let x = -3.0 + (i as f64 + 0.5) * h;
            let d = dens(x) * h;
            m0 += d;
            m2 += d * x * x;
            m4 += d * x.powi(4);
        }
        let expect = (m4 / m0) / (m2 / m0).powi(2);
        assert!((t.mixed_moment(4, 0).unwrap() - expect).abs() < 1e-8);
    }

    #[test]
    fn too_aggressive_and_bad_radius() {
        let g = AtomDistribution::standard_real_gaussian();
        assert!(truncate_standardize(&g, 2.0).is_err());
        // Chebyshev keeps at least 8/9 of a standardized law inside K = 3.
        let far = AtomDistribution::discrete_standardized(
            "far",
            [-1.0, -0.1, 0.0, 0.1, 1.0].map(|x| c64::new(x, 0.0)).to_vec(),
            vec![0.05, 0.3, 0.3, 0.3, 0.05],
        )
        .unwrap();
        let t = truncate_standardize(&far, 3.0).unwrap();
        match t.kind() {
            AtomKind::Truncated(tr) => assert!(tr.mass >= 8.0 / 9.0),
            _ => unreachable!(),
        }
    }

    #[test]
    fn idempotent_once_inside() {
        let g = AtomDistribution::standard_real_gaussian();
        let once = truncate_standardize(&g, 4.0).unwrap();
        let twice = truncate_standardize(&once, 10.0).unwrap();
        for m in 0..8 {
            assert_eq!(once.mixed_moment(m, 0).unwrap(), twice.mixed_moment(m, 0).unwrap());
        }
    }

    #[test]
    fn partials_recursion() {
        // Full line: J_2 = 1, J_4 = 3.
        let j = truncated_normal_partials(-40.0, 40.0, 4);
        assert!((j[0] - 1.0).abs() < 1e-15);
        assert!(j[1].abs() < 1e-15);
        assert!((j[2] - 1.0).abs() < 1e-14);
        assert!((j[4] - 3.0).abs() < 1e-13);
    }
}
