//! Atom distributions: the laws of the individual matrix entries.
//!
//! Every constructible [`AtomDistribution`] has mean zero and unit variance
//! (`E|ζ|² = 1`). Mixed moments `E Re(ζ)^m Im(ζ)^l` are computed exactly from
//! the representation (finite sums, Gaussian closed forms, binomial expansions
//! of mixtures), never by sampling.

mod catalog;
mod matching;
mod truncate;

pub use catalog::{catalog, CatalogEntry};
pub use matching::{
    complexify, gauss_divisible_match, match_order, matched_order, max_gauss_fraction,
    solve_third_order_match, MatchReport, MomentDiscrepancy, ThirdOrderMatch,
};
pub use truncate::truncate_standardize;

use std::collections::BTreeMap;

use faer::c64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use truncate::TruncatedLaw;

/// Probabilities must sum to one within this tolerance.
pub const PROB_TOL: f64 = 1e-12;
/// Mean and variance standardization tolerance.
pub const STANDARDIZATION_TOL: f64 = 1e-10;
/// Absolute tolerance used when comparing mixed moments.
pub const MOMENT_TOL: f64 = 1e-9;
/// Highest total order `m + l` for which mixed moments are evaluated.
pub const MAX_MOMENT_ORDER: usize = 40;

#[derive(Debug, Clone, PartialEq)]
pub enum AtomKind {
    Discrete {
        support: Vec<c64>,
        probs: Vec<f64>,
    },
    StandardRealGaussian,
    StandardComplexGaussian,
    /// `(1-t)^{1/2} ζ' + t^{1/2} ζ''` with `ζ''` a standard Gaussian of the
    /// same field as the base (real base → real Gaussian).
    GaussDivisible {
        t: f64,
        base: Box<AtomDistribution>,
    },
    Truncated(Truncation),
}

/// Base law conditioned on `|ζ| <= radius`, then mapped by
/// `x ↦ (x - shift) * rescale`.
#[derive(Debug, Clone, PartialEq)]
pub struct Truncation {
    pub base: Box<AtomDistribution>,
    pub radius: f64,
    pub shift: c64,
    pub rescale: f64,
    /// `P(|ζ| <= radius)` under the base law.
    pub mass: f64,
    pub(crate) law: TruncatedLaw,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AtomDistribution {
    name: String,
    kind: AtomKind,
    is_real: bool,
}

impl AtomDistribution {
    /// Discrete law; validated for normalization, mean zero and unit variance.
    pub fn discrete(name: impl Into<String>, support: Vec<c64>, probs: Vec<f64>) -> Result<Self> {
        validate_discrete(&support, &probs)?;
        let is_real = support.iter().all(|z| z.im == 0.0);
        let dist = AtomDistribution {
            name: name.into(),
            kind: AtomKind::Discrete { support, probs },
            is_real,
        };
        dist.check_standardized()?;
        Ok(dist)
    }

    /// Discrete law from arbitrary points, recentred and rescaled to mean 0, variance 1.
    pub fn discrete_standardized(
        name: impl Into<String>,
        support: Vec<c64>,
        probs: Vec<f64>,
    ) -> Result<Self> {
        validate_discrete(&support, &probs)?;
        let mean: c64 = support.iter().zip(&probs).map(|(z, p)| z * *p).sum();
        let var: f64 = support
            .iter()
            .zip(&probs)
            .map(|(z, p)| (z - mean).norm_sqr() * p)
            .sum();
        if var <= 0.0 {
            return Err(Error::InvalidDistribution("zero-variance support".into()));
        }
        let scale = var.sqrt().recip();
        let support = support.iter().map(|z| (z - mean) * scale).collect();
        Self::discrete(name, support, probs)
    }

    pub fn rademacher() -> Self {
        Self::real_discrete("rademacher", &[-1.0, 1.0], &[0.5, 0.5])
    }

    /// Uniform on `{±1 ± i}/√2`.
    pub fn complex_bernoulli() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let support = vec![c64::new(h, h), c64::new(h, -h), c64::new(-h, h), c64::new(-h, -h)];
        AtomDistribution {
            name: "complex-bernoulli".into(),
            kind: AtomKind::Discrete {
                support,
                probs: vec![0.25; 4],
            },
            is_real: false,
        }
    }

    /// Symmetric three-point law `{-√κ, 0, √κ}` with kurtosis `κ >= 1`.
    ///
    /// `κ = 3` gives `{-√3, 0, √3}` with probabilities `{1/6, 2/3, 1/6}`.
    pub fn three_point(kurtosis: f64) -> Result<Self> {
        if !(kurtosis >= 1.0) || !kurtosis.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "three-point kurtosis must be >= 1, got {kurtosis}"
            )));
        }
        let x = kurtosis.sqrt();
        let q = 0.5 / kurtosis;
        let name = if kurtosis == 3.0 {
            "three-point".to_string()
        } else {
            format!("three-point:kurtosis={kurtosis}")
        };
        Ok(Self::real_discrete(&name, &[-x, 0.0, x], &[q, 1.0 - 2.0 * q, q]))
    }

    pub fn standard_real_gaussian() -> Self {
        AtomDistribution {
            name: "gaussian".into(),
            kind: AtomKind::StandardRealGaussian,
            is_real: true,
        }
    }

    pub fn standard_complex_gaussian() -> Self {
        AtomDistribution {
            name: "complex-gaussian".into(),
            kind: AtomKind::StandardComplexGaussian,
            is_real: false,
        }
    }

    /// Gauss-divisible mixture `(1-t)^{1/2} base + t^{1/2} G`.
    ///
    /// Accepts the closed endpoint `t = 1` (a pure Gaussian with the base's
    /// field); [`gauss_divisible_mix`] enforces the open range.
    pub fn gauss_divisible(base: AtomDistribution, t: f64) -> Result<Self> {
        if !(t > 0.0 && t <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "gauss-divisible weight t must lie in (0,1], got {t}"
            )));
        }
        base.check_standardized()?;
        Ok(AtomDistribution {
            name: format!("gauss-divisible:t={t}:base={}", base.name),
            is_real: base.is_real,
            kind: AtomKind::GaussDivisible {
                t,
                base: Box::new(base),
            },
        })
    }

    fn real_discrete(name: &str, points: &[f64], probs: &[f64]) -> Self {
        AtomDistribution {
            name: name.into(),
            kind: AtomKind::Discrete {
                support: points.iter().map(|&x| c64::new(x, 0.0)).collect(),
                probs: probs.to_vec(),
            },
            is_real: true,
        }
    }

    pub(crate) fn from_parts(name: String, kind: AtomKind, is_real: bool) -> Self {
        AtomDistribution { name, kind, is_real }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn kind(&self) -> &AtomKind {
        &self.kind
    }

    pub fn is_real(&self) -> bool {
        self.is_real
    }

    /// Almost-sure bound on `|ζ|`, if the law is bounded.
    pub fn support_radius(&self) -> Option<f64> {
        match &self.kind {
            AtomKind::Discrete { support, probs } => Some(
                support
                    .iter()
                    .zip(probs)
                    .filter(|(_, p)| **p > 0.0)
                    .map(|(z, _)| z.norm())
                    .fold(0.0, f64::max),
            ),
            AtomKind::StandardRealGaussian | AtomKind::StandardComplexGaussian => None,
            AtomKind::GaussDivisible { .. } => None,
            AtomKind::Truncated(tr) => Some(tr.support_bound()),
        }
    }

    /// Largest absolute-moment exponent known to be finite. Every law in the
    /// catalog has all moments finite, so this is `+inf`; kept for reporting.
    pub fn certified_moment_exponent(&self) -> f64 {
        f64::INFINITY
    }

    /// Exact `E Re(ζ)^m Im(ζ)^l`.
    pub fn mixed_moment(&self, m: usize, l: usize) -> Result<f64> {
        if m + l > MAX_MOMENT_ORDER {
            return Err(Error::Unsupported(format!(
                "mixed moment of order {} for '{}' (max {MAX_MOMENT_ORDER})",
                m + l,
                self.name
            )));
        }
        match &self.kind {
            AtomKind::Discrete { support, probs } => Ok(support
                .iter()
                .zip(probs)
                .map(|(z, p)| p * z.re.powi(m as i32) * z.im.powi(l as i32))
                .sum()),
            AtomKind::StandardRealGaussian => Ok(gaussian_moment(false, 1.0, m, l)),
            AtomKind::StandardComplexGaussian => Ok(gaussian_moment(true, 1.0, m, l)),
            AtomKind::GaussDivisible { t, base } => {
                let s = (1.0 - t).sqrt();
                let g = t.sqrt();
                let complex = !base.is_real;
                let mut total = 0.0;
                for i in 0..=m {
                    for j in 0..=l {
                        let gm = gaussian_moment(complex, 1.0, m - i, l - j);
                        if gm == 0.0 {
                            continue;
                        }
                        let bm = base.mixed_moment(i, j)?;
                        total += binomial(m, i)
                            * binomial(l, j)
                            * s.powi((i + j) as i32)
                            * g.powi((m - i + l - j) as i32)
                            * bm
                            * gm;
                    }
                }
                Ok(total)
            }
            AtomKind::Truncated(tr) => tr.mixed_moment(m, l),
        }
    }

    /// Moment table of all `E Re^m Im^l` with `m + l <= order`.
    pub fn moment_table(&self, order: usize) -> Result<MomentTable> {
        let mut entries = BTreeMap::new();
        for total in 0..=order {
            for m in 0..=total {
                entries.insert((m, total - m), self.mixed_moment(m, total - m)?);
            }
        }
        Ok(MomentTable { order, entries })
    }

    fn check_standardized(&self) -> Result<()> {
        let mean_re = self.mixed_moment(1, 0)?;
        let mean_im = self.mixed_moment(0, 1)?;
        let var = self.mixed_moment(2, 0)? + self.mixed_moment(0, 2)?;
        if mean_re.abs() > STANDARDIZATION_TOL
            || mean_im.abs() > STANDARDIZATION_TOL
            || (var - 1.0).abs() > STANDARDIZATION_TOL
        {
            return Err(Error::InvalidDistribution(format!(
                "'{}' has mean ({mean_re:.3e}, {mean_im:.3e}) and variance {var:.12}",
                self.name
            )));
        }
        Ok(())
    }

    /// Compiled sampler; build once and reuse for many draws.
    pub fn sampler(&self) -> AtomSampler {
        AtomSampler::new(self)
    }

    /// Gaussian-mixture form `D + G`: discrete part and the variance and field
    /// of the independent Gaussian part. `None` for truncated laws.
    pub(crate) fn mixture_form(&self) -> Option<MixtureForm> {
        match &self.kind {
            AtomKind::Discrete { support, probs } => Some(MixtureForm {
                centers: support.clone(),
                weights: probs.clone(),
                var: 0.0,
                complex: !self.is_real,
            }),
            AtomKind::StandardRealGaussian => Some(MixtureForm::centered(1.0, false)),
            AtomKind::StandardComplexGaussian => Some(MixtureForm::centered(1.0, true)),
            AtomKind::GaussDivisible { t, base } => {
                let inner = base.mixture_form()?;
                let s = (1.0 - t).sqrt();
                Some(MixtureForm {
                    centers: inner.centers.iter().map(|c| c * s).collect(),
                    weights: inner.weights,
                    var: (1.0 - t) * inner.var + t,
                    complex: !self.is_real,
                })
            }
            AtomKind::Truncated(_) => None,
        }
    }
}

/// Single draw from `dist`. Prefer [`AtomDistribution::sampler`] in loops.
pub fn sample_atom<R: Rng + ?Sized>(dist: &AtomDistribution, rng: &mut R) -> c64 {
    dist.sampler().sample(rng)
}

/// Gauss-divisible mixture of `base` with weight `t ∈ (0,1)`.
pub fn gauss_divisible_mix(base: &AtomDistribution, t: f64) -> Result<AtomDistribution> {
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "gauss-divisible weight t must lie in (0,1), got {t}"
        )));
    }
    AtomDistribution::gauss_divisible(base.clone(), t)
}

#[derive(Debug, Clone)]
pub(crate) struct MixtureForm {
    pub centers: Vec<c64>,
    pub weights: Vec<f64>,
    pub var: f64,
    pub complex: bool,
}

impl MixtureForm {
    fn centered(var: f64, complex: bool) -> Self {
        MixtureForm {
            centers: vec![c64::new(0.0, 0.0)],
            weights: vec![1.0],
            var,
            complex,
        }
    }
}

/// Table of mixed moments `E Re^m Im^l`, `m + l <= order`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentTable {
    order: usize,
    entries: BTreeMap<(usize, usize), f64>,
}

impl MomentTable {
    /// Builds a table from explicit entries. Missing `(0,0)`, `(1,0)`, `(0,1)`
    /// entries are filled with `1, 0, 0`; every other entry up to `order` must be
    /// present.
    pub fn from_entries(order: usize, entries: BTreeMap<(usize, usize), f64>) -> Result<Self> {
        if order < 1 {
            return Err(Error::InvalidArgument("moment table order must be >= 1".into()));
        }
        let mut entries = entries;
        entries.entry((0, 0)).or_insert(1.0);
        entries.entry((1, 0)).or_insert(0.0);
        entries.entry((0, 1)).or_insert(0.0);
        for total in 0..=order {
            for m in 0..=total {
                let v = entries.get(&(m, total - m)).ok_or_else(|| {
                    Error::InvalidArgument(format!("moment table missing entry ({m},{})", total - m))
                })?;
                if !v.is_finite() {
                    return Err(Error::InvalidArgument(format!(
                        "moment ({m},{}) is not finite",
                        total - m
                    )));
                }
            }
        }
        entries.retain(|(m, l), _| m + l <= order);
        let table = MomentTable { order, entries };
        let var = table.get(2, 0).unwrap_or(1.0) + table.get(0, 2).unwrap_or(0.0);
        if (table.get(0, 0).unwrap() - 1.0).abs() > STANDARDIZATION_TOL
            || table.get(1, 0).unwrap().abs() > STANDARDIZATION_TOL
            || table.get(0, 1).unwrap().abs() > STANDARDIZATION_TOL
            || (order >= 2 && (var - 1.0).abs() > STANDARDIZATION_TOL)
        {
            return Err(Error::InvalidArgument(
                "moment table must describe a mean-zero, unit-variance law".into(),
            ));
        }
        Ok(table)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn get(&self, m: usize, l: usize) -> Option<f64> {
        self.entries.get(&(m, l)).copied()
    }

    pub fn entries(&self) -> impl Iterator<Item = ((usize, usize), f64)> + '_ {
        self.entries.iter().map(|(k, v)| (*k, *v))
    }

    /// Largest `|E Re^m Im^l|` over `m + l = 3`.
    pub fn third_moment_magnitude(&self) -> f64 {
        (0..=3)
            .filter_map(|m| self.get(m, 3 - m))
            .fold(0.0, |acc, v| acc.max(v.abs()))
    }

    /// Worst discrepancy against `other` over all entries with `m + l <= k`.
    pub fn compare(&self, other: &MomentTable, k: usize) -> Result<MatchReport> {
        if k > self.order || k > other.order {
            return Err(Error::InvalidArgument(format!(
                "cannot compare tables of order {} and {} at order {k}",
                self.order, other.order
            )));
        }
        let mut worst: Option<MomentDiscrepancy> = None;
        for total in 0..=k {
            for m in 0..=total {
                let l = total - m;
                let d = (self.get(m, l).unwrap() - other.get(m, l).unwrap()).abs();
                if worst.as_ref().map_or(true, |w| d > w.discrepancy) {
                    worst = Some(MomentDiscrepancy { m, l, discrepancy: d });
                }
            }
        }
        let matched = worst.as_ref().map_or(true, |w| w.discrepancy <= MOMENT_TOL);
        Ok(MatchReport { order: k, matched, worst })
    }
}

/// Compiled sampling plan for an [`AtomDistribution`].
#[derive(Debug, Clone)]
pub enum AtomSampler {
    Discrete {
        cumulative: Vec<f64>,
        support: Vec<c64>,
    },
    RealGaussian,
    ComplexGaussian,
    Mixture {
        base_scale: f64,
        gauss_scale: f64,
        complex: bool,
        base: Box<AtomSampler>,
    },
    Truncated {
        base: Box<AtomSampler>,
        radius: f64,
        shift: c64,
        rescale: f64,
    },
}

impl AtomSampler {
    fn new(dist: &AtomDistribution) -> Self {
        match &dist.kind {
            AtomKind::Discrete { support, probs } => {
                let mut acc = 0.0;
                let mut cumulative: Vec<f64> = probs
                    .iter()
                    .map(|p| {
                        acc += p;
                        acc
                    })
                    .collect();
                if let Some(last) = cumulative.last_mut() {
                    *last = f64::INFINITY;
                }
                AtomSampler::Discrete {
                    cumulative,
                    support: support.clone(),
                }
            }
            AtomKind::StandardRealGaussian => AtomSampler::RealGaussian,
            AtomKind::StandardComplexGaussian => AtomSampler::ComplexGaussian,
            AtomKind::GaussDivisible { t, base } => AtomSampler::Mixture {
                base_scale: (1.0 - t).sqrt(),
                gauss_scale: t.sqrt(),
                complex: !base.is_real,
                base: Box::new(base.sampler()),
            },
            AtomKind::Truncated(tr) => AtomSampler::Truncated {
                base: Box::new(tr.base.sampler()),
                radius: tr.radius,
                shift: tr.shift,
                rescale: tr.rescale,
            },
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> c64 {
        match self {
            AtomSampler::Discrete { cumulative, support } => {
                let u: f64 = rng.random();
                let idx = cumulative.partition_point(|&c| c <= u);
                support[idx.min(support.len() - 1)]
            }
            AtomSampler::RealGaussian => c64::new(rng.sample(StandardNormal), 0.0),
            AtomSampler::ComplexGaussian => complex_gaussian(rng),
            AtomSampler::Mixture {
                base_scale,
                gauss_scale,
                complex,
                base,
            } => {
                let b = base.sample(rng);
                let g = if *complex {
                    complex_gaussian(rng)
                } else {
                    c64::new(rng.sample(StandardNormal), 0.0)
                };
                b * *base_scale + g * *gauss_scale
            }
            AtomSampler::Truncated {
                base,
                radius,
                shift,
                rescale,
            } => loop {
                let x = base.sample(rng);
                if x.norm() <= *radius {
                    break (x - shift) * *rescale;
                }
            },
        }
    }
}

fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> c64 {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    c64::new(re * h, im * h)
}

fn validate_discrete(support: &[c64], probs: &[f64]) -> Result<()> {
    if support.is_empty() || support.len() != probs.len() {
        return Err(Error::InvalidDistribution(format!(
            "support has {} points but {} probabilities",
            support.len(),
            probs.len()
        )));
    }
    if probs.iter().any(|p| !(*p >= 0.0)) {
        return Err(Error::InvalidDistribution("negative probability".into()));
    }
    if support.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::InvalidDistribution("non-finite support point".into()));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > PROB_TOL {
        return Err(Error::InvalidDistribution(format!(
            "probabilities sum to {total}, not 1"
        )));
    }
    Ok(())
}

/// `E Re^m Im^l` of a centred Gaussian with `E|G|² = var`; real Gaussians have
/// zero imaginary part, complex ones are circular.
pub(crate) fn gaussian_moment(complex: bool, var: f64, m: usize, l: usize) -> f64 {
    if complex {
        if m % 2 == 1 || l % 2 == 1 {
            return 0.0;
        }
        let half = var / 2.0;
        half.powi(((m + l) / 2) as i32) * double_factorial_odd(m) * double_factorial_odd(l)
    } else {
        if l > 0 || m % 2 == 1 {
            return 0.0;
        }
        var.powi((m / 2) as i32) * double_factorial_odd(m)
    }
}

/// `(k-1)!!` for even `k` (the k-th standard normal moment); 1 for k = 0.
pub(crate) fn double_factorial_odd(k: usize) -> f64 {
    let mut acc = 1.0;
    let mut j = k as i64 - 1;
    while j > 1 {
        acc *= j as f64;
        j -= 2;
    }
    acc
}

pub(crate) fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}
