//! Rescaled k-point correlation estimates and sine-kernel predictions.
//!
//! Eigenvalues near an energy `u` are unfolded as `α = p ρ(u) (λ - u)`, which
//! gives unit mean spacing (`p ρ = n ρ` when `y = 1`). For `k ≥ 2` the
//! estimator is translation-averaged: anchors `α_{i_1} ∈ [-h, h]` are paired
//! with the differences `α_{i_j} - α_{i_1}` of the other members of each
//! ordered tuple of distinct indices, so the estimate targets
//! `det K(0, d_1, …, d_{k-1})`.

use std::f64::consts::PI;
use std::io::Write;

use serde::Serialize;

use super::SpectrumSample;
use crate::error::{Error, Result};
use crate::mp::MpModel;
use crate::trials::mean_and_stderr;

/// Fewest samples accepted by the estimators.
pub const MIN_CORRELATION_SAMPLES: usize = 100;

/// Dyson sine kernel `sin(π(x-y)) / (π(x-y))`, equal to 1 on the diagonal.
pub fn sine_kernel(x: f64, y: f64) -> f64 {
    let d = PI * (x - y);
    if d.abs() < 1e-8 {
        1.0 - d * d / 6.0
    } else {
        d.sin() / d
    }
}

/// `det [K(α_i, α_j)]` for each point of `grid` (each of length `k`).
pub fn sine_det_prediction(k: usize, grid: &[Vec<f64>]) -> Result<Vec<f64>> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be positive".into()));
    }
    grid.iter()
        .map(|pt| {
            if pt.len() != k {
                return Err(Error::InvalidArgument(format!(
                    "grid point has {} coordinates, expected {k}",
                    pt.len()
                )));
            }
            Ok(sine_det(pt))
        })
        .collect()
}

fn sine_det(pt: &[f64]) -> f64 {
    let k = pt.len();
    let mut a: Vec<f64> = (0..k * k).map(|t| sine_kernel(pt[t / k], pt[t % k])).collect();
    // Gaussian elimination with partial pivoting.
    let mut det = 1.0;
    for c in 0..k {
        let piv = (c..k).max_by(|&x, &y| a[x * k + c].abs().total_cmp(&a[y * k + c].abs())).unwrap();
        if a[piv * k + c] == 0.0 {
            return 0.0;
        }
        if piv != c {
            for j in 0..k {
                a.swap(piv * k + j, c * k + j);
            }
            det = -det;
        }
        let d = a[c * k + c];
        det *= d;
        for r in c + 1..k {
            let f = a[r * k + c] / d;
            for j in c..k {
                a[r * k + j] -= f * a[c * k + j];
            }
        }
    }
    det
}

/// Binning of the rescaled coordinates: `count` bins per axis over
/// `[-half_width, half_width]`, anchors in `[-anchor_half_width, anchor_half_width]`,
/// and `window_points` energies for the averaged estimator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BinSpec {
    pub half_width: f64,
    pub count: usize,
    pub anchor_half_width: f64,
    pub window_points: usize,
}

impl Default for BinSpec {
    fn default() -> Self {
        BinSpec { half_width: 3.0, count: 24, anchor_half_width: 8.0, window_points: 21 }
    }
}

impl BinSpec {
    fn validate(&self) -> Result<()> {
        if !(self.half_width > 0.0) || self.count == 0 || !(self.anchor_half_width > 0.0) || self.window_points == 0 {
            return Err(Error::InvalidArgument(format!("invalid bin spec {self:?}")));
        }
        Ok(())
    }

    fn width(&self) -> f64 {
        2.0 * self.half_width / self.count as f64
    }

    fn index(&self, x: f64) -> Option<usize> {
        let t = ((x + self.half_width) / self.width()).floor();
        (t >= 0.0 && t < self.count as f64).then_some(t as usize)
    }

    fn edges(&self) -> Vec<f64> {
        (0..=self.count).map(|i| -self.half_width + i as f64 * self.width()).collect()
    }

    fn center(&self, i: usize) -> f64 {
        -self.half_width + (i as f64 + 0.5) * self.width()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CorrelationEstimate {
    pub k: usize,
    pub u: f64,
    /// Half-width of the energy window (averaged estimator only).
    pub epsilon: Option<f64>,
    pub trials: usize,
    pub bins: BinSpec,
    /// Bin edges along each axis.
    pub edges: Vec<f64>,
    /// Bin centers; `k - 1` coordinates for `k ≥ 2`, one for `k = 1`.
    pub centers: Vec<Vec<f64>>,
    pub estimate: Vec<f64>,
    pub stderr: Vec<f64>,
    /// Mean raw tuple count per sample and bin, before normalization.
    pub mean_counts: Vec<f64>,
}

impl CorrelationEstimate {
    pub fn dims(&self) -> usize {
        self.centers.first().map_or(0, Vec::len)
    }

    /// Volume of one bin in the estimate's coordinates.
    pub fn bin_volume(&self) -> f64 {
        self.bins.width().powi(self.dims() as i32)
    }

    /// Bin-center columns, then `estimate` and `stderr`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<String> = (1..=self.dims()).map(|i| format!("center{i}")).collect();
        header.push("estimate".into());
        header.push("stderr".into());
        w.write_record(&header)?;
        for ((c, e), s) in self.centers.iter().zip(&self.estimate).zip(&self.stderr) {
            let mut row: Vec<String> = c.iter().map(|x| x.to_string()).collect();
            row.push(e.to_string());
            row.push(s.to_string());
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn validate(samples: &[SpectrumSample], k: usize, bins: &BinSpec) -> Result<MpModel> {
    if !(1..=3).contains(&k) {
        return Err(Error::InvalidArgument(format!("k must be 1, 2 or 3, got {k}")));
    }
    bins.validate()?;
    if samples.len() < MIN_CORRELATION_SAMPLES {
        return Err(Error::Precondition(format!(
            "need at least {MIN_CORRELATION_SAMPLES} samples, got {}",
            samples.len()
        )));
    }
    let (p, n) = (samples[0].p, samples[0].n);
    if samples.iter().any(|s| s.p != p || s.n != n) {
        return Err(Error::InvalidArgument("samples mix different dimensions".into()));
    }
    MpModel::from_dims(p, n)
}

fn check_energy(model: &MpModel, u: f64) -> Result<()> {
    if !(u > model.a && u < model.b) || model.density(u) <= 0.0 {
        return Err(Error::Precondition(format!(
            "energy {u} is outside the bulk ({}, {})",
            model.a, model.b
        )));
    }
    Ok(())
}

/// Rescaled `k`-point correlation at energy `u`.
pub fn kpoint_correlation(
    samples: &[SpectrumSample],
    k: usize,
    u: f64,
    bins: &BinSpec,
) -> Result<CorrelationEstimate> {
    let model = validate(samples, k, bins)?;
    check_energy(&model, u)?;
    estimate(samples, k, u, None, &[u], &model, bins)
}

/// As [`kpoint_correlation`], averaged over `bins.window_points` energies
/// spread evenly (bin midpoints) across `[u - eps, u + eps]`.
pub fn averaged_correlation(
    samples: &[SpectrumSample],
    k: usize,
    u: f64,
    eps: f64,
    bins: &BinSpec,
) -> Result<CorrelationEstimate> {
    let model = validate(samples, k, bins)?;
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("eps must be positive, got {eps}")));
    }
    if !(u - eps > model.a && u + eps < model.b && u - eps > 0.0) {
        return Err(Error::Precondition(format!(
            "window [{}, {}] escapes the bulk ({}, {})",
            u - eps,
            u + eps,
            model.a,
            model.b
        )));
    }
    let g = bins.window_points;
    let energies: Vec<f64> = (0..g)
        .map(|j| u - eps + (2.0 * j as f64 + 1.0) * eps / g as f64)
        .collect();
    estimate(samples, k, u, Some(eps), &energies, &model, bins)
}

fn estimate(
    samples: &[SpectrumSample],
    k: usize,
    u: f64,
    epsilon: Option<f64>,
    energies: &[f64],
    model: &MpModel,
    bins: &BinSpec,
) -> Result<CorrelationEstimate> {
    let dims = if k == 1 { 1 } else { k - 1 };
    let nb = bins.count.pow(dims as u32);
    let w = bins.width();
    let norm = if k == 1 { w } else { 2.0 * bins.anchor_half_width * w.powi(dims as i32) };

    let per_sample: Vec<Vec<f64>> = samples
        .iter()
        .map(|s| {
            let mut counts = vec![0.0; nb];
            for &e in energies {
                let scale = s.p as f64 * model.density(e);
                let alpha: Vec<f64> = s.lambda.iter().map(|l| scale * (l - e)).collect();
                accumulate(&alpha, k, bins, &mut counts);
            }
            let m = energies.len() as f64;
            counts.iter_mut().for_each(|c| *c /= m);
            counts
        })
        .collect();

    let mut estimate = Vec::with_capacity(nb);
    let mut stderr = Vec::with_capacity(nb);
    let mut mean_counts = Vec::with_capacity(nb);
    let mut column = vec![0.0; samples.len()];
    for b in 0..nb {
        for (c, s) in column.iter_mut().zip(&per_sample) {
            *c = s[b];
        }
        let (mean, se) = mean_and_stderr(&column);
        mean_counts.push(mean);
        estimate.push(mean / norm);
        stderr.push(se / norm);
    }

    let centers = (0..nb)
        .map(|b| {
            let mut idx = b;
            let mut c = vec![0.0; dims];
            for d in (0..dims).rev() {
                c[d] = bins.center(idx % bins.count);
                idx /= bins.count;
            }
            c
        })
        .collect();

    Ok(CorrelationEstimate {
        k,
        u,
        epsilon,
        trials: samples.len(),
        bins: *bins,
        edges: bins.edges(),
        centers,
        estimate,
        stderr,
        mean_counts,
    })
}

/// Adds one sample's tuple counts to `counts` (row-major over bin indices).
fn accumulate(alpha: &[f64], k: usize, bins: &BinSpec, counts: &mut [f64]) {
    let r = bins.half_width;
    if k == 1 {
        let lo = alpha.partition_point(|&a| a < -r);
        let hi = alpha.partition_point(|&a| a < r);
        for &a in &alpha[lo..hi] {
            if let Some(i) = bins.index(a) {
                counts[i] += 1.0;
            }
        }
        return;
    }
    let h = bins.anchor_half_width;
    let a_lo = alpha.partition_point(|&a| a < -h);
    let a_hi = alpha.partition_point(|&a| a <= h);
    for i in a_lo..a_hi {
        let x = alpha[i];
        let lo = alpha.partition_point(|&a| a < x - r);
        let hi = alpha.partition_point(|&a| a < x + r);
        for j in lo..hi {
            if j == i {
                continue;
            }
            let Some(bj) = bins.index(alpha[j] - x) else { continue };
            if k == 2 {
                counts[bj] += 1.0;
                continue;
            }
            for l in lo..hi {
                if l == i || l == j {
                    continue;
                }
                if let Some(bl) = bins.index(alpha[l] - x) {
                    counts[bj * bins.count + bl] += 1.0;
                }
            }
        }
    }
}

/// Sine-kernel prediction averaged over each bin of `est`
/// (8 Gauss–Legendre nodes per axis): 1 for `k = 1`, otherwise
/// `det K(0, d_1, …, d_{k-1})`.
pub fn sine_prediction_binned(est: &CorrelationEstimate) -> Vec<f64> {
    const NODES: [f64; 4] = [0.183_434_642_495_649_8, 0.525_532_409_916_329, 0.796_666_477_413_626_7, 0.960_289_856_497_536_3];
    const WEIGHTS: [f64; 4] = [0.362_683_783_378_362, 0.313_706_645_877_887_3, 0.222_381_034_453_374_5, 0.101_228_536_290_376_3];
    if est.k == 1 {
        return vec![1.0; est.estimate.len()];
    }
    let half = 0.5 * est.bins.width();
    let rule: Vec<(f64, f64)> = NODES
        .iter()
        .zip(&WEIGHTS)
        .flat_map(|(&x, &w)| [(-x, 0.5 * w), (x, 0.5 * w)])
        .collect();
    est.centers
        .iter()
        .map(|c| match c.len() {
            1 => rule.iter().map(|&(x, w)| w * sine_det(&[0.0, c[0] + half * x])).sum(),
            _ => {
                let mut s = 0.0;
                for &(x1, w1) in &rule {
                    for &(x2, w2) in &rule {
                        s += w1 * w2 * sine_det(&[0.0, c[0] + half * x1, c[1] + half * x2]);
                    }
                }
                s
            }
        })
        .collect()
}

/// `√(Σ vol · (estimate - prediction)²)` over bins whose center coordinates
/// all satisfy `|α| ≤ max_abs`.
pub fn l2_error_vs_sine(est: &CorrelationEstimate, max_abs: f64) -> f64 {
    let pred = sine_prediction_binned(est);
    let vol = est.bin_volume();
    est.centers
        .iter()
        .zip(est.estimate.iter().zip(&pred))
        .filter(|(c, _)| c.iter().all(|x| x.abs() <= max_abs))
        .map(|(_, (e, p))| vol * (e - p).powi(2))
        .sum::<f64>()
        .sqrt()
}
