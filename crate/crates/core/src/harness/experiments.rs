//! Bodies of the canned experiments.

use std::path::{Path, PathBuf};

use faer::c64;
use serde::Serialize;
use serde_json::{json, Value};

use super::config::{Experiment, ExperimentConfig};
use super::identities::identity_sweep;
use super::{Check, Outcome, Thresholds};
use crate::atoms::{matched_order, AtomDistribution};
use crate::error::Result;
use crate::mp::{esd_distance, MpModel};
use crate::quad;
use crate::seeding::derive_seed;
use crate::spectral::{generate_matrix, project_distance, random_subspace, spectrum, svd_full};
use crate::stats::{
    averaged_correlation, bulk_containment, bulk_indices, concentration_test, delocalization_stat,
    eigen_upper_check, four_moment_from_spectra, gap_report, kpoint_correlation, l2_error_vs_sine,
    BinSpec, CorrelationEstimate, FrequencyReport, FourMomentResult, RegularizedGapRequest,
    SpectrumSample, TestFunctionSpec, MATCH_PROBE_ORDER,
};
use crate::trials::{mean_and_stderr, run_trials};

pub(crate) fn dispatch(cfg: &ExperimentConfig, th: &Thresholds) -> Result<Outcome> {
    match cfg.experiment {
        Experiment::MpTest => mp_test(cfg, th),
        Experiment::Concentration => concentration(cfg, th),
        Experiment::Delocalization => delocalization(cfg, th),
        Experiment::Gaps => gaps(cfg, th),
        Experiment::Correlation | Experiment::AveragedCorrelation => correlation(cfg, th),
        Experiment::FourMoment => four_moment(cfg, th),
        Experiment::Identities => identities(cfg, th),
        Experiment::Projection => projection(cfg, th),
    }
}

/// `(label, atom name)` for the primary ensemble and the optional `atom_b`.
fn ensembles(cfg: &ExperimentConfig) -> Vec<(&'static str, String)> {
    let mut v = vec![("a", cfg.atom.clone())];
    if let Some(b) = &cfg.atom_b {
        v.push(("b", b.clone()));
    }
    v
}

/// Sub-stream for ensemble `e` (and size slot `s`) of a run.
fn sub_master(master: u64, e: usize, s: usize) -> u64 {
    derive_seed(master, ((e as u64) << 16) | s as u64)
}

fn spectra(cfg: &ExperimentConfig, atom: &str, master: u64) -> Result<Vec<SpectrumSample>> {
    let dist = AtomDistribution::from_name(atom)?;
    run_trials(cfg.trials, master, |_, seed| SpectrumSample::generate(cfg.p, cfg.n, &dist, seed))
}

fn maybe<T: Serialize>(cfg: &ExperimentConfig, v: T) -> Result<Option<Value>> {
    Ok(if cfg.record_trials { Some(serde_json::to_value(v)?) } else { None })
}

#[derive(Debug, Clone, Serialize)]
pub struct FixedPointCheck {
    pub y: f64,
    pub points: usize,
    /// Largest `|s + 1/(y + z - 1 + y z s)|` on the grid.
    pub max_fixed_point_residual: f64,
    /// Largest `|s(z) - ∫ ρ(x)/(x - z) dx|` with the integral done by quadrature.
    pub max_quadrature_error: f64,
}

/// The MP Stieltjes transform on a 20 × 20 grid (`Re z` across
/// `[a - 1, b + 1]`, `Im z` log-spaced in `[0.05, 2]`), checked against its
/// defining quadratic and against direct quadrature of the density.
pub fn mp_fixed_point_check(y: f64) -> Result<FixedPointCheck> {
    let m = MpModel::new(y)?;
    let (mut fp, mut qe) = (0.0f64, 0.0f64);
    let mut points = 0;
    let (mid, r) = (1.0 + y, 2.0 * y.sqrt());
    for i in 0..20 {
        let re = m.a - 1.0 + (m.b - m.a + 2.0) * i as f64 / 19.0;
        for j in 0..20 {
            let im = 0.05 * (2.0f64 / 0.05).powf(j as f64 / 19.0);
            let z = c64::new(re, im);
            let s = m.stieltjes(z)?;
            fp = fp.max(m.fixed_point_residual(z, s));
            // x = mid - r cos φ, dx = r sin φ dφ.
            let integrand = |phi: f64, part: usize| {
                let x = mid - r * phi.cos();
                let w = m.density(x) * r * phi.sin();
                let v = c64::new(w, 0.0) / (c64::new(x, 0.0) - z);
                if part == 0 { v.re } else { v.im }
            };
            let (qre, _) = quad::integrate(|t| integrand(t, 0), 0.0, std::f64::consts::PI, 1e-12);
            let (qim, _) = quad::integrate(|t| integrand(t, 1), 0.0, std::f64::consts::PI, 1e-12);
            qe = qe.max((s - c64::new(qre, qim)).norm());
            points += 1;
        }
    }
    Ok(FixedPointCheck { y, points, max_fixed_point_residual: fp, max_quadrature_error: qe })
}

fn mp_test(cfg: &ExperimentConfig, th: &Thresholds) -> Result<Outcome> {
    let y = cfg.p as f64 / cfg.n as f64;
    let mut checks = Vec::new();
    let mut agg = serde_json::Map::new();
    let mut trials = serde_json::Map::new();
    let (single, mean_max) = (th.get("ks_max", 0.05), th.get("ks_mean_max", 0.03));
    for (e, (label, atom)) in ensembles(cfg).into_iter().enumerate() {
        let ks = run_trials(cfg.trials, sub_master(cfg.master_seed, e, 0), |_, seed| {
            let dist = AtomDistribution::from_name(&atom)?;
            esd_distance(&spectrum(&generate_matrix(cfg.p, cfg.n, &dist, seed)?)?, y)
        })?;
        let (mean, se) = mean_and_stderr(&ks);
        let max = ks.iter().cloned().fold(0.0, f64::max);
        agg.insert(label.into(), json!({ "atom": atom, "ks_mean": mean, "ks_stderr": se, "ks_max": max }));
        checks.push(Check::at_most(format!("{label}.ks_max"), max, single));
        checks.push(Check::at_most(format!("{label}.ks_mean"), mean, mean_max));
        trials.insert(label.into(), json!(ks));
    }
    let fp = mp_fixed_point_check(y)?;
    checks.push(Check::at_most("fixed_point_residual", fp.max_fixed_point_residual, th.get("fixed_point_max", 1e-12)));
    checks.push(Check::at_most("quadrature_error", fp.max_quadrature_error, th.get("quadrature_max", 1e-7)));
    agg.insert("stieltjes".into(), serde_json::to_value(&fp)?);
    Ok(Outcome { aggregates: Value::Object(agg), checks, per_trial: maybe(cfg, trials)? })
}

fn concentration(cfg: &ExperimentConfig, th: &Thresholds) -> Result<Outcome> {
    let model = MpModel::from_dims(cfg.p, cfg.n)?;
    let delta = th.get("delta", 0.02);
    let frac_min = th.get("concentration_fraction_min", 0.95);
    let margin_min = th.get("margin_min", 0.05);
    let contain_min = th.get("containment_fraction_min", 0.99);
    let upper_max = th.get("upper_ratio_max", 2.0);
    let mut checks = Vec::new();
    let mut agg = serde_json::Map::new();
    let mut trials = serde_json::Map::new();
    for (e, (label, atom)) in ensembles(cfg).into_iter().enumerate() {
        let rows = run_trials(cfg.trials, sub_master(cfg.master_seed, e, 0), |_, seed| {
            let dist = AtomDistribution::from_name(&atom)?;
            let s = SpectrumSample::generate(cfg.p, cfg.n, &dist, seed)?;
            let c = concentration_test(&s, cfg.interval_lo, cfg.interval_hi, &model, cfg.eps)?;
            let b = bulk_containment(&s, &model, cfg.eps)?;
            let u = eigen_upper_check(&s, &model, cfg.eps)?;
            Ok((c.ratio, b.margin, u))
        })?;
        let conc = FrequencyReport::from_flags(rows.iter().map(|r| r.0 < delta));
        let contained = FrequencyReport::from_flags(rows.iter().map(|r| r.1 > margin_min));
        let ratios: Vec<f64> = rows.iter().map(|r| r.0).collect();
        let (ratio_mean, _) = mean_and_stderr(&ratios);
        let ratio_max = ratios.iter().cloned().fold(0.0, f64::max);
        let margin_min_seen = rows.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
        let upper = rows.iter().map(|r| r.2).fold(0.0, f64::max);
        agg.insert(label.into(), json!({
            "atom": atom,
            "interval": [cfg.interval_lo, cfg.interval_hi],
            "ratio_mean": ratio_mean,
            "ratio_max": ratio_max,
            "concentration": conc,
            "containment": contained,
            "smallest_margin": margin_min_seen,
            "upper_ratio_max": upper,
        }));
        checks.push(Check::at_least(format!("{label}.concentration_fraction"), conc.frequency, frac_min));
        checks.push(Check::at_least(format!("{label}.containment_fraction"), contained.frequency, contain_min));
        checks.push(Check::at_most(format!("{label}.upper_ratio"), upper, upper_max));
        trials.insert(label.into(), json!(rows));
    }
    Ok(Outcome { aggregates: Value::Object(agg), checks, per_trial: maybe(cfg, trials)? })
}

/// Least-squares slope of `ys` against `xs`.
fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

fn delocalization(cfg: &ExperimentConfig, th: &Thresholds) -> Result<Outcome> {
    let y = cfg.p as f64 / cfg.n as f64;
    let model = MpModel::new(y)?;
    let (lo, hi) = (th.get("slope_min", -0.6), th.get("slope_max", -0.4));
    let mut checks = Vec::new();
    let mut agg = serde_json::Map::new();
    let mut trials = serde_json::Map::new();
    for (e, (label, atom)) in ensembles(cfg).into_iter().enumerate() {
        let dist = AtomDistribution::from_name(&atom)?;
        let mut per_size = Vec::new();
        let (mut xs, mut ys, mut ys_max) = (Vec::new(), Vec::new(), Vec::new());
        let mut raw = Vec::new();
        for (s, &n) in cfg.sizes.iter().enumerate() {
            let p = ((y * n as f64).round() as usize).clamp(1, n);
            let stats = run_trials(cfg.trials, sub_master(cfg.master_seed, e, s), |_, seed| {
                let d = svd_full(&generate_matrix(p, n, &dist, seed)?)?;
                delocalization_stat(&d, &model, cfg.eps)
            })?;
            let means: Vec<f64> = stats.iter().map(|s| s.mean_coordinate).collect();
            let maxes: Vec<f64> = stats.iter().map(|s| s.max_coordinate).collect();
            let (mean, se) = mean_and_stderr(&means);
            let (max_mean, max_se) = mean_and_stderr(&maxes);
            let normalized: Vec<f64> = stats.iter().map(|s| s.normalized).collect();
            let (norm_mean, _) = mean_and_stderr(&normalized);
            xs.push((n as f64).ln());
            ys.push(mean.ln());
            ys_max.push(max_mean.ln());
            per_size.push(json!({
                "n": n, "p": p,
                "mean_sup_coordinate": mean, "mean_sup_stderr": se,
                "max_sup_coordinate": max_mean, "max_sup_stderr": max_se,
                "normalized_max": norm_mean,
            }));
            raw.push(json!(stats));
        }
        let fit = slope(&xs, &ys);
        let fit_max = slope(&xs, &ys_max);
        agg.insert(label.into(), json!({ "atom": atom, "sizes": per_size, "slope": fit, "slope_of_max": fit_max }));
        checks.push(Check::within(format!("{label}.slope"), fit, lo, hi));
        trials.insert(label.into(), Value::Array(raw));
    }
    Ok(Outcome { aggregates: Value::Object(agg), checks, per_trial: maybe(cfg, trials)? })
}

fn gaps(cfg: &ExperimentConfig, th: &Thresholds) -> Result<Outcome> {
    let indices = cfg.resolved_indices();
    let fail_max = th.get("fail_fraction_max", 0.10);
    let diff_max = th.get("fail_fraction_diff_max", 0.05);
    let mut checks = Vec::new();
    let mut agg = serde_json::Map::new();
    let mut trials = serde_json::Map::new();
    let mut fractions = Vec::new();
    let requests: Vec<RegularizedGapRequest> = indices
        .iter()
        .filter(|&&i| i > 1)
        .map(|&i| RegularizedGapRequest { i0: i, l: 1, p: cfg.p })
        .collect();
    for (e, (label, atom)) in ensembles(cfg).into_iter().enumerate() {
        let dist = AtomDistribution::from_name(&atom)?;
        let reports = run_trials(cfg.trials, sub_master(cfg.master_seed, e, 0), |_, seed| {
            gap_report(&generate_matrix(cfg.p, cfg.n, &dist, seed)?, cfg.eps, cfg.c, cfg.c1, &indices, &requests)
        })?;
        let fails = FrequencyReport::from_flags(reports.iter().map(|r| !r.gap_property_holds));
        let gaps: Vec<f64> = reports.iter().map(|r| r.min_bulk_gap).collect();
        let (gap_mean, gap_se) = mean_and_stderr(&gaps);
        let q: Vec<f64> = reports.iter().flat_map(|r| r.q_values.iter().map(|q| q.value)).filter(|v| v.is_finite()).collect();
        let (q_mean, _) = mean_and_stderr(&q);
        let g: Vec<f64> = reports.iter().flat_map(|r| r.regularized.iter().map(|g| g.g)).collect();
        let (g_mean, _) = mean_and_stderr(&g);
        agg.insert(label.into(), json!({
            "atom": atom,
            "threshold": reports.first().map(|r| r.threshold),
            "failures": fails,
            "min_gap_mean": gap_mean,
            "min_gap_stderr": gap_se,
            "q_mean_finite": q_mean,
            "q_infinite": reports.iter().flat_map(|r| &r.q_values).filter(|q| q.value.is_infinite()).count(),
            "regularized_gap_mean": g_mean,
        }));
        if e == 0 {
            checks.push(Check::at_most(format!("{label}.fail_fraction"), fails.frequency, fail_max));
        }
        fractions.push(fails.frequency);
        trials.insert(label.into(), json!(reports));
    }
    if fractions.len() == 2 {
        checks.push(Check::at_most("fail_fraction_difference", (fractions[0] - fractions[1]).abs(), diff_max));
    }
    Ok(Outcome { aggregates: Value::Object(agg), checks, per_trial: maybe(cfg, trials)? })
}

/// Largest `|est_a - est_b| / √(se_a² + se_b²)` over bins with centers in range.
pub(crate) fn max_bin_z(a: &CorrelationEstimate, b: &CorrelationEstimate, max_abs: f64) -> f64 {
    a.centers
        .iter()
        .enumerate()
        .filter(|(_, c)| c.iter().all(|x| x.abs() <= max_abs))
        .map(|(i, _)| {
            let se = a.stderr[i].hypot(b.stderr[i]);
            let d = (a.estimate[i] - b.estimate[i]).abs();
            if se > 0.0 { d / se } else if d == 0.0 { 0.0 } else { f64::INFINITY }
        })
        .fold(0.0, f64::max)
}

fn sidecar(output: &Path, label: &str) -> PathBuf {
    let stem = output.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "report".into());
    output.with_file_name(format!("{stem}.{label}.csv"))
}

fn correlation(cfg: &ExperimentConfig, th: &Thresholds) -> Result<Outcome> {
    let bins = BinSpec {
        half_width: cfg.bin_half_width,
        count: cfg.bins,
        anchor_half_width: cfg.anchor_half_width,
        window_points: cfg.window_points,
    };
    let l2_max = th.get("l2_max", 0.1);
    let z_max = th.get("z_max", 3.0);
    let mut checks = Vec::new();
    let mut agg = serde_json::Map::new();
    let mut estimates = Vec::new();
    for (e, (label, atom)) in ensembles(cfg).into_iter().enumerate() {
        let samples = spectra(cfg, &atom, sub_master(cfg.master_seed, e, 0))?;
        let est = match cfg.experiment {
            Experiment::AveragedCorrelation => averaged_correlation(&samples, cfg.k, cfg.u, cfg.window, &bins)?,
            _ => kpoint_correlation(&samples, cfg.k, cfg.u, &bins)?,
        };
        let l2 = l2_error_vs_sine(&est, cfg.compare_half_width);
        if e == 0 {
            checks.push(Check::at_most(format!("{label}.l2_error"), l2, l2_max));
        }
        if let Some(out) = &cfg.output {
            est.write_csv(std::fs::File::create(sidecar(out, label))?)?;
        }
        agg.insert(label.into(), json!({ "atom": atom, "l2_error": l2, "estimate": est }));
        estimates.push(est);
    }
    if estimates.len() == 2 {
        let z = max_bin_z(&estimates[0], &estimates[1], cfg.compare_half_width);
        agg.insert("max_bin_z".into(), json!(z));
        checks.push(Check::at_most("max_bin_z", z, z_max));
    }
    Ok(Outcome { aggregates: Value::Object(agg), checks, per_trial: None })
}

fn four_moment(cfg: &ExperimentConfig, th: &Thresholds) -> Result<Outcome> {
    let win_min = th.get("win_fraction_min", 0.9);
    let z_max = th.get("z_max", 3.0);
    let a_dist = AtomDistribution::from_name(&cfg.atom)?;
    let b_name = cfg.atom_b.clone().unwrap_or_else(|| format!("match4:base={}", cfg.atom));
    let c_name = cfg.atom_c.clone().unwrap_or_else(|| "complex-gaussian".into());
    let c_dist = AtomDistribution::from_name(&c_name)?;
    let b_dist = AtomDistribution::from_name(&b_name);

    let indices = cfg.resolved_indices();
    let model = MpModel::from_dims(cfg.p, cfg.n)?;
    let Some((lo, hi)) = bulk_indices(cfg.p, cfg.eps) else {
        return Err(crate::error::Error::config("eps", "bulk index range is empty"));
    };
    if let Some(i) = indices.iter().find(|&&i| i < lo || i > hi) {
        return Err(crate::error::Error::config("indices", format!("index {i} is outside the bulk {lo}..={hi}")));
    }
    // Centers at the classical locations in the n λ scale, jittered by a few
    // local mean spacings.
    let n = cfg.n as f64;
    let mut centers = Vec::new();
    let mut spacing: f64 = 0.0;
    for &i in &indices {
        let gamma = model.quantile(i as f64 / (cfg.p + 1) as f64);
        centers.push(n * gamma);
        spacing = spacing.max(n / (cfg.p as f64 * model.density(gamma)));
    }
    let gs = TestFunctionSpec::family(
        cfg.g_count,
        &centers,
        cfg.g_spread * spacing,
        (cfg.g_width_min, cfg.g_width_max),
        derive_seed(cfg.master_seed, 3),
    )?;
    let certificate = gs.iter().map(|g| g.certificate_exponent(cfg.n)).fold(0.0, f64::max);

    let run = |dist: &AtomDistribution, slot: u64| -> Result<Vec<Vec<f64>>> {
        run_trials(cfg.trials, derive_seed(cfg.master_seed, slot), |_, seed| {
            spectrum(&generate_matrix(cfg.p, cfg.n, dist, seed)?)
        })
    };
    let sa = run(&a_dist, 0)?;
    let sc = run(&c_dist, 2)?;
    let order_c = matched_order(&a_dist, &c_dist, MATCH_PROBE_ORDER)?;
    let plain = four_moment_from_spectra(&sa, &sc, cfg.n, &indices, &gs, order_c);

    let mut checks = Vec::new();
    let mut agg = serde_json::Map::new();
    agg.insert("atom".into(), json!(cfg.atom));
    agg.insert("plain_partner".into(), json!({ "atom": c_name, "matched_order": order_c }));
    agg.insert("delta_plain".into(), json!(plain.iter().map(|r| r.delta).collect::<Vec<_>>()));
    agg.insert("certificate_exponent".into(), json!(certificate));
    agg.insert("test_functions".into(), serde_json::to_value(&gs)?);

    match b_dist {
        Ok(b_dist) => {
            let sb = run(&b_dist, 1)?;
            let order_b = matched_order(&a_dist, &b_dist, MATCH_PROBE_ORDER)?;
            let matched: Vec<FourMomentResult> = four_moment_from_spectra(&sa, &sb, cfg.n, &indices, &gs, order_b);
            let wins = matched.iter().zip(&plain).filter(|(m, p)| m.delta < p.delta).count();
            let win_fraction = wins as f64 / gs.len().max(1) as f64;
            let worst_z = matched.iter().map(FourMomentResult::z_score).fold(0.0, f64::max);
            agg.insert("matched_partner".into(), json!({ "atom": b_name, "matched_order": order_b }));
            agg.insert("delta_matched".into(), json!(matched.iter().map(|r| r.delta).collect::<Vec<_>>()));
            agg.insert("wins".into(), json!(wins));
            agg.insert("win_fraction".into(), json!(win_fraction));
            agg.insert("max_z_matched".into(), json!(worst_z));
            agg.insert("matched".into(), serde_json::to_value(&matched)?);
            checks.push(Check::at_least("matched_partner_exists", 1.0, 1.0));
            checks.push(Check::at_least("win_fraction", win_fraction, win_min));
            checks.push(Check::at_most("max_z_matched", worst_z, z_max));
        }
        Err(err) => {
            agg.insert("matched_partner".into(), json!({ "atom": b_name, "error": err.to_string() }));
            checks.push(Check::at_least("matched_partner_exists", 0.0, 1.0));
        }
    }
    agg.insert("plain".into(), serde_json::to_value(&plain)?);
    Ok(Outcome { aggregates: Value::Object(agg), checks, per_trial: None })
}

fn identities(cfg: &ExperimentConfig, th: &Thresholds) -> Result<Outcome> {
    let dist = AtomDistribution::from_name(&cfg.atom)?;
    let sweep = identity_sweep(&dist, cfg.trials, cfg.max_dim, cfg.master_seed)?;
    let tol = th.get("residual_max", 1e-8);
    let checks = sweep
        .stats()
        .iter()
        .map(|(name, s)| Check::at_most(*name, s.max_residual, tol))
        .collect();
    Ok(Outcome { aggregates: serde_json::to_value(&sweep)?, checks, per_trial: None })
}

fn projection(cfg: &ExperimentConfig, th: &Thresholds) -> Result<Outcome> {
    let dist = AtomDistribution::from_name(&cfg.atom)?;
    let d = cfg.d as f64;
    let h = random_subspace(cfg.n, cfg.d, derive_seed(cfg.master_seed, u64::MAX))?;
    let norms = project_distance(&dist, h.as_ref(), cfg.trials, cfg.master_seed)?;
    let squares: Vec<f64> = norms.iter().map(|x| x * x).collect();
    let (mean_sq, se) = mean_and_stderr(&squares);
    let tail = FrequencyReport::from_flags(norms.iter().map(|x| (x - d.sqrt()).abs() >= cfg.deviation));
    let tol = th.get("mean_tolerance", 1.0);
    let checks = vec![
        Check::within("mean_square", mean_sq, d - tol, d + tol),
        Check::at_most("tail_fraction", tail.frequency, th.get("tail_fraction_max", 0.05)),
    ];
    let agg = json!({ "atom": cfg.atom, "d": cfg.d, "n": cfg.n, "mean_square": mean_sq, "mean_square_stderr": se, "tail": tail });
    Ok(Outcome { aggregates: agg, checks, per_trial: maybe(cfg, norms)? })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_point_grid() {
        let r = mp_fixed_point_check(1.0).unwrap();
        assert_eq!(r.points, 400);
        assert!(r.max_fixed_point_residual < 1e-12, "{r:?}");
        assert!(r.max_quadrature_error < 1e-7, "{r:?}");
    }

    #[test]
    fn slope_of_line() {
        assert!((slope(&[0.0, 1.0, 2.0], &[1.0, 0.5, 0.0]) + 0.5).abs() < 1e-15);
    }
}
