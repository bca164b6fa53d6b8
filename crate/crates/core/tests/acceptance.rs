//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Criteria listed in `DOCUMENTED_FAILURES` are run in full and reported as
//! FAIL with the reason; only failures outside that list fail the process.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use faer::c64;
use rand::Rng;
use rmtlab::atoms::{match_order, solve_third_order_match, AtomDistribution};
use rmtlab::harness::{mp_fixed_point_check, run_experiment, ExperimentConfig, RunReport};
use rmtlab::seeding::{derive_seed, rng_from_seed};

const DOCUMENTED_FAILURES: [(u32, &str); 4] = [
    (
        5,
        "at y = 1 the lower edge a = 0 is a hard edge with density ~ x^(-1/2), so the MP \
         quantile at bulk index ceil(0.1 p) tends to 0.0247; the margin a + eps' cannot exceed \
         0.05 at any n. Containment with a positive margin holds in every seed.",
    ),
    (
        8,
        "Rademacher entries are real, so the ensemble sits in the real symmetry class with \
         linear rather than quadratic level repulsion; gaps below n^(-1-c) are far more \
         frequent than for complex Wishart. The Wishart half holds.",
    ),
    (
        9,
        "the real Rademacher ensemble has the real-class 2-point function, which exceeds \
         1 - K^2 near the origin; bin-wise agreement with complex Wishart fails there. The \
         Wishart half holds.",
    ),
    (
        10,
        "Rademacher has fourth moment 1, the smallest possible, while a Gauss-divisible law \
         with weight t > 0 needs fourth moment 1 + 2t(2-t) or more, so no order-4 \
         Gauss-divisible partner exists.",
    ),
];

struct Verdict {
    passed: bool,
    detail: String,
}

fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn load(name: &str) -> ExperimentConfig {
    ExperimentConfig::from_file(&configs().join(name)).expect("shipped config parses")
}

fn value(r: &RunReport, name: &str) -> f64 {
    r.check(name).unwrap_or_else(|| panic!("report lacks check {name}")).value
}

fn all_pass(r: &RunReport, names: &[&str]) -> bool {
    names.iter().all(|n| r.check(n).is_some_and(|c| c.passed))
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let t = Instant::now();
    let v = f();
    (v, t.elapsed())
}

fn identity_suite() -> Verdict {
    let cfg = load("identities.conf");
    let (r, t) = timed(|| run_experiment(&cfg).unwrap());
    let worst = r.checks.iter().map(|c| c.value).fold(0.0, f64::max);
    // Each identity counts its evaluations; degenerate instances are skipped.
    let fewest = r.checks.iter().filter_map(|c| r.aggregates[&c.name]["checked"].as_u64()).min().unwrap_or(0);
    Verdict {
        passed: r.passed && cfg.trials >= 1000 && cfg.max_dim <= 8 && t < Duration::from_secs(30),
        detail: format!(
            "{} instances up to {}x{}, fewest evaluations of one identity {fewest}, max residual {worst:.2e} < 1e-8, {:.1} s < 30 s",
            cfg.trials,
            cfg.max_dim,
            cfg.max_dim,
            t.as_secs_f64()
        ),
    }
}

fn mp_fixed_point() -> Verdict {
    let (fp, t) = timed(|| mp_fixed_point_check(1.0).unwrap());
    Verdict {
        passed: fp.points >= 400
            && fp.max_fixed_point_residual < 1e-12
            && fp.max_quadrature_error < 1e-7
            && t < Duration::from_secs(5),
        detail: format!(
            "{} points, residual {:.2e} < 1e-12, quadrature {:.2e} < 1e-7, {:.2} s < 5 s",
            fp.points,
            fp.max_fixed_point_residual,
            fp.max_quadrature_error,
            t.as_secs_f64()
        ),
    }
}

fn esd_convergence() -> Verdict {
    let cfg = load("mp-test.conf");
    let (r, t) = timed(|| run_experiment(&cfg).unwrap());
    let names = ["a.ks_max", "a.ks_mean", "b.ks_max", "b.ks_mean"];
    Verdict {
        passed: all_pass(&r, &names) && t < Duration::from_secs(120),
        detail: format!(
            "{} worst {:.4} mean {:.4}; {} worst {:.4} mean {:.4}; {:.0} s < 120 s",
            cfg.atom,
            value(&r, "a.ks_max"),
            value(&r, "a.ks_mean"),
            cfg.atom_b.as_deref().unwrap_or("-"),
            value(&r, "b.ks_max"),
            value(&r, "b.ks_mean"),
            t.as_secs_f64()
        ),
    }
}

fn concentration() -> Verdict {
    let r = run_experiment(&load("concentration.conf")).unwrap();
    let f = value(&r, "a.concentration_fraction");
    Verdict {
        passed: all_pass(&r, &["a.concentration_fraction"]),
        detail: format!("{:.0} of 20 seeds with |N_I - p∫ρ|/p < 0.02", f * 20.0),
    }
}

fn bulk_containment() -> Verdict {
    let mut cfg = load("concentration.conf");
    cfg.p = 500;
    cfg.n = 500;
    cfg.trials = 100;
    let r = run_experiment(&cfg).unwrap();
    let f = value(&r, "a.containment_fraction");
    Verdict {
        passed: all_pass(&r, &["a.containment_fraction"]),
        detail: format!(
            "{:.0} of 100 seeds with margin > 0.05, smallest margin {:.4}",
            f * 100.0,
            r.aggregates["a"]["smallest_margin"].as_f64().unwrap_or(f64::NAN)
        ),
    }
}

fn delocalization() -> Verdict {
    let (r, t) = timed(|| run_experiment(&load("delocalization.conf")).unwrap());
    Verdict {
        passed: all_pass(&r, &["a.slope", "b.slope"]) && t < Duration::from_secs(600),
        detail: format!(
            "slopes {:.3} (complex Gaussian), {:.3} (Rademacher) in [-0.6, -0.4], {:.0} s < 600 s",
            value(&r, "a.slope"),
            value(&r, "b.slope"),
            t.as_secs_f64()
        ),
    }
}

fn projection() -> Verdict {
    let r = run_experiment(&load("projection.conf")).unwrap();
    Verdict {
        passed: all_pass(&r, &["mean_square", "tail_fraction"]),
        detail: format!(
            "mean |πX|² {:.3} in [49, 51], tail frequency {:.3} <= 0.05",
            value(&r, "mean_square"),
            value(&r, "tail_fraction")
        ),
    }
}

fn gap_property() -> Verdict {
    let mut cfg = load("gaps.conf");
    cfg.atom_b = Some("rademacher".into());
    let r = run_experiment(&cfg).unwrap();
    Verdict {
        passed: all_pass(&r, &["a.fail_fraction", "fail_fraction_difference"]),
        detail: format!(
            "Wishart failure fraction {:.2} <= 0.10, Rademacher differs by {:.2} (limit 0.05)",
            value(&r, "a.fail_fraction"),
            value(&r, "fail_fraction_difference")
        ),
    }
}

fn sine_kernel() -> Verdict {
    let mut cfg = load("correlation.conf");
    cfg.atom_b = Some("rademacher".into());
    let r = run_experiment(&cfg).unwrap();
    Verdict {
        passed: all_pass(&r, &["a.l2_error", "max_bin_z"]),
        detail: format!(
            "Wishart L² error {:.4} < 0.1, Rademacher max bin z {:.2} (limit 3)",
            value(&r, "a.l2_error"),
            value(&r, "max_bin_z")
        ),
    }
}

fn four_moment() -> Verdict {
    let r = run_experiment(&load("four-moment.conf")).unwrap();
    let partner = &r.aggregates["matched_partner"];
    let detail = match partner.get("error") {
        Some(e) => format!("order-4 partner unavailable: {}", e.as_str().unwrap_or("")),
        None => format!(
            "{} of 20 test functions favour the order-4 partner, max matched z {:.2}",
            r.aggregates["wins"],
            value(&r, "max_z_matched")
        ),
    };
    Verdict { passed: r.passed, detail }
}

/// Random standardized discrete law on 2 to 5 points, real or complex.
fn random_target(seed: u64) -> AtomDistribution {
    let mut rng = rng_from_seed(seed);
    let points = rng.random_range(2..=5);
    let complex = rng.random::<bool>();
    let support = (0..points)
        .map(|_| {
            let im = if complex { rng.random_range(-2.0..2.0) } else { 0.0 };
            c64::new(rng.random_range(-2.0..2.0), im)
        })
        .collect();
    let raw: Vec<f64> = (0..points).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let mut probs: Vec<f64> = raw.iter().map(|p| p / total).collect();
    probs[points - 1] = 1.0 - probs[..points - 1].iter().sum::<f64>();
    AtomDistribution::discrete_standardized("target", support, probs).unwrap()
}

fn moment_matching() -> Verdict {
    let mut tried = 0;
    let mut ok = 0;
    let mut radius: f64 = 0.0;
    let mut seed = 0;
    while tried < 100 {
        let target = random_target(derive_seed(2024, seed));
        seed += 1;
        let table = target.moment_table(3).unwrap();
        if table.third_moment_magnitude() > 5.0 {
            continue;
        }
        tried += 1;
        if let Ok(found) = solve_third_order_match(&table) {
            radius = radius.max(found.radius);
            if match_order(&found.law, &target, 3).unwrap().matched && found.radius <= 20.0 {
                ok += 1;
            }
        }
    }
    Verdict {
        passed: ok == 100,
        detail: format!("{ok} of 100 targets matched to order 3, largest radius {radius:.2} <= 20"),
    }
}

fn reproducibility() -> Verdict {
    let cheap = [
        "experiment = mp-test\natom = complex-gaussian\natom_b = rademacher\np = 200\nn = 200\ntrials = 4\nmaster_seed = 1\n",
        "experiment = concentration\natom = rademacher\np = 200\nn = 200\ntrials = 4\n",
        "experiment = delocalization\natom = complex-gaussian\nsizes = 40,80\ntrials = 4\n",
        "experiment = gaps\natom = complex-gaussian\natom_b = rademacher\np = 100\nn = 100\ntrials = 4\n",
        "experiment = correlation\natom = complex-gaussian\natom_b = rademacher\np = 60\nn = 60\ntrials = 100\n",
        "experiment = averaged-correlation\natom = complex-gaussian\np = 60\nn = 60\ntrials = 100\n",
        "experiment = four-moment\natom = three-point\np = 60\nn = 60\ntrials = 20\ng_count = 4\n",
        "experiment = identities\natom = complex-bernoulli\ntrials = 50\n",
        "experiment = projection\natom = rademacher\nn = 300\nd = 30\ntrials = 20\n",
    ];
    let mut same = 0;
    for text in cheap {
        let cfg: ExperimentConfig = text.parse().unwrap();
        let a = run_experiment(&cfg).unwrap().deterministic_json().unwrap();
        let b = run_experiment(&cfg).unwrap().deterministic_json().unwrap();
        same += usize::from(a == b);
    }
    Verdict {
        passed: same == cheap.len(),
        detail: format!("{same} of {} experiment kinds reproduce byte-identical reports", cheap.len()),
    }
}

fn main() -> ExitCode {
    let criteria: [(u32, &str, fn() -> Verdict); 12] = [
        (1, "identity suite", identity_suite),
        (2, "MP fixed point", mp_fixed_point),
        (3, "ESD convergence", esd_convergence),
        (4, "eigenvalue concentration", concentration),
        (5, "bulk containment", bulk_containment),
        (6, "delocalization", delocalization),
        (7, "projection concentration", projection),
        (8, "gap property", gap_property),
        (9, "sine-kernel 2-point function", sine_kernel),
        (10, "four-moment contrast", four_moment),
        (11, "moment matching", moment_matching),
        (12, "reproducibility", reproducibility),
    ];
    let only: Option<u32> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|s| s.parse().ok());
    let (mut passed, mut documented, mut unexpected) = (0, 0, 0);
    for (id, name, run) in criteria {
        if only.is_some_and(|o| o != id) {
            continue;
        }
        let v = run();
        let note = DOCUMENTED_FAILURES.iter().find(|(c, _)| *c == id).map(|(_, why)| *why);
        if v.passed {
            passed += 1;
            println!("criterion {id:>2} PASS {name}: {}", v.detail);
        } else if let Some(why) = note {
            documented += 1;
            println!("criterion {id:>2} FAIL {name}: {} [documented: {why}]", v.detail);
        } else {
            unexpected += 1;
            println!("criterion {id:>2} FAIL {name}: {}", v.detail);
        }
    }
    println!("acceptance: {passed} passed, {documented} documented failures, {unexpected} unexpected failures");
    if unexpected == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
