//! Command-line front end.
//!
//! Exit codes: 0 pass, 1 threshold failure, 2 usage or input error.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rmtlab::atoms::{catalog, AtomDistribution};
use rmtlab::harness::{check_matrix, run_experiment, ExperimentConfig, IdentitySweep};
use rmtlab::mp::MpModel;
use rmtlab::seeding::derive_seed;
use rmtlab::spectral::generate_matrix;

#[derive(Parser)]
#[command(name = "rmtlab", version, about = "Random sample covariance matrix experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a config file.
    Run {
        config: PathBuf,
        /// Write the JSON report here (overrides the config's `output`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the atom distributions that configs can name.
    Catalog,
    /// Marchenko–Pastur utilities.
    Mp {
        #[command(subcommand)]
        command: MpCommand,
    },
    /// Check the exact spectral identities on random matrices of fixed shape.
    Identities {
        /// Matrix shape as PxN.
        #[arg(long)]
        dims: String,
        /// Number of random matrices.
        #[arg(long, default_value_t = 10)]
        seeds: u64,
        #[arg(long, default_value = "complex-gaussian")]
        atom: String,
        #[arg(long, default_value_t = 1e-8)]
        tolerance: f64,
    },
    /// Inspect saved reports.
    Report {
        #[command(subcommand)]
        command: ReportCommand,
    },
}

#[derive(Subcommand)]
enum MpCommand {
    /// Density and CDF on an even grid over the support, as CSV.
    Table {
        #[arg(long)]
        y: f64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 401)]
        points: usize,
    },
}

#[derive(Subcommand)]
enum ReportCommand {
    /// Summarize a report's verdicts.
    Show { file: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) if is_broken_pipe(e.as_ref()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn fmt_value(v: f64) -> String {
    if v != 0.0 && v.is_finite() && v.abs() < 1e-3 {
        format!("{v:.3e}")
    } else {
        format!("{v:.6}")
    }
}

fn is_broken_pipe(e: &(dyn std::error::Error + 'static)) -> bool {
    let mut cur = Some(e);
    while let Some(err) = cur {
        if let Some(io) = err.downcast_ref::<std::io::Error>() {
            return io.kind() == std::io::ErrorKind::BrokenPipe;
        }
        if let Some(rmtlab::Error::Io(io)) = err.downcast_ref::<rmtlab::Error>() {
            return io.kind() == std::io::ErrorKind::BrokenPipe;
        }
        if let Some(rmtlab::Error::Csv(c)) = err.downcast_ref::<rmtlab::Error>() {
            return matches!(c.kind(), csv::ErrorKind::Io(io) if io.kind() == std::io::ErrorKind::BrokenPipe);
        }
        cur = err.source();
    }
    false
}

fn run(cmd: Command) -> Result<bool, Box<dyn std::error::Error>> {
    let mut stdout = std::io::stdout().lock();
    match cmd {
        Command::Run { config, out } => {
            let mut cfg = ExperimentConfig::from_file(&config)
                .map_err(|e| format!("{}: {e}", config.display()))?;
            if out.is_some() {
                cfg.output = out;
            }
            let report = run_experiment(&cfg)?;
            for c in &report.checks {
                writeln!(stdout, "{} {} = {}", if c.passed { "PASS" } else { "FAIL" }, c.name, fmt_value(c.value))?;
            }
            writeln!(stdout, 
                "{}: {} in {:.2}s (config {})",
                report.experiment,
                if report.passed { "pass" } else { "fail" },
                report.wall_time_seconds,
                &report.config_hash[..12]
            )?;
            if cfg.output.is_none() {
                writeln!(stdout, "{}", report.to_json()?)?;
            }
            Ok(report.passed)
        }
        Command::Catalog => {
            for e in catalog() {
                writeln!(stdout, "{:<32} {}", e.name, e.description)?;
            }
            Ok(true)
        }
        Command::Mp { command: MpCommand::Table { y, out, points } } => {
            let model = MpModel::new(y)?;
            match out {
                Some(path) => model.write_table_csv(std::fs::File::create(path)?, points)?,
                None => model.write_table_csv(&mut stdout, points)?,
            }
            Ok(true)
        }
        Command::Identities { dims, seeds, atom, tolerance } => {
            let (p, n) = dims
                .split_once(['x', 'X'])
                .and_then(|(p, n)| Some((p.trim().parse::<usize>().ok()?, n.trim().parse::<usize>().ok()?)))
                .ok_or_else(|| format!("--dims must look like PxN, got '{dims}'"))?;
            let dist = AtomDistribution::from_name(&atom)?;
            let mut worst = IdentitySweep::default();
            for s in 0..seeds {
                let m = generate_matrix(p, n, &dist, derive_seed(s, 0))?;
                worst.merge(&check_matrix(&m, derive_seed(s, 1))?);
            }
            let mut ok = true;
            for (name, st) in worst.stats() {
                let pass = st.max_residual <= tolerance;
                ok &= pass;
                writeln!(stdout, 
                    "{} {name}: max residual {:.3e} ({} checked, {} skipped)",
                    if pass { "PASS" } else { "FAIL" },
                    st.max_residual,
                    st.checked,
                    st.skipped
                )?;
            }
            Ok(ok)
        }
        Command::Report { command: ReportCommand::Show { file } } => {
            let text = std::fs::read_to_string(&file).map_err(|e| format!("{}: {e}", file.display()))?;
            let v: serde_json::Value = serde_json::from_str(&text)?;
            writeln!(stdout, "experiment: {}", v["experiment"].as_str().unwrap_or("?"))?;
            writeln!(stdout, "version:    {}", v["version"].as_str().unwrap_or("?"))?;
            writeln!(stdout, "config:     {}", v["config_hash"].as_str().unwrap_or("?"))?;
            writeln!(stdout, "wall time:  {}s", v["wall_time_seconds"])?;
            for c in v["checks"].as_array().into_iter().flatten() {
                writeln!(stdout, 
                    "{} {} = {}",
                    if c["passed"].as_bool() == Some(true) { "PASS" } else { "FAIL" },
                    c["name"].as_str().unwrap_or("?"),
                    c["value"]
                )?;
            }
            let passed = v["passed"].as_bool() == Some(true);
            writeln!(stdout, "overall:    {}", if passed { "pass" } else { "fail" })?;
            Ok(true)
        }
    }
}
