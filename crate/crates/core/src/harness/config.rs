//! Flat `key = value` experiment configs.
//!
//! One assignment per line; `#` starts a comment; keys may appear once.
//! Lists are comma separated. Thresholds are overridden with
//! `threshold.NAME = value`. Every key and its default is listed in
//! [`ExperimentConfig::canonical_text`], which is also what the config hash is
//! computed from.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::atoms::AtomDistribution;
use crate::error::{Error, Result};

/// Schema tag accepted in configs and echoed in reports.
pub const CONFIG_SCHEMA: &str = "rmtlab.config/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    MpTest,
    Concentration,
    Delocalization,
    Gaps,
    Correlation,
    AveragedCorrelation,
    FourMoment,
    Identities,
    Projection,
}

impl Experiment {
    pub const ALL: [Experiment; 9] = [
        Experiment::MpTest,
        Experiment::Concentration,
        Experiment::Delocalization,
        Experiment::Gaps,
        Experiment::Correlation,
        Experiment::AveragedCorrelation,
        Experiment::FourMoment,
        Experiment::Identities,
        Experiment::Projection,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::MpTest => "mp-test",
            Experiment::Concentration => "concentration",
            Experiment::Delocalization => "delocalization",
            Experiment::Gaps => "gaps",
            Experiment::Correlation => "correlation",
            Experiment::AveragedCorrelation => "averaged-correlation",
            Experiment::FourMoment => "four-moment",
            Experiment::Identities => "identities",
            Experiment::Projection => "projection",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Experiment::ALL.iter().map(|e| e.name()).collect();
                Error::config("experiment", format!("unknown experiment '{s}' (expected one of {})", names.join(", ")))
            })
    }
}

/// A fully resolved experiment description; unset keys take their defaults.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    /// Primary ensemble.
    pub atom: String,
    /// Comparison ensemble (for four-moment: the order-4 partner).
    pub atom_b: Option<String>,
    /// Second comparison ensemble (four-moment: the plain partner).
    pub atom_c: Option<String>,
    pub p: usize,
    pub n: usize,
    pub trials: usize,
    pub master_seed: u64,
    pub eps: f64,
    pub c: f64,
    pub c1: f64,
    pub interval_lo: f64,
    pub interval_hi: f64,
    pub u: f64,
    pub window: f64,
    pub k: usize,
    pub bins: usize,
    pub bin_half_width: f64,
    pub anchor_half_width: f64,
    pub window_points: usize,
    /// Correlation bins compared against predictions have centers within this range.
    pub compare_half_width: f64,
    /// 1-based eigenvalue indices; empty means `[p/2]`.
    pub indices: Vec<usize>,
    pub g_count: usize,
    pub g_width_min: f64,
    pub g_width_max: f64,
    /// Center jitter of the test functions, in local mean spacings.
    pub g_spread: f64,
    pub sizes: Vec<usize>,
    pub d: usize,
    pub deviation: f64,
    pub max_dim: usize,
    pub record_trials: bool,
    pub output: Option<PathBuf>,
    pub thresholds: BTreeMap<String, f64>,
}

impl ExperimentConfig {
    /// Defaults for `experiment`, with the primary ensemble `atom`.
    pub fn new(experiment: Experiment, atom: impl Into<String>) -> Self {
        ExperimentConfig {
            experiment,
            atom: atom.into(),
            atom_b: None,
            atom_c: None,
            p: 100,
            n: 100,
            trials: 1,
            master_seed: 0,
            eps: 0.1,
            c: 0.5,
            c1: 10.0,
            interval_lo: 1.0,
            interval_hi: 2.0,
            u: 2.0,
            window: 0.2,
            k: 2,
            bins: 24,
            bin_half_width: 3.0,
            anchor_half_width: 8.0,
            window_points: 21,
            compare_half_width: 3.0,
            indices: Vec::new(),
            g_count: 20,
            g_width_min: 1.0,
            g_width_max: 2.0,
            g_spread: 1.5,
            sizes: vec![100, 200, 400, 800],
            d: 50,
            deviation: 5.0,
            max_dim: 8,
            record_trials: false,
            output: None,
            thresholds: BTreeMap::new(),
        }
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        text.parse()
    }

    /// Indices to use, defaulting to the middle of the spectrum.
    pub fn resolved_indices(&self) -> Vec<usize> {
        if self.indices.is_empty() {
            vec![(self.p / 2).max(1)]
        } else {
            self.indices.clone()
        }
    }

    /// Checks cross-field constraints and that atom names resolve.
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::config("trials", "must be at least 1"));
        }
        if self.p == 0 || self.n == 0 {
            return Err(Error::config("p", "dimensions must be positive"));
        }
        if self.p > self.n {
            return Err(Error::config("p", format!("p = {} exceeds n = {}; transpose the ensemble", self.p, self.n)));
        }
        for (key, name) in [("atom", Some(&self.atom)), ("atom_b", self.atom_b.as_ref()), ("atom_c", self.atom_c.as_ref())] {
            if let Some(name) = name {
                // The order-4 partner may legitimately fail to exist; that is
                // reported by the experiment, so only syntax is checked here.
                match AtomDistribution::from_name(name) {
                    Ok(_) => {}
                    Err(Error::UnknownAtom(_)) => return Err(Error::config(key, format!("unknown atom '{name}'"))),
                    Err(e) if key == "atom" => return Err(Error::config(key, e.to_string())),
                    Err(_) => {}
                }
            }
        }
        let positive = [("eps", self.eps), ("c", self.c), ("c1", self.c1), ("window", self.window), ("bin_half_width", self.bin_half_width), ("anchor_half_width", self.anchor_half_width), ("g_width_min", self.g_width_min), ("deviation", self.deviation)];
        for (key, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::config(key, format!("must be a positive number, got {v}")));
            }
        }
        if self.eps >= 0.5 {
            return Err(Error::config("eps", "must be below 1/2"));
        }
        if self.interval_lo > self.interval_hi {
            return Err(Error::config("interval_lo", "exceeds interval_hi"));
        }
        if self.g_width_max < self.g_width_min {
            return Err(Error::config("g_width_max", "is below g_width_min"));
        }
        if self.bins == 0 || self.window_points == 0 {
            return Err(Error::config("bins", "bin counts must be positive"));
        }
        if !(1..=3).contains(&self.k) {
            return Err(Error::config("k", "must be 1, 2 or 3"));
        }
        if let Some(i) = self.indices.iter().find(|&&i| i == 0 || i > self.p) {
            return Err(Error::config("indices", format!("index {i} outside 1..={}", self.p)));
        }
        if self.sizes.is_empty() || self.sizes.contains(&0) {
            return Err(Error::config("sizes", "need positive sizes"));
        }
        if self.experiment == Experiment::Projection && (self.d == 0 || self.d > self.n) {
            return Err(Error::config("d", format!("need 1 <= d <= n = {}", self.n)));
        }
        if self.max_dim < 3 {
            return Err(Error::config("max_dim", "must be at least 3"));
        }
        Ok(())
    }

    /// Every key with its resolved value, in a fixed order.
    pub fn canonical_text(&self) -> String {
        fn list<T: ToString>(v: &[T]) -> String {
            v.iter().map(T::to_string).collect::<Vec<_>>().join(",")
        }
        let opt = |o: &Option<String>| o.clone().unwrap_or_default();
        let mut lines = vec![
            ("schema".to_string(), CONFIG_SCHEMA.to_string()),
            ("experiment".into(), self.experiment.name().into()),
            ("atom".into(), self.atom.clone()),
            ("atom_b".into(), opt(&self.atom_b)),
            ("atom_c".into(), opt(&self.atom_c)),
            ("p".into(), self.p.to_string()),
            ("n".into(), self.n.to_string()),
            ("trials".into(), self.trials.to_string()),
            ("master_seed".into(), self.master_seed.to_string()),
            ("eps".into(), self.eps.to_string()),
            ("c".into(), self.c.to_string()),
            ("c1".into(), self.c1.to_string()),
            ("interval_lo".into(), self.interval_lo.to_string()),
            ("interval_hi".into(), self.interval_hi.to_string()),
            ("u".into(), self.u.to_string()),
            ("window".into(), self.window.to_string()),
            ("k".into(), self.k.to_string()),
            ("bins".into(), self.bins.to_string()),
            ("bin_half_width".into(), self.bin_half_width.to_string()),
            ("anchor_half_width".into(), self.anchor_half_width.to_string()),
            ("window_points".into(), self.window_points.to_string()),
            ("compare_half_width".into(), self.compare_half_width.to_string()),
            ("indices".into(), list(&self.indices)),
            ("g_count".into(), self.g_count.to_string()),
            ("g_width_min".into(), self.g_width_min.to_string()),
            ("g_width_max".into(), self.g_width_max.to_string()),
            ("g_spread".into(), self.g_spread.to_string()),
            ("sizes".into(), list(&self.sizes)),
            ("d".into(), self.d.to_string()),
            ("deviation".into(), self.deviation.to_string()),
            ("max_dim".into(), self.max_dim.to_string()),
            ("record_trials".into(), self.record_trials.to_string()),
            ("output".into(), self.output.as_ref().map(|p| p.display().to_string()).unwrap_or_default()),
        ];
        for (k, v) in &self.thresholds {
            lines.push((format!("threshold.{k}"), v.to_string()));
        }
        let mut out = String::new();
        for (k, v) in lines {
            out.push_str(&k);
            out.push_str(" = ");
            out.push_str(&v);
            out.push('\n');
        }
        out
    }

    /// SHA-256 of [`canonical_text`](Self::canonical_text), hex encoded.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical_text().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

impl FromStr for ExperimentConfig {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut raw: BTreeMap<String, String> = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::config(format!("line {}", lineno + 1), format!("expected `key = value`, got '{line}'"))
            })?;
            let key = k.trim().to_string();
            if raw.insert(key.clone(), v.trim().to_string()).is_some() {
                return Err(Error::config(key, "given more than once"));
            }
        }
        let mut r = Reader { raw };
        if let Some(schema) = r.take("schema") {
            if schema != CONFIG_SCHEMA {
                return Err(Error::config("schema", format!("unsupported schema '{schema}', expected '{CONFIG_SCHEMA}'")));
            }
        }
        let experiment: Experiment = r.required("experiment")?.parse()?;
        let atom = r.take_nonempty("atom").unwrap_or_else(|| "complex-gaussian".into());
        let mut c = ExperimentConfig::new(experiment, atom);
        c.atom_b = r.take_nonempty("atom_b");
        c.atom_c = r.take_nonempty("atom_c");
        r.num("p", &mut c.p)?;
        r.num("n", &mut c.n)?;
        r.num("trials", &mut c.trials)?;
        r.num("master_seed", &mut c.master_seed)?;
        r.num("eps", &mut c.eps)?;
        r.num("c", &mut c.c)?;
        r.num("c1", &mut c.c1)?;
        r.num("interval_lo", &mut c.interval_lo)?;
        r.num("interval_hi", &mut c.interval_hi)?;
        r.num("u", &mut c.u)?;
        r.num("window", &mut c.window)?;
        r.num("k", &mut c.k)?;
        r.num("bins", &mut c.bins)?;
        r.num("bin_half_width", &mut c.bin_half_width)?;
        r.num("anchor_half_width", &mut c.anchor_half_width)?;
        r.num("window_points", &mut c.window_points)?;
        r.num("compare_half_width", &mut c.compare_half_width)?;
        r.list("indices", &mut c.indices)?;
        r.num("g_count", &mut c.g_count)?;
        r.num("g_width_min", &mut c.g_width_min)?;
        r.num("g_width_max", &mut c.g_width_max)?;
        r.num("g_spread", &mut c.g_spread)?;
        r.list("sizes", &mut c.sizes)?;
        r.num("d", &mut c.d)?;
        r.num("deviation", &mut c.deviation)?;
        r.num("max_dim", &mut c.max_dim)?;
        r.num("record_trials", &mut c.record_trials)?;
        c.output = r.take_nonempty("output").map(PathBuf::from);
        let threshold_keys: Vec<String> = r.raw.keys().filter(|k| k.starts_with("threshold.")).cloned().collect();
        for key in threshold_keys {
            let mut v = 0.0;
            r.num(&key, &mut v)?;
            c.thresholds.insert(key["threshold.".len()..].to_string(), v);
        }
        if let Some(key) = r.raw.keys().next() {
            return Err(Error::config(key.clone(), "unknown key"));
        }
        c.validate()?;
        Ok(c)
    }
}

struct Reader {
    raw: BTreeMap<String, String>,
}

impl Reader {
    fn take(&mut self, key: &str) -> Option<String> {
        self.raw.remove(key)
    }

    fn take_nonempty(&mut self, key: &str) -> Option<String> {
        self.take(key).filter(|v| !v.is_empty())
    }

    fn required(&mut self, key: &str) -> Result<String> {
        self.take_nonempty(key).ok_or_else(|| Error::config(key, "missing required key"))
    }

    fn num<T: FromStr>(&mut self, key: &str, slot: &mut T) -> Result<()> {
        if let Some(v) = self.take(key) {
            *slot = v
                .parse()
                .map_err(|_| Error::config(key, format!("cannot parse '{v}' as {}", std::any::type_name::<T>())))?;
        }
        Ok(())
    }

    fn list<T: FromStr>(&mut self, key: &str, slot: &mut Vec<T>) -> Result<()> {
        if let Some(v) = self.take(key) {
            *slot = v
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .enumerate()
                .map(|(i, s)| {
                    s.parse().map_err(|_| Error::config(format!("{key}[{i}]"), format!("cannot parse '{s}'")))
                })
                .collect::<Result<_>>()?;
        }
        Ok(())
    }
}
