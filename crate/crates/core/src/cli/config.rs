use std::fmt;
use std::path::PathBuf;

use serde::{Serialize, Serializer};
use serde_json::{Map, Value};

use crate::geometry::C0Policy;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    DtnVerify,
    CommutatorSweep,
    IdentityCheck,
    SquareReport,
    CarlesonReport,
    KenigSteinCheck,
    KernelCheck,
}

impl Experiment {
    pub const ALL: [Experiment; 7] = [
        Experiment::DtnVerify,
        Experiment::CommutatorSweep,
        Experiment::IdentityCheck,
        Experiment::SquareReport,
        Experiment::CarlesonReport,
        Experiment::KenigSteinCheck,
        Experiment::KernelCheck,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Experiment::DtnVerify => "dtn-verify",
            Experiment::CommutatorSweep => "commutator-sweep",
            Experiment::IdentityCheck => "identity-check",
            Experiment::SquareReport => "square-report",
            Experiment::CarlesonReport => "carleson-report",
            Experiment::KenigSteinCheck => "kenig-stein-check",
            Experiment::KernelCheck => "kernel-check",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|e| e.name() == name)
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Validated run parameters. JSON keys: `experiment`, `n`, `L`, `Y`,
/// `y_levels`, `N0`, `seed`, `trials`, `band_limit`, `p`, `c0_policy`,
/// `out_dir`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub n: usize,
    #[serde(rename = "L")]
    pub period: f64,
    #[serde(rename = "Y")]
    pub y_max: f64,
    pub y_levels: usize,
    #[serde(rename = "N0")]
    pub aperture: f64,
    pub seed: u64,
    pub trials: usize,
    pub band_limit: usize,
    pub p: f64,
    #[serde(serialize_with = "serialize_c0")]
    pub c0_policy: C0Policy,
    pub out_dir: PathBuf,
    /// Set from the command line only.
    pub paper_literal_symbol: bool,
}

fn serialize_c0<S: Serializer>(policy: &C0Policy, s: S) -> Result<S::Ok, S::Error> {
    match policy {
        C0Policy::Auto => s.serialize_str("auto"),
        C0Policy::Fixed(c) => s.serialize_f64(*c),
    }
}

impl ExperimentConfig {
    /// Reference parameters for one experiment.
    pub fn defaults(experiment: Experiment) -> Self {
        let period = std::f64::consts::TAU;
        Self {
            experiment,
            n: 256,
            period,
            y_max: 2.0 * period,
            y_levels: 256,
            aperture: 2.0,
            seed: 42,
            trials: 100,
            band_limit: 32,
            p: 2.0,
            c0_policy: C0Policy::Auto,
            out_dir: PathBuf::from("out"),
            paper_literal_symbol: false,
        }
    }

    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("config serializes")
    }
}

/// Every problem found in a config document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub violations: Vec<String>,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid config: {}", self.violations.join("; "))
    }
}

impl std::error::Error for ConfigError {}

struct Reader<'a> {
    map: &'a Map<String, Value>,
    violations: Vec<String>,
}

impl Reader<'_> {
    fn number(&mut self, key: &str) -> Option<f64> {
        let v = self.map.get(key)?;
        match v.as_f64() {
            Some(x) => Some(x),
            None => {
                self.violations.push(format!("{key} must be a number"));
                None
            }
        }
    }

    fn count(&mut self, key: &str) -> Option<u64> {
        let v = self.map.get(key)?;
        match v.as_u64() {
            Some(x) => Some(x),
            None => {
                self.violations.push(format!("{key} must be a non-negative integer"));
                None
            }
        }
    }
}

const KEYS: [&str; 12] = [
    "experiment",
    "n",
    "L",
    "Y",
    "y_levels",
    "N0",
    "seed",
    "trials",
    "band_limit",
    "p",
    "c0_policy",
    "out_dir",
];

/// Parses and checks a JSON config document, filling defaults for absent
/// keys. All violations are reported together.
pub fn validate_config(raw: &str) -> Result<ExperimentConfig, ConfigError> {
    let doc: Value = serde_json::from_str(raw).map_err(|e| ConfigError {
        violations: vec![format!("config is not valid JSON: {e}")],
    })?;
    let Some(map) = doc.as_object() else {
        return Err(ConfigError {
            violations: vec!["config must be a JSON object".into()],
        });
    };
    let mut r = Reader {
        map,
        violations: Vec::new(),
    };
    for key in map.keys() {
        if !KEYS.contains(&key.as_str()) {
            r.violations.push(format!("unknown key \"{key}\""));
        }
    }
    let experiment = match map.get("experiment") {
        None => {
            r.violations.push("experiment is required".into());
            None
        }
        Some(Value::String(s)) => {
            let e = Experiment::parse(s);
            if e.is_none() {
                let names: Vec<_> = Experiment::ALL.iter().map(|e| e.name()).collect();
                r.violations.push(format!("unknown experiment \"{s}\" (expected one of {})", names.join(", ")));
            }
            e
        }
        Some(_) => {
            r.violations.push("experiment must be a string".into());
            None
        }
    };
    let mut cfg = ExperimentConfig::defaults(experiment.unwrap_or(Experiment::DtnVerify));

    if let Some(n) = r.count("n") {
        if !(n as usize).is_power_of_two() {
            r.violations.push(format!("n must be a power of two (got {n})"));
        } else if !(16..=8192).contains(&n) {
            r.violations.push(format!("n must lie in 16..=8192 (got {n})"));
        } else {
            cfg.n = n as usize;
        }
    }
    if let Some(l) = r.number("L") {
        if l.is_finite() && l > 0.0 {
            cfg.period = l;
        } else {
            r.violations.push(format!("L must be a positive finite number (got {l})"));
        }
    }
    cfg.y_max = 2.0 * cfg.period;
    if let Some(y) = r.number("Y") {
        if y.is_finite() && y > 0.0 && y <= 4.0 * cfg.period {
            cfg.y_max = y;
        } else {
            r.violations.push(format!("Y must satisfy 0 < Y ≤ 4L (got {y})"));
        }
    }
    if let Some(m) = r.count("y_levels") {
        if m % 4 == 0 && (8..=4096).contains(&m) {
            cfg.y_levels = m as usize;
        } else {
            r.violations.push(format!("y_levels must be a multiple of 4 in 8..=4096 (got {m})"));
        }
    }
    if let Some(a) = r.number("N0") {
        if a.is_finite() && a >= 1.0 {
            cfg.aperture = a;
        } else {
            r.violations.push(format!("N0 must be a finite number ≥ 1 (got {a})"));
        }
    }
    if let Some(s) = r.count("seed") {
        cfg.seed = s;
    }
    if let Some(t) = r.count("trials") {
        if (1..=100_000).contains(&t) {
            cfg.trials = t as usize;
        } else {
            r.violations.push(format!("trials must lie in 1..=100000 (got {t})"));
        }
    }
    if let Some(b) = r.count("band_limit") {
        let cap = cfg.n / 4;
        if b >= 1 && b as usize <= cap {
            cfg.band_limit = b as usize;
        } else {
            r.violations.push(format!("band_limit must lie in 1..={cap} (got {b})"));
        }
    } else if cfg.band_limit > cfg.n / 4 {
        cfg.band_limit = cfg.n / 4;
    }
    if let Some(p) = r.number("p") {
        if p > 1.0 && p.is_finite() {
            cfg.p = p;
        } else {
            r.violations.push(format!("p must satisfy 1<p<∞ (got {p})"));
        }
    }
    match map.get("c0_policy") {
        None => {}
        Some(Value::String(s)) if s == "auto" => cfg.c0_policy = C0Policy::Auto,
        Some(v) => match v.as_f64() {
            Some(c) if c.is_finite() && c > 0.0 => cfg.c0_policy = C0Policy::Fixed(c),
            _ => r.violations.push(format!("c0_policy must be \"auto\" or a positive number (got {v})")),
        },
    }
    match map.get("out_dir") {
        None => {}
        Some(Value::String(s)) if !s.is_empty() => cfg.out_dir = PathBuf::from(s),
        Some(v) => r.violations.push(format!("out_dir must be a non-empty string (got {v})")),
    }

    if r.violations.is_empty() {
        Ok(cfg)
    } else {
        Err(ConfigError {
            violations: r.violations,
        })
    }
}
