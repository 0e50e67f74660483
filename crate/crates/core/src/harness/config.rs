//! Experiment manifests: JSON in, validated structs out.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::correlations::{Estimator, Observable};
use crate::error::{Error, Result};
use crate::schedule::RadiusSchedule;
use crate::systems::{OrbitMode, SystemDescriptor, SystemKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    /// Plain targets `R(x, r_k)`; ratio against `h(x0)`.
    #[default]
    Sbc,
    /// Measure-matched targets on the thinned schedule; ratio against 1.
    Hat,
    /// Convergent schedule; counts late hits.
    Convergence,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeName {
    #[serde(alias = "float")]
    Float64,
    #[serde(alias = "exact", alias = "modular")]
    ExactModular,
    #[serde(alias = "hp")]
    HighPrecision,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub path: PathBuf,
    #[serde(default = "default_format")]
    pub format: ReportFormat,
}

fn default_format() -> ReportFormat {
    ReportFormat::Json
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Per-seed bound on `|ratio - h| / h`.
    pub ratio_tolerance: f64,
    /// Bound on `|median(ratio / h) - 1|`.
    pub median_tolerance: f64,
    /// Fraction of seeds that must be within `ratio_tolerance`.
    pub pass_fraction: f64,
    pub envelope_c: f64,
    pub envelope_eps: f64,
    /// Envelope is checked at checkpoints `N_j >= envelope_min_n`.
    pub envelope_min_n: u64,
    pub envelope_pass_fraction: f64,
    /// Convergence runs: hits with `k > tail_start` are tail hits.
    pub tail_start: u64,
    pub tail_fraction: f64,
    /// Convergence runs: optional bound on every seed's total hits.
    pub max_total_hits: Option<u64>,
    /// Below this final normalizer the verdicts are inconclusive.
    pub min_normalizer: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            ratio_tolerance: 0.10,
            median_tolerance: 0.05,
            pass_fraction: 0.9,
            envelope_c: 3.0,
            envelope_eps: 0.5,
            envelope_min_n: 1000,
            envelope_pass_fraction: 0.95,
            tail_start: 1000,
            tail_fraction: 0.9,
            max_total_hits: None,
            min_normalizer: 100.0,
        }
    }
}

impl Tolerances {
    fn validate(&self) -> Result<()> {
        let positive = [
            ("ratio_tolerance", self.ratio_tolerance),
            ("median_tolerance", self.median_tolerance),
            ("pass_fraction", self.pass_fraction),
            ("envelope_c", self.envelope_c),
            ("envelope_eps", self.envelope_eps),
            ("envelope_pass_fraction", self.envelope_pass_fraction),
            ("tail_fraction", self.tail_fraction),
            ("min_normalizer", self.min_normalizer),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("tolerances.{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [
            ("pass_fraction", self.pass_fraction),
            ("envelope_pass_fraction", self.envelope_pass_fraction),
            ("tail_fraction", self.tail_fraction),
        ] {
            if v > 1.0 {
                return Err(Error::Config(format!("tolerances.{name} must be at most 1, got {v}")));
            }
        }
        Ok(())
    }
}

/// One hit-count experiment over an ensemble of seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub experiment: ExperimentKind,
    pub system: SystemKind,
    /// Defaults to the system's natural mode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<ModeName>,
    /// High-precision budget; defaults to what `n` steps need plus 64 bits.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub precision_bits: Option<u32>,
    #[serde(default = "default_modulus_bits")]
    pub modulus_bits: u32,
    pub schedule: RadiusSchedule,
    pub n: u64,
    #[serde(default = "default_ensemble")]
    pub ensemble: usize,
    /// Master rng seed.
    #[serde(default)]
    pub seed: u64,
    /// Explicit seeds (`"0.3"`, `"1/3"`, `"1/7,1/13"`); replaces sampling.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<String>>,
    /// Defaults to the geometric grid `round(10^(j/8))`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoints: Option<Vec<u64>>,
    #[serde(default)]
    pub tolerances: Tolerances,
    /// Where to write the report; not part of the content hash.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputSpec>,
}

fn default_modulus_bits() -> u32 {
    61
}

fn default_ensemble() -> usize {
    1
}

impl ExperimentConfig {
    pub fn from_json_str(s: &str) -> Result<Self> {
        Self::from_value(parse_json(s)?)
    }

    /// Rejects unknown keys, deserializes and validates.
    pub fn from_value(value: Value) -> Result<Self> {
        reject_unknown(&value, EXPERIMENT_KEYS)?;
        let cfg: Self = serde_json::from_value(value).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::from_json_str(&read(path)?)
    }

    pub fn system(&self) -> SystemDescriptor {
        SystemDescriptor::new(self.system)
    }

    /// The orbit mode after defaults are applied.
    pub fn orbit_mode(&self) -> OrbitMode {
        let sys = self.system();
        match self.mode {
            None => sys.default_mode(),
            Some(ModeName::Float64) => OrbitMode::Float64,
            Some(ModeName::ExactModular) => OrbitMode::ExactModular,
            Some(ModeName::HighPrecision) => OrbitMode::HighPrecision {
                bits: self.precision_bits.unwrap_or_else(|| {
                    let per_step = sys.lyapunov() / std::f64::consts::LN_2;
                    (per_step * self.n as f64).ceil() as u32 + 64
                }),
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let sys = self.system();
        if self.n == 0 {
            return Err(Error::Config("n must be at least 1".into()));
        }
        if self.ensemble == 0 && self.x0.is_none() {
            return Err(Error::Config("ensemble must be at least 1".into()));
        }
        if let Some(x0) = &self.x0 {
            if x0.is_empty() {
                return Err(Error::Config("x0 lists no seeds".into()));
            }
        }
        self.schedule
            .validate()
            .map_err(|e| Error::Config(format!("schedule: {e}")))?;
        if self.schedule.dim() != sys.dim() {
            return Err(Error::Config(format!(
                "schedule has dimension {} but {} has dimension {}",
                self.schedule.dim(),
                sys.name(),
                sys.dim()
            )));
        }
        let mode = self.orbit_mode();
        if !sys.supports(&mode) {
            return Err(Error::InvalidMode(format!(
                "{} does not support {} orbits",
                sys.name(),
                mode.name()
            )));
        }
        if !(8..=62).contains(&self.modulus_bits) {
            return Err(Error::Config(format!(
                "modulus_bits must lie in [8, 62], got {}",
                self.modulus_bits
            )));
        }
        self.tolerances.validate()
    }

    /// Number of seeds the run will use.
    pub fn seed_count(&self) -> usize {
        self.x0.as_ref().map_or(self.ensemble, Vec::len)
    }

    /// The config as recorded in reports: output location removed.
    pub fn canonical(&self) -> Self {
        Self {
            output: None,
            ..self.clone()
        }
    }

    /// SHA-256 of the canonical JSON form.
    pub fn content_hash(&self) -> String {
        content_hash(&self.canonical())
    }
}

/// Correlation-decay estimate for a pair of observables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrelationConfig {
    pub system: SystemKind,
    #[serde(default = "Observable::identity")]
    pub f: Observable,
    #[serde(default = "Observable::identity")]
    pub g: Observable,
    #[serde(default = "default_n_max")]
    pub n_max: u64,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_estimator")]
    pub estimator: Estimator,
    #[serde(default)]
    pub seed: u64,
    /// Reference values per lag, checked within 3 standard errors.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_rate: Option<f64>,
    #[serde(default = "default_rate_tolerance")]
    pub rate_tolerance: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputSpec>,
}

fn default_n_max() -> u64 {
    6
}

fn default_samples() -> usize {
    100_000
}

fn default_estimator() -> Estimator {
    Estimator::MonteCarlo
}

fn default_rate_tolerance() -> f64 {
    0.1
}

impl CorrelationConfig {
    pub fn from_json_str(s: &str) -> Result<Self> {
        Self::from_value(parse_json(s)?)
    }

    /// Rejects unknown keys, deserializes and validates.
    pub fn from_value(value: Value) -> Result<Self> {
        reject_unknown(&value, CORRELATION_KEYS)?;
        let cfg: Self = serde_json::from_value(value).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::from_json_str(&read(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(e) = &self.expected {
            if e.len() as u64 != self.n_max + 1 {
                return Err(Error::Config(format!(
                    "expected lists {} values but lags 0..={} need {}",
                    e.len(),
                    self.n_max,
                    self.n_max + 1
                )));
            }
        }
        if !(self.rate_tolerance > 0.0) {
            return Err(Error::Config("rate_tolerance must be positive".into()));
        }
        Ok(())
    }

    pub fn content_hash(&self) -> String {
        content_hash(&Self {
            output: None,
            ..self.clone()
        })
    }
}

/// Structural checks on one system's partition and density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConditionsConfig {
    pub system: SystemKind,
    #[serde(default = "default_eps_grid")]
    pub eps_grid: Vec<f64>,
    /// Gauss branches checked for boundary regularity.
    #[serde(default = "default_branch_cap")]
    pub branch_cap: u64,
    #[serde(default = "default_r_grid")]
    pub r_grid: Vec<f64>,
    #[serde(default = "default_depth")]
    pub depth: usize,
    #[serde(default = "default_growth_eps")]
    pub growth_eps: f64,
    /// Gauss digit cap used by the cylinder enumeration.
    #[serde(default = "default_growth_cap")]
    pub growth_cap: u64,
    /// Cylinders measured per depth.
    #[serde(default = "default_growth_sample")]
    pub growth_sample: usize,
    #[serde(default = "default_invariance_tol")]
    pub invariance_tol: f64,
    #[serde(default = "default_expansion_pairs")]
    pub expansion_pairs: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputSpec>,
}

fn default_eps_grid() -> Vec<f64> {
    vec![1e-2, 1e-3, 1e-4]
}
fn default_branch_cap() -> u64 {
    100
}
fn default_r_grid() -> Vec<f64> {
    vec![0.1, 0.01, 0.001]
}
fn default_depth() -> usize {
    5
}
fn default_growth_eps() -> f64 {
    1e-4
}
fn default_growth_cap() -> u64 {
    6
}
fn default_growth_sample() -> usize {
    200
}
fn default_invariance_tol() -> f64 {
    1e-8
}
fn default_expansion_pairs() -> usize {
    100_000
}

impl ConditionsConfig {
    pub fn for_system(system: SystemKind) -> Self {
        serde_json::from_value(serde_json::json!({ "system": system })).expect("defaults are valid")
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        Self::from_value(parse_json(s)?)
    }

    pub fn from_value(value: Value) -> Result<Self> {
        reject_unknown(&value, CONDITIONS_KEYS)?;
        serde_json::from_value(value).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::from_json_str(&read(path)?)
    }

    pub fn content_hash(&self) -> String {
        content_hash(&Self {
            output: None,
            ..self.clone()
        })
    }
}

pub(crate) fn content_hash<T: Serialize>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).expect("config serializes");
    hex::encode(Sha256::digest(&bytes))
}

/// Parses JSON text, reporting syntax errors as config errors.
pub fn parse_json(s: &str) -> Result<Value> {
    serde_json::from_str(s).map_err(|e| Error::Config(format!("malformed JSON: {e}")))
}

/// Reads and parses a JSON file.
pub fn read_json(path: &Path) -> Result<Value> {
    parse_json(&read(path)?)
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Known keys per object, `""` naming the top level.
type KeyTable = &'static [(&'static str, &'static [&'static str])];

const OUTPUT_KEYS: &[&str] = &["path", "format"];

const EXPERIMENT_KEYS: KeyTable = &[
    (
        "",
        &[
            "experiment",
            "system",
            "mode",
            "precision_bits",
            "modulus_bits",
            "schedule",
            "n",
            "ensemble",
            "seed",
            "x0",
            "checkpoints",
            "tolerances",
            "output",
        ],
    ),
    (
        "tolerances",
        &[
            "ratio_tolerance",
            "median_tolerance",
            "pass_fraction",
            "envelope_c",
            "envelope_eps",
            "envelope_min_n",
            "envelope_pass_fraction",
            "tail_start",
            "tail_fraction",
            "max_total_hits",
            "min_normalizer",
        ],
    ),
    ("schedule", &["family", "exponents", "scales", "radii"]),
    ("output", OUTPUT_KEYS),
];

const CORRELATION_KEYS: KeyTable = &[
    (
        "",
        &[
            "system",
            "f",
            "g",
            "n_max",
            "samples",
            "estimator",
            "seed",
            "expected",
            "expected_rate",
            "rate_tolerance",
            "output",
        ],
    ),
    ("output", OUTPUT_KEYS),
];

const CONDITIONS_KEYS: KeyTable = &[
    (
        "",
        &[
            "system",
            "eps_grid",
            "branch_cap",
            "r_grid",
            "depth",
            "growth_eps",
            "growth_cap",
            "growth_sample",
            "invariance_tol",
            "expansion_pairs",
            "seed",
            "output",
        ],
    ),
    ("output", OUTPUT_KEYS),
];

/// Lists every unknown key at once, so a manifest can be fixed in one pass.
fn reject_unknown(value: &Value, table: KeyTable) -> Result<()> {
    let Value::Object(top) = value else {
        return Err(Error::Config("config must be a JSON object".into()));
    };
    let mut unknown = Vec::new();
    for (section, known) in table {
        let obj = if section.is_empty() {
            Some(top)
        } else {
            top.get(*section).and_then(Value::as_object)
        };
        let Some(obj) = obj else { continue };
        for key in obj.keys() {
            if !known.contains(&key.as_str()) {
                unknown.push(if section.is_empty() {
                    key.clone()
                } else {
                    format!("{section}.{key}")
                });
            }
        }
    }
    if unknown.is_empty() {
        Ok(())
    } else {
        Err(Error::Config(format!("unknown keys: {}", unknown.join(", "))))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const GAUSS: &str = r#"{
        "system": "gauss",
        "schedule": {"family": "power_law", "exponents": [0.5], "scales": [1.0]},
        "n": 1000,
        "ensemble": 4,
        "seed": 7
    }"#;

    #[test]
    fn parses_with_defaults() {
        let c = ExperimentConfig::from_json_str(GAUSS).unwrap();
        assert_eq!(c.experiment, ExperimentKind::Sbc);
        assert_eq!(c.orbit_mode(), OrbitMode::Float64);
        assert_eq!(c.tolerances.envelope_c, 3.0);
        assert_eq!(c.content_hash().len(), 64);
    }

    #[test]
    fn lists_all_unknown_keys() {
        let bad = GAUSS.replace(
            "\"seed\": 7",
            "\"seed\": 7, \"sede\": 1, \"tolerances\": {\"ratio_tol\": 0.1}",
        );
        let err = ExperimentConfig::from_json_str(&bad).unwrap_err().to_string();
        assert!(err.contains("sede") && err.contains("tolerances.ratio_tol"), "{err}");
    }

    #[test]
    fn rejects_bad_values() {
        let zero = GAUSS.replace("\"n\": 1000", "\"n\": 0");
        assert!(ExperimentConfig::from_json_str(&zero).is_err());
        let dim = GAUSS.replace("[0.5], \"scales\": [1.0]", "[0.5, 0.5], \"scales\": [1.0, 1.0]");
        assert!(ExperimentConfig::from_json_str(&dim).is_err());
        let mode = GAUSS.replace("\"n\": 1000", "\"n\": 1000, \"mode\": \"exact\"");
        assert!(matches!(
            ExperimentConfig::from_json_str(&mode),
            Err(Error::InvalidMode(_))
        ));
        let tol = GAUSS.replace("\"seed\": 7", "\"seed\": 7, \"tolerances\": {\"pass_fraction\": 0}");
        assert!(ExperimentConfig::from_json_str(&tol).is_err());
    }

    #[test]
    fn output_does_not_change_hash() {
        let a = ExperimentConfig::from_json_str(GAUSS).unwrap();
        let mut b = a.clone();
        b.output = Some(OutputSpec {
            path: "x.json".into(),
            format: ReportFormat::Json,
        });
        assert_eq!(a.content_hash(), b.content_hash());
        b.seed = 8;
        assert_ne!(a.content_hash(), b.content_hash());
    }

    #[test]
    fn conditions_defaults() {
        let c = ConditionsConfig::for_system(SystemKind::Gauss);
        assert_eq!(c.eps_grid, vec![1e-2, 1e-3, 1e-4]);
        assert!(ConditionsConfig::from_json_str(r#"{"system": "gauss", "eps": 1}"#).is_err());
    }
}
