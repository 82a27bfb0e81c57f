use serde::Serialize;

use netmeasure_core::info::DecompositionMeasures;
use netmeasure_core::robustness::RobustnessReport;

use crate::error::{CliError, CliResult};

pub const SCHEMA_VERSION: &str = "1.0";
pub const SCHEMA: &str = include_str!("../report.schema.json");

#[derive(Debug, Serialize)]
pub struct AnalysisReport {
    pub schema_version: &'static str,
    pub input: InputBlock,
    pub equilibrium: EquilibriumBlock,
    pub lyapunov: LyapunovBlock,
    pub measures: MeasuresBlock,
    pub robustness: RobustnessReport,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub validation: Vec<ValidationBlock>,
    pub provenance: Provenance,
}

#[derive(Debug, Serialize)]
pub struct InputBlock {
    pub source: String,
    pub fingerprint: String,
    pub species: Vec<String>,
    pub noise: String,
}

#[derive(Debug, Serialize)]
pub struct EquilibriumBlock {
    pub x0: Vec<f64>,
    pub spectral_abscissa: f64,
    pub residual: f64,
    pub iterations: usize,
}

#[derive(Debug, Serialize)]
pub struct LyapunovBlock {
    /// Row-major stationary shape `S`.
    pub s: Vec<Vec<f64>>,
    pub residual: f64,
    pub tolerance: f64,
}

/// Gaussian-limit measures. They do not depend on `eps`.
#[derive(Debug, Serialize)]
pub struct MeasuresBlock {
    pub output_names: Vec<Vec<String>>,
    #[serde(flatten)]
    pub table: DecompositionMeasures,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub quantity: String,
    pub reference: f64,
    pub empirical: f64,
    pub delta: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    pub fn absolute(quantity: impl Into<String>, reference: f64, empirical: f64, tolerance: f64) -> Self {
        let delta = (empirical - reference).abs();
        Self {
            quantity: quantity.into(),
            reference,
            empirical,
            delta,
            tolerance,
            pass: delta <= tolerance,
        }
    }

    /// Tolerance `rel * |reference|`, never below `floor`.
    pub fn relative(quantity: impl Into<String>, reference: f64, empirical: f64, rel: f64, floor: f64) -> Self {
        Self::absolute(quantity, reference, empirical, (rel * reference.abs()).max(floor))
    }
}

#[derive(Debug, Serialize)]
pub struct ValidationBlock {
    pub eps: f64,
    pub samples: usize,
    pub discarded_chains: usize,
    pub checks: Vec<Check>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub empirical_measures: Option<DecompositionMeasures>,
    pub all_pass: bool,
}

#[derive(Debug, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    pub seed: u64,
    pub eps_ladder: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generated_at_unix: Option<u64>,
}

impl Provenance {
    pub fn new(seed: u64, eps_ladder: Vec<f64>, timestamp: bool) -> Self {
        let generated_at_unix = timestamp.then(|| {
            std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map_or(0, |d| d.as_secs())
        });
        Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            seed,
            eps_ladder,
            generated_at_unix,
        }
    }
}

/// Pretty JSON, refusing non-finite numbers (serde_json would print `null`).
pub fn to_json<T: Serialize>(value: &T) -> CliResult<String> {
    let v = serde_json::to_value(value)?;
    if let Some(path) = first_null(&v, String::new()) {
        return Err(CliError::new(
            crate::error::Status::Unstable,
            format!("non-finite value at {path}"),
        ));
    }
    let mut s = serde_json::to_string_pretty(&v)?;
    s.push('\n');
    Ok(s)
}

fn first_null(v: &serde_json::Value, path: String) -> Option<String> {
    use serde_json::Value;
    match v {
        Value::Null => Some(if path.is_empty() { "/".into() } else { path }),
        Value::Array(a) => a.iter().enumerate().find_map(|(i, x)| first_null(x, format!("{path}/{i}"))),
        Value::Object(o) => o.iter().find_map(|(k, x)| first_null(x, format!("{path}/{k}"))),
        _ => None,
    }
}
