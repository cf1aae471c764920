//! Key-value (TOML) params and scenario configuration files.
//!
//! Params file, all keys optional, units as in [`EpiParams`]:
//!
//! ```toml
//! q = 20.0                      # quanta/h
//! p = 0.48                      # m³/h
//! ach = 4.0                     # 1/h
//! ceiling_height = 3.0          # m
//! t = 1.0                       # h
//! documented_prevalence = 0.001
//! underreport_factor = 15.0
//! ```
//!
//! Scenario file:
//!
//! ```toml
//! name = "pre-pandemic"
//! visits = "visits_pre_pandemic.csv"  # omit to use the shared baseline visits
//! sampling_factor = 10                # default 10
//! spacing = "6ft"                     # optional; unit suffix m, cm or ft required
//! threshold = 1.0                     # default 1.0
//!
//! [params]                            # optional overrides, same keys as the params file
//! ach = 6.0
//! ```
//!
//! Relative `visits` paths resolve against the scenario file's directory.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::epi::{EpiParams, ParamsOverride};
use crate::error::{Error, Result};
use crate::scenario::{Distancing, ScenarioConfig, VisitSource, DEFAULT_SAMPLING_FACTOR};
use crate::stats::DEFAULT_SEVERITY_THRESHOLD;

const FOOT_IN_CENTIMETERS: f64 = 30.48;

/// Parses a length with a mandatory unit suffix (`6ft`, `1.8288m`, `180 cm`)
/// into meters.
pub fn parse_length(text: &str) -> Result<f64> {
    let text = text.trim();
    let split = text
        .find(|c: char| c.is_ascii_alphabetic())
        .ok_or_else(|| {
            Error::Config(format!("length {text:?} needs a unit suffix (m, cm or ft)"))
        })?;
    let (number, unit) = text.split_at(split);
    let value: f64 = number
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("length {text:?} has no numeric value")))?;
    let meters = match unit.trim().to_ascii_lowercase().as_str() {
        "m" => value,
        "cm" => value / 100.0,
        // Through centimeters so that 6 ft lands exactly on 1.8288 m.
        "ft" | "feet" => value * FOOT_IN_CENTIMETERS / 100.0,
        other => {
            return Err(Error::Config(format!(
                "unknown length unit {other:?} in {text:?}"
            )))
        }
    };
    if !(meters > 0.0 && meters.is_finite()) {
        return Err(Error::Config(format!("length {text:?} must be positive")));
    }
    Ok(meters)
}

/// Parses a params file into a partial parameter set.
pub fn parse_params(text: &str) -> Result<ParamsOverride> {
    toml::from_str(text).map_err(|e| Error::Config(format!("params file: {}", e.message())))
}

pub fn load_params(path: &Path) -> Result<ParamsOverride> {
    parse_params(&std::fs::read_to_string(path)?)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    name: String,
    visits: Option<PathBuf>,
    sampling_factor: Option<f64>,
    spacing: Option<String>,
    threshold: Option<f64>,
    #[serde(default)]
    params: ParamsOverride,
}

/// Parses a scenario file; relative visit paths are joined onto `base_dir`.
pub fn parse_scenario(text: &str, base_dir: &Path) -> Result<ScenarioConfig> {
    let raw: RawScenario = toml::from_str(text)
        .map_err(|e| Error::Config(format!("scenario file: {}", e.message())))?;
    let visit_source = match raw.visits {
        None => VisitSource::Baseline,
        Some(p) if p.is_absolute() => VisitSource::AlternateFile(p),
        Some(p) => VisitSource::AlternateFile(base_dir.join(p)),
    };
    let distancing = raw
        .spacing
        .as_deref()
        .map(parse_length)
        .transpose()?
        .map(|spacing| Distancing { spacing });
    let config = ScenarioConfig {
        name: raw.name,
        visit_source,
        sampling_factor: raw.sampling_factor.unwrap_or(DEFAULT_SAMPLING_FACTOR),
        distancing,
        params_override: raw.params,
        severity_threshold: raw.threshold.unwrap_or(DEFAULT_SEVERITY_THRESHOLD),
    };
    config
        .validate()
        .map_err(|e| Error::Config(e.to_string()))?;
    // Catch out-of-range overrides before any data is read.
    let probe = EpiParams::new(0.0)?;
    config
        .params_override
        .apply(&probe)
        .map_err(|e| Error::Config(format!("scenario {:?} params: {e}", config.name)))?;
    Ok(config)
}

pub fn load_scenario(path: &Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path)?;
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    parse_scenario(&text, dir)
}
