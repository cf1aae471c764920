//! Counterfactual policy scenarios.
//!
//! A scenario turns a base [`SimulationInput`] into a [`ScenarioResult`]
//! through a fixed pipeline:
//!
//! 1. select the visit source (baseline, or an alternate visit file joined
//!    against the same venues),
//! 2. scale counts so the total sampling correction equals `sampling_factor`,
//! 3. if distancing is set, cap every venue-hour at the distanced occupancy,
//! 4. overlay the parameter overrides and recompute volumes from the
//!    resulting ceiling height,
//! 5. simulate the week,
//! 6. classify venues against the scenario threshold.

use std::f64::consts::PI;
use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::epi::{simulate_week, EpiParams, ParamsOverride, VenueResult};
use crate::error::{Error, Result};
use crate::ingest::{compute_volumes, join, parse_visits, SimulationInput, VisitSeries};
use crate::stats::{Severity, DEFAULT_SEVERITY_THRESHOLD};

/// Panel-to-population visit multiplier.
pub const DEFAULT_SAMPLING_FACTOR: f64 = 10.0;
/// Six feet, in meters.
pub const SIX_FEET: f64 = 1.8288;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VisitSource {
    Baseline,
    AlternateFile(PathBuf),
}

/// Physical distancing: every occupant claims a disc of radius `spacing` (m).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Distancing {
    pub spacing: f64,
}

impl Default for Distancing {
    fn default() -> Self {
        Self { spacing: SIX_FEET }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub name: String,
    pub visit_source: VisitSource,
    pub sampling_factor: f64,
    pub distancing: Option<Distancing>,
    pub params_override: ParamsOverride,
    pub severity_threshold: f64,
}

impl ScenarioConfig {
    /// Baseline visits, default sampling factor, no distancing, no overrides.
    pub fn baseline(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            visit_source: VisitSource::Baseline,
            sampling_factor: DEFAULT_SAMPLING_FACTOR,
            distancing: None,
            params_override: ParamsOverride::default(),
            severity_threshold: DEFAULT_SEVERITY_THRESHOLD,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sampling_factor > 0.0 && self.sampling_factor.is_finite()) {
            return Err(Error::arg(format!(
                "scenario {:?}: sampling_factor must be positive, got {}",
                self.name, self.sampling_factor
            )));
        }
        if let Some(d) = self.distancing {
            if !(d.spacing > 0.0 && d.spacing.is_finite()) {
                return Err(Error::arg(format!(
                    "scenario {:?}: spacing must be positive, got {}",
                    self.name, d.spacing
                )));
            }
        }
        if !self.severity_threshold.is_finite() {
            return Err(Error::arg(format!(
                "scenario {:?}: threshold must be finite",
                self.name
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioResult {
    pub config: ScenarioConfig,
    /// Parameters after overrides.
    pub params: EpiParams,
    pub results: Vec<VenueResult>,
    pub severe_count: usize,
    pub mild_count: usize,
}

impl ScenarioResult {
    pub fn weekly_infections(&self) -> Vec<f64> {
        self.results.iter().map(|r| r.weekly_infections).collect()
    }

    pub fn total_infections(&self) -> f64 {
        self.results.iter().map(|r| r.weekly_infections).sum()
    }
}

/// Number of people a floor of `area` m² admits when each needs a disc of
/// radius `spacing` m to themselves: `floor(area / (π spacing²))`.
///
/// A ratio within a few ulps of an integer counts as that integer, so a
/// circular room of radius `spacing` admits exactly one person.
pub fn max_distanced_occupancy(area: f64, spacing: f64) -> Result<u64> {
    if !(area > 0.0 && area.is_finite()) {
        return Err(Error::arg(format!("area must be positive, got {area}")));
    }
    if !(spacing > 0.0 && spacing.is_finite()) {
        return Err(Error::arg(format!(
            "spacing must be positive, got {spacing}"
        )));
    }
    let ratio = area / (PI * spacing * spacing);
    let nearest = ratio.round();
    let people = if (ratio - nearest).abs() <= 4.0 * f64::EPSILON * ratio {
        nearest
    } else {
        ratio.floor()
    };
    Ok(people as u64)
}

/// Clamps every hour at `cap` visitors. Turned-away visitors are dropped.
pub fn apply_occupancy_cap(visits: &VisitSeries, cap: u64) -> VisitSeries {
    let cap = cap as f64;
    visits.map_counts(|c| c.min(cap))
}

/// The visit data and parameters a scenario simulates, after steps 1-4.
pub fn prepare_scenario(
    base: &SimulationInput,
    config: &ScenarioConfig,
    params: &EpiParams,
) -> Result<(SimulationInput, EpiParams)> {
    config.validate()?;

    let selected = match &config.visit_source {
        VisitSource::Baseline => base.clone(),
        VisitSource::AlternateFile(path) => {
            let file = File::open(path)?;
            let visits = parse_visits(BufReader::new(file), base.window_hours())?;
            join(base.venues(), &visits, base.window_hours()).map_err(|e| match e {
                Error::Dataset(msg) => Error::Dataset(format!("{}: {msg}", path.display())),
                other => other,
            })?
        }
    };

    let scale = config.sampling_factor / selected.sampling_factor_applied();
    let mut input = if scale == 1.0 {
        selected
    } else {
        selected
            .map_series(|_, s| s.map_counts(|c| c * scale))
            .with_sampling_factor(config.sampling_factor)
    };

    if let Some(distancing) = config.distancing {
        let caps = input
            .venues()
            .iter()
            .map(|v| max_distanced_occupancy(v.area, distancing.spacing))
            .collect::<Result<Vec<_>>>()?;
        let mut caps = caps.into_iter();
        input = input.map_series(|_, s| apply_occupancy_cap(s, caps.next().unwrap_or(0)));
    }

    let params = config.params_override.apply(params)?;
    let venues = compute_volumes(input.venues(), params.ceiling_height)?;
    if &venues != input.venues() {
        input = input.with_venues(venues)?;
    }
    Ok((input, params))
}

/// Runs the full scenario pipeline.
pub fn run_scenario(
    base: &SimulationInput,
    config: &ScenarioConfig,
    params: &EpiParams,
) -> Result<ScenarioResult> {
    let (input, params) = prepare_scenario(base, config, params)?;
    let mut results = simulate_week(&input, &params)?;
    for r in &mut results {
        r.reclassify(config.severity_threshold);
    }
    let severe_count = results
        .iter()
        .filter(|r| r.severity == Severity::Severe)
        .count();
    let mild_count = results.len() - severe_count;
    Ok(ScenarioResult {
        config: config.clone(),
        params,
        results,
        severe_count,
        mild_count,
    })
}
