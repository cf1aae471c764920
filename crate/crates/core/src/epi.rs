//! Prevalence and the Wells-Riley airborne transmission model.
//!
//! Every venue-hour is an independent cohort: `N` visitors arrive, an
//! expected `I = N * prevalence` of them are infectious, and the remaining
//! `S = N - I` are each infected with probability
//!
//! ```text
//! P = 1 - exp(-I q p t / Q),   Q = ach * volume
//! ```
//!
//! so the expected number of new infections in that hour is `S * P`.
//! Newly infected visitors do not seed later hours.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::SimulationInput;
use crate::stats::{classify, Severity, DEFAULT_SEVERITY_THRESHOLD};

/// Quanta emitted per infector per hour.
pub const DEFAULT_QUANTA_RATE: f64 = 20.0;
/// Breathing rate of a susceptible visitor, m³/h.
pub const DEFAULT_PULMONARY_RATE: f64 = 0.48;
/// Room air changes per hour.
pub const DEFAULT_AIR_CHANGES: f64 = 4.0;
/// Ceiling height assumed for every venue, m.
pub const DEFAULT_CEILING_HEIGHT: f64 = 3.0;
/// Visit duration, h. Visitors leave before the next hour begins.
pub const DEFAULT_EXPOSURE_HOURS: f64 = 1.0;
/// Ratio of true to documented infections.
pub const DEFAULT_UNDERREPORT_FACTOR: f64 = 15.0;

/// Model parameters. The documented prevalence has no default and must be
/// supplied by the caller.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpiParams {
    /// Quantum generation rate, quanta/h.
    pub q: f64,
    /// Pulmonary ventilation rate, m³/h.
    pub p: f64,
    /// Air changes per hour, 1/h.
    pub ach: f64,
    /// m.
    pub ceiling_height: f64,
    /// Exposure time, h.
    pub t: f64,
    pub documented_prevalence: f64,
    pub underreport_factor: f64,
}

impl EpiParams {
    /// Default physical constants with the given documented prevalence.
    pub fn new(documented_prevalence: f64) -> Result<Self> {
        let params = Self {
            q: DEFAULT_QUANTA_RATE,
            p: DEFAULT_PULMONARY_RATE,
            ach: DEFAULT_AIR_CHANGES,
            ceiling_height: DEFAULT_CEILING_HEIGHT,
            t: DEFAULT_EXPOSURE_HOURS,
            documented_prevalence,
            underreport_factor: DEFAULT_UNDERREPORT_FACTOR,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("q", self.q),
            ("p", self.p),
            ("ach", self.ach),
            ("ceiling_height", self.ceiling_height),
            ("t", self.t),
        ] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::arg(format!(
                    "{name} must be positive and finite, got {value}"
                )));
            }
        }
        if !(0.0..=1.0).contains(&self.documented_prevalence) {
            return Err(Error::arg(format!(
                "documented_prevalence must lie in [0, 1], got {}",
                self.documented_prevalence
            )));
        }
        if !(self.underreport_factor >= 1.0 && self.underreport_factor.is_finite()) {
            return Err(Error::arg(format!(
                "underreport_factor must be >= 1, got {}",
                self.underreport_factor
            )));
        }
        Ok(())
    }

    /// Room ventilation rate `Q` in m³/h for a room of `volume` m³.
    pub fn room_ventilation(&self, volume: f64) -> f64 {
        self.ach * volume
    }

    pub fn effective_prevalence(&self) -> Result<f64> {
        effective_prevalence(self.documented_prevalence, self.underreport_factor)
    }
}

/// A partial [`EpiParams`]: any field left `None` keeps the base value.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsOverride {
    pub q: Option<f64>,
    pub p: Option<f64>,
    pub ach: Option<f64>,
    pub ceiling_height: Option<f64>,
    pub t: Option<f64>,
    pub documented_prevalence: Option<f64>,
    pub underreport_factor: Option<f64>,
}

impl ParamsOverride {
    pub fn is_empty(&self) -> bool {
        *self == Self::default()
    }

    /// Fields set in `other` win over fields set in `self`.
    pub fn merged_with(&self, other: &ParamsOverride) -> ParamsOverride {
        ParamsOverride {
            q: other.q.or(self.q),
            p: other.p.or(self.p),
            ach: other.ach.or(self.ach),
            ceiling_height: other.ceiling_height.or(self.ceiling_height),
            t: other.t.or(self.t),
            documented_prevalence: other.documented_prevalence.or(self.documented_prevalence),
            underreport_factor: other.underreport_factor.or(self.underreport_factor),
        }
    }

    /// Overlays the set fields on `base` and validates the result.
    pub fn apply(&self, base: &EpiParams) -> Result<EpiParams> {
        let params = EpiParams {
            q: self.q.unwrap_or(base.q),
            p: self.p.unwrap_or(base.p),
            ach: self.ach.unwrap_or(base.ach),
            ceiling_height: self.ceiling_height.unwrap_or(base.ceiling_height),
            t: self.t.unwrap_or(base.t),
            documented_prevalence: self
                .documented_prevalence
                .unwrap_or(base.documented_prevalence),
            underreport_factor: self.underreport_factor.unwrap_or(base.underreport_factor),
        };
        params.validate()?;
        Ok(params)
    }

    /// Builds full parameters on top of the defaults. The documented
    /// prevalence must be set.
    pub fn resolve(&self) -> Result<EpiParams> {
        let prevalence = self.documented_prevalence.ok_or_else(|| {
            Error::Config("documented_prevalence is required and has no default".into())
        })?;
        self.apply(&EpiParams::new(prevalence)?)
    }
}

/// Per-venue simulation output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VenueResult {
    pub venue_id: String,
    pub hourly_infections: Vec<f64>,
    pub weekly_infections: f64,
    pub severity: Severity,
    /// Visitors over the window, after any scenario transformations.
    pub weekly_visitors: f64,
}

impl VenueResult {
    pub fn reclassify(&mut self, threshold: f64) {
        self.severity = classify(self.weekly_infections, threshold);
    }
}

/// Infected fraction of a population.
pub fn prevalence_rate(infected: f64, population: f64) -> Result<f64> {
    if !(population > 0.0 && population.is_finite()) {
        return Err(Error::arg(format!(
            "population must be positive, got {population}"
        )));
    }
    if !(infected >= 0.0) {
        return Err(Error::arg(format!(
            "infected must be non-negative, got {infected}"
        )));
    }
    if infected > population {
        return Err(Error::arg(format!(
            "infected ({infected}) exceeds population ({population})"
        )));
    }
    Ok(infected / population)
}

/// Documented prevalence scaled for under-reporting, clamped at 1.
pub fn effective_prevalence(documented: f64, underreport_factor: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&documented) {
        return Err(Error::arg(format!(
            "documented prevalence must lie in [0, 1], got {documented}"
        )));
    }
    if !(underreport_factor >= 1.0 && underreport_factor.is_finite()) {
        return Err(Error::arg(format!(
            "underreport factor must be >= 1, got {underreport_factor}"
        )));
    }
    Ok((documented * underreport_factor).min(1.0))
}

/// Probability that one susceptible occupant is infected.
///
/// Evaluated as `-expm1(-x)` so tiny exponents do not cancel to zero.
pub fn wells_riley_probability(infectors: f64, params: &EpiParams, volume: f64) -> Result<f64> {
    if !(volume > 0.0 && volume.is_finite()) {
        return Err(Error::arg(format!(
            "room volume must be positive, got {volume}"
        )));
    }
    if !(infectors >= 0.0 && infectors.is_finite()) {
        return Err(Error::arg(format!(
            "infectors must be non-negative, got {infectors}"
        )));
    }
    let exponent = infectors * params.q * params.p * params.t / params.room_ventilation(volume);
    Ok(-(-exponent).exp_m1())
}

/// Expected new infections among `visitors` sharing a room for one cohort.
pub fn expected_new_infections_hour(
    visitors: f64,
    prevalence: f64,
    params: &EpiParams,
    volume: f64,
) -> Result<f64> {
    if !(visitors >= 0.0 && visitors.is_finite()) {
        return Err(Error::arg(format!(
            "visitors must be non-negative, got {visitors}"
        )));
    }
    if !(0.0..=1.0).contains(&prevalence) {
        return Err(Error::arg(format!(
            "prevalence must lie in [0, 1], got {prevalence}"
        )));
    }
    let infectors = visitors * prevalence;
    let susceptible = visitors - infectors;
    let p = wells_riley_probability(infectors, params, volume)?;
    Ok(susceptible * p)
}

/// Runs every venue-hour of `input` and classifies venues at the default
/// threshold of one infection per week.
pub fn simulate_week(input: &SimulationInput, params: &EpiParams) -> Result<Vec<VenueResult>> {
    params.validate()?;
    let prevalence = params.effective_prevalence()?;
    input
        .iter()
        .map(|(venue, series)| {
            let volume = venue
                .volume
                .ok_or_else(|| Error::Dataset(format!("venue {} has no volume", venue.venue_id)))?;
            let hourly_infections = series
                .counts()
                .iter()
                .map(|&n| expected_new_infections_hour(n, prevalence, params, volume))
                .collect::<Result<Vec<_>>>()?;
            let weekly_infections = hourly_infections.iter().sum();
            Ok(VenueResult {
                venue_id: venue.venue_id.clone(),
                hourly_infections,
                weekly_infections,
                severity: classify(weekly_infections, DEFAULT_SEVERITY_THRESHOLD),
                weekly_visitors: series.total(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{compute_volumes, join, Venue, VenueTable, VisitSeries, VisitTable};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn params() -> EpiParams {
        EpiParams::new(0.001).unwrap()
    }

    #[test]
    fn defaults() {
        let p = params();
        assert_eq!(
            (p.q, p.p, p.ach, p.ceiling_height, p.t),
            (20.0, 0.48, 4.0, 3.0, 1.0)
        );
        assert_eq!(p.underreport_factor, 15.0);
    }

    #[test]
    fn validation() {
        assert!(EpiParams::new(1.5).is_err());
        assert!(EpiParams::new(-0.1).is_err());
        let mut p = params();
        p.ach = 0.0;
        assert!(p.validate().is_err());
        let mut p = params();
        p.underreport_factor = 0.5;
        assert!(p.validate().is_err());
    }

    #[test]
    fn overrides() {
        let base = params();
        assert_eq!(ParamsOverride::default().apply(&base).unwrap(), base);
        let o = ParamsOverride {
            ach: Some(6.0),
            ..Default::default()
        };
        let merged = o.apply(&base).unwrap();
        assert_eq!(merged.ach, 6.0);
        assert_eq!(merged.q, base.q);
        let bad = ParamsOverride {
            q: Some(-1.0),
            ..Default::default()
        };
        assert!(bad.apply(&base).is_err());
        assert!(ParamsOverride::default().resolve().is_err());
        let later = ParamsOverride {
            ach: Some(2.0),
            documented_prevalence: Some(0.01),
            ..Default::default()
        };
        let both = o.merged_with(&later);
        assert_eq!(both.ach, Some(2.0));
        assert_eq!(both.resolve().unwrap().documented_prevalence, 0.01);
    }

    #[test]
    fn prevalence_ratio() {
        assert_eq!(prevalence_rate(0.0, 1000.0).unwrap(), 0.0);
        assert_eq!(prevalence_rate(1000.0, 1000.0).unwrap(), 1.0);
        assert_relative_eq!(
            prevalence_rate(37.0, 10000.0).unwrap(),
            0.0037,
            max_relative = 1e-15
        );
        assert!(prevalence_rate(1.0, 0.0).is_err());
        assert!(prevalence_rate(11.0, 10.0).is_err());
    }

    #[test]
    fn underreporting() {
        assert_relative_eq!(
            effective_prevalence(0.001, 15.0).unwrap(),
            0.015,
            max_relative = 1e-15
        );
        assert_eq!(effective_prevalence(0.2, 15.0).unwrap(), 1.0);
        assert_eq!(effective_prevalence(0.0, 15.0).unwrap(), 0.0);
        assert!(effective_prevalence(0.01, 0.9).is_err());
    }

    // Reference values from a 40-digit evaluation of 1 - exp(-x).
    #[test]
    fn wells_riley_reference_values() {
        let p = params();
        assert_eq!(wells_riley_probability(0.0, &p, 300.0).unwrap(), 0.0);
        assert_relative_eq!(
            wells_riley_probability(1.0, &p, 300.0).unwrap(),
            0.007_968_085_162_939_369_66,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            wells_riley_probability(1.0, &p, 30.0).unwrap(),
            0.076_883_653_613_364_217_1,
            max_relative = 1e-12
        );
        assert!(wells_riley_probability(1.0, &p, 0.0).is_err());
        assert!(wells_riley_probability(1.0, &p, -3.0).is_err());
    }

    #[test]
    fn three_step_cohort() {
        let c = expected_new_infections_hour(50.0, 0.015, &params(), 300.0).unwrap();
        // I = 0.75, S = 49.25, P = 1 - e^-0.006
        assert_relative_eq!(c, 0.294_615_270_343_688_211, max_relative = 1e-12);
        assert_eq!(
            expected_new_infections_hour(0.0, 0.015, &params(), 300.0).unwrap(),
            0.0
        );
        assert_eq!(
            expected_new_infections_hour(50.0, 0.0, &params(), 300.0).unwrap(),
            0.0
        );
    }

    #[test]
    fn small_exponent_is_not_cancelled() {
        // Exponent exactly 1e-12 with the default constants: I q p t = 9.6e-12, Q = 9.6.
        let p = params();
        let volume = 2.4;
        let prob = wells_riley_probability(1e-12, &p, volume).unwrap();
        // 40-digit value of 1 - exp(-x) for the double nearest 1e-12.
        let reference = 9.999_999_999_995e-13;
        assert!(prob > 0.0);
        assert!((prob - reference).abs() <= 0.5 * f64::EPSILON * reference);
    }

    fn one_venue(counts: Vec<f64>) -> SimulationInput {
        let venues = VenueTable::from_venues([Venue {
            venue_id: "v1".into(),
            name: "One".into(),
            category: "restaurant".into(),
            area: 100.0,
            volume: None,
        }])
        .unwrap();
        let venues = compute_volumes(&venues, 3.0).unwrap();
        let hours = counts.len();
        let mut visits = VisitTable::new(hours);
        visits
            .insert(VisitSeries::new("v1", counts).unwrap())
            .unwrap();
        join(&venues, &visits, hours).unwrap()
    }

    #[test]
    fn week_of_zeros() {
        let r = simulate_week(&one_venue(vec![0.0; 168]), &params()).unwrap();
        assert_eq!(r[0].weekly_infections, 0.0);
        assert_eq!(r[0].severity, Severity::Mild);
    }

    #[test]
    fn week_with_single_busy_hour() {
        let mut counts = vec![0.0; 168];
        counts[19] = 50.0;
        let r = simulate_week(&one_venue(counts), &params()).unwrap();
        assert_relative_eq!(
            r[0].weekly_infections,
            0.294_615_270_343_688_211,
            max_relative = 1e-12
        );
        assert_eq!(r[0].hourly_infections[19], r[0].weekly_infections);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(256))]

        #[test]
        fn cohort_bounds(n in 0.0f64..5000.0, prev in 0.0f64..=1.0, vol in 1.0f64..1e5) {
            let c = expected_new_infections_hour(n, prev, &params(), vol).unwrap();
            let s = n - n * prev;
            prop_assert!(c >= 0.0);
            prop_assert!(c <= s + 1e-12 * n);
            let prob = wells_riley_probability(n * prev, &params(), vol).unwrap();
            prop_assert!((0.0..=1.0).contains(&prob));
            // Below ~36 the complement e^-x is still representable next to 1.
            let x = n * prev * 9.6 / (4.0 * vol);
            if x < 36.0 {
                prop_assert!(prob < 1.0);
            }
        }

        #[test]
        fn hour_order_does_not_matter(
            counts in proptest::collection::vec(0.0f64..200.0, 168),
            rot in 0usize..168,
        ) {
            let base = simulate_week(&one_venue(counts.clone()), &params()).unwrap();
            let mut rotated = counts.clone();
            rotated.rotate_left(rot);
            let moved = simulate_week(&one_venue(rotated), &params()).unwrap();
            let mut expected = base[0].hourly_infections.clone();
            expected.rotate_left(rot);
            prop_assert_eq!(&moved[0].hourly_infections, &expected);
            let tol = 1e-12 * base[0].weekly_infections.max(f64::MIN_POSITIVE);
            prop_assert!((moved[0].weekly_infections - base[0].weekly_infections).abs() <= tol);
        }
    }
}
