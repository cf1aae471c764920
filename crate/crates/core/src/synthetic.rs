//! Seeded synthetic venues and hourly visits in the ingest formats.
//!
//! Every venue gets a floor area drawn log-uniformly from
//! [`SyntheticConfig::area_range_m2`] and a popularity (raw panel visits per
//! hour at the daily peak, for a venue of `reference_area_m2`) drawn
//! log-normally. The expected raw count for hour `h` is
//!
//! ```text
//! popularity * (area / reference_area)^area_elasticity
//!            * diurnal[h % 24] * (weekend_multiplier on days 5-6)
//!            * profile multiplier
//! ```
//!
//! and the emitted count is a Poisson draw. Both traffic profiles are
//! sampled from the same uniform per venue-hour (inverse CDF), so a higher
//! profile multiplier never lowers a count.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{Venue, VenueTable, VisitSeries, VisitTable, WEEK_HOURS};

pub const RESTAURANT: &str = "Restaurants and Other Eating Places";
pub const DRINKING_PLACE: &str = "Drinking Places (Alcoholic Beverages)";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrafficProfile {
    Lockdown,
    PrePandemic,
}

impl FromStr for TrafficProfile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "lockdown" => Ok(TrafficProfile::Lockdown),
            "pre_pandemic" => Ok(TrafficProfile::PrePandemic),
            other => Err(Error::arg(format!(
                "unknown traffic profile {other:?} (expected lockdown or pre_pandemic)"
            ))),
        }
    }
}

impl fmt::Display for TrafficProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TrafficProfile::Lockdown => "lockdown",
            TrafficProfile::PrePandemic => "pre_pandemic",
        })
    }
}

/// Generator settings. The defaults produce a handful of severe venues
/// under lockdown traffic at 0.1% documented prevalence and roughly an
/// order of magnitude more under pre-pandemic traffic.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub area_range_m2: (f64, f64),
    pub popularity_median: f64,
    pub popularity_log_sd: f64,
    pub reference_area_m2: f64,
    pub area_elasticity: f64,
    /// Relative traffic by hour of day, hour 0 = midnight.
    pub diurnal: [f64; 24],
    /// Applied to days 5 and 6 of the window (the window starts on a Monday).
    pub weekend_multiplier: f64,
    pub lockdown_multiplier: f64,
    pub pre_pandemic_multiplier: f64,
    pub drinking_place_share: f64,
    pub window_hours: usize,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            area_range_m2: (50.0, 2000.0),
            popularity_median: 0.1,
            popularity_log_sd: 1.0,
            reference_area_m2: 200.0,
            area_elasticity: 0.5,
            diurnal: [
                0.05, 0.03, 0.02, 0.02, 0.02, 0.05, 0.15, 0.30, 0.40, 0.35, 0.40, 0.75, //
                1.00, 0.80, 0.50, 0.45, 0.60, 0.85, 1.00, 0.90, 0.70, 0.50, 0.30, 0.15,
            ],
            weekend_multiplier: 1.25,
            lockdown_multiplier: 1.0,
            pre_pandemic_multiplier: 4.0,
            drinking_place_share: 0.25,
            window_hours: WEEK_HOURS,
        }
    }
}

impl SyntheticConfig {
    pub fn multiplier(&self, profile: TrafficProfile) -> f64 {
        match profile {
            TrafficProfile::Lockdown => self.lockdown_multiplier,
            TrafficProfile::PrePandemic => self.pre_pandemic_multiplier,
        }
    }

    fn validate(&self) -> Result<()> {
        let (lo, hi) = self.area_range_m2;
        if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
            return Err(Error::arg(format!("invalid area range [{lo}, {hi}]")));
        }
        let positive = [
            ("popularity_median", self.popularity_median),
            ("reference_area_m2", self.reference_area_m2),
            ("weekend_multiplier", self.weekend_multiplier),
            ("lockdown_multiplier", self.lockdown_multiplier),
            ("pre_pandemic_multiplier", self.pre_pandemic_multiplier),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::arg(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.popularity_log_sd >= 0.0) {
            return Err(Error::arg("popularity_log_sd must be non-negative"));
        }
        if self.diurnal.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
            return Err(Error::arg("diurnal weights must be non-negative"));
        }
        if !(0.0..=1.0).contains(&self.drinking_place_share) {
            return Err(Error::arg("drinking_place_share must lie in [0, 1]"));
        }
        if self.window_hours == 0 {
            return Err(Error::arg("window_hours must be positive"));
        }
        Ok(())
    }

    fn hour_weight(&self, hour: usize) -> f64 {
        let day = (hour / 24) % 7;
        let weekend = if day >= 5 {
            self.weekend_multiplier
        } else {
            1.0
        };
        self.diurnal[hour % 24] * weekend
    }
}

/// Venues plus raw visit counts under both traffic profiles.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticDataset {
    pub venues: VenueTable,
    pub lockdown: VisitTable,
    pub pre_pandemic: VisitTable,
}

impl SyntheticDataset {
    pub fn visits(&self, profile: TrafficProfile) -> &VisitTable {
        match profile {
            TrafficProfile::Lockdown => &self.lockdown,
            TrafficProfile::PrePandemic => &self.pre_pandemic,
        }
    }
}

/// Smallest k with P(X <= k) >= u for X ~ Poisson(lambda).
fn poisson_quantile(lambda: f64, u: f64) -> u64 {
    if lambda <= 0.0 {
        return 0;
    }
    let mut k = 0u64;
    let mut pmf = (-lambda).exp();
    let mut cdf = pmf;
    while cdf < u {
        k += 1;
        pmf *= lambda / k as f64;
        let next = cdf + pmf;
        if next == cdf && k as f64 > lambda {
            break;
        }
        cdf = next;
    }
    k
}

/// Generates `n_venues` venues with a week of visits under both profiles.
/// Identical arguments give identical output.
pub fn generate(n_venues: usize, seed: u64, config: &SyntheticConfig) -> Result<SyntheticDataset> {
    if n_venues == 0 {
        return Err(Error::arg("n_venues must be positive"));
    }
    config.validate()?;

    let mut venue_rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hour_rng = ChaCha8Rng::seed_from_u64(seed);
    hour_rng.set_stream(1);

    let popularity = LogNormal::new(config.popularity_median.ln(), config.popularity_log_sd)
        .map_err(|e| Error::arg(e.to_string()))?;
    let (ln_lo, ln_hi) = (config.area_range_m2.0.ln(), config.area_range_m2.1.ln());
    let width = (n_venues.max(1000) as f64).log10().ceil() as usize;

    let mut venues = VenueTable::new();
    let mut lockdown = VisitTable::new(config.window_hours);
    let mut pre_pandemic = VisitTable::new(config.window_hours);
    for i in 0..n_venues {
        let area = venue_rng.gen_range(ln_lo..=ln_hi).exp();
        let area =
            ((area * 100.0).round() / 100.0).clamp(config.area_range_m2.0, config.area_range_m2.1);
        let drinking = venue_rng.gen_bool(config.drinking_place_share);
        let pop = popularity.sample(&mut venue_rng);
        let venue_id = format!("v{:0width$}", i + 1);
        let (category, kind) = if drinking {
            (DRINKING_PLACE, "Bar")
        } else {
            (RESTAURANT, "Restaurant")
        };
        venues.insert(Venue {
            venue_id: venue_id.clone(),
            name: format!("{kind} {}", i + 1),
            category: category.to_owned(),
            area,
            volume: None,
        })?;

        let base_rate = pop * (area / config.reference_area_m2).powf(config.area_elasticity);
        let mut low = Vec::with_capacity(config.window_hours);
        let mut high = Vec::with_capacity(config.window_hours);
        for h in 0..config.window_hours {
            let u: f64 = hour_rng.gen();
            let lambda = base_rate * config.hour_weight(h);
            low.push(poisson_quantile(lambda * config.lockdown_multiplier, u) as f64);
            high.push(poisson_quantile(lambda * config.pre_pandemic_multiplier, u) as f64);
        }
        lockdown.insert(VisitSeries::new(venue_id.clone(), low)?)?;
        pre_pandemic.insert(VisitSeries::new(venue_id, high)?)?;
    }
    Ok(SyntheticDataset {
        venues,
        lockdown,
        pre_pandemic,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn poisson_quantile_matches_cdf() {
        assert_eq!(poisson_quantile(0.0, 0.99), 0);
        // P(X = 0) = e^-1 ≈ 0.3679 for lambda = 1
        assert_eq!(poisson_quantile(1.0, 0.36), 0);
        assert_eq!(poisson_quantile(1.0, 0.37), 1);
        // P(X <= 1) ≈ 0.7358
        assert_eq!(poisson_quantile(1.0, 0.73), 1);
        assert_eq!(poisson_quantile(1.0, 0.74), 2);
        assert!(poisson_quantile(300.0, 0.999_999) > 300);
    }

    #[test]
    fn poisson_quantile_monotone_in_rate() {
        for u in [0.01, 0.3, 0.5, 0.77, 0.999] {
            let mut prev = 0;
            for i in 0..200 {
                let k = poisson_quantile(i as f64 * 0.25, u);
                assert!(k >= prev);
                prev = k;
            }
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let cfg = SyntheticConfig::default();
        let a = generate(50, 7, &cfg).unwrap();
        let b = generate(50, 7, &cfg).unwrap();
        assert_eq!(a, b);
        let c = generate(50, 8, &cfg).unwrap();
        assert_ne!(a.venues, c.venues);
    }

    #[test]
    fn shapes_and_ranges() {
        let cfg = SyntheticConfig::default();
        let d = generate(1034, 2020, &cfg).unwrap();
        assert_eq!(d.venues.len(), 1034);
        assert_eq!(d.lockdown.len(), 1034);
        assert!(d.venues.iter().all(|v| (50.0..=2000.0).contains(&v.area)));
        assert!(d.venues.iter().any(|v| v.category == DRINKING_PLACE));
        assert_eq!(d.venues.iter().next().unwrap().venue_id, "v0001");
    }

    #[test]
    fn pre_pandemic_busier_every_hour() {
        let cfg = SyntheticConfig::default();
        let d = generate(1034, 2020, &cfg).unwrap();
        for h in 0..cfg.window_hours {
            let mean =
                |t: &VisitTable| t.iter().map(|s| s.counts()[h]).sum::<f64>() / t.len() as f64;
            let (lo, hi) = (mean(&d.lockdown), mean(&d.pre_pandemic));
            assert!(hi > lo, "hour {h}: {hi} <= {lo}");
        }
        for (l, p) in d.lockdown.iter().zip(d.pre_pandemic.iter()) {
            assert!(l.counts().iter().zip(p.counts()).all(|(a, b)| a <= b));
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        let cfg = SyntheticConfig::default();
        assert!(generate(0, 1, &cfg).is_err());
        let bad = SyntheticConfig {
            area_range_m2: (100.0, 10.0),
            ..SyntheticConfig::default()
        };
        assert!(generate(10, 1, &bad).is_err());
        assert_eq!(
            "pre-pandemic".parse::<TrafficProfile>().unwrap(),
            TrafficProfile::PrePandemic
        );
        assert!("holiday".parse::<TrafficProfile>().is_err());
    }
}
