//! Venue-level airborne infection simulation.
//!
//! The crate ingests venue metadata and hourly visit counts, evaluates the
//! Wells-Riley equation for every venue-hour, applies counterfactual policy
//! scenarios (alternate traffic, physical-distancing occupancy caps) and
//! compares the resulting per-venue distributions.
//!
//! ```
//! use roomrisk_core::epi::{expected_new_infections_hour, EpiParams};
//!
//! let params = EpiParams::new(0.001).unwrap();
//! // 50 visitors, 1.5% effective prevalence, 300 m³ room.
//! let c = expected_new_infections_hour(50.0, 0.015, &params, 300.0).unwrap();
//! assert!((c - 0.294615270343688).abs() < 1e-12);
//! ```

pub mod config;
pub mod epi;
pub mod error;
pub mod ingest;
pub mod scenario;
pub mod stats;
pub mod synthetic;

pub use epi::{simulate_week, EpiParams, VenueResult};
pub use error::{Error, Result};
pub use ingest::{AreaUnit, SimulationInput, Venue, VenueTable, VisitSeries, VisitTable};
pub use scenario::{run_scenario, Distancing, ScenarioConfig, ScenarioResult, VisitSource};
pub use stats::{ComparisonResult, Histogram, Scale, Severity};
