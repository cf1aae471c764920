//! Shared fixtures for the criterion benches.

use roomrisk_core::ingest::{compute_volumes, join};
use roomrisk_core::synthetic::{generate, SyntheticConfig, TrafficProfile};
use roomrisk_core::{EpiParams, SimulationInput};

pub const FIXTURE_SEED: u64 = 2020;

/// A joined, raw-count synthetic city of `n_venues` venues.
pub fn synthetic_input(n_venues: usize, profile: TrafficProfile) -> SimulationInput {
    let data = generate(n_venues, FIXTURE_SEED, &SyntheticConfig::default()).expect("generator");
    let venues = compute_volumes(&data.venues, 3.0).expect("volumes");
    let visits = data.visits(profile);
    join(&venues, visits, visits.window_hours()).expect("join")
}

pub fn params() -> EpiParams {
    EpiParams::new(0.001).expect("params")
}
