use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use roomrisk_core::epi::{wells_riley_probability, EpiParams};
use roomrisk_core::ingest::{
    apply_sampling_correction, compute_volumes, join, parse_venues, parse_visits, write_venues,
    write_visits, AreaUnit, Venue, VenueTable, VisitSeries, VisitTable,
};
use roomrisk_core::simulate_week;

fn venue_table(areas: &[f64]) -> VenueTable {
    VenueTable::from_venues(areas.iter().enumerate().map(|(i, &area)| Venue {
        venue_id: format!("v{i}"),
        name: format!("Venue, number {i}"),
        category: "restaurant".into(),
        area,
        volume: None,
    }))
    .unwrap()
}

fn visit_table(rows: &[Vec<f64>]) -> VisitTable {
    let hours = rows.first().map_or(4, Vec::len);
    let mut t = VisitTable::new(hours);
    for (i, counts) in rows.iter().enumerate() {
        t.insert(VisitSeries::new(format!("v{i}"), counts.clone()).unwrap())
            .unwrap();
    }
    t
}

#[test]
fn wells_riley_strictly_monotone() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut checked = 0;
    for _ in 0..2000 {
        let mut params = EpiParams::new(0.0).unwrap();
        params.q = rng.gen_range(1.0..100.0);
        params.p = rng.gen_range(0.1..1.5);
        params.t = rng.gen_range(0.1..4.0);
        params.ach = rng.gen_range(0.5..12.0);
        let infectors = rng.gen_range(0.01..5.0);
        let volume = rng.gen_range(30.0..6000.0);
        let bump = rng.gen_range(1.01..2.0);

        let base = wells_riley_probability(infectors, &params, volume).unwrap();
        let more = |f: &dyn Fn(&mut EpiParams)| {
            let mut p = params;
            f(&mut p);
            wells_riley_probability(infectors, &p, volume).unwrap()
        };
        assert!(wells_riley_probability(infectors * bump, &params, volume).unwrap() > base);
        assert!(more(&|p| p.q *= bump) > base);
        assert!(more(&|p| p.p *= bump) > base);
        assert!(more(&|p| p.t *= bump) > base);
        assert!(wells_riley_probability(infectors, &params, volume * bump).unwrap() < base);
        assert!(more(&|p| p.ach *= bump) < base);
        checked += 1;
    }
    assert_eq!(checked, 2000);
}

#[test]
fn doubling_traffic_raises_every_busy_venue() {
    let rows: Vec<Vec<f64>> = (0..6)
        .map(|i| {
            (0..24)
                .map(|h| ((h * 7 + i * 3) % 11) as f64 * (i % 3) as f64)
                .collect()
        })
        .collect();
    let venues =
        compute_volumes(&venue_table(&[40.0, 90.0, 250.0, 600.0, 1200.0, 75.0]), 3.0).unwrap();
    let params = EpiParams::new(0.003).unwrap();
    let once = simulate_week(&join(&venues, &visit_table(&rows), 24).unwrap(), &params).unwrap();
    let doubled = apply_sampling_correction(&visit_table(&rows), 2.0).unwrap();
    let twice = simulate_week(&join(&venues, &doubled, 24).unwrap(), &params).unwrap();
    for (a, b) in once.iter().zip(&twice) {
        if a.weekly_infections > 0.0 {
            assert!(b.weekly_infections > a.weekly_infections);
        } else {
            assert_eq!(b.weekly_infections, 0.0);
        }
    }
}

fn counts_strategy() -> impl Strategy<Value = Vec<Vec<f64>>> {
    (1usize..6, 1usize..30).prop_flat_map(|(venues, hours)| {
        proptest::collection::vec(
            proptest::collection::vec(prop_oneof![Just(0.0), 0.0f64..500.0], hours),
            venues,
        )
    })
}

proptest! {
    #[test]
    fn sampling_correction_is_linear(rows in counts_strategy(), a in 0.1f64..20.0, b in 0.1f64..20.0) {
        let t = visit_table(&rows);
        let ab = apply_sampling_correction(&apply_sampling_correction(&t, a).unwrap(), b).unwrap();
        let direct = apply_sampling_correction(&t, a * b).unwrap();
        for (x, y) in ab.iter().zip(direct.iter()) {
            for (u, v) in x.counts().iter().zip(y.counts()) {
                prop_assert!((u - v).abs() <= 1e-12 * v.abs());
            }
        }
        prop_assert!((ab.sampling_factor_applied() - a * b).abs() <= 1e-12 * a * b);
    }

    #[test]
    fn files_round_trip(rows in counts_strategy(), areas in proptest::collection::vec(0.5f64..5000.0, 6)) {
        let venues = venue_table(&areas[..rows.len()]);
        let visits = visit_table(&rows);
        let mut vbuf = Vec::new();
        write_venues(&mut vbuf, &venues).unwrap();
        let mut sbuf = Vec::new();
        write_visits(&mut sbuf, visits.iter()).unwrap();

        let venues2 = parse_venues(vbuf.as_slice(), AreaUnit::SquareMeters).unwrap();
        let visits2 = parse_visits(sbuf.as_slice(), visits.window_hours()).unwrap();
        let input = join(&compute_volumes(&venues2, 3.0).unwrap(), &visits2, visits.window_hours()).unwrap();
        for (venue, series) in input.iter() {
            let original = venues.get(&venue.venue_id).unwrap();
            prop_assert!((venue.area - original.area).abs() <= 1e-9 * original.area);
            prop_assert_eq!(&venue.name, &original.name);
            let expected = visits.get(&venue.venue_id).unwrap();
            for (u, v) in series.counts().iter().zip(expected.counts()) {
                prop_assert!((u - v).abs() <= 1e-9 * v.abs());
            }
        }
    }

    #[test]
    fn join_keeps_every_venue_and_count(rows in counts_strategy(), extra in 0usize..4) {
        let areas: Vec<f64> = (0..rows.len() + extra).map(|i| 10.0 + i as f64).collect();
        let venues = compute_volumes(&venue_table(&areas), 3.0).unwrap();
        let visits = visit_table(&rows);
        let input = join(&venues, &visits, visits.window_hours()).unwrap();
        prop_assert_eq!(input.len(), venues.len());
        for (venue, series) in input.iter() {
            match visits.get(&venue.venue_id) {
                Some(s) => prop_assert_eq!(s.counts(), series.counts()),
                None => prop_assert!(series.counts().iter().all(|c| *c == 0.0)),
            }
        }
    }

    #[test]
    fn weekly_is_sum_of_hourly_and_deterministic(rows in counts_strategy(), prev in 0.0f64..0.05) {
        let areas: Vec<f64> = (0..rows.len()).map(|i| 20.0 + 37.0 * i as f64).collect();
        let venues = compute_volumes(&venue_table(&areas), 3.0).unwrap();
        let visits = visit_table(&rows);
        let input = join(&venues, &visits, visits.window_hours()).unwrap();
        let params = EpiParams::new(prev).unwrap();
        let a = simulate_week(&input, &params).unwrap();
        let b = simulate_week(&input, &params).unwrap();
        prop_assert_eq!(&a, &b);
        for r in &a {
            let sum: f64 = r.hourly_infections.iter().sum();
            prop_assert!((r.weekly_infections - sum).abs() <= 1e-9 * sum.abs());
            let series = input.series(&r.venue_id).unwrap();
            for (c, n) in r.hourly_infections.iter().zip(series.counts()) {
                prop_assert!(*c <= *n);
            }
        }
    }
}
