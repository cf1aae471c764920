//! Venue and visit ingestion.
//!
//! Two comma-separated formats are accepted:
//!
//! * venues: header `venue_id,name,category,area`, one establishment per row.
//!   The area unit is not part of the file; callers pass an [`AreaUnit`].
//! * visits: header `venue_id,hour,count`, where `hour` is a 0-based offset
//!   from the start of the simulation window and `count` a non-negative,
//!   possibly fractional, visitor count. Hours that never appear are zero.
//!
//! Internally every area is in m² and every volume in m³.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use chrono::{DateTime, Timelike, Utc};
use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hours in the one-week simulation window.
pub const WEEK_HOURS: usize = 168;

/// One international square foot in square meters.
pub const SQUARE_FOOT_IN_SQUARE_METERS: f64 = 0.092_903_04;

pub const VENUE_HEADER: [&str; 4] = ["venue_id", "name", "category", "area"];
pub const VISIT_HEADER: [&str; 3] = ["venue_id", "hour", "count"];

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AreaUnit {
    #[default]
    SquareMeters,
    SquareFeet,
}

impl AreaUnit {
    pub fn to_square_meters(self, area: f64) -> f64 {
        match self {
            AreaUnit::SquareMeters => area,
            AreaUnit::SquareFeet => area * SQUARE_FOOT_IN_SQUARE_METERS,
        }
    }
}

impl FromStr for AreaUnit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "m2" | "sqm" | "square_meters" => Ok(AreaUnit::SquareMeters),
            "ft2" | "sqft" | "square_feet" => Ok(AreaUnit::SquareFeet),
            other => Err(Error::arg(format!(
                "unknown area unit {other:?} (expected m2 or ft2)"
            ))),
        }
    }
}

impl fmt::Display for AreaUnit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AreaUnit::SquareMeters => "m2",
            AreaUnit::SquareFeet => "ft2",
        })
    }
}

/// An establishment. `volume` stays `None` until [`compute_volumes`] runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Venue {
    pub venue_id: String,
    pub name: String,
    pub category: String,
    /// Floor area in m².
    pub area: f64,
    /// Air volume in m³.
    pub volume: Option<f64>,
}

/// Venues keyed by id, in file order. Ids are unique by construction.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct VenueTable {
    venues: IndexMap<String, Venue>,
}

impl VenueTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a venue, rejecting duplicate ids and non-positive areas.
    pub fn insert(&mut self, venue: Venue) -> Result<()> {
        if !(venue.area > 0.0 && venue.area.is_finite()) {
            return Err(Error::arg(format!(
                "venue {}: area must be positive, got {}",
                venue.venue_id, venue.area
            )));
        }
        if self.venues.contains_key(&venue.venue_id) {
            return Err(Error::Dataset(format!(
                "duplicate venue_id {:?}",
                venue.venue_id
            )));
        }
        self.venues.insert(venue.venue_id.clone(), venue);
        Ok(())
    }

    pub fn from_venues(venues: impl IntoIterator<Item = Venue>) -> Result<Self> {
        let mut table = Self::new();
        for venue in venues {
            table.insert(venue)?;
        }
        Ok(table)
    }

    pub fn get(&self, venue_id: &str) -> Option<&Venue> {
        self.venues.get(venue_id)
    }

    pub fn contains(&self, venue_id: &str) -> bool {
        self.venues.contains_key(venue_id)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Venue> {
        self.venues.values()
    }

    pub fn len(&self) -> usize {
        self.venues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.venues.is_empty()
    }
}

/// Hourly visitor counts for one venue over the simulation window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VisitSeries {
    pub venue_id: String,
    window_start: Option<DateTime<Utc>>,
    hourly_counts: Vec<f64>,
}

impl VisitSeries {
    /// Builds a series; every count must be finite and non-negative.
    pub fn new(venue_id: impl Into<String>, hourly_counts: Vec<f64>) -> Result<Self> {
        let venue_id = venue_id.into();
        if let Some((hour, c)) = hourly_counts
            .iter()
            .enumerate()
            .find(|(_, c)| !(c.is_finite() && **c >= 0.0))
        {
            return Err(Error::arg(format!(
                "venue {venue_id}: count at hour {hour} must be finite and non-negative, got {c}"
            )));
        }
        Ok(Self {
            venue_id,
            window_start: None,
            hourly_counts,
        })
    }

    pub fn zeros(venue_id: impl Into<String>, window_hours: usize) -> Self {
        Self {
            venue_id: venue_id.into(),
            window_start: None,
            hourly_counts: vec![0.0; window_hours],
        }
    }

    /// Attaches the window start; it must fall exactly on an hour boundary.
    pub fn with_window_start(mut self, start: DateTime<Utc>) -> Result<Self> {
        if start.minute() != 0 || start.second() != 0 || start.nanosecond() != 0 {
            return Err(Error::arg(format!(
                "window start {start} is not hour-aligned"
            )));
        }
        self.window_start = Some(start);
        Ok(self)
    }

    pub fn window_start(&self) -> Option<DateTime<Utc>> {
        self.window_start
    }

    pub fn counts(&self) -> &[f64] {
        &self.hourly_counts
    }

    pub fn window_hours(&self) -> usize {
        self.hourly_counts.len()
    }

    pub fn total(&self) -> f64 {
        self.hourly_counts.iter().sum()
    }

    /// Applies `f` to every count. `f` must map non-negative values to
    /// non-negative values.
    pub fn map_counts(&self, f: impl Fn(f64) -> f64) -> Self {
        let hourly_counts = self.hourly_counts.iter().map(|&c| f(c)).collect::<Vec<_>>();
        debug_assert!(hourly_counts.iter().all(|c| *c >= 0.0));
        Self {
            venue_id: self.venue_id.clone(),
            window_start: self.window_start,
            hourly_counts,
        }
    }
}

/// Visit series keyed by venue id, all sharing one window length.
#[derive(Clone, Debug, PartialEq)]
pub struct VisitTable {
    series: IndexMap<String, VisitSeries>,
    window_hours: usize,
    sampling_factor_applied: f64,
}

impl VisitTable {
    pub fn new(window_hours: usize) -> Self {
        Self {
            series: IndexMap::new(),
            window_hours,
            sampling_factor_applied: 1.0,
        }
    }

    pub fn insert(&mut self, series: VisitSeries) -> Result<()> {
        if series.window_hours() != self.window_hours {
            return Err(Error::Dataset(format!(
                "venue {}: series has {} hours, table window is {}",
                series.venue_id,
                series.window_hours(),
                self.window_hours
            )));
        }
        if self.series.contains_key(&series.venue_id) {
            return Err(Error::Dataset(format!(
                "duplicate visit series for venue_id {:?}",
                series.venue_id
            )));
        }
        self.series.insert(series.venue_id.clone(), series);
        Ok(())
    }

    pub fn get(&self, venue_id: &str) -> Option<&VisitSeries> {
        self.series.get(venue_id)
    }

    pub fn iter(&self) -> impl Iterator<Item = &VisitSeries> {
        self.series.values()
    }

    pub fn len(&self) -> usize {
        self.series.len()
    }

    pub fn is_empty(&self) -> bool {
        self.series.is_empty()
    }

    pub fn window_hours(&self) -> usize {
        self.window_hours
    }

    /// Product of every sampling factor applied since parsing.
    pub fn sampling_factor_applied(&self) -> f64 {
        self.sampling_factor_applied
    }
}

/// Venues joined with their visit series. Every venue has exactly one series;
/// venues absent from the visit data carry an all-zero series.
#[derive(Clone, Debug, PartialEq)]
pub struct SimulationInput {
    venues: VenueTable,
    visits: IndexMap<String, VisitSeries>,
    window_hours: usize,
    sampling_factor_applied: f64,
}

impl SimulationInput {
    pub fn venues(&self) -> &VenueTable {
        &self.venues
    }

    pub fn series(&self, venue_id: &str) -> Option<&VisitSeries> {
        self.visits.get(venue_id)
    }

    /// Venues and their series, in venue-table order.
    pub fn iter(&self) -> impl Iterator<Item = (&Venue, &VisitSeries)> {
        self.venues.iter().map(|v| (v, &self.visits[&v.venue_id]))
    }

    pub fn len(&self) -> usize {
        self.venues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.venues.is_empty()
    }

    pub fn window_hours(&self) -> usize {
        self.window_hours
    }

    pub fn sampling_factor_applied(&self) -> f64 {
        self.sampling_factor_applied
    }

    /// The visit series as a standalone table (one entry per venue).
    pub fn visit_table(&self) -> VisitTable {
        VisitTable {
            series: self.visits.clone(),
            window_hours: self.window_hours,
            sampling_factor_applied: self.sampling_factor_applied,
        }
    }

    /// Same visits, venues replaced (e.g. after recomputing volumes).
    pub fn with_venues(&self, venues: VenueTable) -> Result<Self> {
        join(&venues, &self.visit_table(), self.window_hours)
    }

    /// Same venues, every series transformed by `f(venue, series)`.
    pub fn map_series(&self, mut f: impl FnMut(&Venue, &VisitSeries) -> VisitSeries) -> Self {
        let visits = self
            .iter()
            .map(|(venue, series)| {
                let mapped = f(venue, series);
                debug_assert_eq!(mapped.window_hours(), self.window_hours);
                (venue.venue_id.clone(), mapped)
            })
            .collect();
        Self {
            venues: self.venues.clone(),
            visits,
            window_hours: self.window_hours,
            sampling_factor_applied: self.sampling_factor_applied,
        }
    }

    pub(crate) fn with_sampling_factor(mut self, factor: f64) -> Self {
        self.sampling_factor_applied = factor;
        self
    }
}

fn csv_reader<R: Read>(source: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(false)
        .from_reader(source)
}

fn csv_error(err: csv::Error) -> Error {
    let line = err.position().map(|p| p.line()).unwrap_or(0);
    match err.into_kind() {
        csv::ErrorKind::Io(e) => Error::Io(e),
        csv::ErrorKind::UnequalLengths {
            expected_len, len, ..
        } => Error::record(line, format!("expected {expected_len} fields, found {len}")),
        csv::ErrorKind::Utf8 { err, .. } => Error::record(line, format!("invalid UTF-8: {err}")),
        other => Error::record(line, format!("{other:?}")),
    }
}

fn check_header<R: Read>(reader: &mut csv::Reader<R>, expected: &[&str]) -> Result<bool> {
    let header = reader.headers().map_err(csv_error)?;
    if header.is_empty() {
        return Ok(false);
    }
    if header.iter().ne(expected.iter().copied()) {
        return Err(Error::record(
            1,
            format!(
                "bad header {:?}, expected {:?}",
                header.iter().collect::<Vec<_>>().join(","),
                expected.join(",")
            ),
        ));
    }
    Ok(true)
}

fn parse_f64(field: &str, what: &str, line: u64) -> Result<f64> {
    field
        .parse::<f64>()
        .map_err(|_| Error::record(line, format!("{what} {field:?} is not a number")))
}

/// Parses a venue file. Areas are converted to m²; volumes are left unset.
pub fn parse_venues<R: Read>(source: R, area_unit: AreaUnit) -> Result<VenueTable> {
    let mut reader = csv_reader(source);
    let mut table = VenueTable::new();
    if !check_header(&mut reader, &VENUE_HEADER)? {
        return Ok(table);
    }
    for record in reader.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let venue_id = &record[0];
        if venue_id.is_empty() {
            return Err(Error::record(line, "empty venue_id"));
        }
        let area = parse_f64(&record[3], "area", line)?;
        if !(area > 0.0 && area.is_finite()) {
            return Err(Error::record(
                line,
                format!("area must be positive, got {}", &record[3]),
            ));
        }
        table.insert(Venue {
            venue_id: venue_id.to_owned(),
            name: record[1].to_owned(),
            category: record[2].to_owned(),
            area: area_unit.to_square_meters(area),
            volume: None,
        })?;
    }
    Ok(table)
}

/// Parses a visit file into one zero-filled series per venue id.
/// No sampling correction is applied.
pub fn parse_visits<R: Read>(source: R, window_hours: usize) -> Result<VisitTable> {
    if window_hours == 0 {
        return Err(Error::arg("window_hours must be positive"));
    }
    let mut reader = csv_reader(source);
    let mut table = VisitTable::new(window_hours);
    if !check_header(&mut reader, &VISIT_HEADER)? {
        return Ok(table);
    }
    let mut counts: IndexMap<String, Vec<Option<f64>>> = IndexMap::new();
    for record in reader.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let venue_id = &record[0];
        if venue_id.is_empty() {
            return Err(Error::record(line, "empty venue_id"));
        }
        let hour: usize = record[1].parse().map_err(|_| {
            Error::record(
                line,
                format!("hour {:?} is not a non-negative integer", &record[1]),
            )
        })?;
        if hour >= window_hours {
            return Err(Error::record(
                line,
                format!("hour {hour} outside window [0, {window_hours})"),
            ));
        }
        let count = parse_f64(&record[2], "count", line)?;
        if !(count.is_finite() && count >= 0.0) {
            return Err(Error::record(
                line,
                format!("count must be finite and non-negative, got {}", &record[2]),
            ));
        }
        let slots = counts
            .entry(venue_id.to_owned())
            .or_insert_with(|| vec![None; window_hours]);
        if slots[hour].replace(count).is_some() {
            return Err(Error::record(
                line,
                format!("duplicate row for venue {venue_id:?} hour {hour}"),
            ));
        }
    }
    for (venue_id, slots) in counts {
        let series = VisitSeries::new(
            venue_id,
            slots.into_iter().map(|c| c.unwrap_or(0.0)).collect(),
        )?;
        table.insert(series)?;
    }
    Ok(table)
}

/// Multiplies every count by `factor`, recording it in the audit field.
pub fn apply_sampling_correction(visits: &VisitTable, factor: f64) -> Result<VisitTable> {
    if !(factor > 0.0 && factor.is_finite()) {
        return Err(Error::arg(format!(
            "sampling factor must be positive, got {factor}"
        )));
    }
    Ok(VisitTable {
        series: visits
            .series
            .iter()
            .map(|(id, s)| (id.clone(), s.map_counts(|c| c * factor)))
            .collect(),
        window_hours: visits.window_hours,
        sampling_factor_applied: visits.sampling_factor_applied * factor,
    })
}

/// Sets every venue's volume to `area * ceiling_height`.
pub fn compute_volumes(venues: &VenueTable, ceiling_height: f64) -> Result<VenueTable> {
    if !(ceiling_height > 0.0 && ceiling_height.is_finite()) {
        return Err(Error::arg(format!(
            "ceiling height must be positive, got {ceiling_height}"
        )));
    }
    Ok(VenueTable {
        venues: venues
            .venues
            .iter()
            .map(|(id, v)| {
                let mut v = v.clone();
                v.volume = Some(v.area * ceiling_height);
                (id.clone(), v)
            })
            .collect(),
    })
}

/// Joins venues with visits. Venues without visits get an all-zero series;
/// visits naming unknown venues are rejected.
pub fn join(
    venues: &VenueTable,
    visits: &VisitTable,
    window_hours: usize,
) -> Result<SimulationInput> {
    if visits.window_hours != window_hours {
        return Err(Error::Dataset(format!(
            "visit table window is {} hours, expected {window_hours}",
            visits.window_hours
        )));
    }
    let unknown: Vec<&str> = visits
        .series
        .keys()
        .filter(|id| !venues.contains(id))
        .map(String::as_str)
        .collect();
    if !unknown.is_empty() {
        return Err(Error::Dataset(format!(
            "visits reference unknown venue ids: {}",
            unknown.join(", ")
        )));
    }
    if let Some(v) = venues.iter().find(|v| v.volume.is_none()) {
        return Err(Error::Dataset(format!(
            "venue {} has no volume; compute volumes first",
            v.venue_id
        )));
    }
    let joined = venues
        .iter()
        .map(|v| {
            let series = visits
                .get(&v.venue_id)
                .cloned()
                .unwrap_or_else(|| VisitSeries::zeros(v.venue_id.clone(), window_hours));
            (v.venue_id.clone(), series)
        })
        .collect();
    Ok(SimulationInput {
        venues: venues.clone(),
        visits: joined,
        window_hours,
        sampling_factor_applied: visits.sampling_factor_applied,
    })
}

/// Writes venues in the venue file format, areas in m².
pub fn write_venues<W: Write>(sink: W, venues: &VenueTable) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(VENUE_HEADER).map_err(csv_error)?;
    for v in venues.iter() {
        w.write_record([
            v.venue_id.as_str(),
            v.name.as_str(),
            v.category.as_str(),
            &v.area.to_string(),
        ])
        .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes visits in the visit file format. Zero hours are omitted.
pub fn write_visits<'a, W: Write>(
    sink: W,
    series: impl IntoIterator<Item = &'a VisitSeries>,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(VISIT_HEADER).map_err(csv_error)?;
    for s in series {
        for (hour, &count) in s.counts().iter().enumerate() {
            if count != 0.0 {
                w.write_record([s.venue_id.as_str(), &hour.to_string(), &count.to_string()])
                    .map_err(csv_error)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}
