//! Report files: run manifest, per-venue CSV, histogram CSV, JSON summaries,
//! and all-or-nothing writes into the output directory.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use roomrisk_core::scenario::ScenarioResult;
use roomrisk_core::stats::{fit_log_normal, Histogram, LogNormalFit};
use roomrisk_core::{EpiParams, ScenarioConfig, VenueTable};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const TOOL_VERSION: &str = concat!("roomrisk ", env!("CARGO_PKG_VERSION"));

/// Provenance of one CLI run. `manifest_hash` covers every field except the
/// timestamp, so identical runs share a hash.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub manifest_hash: String,
    pub tool_version: String,
    pub command: String,
    pub input_file_digests: BTreeMap<String, String>,
    pub resolved_params: Option<EpiParams>,
    pub scenario_configs: Vec<ScenarioConfig>,
    pub options: BTreeMap<String, String>,
    pub timestamp: String,
}

#[derive(Serialize)]
struct HashedPart<'a> {
    tool_version: &'a str,
    command: &'a str,
    input_file_digests: &'a BTreeMap<String, String>,
    resolved_params: &'a Option<EpiParams>,
    scenario_configs: &'a [ScenarioConfig],
    options: &'a BTreeMap<String, String>,
}

impl RunManifest {
    pub fn new(
        command: &str,
        inputs: &[&Path],
        resolved_params: Option<EpiParams>,
        scenario_configs: Vec<ScenarioConfig>,
        options: BTreeMap<String, String>,
    ) -> Result<Self, CliError> {
        let mut input_file_digests = BTreeMap::new();
        for path in inputs {
            let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
            input_file_digests.insert(path.display().to_string(), sha256_hex(&bytes));
        }
        let hashed = HashedPart {
            tool_version: TOOL_VERSION,
            command,
            input_file_digests: &input_file_digests,
            resolved_params: &resolved_params,
            scenario_configs: &scenario_configs,
            options: &options,
        };
        let canonical = serde_json::to_vec(&hashed).expect("manifest serializes");
        Ok(Self {
            manifest_hash: sha256_hex(&canonical),
            tool_version: TOOL_VERSION.to_owned(),
            command: command.to_owned(),
            input_file_digests,
            resolved_params,
            scenario_configs,
            options,
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        })
    }

    pub fn short_hash(&self) -> &str {
        &self.manifest_hash[..16]
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub const RESULTS_HEADER: [&str; 8] = [
    "venue_id",
    "name",
    "category",
    "area_m2",
    "volume_m3",
    "visitors",
    "weekly_infections",
    "severity",
];

/// Per-venue results CSV, preceded by a `# manifest` comment line.
pub fn results_csv(manifest: &RunManifest, venues: &VenueTable, run: &ScenarioResult) -> Vec<u8> {
    let mut out = format!(
        "# manifest: {}\n# scenario: {}\n",
        manifest.manifest_hash, run.config.name
    )
    .into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut out);
        w.write_record(RESULTS_HEADER).expect("in-memory write");
        for (venue, r) in venues.iter().zip(&run.results) {
            debug_assert_eq!(venue.venue_id, r.venue_id);
            w.write_record([
                venue.venue_id.as_str(),
                venue.name.as_str(),
                venue.category.as_str(),
                &venue.area.to_string(),
                &(venue.area * run.params.ceiling_height).to_string(),
                &r.weekly_visitors.to_string(),
                &r.weekly_infections.to_string(),
                &r.severity.to_string(),
            ])
            .expect("in-memory write");
        }
        w.flush().expect("in-memory write");
    }
    out
}

/// Histogram bins as CSV: `bin,lower,upper,count`.
pub fn histogram_csv(manifest: &RunManifest, label: &str, h: &Histogram) -> Vec<u8> {
    let mut out = String::new();
    writeln!(out, "# manifest: {}", manifest.manifest_hash).unwrap();
    writeln!(out, "# series: {label}").unwrap();
    writeln!(out, "# scale: {}", h.scale).unwrap();
    writeln!(out, "# excluded: {}", h.excluded).unwrap();
    out.push_str("bin,lower,upper,count\n");
    for (i, count) in h.counts.iter().enumerate() {
        writeln!(out, "{i},{},{},{count}", h.bin_edges[i], h.bin_edges[i + 1]).unwrap();
    }
    out.into_bytes()
}

#[derive(Serialize)]
pub struct ScenarioSummary {
    pub scenario: String,
    pub venue_count: usize,
    pub severe_count: usize,
    pub mild_count: usize,
    pub threshold: f64,
    pub total_expected_infections: f64,
    pub max_weekly_infections: f64,
    pub zero_infection_venues: usize,
    /// Log-normal fit over venues with positive expected infections.
    pub log_normal_fit: Option<LogNormalFit>,
}

impl ScenarioSummary {
    pub fn of(run: &ScenarioResult) -> Self {
        let weekly = run.weekly_infections();
        let positive: Vec<f64> = weekly.iter().copied().filter(|w| *w > 0.0).collect();
        Self {
            scenario: run.config.name.clone(),
            venue_count: run.results.len(),
            severe_count: run.severe_count,
            mild_count: run.mild_count,
            threshold: run.config.severity_threshold,
            total_expected_infections: run.total_infections(),
            max_weekly_infections: weekly.iter().copied().fold(0.0, f64::max),
            zero_infection_venues: weekly.len() - positive.len(),
            log_normal_fit: fit_log_normal(&positive).ok(),
        }
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("report serializes");
    bytes.push(b'\n');
    bytes
}

/// Writes every file to a temporary sibling first and renames only once all
/// of them are on disk.
pub fn write_all_atomic(
    out_dir: &Path,
    files: &[(&str, Vec<u8>)],
) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;
    let mut staged = Vec::with_capacity(files.len());
    for (name, bytes) in files {
        let mut tmp = tempfile::Builder::new()
            .prefix(&format!(".{name}."))
            .tempfile_in(out_dir)
            .map_err(|e| CliError::io(out_dir, e))?;
        tmp.write_all(bytes)
            .and_then(|_| tmp.as_file().sync_all())
            .map_err(|e| CliError::io(tmp.path(), e))?;
        staged.push((tmp, out_dir.join(name)));
    }
    let mut written = Vec::with_capacity(staged.len());
    for (tmp, dest) in staged {
        tmp.persist(&dest)
            .map_err(|e| CliError::io(&dest, e.error))?;
        written.push(dest);
    }
    Ok(written)
}
