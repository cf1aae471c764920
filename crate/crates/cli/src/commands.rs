use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use roomrisk_core::config::{load_params, load_scenario, parse_length};
use roomrisk_core::epi::ParamsOverride;
use roomrisk_core::ingest::{
    compute_volumes, join, parse_venues, parse_visits, write_venues, write_visits,
};
use roomrisk_core::scenario::{
    run_scenario, Distancing, ScenarioConfig, ScenarioResult, VisitSource,
};
use roomrisk_core::stats::{classify, compare as compare_samples, histogram, Severity};
use roomrisk_core::synthetic::{generate, SyntheticConfig};
use roomrisk_core::{EpiParams, SimulationInput};
use serde::Serialize;

use crate::error::CliError;
use crate::report::{
    histogram_csv, results_csv, to_json, write_all_atomic, RunManifest, ScenarioSummary,
};
use crate::{CompareArgs, GenSyntheticArgs, HotspotsArgs, InputArgs, SimulateArgs};

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::io(path, e))
}

fn with_path(path: &Path, err: roomrisk_core::Error) -> CliError {
    match CliError::from(err) {
        CliError::Validation(msg) => CliError::Validation(format!("{}: {msg}", path.display())),
        CliError::Io(msg) => CliError::Io(msg),
    }
}

/// Params file, then flags, then defaults. Prevalence has no default.
fn resolve_params(args: &InputArgs) -> Result<EpiParams, CliError> {
    let from_file = match &args.params {
        Some(path) => load_params(path).map_err(|e| with_path(path, e))?,
        None => ParamsOverride::default(),
    };
    let from_flags = ParamsOverride {
        documented_prevalence: args.prevalence,
        underreport_factor: args.underreport_factor,
        ..Default::default()
    };
    from_file.merged_with(&from_flags).resolve().map_err(|e| {
        CliError::Validation(format!(
            "{e} (pass --prevalence or set documented_prevalence in the params file)"
        ))
    })
}

fn load_input(args: &InputArgs, params: &EpiParams) -> Result<SimulationInput, CliError> {
    let venues = parse_venues(open(&args.venues)?, args.area_unit)
        .map_err(|e| with_path(&args.venues, e))?;
    let venues = compute_volumes(&venues, params.ceiling_height)?;
    let visits = parse_visits(open(&args.visits)?, args.window_hours)
        .map_err(|e| with_path(&args.visits, e))?;
    join(&venues, &visits, args.window_hours).map_err(|e| with_path(&args.visits, e))
}

fn input_options(args: &InputArgs) -> BTreeMap<String, String> {
    BTreeMap::from([
        ("area_unit".to_owned(), args.area_unit.to_string()),
        ("window_hours".to_owned(), args.window_hours.to_string()),
        ("bins".to_owned(), args.bins.to_string()),
        ("scale".to_owned(), args.scale.to_string()),
    ])
}

fn input_paths(args: &InputArgs) -> Vec<&Path> {
    let mut paths = vec![args.venues.as_path(), args.visits.as_path()];
    paths.extend(args.params.as_deref());
    paths
}

#[derive(Serialize)]
struct SimulateSummary<'a> {
    manifest: &'a str,
    #[serde(flatten)]
    summary: ScenarioSummary,
    sampling_factor: f64,
    spacing_m: Option<f64>,
    histogram_excluded: u64,
}

pub fn simulate(args: &SimulateArgs) -> Result<(), CliError> {
    let params = resolve_params(&args.input)?;
    let input = load_input(&args.input, &params)?;
    let distancing = args
        .spacing
        .as_deref()
        .map(parse_length)
        .transpose()?
        .map(|spacing| Distancing { spacing });
    let config = ScenarioConfig {
        name: args.name.clone(),
        sampling_factor: args.sampling_factor,
        distancing,
        severity_threshold: args.threshold,
        ..ScenarioConfig::baseline(args.name.clone())
    };
    let run = run_scenario(&input, &config, &params)?;
    let hist = histogram(&run.weekly_infections(), args.input.bins, args.input.scale)?;

    let manifest = RunManifest::new(
        "simulate",
        &input_paths(&args.input),
        Some(run.params),
        vec![config],
        input_options(&args.input),
    )?;
    let summary = SimulateSummary {
        manifest: &manifest.manifest_hash,
        summary: ScenarioSummary::of(&run),
        sampling_factor: run.config.sampling_factor,
        spacing_m: run.config.distancing.map(|d| d.spacing),
        histogram_excluded: hist.excluded,
    };
    write_all_atomic(
        &args.input.out,
        &[
            ("results.csv", results_csv(&manifest, input.venues(), &run)),
            ("summary.json", to_json(&summary)),
            (
                "histogram.csv",
                histogram_csv(&manifest, &run.config.name, &hist),
            ),
            ("manifest.json", to_json(&manifest)),
        ],
    )?;
    println!(
        "{}: {} venues, {} severe, {} mild, {} expected infections (manifest {})",
        run.config.name,
        run.results.len(),
        run.severe_count,
        run.mild_count,
        run.total_infections(),
        manifest.short_hash()
    );
    Ok(())
}

#[derive(Serialize)]
struct ComparisonReport<'a> {
    manifest: &'a str,
    scenario_a: ScenarioSummary,
    scenario_b: ScenarioSummary,
    #[serde(flatten)]
    comparison: roomrisk_core::ComparisonResult,
}

fn check_aligned(a: &ScenarioResult, b: &ScenarioResult) -> Result<(), CliError> {
    let same = a.results.len() == b.results.len()
        && a.results
            .iter()
            .zip(&b.results)
            .all(|(x, y)| x.venue_id == y.venue_id);
    if same {
        Ok(())
    } else {
        Err(CliError::Validation(format!(
            "dataset error: scenarios {:?} and {:?} cover different venue tables",
            a.config.name, b.config.name
        )))
    }
}

pub fn compare(args: &CompareArgs) -> Result<(), CliError> {
    let params = resolve_params(&args.input)?;
    let input = load_input(&args.input, &params)?;
    let config_a = load_scenario(&args.scenario_a).map_err(|e| with_path(&args.scenario_a, e))?;
    let config_b = load_scenario(&args.scenario_b).map_err(|e| with_path(&args.scenario_b, e))?;
    let run_a = run_scenario(&input, &config_a, &params)?;
    let run_b = run_scenario(&input, &config_b, &params)?;
    check_aligned(&run_a, &run_b)?;

    let comparison = compare_samples(
        &run_a.weekly_infections(),
        &run_b.weekly_infections(),
        args.input.bins,
        args.input.scale,
        args.variant(),
    )?;

    let mut inputs = input_paths(&args.input);
    inputs.push(&args.scenario_a);
    inputs.push(&args.scenario_b);
    let alternates: Vec<PathBuf> = [&config_a, &config_b]
        .iter()
        .filter_map(|c| match &c.visit_source {
            VisitSource::AlternateFile(p) => Some(p.clone()),
            VisitSource::Baseline => None,
        })
        .collect();
    inputs.extend(alternates.iter().map(PathBuf::as_path));
    let mut options = input_options(&args.input);
    options.insert("t_test".to_owned(), args.variant().to_string());
    let manifest = RunManifest::new(
        "compare",
        &inputs,
        Some(params),
        vec![config_a, config_b],
        options,
    )?;

    let report = ComparisonReport {
        manifest: &manifest.manifest_hash,
        scenario_a: ScenarioSummary::of(&run_a),
        scenario_b: ScenarioSummary::of(&run_b),
        comparison,
    };
    let test = &report.comparison.test;
    write_all_atomic(
        &args.input.out,
        &[
            ("comparison.json", to_json(&report)),
            (
                "histogram_a.csv",
                histogram_csv(
                    &manifest,
                    &run_a.config.name,
                    &report.comparison.histogram_a,
                ),
            ),
            (
                "histogram_b.csv",
                histogram_csv(
                    &manifest,
                    &run_b.config.name,
                    &report.comparison.histogram_b,
                ),
            ),
            (
                "results_a.csv",
                results_csv(&manifest, input.venues(), &run_a),
            ),
            (
                "results_b.csv",
                results_csv(&manifest, input.venues(), &run_b),
            ),
            ("manifest.json", to_json(&manifest)),
        ],
    )?;
    println!(
        "{:<24} {:>8} {:>8} {:>14}",
        "scenario", "severe", "mild", "mean weekly"
    );
    for (run, mean) in [(&run_a, test.mean_a), (&run_b, test.mean_b)] {
        println!(
            "{:<24} {:>8} {:>8} {:>14.6}",
            run.config.name, run.severe_count, run.mild_count, mean
        );
    }
    println!(
        "{} t = {:.6}, df = {:.3}, p = {:.6e} (manifest {})",
        test.variant,
        test.t_stat,
        test.degrees_of_freedom,
        test.p_value,
        manifest.short_hash()
    );
    Ok(())
}

struct Hotspot {
    venue_id: String,
    name: String,
    weekly: f64,
}

fn read_results(path: &Path) -> Result<Vec<Hotspot>, CliError> {
    let invalid = |msg: String| CliError::Validation(format!("{}: {msg}", path.display()));
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(open(path)?);
    let headers = reader
        .headers()
        .map_err(|e| invalid(e.to_string()))?
        .clone();
    if headers.is_empty() {
        return Ok(Vec::new());
    }
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| invalid(format!("missing column {name:?}")))
    };
    let (id_col, name_col, weekly_col) = (
        column("venue_id")?,
        column("name")?,
        column("weekly_infections")?,
    );
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| invalid(e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line());
        let weekly: f64 = record[weekly_col]
            .parse()
            .ok()
            .filter(|w: &f64| w.is_finite() && *w >= 0.0)
            .ok_or_else(|| {
                invalid(format!(
                    "line {line}: bad weekly_infections {:?}",
                    &record[weekly_col]
                ))
            })?;
        rows.push(Hotspot {
            venue_id: record[id_col].to_owned(),
            name: record[name_col].to_owned(),
            weekly,
        });
    }
    Ok(rows)
}

pub fn hotspots(args: &HotspotsArgs) -> Result<(), CliError> {
    if !args.threshold.is_finite() {
        return Err(CliError::Validation("threshold must be finite".into()));
    }
    let mut rows = read_results(&args.results)?;
    rows.sort_by(|a, b| {
        b.weekly
            .total_cmp(&a.weekly)
            .then_with(|| a.venue_id.cmp(&b.venue_id))
    });
    let severe = rows
        .iter()
        .filter(|r| classify(r.weekly, args.threshold) == Severity::Severe)
        .count();
    let shown = args.top.unwrap_or(rows.len()).min(rows.len());

    let mut w = csv::Writer::from_writer(std::io::stdout().lock());
    let write_err = |e: csv::Error| CliError::Io(format!("stdout: {e}"));
    w.write_record(["rank", "venue_id", "name", "weekly_infections", "severity"])
        .map_err(write_err)?;
    for (rank, r) in rows.iter().take(shown).enumerate() {
        w.write_record([
            &(rank + 1).to_string(),
            &r.venue_id,
            &r.name,
            &r.weekly.to_string(),
            &classify(r.weekly, args.threshold).to_string(),
        ])
        .map_err(write_err)?;
    }
    w.flush()
        .map_err(|e| CliError::Io(format!("stdout: {e}")))?;
    eprintln!(
        "{severe} of {} venues above {} expected infections per week",
        rows.len(),
        args.threshold
    );
    Ok(())
}

pub fn gen_synthetic(args: &GenSyntheticArgs) -> Result<(), CliError> {
    let mut config = SyntheticConfig::default();
    if let Some(m) = args.pre_pandemic_multiplier {
        config.pre_pandemic_multiplier = m;
    }
    let data = generate(args.n_venues, args.seed, &config)?;
    let mut venues = Vec::new();
    write_venues(&mut venues, &data.venues)?;
    let mut visits = Vec::new();
    write_visits(&mut visits, data.visits(args.profile).iter())?;

    let visits_name = format!("visits_{}.csv", args.profile);
    let options = BTreeMap::from([
        ("n_venues".to_owned(), args.n_venues.to_string()),
        ("profile".to_owned(), args.profile.to_string()),
        ("seed".to_owned(), args.seed.to_string()),
        (
            "generator".to_owned(),
            serde_json::to_string(&config).expect("config serializes"),
        ),
    ]);
    let manifest = RunManifest::new("gen-synthetic", &[], None, Vec::new(), options)?;
    let manifest_name = format!("manifest_{}.json", args.profile);
    let written = write_all_atomic(
        &args.out,
        &[
            ("venues.csv", venues),
            (visits_name.as_str(), visits),
            (manifest_name.as_str(), to_json(&manifest)),
        ],
    )?;
    for path in written {
        println!("{}", path.display());
    }
    Ok(())
}
