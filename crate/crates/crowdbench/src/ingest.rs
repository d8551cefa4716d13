//! File ingestion: trajectory CSV, metric records, config files, and
//! the trajectory log.
//!
//! All readers attach the file path (and, where useful, the line) to
//! their errors, since these are the errors users actually see.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use anyhow::{bail, Context, Result};
use crowdbench_core::scoring::{BatchMetrics, ScoringConfig};
use crowdbench_core::sim::ScenarioConfig;
use crowdbench_core::trajmetric::Trajectory;
use crowdbench_core::Vec2;
use serde::Deserialize;

/// Reads a trajectory from CSV with a required `t,x,y` header.
///
/// The step size is inferred from the first two timestamps (falling
/// back to 0.25 s for these shorter than two rows).
pub fn read_trajectory_csv(path: &Path) -> Result<Trajectory> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("cannot open trajectory file {}", path.display()))?;
    let headers = reader
        .headers()
        .with_context(|| format!("cannot read header of {}", path.display()))?;
    let names: Vec<String> = headers.iter().map(|h| h.to_ascii_lowercase()).collect();
    if names != ["t", "x", "y"] {
        bail!(
            "{}: expected header `t,x,y`, found `{}`",
            path.display(),
            headers.iter().collect::<Vec<_>>().join(",")
        );
    }
    let mut times = Vec::new();
    let mut points = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record =
            record.with_context(|| format!("{}: bad CSV on data row {}", path.display(), row + 1))?;
        let field = |i: usize| -> Result<f64> {
            record
                .get(i)
                .with_context(|| format!("{}: row {} is short", path.display(), row + 1))?
                .parse::<f64>()
                .with_context(|| format!("{}: row {} column {} is not a number", path.display(), row + 1, i + 1))
        };
        times.push(field(0)?);
        points.push(Vec2::new(field(1)?, field(2)?));
    }
    let dt = match times.get(0..2) {
        Some([t0, t1]) if t1 - t0 > 0.0 => t1 - t0,
        _ => 0.25,
    };
    Ok(Trajectory::new(points, dt))
}

/// Published sub-scores, for scoring rows whose raw metrics are not
/// available.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
pub struct Subscores {
    pub f_saf: f64,
    pub f_suc: f64,
    pub f_comf: f64,
    pub f_traj: f64,
    pub f_effic: f64,
}

/// Input to the `score` subcommand: either raw batch metrics or
/// already-computed sub-scores.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum ScoreInput {
    Metrics(BatchMetrics),
    Subscores(Subscores),
}

/// Resolves the `score` argument: anything that starts with `{` is
/// parsed as an inline JSON record, anything else is treated as a
/// path to a JSON or CSV file.
pub fn resolve_score_input(arg: &str) -> Result<ScoreInput> {
    if arg.trim_start().starts_with('{') {
        serde_json::from_str(arg).context("inline JSON is not a metrics or sub-score record")
    } else {
        read_score_input(Path::new(arg))
    }
}

/// Reads a metric record: CSV (`.csv`, header row naming the metric
/// fields) or JSON (an object with either the seven metric fields or
/// the five sub-score fields).
pub fn read_score_input(path: &Path) -> Result<ScoreInput> {
    let is_csv = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    if is_csv {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_path(path)
            .with_context(|| format!("cannot open metrics file {}", path.display()))?;
        let metrics: BatchMetrics = reader
            .deserialize()
            .next()
            .with_context(|| format!("{}: no data row after the header", path.display()))?
            .with_context(|| format!("{}: bad metrics record", path.display()))?;
        Ok(ScoreInput::Metrics(metrics))
    } else {
        let file = File::open(path)
            .with_context(|| format!("cannot open metrics file {}", path.display()))?;
        serde_json::from_reader(BufReader::new(file))
            .with_context(|| format!("{}: not a metrics or sub-score record", path.display()))
    }
}

/// Reads a scenario config. Missing fields take their defaults, so a
/// file may override only what it cares about.
pub fn read_scenario_config(path: &Path) -> Result<ScenarioConfig> {
    let file = File::open(path)
        .with_context(|| format!("cannot open scenario config {}", path.display()))?;
    serde_json::from_reader(BufReader::new(file))
        .with_context(|| format!("{}: bad scenario config", path.display()))
}

/// Reads a scoring config; missing fields take their defaults.
pub fn read_scoring_config(path: &Path) -> Result<ScoringConfig> {
    let file = File::open(path)
        .with_context(|| format!("cannot open scoring config {}", path.display()))?;
    serde_json::from_reader(BufReader::new(file))
        .with_context(|| format!("{}: bad scoring config", path.display()))
}

/// One trajectory-log line as the plotter needs it. Reward and
/// separation fields are ignored, so lines whose separation serialized
/// as null (no human in the world) still parse.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct PlotStep {
    pub ep: u64,
    pub robot: [f64; 2],
    pub humans: Vec<[f64; 2]>,
}

/// Reads every line of a trajectory log.
pub fn read_log_steps(path: &Path) -> Result<Vec<PlotStep>> {
    let file = File::open(path)
        .with_context(|| format!("cannot open trajectory log {}", path.display()))?;
    let mut steps = Vec::new();
    for (number, line) in BufReader::new(file).lines().enumerate() {
        let line = line.with_context(|| format!("{}: read error", path.display()))?;
        if line.trim().is_empty() {
            continue;
        }
        steps.push(
            serde_json::from_str(&line)
                .with_context(|| format!("{}: bad log line {}", path.display(), number + 1))?,
        );
    }
    Ok(steps)
}
