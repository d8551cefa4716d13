//! Seeded batch execution and aggregation.
//!
//! A batch is a grid of episodes: every seed in `seeds` times
//! `episodes_per_seed` runs. Episode `index` of seed `s` derives its
//! world from `episode_seed(s, index)`, so any single episode can be
//! replayed in isolation. Batches run on a worker pool, but results are
//! committed in episode order through a reorder buffer, which makes the
//! trajectory log and the aggregate report byte-identical for any
//! worker count.

use std::collections::BTreeMap;
use std::io::Write;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc;
use std::thread;

use crowdbench_core::scoring::{
    comprehensive_score, BatchMetrics, ScoreBreakdown, ScoringConfig, ScoringError,
};
use crowdbench_core::sim::{
    episode_seed, generate_scenario, min_separation, DensityPreset, ScenarioConfig, SimError,
    Terminal, WorldState,
};
use crowdbench_core::trajmetric::{discontinuity_ratio, SmoothnessConfig, Trajectory};
use crowdbench_core::Vec2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::driver::{EpisodePolicy, PolicySpec};
use crate::external::ExternalPolicyFailure;

/// A batch aborts once this many episodes in a row fail, so a broken
/// policy command fails fast instead of burning through the whole grid.
pub const MAX_CONSECUTIVE_FAILURES: u32 = 25;

/// Everything needed to run and score a batch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSpec {
    pub scenario: ScenarioConfig,
    pub policy: PolicySpec,
    pub episodes_per_seed: u32,
    pub seeds: Vec<u64>,
    pub scoring: ScoringConfig,
    pub smoothness: SmoothnessConfig,
}

impl RunSpec {
    /// Default batch for a density preset: seeds 0–9, 500 episodes per
    /// seed, scoring thresholds matched to the density.
    pub fn for_preset(preset: DensityPreset, policy: PolicySpec) -> Self {
        let (scenario, scoring) = match preset {
            DensityPreset::Low => (ScenarioConfig::low_density(), ScoringConfig::low_density()),
            DensityPreset::High => (ScenarioConfig::high_density(), ScoringConfig::high_density()),
        };
        RunSpec {
            scenario,
            policy,
            episodes_per_seed: 500,
            seeds: (0..10).collect(),
            scoring,
            smoothness: SmoothnessConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        if self.episodes_per_seed == 0 {
            return Err(BenchError::InvalidSpec("episodes_per_seed must be at least 1"));
        }
        if self.seeds.is_empty() {
            return Err(BenchError::InvalidSpec("seeds must not be empty"));
        }
        let mut sorted = self.seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.seeds.len() {
            return Err(BenchError::InvalidSpec("seeds must be distinct"));
        }
        if !(self.smoothness.tau.is_finite() && self.smoothness.tau > 0.0) {
            return Err(BenchError::InvalidSpec("smoothness tau must be positive"));
        }
        if !(self.smoothness.eps_len.is_finite() && self.smoothness.eps_len > 0.0) {
            return Err(BenchError::InvalidSpec("smoothness eps_len must be positive"));
        }
        self.scenario.validate()?;
        self.scoring.validate()?;
        Ok(())
    }

    /// Total number of episodes in the grid.
    pub fn total_episodes(&self) -> u64 {
        self.seeds.len() as u64 * self.episodes_per_seed as u64
    }
}

/// Errors from batch execution.
#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("invalid run specification: {0}")]
    InvalidSpec(&'static str),
    #[error("every episode in the batch failed; nothing to aggregate")]
    EmptyBatch,
    #[error(transparent)]
    Policy(#[from] ExternalPolicyFailure),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Scoring(#[from] ScoringError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("failed to build worker pool: {0}")]
    WorkerPool(#[from] rayon::ThreadPoolBuildError),
}

/// How an episode ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Success,
    Collision,
    Timeout,
}

/// Per-episode results, the unit the aggregate metrics are built from.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRecord {
    pub seed: u64,
    pub index: u32,
    pub outcome: Outcome,
    /// Wall-clock simulation time at termination, s.
    pub nav_time: f64,
    /// Smallest robot–human surface separation seen in the episode, m.
    /// Negative on collision; infinite when no human was ever present.
    pub min_sep: f64,
    /// Steps whose separation fell in `[0, 0.5)` m.
    pub discomfort_steps: u64,
    pub total_steps: u64,
    /// Curvature-discontinuity ratio of the robot path, absent when the
    /// episode ended with fewer than four trail points.
    pub cdr: Option<f64>,
    /// Robot positions, one per step plus the start.
    pub trajectory: Vec<Vec2>,
}

/// One line of the trajectory log: world state after a step, plus the
/// rewards that step earned. The first line of each episode is the
/// initial state with zero rewards.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogStep {
    pub ep: u64,
    pub t: f64,
    pub robot: [f64; 2],
    pub humans: Vec<[f64; 2]>,
    pub r_base: f64,
    pub r_shape: f64,
    pub d: f64,
}

fn log_line(ep: u64, world: &WorldState, r_base: f64, r_shape: f64, d: f64) -> LogStep {
    LogStep {
        ep,
        t: world.time,
        robot: [world.robot.position.x, world.robot.position.y],
        humans: world
            .humans
            .iter()
            .map(|h| [h.position.x, h.position.y])
            .collect(),
        r_base,
        r_shape,
        d,
    }
}

/// Runs episode `index` of `seed` to termination. `ep` is the global
/// episode ordinal stamped on log lines.
pub fn run_episode(
    spec: &RunSpec,
    ep: u64,
    seed: u64,
    index: u32,
) -> Result<(EpisodeRecord, Vec<LogStep>), BenchError> {
    let mut world = generate_scenario(&spec.scenario, episode_seed(seed, index as u64))?;
    let mut policy = EpisodePolicy::create(&spec.policy, &spec.scenario)?;
    let mut min_sep = min_separation(&world);
    let mut discomfort_steps = 0u64;
    let mut log = Vec::new();
    log.push(log_line(ep, &world, 0.0, 0.0, min_sep));
    loop {
        let obs = world.observe();
        let action = policy.decide(&obs)?;
        let out = world.step(action)?;
        if out.d_min < min_sep {
            min_sep = out.d_min;
        }
        if (0.0..0.5).contains(&out.d_min) {
            discomfort_steps += 1;
        }
        log.push(log_line(ep, &world, out.reward_base, out.reward_shaping, out.d_min));
        if out.terminal != Terminal::None {
            break;
        }
    }
    let outcome = match world.terminal {
        Terminal::Goal => Outcome::Success,
        Terminal::Collision => Outcome::Collision,
        Terminal::Timeout => Outcome::Timeout,
        Terminal::None => unreachable!("episode loop exits only on a terminal step"),
    };
    let cdr = if world.trail.len() >= 4 {
        let traj = Trajectory::new(world.trail.clone(), spec.scenario.dt);
        Some(
            discontinuity_ratio(&traj, &spec.smoothness)
                .expect("trail length was checked above"),
        )
    } else {
        None
    };
    Ok((
        EpisodeRecord {
            seed,
            index,
            outcome,
            nav_time: world.time,
            min_sep,
            discomfort_steps,
            total_steps: world.steps as u64,
            cdr,
            trajectory: world.trail.clone(),
        },
        log,
    ))
}

/// Runs the whole grid on `workers` threads.
///
/// Returns the surviving episode records in episode order plus the
/// count of excluded (failed) episodes. When `log` is given, every
/// episode's log lines are streamed to it, also in episode order, so
/// the bytes written are independent of the worker count. A failed
/// episode contributes nothing to either output; it is reported on
/// stderr and counted. A run of [`MAX_CONSECUTIVE_FAILURES`] failures
/// aborts the batch with the last error.
pub fn run_batch(
    spec: &RunSpec,
    workers: usize,
    mut log: Option<&mut dyn Write>,
) -> Result<(Vec<EpisodeRecord>, u64), BenchError> {
    spec.validate()?;
    let total = spec.total_episodes();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()?;
    let abort = AtomicBool::new(false);
    let (tx, rx) = mpsc::channel();

    let mut records = Vec::with_capacity(total as usize);
    let mut excluded = 0u64;
    let mut consecutive_failures = 0u32;
    let mut fatal: Option<BenchError> = None;

    thread::scope(|s| {
        let abort = &abort;
        s.spawn(move || {
            pool.install(|| {
                (0..total).into_par_iter().for_each_with(tx, |tx, ep| {
                    if abort.load(Ordering::Relaxed) {
                        return;
                    }
                    let seed = spec.seeds[(ep / spec.episodes_per_seed as u64) as usize];
                    let index = (ep % spec.episodes_per_seed as u64) as u32;
                    let _ = tx.send((ep, run_episode(spec, ep, seed, index)));
                });
            });
        });

        let mut pending = BTreeMap::new();
        let mut next = 0u64;
        'drain: while next < total {
            let Ok((ep, outcome)) = rx.recv() else {
                break;
            };
            pending.insert(ep, outcome);
            while let Some(outcome) = pending.remove(&next) {
                let ep = next;
                next += 1;
                match outcome {
                    Ok((record, steps)) => {
                        consecutive_failures = 0;
                        if let Some(w) = log.as_mut() {
                            for step in &steps {
                                let line = serde_json::to_string(step)
                                    .expect("log steps serialize");
                                if let Err(e) = writeln!(w, "{line}") {
                                    fatal = Some(e.into());
                                    abort.store(true, Ordering::Relaxed);
                                    break 'drain;
                                }
                            }
                        }
                        records.push(record);
                    }
                    Err(err) => {
                        excluded += 1;
                        consecutive_failures += 1;
                        eprintln!("warning: episode {ep} failed and is excluded: {err}");
                        if consecutive_failures >= MAX_CONSECUTIVE_FAILURES {
                            fatal = Some(err);
                            abort.store(true, Ordering::Relaxed);
                            break 'drain;
                        }
                    }
                }
            }
        }
        drop(rx);
    });

    if let Some(err) = fatal {
        return Err(err);
    }
    Ok((records, excluded))
}

/// Aggregate metrics of a set of episode records.
///
/// Rates are fractions of the episode count. Navigation time averages
/// successful episodes only (0 when none succeeded). The discomfort
/// rate pools steps across episodes; minimum separation averages the
/// per-episode minima, collisions included. The discontinuity ratio
/// averages the episodes where it is defined (0 when none).
pub fn batch_metrics(records: &[&EpisodeRecord]) -> BatchMetrics {
    let n = records.len() as f64;
    let count = |o: Outcome| records.iter().filter(|r| r.outcome == o).count() as f64;
    let successes: Vec<f64> = records
        .iter()
        .filter(|r| r.outcome == Outcome::Success)
        .map(|r| r.nav_time)
        .collect();
    let at = if successes.is_empty() {
        0.0
    } else {
        successes.iter().sum::<f64>() / successes.len() as f64
    };
    let total_steps: u64 = records.iter().map(|r| r.total_steps).sum();
    let discomfort_steps: u64 = records.iter().map(|r| r.discomfort_steps).sum();
    let dr = if total_steps > 0 {
        discomfort_steps as f64 / total_steps as f64
    } else {
        0.0
    };
    let md = records.iter().map(|r| r.min_sep).sum::<f64>() / n;
    let cdrs: Vec<f64> = records.iter().filter_map(|r| r.cdr).collect();
    let cdr = if cdrs.is_empty() {
        0.0
    } else {
        cdrs.iter().sum::<f64>() / cdrs.len() as f64
    };
    BatchMetrics {
        sr: count(Outcome::Success) / n,
        cr: count(Outcome::Collision) / n,
        tr: count(Outcome::Timeout) / n,
        at,
        dr,
        md,
        cdr,
    }
}

/// One seed's share of the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedReport {
    pub seed: u64,
    /// Episodes that survived exclusion for this seed.
    pub episodes: u64,
    pub metrics: BatchMetrics,
    pub scores: ScoreBreakdown,
}

/// Population standard deviation of each metric (and the comprehensive
/// score) across the per-seed values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StddevSummary {
    pub sr: f64,
    pub cr: f64,
    pub tr: f64,
    pub at: f64,
    pub dr: f64,
    pub md: f64,
    pub cdr: f64,
    pub comprehensive: f64,
}

/// The full benchmark report, as written to `report.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub per_seed: Vec<SeedReport>,
    pub pooled: BatchMetrics,
    pub scores: ScoreBreakdown,
    pub stddev: StddevSummary,
    pub excluded_episodes: u64,
    pub config: RunSpec,
}

fn population_stddev(values: impl Iterator<Item = f64>) -> f64 {
    let values: Vec<f64> = values.collect();
    if values.is_empty() {
        return 0.0;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    var.sqrt()
}

/// Builds the report from episode records.
///
/// Records are grouped by their position in `spec.seeds`; order within
/// the input does not matter. Seeds whose episodes were all excluded are
/// dropped from the per-seed list (and the dispersion summary), but the
/// batch errors if nothing at all survived.
pub fn aggregate(
    records: &[EpisodeRecord],
    spec: &RunSpec,
    excluded_episodes: u64,
) -> Result<AggregateReport, BenchError> {
    spec.validate()?;
    if records.is_empty() {
        return Err(BenchError::EmptyBatch);
    }
    let mut by_seed: Vec<Vec<&EpisodeRecord>> = vec![Vec::new(); spec.seeds.len()];
    for record in records {
        let position = spec
            .seeds
            .iter()
            .position(|&s| s == record.seed)
            .ok_or(BenchError::InvalidSpec("record seed missing from spec.seeds"))?;
        by_seed[position].push(record);
    }
    for group in &mut by_seed {
        group.sort_by_key(|r| r.index);
    }

    let mut per_seed = Vec::new();
    for (position, group) in by_seed.iter().enumerate() {
        if group.is_empty() {
            continue;
        }
        let metrics = batch_metrics(group);
        per_seed.push(SeedReport {
            seed: spec.seeds[position],
            episodes: group.len() as u64,
            metrics,
            scores: comprehensive_score(&metrics, &spec.scoring)?,
        });
    }

    let all: Vec<&EpisodeRecord> = by_seed.iter().flatten().copied().collect();
    let pooled = batch_metrics(&all);
    let scores = comprehensive_score(&pooled, &spec.scoring)?;
    let of = |f: fn(&SeedReport) -> f64| population_stddev(per_seed.iter().map(f));
    let stddev = StddevSummary {
        sr: of(|s| s.metrics.sr),
        cr: of(|s| s.metrics.cr),
        tr: of(|s| s.metrics.tr),
        at: of(|s| s.metrics.at),
        dr: of(|s| s.metrics.dr),
        md: of(|s| s.metrics.md),
        cdr: of(|s| s.metrics.cdr),
        comprehensive: of(|s| s.scores.comprehensive),
    };
    Ok(AggregateReport {
        per_seed,
        pooled,
        scores,
        stddev,
        excluded_episodes,
        config: spec.clone(),
    })
}

/// Runs the grid and aggregates it in one call.
pub fn run(
    spec: &RunSpec,
    workers: usize,
    log: Option<&mut dyn Write>,
) -> Result<AggregateReport, BenchError> {
    let (records, excluded) = run_batch(spec, workers, log)?;
    aggregate(&records, spec, excluded)
}
