//! Command-line interface.
//!
//! Exit codes: 0 on success, 2 for configuration problems (bad flags,
//! unreadable or invalid config files, too-short trajectories), 3 for
//! policy failures (spawn, protocol, timeout), 1 for other runtime
//! errors. Stdout carries data; stderr carries diagnostics.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufWriter, Write as _};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use crowdbench_core::scoring::{
    comprehensive_from_subscores, comprehensive_score, ScoreBreakdown, ScoringConfig,
};
use crowdbench_core::sim::{
    DensityPreset, Observation, ObservedHuman, RobotState, ScenarioConfig, SimError,
};
use crowdbench_core::trajmetric::{
    curvature_windows, discontinuity_ratio, SmoothnessConfig, DEFAULT_TAU,
};
use crowdbench_core::Vec2;

use crate::bench::{run, BenchError, RunSpec};
use crate::driver::PolicySpec;
use crate::external::ExternalPolicy;
use crate::ingest::{self, PlotStep, ScoreInput};
use crate::plot::episode_svg;
use crate::report::{markdown_table, report_csv, report_json};

/// Crowd-navigation benchmark: simulate, score, and inspect.
#[derive(Debug, Parser)]
#[command(name = "crowdbench", version)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a benchmark batch and write report and trajectory files
    Run(RunArgs),
    /// Score a metrics or sub-score record
    Score(ScoreArgs),
    /// Print the per-window curvature analysis of a trajectory CSV
    Metric(MetricArgs),
    /// Render one logged episode to SVG
    Plot(PlotArgs),
    /// Check an external policy command against the wire protocol
    #[command(name = "protocol-check")]
    ProtocolCheck(ProtocolArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PresetArg {
    Low,
    High,
}

fn parse_policy(s: &str) -> Result<PolicySpec, String> {
    s.parse()
}

fn parse_point(s: &str) -> Result<Vec2, String> {
    let (x, y) = s
        .split_once(',')
        .ok_or_else(|| format!("expected `x,y`, got `{s}`"))?;
    let parse = |v: &str| {
        v.trim()
            .parse::<f64>()
            .map_err(|e| format!("bad coordinate `{v}`: {e}"))
    };
    Ok(Vec2::new(parse(x)?, parse(y)?))
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Scenario preset
    #[arg(long, value_enum, default_value = "low")]
    preset: PresetArg,
    /// Scenario config file (JSON); takes precedence over --preset
    #[arg(long)]
    config: Option<PathBuf>,
    /// Scoring config file (JSON); default matches the scenario density
    #[arg(long)]
    scoring: Option<PathBuf>,
    /// Robot policy: greedy, orca, sfm, or external:<command>
    #[arg(long, default_value = "orca", value_parser = parse_policy)]
    policy: PolicySpec,
    /// Number of seeds; the batch runs seeds 0..N
    #[arg(long, default_value_t = 10)]
    seeds: u64,
    /// Episodes per seed
    #[arg(long, default_value_t = 500)]
    episodes: u32,
    /// Worker threads; defaults to available parallelism
    #[arg(long)]
    workers: Option<usize>,
    /// Curvature-jump threshold for the discontinuity metric, 1/m
    #[arg(long)]
    tau: Option<f64>,
    /// Reward-shaping activation threshold in (0, 1)
    #[arg(long)]
    tau_c: Option<f64>,
    /// Reward-shaping magnitude scale
    #[arg(long)]
    lambda: Option<f64>,
    /// Reward-shaping weight
    #[arg(long)]
    w_smooth: Option<f64>,
    /// Disable reward shaping
    #[arg(long)]
    no_shaping: bool,
    /// Output directory
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ScoreArgs {
    /// Metrics record: an inline JSON object (metrics or sub-scores),
    /// a JSON file, or a CSV with a header row naming the metric fields
    metrics: String,
    /// Scoring config file (JSON)
    #[arg(long)]
    scoring: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct MetricArgs {
    /// Trajectory CSV with header t,x,y
    trajectory: PathBuf,
    /// Curvature-jump threshold, 1/m
    #[arg(long, default_value_t = DEFAULT_TAU)]
    tau: f64,
}

#[derive(Debug, Args)]
struct PlotArgs {
    /// Trajectory log (JSONL) written by `run`
    log: PathBuf,
    /// Episode ordinal to render
    #[arg(long)]
    ep: u64,
    /// Output SVG path
    #[arg(long)]
    out: PathBuf,
    /// Goal position `x,y` for the goal marker (default: path end)
    #[arg(long, value_parser = parse_point)]
    goal: Option<Vec2>,
}

#[derive(Debug, Args)]
struct ProtocolArgs {
    /// Policy command to check (whitespace-split)
    command: String,
}

#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn config(message: impl Into<String>) -> Self {
        Failure { code: 2, message: message.into() }
    }

    fn policy(message: impl Into<String>) -> Self {
        Failure { code: 3, message: message.into() }
    }

    fn runtime(message: impl Into<String>) -> Self {
        Failure { code: 1, message: message.into() }
    }
}

fn bench_failure(err: BenchError) -> Failure {
    let code = match &err {
        BenchError::Policy(_) | BenchError::EmptyBatch => 3,
        BenchError::InvalidSpec(_)
        | BenchError::Scoring(_)
        | BenchError::Sim(SimError::InvalidConfig(_)) => 2,
        _ => 1,
    };
    Failure { code, message: err.to_string() }
}

/// Parses the process arguments and runs the selected subcommand.
pub fn main() -> ExitCode {
    dispatch(Cli::parse())
}

/// Runs a parsed invocation; exposed for in-process testing.
pub fn dispatch(cli: Cli) -> ExitCode {
    let result = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Score(args) => cmd_score(args),
        Command::Metric(args) => cmd_metric(args),
        Command::Plot(args) => cmd_plot(args),
        Command::ProtocolCheck(args) => cmd_protocol_check(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}

fn build_run_spec(args: &RunArgs) -> Result<RunSpec, Failure> {
    let mut scenario = match &args.config {
        Some(path) => {
            ingest::read_scenario_config(path).map_err(|e| Failure::config(format!("{e:#}")))?
        }
        None => match args.preset {
            PresetArg::Low => ScenarioConfig::low_density(),
            PresetArg::High => ScenarioConfig::high_density(),
        },
    };
    let scoring = match &args.scoring {
        Some(path) => {
            ingest::read_scoring_config(path).map_err(|e| Failure::config(format!("{e:#}")))?
        }
        None => match scenario.density_preset {
            DensityPreset::Low => ScoringConfig::low_density(),
            DensityPreset::High => ScoringConfig::high_density(),
        },
    };
    let mut smoothness = SmoothnessConfig::default();
    if let Some(tau) = args.tau {
        smoothness.tau = tau;
    }
    if let Some(tau_c) = args.tau_c {
        scenario.shaping.tau_c = tau_c;
    }
    if let Some(lambda) = args.lambda {
        scenario.shaping.lambda = lambda;
    }
    if let Some(w_smooth) = args.w_smooth {
        scenario.shaping.w_smooth = w_smooth;
    }
    if args.no_shaping {
        scenario.shaping.enabled = false;
    }
    let spec = RunSpec {
        scenario,
        policy: args.policy.clone(),
        episodes_per_seed: args.episodes,
        seeds: (0..args.seeds).collect(),
        scoring,
        smoothness,
    };
    spec.validate().map_err(bench_failure)?;
    Ok(spec)
}

fn cmd_run(args: RunArgs) -> Result<(), Failure> {
    let spec = build_run_spec(&args)?;
    let workers = args.workers.unwrap_or_else(|| {
        std::thread::available_parallelism().map_or(1, |n| n.get())
    });
    fs::create_dir_all(&args.out).map_err(|e| {
        Failure::runtime(format!("cannot create output directory {}: {e}", args.out.display()))
    })?;
    let log_path = args.out.join("trajectories.jsonl");
    let file = File::create(&log_path)
        .map_err(|e| Failure::runtime(format!("cannot create {}: {e}", log_path.display())))?;
    let mut writer = BufWriter::new(file);
    let report = run(&spec, workers, Some(&mut writer)).map_err(bench_failure)?;
    writer
        .flush()
        .map_err(|e| Failure::runtime(format!("cannot write {}: {e}", log_path.display())))?;
    drop(writer);
    let json_path = args.out.join("report.json");
    fs::write(&json_path, report_json(&report))
        .map_err(|e| Failure::runtime(format!("cannot write {}: {e}", json_path.display())))?;
    let csv_path = args.out.join("report.csv");
    fs::write(&csv_path, report_csv(&report))
        .map_err(|e| Failure::runtime(format!("cannot write {}: {e}", csv_path.display())))?;
    print!("{}", markdown_table(&report));
    if report.excluded_episodes > 0 {
        eprintln!(
            "note: {} episode(s) failed and were excluded from the report",
            report.excluded_episodes
        );
    }
    eprintln!(
        "wrote {}, {}, {}",
        json_path.display(),
        csv_path.display(),
        log_path.display()
    );
    Ok(())
}

fn score_table(b: &ScoreBreakdown) -> String {
    let rows = [
        ("comprehensive", b.comprehensive),
        ("F_saf", b.f_saf),
        ("F_suc", b.f_suc),
        ("F_comf", b.f_comf),
        ("F_traj", b.f_traj),
        ("F_effic", b.f_effic),
    ];
    let width = rows.iter().map(|(name, _)| name.len()).max().unwrap_or(0);
    let mut out = String::new();
    for (name, value) in rows {
        let _ = writeln!(out, "{name:<width$}  {value:.3}");
    }
    out
}

fn cmd_score(args: ScoreArgs) -> Result<(), Failure> {
    let input =
        ingest::resolve_score_input(&args.metrics).map_err(|e| Failure::config(format!("{e:#}")))?;
    let cfg = match &args.scoring {
        Some(path) => {
            ingest::read_scoring_config(path).map_err(|e| Failure::config(format!("{e:#}")))?
        }
        None => ScoringConfig::default(),
    };
    let breakdown = match input {
        ScoreInput::Metrics(metrics) => comprehensive_score(&metrics, &cfg),
        ScoreInput::Subscores(s) => {
            comprehensive_from_subscores(s.f_saf, s.f_suc, s.f_comf, s.f_traj, s.f_effic, &cfg)
                .map(|comprehensive| ScoreBreakdown {
                    f_saf: s.f_saf,
                    f_suc: s.f_suc,
                    f_comf: s.f_comf,
                    f_traj: s.f_traj,
                    f_effic: s.f_effic,
                    comprehensive,
                    efficiency_degenerate: false,
                })
        }
    }
    .map_err(|e| Failure::config(e.to_string()))?;
    println!(
        "{}",
        serde_json::to_string_pretty(&breakdown).expect("breakdown serializes")
    );
    println!();
    print!("{}", score_table(&breakdown));
    Ok(())
}

fn cmd_metric(args: MetricArgs) -> Result<(), Failure> {
    let traj =
        ingest::read_trajectory_csv(&args.trajectory).map_err(|e| Failure::config(format!("{e:#}")))?;
    let cfg = SmoothnessConfig { tau: args.tau, ..SmoothnessConfig::default() };
    let windows = curvature_windows(&traj, &cfg).map_err(|e| Failure::config(e.to_string()))?;
    println!("window,kappa1,kappa2,delta,discontinuous");
    for w in &windows {
        let flag = !w.degenerate && w.delta >= cfg.tau;
        println!("{},{},{},{},{}", w.start, w.kappa1, w.kappa2, w.delta, flag);
    }
    let ratio = discontinuity_ratio(&traj, &cfg).expect("window count checked above");
    println!("M_cdr,{ratio}");
    Ok(())
}

fn cmd_plot(args: PlotArgs) -> Result<(), Failure> {
    let steps = ingest::read_log_steps(&args.log).map_err(|e| Failure::config(format!("{e:#}")))?;
    let episode: Vec<PlotStep> = steps.into_iter().filter(|s| s.ep == args.ep).collect();
    if episode.is_empty() {
        return Err(Failure::config(format!(
            "episode {} not found in {}",
            args.ep,
            args.log.display()
        )));
    }
    let svg = episode_svg(&episode, args.goal);
    fs::write(&args.out, svg)
        .map_err(|e| Failure::runtime(format!("cannot write {}: {e}", args.out.display())))?;
    eprintln!("wrote {}", args.out.display());
    Ok(())
}

fn synthetic_observations() -> [Observation; 3] {
    let robot = RobotState {
        position: Vec2::new(0.0, -4.0),
        velocity: Vec2::ZERO,
        goal: Vec2::new(0.0, 4.0),
        v_max: 1.0,
        theta: core::f64::consts::FRAC_PI_2,
        radius: 0.3,
    };
    [
        Observation { time: 0.0, robot, humans: vec![] },
        Observation {
            time: 0.25,
            robot: RobotState {
                position: Vec2::new(0.0, -3.75),
                velocity: Vec2::new(0.0, 1.0),
                ..robot
            },
            humans: vec![ObservedHuman { position: Vec2::new(1.0, 0.0), radius: 0.3 }],
        },
        Observation {
            time: 0.5,
            robot: RobotState {
                position: Vec2::new(0.0, -3.5),
                velocity: Vec2::new(0.0, 1.0),
                ..robot
            },
            humans: vec![
                ObservedHuman { position: Vec2::new(1.0, 0.0), radius: 0.3 },
                ObservedHuman { position: Vec2::new(-1.5, -2.0), radius: 0.3 },
            ],
        },
    ]
}

fn cmd_protocol_check(args: ProtocolArgs) -> Result<(), Failure> {
    let cfg = ScenarioConfig::low_density();
    let mut policy = ExternalPolicy::spawn(&args.command, cfg.dt, cfg.time_limit)
        .map_err(|e| Failure::policy(e.to_string()))?;
    let observations = synthetic_observations();
    for (i, obs) in observations.iter().enumerate() {
        let action = policy
            .decide(obs)
            .map_err(|e| Failure::policy(format!("step {}: {e}", i + 1)))?;
        println!("step {}: reply ({:.3}, {:.3})", i + 1, action.vx, action.vy);
    }
    println!(
        "protocol check passed: handshake and {} step replies",
        observations.len()
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(args).unwrap()
    }

    #[test]
    fn run_flags_parse_into_a_spec() {
        let cli = parse(&[
            "crowdbench", "run", "--preset", "high", "--policy", "sfm", "--seeds", "2",
            "--episodes", "3", "--tau", "0.5", "--tau-c", "0.4", "--lambda", "0.9",
            "--w-smooth", "0.1", "--out", "/tmp/x",
        ]);
        let Command::Run(args) = cli.command else { panic!("expected run") };
        let spec = build_run_spec(&args).unwrap();
        assert_eq!(spec.policy, PolicySpec::Sfm);
        assert_eq!(spec.seeds, vec![0, 1]);
        assert_eq!(spec.episodes_per_seed, 3);
        assert_eq!(spec.scenario.n_humans, 20);
        assert!((spec.scoring.tau_s - 0.1).abs() < 1e-12);
        assert!((spec.smoothness.tau - 0.5).abs() < 1e-12);
        assert!((spec.scenario.shaping.tau_c - 0.4).abs() < 1e-12);
        assert!((spec.scenario.shaping.lambda - 0.9).abs() < 1e-12);
        assert!((spec.scenario.shaping.w_smooth - 0.1).abs() < 1e-12);
        assert!(spec.scenario.shaping.enabled);
    }

    #[test]
    fn no_shaping_disables_shaping() {
        let cli = parse(&["crowdbench", "run", "--no-shaping", "--seeds", "1", "--episodes", "1"]);
        let Command::Run(args) = cli.command else { panic!("expected run") };
        let spec = build_run_spec(&args).unwrap();
        assert!(!spec.scenario.shaping.enabled);
        assert_eq!(spec.policy, PolicySpec::Orca);
        assert_eq!(spec.scenario.n_humans, 5);
    }

    #[test]
    fn bad_policy_strings_are_rejected_at_parse_time() {
        assert!(Cli::try_parse_from(["crowdbench", "run", "--policy", "dwa"]).is_err());
        assert!(Cli::try_parse_from(["crowdbench", "run", "--policy", "external:"]).is_err());
    }

    #[test]
    fn external_policy_round_trips_through_flags() {
        let cli = parse(&["crowdbench", "run", "--policy", "external:./pol --fast"]);
        let Command::Run(args) = cli.command else { panic!("expected run") };
        assert_eq!(args.policy, PolicySpec::External("./pol --fast".into()));
    }

    #[test]
    fn zero_seeds_is_a_config_error() {
        let cli = parse(&["crowdbench", "run", "--seeds", "0"]);
        let Command::Run(args) = cli.command else { panic!("expected run") };
        let failure = build_run_spec(&args).unwrap_err();
        assert_eq!(failure.code, 2);
    }

    #[test]
    fn goal_points_parse() {
        assert_eq!(parse_point("1.5,-2").unwrap(), Vec2::new(1.5, -2.0));
        assert!(parse_point("1.5").is_err());
        assert!(parse_point("a,b").is_err());
    }
}
