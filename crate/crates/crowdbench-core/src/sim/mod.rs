//! Deterministic 2D crowd-navigation environment.
//!
//! A holonomic robot crosses a circle of simulated pedestrians. Humans
//! steer by ORCA or social forces toward goals on the circle, re-drawing
//! a goal on arrival and occasionally at random. By default humans do not
//! react to the robot at all, so the robot cannot learn to rely on people
//! yielding. Episodes end on collision, goal arrival, or timeout.
//!
//! Everything is a pure function of the scenario configuration, the seed,
//! and the action sequence: identical inputs give bitwise-identical
//! worlds, observations, and rewards.

pub mod orca;
pub mod sfm;

use alloc::vec::Vec;
use core::fmt;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::trajmetric::{discrete_curvature, smoothness_penalty, DEFAULT_EPS_LEN};
use crate::vec2::Vec2;

pub use orca::{orca_velocity, OrcaParams};
pub use sfm::{sfm_velocity, SfmParams};

/// Position, velocity, and body radius of any circular agent, as consumed
/// by the velocity solvers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentKinematics {
    pub position: Vec2,
    pub velocity: Vec2,
    pub radius: f64,
}

/// The robot's full state. Heading is informational only: the platform is
/// holonomic and moves in any direction regardless of `theta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobotState {
    pub position: Vec2,
    pub velocity: Vec2,
    pub goal: Vec2,
    pub v_max: f64,
    pub theta: f64,
    pub radius: f64,
}

/// Steering model of a simulated pedestrian.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HumanPolicyKind {
    Orca,
    Sfm,
}

/// Ground-truth state of one simulated pedestrian.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HumanAgent {
    pub position: Vec2,
    pub velocity: Vec2,
    pub goal: Vec2,
    pub pref_speed: f64,
    pub radius: f64,
    pub policy: HumanPolicyKind,
}

impl HumanAgent {
    #[inline]
    pub fn kinematics(&self) -> AgentKinematics {
        AgentKinematics {
            position: self.position,
            velocity: self.velocity,
            radius: self.radius,
        }
    }
}

/// What the robot can see of one human: position and size, but neither
/// velocity nor goal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObservedHuman {
    pub position: Vec2,
    pub radius: f64,
}

/// One observation: the robot's own state in full, plus every human
/// within sensing range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub time: f64,
    pub robot: RobotState,
    pub humans: Vec<ObservedHuman>,
}

/// A commanded velocity in m/s. Commands faster than the robot's maximum
/// speed are scaled down, direction preserved; non-finite commands are
/// treated as zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Action {
    pub vx: f64,
    pub vy: f64,
}

impl Action {
    pub const STOP: Action = Action { vx: 0.0, vy: 0.0 };

    pub fn new(vx: f64, vy: f64) -> Self {
        Action { vx, vy }
    }

    #[inline]
    pub fn velocity(self) -> Vec2 {
        Vec2::new(self.vx, self.vy)
    }

    pub fn from_velocity(v: Vec2) -> Self {
        Action { vx: v.x, vy: v.y }
    }
}

/// Which scenario family a configuration came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DensityPreset {
    Low,
    High,
}

/// Curvature-based reward shaping settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ShapingConfig {
    pub enabled: bool,
    /// Scale of the smoothness penalty.
    pub lambda: f64,
    /// Activation threshold of the penalty, in mapped units (see
    /// [`crate::trajmetric::smoothness_penalty`]).
    pub tau_c: f64,
    /// Weight of the penalty in the total reward.
    pub w_smooth: f64,
}

impl Default for ShapingConfig {
    fn default() -> Self {
        ShapingConfig {
            enabled: true,
            lambda: 1.0,
            tau_c: 0.5,
            w_smooth: 0.2,
        }
    }
}

/// ORCA settings. `time_horizon` and `neighbor_dist` are shared by every
/// ORCA-driven agent; per-agent speed limits come from the agent itself.
/// `safety_margin` and `responsibility` apply to the robot's planner
/// only: humans reciprocate with each other and keep just the small
/// fixed [`HUMAN_MUTUAL_BUFFER`], while the robot dodges people who
/// never dodge back. The wide default margin makes the planner treat
/// crossing lanes as occupied corridors and wait for them to clear
/// instead of skimming along their edge, which is what keeps it
/// collision-free without any cooperation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OrcaTuning {
    pub time_horizon: f64,
    pub neighbor_dist: f64,
    /// Robot-side extra clearance around humans, in meters.
    pub safety_margin: f64,
    /// Robot-side share of the avoidance effort, in (0, 1].
    pub responsibility: f64,
}

impl Default for OrcaTuning {
    fn default() -> Self {
        OrcaTuning {
            time_horizon: 5.0,
            neighbor_dist: 10.0,
            safety_margin: 0.8,
            responsibility: 0.5,
        }
    }
}

/// Mutual clearance (m) every ORCA human keeps from its peers.
///
/// Reciprocal avoidance is collision-free only under continuous
/// replanning; with a fixed step, a crowded pinch can make the velocity
/// program infeasible and its least-violating fallback may graze by a
/// fraction of a millimeter. This buffer absorbs that discretization
/// error while staying far too small to change crowd behavior.
pub const HUMAN_MUTUAL_BUFFER: f64 = 0.05;

/// Social-force settings shared by every SFM-driven human and by the
/// SFM robot planner.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SfmTuning {
    pub relaxation_time: f64,
    pub repulsion_strength: f64,
    pub repulsion_range: f64,
}

impl Default for SfmTuning {
    fn default() -> Self {
        let d = SfmParams::default();
        SfmTuning {
            relaxation_time: d.relaxation_time,
            repulsion_strength: d.repulsion_strength,
            repulsion_range: d.repulsion_range,
        }
    }
}

/// Full scenario description. `low_density` and `high_density` build the
/// two standard presets; JSON configuration files mirror these field
/// names and may override any subset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    pub density_preset: DensityPreset,
    pub n_humans: usize,
    /// Radius (m) of the circle humans spawn on and draw goals from.
    pub circle_radius: f64,
    pub dt: f64,
    pub time_limit: f64,
    pub sensing_range: f64,
    pub robot_start: Vec2,
    pub robot_goal: Vec2,
    pub v_max: f64,
    pub robot_radius: f64,
    pub human_radius: f64,
    pub human_pref_speed: f64,
    pub human_policy: HumanPolicyKind,
    /// Per-step probability that a human re-draws its goal.
    pub goal_switch_prob: f64,
    /// When true (the default), humans ignore the robot entirely.
    pub invisible_robot: bool,
    /// When true, separation is minimized in closed form over the whole
    /// step interval instead of only at its endpoints.
    pub continuous_separation: bool,
    pub shaping: ShapingConfig,
    pub orca: OrcaTuning,
    pub sfm: SfmTuning,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig::low_density()
    }
}

impl ScenarioConfig {
    /// Five humans on a 4 m circle.
    pub fn low_density() -> Self {
        ScenarioConfig {
            density_preset: DensityPreset::Low,
            n_humans: 5,
            circle_radius: 4.0,
            dt: 0.25,
            time_limit: 30.0,
            sensing_range: 5.0,
            robot_start: Vec2::new(0.0, -4.0),
            robot_goal: Vec2::new(0.0, 4.0),
            v_max: 1.0,
            robot_radius: 0.3,
            human_radius: 0.3,
            human_pref_speed: 1.0,
            human_policy: HumanPolicyKind::Orca,
            goal_switch_prob: 0.005,
            invisible_robot: true,
            continuous_separation: false,
            shaping: ShapingConfig::default(),
            orca: OrcaTuning::default(),
            sfm: SfmTuning::default(),
        }
    }

    /// Twenty humans on a 6 m circle; the robot's route is unchanged.
    pub fn high_density() -> Self {
        ScenarioConfig {
            density_preset: DensityPreset::High,
            n_humans: 20,
            circle_radius: 6.0,
            ..ScenarioConfig::low_density()
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        for (name, v) in [
            ("dt", self.dt),
            ("time_limit", self.time_limit),
            ("circle_radius", self.circle_radius),
            ("v_max", self.v_max),
            ("robot_radius", self.robot_radius),
            ("human_radius", self.human_radius),
            ("human_pref_speed", self.human_pref_speed),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(SimError::InvalidConfig(name));
            }
        }
        if !(self.sensing_range.is_finite() && self.sensing_range >= 0.0) {
            return Err(SimError::InvalidConfig("sensing_range"));
        }
        if !(0.0..=1.0).contains(&self.goal_switch_prob) {
            return Err(SimError::InvalidConfig("goal_switch_prob"));
        }
        if !self.robot_start.is_finite() || !self.robot_goal.is_finite() {
            return Err(SimError::InvalidConfig("robot route"));
        }
        let s = &self.shaping;
        if !(s.lambda.is_finite() && s.lambda >= 0.0)
            || !(0.0..=1.0).contains(&s.tau_c)
            || !(s.w_smooth.is_finite() && s.w_smooth >= 0.0)
        {
            return Err(SimError::InvalidConfig("shaping"));
        }
        if !(self.orca.time_horizon > 0.0 && self.orca.neighbor_dist > 0.0)
            || !(self.orca.safety_margin.is_finite() && self.orca.safety_margin >= 0.0)
            || !(self.orca.responsibility > 0.0 && self.orca.responsibility <= 1.0)
        {
            return Err(SimError::InvalidConfig("orca tuning"));
        }
        if !(self.sfm.relaxation_time > 0.0 && self.sfm.repulsion_range > 0.0) {
            return Err(SimError::InvalidConfig("sfm tuning"));
        }
        Ok(())
    }
}

/// How an episode ended, if it has.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Terminal {
    None,
    Goal,
    Collision,
    Timeout,
}

/// Result of advancing the world by one step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub observation: Observation,
    pub reward_base: f64,
    /// Curvature-shaping term; always `<= 0`.
    pub reward_shaping: f64,
    pub reward_total: f64,
    /// Minimum robot-human surface separation over this step's interval.
    pub d_min: f64,
    pub terminal: Terminal,
}

/// Errors from scenario generation and stepping.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimError {
    InvalidConfig(&'static str),
    /// Rejection sampling could not place all humans without overlap.
    PlacementFailure { attempts: u32 },
    SteppedTerminalEpisode,
}

impl fmt::Display for SimError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimError::InvalidConfig(field) => write!(f, "invalid scenario config: {field}"),
            SimError::PlacementFailure { attempts } => {
                write!(f, "could not place humans without overlap after {attempts} attempts")
            }
            SimError::SteppedTerminalEpisode => write!(f, "stepped a terminal episode"),
        }
    }
}

impl core::error::Error for SimError {}

/// Mutable episode state. Create via [`generate_scenario`], advance via
/// [`WorldState::step`]. Not shareable across threads while stepping;
/// distinct episodes are fully independent.
#[derive(Debug, Clone)]
pub struct WorldState {
    pub cfg: ScenarioConfig,
    pub robot: RobotState,
    pub humans: Vec<HumanAgent>,
    pub time: f64,
    pub steps: u32,
    pub terminal: Terminal,
    /// Robot position after every step, starting with the initial one.
    pub trail: Vec<Vec2>,
    rng: ChaCha8Rng,
}

/// Derives the rng seed of episode `index` within a batch seeded by
/// `batch_seed`.
///
/// The mix is fixed so episode streams are portable: one splitmix64-style
/// round over `batch_seed XOR (index * 0x9E3779B97F4A7C15)`:
///
/// ```text
/// z = (batch_seed ^ index * 0x9E3779B97F4A7C15) + 0x9E3779B97F4A7C15
/// z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
/// z = (z ^ (z >> 27)) * 0x94D049BB133111EB
/// episode_seed = z ^ (z >> 31)
/// ```
///
/// (all arithmetic modulo 2^64).
pub fn episode_seed(batch_seed: u64, index: u64) -> u64 {
    const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;
    let mut z = (batch_seed ^ index.wrapping_mul(GOLDEN)).wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Draws a goal uniformly on the scenario circle.
pub fn reassign_goal<R: Rng>(human: &mut HumanAgent, circle_radius: f64, rng: &mut R) {
    let angle = rng.gen::<f64>() * core::f64::consts::TAU;
    human.goal = Vec2::new(circle_radius * libm::cos(angle), circle_radius * libm::sin(angle));
}

/// With probability `p`, re-draws the human's goal on the circle. Always
/// consumes exactly one uniform draw (plus the goal draw when it fires),
/// so the rng stream does not depend on outcomes.
pub fn maybe_switch_goal<R: Rng>(
    human: &mut HumanAgent,
    circle_radius: f64,
    p: f64,
    rng: &mut R,
) {
    if rng.gen::<f64>() < p {
        reassign_goal(human, circle_radius, rng);
    }
}

/// Builds the initial world for `(cfg, seed)`.
///
/// Humans spawn at uniformly random angles on the scenario circle with
/// positional noise of up to half the preferred speed per axis, and their
/// goal is the spawn point mirrored through the circle center. Placement
/// rejects any overlap with already-placed agents (robot included).
pub fn generate_scenario(cfg: &ScenarioConfig, seed: u64) -> Result<WorldState, SimError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let to_goal = cfg.robot_goal - cfg.robot_start;
    let theta = if to_goal.norm() > 1e-9 {
        libm::atan2(to_goal.y, to_goal.x)
    } else {
        0.0
    };
    let robot = RobotState {
        position: cfg.robot_start,
        velocity: Vec2::ZERO,
        goal: cfg.robot_goal,
        v_max: cfg.v_max,
        theta,
        radius: cfg.robot_radius,
    };

    let mut humans: Vec<HumanAgent> = Vec::with_capacity(cfg.n_humans);
    let mut attempts: u32 = 0;
    while humans.len() < cfg.n_humans {
        attempts += 1;
        if attempts > 10_000 {
            return Err(SimError::PlacementFailure { attempts });
        }
        let angle = rng.gen::<f64>() * core::f64::consts::TAU;
        let on_circle =
            Vec2::new(cfg.circle_radius * libm::cos(angle), cfg.circle_radius * libm::sin(angle));
        let noise = Vec2::new(
            (rng.gen::<f64>() - 0.5) * cfg.human_pref_speed,
            (rng.gen::<f64>() - 0.5) * cfg.human_pref_speed,
        );
        let position = on_circle + noise;

        let clear_of_robot =
            position.dist(robot.position) > cfg.human_radius + robot.radius;
        let clear_of_humans = humans
            .iter()
            .all(|h| position.dist(h.position) > cfg.human_radius + h.radius);
        if !(clear_of_robot && clear_of_humans) {
            continue;
        }
        humans.push(HumanAgent {
            position,
            velocity: Vec2::ZERO,
            goal: -on_circle,
            pref_speed: cfg.human_pref_speed,
            radius: cfg.human_radius,
            policy: cfg.human_policy,
        });
    }

    let mut world = WorldState {
        cfg: cfg.clone(),
        robot,
        humans,
        time: 0.0,
        steps: 0,
        terminal: Terminal::None,
        trail: Vec::new(),
        rng,
    };
    world.trail.push(world.robot.position);
    Ok(world)
}

/// Minimum surface separation between the robot and any human, in meters.
/// Negative means overlap; positive infinity when there are no humans.
pub fn min_separation(world: &WorldState) -> f64 {
    let mut min = f64::INFINITY;
    for h in &world.humans {
        let d = world.robot.position.dist(h.position) - h.radius - world.robot.radius;
        if d < min {
            min = d;
        }
    }
    min
}

/// Base reward for one step.
///
/// Collision dominates everything: `-0.25` whenever separation is
/// negative. Otherwise goal arrival pays `+1`; otherwise separations
/// under 0.2 m pay a proximity penalty `-0.1 + d_t / 2` that fades to 0
/// as the boundary is approached; everything else pays 0.
pub fn base_reward(d_t: f64, reached_goal: bool) -> f64 {
    if d_t < 0.0 {
        -0.25
    } else if reached_goal {
        1.0
    } else if d_t < 0.2 {
        -0.1 + d_t / 2.0
    } else {
        0.0
    }
}

impl WorldState {
    /// The robot's current observation: its own state plus every human
    /// within sensing range (center distance), in stable index order.
    pub fn observe(&self) -> Observation {
        let humans = self
            .humans
            .iter()
            .filter(|h| h.position.dist(self.robot.position) <= self.cfg.sensing_range)
            .map(|h| ObservedHuman {
                position: h.position,
                radius: h.radius,
            })
            .collect();
        Observation {
            time: self.time,
            robot: self.robot,
            humans,
        }
    }

    /// Advances the world by one time step under `action`.
    ///
    /// Order within the step: humans first manage goals (arrival
    /// reassignment, then the random-switch draw, per human in index
    /// order), then all agents pick velocities from the pre-step
    /// snapshot, then everyone moves simultaneously for `dt`. Goal
    /// management and human steering never read robot state while
    /// `invisible_robot` is set, so the rng stream and human motion are
    /// robot-independent.
    pub fn step(&mut self, action: Action) -> Result<StepOutcome, SimError> {
        if self.terminal != Terminal::None {
            return Err(SimError::SteppedTerminalEpisode);
        }
        let cfg_dt = self.cfg.dt;
        let v_cmd = if action.velocity().is_finite() {
            action.velocity().clamp_norm(self.cfg.v_max)
        } else {
            Vec2::ZERO
        };

        let pre_separation = min_separation(self);

        for i in 0..self.humans.len() {
            let h = &mut self.humans[i];
            if h.position.dist(h.goal) < h.radius {
                reassign_goal(h, self.cfg.circle_radius, &mut self.rng);
            }
            maybe_switch_goal(h, self.cfg.circle_radius, self.cfg.goal_switch_prob, &mut self.rng);
        }

        // Simultaneous decisions from a pre-step snapshot.
        let snapshot: Vec<AgentKinematics> =
            self.humans.iter().map(HumanAgent::kinematics).collect();
        let robot_kin = AgentKinematics {
            position: self.robot.position,
            velocity: self.robot.velocity,
            radius: self.robot.radius,
        };
        let mut neighbors: Vec<AgentKinematics> = Vec::with_capacity(snapshot.len());
        let mut new_velocities: Vec<Vec2> = Vec::with_capacity(self.humans.len());
        for (i, h) in self.humans.iter().enumerate() {
            neighbors.clear();
            neighbors.extend(snapshot.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, k)| *k));
            if !self.cfg.invisible_robot {
                neighbors.push(robot_kin);
            }
            let v = match h.policy {
                HumanPolicyKind::Orca => {
                    let pref = (h.goal - h.position).normalized_or_zero(1e-9) * h.pref_speed;
                    let params = OrcaParams {
                        time_horizon: self.cfg.orca.time_horizon,
                        neighbor_dist: self.cfg.orca.neighbor_dist,
                        max_speed: h.pref_speed,
                        time_step: cfg_dt,
                        safety_margin: HUMAN_MUTUAL_BUFFER,
                        responsibility: 0.5,
                    };
                    orca_velocity(&snapshot[i], &neighbors, &params, pref)
                }
                HumanPolicyKind::Sfm => {
                    let params = SfmParams {
                        relaxation_time: self.cfg.sfm.relaxation_time,
                        repulsion_strength: self.cfg.sfm.repulsion_strength,
                        repulsion_range: self.cfg.sfm.repulsion_range,
                        max_speed: h.pref_speed,
                        dt: cfg_dt,
                    };
                    sfm_velocity(&snapshot[i], h.pref_speed, h.goal, &neighbors, &params)
                }
            };
            new_velocities.push(v);
        }

        // Everyone moves at constant velocity for dt.
        let continuous = self.cfg.continuous_separation;
        let mut interval_min = f64::INFINITY;
        for (h, v) in self.humans.iter_mut().zip(&new_velocities) {
            if continuous {
                let d = closest_approach(
                    h.position - self.robot.position,
                    *v - v_cmd,
                    cfg_dt,
                ) - h.radius
                    - self.robot.radius;
                interval_min = interval_min.min(d);
            }
            h.velocity = *v;
            h.position += *v * cfg_dt;
        }
        self.robot.velocity = v_cmd;
        self.robot.position += v_cmd * cfg_dt;
        if v_cmd.norm() > 1e-6 {
            self.robot.theta = libm::atan2(v_cmd.y, v_cmd.x);
        }
        self.steps += 1;
        self.time = self.steps as f64 * cfg_dt;
        self.trail.push(self.robot.position);

        let d_t = if continuous {
            interval_min
        } else {
            pre_separation.min(min_separation(self))
        };

        let reached = self.robot.position.dist(self.robot.goal) < self.robot.radius;
        self.terminal = if d_t < 0.0 {
            Terminal::Collision
        } else if reached {
            Terminal::Goal
        } else if self.time >= self.cfg.time_limit {
            Terminal::Timeout
        } else {
            Terminal::None
        };

        let reward_base = base_reward(d_t, reached);
        let shaping = &self.cfg.shaping;
        let mut reward_shaping = 0.0;
        if shaping.enabled && self.trail.len() >= 4 {
            let n = self.trail.len();
            let k1 =
                discrete_curvature(self.trail[n - 4], self.trail[n - 3], self.trail[n - 2], DEFAULT_EPS_LEN);
            let k2 =
                discrete_curvature(self.trail[n - 3], self.trail[n - 2], self.trail[n - 1], DEFAULT_EPS_LEN);
            let penalty = shaping.w_smooth * smoothness_penalty(k2 - k1, shaping.lambda, shaping.tau_c);
            if penalty > 0.0 {
                reward_shaping = -penalty;
            }
        }

        Ok(StepOutcome {
            observation: self.observe(),
            reward_base,
            reward_shaping,
            reward_total: reward_base + reward_shaping,
            d_min: d_t,
            terminal: self.terminal,
        })
    }
}

/// Minimum center distance of a relative trajectory `rel + relv * t` over
/// `t` in `[0, dt]`.
fn closest_approach(rel: Vec2, relv: Vec2, dt: f64) -> f64 {
    let speed_sq = relv.norm_sq();
    let t = if speed_sq > 0.0 {
        (-rel.dot(relv) / speed_sq).clamp(0.0, dt)
    } else {
        0.0
    };
    (rel + relv * t).norm()
}
