//! Built-in robot policies.
//!
//! All policies consume [`Observation`]s and emit [`Action`]s, exactly
//! like an external policy process would: they see human positions but
//! not velocities or goals. The reactive policies therefore estimate
//! human velocities by finite-differencing consecutive observations.
//! Every returned action is speed-clamped to the robot's limit, the
//! same clamp the harness applies to external policy replies.

use alloc::vec::Vec;

use crate::sim::{
    orca_velocity, sfm_velocity, AgentKinematics, Action, Observation, OrcaParams, ScenarioConfig,
    SfmParams,
};
use crate::vec2::Vec2;

/// Maximum distance (m) a human may move between observations and still
/// be treated as the same person by the velocity estimator.
pub const DEFAULT_MATCH_RADIUS: f64 = 1.0;

/// Head straight for the goal at maximum speed, ignoring everyone.
///
/// Useful as a lower bound and for isolating environment behavior.
#[derive(Debug, Clone, Copy, Default)]
pub struct GoalGreedy;

impl GoalGreedy {
    pub fn decide(&mut self, obs: &Observation) -> Action {
        Action::from_velocity(greedy_velocity(obs).clamp_norm(obs.robot.v_max))
    }
}

fn greedy_velocity(obs: &Observation) -> Vec2 {
    let robot = &obs.robot;
    (robot.goal - robot.position).normalized_or_zero(1e-9) * robot.v_max
}

/// Estimates velocities of observed humans by nearest-neighbor matching
/// against the previous observation. Unmatched or first-seen humans get
/// zero velocity.
#[derive(Debug, Clone)]
pub struct VelocityEstimator {
    prev_positions: Vec<Vec2>,
    prev_time: f64,
    match_radius: f64,
    primed: bool,
}

impl VelocityEstimator {
    pub fn new(match_radius: f64) -> Self {
        VelocityEstimator {
            prev_positions: Vec::new(),
            prev_time: 0.0,
            match_radius,
            primed: false,
        }
    }

    /// Forgets all tracking state (call between episodes).
    pub fn reset(&mut self) {
        self.prev_positions.clear();
        self.primed = false;
    }

    /// Returns one velocity estimate per observed human, in observation
    /// order, and records this observation for the next call.
    pub fn estimate(&mut self, time: f64, humans: &[crate::sim::ObservedHuman]) -> Vec<Vec2> {
        let dt = time - self.prev_time;
        let usable = self.primed && dt > 1e-9;
        let velocities = humans
            .iter()
            .map(|h| {
                if !usable {
                    return Vec2::ZERO;
                }
                let mut best = f64::INFINITY;
                let mut best_prev = None;
                for p in &self.prev_positions {
                    let d = p.dist(h.position);
                    if d < best {
                        best = d;
                        best_prev = Some(*p);
                    }
                }
                match best_prev {
                    Some(p) if best <= self.match_radius => (h.position - p) / dt,
                    _ => Vec2::ZERO,
                }
            })
            .collect();
        self.prev_positions.clear();
        self.prev_positions.extend(humans.iter().map(|h| h.position));
        self.prev_time = time;
        self.primed = true;
        velocities
    }
}

/// Reciprocal collision avoidance toward the goal.
#[derive(Debug, Clone)]
pub struct OrcaRobotPolicy {
    pub params: OrcaParams,
    estimator: VelocityEstimator,
}

impl OrcaRobotPolicy {
    pub fn new(params: OrcaParams) -> Self {
        OrcaRobotPolicy {
            params,
            estimator: VelocityEstimator::new(DEFAULT_MATCH_RADIUS),
        }
    }

    /// Settings consistent with `cfg`: the scenario's step size and
    /// speed limit, with the neighbor cutoff at least the sensing range.
    pub fn for_scenario(cfg: &ScenarioConfig) -> Self {
        OrcaRobotPolicy::new(OrcaParams {
            time_horizon: cfg.orca.time_horizon,
            neighbor_dist: cfg.orca.neighbor_dist.max(cfg.sensing_range),
            max_speed: cfg.v_max,
            time_step: cfg.dt,
            safety_margin: cfg.orca.safety_margin,
            responsibility: cfg.orca.responsibility,
        })
    }

    pub fn reset(&mut self) {
        self.estimator.reset();
    }

    pub fn decide(&mut self, obs: &Observation) -> Action {
        let velocities = self.estimator.estimate(obs.time, &obs.humans);
        let neighbors: Vec<AgentKinematics> = obs
            .humans
            .iter()
            .zip(&velocities)
            .map(|(h, v)| AgentKinematics {
                position: h.position,
                velocity: *v,
                radius: h.radius,
            })
            .collect();
        let me = AgentKinematics {
            position: obs.robot.position,
            velocity: obs.robot.velocity,
            radius: obs.robot.radius,
        };
        let pref = greedy_velocity(obs);
        let v = orca_velocity(&me, &neighbors, &self.params, pref);
        Action::from_velocity(v.clamp_norm(obs.robot.v_max))
    }
}

impl Default for OrcaRobotPolicy {
    fn default() -> Self {
        OrcaRobotPolicy::new(OrcaParams::default())
    }
}

/// Social-force steering toward the goal.
#[derive(Debug, Clone)]
pub struct SfmRobotPolicy {
    pub params: SfmParams,
}

impl SfmRobotPolicy {
    pub fn new(params: SfmParams) -> Self {
        SfmRobotPolicy { params }
    }

    /// Settings consistent with `cfg`.
    pub fn for_scenario(cfg: &ScenarioConfig) -> Self {
        SfmRobotPolicy::new(SfmParams {
            relaxation_time: cfg.sfm.relaxation_time,
            repulsion_strength: cfg.sfm.repulsion_strength,
            repulsion_range: cfg.sfm.repulsion_range,
            max_speed: cfg.v_max,
            dt: cfg.dt,
        })
    }

    pub fn decide(&mut self, obs: &Observation) -> Action {
        // The force model reads neighbor positions only, so no velocity
        // estimation is needed.
        let neighbors: Vec<AgentKinematics> = obs
            .humans
            .iter()
            .map(|h| AgentKinematics {
                position: h.position,
                velocity: Vec2::ZERO,
                radius: h.radius,
            })
            .collect();
        let me = AgentKinematics {
            position: obs.robot.position,
            velocity: obs.robot.velocity,
            radius: obs.robot.radius,
        };
        let v = sfm_velocity(&me, obs.robot.v_max, obs.robot.goal, &neighbors, &self.params);
        Action::from_velocity(v.clamp_norm(obs.robot.v_max))
    }
}
