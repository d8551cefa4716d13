//! Social-force pedestrian dynamics.
//!
//! Velocity updates follow a unit-mass Euler step of two forces: a goal
//! attraction that relaxes the current velocity toward the desired one,
//! and an exponential repulsion from each neighbor that grows as surface
//! separation shrinks.

use crate::sim::AgentKinematics;
use crate::vec2::Vec2;

/// Model parameters. `repulsion_strength` and `repulsion_range` are the
/// conventional A (force scale) and B (length scale, m) of the
/// exponential repulsion term.
///
/// The defaults pair a strong, wide repulsion with a short relaxation
/// time. A position-only force model gets no help from pedestrians that
/// do not dodge back, so the repulsion has to impose a firm standoff on
/// its own, while the quick relaxation keeps the agent committed to its
/// goal instead of stalling in light traffic.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct SfmParams {
    /// Seconds over which velocity relaxes toward the desired velocity.
    pub relaxation_time: f64,
    pub repulsion_strength: f64,
    /// Meters; separation scale of the repulsion falloff.
    pub repulsion_range: f64,
    /// Speed limit on the returned velocity, m/s.
    pub max_speed: f64,
    /// Integration step in seconds.
    pub dt: f64,
}

impl Default for SfmParams {
    fn default() -> Self {
        SfmParams {
            relaxation_time: 0.2,
            repulsion_strength: 26.0,
            repulsion_range: 0.6,
            max_speed: 1.0,
            dt: 0.25,
        }
    }
}

/// One social-force velocity update.
///
/// `v' = clamp(v + dt * (f_goal + sum of repulsions), max_speed)` with
/// `f_goal = (v_des - v) / relaxation_time`, where `v_des` points at the
/// goal with magnitude `pref_speed`. Each neighbor repels with magnitude
/// `A * e^((r_ij - d_ij) / B)` directed away from it, where `d_ij` is the
/// center distance and `r_ij` the radius sum. Coincident neighbors have
/// no defined direction and are skipped.
pub fn sfm_velocity(
    agent: &AgentKinematics,
    pref_speed: f64,
    goal: Vec2,
    neighbors: &[AgentKinematics],
    params: &SfmParams,
) -> Vec2 {
    let v_des = (goal - agent.position).normalized_or_zero(1e-9) * pref_speed;
    let mut force = (v_des - agent.velocity) / params.relaxation_time;
    for other in neighbors {
        let away = agent.position - other.position;
        let dist = away.norm();
        if dist < 1e-9 {
            continue;
        }
        let surface = dist - (agent.radius + other.radius);
        let magnitude = params.repulsion_strength * libm::exp(-surface / params.repulsion_range);
        force += (away / dist) * magnitude;
    }
    (agent.velocity + force * params.dt).clamp_norm(params.max_speed)
}
