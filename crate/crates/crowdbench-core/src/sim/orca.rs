//! Optimal reciprocal collision avoidance.
//!
//! Each neighbor induces a half-plane of velocities that keep the pair
//! collision-free for `time_horizon` seconds, assuming the neighbor takes
//! its reciprocal share of the avoidance effort. The agent then picks the
//! velocity nearest its preferred velocity inside the intersection of all
//! half-planes and the maximum-speed disc, via an incremental
//! two-dimensional linear program. When the intersection is empty, a
//! second program picks the velocity minimizing the largest constraint
//! violation, which backs the agent away from the most crowded direction.

use alloc::vec::Vec;

use crate::sim::AgentKinematics;
use crate::vec2::Vec2;

/// Tolerance below which two constraint directions count as parallel.
const PARALLEL_EPS: f64 = 1e-9;

/// A directed line bounding permitted velocities: `v` is permitted when it
/// lies on or to the left of the line, i.e. `direction.det(v - point) >= 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfPlane {
    pub point: Vec2,
    /// Unit direction of the boundary line.
    pub direction: Vec2,
}

impl HalfPlane {
    /// Signed violation of the constraint at `v`; positive outside.
    #[inline]
    pub fn violation(&self, v: Vec2) -> f64 {
        self.direction.det(self.point - v)
    }

    #[inline]
    pub fn permits(&self, v: Vec2) -> bool {
        self.violation(v) <= 0.0
    }
}

/// Solver parameters.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct OrcaParams {
    /// Mutual collision-free guarantee window, in seconds.
    pub time_horizon: f64,
    /// Neighbors farther than this (center distance, m) are ignored.
    pub neighbor_dist: f64,
    /// Speed limit on the returned velocity, m/s.
    pub max_speed: f64,
    /// Simulation step in seconds; sets how fast overlaps are pushed apart.
    pub time_step: f64,
    /// Extra clearance (m) added to the combined radius when building
    /// constraints. Reciprocal avoidance splits the dodging effort with
    /// the neighbor; a planner facing neighbors that will not reciprocate
    /// needs this buffer to keep the repeated half-efforts from
    /// converging onto a grazing contact.
    pub safety_margin: f64,
    /// Share of the mutual avoidance effort this agent takes, in (0, 1].
    /// 0.5 between peers that reciprocate; 1.0 against neighbors that
    /// ignore this agent, which recovers the plain velocity-obstacle
    /// construction and needs no cooperation to stay collision-free.
    pub responsibility: f64,
}

impl Default for OrcaParams {
    fn default() -> Self {
        OrcaParams {
            time_horizon: 5.0,
            neighbor_dist: 10.0,
            max_speed: 1.0,
            time_step: 0.25,
            safety_margin: 0.0,
            responsibility: 0.5,
        }
    }
}

/// The half-plane induced by one neighbor, or `None` when the pair is
/// geometrically degenerate (coincident and co-moving) and no avoidance
/// direction is defined.
///
/// The construction distinguishes three regions of the velocity obstacle
/// truncated at `time_horizon`: its rounded cutoff arc, its two straight
/// legs, and the already-overlapping case where the obstacle is instead
/// built to resolve the overlap within one `time_step`. The boundary
/// point sits `responsibility` of the way along the adjustment `u`; at
/// the reciprocal 0.5 the neighbor is expected to contribute the other
/// half of the effort.
pub fn orca_halfplane(
    agent: &AgentKinematics,
    other: &AgentKinematics,
    params: &OrcaParams,
) -> Option<HalfPlane> {
    let relative_position = other.position - agent.position;
    let relative_velocity = agent.velocity - other.velocity;
    let dist_sq = relative_position.norm_sq();
    let combined_radius = agent.radius + other.radius + params.safety_margin;
    let combined_radius_sq = combined_radius * combined_radius;

    let direction;
    let u;
    if dist_sq > combined_radius_sq {
        // No current overlap. `w` is the relative velocity measured from
        // the center of the cutoff arc.
        let inv_horizon = 1.0 / params.time_horizon;
        let w = relative_velocity - relative_position * inv_horizon;
        let w_len_sq = w.norm_sq();
        let dot = w.dot(relative_position);
        if dot < 0.0 && dot * dot > combined_radius_sq * w_len_sq {
            // Closest obstacle point lies on the cutoff arc.
            let w_len = libm::sqrt(w_len_sq);
            let unit_w = w / w_len;
            direction = Vec2::new(unit_w.y, -unit_w.x);
            u = unit_w * (combined_radius * inv_horizon - w_len);
        } else {
            // Closest point lies on a leg. Exact ties take the left leg,
            // nudging the velocity counter-clockwise, so perfectly
            // symmetric encounters resolve deterministically instead of
            // deadlocking.
            let leg = libm::sqrt(dist_sq - combined_radius_sq);
            if relative_position.det(w) >= 0.0 {
                direction = Vec2::new(
                    relative_position.x * leg - relative_position.y * combined_radius,
                    relative_position.x * combined_radius + relative_position.y * leg,
                ) / dist_sq;
            } else {
                direction = -(Vec2::new(
                    relative_position.x * leg + relative_position.y * combined_radius,
                    -relative_position.x * combined_radius + relative_position.y * leg,
                ) / dist_sq);
            }
            u = direction * relative_velocity.dot(direction) - relative_velocity;
        }
    } else {
        // Already overlapping: require relative motion that clears the
        // overlap within one time step.
        let inv_step = 1.0 / params.time_step;
        let w = relative_velocity - relative_position * inv_step;
        let w_len = w.norm();
        if w_len < 1e-12 {
            // Coincident, co-moving pair: no defined separation direction.
            return None;
        }
        let unit_w = w / w_len;
        direction = Vec2::new(unit_w.y, -unit_w.x);
        u = unit_w * (combined_radius * inv_step - w_len);
    }
    Some(HalfPlane {
        point: agent.velocity + u * params.responsibility,
        direction,
    })
}

/// The velocity nearest `pref_vel` permitted by every neighbor-induced
/// half-plane and the speed disc.
///
/// Neighbors beyond `params.neighbor_dist` contribute no constraint. When
/// the constraints admit no velocity at all, the result instead minimizes
/// the maximum constraint violation. Deterministic for identical inputs.
pub fn orca_velocity(
    agent: &AgentKinematics,
    neighbors: &[AgentKinematics],
    params: &OrcaParams,
    pref_vel: Vec2,
) -> Vec2 {
    let range_sq = params.neighbor_dist * params.neighbor_dist;
    let mut planes: Vec<HalfPlane> = Vec::with_capacity(neighbors.len());
    for other in neighbors {
        if (other.position - agent.position).norm_sq() <= range_sq {
            if let Some(plane) = orca_halfplane(agent, other, params) {
                planes.push(plane);
            }
        }
    }
    solve(&planes, params.max_speed, pref_vel)
}

/// Velocity nearest `pref` inside all half-planes and the radius disc,
/// falling back to least-maximum-violation when infeasible.
pub fn solve(planes: &[HalfPlane], max_speed: f64, pref: Vec2) -> Vec2 {
    let (feasible_up_to, mut v) = solve_nearest(planes, max_speed, pref, false);
    if feasible_up_to < planes.len() {
        v = solve_relaxed(planes, feasible_up_to, max_speed, v);
    }
    v
}

/// Incremental 2D linear program over `planes` restricted to the disc of
/// radius `radius`.
///
/// With `direction_opt` false, minimizes the distance to `opt`; with it
/// true, `opt` is a unit direction to maximize along. Returns the number
/// of constraints satisfied before the first failure (equal to
/// `planes.len()` on success) and the best velocity found so far.
fn solve_nearest(
    planes: &[HalfPlane],
    radius: f64,
    opt: Vec2,
    direction_opt: bool,
) -> (usize, Vec2) {
    let mut result = if direction_opt {
        opt * radius
    } else if opt.norm_sq() > radius * radius {
        (opt / opt.norm()) * radius
    } else {
        opt
    };

    for (i, plane) in planes.iter().enumerate() {
        if plane.violation(result) > 0.0 {
            // Current optimum violates this plane: re-optimize on the
            // plane's boundary line, subject to all previous planes.
            match solve_on_line(planes, i, radius, opt, direction_opt) {
                Some(v) => result = v,
                None => return (i, result),
            }
        }
    }
    (planes.len(), result)
}

/// Optimum restricted to the boundary line of `planes[index]`, subject to
/// the disc and to `planes[..index]`. `None` when that segment is empty.
fn solve_on_line(
    planes: &[HalfPlane],
    index: usize,
    radius: f64,
    opt: Vec2,
    direction_opt: bool,
) -> Option<Vec2> {
    let line = &planes[index];
    // Intersect the line with the disc.
    let along = line.point.dot(line.direction);
    let discriminant = along * along + radius * radius - line.point.norm_sq();
    if discriminant < 0.0 {
        return None;
    }
    let sqrt_disc = libm::sqrt(discriminant);
    let mut t_left = -along - sqrt_disc;
    let mut t_right = -along + sqrt_disc;

    // Clip the segment against every earlier half-plane.
    for prev in &planes[..index] {
        let denominator = line.direction.det(prev.direction);
        let numerator = prev.direction.det(line.point - prev.point);
        if libm::fabs(denominator) <= PARALLEL_EPS {
            if numerator < 0.0 {
                // Parallel and fully outside `prev`.
                return None;
            }
            continue;
        }
        let t = numerator / denominator;
        if denominator >= 0.0 {
            t_right = t_right.min(t);
        } else {
            t_left = t_left.max(t);
        }
        if t_left > t_right {
            return None;
        }
    }

    let t = if direction_opt {
        if opt.dot(line.direction) > 0.0 {
            t_right
        } else {
            t_left
        }
    } else {
        line.direction.dot(opt - line.point).clamp(t_left, t_right)
    };
    Some(line.point + line.direction * t)
}

/// Infeasible fallback: starting from the first failed constraint, walk
/// the remaining planes and keep the velocity whose largest violation is
/// smallest. Each step re-optimizes along the direction of the currently
/// most-violated plane, subject to earlier planes pushed out by the
/// violation distance.
fn solve_relaxed(planes: &[HalfPlane], begin: usize, radius: f64, mut result: Vec2) -> Vec2 {
    let mut distance = 0.0;
    for (i, plane) in planes.iter().enumerate().skip(begin) {
        if plane.violation(result) <= distance {
            continue;
        }
        let mut projected: Vec<HalfPlane> = Vec::with_capacity(i);
        for prev in &planes[..i] {
            let determinant = plane.direction.det(prev.direction);
            let point;
            if libm::fabs(determinant) <= PARALLEL_EPS {
                if plane.direction.dot(prev.direction) > 0.0 {
                    // Same direction: `prev` is redundant here.
                    continue;
                }
                point = (plane.point + prev.point) * 0.5;
            } else {
                let t = prev.direction.det(plane.point - prev.point) / determinant;
                point = plane.point + plane.direction * t;
            }
            let direction = prev.direction - plane.direction;
            projected.push(HalfPlane {
                point,
                direction: direction / direction.norm(),
            });
        }
        let fallback = result;
        let (count, v) = solve_nearest(&projected, radius, plane.direction.perp_ccw(), true);
        // Keep the previous iterate if the projected program fails, which
        // can only happen through accumulated rounding.
        result = if count < projected.len() { fallback } else { v };
        distance = plane.violation(result);
    }
    result
}

#[cfg(test)]
mod tests {
    use super::*;

    fn agent(px: f64, py: f64, vx: f64, vy: f64) -> AgentKinematics {
        AgentKinematics {
            position: Vec2::new(px, py),
            velocity: Vec2::new(vx, vy),
            radius: 0.3,
        }
    }

    #[test]
    fn no_neighbors_returns_preferred_velocity() {
        let a = agent(0.0, 0.0, 0.0, 0.0);
        let pref = Vec2::new(0.4, -0.3);
        let v = orca_velocity(&a, &[], &OrcaParams::default(), pref);
        assert_eq!(v, pref);
    }

    #[test]
    fn preferred_velocity_beyond_speed_limit_is_scaled_down() {
        let a = agent(0.0, 0.0, 0.0, 0.0);
        let v = orca_velocity(&a, &[], &OrcaParams::default(), Vec2::new(3.0, 4.0));
        assert!((v.norm() - 1.0).abs() < 1e-12);
        assert!((v.x * 4.0 - v.y * 3.0).abs() < 1e-12);
    }

    #[test]
    fn out_of_range_neighbors_do_not_constrain() {
        let a = agent(0.0, 0.0, 1.0, 0.0);
        let far = agent(20.0, 0.0, -1.0, 0.0);
        let pref = Vec2::new(1.0, 0.0);
        let v = orca_velocity(&a, &[far], &OrcaParams::default(), pref);
        assert_eq!(v, pref);
    }

    #[test]
    fn returned_velocity_satisfies_all_half_planes() {
        let a = agent(0.0, 0.0, 1.0, 0.0);
        let neighbors = [
            agent(2.0, 0.1, -1.0, 0.0),
            agent(1.5, -1.0, 0.0, 0.8),
            agent(3.0, 1.0, -0.5, -0.5),
        ];
        let params = OrcaParams::default();
        let v = orca_velocity(&a, &neighbors, &params, Vec2::new(1.0, 0.0));
        for n in &neighbors {
            let plane = orca_halfplane(&a, n, &params).unwrap();
            assert!(
                plane.violation(v) <= 1e-9,
                "violation {} for plane {plane:?}",
                plane.violation(v)
            );
        }
        assert!(v.norm() <= params.max_speed + 1e-9);
    }

    #[test]
    fn head_on_encounter_resolves_point_symmetrically() {
        // Two identical agents closing head-on. Rotating the scene by 180
        // degrees swaps them, so their chosen velocities must be exact
        // negations, and the tie-break must make both dodge (not stall).
        let a = agent(0.0, 0.0, 1.0, 0.0);
        let b = agent(4.0, 0.0, -1.0, 0.0);
        let params = OrcaParams::default();
        let va = orca_velocity(&a, &[b], &params, Vec2::new(1.0, 0.0));
        let vb = orca_velocity(&b, &[a], &params, Vec2::new(-1.0, 0.0));
        assert!((va + vb).norm() < 1e-9, "va = {va:?}, vb = {vb:?}");
        assert!(va.y.abs() > 1e-6, "tie-break failed to pick a side: {va:?}");
    }

    #[test]
    fn overlapping_agents_push_apart() {
        let a = agent(0.0, 0.0, 0.0, 0.0);
        let b = agent(0.4, 0.0, 0.0, 0.0);
        let params = OrcaParams::default();
        let v = orca_velocity(&a, &[b], &params, Vec2::ZERO);
        // Moving away from the overlap means a negative x velocity.
        assert!(v.x < 0.0, "v = {v:?}");
    }

    #[test]
    fn coincident_comoving_neighbor_is_skipped() {
        let a = agent(1.0, 1.0, 0.5, 0.0);
        let b = agent(1.0, 1.0, 0.5, 0.0);
        let pref = Vec2::new(0.2, 0.2);
        let v = orca_velocity(&a, &[b], &OrcaParams::default(), pref);
        assert_eq!(v, pref);
    }

    #[test]
    fn dense_ring_remains_within_speed_limit() {
        // Eight agents converging on the origin: the feasible region can
        // collapse, exercising the relaxed program.
        let params = OrcaParams::default();
        let ring: Vec<AgentKinematics> = (0..8)
            .map(|i| {
                let ang = core::f64::consts::TAU * i as f64 / 8.0;
                let pos = Vec2::new(libm::cos(ang), libm::sin(ang)) * 0.8;
                AgentKinematics {
                    position: pos,
                    velocity: -pos,
                    radius: 0.3,
                }
            })
            .collect();
        let center = agent(0.0, 0.0, 0.0, 0.0);
        let v = orca_velocity(&center, &ring, &params, Vec2::new(1.0, 0.0));
        assert!(v.is_finite());
        assert!(v.norm() <= params.max_speed + 1e-9);
    }
}
