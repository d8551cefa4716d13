//! Trajectory smoothness analysis based on discrete curvature.
//!
//! A trajectory is a sequence of planar positions sampled at a fixed time
//! step. The curvature at a sample is estimated from three consecutive
//! points as the inverse radius of their circumscribed circle. Sliding a
//! four-point window along the trajectory yields two overlapping curvature
//! estimates whose absolute difference measures how abruptly the turning
//! rate changes; windows where that jump reaches a threshold `tau` count as
//! curvature discontinuities. The headline metric is the fraction of
//! windows that are discontinuous, a value in `[0, 1]` where lower is
//! smoother.

use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::vec2::Vec2;

/// Default discontinuity threshold in 1/m: two curvature estimates that
/// differ by at least `ln 2` make the window discontinuous.
pub const DEFAULT_TAU: f64 = core::f64::consts::LN_2;

/// Default minimum pairwise distance (m) below which a curvature estimate
/// is considered degenerate.
pub const DEFAULT_EPS_LEN: f64 = 1e-6;

/// A robot path: positions in meters sampled every `dt` seconds.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub points: Vec<Vec2>,
    /// Sampling interval in seconds. Must be positive.
    pub dt: f64,
}

impl Trajectory {
    pub fn new(points: Vec<Vec2>, dt: f64) -> Self {
        debug_assert!(dt > 0.0, "trajectory sampling interval must be positive");
        Trajectory { points, dt }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Parameters of the discontinuity analysis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SmoothnessConfig {
    /// Curvature-difference threshold in 1/m; a window counts as
    /// discontinuous when its jump is `>= tau`.
    pub tau: f64,
    /// Minimum pairwise point distance in meters; closer points make a
    /// curvature estimate degenerate.
    pub eps_len: f64,
}

impl Default for SmoothnessConfig {
    fn default() -> Self {
        SmoothnessConfig {
            tau: DEFAULT_TAU,
            eps_len: DEFAULT_EPS_LEN,
        }
    }
}

/// One four-point window of the analysis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvatureWindow {
    /// Index of the window's first trajectory point.
    pub start: usize,
    /// Curvature estimate over points `start .. start+3`, in 1/m.
    pub kappa1: f64,
    /// Curvature estimate over points `start+1 .. start+4`, in 1/m.
    pub kappa2: f64,
    /// `|kappa2 - kappa1|`.
    pub delta: f64,
    /// True when either estimate involved near-coincident points.
    /// Degenerate windows never count as discontinuous.
    pub degenerate: bool,
}

/// Errors from trajectory analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricError {
    /// The analysis needs at least four points.
    InsufficientPoints { got: usize },
}

impl fmt::Display for MetricError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricError::InsufficientPoints { got } => {
                write!(f, "trajectory has {got} points; curvature analysis needs at least 4")
            }
        }
    }
}

impl core::error::Error for MetricError {}

/// Discrete curvature of the middle of three consecutive points, in 1/m.
///
/// Computed as `2 |cross(p2 - p1, p3 - p1)| / (d12 * d23 * d13)`, which
/// equals the inverse radius of the circle through the three points.
/// Collinear points give 0. If any pairwise distance falls below
/// `eps_len` the estimate is degenerate and 0 is returned.
pub fn discrete_curvature(p1: Vec2, p2: Vec2, p3: Vec2, eps_len: f64) -> f64 {
    curvature_guarded(p1, p2, p3, eps_len).0
}

/// Curvature plus a degeneracy flag for window bookkeeping.
fn curvature_guarded(p1: Vec2, p2: Vec2, p3: Vec2, eps_len: f64) -> (f64, bool) {
    let d12 = p1.dist(p2);
    let d23 = p2.dist(p3);
    let d13 = p1.dist(p3);
    if d12 < eps_len || d23 < eps_len || d13 < eps_len {
        return (0.0, true);
    }
    let cross = (p2 - p1).det(p3 - p1);
    (2.0 * libm::fabs(cross) / (d12 * d23 * d13), false)
}

/// All sliding four-point windows of a trajectory.
///
/// A trajectory of `n >= 4` points yields `n - 3` windows; window `i`
/// compares the curvature over points `(i, i+1, i+2)` with the curvature
/// over points `(i+1, i+2, i+3)`.
pub fn curvature_windows(
    traj: &Trajectory,
    cfg: &SmoothnessConfig,
) -> Result<Vec<CurvatureWindow>, MetricError> {
    let n = traj.points.len();
    if n < 4 {
        return Err(MetricError::InsufficientPoints { got: n });
    }
    let p = &traj.points;
    let mut windows = Vec::with_capacity(n - 3);
    for i in 0..n - 3 {
        let (kappa1, deg1) = curvature_guarded(p[i], p[i + 1], p[i + 2], cfg.eps_len);
        let (kappa2, deg2) = curvature_guarded(p[i + 1], p[i + 2], p[i + 3], cfg.eps_len);
        windows.push(CurvatureWindow {
            start: i,
            kappa1,
            kappa2,
            delta: libm::fabs(kappa2 - kappa1),
            degenerate: deg1 || deg2,
        });
    }
    Ok(windows)
}

/// Fraction of windows whose curvature jump reaches `cfg.tau`.
///
/// Degenerate windows never count as discontinuous but stay in the
/// denominator, so the result is `discontinuous / (n - 3)` and lies in
/// `[0, 1]`. Errors for fewer than four points, where no window exists.
pub fn discontinuity_ratio(traj: &Trajectory, cfg: &SmoothnessConfig) -> Result<f64, MetricError> {
    let windows = curvature_windows(traj, cfg)?;
    let discontinuous = windows
        .iter()
        .filter(|w| !w.degenerate && w.delta >= cfg.tau)
        .count();
    Ok(discontinuous as f64 / windows.len() as f64)
}

/// Smoothness penalty for a single curvature jump.
///
/// Maps the jump onto `m = 1 - e^(-|delta_kappa|)` in `[0, 1)` and returns
/// `lambda * m` when `m` strictly exceeds `tau_c`, else 0. The activation
/// test is evaluated in the curvature domain (`|delta_kappa| >
/// -ln(1 - tau_c)`), which is algebraically identical and keeps the
/// boundary exact: a jump of `ln 2` with `tau_c = 0.5` yields exactly 0.
pub fn smoothness_penalty(delta_kappa: f64, lambda: f64, tau_c: f64) -> f64 {
    let jump = libm::fabs(delta_kappa);
    let threshold = -libm::log1p(-tau_c);
    if jump > threshold {
        lambda * -libm::expm1(-jump)
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    const LN_2: f64 = core::f64::consts::LN_2;

    fn traj(points: Vec<Vec2>) -> Trajectory {
        Trajectory::new(points, 0.25)
    }

    #[test]
    fn right_triangle_curvature_is_sqrt_two() {
        // Circumradius of the (0,0),(1,0),(0,1) right triangle is
        // sqrt(2)/2, so the curvature is sqrt(2).
        let k = discrete_curvature(
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(0.0, 1.0),
            DEFAULT_EPS_LEN,
        );
        assert!((k - core::f64::consts::SQRT_2).abs() < 1e-12, "kappa = {k}");
    }

    #[test]
    fn cocircular_points_give_inverse_radius() {
        let r = 2.0;
        let p = |deg: f64| {
            let a = deg.to_radians();
            Vec2::new(r * libm::cos(a), r * libm::sin(a))
        };
        let k = discrete_curvature(p(0.0), p(10.0), p(20.0), DEFAULT_EPS_LEN);
        assert!((k - 0.5).abs() < 1e-12, "kappa = {k}");
    }

    #[test]
    fn collinear_points_have_zero_curvature() {
        let k = discrete_curvature(
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0, 1.0),
            Vec2::new(2.5, 2.5),
            DEFAULT_EPS_LEN,
        );
        assert_eq!(k, 0.0);
    }

    #[test]
    fn coincident_points_are_degenerate() {
        let p = Vec2::new(1.0, 1.0);
        let k = discrete_curvature(p, p, Vec2::new(2.0, 0.0), DEFAULT_EPS_LEN);
        assert_eq!(k, 0.0);
        let t = traj(vec![p, p, Vec2::new(2.0, 0.0), Vec2::new(3.0, 1.0)]);
        let w = curvature_windows(&t, &SmoothnessConfig::default()).unwrap();
        assert_eq!(w.len(), 1);
        assert!(w[0].degenerate);
        // Degenerate windows stay in the denominator but never count.
        assert_eq!(discontinuity_ratio(&t, &SmoothnessConfig::default()).unwrap(), 0.0);
    }

    #[test]
    fn too_short_trajectories_are_rejected() {
        let t = traj(vec![Vec2::ZERO, Vec2::new(1.0, 0.0), Vec2::new(2.0, 0.0)]);
        assert_eq!(
            discontinuity_ratio(&t, &SmoothnessConfig::default()),
            Err(MetricError::InsufficientPoints { got: 3 })
        );
        assert!(curvature_windows(&t, &SmoothnessConfig::default()).is_err());
    }

    #[test]
    fn straight_line_has_zero_ratio() {
        let points: Vec<Vec2> = (0..40).map(|i| Vec2::new(0.25 * i as f64, 0.0)).collect();
        let r = discontinuity_ratio(&traj(points), &SmoothnessConfig::default()).unwrap();
        assert_eq!(r, 0.0);
    }

    #[test]
    fn uniform_arc_has_zero_ratio() {
        // Constant curvature: every window sees kappa1 == kappa2.
        let points: Vec<Vec2> = (0..60)
            .map(|i| {
                let a = 0.05 * i as f64;
                Vec2::new(3.0 * libm::cos(a), 3.0 * libm::sin(a))
            })
            .collect();
        let r = discontinuity_ratio(&traj(points), &SmoothnessConfig::default()).unwrap();
        assert_eq!(r, 0.0);
    }

    #[test]
    fn sharp_turn_between_straights_is_partially_discontinuous() {
        // Straight run, a 90 degree corner, straight run: only the windows
        // spanning the corner see a curvature jump.
        let mut points: Vec<Vec2> = (0..8).map(|i| Vec2::new(0.25 * i as f64, 0.0)).collect();
        let corner = *points.last().unwrap();
        points.extend((1..8).map(|i| Vec2::new(corner.x, 0.25 * i as f64)));
        let t = traj(points);
        let r = discontinuity_ratio(&t, &SmoothnessConfig::default()).unwrap();
        assert!(r > 0.0 && r < 1.0, "ratio = {r}");
        // Independent count over the window list.
        let windows = curvature_windows(&t, &SmoothnessConfig::default()).unwrap();
        let by_hand = windows
            .iter()
            .filter(|w| !w.degenerate && w.delta >= DEFAULT_TAU)
            .count() as f64
            / windows.len() as f64;
        assert_eq!(r, by_hand);
    }

    #[test]
    fn threshold_counts_equal_jumps_as_discontinuous() {
        // Build a window list by hand where delta == tau exactly.
        let t = traj(vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(2.0, 0.0),
            Vec2::new(2.0, 1.0),
        ]);
        let w = &curvature_windows(&t, &SmoothnessConfig::default()).unwrap()[0];
        let cfg = SmoothnessConfig {
            tau: w.delta,
            ..SmoothnessConfig::default()
        };
        assert_eq!(discontinuity_ratio(&t, &cfg).unwrap(), 1.0);
    }

    #[test]
    fn penalty_is_zero_at_and_below_activation() {
        // With tau_c = 0.5 the activation sits exactly at a jump of ln 2.
        assert_eq!(smoothness_penalty(LN_2, 1.0, 0.5), 0.0);
        assert_eq!(smoothness_penalty(0.3, 1.0, 0.5), 0.0);
        assert_eq!(smoothness_penalty(0.0, 1.0, 0.5), 0.0);
        assert_eq!(smoothness_penalty(-0.2, 1.0, 0.5), 0.0);
    }

    #[test]
    fn penalty_above_activation_matches_closed_form() {
        let p = smoothness_penalty(1.0, 1.0, 0.5);
        assert!((p - 0.6321205588285577).abs() < 1e-15, "penalty = {p}");
        // Scales linearly in lambda.
        let half = smoothness_penalty(1.0, 0.5, 0.5);
        assert!((half - p / 2.0).abs() < 1e-15);
        // Fires for arbitrarily small jumps when tau_c = 0.
        assert!(smoothness_penalty(1e-9, 1.0, 0.0) > 0.0);
    }

    #[test]
    fn penalty_is_bounded_by_lambda() {
        for i in 0..200 {
            let dk = 0.05 * i as f64;
            let p = smoothness_penalty(dk, 0.7, 0.5);
            assert!((0.0..0.7).contains(&p), "penalty {p} out of range at dk {dk}");
        }
    }
}
