//! Property tests for the curvature metric: exact geometric identities
//! on sampled inputs, invariance under rigid motion and scaling, and
//! monotonicity/boundedness of the derived quantities.

use std::f64::consts::TAU;

use crowdbench_core::trajmetric::{
    curvature_windows, discontinuity_ratio, smoothness_penalty, SmoothnessConfig, Trajectory,
    DEFAULT_EPS_LEN,
};
use crowdbench_core::Vec2;
use proptest::prelude::*;

const N_POINTS: usize = 6;

/// Points on a circle of radius `r` centered at `c`, with consecutive
/// angular gaps in [0.1, 1.0] rad so no window is degenerate.
fn circle_strategy() -> impl Strategy<Value = (Vec<Vec2>, f64)> {
    (
        -10.0..10.0f64,
        -10.0..10.0f64,
        0.5..20.0f64,
        0.0..TAU,
        prop::collection::vec(0.1..1.0f64, N_POINTS - 1),
    )
        .prop_map(|(cx, cy, r, a0, gaps)| {
            let center = Vec2::new(cx, cy);
            let mut angle = a0;
            let mut points = Vec::with_capacity(N_POINTS);
            points.push(center + Vec2::new(r * angle.cos(), r * angle.sin()));
            for g in gaps {
                angle += g;
                points.push(center + Vec2::new(r * angle.cos(), r * angle.sin()));
            }
            (points, r)
        })
}

/// A polyline whose windows stay well clear of the degeneracy guard:
/// every pairwise distance within a window exceeds 1e-3.
fn polyline_strategy() -> impl Strategy<Value = Vec<Vec2>> {
    (
        -5.0..5.0f64,
        -5.0..5.0f64,
        prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), N_POINTS - 1),
    )
        .prop_map(|(x0, y0, steps)| {
            let mut points = vec![Vec2::new(x0, y0)];
            for (dx, dy) in steps {
                let last = *points.last().unwrap();
                points.push(last + Vec2::new(dx, dy));
            }
            points
        })
        .prop_filter("windows must be non-degenerate", |points| {
            for w in points.windows(3) {
                if w[0].dist(w[1]) < 1e-3 || w[1].dist(w[2]) < 1e-3 || w[0].dist(w[2]) < 1e-3 {
                    return false;
                }
            }
            true
        })
}

fn rotate(p: Vec2, angle: f64) -> Vec2 {
    let (s, c) = angle.sin_cos();
    Vec2::new(c * p.x - s * p.y, s * p.x + c * p.y)
}

fn window_curvatures(points: &[Vec2]) -> Vec<(f64, f64, bool)> {
    let traj = Trajectory::new(points.to_vec(), 0.25);
    curvature_windows(&traj, &SmoothnessConfig::default())
        .unwrap()
        .into_iter()
        .map(|w| (w.kappa1, w.kappa2, w.degenerate))
        .collect()
}

fn close_rel(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

proptest! {
    // The headline identity gets a larger sample than the default.
    #![proptest_config(ProptestConfig::with_cases(1000))]

    /// Every curvature estimate on a sampled circle equals 1/R, and a
    /// constant-curvature path reports zero discontinuity.
    #[test]
    fn circle_curvature_is_inverse_radius((points, r) in circle_strategy()) {
        let expected = 1.0 / r;
        for (k1, k2, degenerate) in window_curvatures(&points) {
            prop_assert!(!degenerate);
            prop_assert!(close_rel(k1, expected, 1e-9), "k1 = {k1}, want {expected}");
            prop_assert!(close_rel(k2, expected, 1e-9), "k2 = {k2}, want {expected}");
        }
        let traj = Trajectory::new(points, 0.25);
        let ratio = discontinuity_ratio(&traj, &SmoothnessConfig::default()).unwrap();
        prop_assert_eq!(ratio, 0.0);
    }
}

proptest! {
    /// Curvature estimates are invariant under rotation + translation.
    #[test]
    fn rigid_motion_invariance(
        points in polyline_strategy(),
        angle in 0.0..TAU,
        tx in -20.0..20.0f64,
        ty in -20.0..20.0f64,
    ) {
        let moved: Vec<Vec2> = points
            .iter()
            .map(|p| rotate(*p, angle) + Vec2::new(tx, ty))
            .collect();
        let original = window_curvatures(&points);
        let transformed = window_curvatures(&moved);
        prop_assert_eq!(original.len(), transformed.len());
        for ((k1a, k2a, da), (k1b, k2b, db)) in original.into_iter().zip(transformed) {
            prop_assert_eq!(da, db);
            if !da {
                prop_assert!(close_rel(k1a, k1b, 1e-9), "{k1a} vs {k1b}");
                prop_assert!(close_rel(k2a, k2b, 1e-9), "{k2a} vs {k2b}");
            }
        }
    }

    /// Scaling space by `s` scales every curvature by `1/s`.
    #[test]
    fn scaling_scales_curvature_inversely(
        points in polyline_strategy(),
        scale in 0.1..10.0f64,
    ) {
        let scaled: Vec<Vec2> = points.iter().map(|p| *p * scale).collect();
        let original = window_curvatures(&points);
        let transformed = window_curvatures(&scaled);
        for ((k1a, k2a, da), (k1b, k2b, db)) in original.into_iter().zip(transformed) {
            prop_assert_eq!(da, db);
            if !da {
                prop_assert!(close_rel(k1a / scale, k1b, 1e-9), "{k1a} vs {k1b}");
                prop_assert!(close_rel(k2a / scale, k2b, 1e-9), "{k2a} vs {k2b}");
            }
        }
    }

    /// Raising the threshold can only lower the discontinuity ratio, and
    /// the ratio always stays in [0, 1].
    #[test]
    fn ratio_is_monotone_in_tau_and_bounded(
        points in polyline_strategy(),
        tau_lo in 0.0..2.0f64,
        tau_gap in 0.0..2.0f64,
    ) {
        let traj = Trajectory::new(points, 0.25);
        let at = |tau| {
            discontinuity_ratio(&traj, &SmoothnessConfig { tau, eps_len: DEFAULT_EPS_LEN })
                .unwrap()
        };
        let lo = at(tau_lo);
        let hi = at(tau_lo + tau_gap);
        prop_assert!((0.0..=1.0).contains(&lo));
        prop_assert!((0.0..=1.0).contains(&hi));
        prop_assert!(hi <= lo, "ratio rose from {lo} to {hi} as tau grew");
    }

    /// Straight runs (any spacing, any direction) never count as
    /// discontinuous under the default threshold.
    #[test]
    fn straight_lines_score_zero(
        x0 in -5.0..5.0f64,
        y0 in -5.0..5.0f64,
        angle in 0.0..TAU,
        speeds in prop::collection::vec(0.1..1.0f64, N_POINTS - 1),
    ) {
        let dir = Vec2::new(angle.cos(), angle.sin());
        let mut points = vec![Vec2::new(x0, y0)];
        for s in speeds {
            let last = *points.last().unwrap();
            points.push(last + dir * s);
        }
        let traj = Trajectory::new(points, 0.25);
        let ratio = discontinuity_ratio(&traj, &SmoothnessConfig::default()).unwrap();
        prop_assert_eq!(ratio, 0.0);
    }

    /// The shaping penalty is zero at or below its activation threshold,
    /// bounded by lambda, and monotone in the curvature jump.
    #[test]
    fn penalty_is_bounded_and_monotone(
        jump_a in 0.0..10.0f64,
        jump_b in 0.0..10.0f64,
        lambda in 0.0..3.0f64,
        tau_c in 0.01..0.99f64,
    ) {
        let pa = smoothness_penalty(jump_a, lambda, tau_c);
        let pb = smoothness_penalty(jump_b, lambda, tau_c);
        prop_assert!((0.0..=lambda).contains(&pa));
        if jump_a <= jump_b {
            prop_assert!(pa <= pb);
        } else {
            prop_assert!(pb <= pa);
        }
        // Sign of the jump is irrelevant.
        prop_assert_eq!(pa, smoothness_penalty(-jump_a, lambda, tau_c));
    }
}
