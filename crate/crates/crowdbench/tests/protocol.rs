//! End-to-end tests of the external-policy protocol against the
//! bundled echo policy binary.

use crowdbench::external::{ExternalPolicy, ExternalPolicyFailure};
use crowdbench_core::sim::{Observation, ObservedHuman, RobotState};
use crowdbench_core::Vec2;

const ECHO: &str = env!("CARGO_BIN_EXE_echo-policy");

fn observation() -> Observation {
    Observation {
        time: 0.0,
        robot: RobotState {
            position: Vec2::new(0.0, -4.0),
            velocity: Vec2::ZERO,
            goal: Vec2::new(0.0, 4.0),
            v_max: 1.0,
            theta: core::f64::consts::FRAC_PI_2,
            radius: 0.3,
        },
        humans: vec![ObservedHuman { position: Vec2::new(1.0, 0.0), radius: 0.3 }],
    }
}

fn spawn(flags: &str) -> Result<ExternalPolicy, ExternalPolicyFailure> {
    ExternalPolicy::spawn(&format!("{ECHO} {flags}"), 0.25, 30.0)
}

#[test]
fn constant_replies_round_trip_exactly() {
    let mut policy = spawn("--vx 0.3 --vy -0.4").unwrap();
    let action = policy.decide(&observation()).unwrap();
    assert_eq!(action.vx, 0.3);
    assert_eq!(action.vy, -0.4);
    // Several steps in a row keep working over the same pipe.
    for _ in 0..5 {
        let action = policy.decide(&observation()).unwrap();
        assert_eq!((action.vx, action.vy), (0.3, -0.4));
    }
}

#[test]
fn replies_above_the_speed_limit_are_scaled_down() {
    let mut policy = spawn("--vx 2.0 --vy 0.0").unwrap();
    let action = policy.decide(&observation()).unwrap();
    assert_eq!(action.vx, 1.0);
    assert_eq!(action.vy, 0.0);

    let mut diagonal = spawn("--vx 3.0 --vy 4.0").unwrap();
    let action = diagonal.decide(&observation()).unwrap();
    let speed = (action.vx * action.vx + action.vy * action.vy).sqrt();
    assert!((speed - 1.0).abs() < 1e-12, "speed {speed}");
    // Direction is preserved: 3-4-5 triangle.
    assert!((action.vx - 0.6).abs() < 1e-12);
    assert!((action.vy - 0.8).abs() < 1e-12);
}

#[test]
fn toward_goal_replies_steer_at_the_goal() {
    let mut policy = spawn("--toward-goal").unwrap();
    let action = policy.decide(&observation()).unwrap();
    assert!(action.vx.abs() < 1e-12);
    assert!((action.vy - 1.0).abs() < 1e-12);
}

#[test]
fn slow_policies_time_out() {
    let mut policy = spawn("--sleep-ms 1500").unwrap();
    let err = policy.decide(&observation()).unwrap_err();
    assert!(matches!(err, ExternalPolicyFailure::Timeout(_)), "{err}");
}

#[test]
fn garbage_replies_are_rejected() {
    let mut policy = spawn("--garbage").unwrap();
    let err = policy.decide(&observation()).unwrap_err();
    assert!(matches!(err, ExternalPolicyFailure::MalformedReply(_)), "{err}");
}

#[test]
fn non_finite_replies_are_rejected() {
    // clap parses "NaN" into a float; JSON serializes it as null, which
    // fails reply parsing on the harness side.
    let mut policy = spawn("--vx NaN --vy 0.0").unwrap();
    let err = policy.decide(&observation()).unwrap_err();
    assert!(matches!(err, ExternalPolicyFailure::MalformedReply(_)), "{err}");
}

#[test]
fn dying_before_the_handshake_fails_the_spawn() {
    let err = spawn("--die-after 0").unwrap_err();
    assert!(matches!(err, ExternalPolicyFailure::Handshake(_)), "{err}");
}

#[test]
fn dying_mid_episode_disconnects() {
    let mut policy = spawn("--die-after 1").unwrap();
    let err = policy.decide(&observation()).unwrap_err();
    assert!(matches!(err, ExternalPolicyFailure::Disconnected), "{err}");
}

#[test]
fn missing_binaries_fail_to_spawn() {
    let err = ExternalPolicy::spawn("/no/such/policy --flag", 0.25, 30.0).unwrap_err();
    assert!(matches!(err, ExternalPolicyFailure::Spawn { .. }), "{err}");
    let err = ExternalPolicy::spawn("   ", 0.25, 30.0).unwrap_err();
    assert!(matches!(err, ExternalPolicyFailure::Spawn { .. }), "{err}");
}
