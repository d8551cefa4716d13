//! Wire types for the external-policy protocol.
//!
//! Transport is newline-delimited JSON (UTF-8) over the policy process's
//! standard input/output. The harness opens with a handshake line and
//! then strictly alternates one request line with one reply line per
//! simulation step:
//!
//! ```text
//! harness → policy  {"proto":1,"dt":0.25,"time_limit":30.0}
//! policy  → harness {"ok":true}
//! harness → policy  {"t":0.0,"robot":{...},"humans":[{...}]}
//! policy  → harness {"vx":0.3,"vy":-0.4}
//! ```

use crowdbench_core::sim::Observation;
use serde::{Deserialize, Serialize};

/// Protocol revision spoken by this harness.
pub const PROTO_VERSION: u32 = 1;

/// First line sent to a freshly started policy process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Handshake {
    pub proto: u32,
    pub dt: f64,
    pub time_limit: f64,
}

/// The policy's answer to the handshake.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HandshakeReply {
    pub ok: bool,
}

/// Robot state as serialized on the wire.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WireRobot {
    pub px: f64,
    pub py: f64,
    pub vx: f64,
    pub vy: f64,
    pub gx: f64,
    pub gy: f64,
    pub vmax: f64,
    pub theta: f64,
    /// Body radius, m.
    pub rho: f64,
}

/// One observed human on the wire: position and radius only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WireHuman {
    pub px: f64,
    pub py: f64,
    pub rho: f64,
}

/// One per-step request to the policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Request {
    pub t: f64,
    pub robot: WireRobot,
    pub humans: Vec<WireHuman>,
}

/// The policy's per-step reply: a commanded velocity. Speeds above the
/// robot's limit are scaled down by the harness.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Reply {
    pub vx: f64,
    pub vy: f64,
}

impl Request {
    pub fn from_observation(obs: &Observation) -> Self {
        let r = &obs.robot;
        Request {
            t: obs.time,
            robot: WireRobot {
                px: r.position.x,
                py: r.position.y,
                vx: r.velocity.x,
                vy: r.velocity.y,
                gx: r.goal.x,
                gy: r.goal.y,
                vmax: r.v_max,
                theta: r.theta,
                rho: r.radius,
            },
            humans: obs
                .humans
                .iter()
                .map(|h| WireHuman {
                    px: h.position.x,
                    py: h.position.y,
                    rho: h.radius,
                })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crowdbench_core::sim::{ObservedHuman, RobotState};
    use crowdbench_core::Vec2;

    #[test]
    fn request_serializes_with_exact_keys() {
        let obs = Observation {
            time: 1.25,
            robot: RobotState {
                position: Vec2::new(0.0, -4.0),
                velocity: Vec2::new(0.0, 1.0),
                goal: Vec2::new(0.0, 4.0),
                v_max: 1.0,
                theta: 1.5707963267948966,
                radius: 0.3,
            },
            humans: vec![ObservedHuman {
                position: Vec2::new(1.0, 2.0),
                radius: 0.3,
            }],
        };
        let line = serde_json::to_string(&Request::from_observation(&obs)).unwrap();
        assert_eq!(
            line,
            "{\"t\":1.25,\"robot\":{\"px\":0.0,\"py\":-4.0,\"vx\":0.0,\"vy\":1.0,\
             \"gx\":0.0,\"gy\":4.0,\"vmax\":1.0,\"theta\":1.5707963267948966,\"rho\":0.3},\
             \"humans\":[{\"px\":1.0,\"py\":2.0,\"rho\":0.3}]}"
        );
    }

    #[test]
    fn reply_and_handshake_round_trip() {
        let r: Reply = serde_json::from_str("{\"vx\":0.3,\"vy\":-0.4}").unwrap();
        assert_eq!(r, Reply { vx: 0.3, vy: -0.4 });
        let h: HandshakeReply = serde_json::from_str("{\"ok\":true}").unwrap();
        assert!(h.ok);
        let hs = serde_json::to_string(&Handshake {
            proto: PROTO_VERSION,
            dt: 0.25,
            time_limit: 30.0,
        })
        .unwrap();
        assert_eq!(hs, "{\"proto\":1,\"dt\":0.25,\"time_limit\":30.0}");
    }
}
