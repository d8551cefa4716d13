//! Running an external policy as a child process.
//!
//! The policy is any executable that speaks the newline-delimited JSON
//! protocol from [`crate::protocol`] on stdin/stdout. Its stderr is
//! inherited so diagnostics land on the harness's stderr. A reader
//! thread owns the child's stdout and forwards complete lines over a
//! channel, which lets every read carry a deadline without platform
//! specific non-blocking IO.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::Duration;

use crowdbench_core::sim::{Action, Observation};

use crate::protocol::{Handshake, HandshakeReply, Reply, Request, PROTO_VERSION};

/// How long the harness waits for each per-step reply line.
pub const REPLY_TIMEOUT: Duration = Duration::from_secs(1);

/// How long the harness waits for the handshake reply. Generous, so a
/// policy may load model weights after starting up.
pub const HANDSHAKE_TIMEOUT: Duration = Duration::from_secs(5);

/// Everything that can go wrong with an external policy process.
#[derive(Debug, thiserror::Error)]
pub enum ExternalPolicyFailure {
    #[error("failed to spawn policy command `{command}`: {source}")]
    Spawn {
        command: String,
        source: std::io::Error,
    },
    #[error("policy handshake failed: {0}")]
    Handshake(String),
    #[error("policy did not reply within {0:?}")]
    Timeout(Duration),
    #[error("policy sent a malformed reply: {0}")]
    MalformedReply(String),
    #[error("policy process closed its output stream")]
    Disconnected,
    #[error("failed to write to policy stdin: {0}")]
    Send(std::io::Error),
}

/// A running policy process plus the plumbing to talk to it.
pub struct ExternalPolicy {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<std::io::Result<String>>,
}

impl std::fmt::Debug for ExternalPolicy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ExternalPolicy")
            .field("pid", &self.child.id())
            .finish_non_exhaustive()
    }
}

impl ExternalPolicy {
    /// Spawns `command` (split on whitespace: first token is the
    /// program, the rest are arguments) and performs the handshake.
    pub fn spawn(command: &str, dt: f64, time_limit: f64) -> Result<Self, ExternalPolicyFailure> {
        let mut tokens = command.split_whitespace();
        let program = tokens.next().ok_or_else(|| ExternalPolicyFailure::Spawn {
            command: command.to_string(),
            source: std::io::Error::new(std::io::ErrorKind::InvalidInput, "empty command"),
        })?;
        let mut child = Command::new(program)
            .args(tokens)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|source| ExternalPolicyFailure::Spawn {
                command: command.to_string(),
                source,
            })?;
        let stdin = child.stdin.take().expect("child stdin was piped");
        let stdout = child.stdout.take().expect("child stdout was piped");
        let (tx, lines) = mpsc::channel();
        thread::spawn(move || {
            let reader = BufReader::new(stdout);
            for line in reader.lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });

        let mut policy = ExternalPolicy {
            child,
            stdin,
            lines,
        };
        policy.handshake(dt, time_limit)?;
        Ok(policy)
    }

    fn handshake(&mut self, dt: f64, time_limit: f64) -> Result<(), ExternalPolicyFailure> {
        let hello = Handshake {
            proto: PROTO_VERSION,
            dt,
            time_limit,
        };
        self.send_line(&serde_json::to_string(&hello).expect("handshake serializes"))?;
        let line = self
            .recv_line(HANDSHAKE_TIMEOUT)
            .map_err(|e| ExternalPolicyFailure::Handshake(e.to_string()))?;
        let reply: HandshakeReply = serde_json::from_str(&line)
            .map_err(|e| ExternalPolicyFailure::Handshake(format!("bad reply `{line}`: {e}")))?;
        if !reply.ok {
            return Err(ExternalPolicyFailure::Handshake(
                "policy declined the handshake".to_string(),
            ));
        }
        Ok(())
    }

    /// Sends one observation and waits for the commanded velocity.
    /// Non-finite components are rejected; speeds above `v_max` are
    /// scaled down to the limit.
    pub fn decide(&mut self, obs: &Observation) -> Result<Action, ExternalPolicyFailure> {
        let request = Request::from_observation(obs);
        self.send_line(&serde_json::to_string(&request).expect("request serializes"))?;
        let line = self.recv_line(REPLY_TIMEOUT)?;
        let reply: Reply = serde_json::from_str(&line)
            .map_err(|e| ExternalPolicyFailure::MalformedReply(format!("`{line}`: {e}")))?;
        if !reply.vx.is_finite() || !reply.vy.is_finite() {
            return Err(ExternalPolicyFailure::MalformedReply(format!(
                "non-finite velocity ({}, {})",
                reply.vx, reply.vy
            )));
        }
        let action = Action {
            vx: reply.vx,
            vy: reply.vy,
        };
        Ok(Action::from_velocity(
            action.velocity().clamp_norm(obs.robot.v_max),
        ))
    }

    fn send_line(&mut self, line: &str) -> Result<(), ExternalPolicyFailure> {
        let write = (|| {
            self.stdin.write_all(line.as_bytes())?;
            self.stdin.write_all(b"\n")?;
            self.stdin.flush()
        })();
        write.map_err(ExternalPolicyFailure::Send)
    }

    fn recv_line(&mut self, timeout: Duration) -> Result<String, ExternalPolicyFailure> {
        match self.lines.recv_timeout(timeout) {
            Ok(Ok(line)) => Ok(line),
            Ok(Err(_)) | Err(RecvTimeoutError::Disconnected) => {
                Err(ExternalPolicyFailure::Disconnected)
            }
            Err(RecvTimeoutError::Timeout) => Err(ExternalPolicyFailure::Timeout(timeout)),
        }
    }
}

impl Drop for ExternalPolicy {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}
