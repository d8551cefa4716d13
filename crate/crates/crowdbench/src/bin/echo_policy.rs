//! Reference external policy for protocol testing.
//!
//! Speaks the newline-delimited JSON protocol on stdin/stdout. By
//! default it replies with a constant velocity; `--toward-goal` makes
//! it steer at the goal instead, which turns it into the goal-greedy
//! policy over the wire. The failure flags exist so tests can exercise
//! every error path of the harness.

use std::io::{self, BufRead, Write};
use std::thread;
use std::time::Duration;

use clap::Parser;
use crowdbench::protocol::{Handshake, HandshakeReply, Reply, Request};

#[derive(Debug, Parser)]
#[command(allow_negative_numbers = true)]
struct Args {
    /// Constant reply x-velocity
    #[arg(long, default_value_t = 0.0)]
    vx: f64,
    /// Constant reply y-velocity
    #[arg(long, default_value_t = 0.0)]
    vy: f64,
    /// Reply with full speed toward the goal instead of a constant
    #[arg(long)]
    toward_goal: bool,
    /// Sleep this long before every step reply
    #[arg(long, default_value_t = 0)]
    sleep_ms: u64,
    /// Reply to steps with a line that is not JSON
    #[arg(long)]
    garbage: bool,
    /// Exit silently after sending this many lines (0: never reply)
    #[arg(long)]
    die_after: Option<u64>,
}

fn main() -> io::Result<()> {
    let args = Args::parse();
    let stdin = io::stdin();
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let mut lines = stdin.lock().lines();
    let mut sent = 0u64;

    let handshake_line = match lines.next() {
        Some(line) => line?,
        None => return Ok(()),
    };
    let _handshake: Handshake = serde_json::from_str(&handshake_line)
        .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))?;
    if args.die_after == Some(sent) {
        return Ok(());
    }
    writeln!(out, "{}", serde_json::to_string(&HandshakeReply { ok: true }).unwrap())?;
    out.flush()?;
    sent += 1;

    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let request: Request = serde_json::from_str(&line)
            .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))?;
        if args.die_after == Some(sent) {
            return Ok(());
        }
        if args.sleep_ms > 0 {
            thread::sleep(Duration::from_millis(args.sleep_ms));
        }
        if args.garbage {
            writeln!(out, "this is not json")?;
        } else {
            let reply = if args.toward_goal {
                let dx = request.robot.gx - request.robot.px;
                let dy = request.robot.gy - request.robot.py;
                let dist = (dx * dx + dy * dy).sqrt();
                if dist > 1e-9 {
                    // Normalize before scaling, mirroring the built-in
                    // goal-greedy policy operation for operation.
                    Reply { vx: dx / dist * request.robot.vmax, vy: dy / dist * request.robot.vmax }
                } else {
                    Reply { vx: 0.0, vy: 0.0 }
                }
            } else {
                Reply { vx: args.vx, vy: args.vy }
            };
            writeln!(out, "{}", serde_json::to_string(&reply).unwrap())?;
        }
        out.flush()?;
        sent += 1;
    }
    Ok(())
}
