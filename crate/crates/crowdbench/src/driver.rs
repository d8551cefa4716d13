//! Policy selection and per-episode instantiation.

use std::fmt;
use std::str::FromStr;

use crowdbench_core::policy::{GoalGreedy, OrcaRobotPolicy, SfmRobotPolicy};
use crowdbench_core::sim::{Action, Observation, ScenarioConfig};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::external::{ExternalPolicy, ExternalPolicyFailure};

/// Which robot policy to run. Serialized as a plain string, matching
/// the command line: `greedy`, `orca`, `sfm`, or `external:<command>`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PolicySpec {
    Greedy,
    Orca,
    Sfm,
    External(String),
}

impl FromStr for PolicySpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "greedy" => Ok(PolicySpec::Greedy),
            "orca" => Ok(PolicySpec::Orca),
            "sfm" => Ok(PolicySpec::Sfm),
            _ => match s.strip_prefix("external:") {
                Some(cmd) if !cmd.trim().is_empty() => Ok(PolicySpec::External(cmd.to_string())),
                Some(_) => Err("external policy needs a command: external:<cmd>".to_string()),
                None => Err(format!(
                    "unknown policy `{s}` (expected greedy, orca, sfm, or external:<cmd>)"
                )),
            },
        }
    }
}

impl fmt::Display for PolicySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PolicySpec::Greedy => f.write_str("greedy"),
            PolicySpec::Orca => f.write_str("orca"),
            PolicySpec::Sfm => f.write_str("sfm"),
            PolicySpec::External(cmd) => write!(f, "external:{cmd}"),
        }
    }
}

impl Serialize for PolicySpec {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PolicySpec {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A policy instance driving a single episode. Built fresh per episode
/// so no state (velocity estimates, child process buffers) leaks
/// between episodes and results stay independent of batch order.
pub enum EpisodePolicy {
    Greedy(GoalGreedy),
    Orca(OrcaRobotPolicy),
    Sfm(SfmRobotPolicy),
    External(ExternalPolicy),
}

impl EpisodePolicy {
    /// Instantiates the policy for one episode of `cfg`. For external
    /// policies this spawns the child process and runs the handshake.
    pub fn create(spec: &PolicySpec, cfg: &ScenarioConfig) -> Result<Self, ExternalPolicyFailure> {
        Ok(match spec {
            PolicySpec::Greedy => EpisodePolicy::Greedy(GoalGreedy),
            PolicySpec::Orca => EpisodePolicy::Orca(OrcaRobotPolicy::for_scenario(cfg)),
            PolicySpec::Sfm => EpisodePolicy::Sfm(SfmRobotPolicy::for_scenario(cfg)),
            PolicySpec::External(cmd) => {
                EpisodePolicy::External(ExternalPolicy::spawn(cmd, cfg.dt, cfg.time_limit)?)
            }
        })
    }

    pub fn decide(&mut self, obs: &Observation) -> Result<Action, ExternalPolicyFailure> {
        Ok(match self {
            EpisodePolicy::Greedy(p) => p.decide(obs),
            EpisodePolicy::Orca(p) => p.decide(obs),
            EpisodePolicy::Sfm(p) => p.decide(obs),
            EpisodePolicy::External(p) => p.decide(obs)?,
        })
    }
}
