//! Multi-objective scoring of navigation benchmark results.
//!
//! A batch of episodes is summarized by seven raw metrics (success,
//! collision, and timeout rates; average navigation time; discomfort
//! ratio; mean minimum separation; curvature discontinuity ratio). Each
//! metric group maps onto a sub-score in `[0, 1]`, and a priority-weighted
//! sum of the five sub-scores gives one comprehensive score. The weights
//! encode a fixed priority ordering: safety over success over comfort over
//! trajectory smoothness over efficiency.

use core::fmt;

use serde::{Deserialize, Serialize};

/// Raw metrics aggregated over a batch of episodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BatchMetrics {
    /// Success rate in `[0, 1]`.
    pub sr: f64,
    /// Collision rate in `[0, 1]`.
    pub cr: f64,
    /// Timeout rate in `[0, 1]`.
    pub tr: f64,
    /// Average navigation time over successful episodes, in seconds.
    /// Zero when there are no successes.
    pub at: f64,
    /// Fraction of steps spent uncomfortably close to a human.
    pub dr: f64,
    /// Mean over episodes of the minimum human separation, in meters.
    /// Can be negative when collision episodes contribute.
    pub md: f64,
    /// Mean curvature discontinuity ratio in `[0, 1]`.
    pub cdr: f64,
}

/// Priority weights of the five sub-scores. Must be non-negative, sum to
/// one, and respect the ordering `w_saf > w_suc > w_comf >= w_traj >=
/// w_effic`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Weights {
    pub w_saf: f64,
    pub w_suc: f64,
    pub w_comf: f64,
    pub w_traj: f64,
    pub w_effic: f64,
}

impl Default for Weights {
    fn default() -> Self {
        Weights {
            w_saf: 0.40,
            w_suc: 0.25,
            w_comf: 0.15,
            w_traj: 0.12,
            w_effic: 0.08,
        }
    }
}

/// Parameters of the scoring model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScoringConfig {
    /// Collision-rate scale of the safety score: a collision rate equal to
    /// `tau_s` scores exactly 0.5.
    pub tau_s: f64,
    /// Sharpness of the safety falloff.
    pub beta: f64,
    /// Exponent shared by the discomfort and trajectory terms.
    pub gamma: f64,
    /// Mix between the discomfort-ratio and separation terms of comfort.
    pub lambda_comf: f64,
    /// Separation (m) at which the comfort distance term saturates.
    pub tau_md_min: f64,
    /// Reference navigation time in seconds (straight-line distance at
    /// maximum speed).
    pub t_star: f64,
    pub weights: Weights,
}

impl Default for ScoringConfig {
    /// The low-density defaults; see [`ScoringConfig::high_density`].
    fn default() -> Self {
        ScoringConfig::low_density()
    }
}

impl ScoringConfig {
    /// Defaults for sparse crowds: a strict collision-rate scale.
    pub fn low_density() -> Self {
        ScoringConfig {
            tau_s: 0.05,
            beta: 4.0,
            gamma: 10.0,
            lambda_comf: 0.5,
            tau_md_min: 0.5,
            t_star: 8.0,
            weights: Weights::default(),
        }
    }

    /// Defaults for dense crowds: the collision-rate scale is relaxed to
    /// 0.1 so the safety score stays discriminative.
    pub fn high_density() -> Self {
        ScoringConfig {
            tau_s: 0.1,
            ..ScoringConfig::low_density()
        }
    }

    /// Checks the weight and parameter invariants.
    pub fn validate(&self) -> Result<(), ScoringError> {
        let w = &self.weights;
        let all = [w.w_saf, w.w_suc, w.w_comf, w.w_traj, w.w_effic];
        if all.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(ScoringError::InvalidWeights("weights must be finite and non-negative"));
        }
        let sum: f64 = all.iter().sum();
        if libm::fabs(sum - 1.0) > 1e-9 {
            return Err(ScoringError::InvalidWeights("weights must sum to 1"));
        }
        if !(w.w_saf > w.w_suc && w.w_suc > w.w_comf) {
            return Err(ScoringError::InvalidWeights(
                "safety must outweigh success, and success must outweigh comfort",
            ));
        }
        if !(w.w_comf >= w.w_traj && w.w_traj >= w.w_effic) {
            return Err(ScoringError::InvalidWeights(
                "comfort, trajectory, and efficiency weights must be non-increasing",
            ));
        }
        for (name, v) in [
            ("tau_s", self.tau_s),
            ("beta", self.beta),
            ("gamma", self.gamma),
            ("tau_md_min", self.tau_md_min),
            ("t_star", self.t_star),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(ScoringError::InvalidParameter(name));
            }
        }
        if !(0.0..=1.0).contains(&self.lambda_comf) {
            return Err(ScoringError::InvalidParameter("lambda_comf"));
        }
        Ok(())
    }
}

/// The five sub-scores and their weighted total, all in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreBreakdown {
    pub f_saf: f64,
    pub f_suc: f64,
    pub f_comf: f64,
    pub f_traj: f64,
    pub f_effic: f64,
    pub comprehensive: f64,
    /// True when no episode succeeded, in which case the efficiency score
    /// is defined as 0 rather than computed from an average time.
    pub efficiency_degenerate: bool,
}

/// Errors from scoring.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScoringError {
    InvalidWeights(&'static str),
    InvalidParameter(&'static str),
}

impl fmt::Display for ScoringError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScoringError::InvalidWeights(detail) => write!(f, "invalid score weights: {detail}"),
            ScoringError::InvalidParameter(name) => {
                write!(f, "scoring parameter {name} out of range")
            }
        }
    }
}

impl core::error::Error for ScoringError {}

/// Safety sub-score: `1 / (1 + (cr / tau_s)^beta)`.
///
/// Equals 1 for a collision-free batch, 0.5 at `cr == tau_s`, and falls
/// off with sharpness `beta` beyond that.
pub fn safety_score(cr: f64, cfg: &ScoringConfig) -> f64 {
    1.0 / (1.0 + libm::pow(cr / cfg.tau_s, cfg.beta))
}

/// Success sub-score: the success rate itself.
pub fn success_score(sr: f64) -> f64 {
    sr
}

/// Comfort sub-score: a mix of how rarely the robot crowds humans and how
/// much clearance it keeps.
///
/// `lambda_comf * (1 - dr)^gamma + (1 - lambda_comf) * clip(md / tau_md_min, 0, 1)`.
pub fn comfort_score(dr: f64, md: f64, cfg: &ScoringConfig) -> f64 {
    let f_dn = libm::pow(1.0 - dr, cfg.gamma);
    let f_md = (md / cfg.tau_md_min).clamp(0.0, 1.0);
    cfg.lambda_comf * f_dn + (1.0 - cfg.lambda_comf) * f_md
}

/// Trajectory sub-score: `(1 - cdr)^gamma`, rewarding smooth paths.
pub fn trajectory_score(cdr: f64, cfg: &ScoringConfig) -> f64 {
    libm::pow(1.0 - cdr, cfg.gamma)
}

/// Efficiency sub-score: `min(1, t_star / at)`.
///
/// Callers must ensure `at > 0`; batches without successes are handled by
/// [`comprehensive_score`], which defines the score as 0 there.
pub fn efficiency_score(at: f64, t_star: f64) -> f64 {
    debug_assert!(at > 0.0 && t_star > 0.0);
    (t_star / at).min(1.0)
}

/// Weighted total of five externally supplied sub-scores.
///
/// Used when sub-scores come from published results rather than raw
/// metrics. Validates the weight invariants first.
pub fn comprehensive_from_subscores(
    f_saf: f64,
    f_suc: f64,
    f_comf: f64,
    f_traj: f64,
    f_effic: f64,
    cfg: &ScoringConfig,
) -> Result<f64, ScoringError> {
    cfg.validate()?;
    let w = &cfg.weights;
    Ok(w.w_saf * f_saf
        + w.w_suc * f_suc
        + w.w_comf * f_comf
        + w.w_traj * f_traj
        + w.w_effic * f_effic)
}

/// Scores a batch: all five sub-scores plus their weighted total.
///
/// A batch with no successes gets an efficiency score of 0 and the
/// breakdown is flagged accordingly.
pub fn comprehensive_score(
    metrics: &BatchMetrics,
    cfg: &ScoringConfig,
) -> Result<ScoreBreakdown, ScoringError> {
    cfg.validate()?;
    let f_saf = safety_score(metrics.cr, cfg);
    let f_suc = success_score(metrics.sr);
    let f_comf = comfort_score(metrics.dr, metrics.md, cfg);
    let f_traj = trajectory_score(metrics.cdr, cfg);
    let efficiency_degenerate = !(metrics.sr > 0.0 && metrics.at > 0.0);
    let f_effic = if efficiency_degenerate {
        0.0
    } else {
        efficiency_score(metrics.at, cfg.t_star)
    };
    let comprehensive =
        comprehensive_from_subscores(f_saf, f_suc, f_comf, f_traj, f_effic, cfg)?;
    Ok(ScoreBreakdown {
        f_saf,
        f_suc,
        f_comf,
        f_traj,
        f_effic,
        comprehensive,
        efficiency_degenerate,
    })
}
