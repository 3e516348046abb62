//! Reward shaping: weighted fairness reward, multiplicative detection
//! penalty, and a small task-progress term.

use serde::{Deserialize, Serialize};

use crate::env::EpisodeRecord;
use crate::metrics::IssueScoreVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PenaltyConfig {
    /// Per-issue weights in order (willingness, quality, priority, risk).
    pub tau: [f64; 4],
    pub lambda_penalty: f64,
    pub task_success_bonus: f64,
    pub step_cost: f64,
}

impl Default for PenaltyConfig {
    fn default() -> Self {
        PenaltyConfig {
            tau: [1.0, 1.0, 1.0, 1.0],
            lambda_penalty: 0.5,
            task_success_bonus: 1.0,
            step_cost: 0.001,
        }
    }
}

impl PenaltyConfig {
    /// Preset weighting risk first-class and willingness second-class.
    pub fn risk_first_tau() -> [f64; 4] {
        [2.0, 1.0, 1.0, 4.0]
    }
}

/// Dot product tau . (1 - I).
pub fn fairness_reward(issue: &IssueScoreVector, tau: &[f64; 4]) -> f64 {
    issue
        .as_array()
        .iter()
        .zip(tau)
        .map(|(i, t)| t * (1.0 - i))
        .sum()
}

pub fn apply_detection_penalty(reward: f64, biased: bool, lambda: f64) -> f64 {
    if biased {
        lambda * reward
    } else {
        reward
    }
}

/// Steps consumed by an episode: the response step, or the full budget when
/// the requester was ignored.
pub fn steps_used(record: &EpisodeRecord, max_steps: usize) -> usize {
    record.response_step.unwrap_or(max_steps)
}

/// Task term plus the (possibly penalized) epoch fairness term.
pub fn episode_reward(
    record: &EpisodeRecord,
    epoch_issue: &IssueScoreVector,
    biased: bool,
    cfg: &PenaltyConfig,
    max_steps: usize,
) -> f64 {
    let task = if record.responded { cfg.task_success_bonus } else { 0.0 }
        - cfg.step_cost * steps_used(record, max_steps) as f64;
    let fairness =
        apply_detection_penalty(fairness_reward(epoch_issue, &cfg.tau), biased, cfg.lambda_penalty);
    task + fairness
}
