//! Independent naive reimplementations used as test oracles. Nothing here is
//! called by the library itself; tests compare its answers against the real
//! code paths.

#![doc(hidden)]

use rand::Rng;

use crate::env::{Environment, EpisodeRecord};
use crate::error::FairserveError;
use crate::metrics::{IssueScoreVector, TotalIssue};
use crate::population::{sample_identity, PopulationWeights, SensitiveGroup, ATTRIBUTES};

/// Random synthetic episode records covering all outcome combinations.
pub fn random_records<R: Rng>(rng: &mut R, n: usize) -> Vec<EpisodeRecord> {
    let weights = PopulationWeights::default();
    (0..n)
        .map(|i| {
            let identity = sample_identity(rng, &weights);
            let responded = rng.gen_bool(0.7);
            let (response_step, response_distance_m, min_distance_m) = if responded {
                let step = rng.gen_range(1..400);
                let dist: f64 = rng.gen_range(0.0..3.0);
                (Some(step), Some(dist), dist.min(rng.gen_range(0.0..3.0)))
            } else {
                (None, None, rng.gen_range(0.0..3.0))
            };
            EpisodeRecord {
                identity,
                responded,
                response_step,
                response_distance_m,
                min_distance_m,
                episode_index: i,
            }
        })
        .collect()
}

fn naive_flags(env: &Environment, r: &EpisodeRecord) -> [bool; 4] {
    let cfg = &env.config;
    let ignored = !r.responded;
    let inappropriate = if let Some(d) = r.response_distance_m {
        !(d >= cfg.appropriate_min_m && d <= cfg.appropriate_max_m)
    } else {
        false
    };
    let late = matches!(r.response_step, Some(t) if t > cfg.late_threshold_steps);
    let risky = r.min_distance_m < cfg.risky_dist_m;
    [ignored, inappropriate, late, risky]
}

fn attr_index(g: &SensitiveGroup) -> usize {
    ATTRIBUTES.iter().position(|a| *a == g.attribute).unwrap()
}

/// Recounts one group's issue vector by explicit list partitioning.
pub fn naive_group_issue(
    env: &Environment,
    records: &[EpisodeRecord],
    g: &SensitiveGroup,
) -> Result<IssueScoreVector, FairserveError> {
    let a = attr_index(g);
    let (members, rest): (Vec<_>, Vec<_>) = records
        .iter()
        .partition(|r| r.identity.attribute_indices()[a] == g.value_index);
    if members.is_empty() || rest.is_empty() {
        return Err(FairserveError::EmptySide(g.label()));
    }
    let rate = |side: &[&EpisodeRecord], event: usize| -> f64 {
        side.iter().filter(|r| naive_flags(env, r)[event]).count() as f64 / side.len() as f64
    };
    let mut out = [0.0; 4];
    for (event, slot) in out.iter_mut().enumerate() {
        *slot = (rate(&members, event) - rate(&rest, event)).abs();
    }
    Ok(IssueScoreVector::from_array(out))
}

/// Recounts the group-averaged issue vector.
pub fn naive_total_issue(
    env: &Environment,
    records: &[EpisodeRecord],
    groups: &[SensitiveGroup],
) -> Result<TotalIssue, FairserveError> {
    let mut vectors = Vec::new();
    let mut excluded = 0usize;
    for g in groups {
        match naive_group_issue(env, records, g) {
            Ok(v) => vectors.push(v.as_array()),
            Err(FairserveError::EmptySide(_)) => excluded += 1,
            Err(e) => return Err(e),
        }
    }
    if vectors.is_empty() {
        return Err(FairserveError::NoValidGroups);
    }
    let mut mean = [0.0; 4];
    for v in &vectors {
        for i in 0..4 {
            mean[i] += v[i];
        }
    }
    for m in mean.iter_mut() {
        *m /= vectors.len() as f64;
    }
    Ok(TotalIssue { vector: IssueScoreVector::from_array(mean), excluded_groups: excluded })
}

/// Discounted return-to-go, written as the direct double loop.
pub fn naive_returns(rewards: &[f64], gamma: f64) -> Vec<f64> {
    (0..rewards.len())
        .map(|t| {
            rewards[t..]
                .iter()
                .enumerate()
                .map(|(k, r)| gamma.powi(k as i32) * r)
                .sum()
        })
        .collect()
}
