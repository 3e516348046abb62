//! Per-group bias issue rates and the group-averaged issue vector.
//!
//! For each sensitive group, each of the four issue scores is the absolute
//! difference between the in-group and out-group empirical rates of one
//! outcome event: ignored, inappropriate, late, risky.

use serde::{Deserialize, Serialize};

use crate::env::{Environment, EpisodeRecord};
use crate::error::FairserveError;
use crate::population::{in_group, SensitiveGroup};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IssueScoreVector {
    pub willingness: f64,
    pub quality: f64,
    pub priority: f64,
    pub risk: f64,
}

impl IssueScoreVector {
    pub const ZERO: IssueScoreVector =
        IssueScoreVector { willingness: 0.0, quality: 0.0, priority: 0.0, risk: 0.0 };

    pub fn as_array(&self) -> [f64; 4] {
        [self.willingness, self.quality, self.priority, self.risk]
    }

    pub fn from_array(a: [f64; 4]) -> IssueScoreVector {
        IssueScoreVector { willingness: a[0], quality: a[1], priority: a[2], risk: a[3] }
    }
}

/// How the 4-vector reduces to the plotted scalar.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScalarMode {
    Mean,
    Sum,
}

impl Default for ScalarMode {
    fn default() -> Self {
        ScalarMode::Mean
    }
}

pub fn total_issue_scalar(v: &IssueScoreVector, mode: ScalarMode) -> f64 {
    let sum: f64 = v.as_array().iter().sum();
    match mode {
        ScalarMode::Mean => sum / 4.0,
        ScalarMode::Sum => sum,
    }
}

/// Issue vector of one group against its complement.
pub fn group_issue_vector(
    env: &Environment,
    records: &[EpisodeRecord],
    g: &SensitiveGroup,
) -> Result<IssueScoreVector, FairserveError> {
    let mut n_in = 0usize;
    let mut n_out = 0usize;
    // event counts: [ignored, inappropriate, late, risky] for in/out
    let mut c_in = [0usize; 4];
    let mut c_out = [0usize; 4];
    for r in records {
        let flags = env.classify_outcome(r);
        let events = [flags.ignored, flags.inappropriate, flags.late, flags.risky];
        if in_group(&r.identity, g) {
            n_in += 1;
            for (c, e) in c_in.iter_mut().zip(events) {
                *c += e as usize;
            }
        } else {
            n_out += 1;
            for (c, e) in c_out.iter_mut().zip(events) {
                *c += e as usize;
            }
        }
    }
    if n_in == 0 || n_out == 0 {
        return Err(FairserveError::EmptySide(g.label()));
    }
    let mut diffs = [0.0; 4];
    for i in 0..4 {
        let p_in = c_in[i] as f64 / n_in as f64;
        let p_out = c_out[i] as f64 / n_out as f64;
        diffs[i] = (p_in - p_out).abs();
    }
    Ok(IssueScoreVector::from_array(diffs))
}

/// Group-averaged issue vector plus the count of groups excluded for having
/// an empty side in this batch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TotalIssue {
    pub vector: IssueScoreVector,
    pub excluded_groups: usize,
}

/// Component-wise mean over all groups with both sides populated.
pub fn total_issue_vector(
    env: &Environment,
    records: &[EpisodeRecord],
    groups: &[SensitiveGroup],
) -> Result<TotalIssue, FairserveError> {
    let mut acc = [0.0; 4];
    let mut valid = 0usize;
    let mut excluded = 0usize;
    for g in groups {
        match group_issue_vector(env, records, g) {
            Ok(v) => {
                for (a, x) in acc.iter_mut().zip(v.as_array()) {
                    *a += x;
                }
                valid += 1;
            }
            Err(FairserveError::EmptySide(_)) => excluded += 1,
            Err(e) => return Err(e),
        }
    }
    if valid == 0 {
        return Err(FairserveError::NoValidGroups);
    }
    for a in acc.iter_mut() {
        *a /= valid as f64;
    }
    Ok(TotalIssue { vector: IssueScoreVector::from_array(acc), excluded_groups: excluded })
}
