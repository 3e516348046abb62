//! Policy-gradient training loop: per epoch, collect a batch of service
//! episodes under a frozen policy snapshot, score the epoch's bias issues,
//! shape rewards (with the detector penalty when guidance is on), and update
//! the actor-critic by REINFORCE or clipped-surrogate PPO.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::detector::DetectorModel;
use crate::env::{AgentAction, Environment, EpisodeRecord};
use crate::error::FairserveError;
use crate::metrics::{total_issue_scalar, total_issue_vector, IssueScoreVector, ScalarMode};
use crate::nn::{encode_state, sgd_step, ActorCriticParams};
use crate::population::{enumerate_groups, SensitiveGroup};
use crate::shaping::{episode_reward, steps_used, PenaltyConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Algorithm {
    Reinforce,
    Ppo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub algorithm: Algorithm,
    pub guidance: bool,
    /// Episodes (served people) per training epoch.
    pub episodes_per_epoch: usize,
    pub gamma: f64,
    pub epsilon: f64,
    pub ppo_inner_epochs: usize,
    pub lr: f64,
    pub total_epochs: usize,
    pub seed: u64,
    pub hidden: usize,
    pub normalize_advantages: bool,
    /// Keep the random actor-head initialization instead of zeroing it, so
    /// the starting policy is already identity-dependent.
    pub random_actor_head: bool,
    /// Multiplier on the random actor-head init range (only used when
    /// `random_actor_head` is on).
    pub actor_head_scale: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            algorithm: Algorithm::Ppo,
            guidance: false,
            episodes_per_epoch: 30,
            gamma: 0.99,
            epsilon: 0.2,
            ppo_inner_epochs: 4,
            lr: 3e-3,
            total_epochs: 300,
            seed: 0,
            hidden: crate::nn::DEFAULT_HIDDEN,
            normalize_advantages: false,
            random_actor_head: false,
            actor_head_scale: 1.0,
        }
    }
}

/// One sampled step: encoding, chosen action, behavior-policy log-prob, and
/// the shaped reward (filled in after the epoch's issue vector is known).
#[derive(Debug, Clone)]
pub struct StepSample {
    pub encoding: Vec<f64>,
    pub action: usize,
    pub log_prob: f64,
    pub reward: f64,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub steps: Vec<StepSample>,
    pub episode_index: usize,
}

pub fn action_from_index(a: usize) -> AgentAction {
    if a == 0 {
        AgentAction::Walk
    } else {
        AgentAction::Respond
    }
}

fn sample_action<R: Rng>(probs: &[f64], rng: &mut R) -> usize {
    let x: f64 = rng.gen_range(0.0..1.0);
    if x < probs[0] {
        0
    } else {
        1
    }
}

/// Rolls out `t_episodes` under the frozen `snapshot`, recording log-probs at
/// sampling time. Rewards are left at zero.
pub fn collect_epoch<R: Rng>(
    snapshot: &ActorCriticParams,
    env: &mut Environment,
    t_episodes: usize,
    rng: &mut R,
) -> Result<(Vec<Trajectory>, Vec<EpisodeRecord>), FairserveError> {
    let mut trajectories = Vec::with_capacity(t_episodes);
    let mut records = Vec::with_capacity(t_episodes);
    for episode_index in 0..t_episodes {
        let mut state = env.reset(rng);
        let mut steps = Vec::new();
        let record = loop {
            let encoding = encode_state(&state, &env.config);
            let (probs, _) = snapshot.actor_forward(&encoding);
            let action = sample_action(&probs, rng);
            steps.push(StepSample {
                encoding,
                action,
                log_prob: probs[action].ln(),
                reward: 0.0,
            });
            let (next, done) = env.step(action_from_index(action))?;
            if done {
                break env.finish(&next, action_from_index(action), episode_index);
            }
            state = next;
        };
        trajectories.push(Trajectory { steps, episode_index });
        records.push(record);
    }
    Ok((trajectories, records))
}

/// Writes shaped rewards into the collected trajectories: every step pays the
/// step cost; the terminal step additionally carries the task bonus and the
/// (possibly penalized) epoch fairness term.
pub fn assign_rewards(
    trajectories: &mut [Trajectory],
    records: &[EpisodeRecord],
    epoch_issue: &IssueScoreVector,
    biased: bool,
    shaping: &PenaltyConfig,
    max_steps: usize,
) {
    for (traj, record) in trajectories.iter_mut().zip(records) {
        let total = episode_reward(record, epoch_issue, biased, shaping, max_steps);
        let n = traj.steps.len();
        let step_part = -shaping.step_cost * steps_used(record, max_steps) as f64 / n as f64;
        for s in traj.steps.iter_mut() {
            s.reward = step_part;
        }
        // remainder of the episode reward lands on the terminal step
        traj.steps[n - 1].reward += total - step_part * n as f64;
    }
}

/// Discounted return-to-go per step, with a terminal bootstrap value
/// (0 at genuine episode end).
pub fn returns_to_go(rewards: &[f64], gamma: f64, bootstrap: f64) -> Vec<f64> {
    let mut out = vec![0.0; rewards.len()];
    let mut acc = bootstrap;
    for t in (0..rewards.len()).rev() {
        acc = rewards[t] + gamma * acc;
        out[t] = acc;
    }
    out
}

/// Eq.-style advantage: return-to-go (plus discounted bootstrap) minus the
/// critic's value at each visited state.
pub fn advantages(
    traj: &Trajectory,
    params: &ActorCriticParams,
    gamma: f64,
    bootstrap: f64,
) -> Vec<f64> {
    let rewards: Vec<f64> = traj.steps.iter().map(|s| s.reward).collect();
    let returns = returns_to_go(&rewards, gamma, bootstrap);
    traj.steps
        .iter()
        .zip(&returns)
        .map(|(s, g)| g - params.critic_forward(&s.encoding).0)
        .collect()
}

/// pi_theta(a|s) / pi_old(a|s), from the stored behavior log-prob.
pub fn probability_ratio(
    params: &ActorCriticParams,
    encoding: &[f64],
    action: usize,
    old_log_prob: f64,
) -> f64 {
    let (probs, _) = params.actor_forward(encoding);
    (probs[action].ln() - old_log_prob).exp()
}

/// Negated clipped-surrogate objective, averaged over steps.
pub fn ppo_loss(ratios: &[f64], advantages: &[f64], epsilon: f64) -> f64 {
    let n = ratios.len() as f64;
    let objective: f64 = ratios
        .iter()
        .zip(advantages)
        .map(|(r, a)| (r * a).min(r.clamp(1.0 - epsilon, 1.0 + epsilon) * a))
        .sum();
    -objective / n
}

fn norm_advantages(advs: &mut [f64]) {
    let n = advs.len() as f64;
    if n < 2.0 {
        return;
    }
    let mean: f64 = advs.iter().sum::<f64>() / n;
    let var: f64 = advs.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt().max(1e-8);
    for a in advs.iter_mut() {
        *a = (*a - mean) / std;
    }
}

/// One REINFORCE step: gradient ascent on mean log pi(a|s) * G. Critic unused.
pub fn reinforce_update(
    params: &mut ActorCriticParams,
    trajectories: &[Trajectory],
    gamma: f64,
    lr: f64,
) -> Result<(), FairserveError> {
    let total_steps: usize = trajectories.iter().map(|t| t.steps.len()).sum();
    if total_steps == 0 {
        return Ok(());
    }
    let scale = 1.0 / total_steps as f64;
    let mut grads = params.actor.zero_grads();
    for traj in trajectories {
        let rewards: Vec<f64> = traj.steps.iter().map(|s| s.reward).collect();
        let returns = returns_to_go(&rewards, gamma, 0.0);
        for (s, g) in traj.steps.iter().zip(&returns) {
            let (probs, cache) = params.actor_forward(&s.encoding);
            // d(-log pi(a)) / d logits = probs - onehot(a), weighted by G
            let mut d = [probs[0] * g * scale, probs[1] * g * scale];
            d[s.action] -= g * scale;
            params.actor.backward(&cache, &d, &mut grads);
        }
    }
    sgd_step(&mut params.actor, &grads, lr)
}

/// PPO update: `ppo_inner_epochs` full-batch descent passes on the negated
/// clipped surrogate plus the critic squared-error loss. Ratios are taken
/// against the behavior log-probs stored in the trajectories; advantages are
/// computed once from the pre-update critic and held fixed.
pub fn ppo_update(
    params: &mut ActorCriticParams,
    trajectories: &[Trajectory],
    cfg: &TrainConfig,
) -> Result<(), FairserveError> {
    let total_steps: usize = trajectories.iter().map(|t| t.steps.len()).sum();
    if total_steps == 0 {
        return Ok(());
    }
    let scale = 1.0 / total_steps as f64;

    let mut advs: Vec<f64> = Vec::with_capacity(total_steps);
    let mut returns: Vec<f64> = Vec::with_capacity(total_steps);
    for traj in trajectories {
        let rewards: Vec<f64> = traj.steps.iter().map(|s| s.reward).collect();
        let ret = returns_to_go(&rewards, cfg.gamma, 0.0);
        for (s, g) in traj.steps.iter().zip(&ret) {
            advs.push(g - params.critic_forward(&s.encoding).0);
            returns.push(*g);
        }
    }
    if cfg.normalize_advantages {
        norm_advantages(&mut advs);
    }

    for _ in 0..cfg.ppo_inner_epochs {
        let mut actor_grads = params.actor.zero_grads();
        let mut critic_grads = params.critic.zero_grads();
        let mut k = 0usize;
        for traj in trajectories {
            for s in &traj.steps {
                let adv = advs[k];
                let (probs, cache) = params.actor_forward(&s.encoding);
                let ratio = (probs[s.action].ln() - s.log_prob).exp();
                let clipped = ratio.clamp(1.0 - cfg.epsilon, 1.0 + cfg.epsilon);
                // gradient flows only through the active, unclipped branch
                let active = ratio * adv <= clipped * adv + 1e-18;
                if active && adv != 0.0 {
                    // d(-ratio*adv)/d logits = -adv * ratio * (onehot - probs)
                    let coeff = -adv * ratio * scale;
                    let mut d = [-coeff * probs[0], -coeff * probs[1]];
                    d[s.action] += coeff;
                    params.actor.backward(&cache, &d, &mut actor_grads);
                }
                let (value, vcache) = params.critic_forward(&s.encoding);
                let dv = 2.0 * (value - returns[k]) * scale;
                params.critic.backward(&vcache, &[dv], &mut critic_grads);
                k += 1;
            }
        }
        sgd_step(&mut params.actor, &actor_grads, cfg.lr)?;
        sgd_step(&mut params.critic, &critic_grads, cfg.lr)?;
    }
    Ok(())
}

/// One epoch's log record; the per-epoch line in the run log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub issue: IssueScoreVector,
    pub scalar: f64,
    pub excluded_groups: usize,
    pub detector_verdict: Option<bool>,
    pub detector_probability: Option<f64>,
    pub mean_reward: f64,
    pub episodes_ignored: usize,
    pub episodes_inappropriate: usize,
    pub episodes_late: usize,
    pub episodes_risky: usize,
}

#[derive(Debug)]
pub struct TrainResult {
    pub params: ActorCriticParams,
    pub epoch_logs: Vec<EpochLog>,
    pub detector_queries: usize,
}

/// Full training run. The detector must be present when guidance is on. A
/// detector supplied with guidance off is still queried each epoch so the run
/// log carries a verdict, but the reward penalty is only applied under
/// guidance.
pub fn train<R: Rng>(
    cfg: &TrainConfig,
    shaping: &PenaltyConfig,
    scalar_mode: ScalarMode,
    env: &mut Environment,
    detector: Option<&DetectorModel>,
    rng: &mut R,
    on_epoch: impl FnMut(&EpochLog, &ActorCriticParams, &[EpisodeRecord]),
) -> Result<TrainResult, FairserveError> {
    train_from(cfg, shaping, scalar_mode, env, detector, None, rng, on_epoch)
}

/// [`train`] starting from a supplied policy instead of a fresh
/// initialization, e.g. one pretrained on biased demonstrations.
#[allow(clippy::too_many_arguments)]
pub fn train_from<R: Rng>(
    cfg: &TrainConfig,
    shaping: &PenaltyConfig,
    scalar_mode: ScalarMode,
    env: &mut Environment,
    detector: Option<&DetectorModel>,
    initial: Option<ActorCriticParams>,
    rng: &mut R,
    mut on_epoch: impl FnMut(&EpochLog, &ActorCriticParams, &[EpisodeRecord]),
) -> Result<TrainResult, FairserveError> {
    if cfg.guidance && detector.is_none() {
        return Err(FairserveError::Config(
            "guidance requires a pre-trained detector checkpoint".into(),
        ));
    }
    let groups: Vec<SensitiveGroup> = enumerate_groups();
    let mut params = initial.unwrap_or_else(|| {
        ActorCriticParams::init_with(cfg.hidden, rng, !cfg.random_actor_head, cfg.actor_head_scale)
    });
    let mut epoch_logs = Vec::with_capacity(cfg.total_epochs);
    let mut detector_queries = 0usize;

    for epoch in 0..cfg.total_epochs {
        let at = |e: FairserveError| FairserveError::AtEpoch { epoch, source: Box::new(e) };
        let snapshot = params.clone();
        let (mut trajectories, records) =
            collect_epoch(&snapshot, env, cfg.episodes_per_epoch, rng).map_err(at)?;
        let total =
            total_issue_vector(env, &records, &groups).map_err(at)?;
        let scalar = total_issue_scalar(&total.vector, scalar_mode);

        let (verdict, probability) = match detector {
            Some(d) => {
                detector_queries += 1;
                let (p, flagged) = d.predict(&total.vector);
                (Some(flagged), Some(p))
            }
            None => (None, None),
        };
        let biased = cfg.guidance && verdict == Some(true);

        assign_rewards(
            &mut trajectories,
            &records,
            &total.vector,
            biased,
            shaping,
            env.config.max_steps,
        );
        let mean_reward = records
            .iter()
            .map(|r| episode_reward(r, &total.vector, biased, shaping, env.config.max_steps))
            .sum::<f64>()
            / records.len() as f64;

        match cfg.algorithm {
            Algorithm::Reinforce => reinforce_update(&mut params, &trajectories, cfg.gamma, cfg.lr)
                .map_err(at)?,
            Algorithm::Ppo => ppo_update(&mut params, &trajectories, cfg).map_err(at)?,
        }

        let mut counts = [0usize; 4];
        for r in &records {
            let f = env.classify_outcome(r);
            counts[0] += f.ignored as usize;
            counts[1] += f.inappropriate as usize;
            counts[2] += f.late as usize;
            counts[3] += f.risky as usize;
        }
        let log = EpochLog {
            epoch,
            issue: total.vector,
            scalar,
            excluded_groups: total.excluded_groups,
            detector_verdict: verdict,
            detector_probability: probability,
            mean_reward,
            episodes_ignored: counts[0],
            episodes_inappropriate: counts[1],
            episodes_late: counts[2],
            episodes_risky: counts[3],
        };
        on_epoch(&log, &params, &records);
        epoch_logs.push(log);
    }
    Ok(TrainResult { params, epoch_logs, detector_queries })
}
