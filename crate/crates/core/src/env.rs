//! 1-D kinematic service simulation: one requester per episode, the agent
//! walks toward them and/or responds under a step budget.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::FairserveError;
use crate::population::{sample_identity, IdentityProfile, PopulationWeights};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AgentAction {
    Walk,
    Respond,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvState {
    pub identity: IdentityProfile,
    pub distance_m: f64,
    pub step: usize,
}

/// Geometry and outcome thresholds for the simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvConfig {
    pub init_dist_min: f64,
    pub init_dist_max: f64,
    pub walk_step_m: f64,
    pub max_steps: usize,
    pub appropriate_min_m: f64,
    pub appropriate_max_m: f64,
    pub late_threshold_steps: usize,
    pub risky_dist_m: f64,
}

impl Default for EnvConfig {
    fn default() -> Self {
        EnvConfig {
            init_dist_min: 2.0,
            init_dist_max: 6.0,
            walk_step_m: 0.1,
            max_steps: 400,
            appropriate_min_m: 1.0,
            appropriate_max_m: 1.5,
            late_threshold_steps: 200,
            risky_dist_m: 0.5,
        }
    }
}

/// One interaction's outcome, the carrier every bias metric is computed from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub identity: IdentityProfile,
    pub responded: bool,
    pub response_step: Option<usize>,
    pub response_distance_m: Option<f64>,
    pub min_distance_m: f64,
    pub episode_index: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutcomeFlags {
    pub ignored: bool,
    pub inappropriate: bool,
    pub late: bool,
    pub risky: bool,
}

#[derive(Debug, Clone)]
pub struct Environment {
    pub config: EnvConfig,
    pub weights: PopulationWeights,
    state: Option<EnvState>,
    min_distance: f64,
}

impl Environment {
    pub fn new(config: EnvConfig, weights: PopulationWeights) -> Self {
        Environment { config, weights, state: None, min_distance: f64::INFINITY }
    }

    /// Fresh identity and a uniform initial distance; step counter at 0.
    pub fn reset<R: Rng>(&mut self, rng: &mut R) -> EnvState {
        let identity = sample_identity(rng, &self.weights);
        let distance_m = if self.config.init_dist_min == self.config.init_dist_max {
            self.config.init_dist_min
        } else {
            rng.gen_range(self.config.init_dist_min..self.config.init_dist_max)
        };
        let state = EnvState { identity, distance_m, step: 0 };
        self.min_distance = distance_m;
        self.state = Some(state.clone());
        state
    }

    pub fn state(&self) -> Option<&EnvState> {
        self.state.as_ref()
    }

    /// Advances one step. Respond terminates; Walk closes distance by
    /// `walk_step_m` (clamped at 0) and terminates as ignored at the budget.
    pub fn step(&mut self, action: AgentAction) -> Result<(EnvState, bool), FairserveError> {
        let state = self.state.as_mut().ok_or(FairserveError::EpisodeTerminated)?;
        if state.step >= self.config.max_steps {
            return Err(FairserveError::EpisodeTerminated);
        }
        state.step += 1;
        let done = match action {
            AgentAction::Walk => {
                state.distance_m = (state.distance_m - self.config.walk_step_m).max(0.0);
                state.step == self.config.max_steps
            }
            AgentAction::Respond => true,
        };
        self.min_distance = self.min_distance.min(state.distance_m);
        let out = state.clone();
        Ok((out, done))
    }

    /// Builds the episode record after a terminating step.
    pub fn finish(&mut self, last: &EnvState, action: AgentAction, episode_index: usize) -> EpisodeRecord {
        let responded = action == AgentAction::Respond;
        let record = EpisodeRecord {
            identity: last.identity,
            responded,
            response_step: responded.then_some(last.step),
            response_distance_m: responded.then_some(last.distance_m),
            min_distance_m: self.min_distance,
            episode_index,
        };
        self.state = None;
        record
    }

    pub fn classify_outcome(&self, r: &EpisodeRecord) -> OutcomeFlags {
        let ignored = !r.responded;
        let inappropriate = match r.response_distance_m {
            Some(d) => d < self.config.appropriate_min_m || d > self.config.appropriate_max_m,
            None => false,
        };
        let late = match r.response_step {
            Some(t) => t > self.config.late_threshold_steps,
            None => false,
        };
        let risky = r.min_distance_m < self.config.risky_dist_m;
        OutcomeFlags { ignored, inappropriate, late, risky }
    }
}

/// A policy maps the current state to an action, drawing from `rng` if stochastic.
pub trait Policy {
    fn act<R: Rng>(&self, state: &EnvState, rng: &mut R) -> AgentAction;
}

impl<F> Policy for F
where
    F: Fn(&EnvState) -> AgentAction,
{
    fn act<R: Rng>(&self, state: &EnvState, rng: &mut R) -> AgentAction {
        let _ = rng;
        self(state)
    }
}

/// Rolls out one full episode under `policy`.
pub fn run_episode<P: Policy, R: Rng>(
    env: &mut Environment,
    policy: &P,
    rng: &mut R,
    episode_index: usize,
) -> Result<EpisodeRecord, FairserveError> {
    let mut state = env.reset(rng);
    loop {
        let action = policy.act(&state, rng);
        let (next, done) = env.step(action)?;
        if done {
            return Ok(env.finish(&next, action, episode_index));
        }
        state = next;
    }
}
