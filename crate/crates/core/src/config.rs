//! Run configuration: a flat key-value text format with dotted section keys.
//! Unknown keys are errors so typos surface immediately. The resolved config
//! is written back into every run directory in the same format.

use std::fmt::Write as _;
use std::path::Path;

use crate::env::EnvConfig;
use crate::error::FairserveError;
use crate::learner::{Algorithm, TrainConfig};
use crate::metrics::ScalarMode;
use crate::population::{
    PopulationWeights, AGE_VALUES, DISABILITY_VALUES, GENDER_VALUES, RACE_VALUES, SKIN_VALUES,
};
use crate::shaping::PenaltyConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct DetectorConfig {
    /// Scalar threshold the synthetic labeling oracle applies.
    pub oracle_threshold: f64,
    /// Probability of flipping an oracle label (rater disagreement stand-in).
    pub noise_rate: f64,
    /// Decision threshold of the fitted logistic classifier.
    pub decision_threshold: f64,
    pub logistic_lr: f64,
    pub logistic_iters: usize,
    pub holdout_frac: f64,
    /// Labeled epochs to generate for detector training.
    pub dataset_epochs: usize,
    /// Episodes per generated epoch.
    pub episodes_per_epoch: usize,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            oracle_threshold: 0.01,
            noise_rate: 0.05,
            decision_threshold: 0.5,
            logistic_lr: 2.0,
            logistic_iters: 50_000,
            holdout_frac: 0.2,
            dataset_epochs: 1000,
            episodes_per_epoch: 30,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub env: EnvConfig,
    pub weights: PopulationWeights,
    pub scalar_mode: ScalarMode,
    pub shaping: PenaltyConfig,
    pub detector: DetectorConfig,
    pub train: TrainConfig,
    pub eval_episodes: usize,
    pub checkpoint_every: usize,
    pub seed: u64,
    /// Optional policy checkpoint to start training from instead of a fresh
    /// initialization.
    pub init_policy: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            env: EnvConfig::default(),
            weights: PopulationWeights::default(),
            scalar_mode: ScalarMode::Mean,
            shaping: PenaltyConfig::default(),
            detector: DetectorConfig::default(),
            train: TrainConfig::default(),
            eval_episodes: 1000,
            checkpoint_every: 0,
            init_policy: None,
            seed: 0,
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, FairserveError>
where
    T::Err: std::fmt::Display,
{
    value
        .parse::<T>()
        .map_err(|e| FairserveError::Config(format!("{key}: {e}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool, FairserveError> {
    match value {
        "true" => Ok(true),
        "false" => Ok(false),
        other => Err(FairserveError::Config(format!("{key}: expected true/false, got {other}"))),
    }
}

fn parse_tau(key: &str, value: &str) -> Result<[f64; 4], FairserveError> {
    let parts: Result<Vec<f64>, _> =
        value.split(',').map(|p| parse_num::<f64>(key, p.trim())).collect();
    let parts = parts?;
    if parts.len() != 4 {
        return Err(FairserveError::Config(format!("{key}: expected 4 comma-separated values")));
    }
    if parts.iter().any(|t| *t < 0.0) {
        return Err(FairserveError::Config(format!("{key}: weights must be non-negative")));
    }
    Ok([parts[0], parts[1], parts[2], parts[3]])
}

fn weight_slot<'a>(
    weights: &'a mut PopulationWeights,
    attr: &str,
    value: &str,
) -> Result<&'a mut f64, FairserveError> {
    macro_rules! slot {
        ($field:ident, $values:expr, $n:literal, $fmt:expr) => {{
            let labels: Vec<String> = $values.iter().map($fmt).collect();
            let idx = labels.iter().position(|l| l == value).ok_or_else(|| {
                FairserveError::Config(format!(
                    "unknown {attr} value {value:?} (expected one of {})",
                    labels.join(", ")
                ))
            })?;
            Ok(&mut weights.$field.get_or_insert([1.0; $n])[idx])
        }};
    }
    match attr {
        "race" => slot!(race, RACE_VALUES, 6, |v| format!("{v:?}")),
        "gender" => slot!(gender, GENDER_VALUES, 3, |v| format!("{v:?}")),
        "age" => slot!(age, AGE_VALUES, 5, |v| format!("{v:?}")),
        "disability" => slot!(disability, DISABILITY_VALUES, 2, |v| v.to_string()),
        "skin" => slot!(skin, SKIN_VALUES, 6, |v| format!("{v:?}")),
        _ => Err(FairserveError::Config(format!("unknown attribute {attr:?}"))),
    }
}

impl RunConfig {
    pub fn apply(&mut self, key: &str, value: &str) -> Result<(), FairserveError> {
        match key {
            "env.init_dist_min" => self.env.init_dist_min = parse_num(key, value)?,
            "env.init_dist_max" => self.env.init_dist_max = parse_num(key, value)?,
            "env.walk_step_m" => self.env.walk_step_m = parse_num(key, value)?,
            "env.max_steps" => self.env.max_steps = parse_num(key, value)?,
            "env.appropriate_min_m" => self.env.appropriate_min_m = parse_num(key, value)?,
            "env.appropriate_max_m" => self.env.appropriate_max_m = parse_num(key, value)?,
            "env.late_threshold_steps" => self.env.late_threshold_steps = parse_num(key, value)?,
            "env.risky_dist_m" => self.env.risky_dist_m = parse_num(key, value)?,
            "metrics.scalar_mode" => {
                self.scalar_mode = match value {
                    "mean" => ScalarMode::Mean,
                    "sum" => ScalarMode::Sum,
                    other => {
                        return Err(FairserveError::Config(format!(
                            "{key}: expected mean or sum, got {other}"
                        )))
                    }
                }
            }
            "shaping.tau" => self.shaping.tau = parse_tau(key, value)?,
            "shaping.tau_preset" => {
                self.shaping.tau = match value {
                    "default" => [1.0, 1.0, 1.0, 1.0],
                    "risk_first" => PenaltyConfig::risk_first_tau(),
                    other => {
                        return Err(FairserveError::Config(format!(
                            "{key}: expected default or risk_first, got {other}"
                        )))
                    }
                }
            }
            "shaping.lambda_penalty" => {
                let v: f64 = parse_num(key, value)?;
                if !(0.0..=1.0).contains(&v) || v == 0.0 {
                    return Err(FairserveError::Config(format!("{key}: must be in (0, 1]")));
                }
                self.shaping.lambda_penalty = v;
            }
            "shaping.task_success_bonus" => self.shaping.task_success_bonus = parse_num(key, value)?,
            "shaping.step_cost" => {
                let v: f64 = parse_num(key, value)?;
                if v < 0.0 {
                    return Err(FairserveError::Config(format!("{key}: must be >= 0")));
                }
                self.shaping.step_cost = v;
            }
            "detector.oracle_threshold" => {
                let v: f64 = parse_num(key, value)?;
                if !(0.0 < v && v < 1.0) {
                    return Err(FairserveError::Config(format!("{key}: must be in (0, 1)")));
                }
                self.detector.oracle_threshold = v;
            }
            "detector.noise_rate" => {
                let v: f64 = parse_num(key, value)?;
                if !(0.0..0.5).contains(&v) {
                    return Err(FairserveError::Config(format!("{key}: must be in [0, 0.5)")));
                }
                self.detector.noise_rate = v;
            }
            "detector.decision_threshold" => {
                let v: f64 = parse_num(key, value)?;
                if !(0.0 < v && v < 1.0) {
                    return Err(FairserveError::Config(format!("{key}: must be in (0, 1)")));
                }
                self.detector.decision_threshold = v;
            }
            "detector.logistic_lr" => self.detector.logistic_lr = parse_num(key, value)?,
            "detector.logistic_iters" => self.detector.logistic_iters = parse_num(key, value)?,
            "detector.holdout_frac" => self.detector.holdout_frac = parse_num(key, value)?,
            "detector.dataset_epochs" => self.detector.dataset_epochs = parse_num(key, value)?,
            "detector.episodes_per_epoch" => {
                self.detector.episodes_per_epoch = parse_num(key, value)?
            }
            "learner.algorithm" => {
                self.train.algorithm = match value {
                    "reinforce" => Algorithm::Reinforce,
                    "ppo" => Algorithm::Ppo,
                    other => {
                        return Err(FairserveError::Config(format!(
                            "{key}: expected reinforce or ppo, got {other}"
                        )))
                    }
                }
            }
            "learner.guidance" => self.train.guidance = parse_bool(key, value)?,
            "learner.episodes_per_epoch" => {
                let v: usize = parse_num(key, value)?;
                if v == 0 {
                    return Err(FairserveError::Config(format!("{key}: must be >= 1")));
                }
                self.train.episodes_per_epoch = v;
            }
            "learner.gamma" => self.train.gamma = parse_num(key, value)?,
            "learner.epsilon" => {
                let v: f64 = parse_num(key, value)?;
                if v <= 0.0 {
                    return Err(FairserveError::Config(format!("{key}: must be > 0")));
                }
                self.train.epsilon = v;
            }
            "learner.ppo_inner_epochs" => self.train.ppo_inner_epochs = parse_num(key, value)?,
            "learner.lr" => self.train.lr = parse_num(key, value)?,
            "learner.total_epochs" => self.train.total_epochs = parse_num(key, value)?,
            "learner.hidden" => self.train.hidden = parse_num(key, value)?,
            "learner.random_actor_head" => {
                self.train.random_actor_head = parse_bool(key, value)?
            }
            "learner.actor_head_scale" => {
                let v: f64 = parse_num(key, value)?;
                if !(v > 0.0) {
                    return Err(FairserveError::Config(format!(
                        "{key}: must be positive, got {value}"
                    )));
                }
                self.train.actor_head_scale = v;
            }
            "learner.normalize_advantages" => {
                self.train.normalize_advantages = parse_bool(key, value)?
            }
            "eval.episodes" => self.eval_episodes = parse_num(key, value)?,
            "run.checkpoint_every" => self.checkpoint_every = parse_num(key, value)?,
            "run.init_policy" => self.init_policy = Some(value.to_string()),
            "run.seed" => {
                self.seed = parse_num(key, value)?;
                self.train.seed = self.seed;
            }
            _ => {
                if let Some(rest) = key.strip_prefix("population.weight.") {
                    let (attr, val) = rest.split_once('.').ok_or_else(|| {
                        FairserveError::Config(format!(
                            "expected population.weight.<attribute>.<value>, got {key:?}"
                        ))
                    })?;
                    let w: f64 = parse_num(key, value)?;
                    if w < 0.0 {
                        return Err(FairserveError::Config(format!("{key}: must be >= 0")));
                    }
                    *weight_slot(&mut self.weights, attr, val)? = w;
                } else {
                    return Err(FairserveError::Config(format!("unknown config key {key:?}")));
                }
            }
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<RunConfig, FairserveError> {
        let mut cfg = RunConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                FairserveError::Config(format!("line {}: expected key = value", lineno + 1))
            })?;
            cfg.apply(key.trim(), value.trim())?;
        }
        if cfg.env.init_dist_min > cfg.env.init_dist_max {
            return Err(FairserveError::Config(
                "env.init_dist_min must not exceed env.init_dist_max".into(),
            ));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<RunConfig, FairserveError> {
        RunConfig::parse(&std::fs::read_to_string(path)?)
    }

    /// Serializes every setting back to the flat key-value format.
    pub fn to_text(&self) -> String {
        let mut s = String::from("# fairserve resolved config v1\n");
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("run.seed", self.seed.to_string());
        kv("run.checkpoint_every", self.checkpoint_every.to_string());
        if let Some(p) = &self.init_policy {
            kv("run.init_policy", p.clone());
        }
        kv("env.init_dist_min", format!("{}", self.env.init_dist_min));
        kv("env.init_dist_max", format!("{}", self.env.init_dist_max));
        kv("env.walk_step_m", format!("{}", self.env.walk_step_m));
        kv("env.max_steps", self.env.max_steps.to_string());
        kv("env.appropriate_min_m", format!("{}", self.env.appropriate_min_m));
        kv("env.appropriate_max_m", format!("{}", self.env.appropriate_max_m));
        kv("env.late_threshold_steps", self.env.late_threshold_steps.to_string());
        kv("env.risky_dist_m", format!("{}", self.env.risky_dist_m));
        kv(
            "metrics.scalar_mode",
            match self.scalar_mode {
                ScalarMode::Mean => "mean".into(),
                ScalarMode::Sum => "sum".into(),
            },
        );
        kv(
            "shaping.tau",
            self.shaping.tau.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(","),
        );
        kv("shaping.lambda_penalty", format!("{}", self.shaping.lambda_penalty));
        kv("shaping.task_success_bonus", format!("{}", self.shaping.task_success_bonus));
        kv("shaping.step_cost", format!("{}", self.shaping.step_cost));
        kv("detector.oracle_threshold", format!("{}", self.detector.oracle_threshold));
        kv("detector.noise_rate", format!("{}", self.detector.noise_rate));
        kv("detector.decision_threshold", format!("{}", self.detector.decision_threshold));
        kv("detector.logistic_lr", format!("{}", self.detector.logistic_lr));
        kv("detector.logistic_iters", self.detector.logistic_iters.to_string());
        kv("detector.holdout_frac", format!("{}", self.detector.holdout_frac));
        kv("detector.dataset_epochs", self.detector.dataset_epochs.to_string());
        kv("detector.episodes_per_epoch", self.detector.episodes_per_epoch.to_string());
        kv(
            "learner.algorithm",
            match self.train.algorithm {
                Algorithm::Reinforce => "reinforce".into(),
                Algorithm::Ppo => "ppo".into(),
            },
        );
        kv("learner.guidance", self.train.guidance.to_string());
        kv("learner.episodes_per_epoch", self.train.episodes_per_epoch.to_string());
        kv("learner.gamma", format!("{}", self.train.gamma));
        kv("learner.epsilon", format!("{}", self.train.epsilon));
        kv("learner.ppo_inner_epochs", self.train.ppo_inner_epochs.to_string());
        kv("learner.lr", format!("{}", self.train.lr));
        kv("learner.total_epochs", self.train.total_epochs.to_string());
        kv("learner.hidden", self.train.hidden.to_string());
        kv("learner.normalize_advantages", self.train.normalize_advantages.to_string());
        kv("learner.random_actor_head", self.train.random_actor_head.to_string());
        kv("learner.actor_head_scale", format!("{}", self.train.actor_head_scale));
        kv("eval.episodes", self.eval_episodes.to_string());
        let weight_lines = |s: &mut String, attr: &str, labels: Vec<String>, w: Option<&[f64]>| {
            if let Some(w) = w {
                for (label, weight) in labels.iter().zip(w) {
                    let _ = writeln!(s, "population.weight.{attr}.{label} = {weight}");
                }
            }
        };
        weight_lines(
            &mut s,
            "race",
            RACE_VALUES.iter().map(|v| format!("{v:?}")).collect(),
            self.weights.race.as_ref().map(|w| w.as_slice()),
        );
        weight_lines(
            &mut s,
            "gender",
            GENDER_VALUES.iter().map(|v| format!("{v:?}")).collect(),
            self.weights.gender.as_ref().map(|w| w.as_slice()),
        );
        weight_lines(
            &mut s,
            "age",
            AGE_VALUES.iter().map(|v| format!("{v:?}")).collect(),
            self.weights.age.as_ref().map(|w| w.as_slice()),
        );
        weight_lines(
            &mut s,
            "disability",
            DISABILITY_VALUES.iter().map(|v| v.to_string()).collect(),
            self.weights.disability.as_ref().map(|w| w.as_slice()),
        );
        weight_lines(
            &mut s,
            "skin",
            SKIN_VALUES.iter().map(|v| format!("{v:?}")).collect(),
            self.weights.skin.as_ref().map(|w| w.as_slice()),
        );
        s
    }
}
