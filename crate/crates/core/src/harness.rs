//! Experiment orchestration: scripted policies, detector-data generation,
//! detector training, guided/unguided training runs, evaluation, and run
//! comparison. All output files are line-delimited structured text with an
//! embedded format version.
//!
//! Episode log field names (one object per line): `epoch`, `episode_index`,
//! `race`, `gender`, `age_band`, `disabled`, `skin_type`, `responded`,
//! `response_step`, `response_distance_m`, `min_distance_m`.

use std::cell::Cell;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::detector::{fit_logistic, fit_pca, oracle_label, project, DetectorModel, LabeledEpoch};
use crate::env::{run_episode, AgentAction, EnvState, Environment, EpisodeRecord, Policy};
use crate::error::FairserveError;
use crate::learner::EpochLog;
use crate::metrics::{
    total_issue_scalar, total_issue_vector, IssueScoreVector, TotalIssue,
};
use crate::nn::{encode_state, ActorCriticParams};
use crate::population::{enumerate_groups, in_group, SensitiveGroup};

// ---------------------------------------------------------------------------
// scripted policies

/// Serves everyone the same way: walk into the appropriate band, respond.
pub struct FairScripted {
    pub respond_at_m: f64,
}

impl Policy for FairScripted {
    fn act<R: Rng>(&self, state: &EnvState, _rng: &mut R) -> AgentAction {
        if state.distance_m <= self.respond_at_m + 1e-9 {
            AgentAction::Respond
        } else {
            AgentAction::Walk
        }
    }
}

/// How a mistreated requester is handled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BiasStyle {
    /// Never respond; the episode times out.
    Ignore,
    /// Respond only after the lateness threshold has passed.
    Late,
    /// Walk well past the appropriate band, then respond dangerously close.
    Close,
    /// Respond immediately at the initial (too far) distance.
    Far,
}

/// Mistreats in-group requesters with a given probability, serving everyone
/// else like [`FairScripted`]. The per-episode decision is drawn on the
/// episode's first step.
pub struct BiasedScripted {
    pub target: SensitiveGroup,
    pub severity: f64,
    pub style: BiasStyle,
    pub respond_at_m: f64,
    pub late_after_steps: usize,
    mistreat: Cell<bool>,
}

impl BiasedScripted {
    pub fn new(
        target: SensitiveGroup,
        severity: f64,
        style: BiasStyle,
        respond_at_m: f64,
        late_after_steps: usize,
    ) -> Self {
        BiasedScripted { target, severity, style, respond_at_m, late_after_steps, mistreat: Cell::new(false) }
    }
}

impl Policy for BiasedScripted {
    fn act<R: Rng>(&self, state: &EnvState, rng: &mut R) -> AgentAction {
        if state.step == 0 {
            let hit = in_group(&state.identity, &self.target)
                && (self.severity >= 1.0 || rng.gen_bool(self.severity));
            self.mistreat.set(hit);
        }
        if !self.mistreat.get() {
            return if state.distance_m <= self.respond_at_m + 1e-9 {
                AgentAction::Respond
            } else {
                AgentAction::Walk
            };
        }
        match self.style {
            BiasStyle::Ignore => AgentAction::Walk,
            BiasStyle::Late => {
                if state.step > self.late_after_steps {
                    AgentAction::Respond
                } else {
                    AgentAction::Walk
                }
            }
            BiasStyle::Close => {
                if state.distance_m <= 0.25 {
                    AgentAction::Respond
                } else {
                    AgentAction::Walk
                }
            }
            BiasStyle::Far => AgentAction::Respond,
        }
    }
}

/// Samples actions from a trained actor checkpoint.
pub struct NetworkPolicy {
    pub params: ActorCriticParams,
}

impl Policy for NetworkPolicy {
    fn act<R: Rng>(&self, state: &EnvState, rng: &mut R) -> AgentAction {
        // encoding needs env geometry; NetworkPolicy is always used through
        // EnvAwarePolicy below
        let _ = (state, rng);
        unreachable!("NetworkPolicy must be wrapped with env config");
    }
}

/// Network policy bound to the env geometry used for encoding.
pub struct BoundNetworkPolicy<'a> {
    pub params: &'a ActorCriticParams,
    pub env_cfg: crate::env::EnvConfig,
}

impl Policy for BoundNetworkPolicy<'_> {
    fn act<R: Rng>(&self, state: &EnvState, rng: &mut R) -> AgentAction {
        let x = encode_state(state, &self.env_cfg);
        let (probs, _) = self.params.actor_forward(&x);
        if rng.gen_range(0.0..1.0) < probs[0] {
            AgentAction::Walk
        } else {
            AgentAction::Respond
        }
    }
}

/// Behavior-clones a teacher policy into a fresh actor-critic, returning a
/// policy that starts out acting like the teacher. Used to build runs whose
/// starting policy already carries bias learned from biased demonstrations.
pub fn pretrain_imitation<P: Policy, R: Rng>(
    cfg: &RunConfig,
    teacher: &P,
    epochs: usize,
    episodes_per_epoch: usize,
    lr: f64,
    rng: &mut R,
) -> Result<ActorCriticParams, FairserveError> {
    let mut env = Environment::new(cfg.env.clone(), cfg.weights.clone());
    let mut params = ActorCriticParams::init_with(cfg.train.hidden, rng, false, 1.0);
    for _ in 0..epochs {
        let mut grads = params.actor.zero_grads();
        let mut count = 0usize;
        for _ in 0..episodes_per_epoch {
            let mut state = env.reset(rng);
            loop {
                let action = teacher.act(&state, rng);
                let x = encode_state(&state, &env.config);
                let (probs, cache) = params.actor_forward(&x);
                let taken = if action == AgentAction::Walk { 0 } else { 1 };
                // mean cross-entropy gradient at the logits
                let mut d_out = vec![0.0; probs.len()];
                for (a, d) in d_out.iter_mut().enumerate() {
                    *d = probs[a] - if a == taken { 1.0 } else { 0.0 };
                }
                params.actor.backward(&cache, &d_out, &mut grads);
                count += 1;
                let (next, done) = env.step(action)?;
                if done {
                    env.finish(&next, action, 0);
                    break;
                }
                state = next;
            }
        }
        grads.scale(1.0 / count.max(1) as f64);
        crate::nn::sgd_step(&mut params.actor, &grads, lr)?;
    }
    Ok(params)
}

// ---------------------------------------------------------------------------
// file format helpers

#[derive(Debug, Serialize, Deserialize, PartialEq)]
struct FormatHeader {
    format: String,
    version: u32,
}

fn write_jsonl<T: Serialize>(
    path: &Path,
    format: &str,
    rows: impl Iterator<Item = T>,
) -> Result<(), FairserveError> {
    let mut out = String::new();
    let header = FormatHeader { format: format.to_string(), version: 1 };
    out.push_str(&serde_json::to_string(&header).unwrap());
    out.push('\n');
    for row in rows {
        out.push_str(&serde_json::to_string(&row).unwrap());
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

fn read_jsonl<T: for<'de> Deserialize<'de>>(
    path: &Path,
    format: &str,
) -> Result<Vec<T>, FairserveError> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header_line = lines
        .next()
        .ok_or_else(|| FairserveError::Data(format!("{}: empty file", path.display())))?;
    let header: FormatHeader = serde_json::from_str(header_line)
        .map_err(|e| FairserveError::Data(format!("{}: bad header: {e}", path.display())))?;
    if header.format != format || header.version != 1 {
        return Err(FairserveError::Data(format!(
            "{}: expected {format} v1, found {} v{}",
            path.display(),
            header.format,
            header.version
        )));
    }
    lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            serde_json::from_str(l)
                .map_err(|e| FairserveError::Data(format!("{}: {e}", path.display())))
        })
        .collect()
}

// ---------------------------------------------------------------------------
// detector data generation

/// Runs a 50/50 mixture of fair and biased-by-construction scripted policies
/// for `cfg.detector.dataset_epochs` epochs and labels each epoch's averaged
/// issue vector with the synthetic oracle.
pub fn gen_detector_data(cfg: &RunConfig) -> Result<Vec<LabeledEpoch>, FairserveError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut env = Environment::new(cfg.env.clone(), cfg.weights.clone());
    let groups = enumerate_groups();
    let styles = [BiasStyle::Ignore, BiasStyle::Late, BiasStyle::Close, BiasStyle::Far];
    let mut out = Vec::with_capacity(cfg.detector.dataset_epochs);
    for _ in 0..cfg.detector.dataset_epochs {
        let biased_epoch = rng.gen_bool(0.5);
        let records: Vec<EpisodeRecord> = if biased_epoch {
            let target = groups[rng.gen_range(0..groups.len())];
            let severity = rng.gen_range(0.3..=1.0);
            let style = styles[rng.gen_range(0..styles.len())];
            let policy = BiasedScripted::new(
                target,
                severity,
                style,
                cfg.env.appropriate_max_m,
                cfg.env.late_threshold_steps,
            );
            (0..cfg.detector.episodes_per_epoch)
                .map(|i| run_episode(&mut env, &policy, &mut rng, i))
                .collect::<Result<_, _>>()?
        } else {
            let policy = FairScripted { respond_at_m: cfg.env.appropriate_max_m };
            (0..cfg.detector.episodes_per_epoch)
                .map(|i| run_episode(&mut env, &policy, &mut rng, i))
                .collect::<Result<_, _>>()?
        };
        let total = total_issue_vector(&env, &records, &groups)?;
        let label = oracle_label(
            &total.vector,
            cfg.detector.oracle_threshold,
            cfg.detector.noise_rate,
            cfg.scalar_mode,
            &mut rng,
        );
        out.push(LabeledEpoch { issue_vector: total.vector, label });
    }
    Ok(out)
}

pub const LABELED_EPOCHS_FORMAT: &str = "fairserve-labeled-epochs";
pub const EPOCH_LOG_FORMAT: &str = "fairserve-epoch-log";
pub const EPISODE_LOG_FORMAT: &str = "fairserve-episode-log";
pub const EVAL_REPORT_FORMAT: &str = "fairserve-eval-report";

pub fn cmd_gen_detector_data(cfg: &RunConfig, out_path: &Path) -> Result<usize, FairserveError> {
    let data = gen_detector_data(cfg)?;
    let n = data.len();
    write_jsonl(out_path, LABELED_EPOCHS_FORMAT, data.into_iter())?;
    Ok(n)
}

pub fn load_detector_dataset(path: &Path) -> Result<Vec<LabeledEpoch>, FairserveError> {
    read_jsonl(path, LABELED_EPOCHS_FORMAT)
}

// ---------------------------------------------------------------------------
// detector training

pub struct DetectorFit {
    pub model: DetectorModel,
    pub holdout_accuracy: f64,
    pub train_size: usize,
    pub holdout_size: usize,
}

/// Fits PCA + logistic on a seeded split and scores held-out accuracy.
pub fn fit_detector(
    data: &[LabeledEpoch],
    cfg: &RunConfig,
) -> Result<DetectorFit, FairserveError> {
    if data.len() < 10 {
        return Err(FairserveError::Data("need at least 10 labeled epochs".into()));
    }
    let mut index: Vec<usize> = (0..data.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed_0511);
    // Fisher-Yates
    for i in (1..index.len()).rev() {
        index.swap(i, rng.gen_range(0..=i));
    }
    let holdout_size = ((data.len() as f64) * cfg.detector.holdout_frac).round() as usize;
    let (holdout_idx, train_idx) = index.split_at(holdout_size);

    let train_vecs: Vec<[f64; 4]> =
        train_idx.iter().map(|i| data[*i].issue_vector.as_array()).collect();
    let pca = fit_pca(&train_vecs)?;
    let train_set: Vec<([f64; 3], u8)> = train_idx
        .iter()
        .map(|i| (project(&pca, &data[*i].issue_vector.as_array()), data[*i].label))
        .collect();
    let mut logistic = fit_logistic(&train_set, cfg.detector.logistic_lr, cfg.detector.logistic_iters)?;
    logistic.threshold = cfg.detector.decision_threshold;
    let model = DetectorModel { pca, logistic };

    let correct = holdout_idx
        .iter()
        .filter(|i| {
            let (_, biased) = model.predict(&data[**i].issue_vector);
            biased as u8 == data[**i].label
        })
        .count();
    Ok(DetectorFit {
        model,
        holdout_accuracy: correct as f64 / holdout_size.max(1) as f64,
        train_size: train_idx.len(),
        holdout_size,
    })
}

pub fn cmd_train_detector(
    cfg: &RunConfig,
    dataset_path: &Path,
    out_path: &Path,
) -> Result<DetectorFit, FairserveError> {
    let data = load_detector_dataset(dataset_path)?;
    let fit = fit_detector(&data, cfg)?;
    fit.model.save(out_path)?;
    Ok(fit)
}

// ---------------------------------------------------------------------------
// training runs

/// Flat episode-log row; field names are the external episode-log contract.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LoggedEpisode {
    pub epoch: usize,
    pub episode_index: usize,
    pub race: String,
    pub gender: String,
    pub age_band: String,
    pub disabled: bool,
    pub skin_type: String,
    pub responded: bool,
    pub response_step: Option<usize>,
    pub response_distance_m: Option<f64>,
    pub min_distance_m: f64,
}

impl LoggedEpisode {
    fn new(epoch: usize, r: &EpisodeRecord) -> Self {
        LoggedEpisode {
            epoch,
            episode_index: r.episode_index,
            race: format!("{:?}", r.identity.race),
            gender: format!("{:?}", r.identity.gender),
            age_band: format!("{:?}", r.identity.age_band),
            disabled: r.identity.disabled,
            skin_type: format!("{:?}", r.identity.skin_type),
            responded: r.responded,
            response_step: r.response_step,
            response_distance_m: r.response_distance_m,
            min_distance_m: r.min_distance_m,
        }
    }
}

#[derive(Debug)]
pub struct TrainRun {
    pub out_dir: PathBuf,
    pub epoch_logs: Vec<EpochLog>,
    pub detector_queries: usize,
}

/// Executes a full training run into `out_dir`: resolved config, epoch log,
/// episode log, checkpoints.
pub fn cmd_train(
    cfg: &RunConfig,
    detector_path: Option<&Path>,
    out_dir: &Path,
) -> Result<TrainRun, FairserveError> {
    if cfg.train.guidance && detector_path.is_none() {
        return Err(FairserveError::Config(
            "learner.guidance = true requires --detector <checkpoint>".into(),
        ));
    }
    let detector = detector_path.map(DetectorModel::load).transpose()?;
    let initial = cfg
        .init_policy
        .as_deref()
        .map(|p| ActorCriticParams::load(Path::new(p)))
        .transpose()?;
    fs::create_dir_all(out_dir)?;
    fs::write(out_dir.join("config.txt"), cfg.to_text())?;

    let mut env = Environment::new(cfg.env.clone(), cfg.weights.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut epoch_lines = String::new();
    let header = FormatHeader { format: EPOCH_LOG_FORMAT.into(), version: 1 };
    epoch_lines.push_str(&serde_json::to_string(&header).unwrap());
    epoch_lines.push('\n');
    let mut episode_file = fs::File::create(out_dir.join("episodes.jsonl"))?;
    let ep_header = FormatHeader { format: EPISODE_LOG_FORMAT.into(), version: 1 };
    writeln!(episode_file, "{}", serde_json::to_string(&ep_header).unwrap())?;

    let checkpoint_every = cfg.checkpoint_every;
    let mut io_error: Option<FairserveError> = None;
    let result = crate::learner::train_from(
        &cfg.train,
        &cfg.shaping,
        cfg.scalar_mode,
        &mut env,
        detector.as_ref(),
        initial,
        &mut rng,
        |log, params, records| {
            epoch_lines.push_str(&serde_json::to_string(log).unwrap());
            epoch_lines.push('\n');
            for r in records {
                let row = LoggedEpisode::new(log.epoch, r);
                if let Err(e) = writeln!(episode_file, "{}", serde_json::to_string(&row).unwrap())
                {
                    io_error.get_or_insert(e.into());
                }
            }
            if checkpoint_every > 0 && (log.epoch + 1) % checkpoint_every == 0 {
                let path = out_dir.join(format!("checkpoint_{:06}.txt", log.epoch + 1));
                if let Err(e) = params.save(&path) {
                    io_error.get_or_insert(e);
                }
            }
        },
    )?;
    if let Some(e) = io_error {
        return Err(e);
    }
    fs::write(out_dir.join("epochs.jsonl"), epoch_lines)?;
    result.params.save(&out_dir.join("checkpoint_final.txt"))?;
    Ok(TrainRun {
        out_dir: out_dir.to_path_buf(),
        epoch_logs: result.epoch_logs,
        detector_queries: result.detector_queries,
    })
}

pub fn load_epoch_log(run_dir: &Path) -> Result<Vec<EpochLog>, FairserveError> {
    read_jsonl(&run_dir.join("epochs.jsonl"), EPOCH_LOG_FORMAT)
}

// ---------------------------------------------------------------------------
// evaluation

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroupBreakdown {
    pub group: String,
    pub willingness: f64,
    pub quality: f64,
    pub priority: f64,
    pub risk: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub episodes: usize,
    pub issue: IssueScoreVector,
    pub scalar: f64,
    pub excluded_groups: usize,
    pub detector_probability: Option<f64>,
    pub detector_verdict: Option<bool>,
    pub mean_response_distance_m: Option<f64>,
    pub mean_response_steps: Option<f64>,
    pub ignore_rate: f64,
    pub groups: Vec<GroupBreakdown>,
}

/// Rolls out any policy for `episodes` episodes and aggregates the report.
pub fn evaluate_policy<P: Policy>(
    cfg: &RunConfig,
    policy: &P,
    detector: Option<&DetectorModel>,
    episodes: usize,
) -> Result<EvalReport, FairserveError> {
    let mut env = Environment::new(cfg.env.clone(), cfg.weights.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let records: Vec<EpisodeRecord> = (0..episodes)
        .map(|i| run_episode(&mut env, policy, &mut rng, i))
        .collect::<Result<_, _>>()?;
    let groups = enumerate_groups();
    let TotalIssue { vector, excluded_groups } = total_issue_vector(&env, &records, &groups)?;
    let scalar = total_issue_scalar(&vector, cfg.scalar_mode);

    let mut breakdowns = Vec::new();
    for g in &groups {
        if let Ok(v) = crate::metrics::group_issue_vector(&env, &records, g) {
            breakdowns.push(GroupBreakdown {
                group: g.label(),
                willingness: v.willingness,
                quality: v.quality,
                priority: v.priority,
                risk: v.risk,
            });
        }
    }

    let served: Vec<&EpisodeRecord> = records.iter().filter(|r| r.responded).collect();
    let mean_dist = (!served.is_empty()).then(|| {
        served.iter().map(|r| r.response_distance_m.unwrap()).sum::<f64>() / served.len() as f64
    });
    let mean_steps = (!served.is_empty()).then(|| {
        served.iter().map(|r| r.response_step.unwrap() as f64).sum::<f64>() / served.len() as f64
    });
    let (prob, verdict) = match detector {
        Some(d) => {
            let (p, b) = d.predict(&vector);
            (Some(p), Some(b))
        }
        None => (None, None),
    };
    Ok(EvalReport {
        episodes,
        issue: vector,
        scalar,
        excluded_groups,
        detector_probability: prob,
        detector_verdict: verdict,
        mean_response_distance_m: mean_dist,
        mean_response_steps: mean_steps,
        ignore_rate: 1.0 - served.len() as f64 / records.len() as f64,
        groups: breakdowns,
    })
}

/// Evaluates a trained policy checkpoint and writes `report.json` plus
/// `groups.csv` into `out_dir`.
pub fn cmd_evaluate(
    cfg: &RunConfig,
    policy_path: &Path,
    detector_path: Option<&Path>,
    out_dir: &Path,
) -> Result<EvalReport, FairserveError> {
    if cfg.eval_episodes < 30 {
        return Err(FairserveError::Config("eval.episodes must be at least 30".into()));
    }
    let params = ActorCriticParams::load(policy_path)?;
    let detector = detector_path.map(DetectorModel::load).transpose()?;
    let policy = BoundNetworkPolicy { params: &params, env_cfg: cfg.env.clone() };
    let report = evaluate_policy(cfg, &policy, detector.as_ref(), cfg.eval_episodes)?;
    write_eval_report(&report, out_dir)?;
    Ok(report)
}

pub fn write_eval_report(report: &EvalReport, out_dir: &Path) -> Result<(), FairserveError> {
    fs::create_dir_all(out_dir)?;
    let header = FormatHeader { format: EVAL_REPORT_FORMAT.into(), version: 1 };
    let mut text = serde_json::to_string(&header).unwrap();
    text.push('\n');
    text.push_str(&serde_json::to_string_pretty(report).unwrap());
    text.push('\n');
    fs::write(out_dir.join("report.json"), text)?;

    let mut csv = String::from("group,willingness,quality,priority,risk\n");
    for g in &report.groups {
        let _ = writeln!(csv, "{},{},{},{},{}", g.group, g.willingness, g.quality, g.priority, g.risk);
    }
    fs::write(out_dir.join("groups.csv"), csv)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// run comparison

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub epochs: usize,
    pub biased_epochs_a: usize,
    pub biased_epochs_b: usize,
    pub mean_scalar_a: f64,
    pub mean_scalar_b: f64,
    pub mean_scalar_difference: f64,
    pub percent_difference: f64,
}

/// Paired per-epoch comparison of two completed runs with equal epoch counts.
pub fn compare_runs(
    logs_a: &[EpochLog],
    logs_b: &[EpochLog],
) -> Result<Comparison, FairserveError> {
    if logs_a.len() != logs_b.len() || logs_a.is_empty() {
        return Err(FairserveError::Data(format!(
            "epoch counts differ: {} vs {}",
            logs_a.len(),
            logs_b.len()
        )));
    }
    let biased = |logs: &[EpochLog]| {
        logs.iter().filter(|l| l.detector_verdict == Some(true)).count()
    };
    let mean = |logs: &[EpochLog]| logs.iter().map(|l| l.scalar).sum::<f64>() / logs.len() as f64;
    let (ma, mb) = (mean(logs_a), mean(logs_b));
    Ok(Comparison {
        epochs: logs_a.len(),
        biased_epochs_a: biased(logs_a),
        biased_epochs_b: biased(logs_b),
        mean_scalar_a: ma,
        mean_scalar_b: mb,
        mean_scalar_difference: ma - mb,
        percent_difference: if mb != 0.0 { (ma - mb) / mb * 100.0 } else { f64::NAN },
    })
}

/// Compares two run directories and writes a table file plus the paired
/// per-epoch CSV series.
pub fn cmd_compare(
    run_dir_a: &Path,
    run_dir_b: &Path,
    out_path: &Path,
) -> Result<Comparison, FairserveError> {
    let logs_a = load_epoch_log(run_dir_a)?;
    let logs_b = load_epoch_log(run_dir_b)?;
    let cmp = compare_runs(&logs_a, &logs_b)?;

    let mut table = String::from("# fairserve-comparison v1\n");
    let _ = writeln!(table, "metric\trun_a\trun_b");
    let _ = writeln!(table, "epochs\t{}\t{}", cmp.epochs, cmp.epochs);
    let _ = writeln!(table, "detected_biased_epochs\t{}\t{}", cmp.biased_epochs_a, cmp.biased_epochs_b);
    let _ = writeln!(table, "mean_issue_scalar\t{}\t{}", cmp.mean_scalar_a, cmp.mean_scalar_b);
    let _ = writeln!(table, "mean_scalar_difference\t{}\t-", cmp.mean_scalar_difference);
    let _ = writeln!(table, "percent_difference\t{}\t-", cmp.percent_difference);
    table.push_str("\nepoch\tscalar_a\tscalar_b\tdifference\n");
    for (a, b) in logs_a.iter().zip(&logs_b) {
        let _ = writeln!(table, "{}\t{}\t{}\t{}", a.epoch, a.scalar, b.scalar, a.scalar - b.scalar);
    }
    fs::write(out_path, table)?;
    Ok(cmp)
}
