//! Acceptance gate: one test per criterion, each printing a single
//! `ACCEPTANCE <n> pass|fail — <summary>` line.
//!
//! Run with `cargo test --test acceptance -- --test-threads=1 --nocapture`
//! to see the lines in order; the criteria are independent either way.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fairserve::config::RunConfig;
use fairserve::detector::{covariance, fit_pca, jacobi_eigen, logistic_grad, logistic_loss, oracle_label};
use fairserve::env::EpisodeRecord;
use fairserve::harness::{
    compare_runs, fit_detector, gen_detector_data, pretrain_imitation, BiasStyle, BiasedScripted,
};
use fairserve::learner::{ppo_loss, probability_ratio, returns_to_go, TrainConfig};
use fairserve::metrics::{total_issue_scalar, total_issue_vector, IssueScoreVector, ScalarMode};
use fairserve::nn::{encode_state, ActorCriticParams, Mlp, STATE_DIM};
use fairserve::population::{enumerate_groups, SensitiveAttribute, SensitiveGroup};
use fairserve::test_support::{naive_total_issue, random_records};

fn report(criterion: usize, pass: bool, summary: &str) {
    println!(
        "ACCEPTANCE {criterion} {} — {summary}",
        if pass { "pass" } else { "fail" }
    );
    assert!(pass, "criterion {criterion} failed: {summary}");
}

// -------------------------------------------------------------------------
// 1. metrics oracle equivalence

#[test]
fn criterion_1_metrics_oracle_equivalence() {
    let groups = enumerate_groups();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut mismatches = 0usize;
    for batch in 0..50 {
        let n = rng.gen_range(10..=1000);
        let records = random_records(&mut rng, n);
        let cfg = RunConfig::default();
        let env = fairserve::env::Environment::new(cfg.env.clone(), cfg.weights.clone());
        let fast = total_issue_vector(&env, &records, &groups).unwrap();
        let naive = naive_total_issue(&env, &records, &groups).unwrap();
        if fast.vector.as_array() != naive.vector.as_array() || fast.excluded_groups != naive.excluded_groups {
            mismatches += 1;
            eprintln!("batch {batch}: {:?} != {:?}", fast.vector, naive.vector);
        }
    }
    report(
        1,
        mismatches == 0,
        &format!("issue metrics match naive recount exactly on 50 batches ({mismatches} mismatches)"),
    );
}

// -------------------------------------------------------------------------
// 2. detection accuracy analogue

/// Accuracy of a detector against clean rule labels on an independently
/// generated noise-free dataset.
fn clean_accuracy(model: &fairserve::detector::DetectorModel, cfg: &RunConfig) -> f64 {
    let mut eval_cfg = cfg.clone();
    eval_cfg.detector.noise_rate = 0.0;
    eval_cfg.seed = 900; // independent of the training seed
    let eval = gen_detector_data(&eval_cfg).unwrap();
    let correct = eval
        .iter()
        .filter(|e| {
            let (_, flagged) = model.predict(&e.issue_vector);
            flagged as u8 == e.label
        })
        .count();
    correct as f64 / eval.len() as f64
}

#[test]
fn criterion_2_detection_accuracy() {
    let mut cfg = RunConfig::default();
    cfg.seed = 11;

    // 5% label noise in the training data
    cfg.detector.noise_rate = 0.05;
    let noisy = gen_detector_data(&cfg).unwrap();
    let fit_noisy = fit_detector(&noisy, &cfg).unwrap();
    let acc_noisy = clean_accuracy(&fit_noisy.model, &cfg);

    // noise-free training data
    cfg.detector.noise_rate = 0.0;
    let clean = gen_detector_data(&cfg).unwrap();
    let fit_clean = fit_detector(&clean, &cfg).unwrap();
    let acc_clean = clean_accuracy(&fit_clean.model, &cfg);

    report(
        2,
        acc_noisy >= 0.95 && acc_clean >= 0.99,
        &format!(
            "held-out accuracy {acc_noisy:.4} with 5% label noise (>= 0.95), {acc_clean:.4} noise-free (>= 0.99)"
        ),
    );
}

// -------------------------------------------------------------------------
// 3 & 4. guidance effect — shared paired runs

struct PairedOutcome {
    final100_unguided: f64,
    final100_guided: f64,
    flagged_unguided: usize,
    flagged_guided: usize,
}

/// Scenario where bias detection guidance has a measurable effect at desk
/// scale: training starts from a policy behavior-cloned from biased
/// demonstrations (one race value served out-of-band), the fairness term
/// dominates the return, and the detector boundary sits between the fair
/// region and the level the unguided policy drifts to.
fn guidance_scenario() -> (RunConfig, fairserve::detector::DetectorModel, ActorCriticParams) {
    let mut cfg = RunConfig::default();
    cfg.shaping.tau = [10.0, 10.0, 10.0, 10.0];
    cfg.shaping.lambda_penalty = 0.2;
    cfg.shaping.step_cost = 0.0;
    cfg.train.lr = 1e-3;
    cfg.train.total_epochs = 300;
    cfg.train.episodes_per_epoch = 30;

    let mut det_cfg = RunConfig::default();
    det_cfg.detector.oracle_threshold = 0.03;
    det_cfg.seed = 7;
    let data = gen_detector_data(&det_cfg).unwrap();
    let detector = fit_detector(&data, &det_cfg).unwrap().model;

    let target = SensitiveGroup { attribute: SensitiveAttribute::Race, value_index: 1 };
    let teacher = BiasedScripted::new(
        target,
        1.0,
        BiasStyle::Far,
        cfg.env.appropriate_max_m,
        cfg.env.late_threshold_steps,
    );
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let initial = pretrain_imitation(&cfg, &teacher, 1000, 30, 2.0, &mut rng).unwrap();
    (cfg, detector, initial)
}

fn run_pair(
    cfg: &RunConfig,
    detector: &fairserve::detector::DetectorModel,
    initial: &ActorCriticParams,
    seed: u64,
) -> PairedOutcome {
    let run = |guidance: bool| {
        let mut env =
            fairserve::env::Environment::new(cfg.env.clone(), cfg.weights.clone());
        let train_cfg = TrainConfig { guidance, ..cfg.train.clone() };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let result = fairserve::learner::train_from(
            &train_cfg,
            &cfg.shaping,
            cfg.scalar_mode,
            &mut env,
            Some(detector),
            Some(initial.clone()),
            &mut rng,
            |_, _, _| {},
        )
        .unwrap();
        let logs = result.epoch_logs;
        let final100: f64 =
            logs[logs.len() - 100..].iter().map(|l| l.scalar).sum::<f64>() / 100.0;
        let flagged = logs.iter().filter(|l| l.detector_verdict == Some(true)).count();
        (final100, flagged, logs)
    };
    let (fu, bu, _) = run(false);
    let (fg, bg, _) = run(true);
    PairedOutcome {
        final100_unguided: fu,
        final100_guided: fg,
        flagged_unguided: bu,
        flagged_guided: bg,
    }
}

#[test]
fn criteria_3_and_4_guidance_effect() {
    let (cfg, detector, initial) = guidance_scenario();
    let seeds = [1u64, 2, 3, 4, 5];
    let outcomes: Vec<PairedOutcome> =
        seeds.iter().map(|&s| run_pair(&cfg, &detector, &initial, s)).collect();

    let scalar_wins = outcomes
        .iter()
        .filter(|o| o.final100_guided < o.final100_unguided)
        .count();
    let pooled_u: f64 = outcomes.iter().map(|o| o.final100_unguided).sum();
    let pooled_g: f64 = outcomes.iter().map(|o| o.final100_guided).sum();
    let reduction = (pooled_u - pooled_g) / pooled_u;
    for (s, o) in seeds.iter().zip(&outcomes) {
        eprintln!(
            "seed {s}: final-100 scalar {:.4} unguided vs {:.4} guided; flagged {} vs {}",
            o.final100_unguided, o.final100_guided, o.flagged_unguided, o.flagged_guided
        );
    }
    report(
        3,
        scalar_wins >= 4 && reduction >= 0.10,
        &format!(
            "guided final-100 issue scalar lower in {scalar_wins}/5 pairs, pooled reduction {:.1}% (>= 10%)",
            reduction * 100.0
        ),
    );

    let flag_wins = outcomes
        .iter()
        .filter(|o| o.flagged_guided < o.flagged_unguided)
        .count();
    report(
        4,
        flag_wins >= 4,
        &format!("guided run has strictly fewer detector-flagged epochs in {flag_wins}/5 pairs"),
    );
}

// -------------------------------------------------------------------------
// 5. gradient correctness

fn finite_diff_ok(
    loss: &mut dyn FnMut(&Mlp) -> f64,
    net: &mut Mlp,
    analytic: &fairserve::nn::MlpGrads,
) -> f64 {
    let eps = 1e-5;
    let mut worst: f64 = 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..10 {
        let field = rng.gen_range(0..4usize);
        let len = analytic.field(field).len();
        let idx = rng.gen_range(0..len);
        let grad = analytic.field(field)[idx];
        let bump = |net: &mut Mlp, delta: f64| {
            let mut params = net.params_mut();
            let (slice, _) = &mut params[field];
            slice[idx] += delta;
        };
        bump(net, eps);
        let up = loss(net);
        bump(net, -2.0 * eps);
        let down = loss(net);
        bump(net, eps);
        let numeric = (up - down) / (2.0 * eps);
        let denom = grad.abs().max(numeric.abs()).max(1e-8);
        worst = worst.max((grad - numeric).abs() / denom);
    }
    worst
}

#[test]
fn criterion_5_gradient_correctness() {
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let mut worst_actor: f64 = 0.0;
    let mut worst_critic: f64 = 0.0;
    let mut worst_logistic: f64 = 0.0;

    for _ in 0..20 {
        // actor log-prob loss: -log pi(a|s)
        let mut actor = Mlp::init(STATE_DIM, 6, 2, &mut rng, false);
        let x: Vec<f64> = (0..STATE_DIM).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let a = rng.gen_range(0..2usize);
        let cache = actor.forward(&x);
        let probs = fairserve::nn::softmax(&cache.output);
        let mut d_out = vec![0.0; 2];
        for (i, d) in d_out.iter_mut().enumerate() {
            *d = probs[i] - if i == a { 1.0 } else { 0.0 };
        }
        let mut grads = actor.zero_grads();
        actor.backward(&cache, &d_out, &mut grads);
        let xc = x.clone();
        let mut loss = move |net: &Mlp| {
            let c = net.forward(&xc);
            let p = fairserve::nn::softmax(&c.output);
            -p[a].ln()
        };
        worst_actor = worst_actor.max(finite_diff_ok(&mut loss, &mut actor, &grads));

        // critic squared-error loss: (V(s) - g)^2
        let mut critic = Mlp::init(STATE_DIM, 6, 1, &mut rng, false);
        let g = rng.gen_range(-2.0..2.0);
        let cache = critic.forward(&x);
        let mut grads = critic.zero_grads();
        critic.backward(&cache, &[2.0 * (cache.output[0] - g)], &mut grads);
        let xc = x.clone();
        let mut loss = move |net: &Mlp| {
            let c = net.forward(&xc);
            (c.output[0] - g).powi(2)
        };
        worst_critic = worst_critic.max(finite_diff_ok(&mut loss, &mut critic, &grads));

        // logistic loss gradient
        let data: Vec<([f64; 3], u8)> = (0..40)
            .map(|_| {
                (
                    [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)],
                    rng.gen_range(0..2u8),
                )
            })
            .collect();
        let w = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let b: f64 = rng.gen_range(-1.0..1.0);
        let (gw, gb) = logistic_grad(&w, b, &data);
        let eps = 1e-5;
        for i in 0..4 {
            let (mut wu, mut wd, mut bu, mut bd) = (w, w, b, b);
            if i < 3 {
                wu[i] += eps;
                wd[i] -= eps;
            } else {
                bu += eps;
                bd -= eps;
            }
            let numeric =
                (logistic_loss(&wu, bu, &data) - logistic_loss(&wd, bd, &data)) / (2.0 * eps);
            let analytic = if i < 3 { gw[i] } else { gb };
            let denom = analytic.abs().max(numeric.abs()).max(1e-8);
            worst_logistic = worst_logistic.max((analytic - numeric).abs() / denom);
        }
    }

    let pass = worst_actor < 1e-4 && worst_critic < 1e-4 && worst_logistic < 1e-4;
    report(
        5,
        pass,
        &format!(
            "worst relative error vs central differences: actor {worst_actor:.2e}, critic {worst_critic:.2e}, logistic {worst_logistic:.2e} (all < 1e-4)"
        ),
    );
}

// -------------------------------------------------------------------------
// 6. PPO invariants

#[test]
fn criterion_6_ppo_invariants() {
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let cfg = RunConfig::default();

    // pre-update ratios are exactly 1 at the behavior policy
    let params = ActorCriticParams::init_with(8, &mut rng, false, 1.0);
    let mut env = fairserve::env::Environment::new(cfg.env.clone(), cfg.weights.clone());
    let mut worst_ratio_err: f64 = 0.0;
    for _ in 0..20 {
        let state = env.reset(&mut rng);
        let x = encode_state(&state, &env.config);
        let (probs, _) = params.actor_forward(&x);
        let a = usize::from(rng.gen_bool(0.5));
        let ratio = probability_ratio(&params, &x, a, probs[a].ln());
        worst_ratio_err = worst_ratio_err.max((ratio - 1.0).abs());
    }

    // clipped surrogate <= unclipped, term-wise on random triples, checked
    // through the implemented objective
    let mut violations = 0usize;
    for _ in 0..1000 {
        let ratio: f64 = rng.gen_range(0.0..3.0);
        let adv: f64 = rng.gen_range(-2.0..2.0);
        let eps: f64 = rng.gen_range(0.01..0.5);
        let surrogate = -ppo_loss(&[ratio], &[adv], eps);
        if surrogate > ratio * adv + 1e-12 {
            violations += 1;
        }
    }
    let pass = worst_ratio_err < 1e-12 && violations == 0;
    report(
        6,
        pass,
        &format!(
            "pre-update ratio error {worst_ratio_err:.1e} (< 1e-12); clipped surrogate exceeded unclipped in {violations}/1000 triples"
        ),
    );
}

// -------------------------------------------------------------------------
// 7. PCA properties

#[test]
fn criterion_7_pca_properties() {
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    let mut worst_ortho: f64 = 0.0;
    let mut worst_trace: f64 = 0.0;
    for _ in 0..20 {
        let data: Vec<[f64; 4]> = (0..200)
            .map(|_| {
                let t: f64 = rng.gen_range(-1.0..1.0);
                [
                    t + 0.3 * rng.gen_range(-1.0..1.0),
                    -t + 0.2 * rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                    0.5 * t + rng.gen_range(-1.0..1.0),
                ]
            })
            .collect();
        let pca = fit_pca(&data).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let dot: f64 =
                    (0..4).map(|k| pca.components[i][k] * pca.components[j][k]).sum();
                let expect = if i == j { 1.0 } else { 0.0 };
                worst_ortho = worst_ortho.max((dot - expect).abs());
            }
        }
        // eigenvalues of the covariance must sum to its trace
        let cov = covariance(&data, &pca.mean);
        let (eigs, _) = jacobi_eigen(cov);
        let trace: f64 = (0..4).map(|k| cov[k][k]).sum();
        let eig_sum: f64 = eigs.iter().sum();
        worst_trace = worst_trace.max((trace - eig_sum).abs());
    }

    // rank-deficiency contract
    let degenerate: Vec<[f64; 4]> = (0..50)
        .map(|i| {
            let t = i as f64 / 50.0;
            [t, 2.0 * t, -t, 0.5 * t]
        })
        .collect();
    let degenerate_rejected = matches!(
        fit_pca(&degenerate),
        Err(fairserve::FairserveError::DegenerateData)
    );

    let pass = worst_ortho < 1e-9 && worst_trace < 1e-9 && degenerate_rejected;
    report(
        7,
        pass,
        &format!(
            "orthonormality error {worst_ortho:.1e}, trace error {worst_trace:.1e} (< 1e-9); rank-1 data rejected: {degenerate_rejected}"
        ),
    );
}

// -------------------------------------------------------------------------
// 8. determinism

#[test]
fn criterion_8_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = RunConfig::default();
    cfg.train.total_epochs = 20;
    cfg.seed = 808;

    let a = dir.path().join("a");
    let b = dir.path().join("b");
    fairserve::harness::cmd_train(&cfg, None, &a).unwrap();
    fairserve::harness::cmd_train(&cfg, None, &b).unwrap();
    let logs_identical = std::fs::read(a.join("epochs.jsonl")).unwrap()
        == std::fs::read(b.join("epochs.jsonl")).unwrap()
        && std::fs::read(a.join("episodes.jsonl")).unwrap()
            == std::fs::read(b.join("episodes.jsonl")).unwrap();

    // checkpoint round-trip: identical predictions on 100 probes
    let params = ActorCriticParams::load(&a.join("checkpoint_final.txt")).unwrap();
    let path = dir.path().join("roundtrip.txt");
    params.save(&path).unwrap();
    let reloaded = ActorCriticParams::load(&path).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(88);
    let mut env = fairserve::env::Environment::new(cfg.env.clone(), cfg.weights.clone());
    let mut probe_mismatches = 0usize;
    for _ in 0..100 {
        let state = env.reset(&mut rng);
        let x = encode_state(&state, &env.config);
        let (p1, _) = params.actor_forward(&x);
        let (p2, _) = reloaded.actor_forward(&x);
        let (v1, _) = params.critic_forward(&x);
        let (v2, _) = reloaded.critic_forward(&x);
        if p1 != p2 || v1 != v2 {
            probe_mismatches += 1;
        }
    }
    let pass = logs_identical && probe_mismatches == 0;
    report(
        8,
        pass,
        &format!(
            "same-seed reruns byte-identical: {logs_identical}; checkpoint round-trip prediction mismatches: {probe_mismatches}/100"
        ),
    );
}

// -------------------------------------------------------------------------
// 9. scripted-bias detectability

#[test]
fn criterion_9_scripted_bias_detectability() {
    // Narrow spawn band and a short step budget keep the ignoring branch
    // above the risky distance, so ignoring one race shows up purely as a
    // willingness issue.
    let mut cfg = RunConfig::default();
    cfg.env.init_dist_min = 2.0;
    cfg.env.init_dist_max = 2.2;
    cfg.env.max_steps = 15;
    cfg.eval_episodes = 1000;
    let target = SensitiveGroup { attribute: SensitiveAttribute::Race, value_index: 1 };
    let policy = BiasedScripted::new(
        target,
        1.0,
        BiasStyle::Ignore,
        cfg.env.appropriate_max_m,
        cfg.env.late_threshold_steps,
    );
    let report_eval =
        fairserve::harness::evaluate_policy(&cfg, &policy, None, 1000).unwrap();
    let v = report_eval.issue;
    let pass = v.willingness > v.quality && v.willingness > v.priority && v.willingness > v.risk;
    report(
        9,
        pass,
        &format!(
            "ignore-one-race policy issue vector ({:.4}, {:.4}, {:.4}, {:.4}): willingness strictly largest",
            v.willingness, v.quality, v.priority, v.risk
        ),
    );
}

// -------------------------------------------------------------------------
// supporting: compare arithmetic + oracle label sanity (exercised by the
// criteria above but kept here to pin the comparison path end to end)

#[test]
fn comparison_and_oracle_sanity() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let v = IssueScoreVector { willingness: 0.49, quality: 0.25, priority: 0.38, risk: 0.43 };
    let scalar = total_issue_scalar(&v, ScalarMode::Mean);
    assert!((scalar - 0.3875).abs() < 1e-12);
    let label = oracle_label(&v, 0.3, 0.0, ScalarMode::Mean, &mut rng);
    assert_eq!(label, 1);

    let cfg = RunConfig::default();
    let env = fairserve::env::Environment::new(cfg.env.clone(), cfg.weights.clone());
    let records: Vec<EpisodeRecord> = random_records(&mut rng, 200);
    let groups = enumerate_groups();
    let t = total_issue_vector(&env, &records, &groups).unwrap();
    assert!(total_issue_scalar(&t.vector, ScalarMode::Sum) >= total_issue_scalar(&t.vector, ScalarMode::Mean));

    // compare a run against itself through the public API
    let logs = {
        let dir = tempfile::tempdir().unwrap();
        let mut c = RunConfig::default();
        c.train.total_epochs = 3;
        fairserve::harness::cmd_train(&c, None, &dir.path().join("r")).unwrap().epoch_logs
    };
    let cmp = compare_runs(&logs, &logs).unwrap();
    assert_eq!(cmp.mean_scalar_difference, 0.0);

    // returns-to-go vs direct discounted sums
    let rewards = [1.0, -0.5, 2.0, 0.25];
    let got = returns_to_go(&rewards, 0.5, 0.0);
    let want = fairserve::test_support::naive_returns(&rewards, 0.5);
    for (g, w) in got.iter().zip(&want) {
        assert!((g - w).abs() < 1e-12);
    }
}
