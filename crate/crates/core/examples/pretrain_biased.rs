//! Dev helper: behavior-clone the scripted biased policy and save the result
//! as a policy checkpoint. Args: <out-path> [severity] [bc-epochs] [bc-lr] [seed]

use fairserve::config::RunConfig;
use fairserve::harness::{evaluate_policy, pretrain_imitation, BiasedScripted, BiasStyle, BoundNetworkPolicy};
use fairserve::population::{SensitiveAttribute, SensitiveGroup};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let out = &args[1];
    let severity: f64 = args.get(2).map_or(1.0, |s| s.parse().unwrap());
    let style = match args.get(6).map(String::as_str) {
        Some("far") => BiasStyle::Far,
        Some("late") => BiasStyle::Late,
        Some("close") => BiasStyle::Close,
        _ => BiasStyle::Ignore,
    };
    let epochs: usize = args.get(3).map_or(200, |s| s.parse().unwrap());
    let lr: f64 = args.get(4).map_or(1.0, |s| s.parse().unwrap());
    let seed: u64 = args.get(5).map_or(42, |s| s.parse().unwrap());

    let cfg = RunConfig::default();
    let target = SensitiveGroup { attribute: SensitiveAttribute::Race, value_index: 1 };
    let teacher = BiasedScripted::new(
        target,
        severity,
        style,
        cfg.env.appropriate_max_m,
        cfg.env.late_threshold_steps,
    );
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let params = pretrain_imitation(&cfg, &teacher, epochs, 30, lr, &mut rng).unwrap();
    params.save(std::path::Path::new(out)).unwrap();

    let policy = BoundNetworkPolicy { params: &params, env_cfg: cfg.env.clone() };
    let report = evaluate_policy(&cfg, &policy, None, 1000).unwrap();
    println!(
        "cloned policy: scalar {:.4} issue {:?} ignore_rate {:.3}",
        report.scalar, report.issue, report.ignore_rate
    );
}
