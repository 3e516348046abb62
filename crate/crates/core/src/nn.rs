//! Minimal feed-forward approximators: a two-layer tanh network with explicit
//! forward/backward passes and a plain gradient-descent optimizer. The actor
//! puts a softmax head on two logits; the critic emits one scalar.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::env::{EnvConfig, EnvState};
use crate::error::FairserveError;
use crate::population::ENCODING_DIM;

/// 22 one-hot identity entries + normalized distance + normalized step.
pub const STATE_DIM: usize = ENCODING_DIM + 2;
pub const ACTION_DIM: usize = 2;
pub const DEFAULT_HIDDEN: usize = 32;

pub fn encode_state(state: &EnvState, cfg: &EnvConfig) -> Vec<f64> {
    let mut x = Vec::with_capacity(STATE_DIM);
    x.extend_from_slice(&state.identity.encode());
    x.push((state.distance_m / cfg.init_dist_max).clamp(0.0, 1.0));
    x.push((state.step as f64 / cfg.max_steps as f64).clamp(0.0, 1.0));
    x
}

/// Row-major dense layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Linear {
    pub w: Vec<f64>,
    pub b: Vec<f64>,
    pub in_dim: usize,
    pub out_dim: usize,
}

impl Linear {
    pub fn zeros(in_dim: usize, out_dim: usize) -> Linear {
        Linear { w: vec![0.0; in_dim * out_dim], b: vec![0.0; out_dim], in_dim, out_dim }
    }

    pub fn init<R: Rng>(in_dim: usize, out_dim: usize, rng: &mut R) -> Linear {
        let bound = 1.0 / (in_dim as f64).sqrt();
        let mut l = Linear::zeros(in_dim, out_dim);
        for w in l.w.iter_mut() {
            *w = rng.gen_range(-bound..bound);
        }
        for b in l.b.iter_mut() {
            *b = rng.gen_range(-bound..bound);
        }
        l
    }

    fn forward(&self, x: &[f64], out: &mut [f64]) {
        for o in 0..self.out_dim {
            let row = &self.w[o * self.in_dim..(o + 1) * self.in_dim];
            out[o] = self.b[o] + row.iter().zip(x).map(|(w, xi)| w * xi).sum::<f64>();
        }
    }
}

/// Two-layer network: linear, tanh, linear.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub l1: Linear,
    pub l2: Linear,
}

/// Activations cached by a forward pass for the matching backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    pub input: Vec<f64>,
    pub hidden: Vec<f64>,
    pub output: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpGrads {
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

impl Mlp {
    pub fn init<R: Rng>(in_dim: usize, hidden: usize, out_dim: usize, rng: &mut R, zero_head: bool) -> Mlp {
        let l1 = Linear::init(in_dim, hidden, rng);
        let l2 = if zero_head {
            Linear::zeros(hidden, out_dim)
        } else {
            Linear::init(hidden, out_dim, rng)
        };
        Mlp { l1, l2 }
    }

    pub fn forward(&self, x: &[f64]) -> ForwardCache {
        let mut pre = vec![0.0; self.l1.out_dim];
        self.l1.forward(x, &mut pre);
        let hidden: Vec<f64> = pre.iter().map(|v| v.tanh()).collect();
        let mut output = vec![0.0; self.l2.out_dim];
        self.l2.forward(&hidden, &mut output);
        ForwardCache { input: x.to_vec(), hidden, output }
    }

    pub fn zero_grads(&self) -> MlpGrads {
        MlpGrads {
            w1: vec![0.0; self.l1.w.len()],
            b1: vec![0.0; self.l1.b.len()],
            w2: vec![0.0; self.l2.w.len()],
            b2: vec![0.0; self.l2.b.len()],
        }
    }

    /// Accumulates exact gradients of the cached pass into `grads`, given the
    /// loss gradient at the raw outputs.
    pub fn backward(&self, cache: &ForwardCache, d_output: &[f64], grads: &mut MlpGrads) {
        let hidden_dim = self.l1.out_dim;
        // layer 2
        let mut d_hidden = vec![0.0; hidden_dim];
        for o in 0..self.l2.out_dim {
            grads.b2[o] += d_output[o];
            for h in 0..hidden_dim {
                grads.w2[o * hidden_dim + h] += d_output[o] * cache.hidden[h];
                d_hidden[h] += d_output[o] * self.l2.w[o * hidden_dim + h];
            }
        }
        // tanh + layer 1
        for h in 0..hidden_dim {
            let d_pre = d_hidden[h] * (1.0 - cache.hidden[h] * cache.hidden[h]);
            grads.b1[h] += d_pre;
            for i in 0..self.l1.in_dim {
                grads.w1[h * self.l1.in_dim + i] += d_pre * cache.input[i];
            }
        }
    }

    pub fn params_mut(&mut self) -> [(&mut Vec<f64>, usize); 4] {
        let _ = ();
        // ordering matches MlpGrads fields
        [
            (&mut self.l1.w, 0),
            (&mut self.l1.b, 1),
            (&mut self.l2.w, 2),
            (&mut self.l2.b, 3),
        ]
    }

    pub fn all_finite(&self) -> bool {
        self.l1.w.iter().chain(&self.l1.b).chain(&self.l2.w).chain(&self.l2.b).all(|v| v.is_finite())
    }
}

impl MlpGrads {
    pub fn field(&self, idx: usize) -> &[f64] {
        match idx {
            0 => &self.w1,
            1 => &self.b1,
            2 => &self.w2,
            _ => &self.b2,
        }
    }

    pub fn scale(&mut self, s: f64) {
        for v in self.w1.iter_mut().chain(&mut self.b1).chain(&mut self.w2).chain(&mut self.b2) {
            *v *= s;
        }
    }

    pub fn all_finite(&self) -> bool {
        self.w1.iter().chain(&self.b1).chain(&self.w2).chain(&self.b2).all(|v| v.is_finite())
    }

    pub fn all_zero(&self) -> bool {
        self.w1.iter().chain(&self.b1).chain(&self.w2).chain(&self.b2).all(|v| *v == 0.0)
    }
}

/// p' = p - lr * grads. Rejects non-finite gradients before touching params.
pub fn sgd_step(net: &mut Mlp, grads: &MlpGrads, lr: f64) -> Result<(), FairserveError> {
    if !grads.all_finite() {
        return Err(FairserveError::NonFiniteGradient);
    }
    for (param, idx) in net.params_mut() {
        for (p, g) in param.iter_mut().zip(grads.field(idx)) {
            *p -= lr * g;
        }
    }
    Ok(())
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.iter().map(|e| e / sum).collect()
}

/// Policy + value networks, jointly owned by the learner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActorCriticParams {
    pub actor: Mlp,
    pub critic: Mlp,
    pub hidden: usize,
}

impl ActorCriticParams {
    /// Actor head zero-initialized so training starts at the uniform policy.
    pub fn init<R: Rng>(hidden: usize, rng: &mut R) -> ActorCriticParams {
        ActorCriticParams::init_with(hidden, rng, true, 1.0)
    }

    /// `zero_head = false` keeps a random actor head, so the initial policy
    /// already differs across identities; `head_scale` multiplies its init
    /// range to control how strong that initial identity-dependence is.
    pub fn init_with<R: Rng>(
        hidden: usize,
        rng: &mut R,
        zero_head: bool,
        head_scale: f64,
    ) -> ActorCriticParams {
        let mut actor = Mlp::init(STATE_DIM, hidden, ACTION_DIM, rng, zero_head);
        if !zero_head && head_scale != 1.0 {
            for w in actor.l2.w.iter_mut() {
                *w *= head_scale;
            }
            for b in actor.l2.b.iter_mut() {
                *b *= head_scale;
            }
        }
        let critic = Mlp::init(STATE_DIM, hidden, 1, rng, false);
        ActorCriticParams { actor, critic, hidden }
    }

    /// Action distribution with cached activations.
    pub fn actor_forward(&self, x: &[f64]) -> (Vec<f64>, ForwardCache) {
        let cache = self.actor.forward(x);
        (softmax(&cache.output), cache)
    }

    pub fn critic_forward(&self, x: &[f64]) -> (f64, ForwardCache) {
        let cache = self.critic.forward(x);
        (cache.output[0], cache)
    }
}

const POLICY_HEADER: &str = "fairserve-policy v1";

fn fmt_floats(xs: &[f64]) -> String {
    xs.iter().map(|x| format!("{x:.16e}")).collect::<Vec<_>>().join(" ")
}

fn parse_floats(s: &str, expect: usize, what: &str) -> Result<Vec<f64>, FairserveError> {
    let vals: Result<Vec<f64>, _> = s.split_whitespace().map(str::parse::<f64>).collect();
    let vals =
        vals.map_err(|e| FairserveError::Checkpoint(format!("bad float in {what}: {e}")))?;
    if vals.len() != expect {
        return Err(FairserveError::Checkpoint(format!(
            "{what}: expected {expect} values, found {}",
            vals.len()
        )));
    }
    Ok(vals)
}

impl ActorCriticParams {
    /// Versioned plain-text checkpoint: shapes header, then one row-major
    /// float line per parameter tensor.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        s.push_str(POLICY_HEADER);
        s.push('\n');
        s.push_str(&format!("shapes {} {} {}\n", STATE_DIM, self.hidden, ACTION_DIM));
        for (name, t) in [
            ("actor.w1", &self.actor.l1.w),
            ("actor.b1", &self.actor.l1.b),
            ("actor.w2", &self.actor.l2.w),
            ("actor.b2", &self.actor.l2.b),
            ("critic.w1", &self.critic.l1.w),
            ("critic.b1", &self.critic.l1.b),
            ("critic.w2", &self.critic.l2.w),
            ("critic.b2", &self.critic.l2.b),
        ] {
            s.push_str(name);
            s.push(' ');
            s.push_str(&fmt_floats(t));
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<ActorCriticParams, FairserveError> {
        let mut lines = text.lines();
        let header = lines.next().unwrap_or("");
        if header != POLICY_HEADER {
            return Err(FairserveError::Checkpoint(format!(
                "unknown policy checkpoint version: {header:?}"
            )));
        }
        let shapes = lines
            .next()
            .and_then(|l| l.strip_prefix("shapes "))
            .ok_or_else(|| FairserveError::Checkpoint("missing shapes line".into()))?;
        let dims = parse_floats(shapes, 3, "shapes")?;
        let (in_dim, hidden, out_dim) = (dims[0] as usize, dims[1] as usize, dims[2] as usize);
        if in_dim != STATE_DIM || out_dim != ACTION_DIM {
            return Err(FairserveError::Checkpoint("unexpected network shape".into()));
        }
        let mut fields = std::collections::HashMap::new();
        for line in lines {
            if let Some((key, rest)) = line.split_once(' ') {
                fields.insert(key.to_string(), rest.to_string());
            }
        }
        let mut tensor = |key: &str, n: usize| -> Result<Vec<f64>, FairserveError> {
            let raw = fields
                .remove(key)
                .ok_or_else(|| FairserveError::Checkpoint(format!("missing tensor {key}")))?;
            parse_floats(&raw, n, key)
        };
        let actor = Mlp {
            l1: Linear {
                w: tensor("actor.w1", STATE_DIM * hidden)?,
                b: tensor("actor.b1", hidden)?,
                in_dim: STATE_DIM,
                out_dim: hidden,
            },
            l2: Linear {
                w: tensor("actor.w2", hidden * ACTION_DIM)?,
                b: tensor("actor.b2", ACTION_DIM)?,
                in_dim: hidden,
                out_dim: ACTION_DIM,
            },
        };
        let critic = Mlp {
            l1: Linear {
                w: tensor("critic.w1", STATE_DIM * hidden)?,
                b: tensor("critic.b1", hidden)?,
                in_dim: STATE_DIM,
                out_dim: hidden,
            },
            l2: Linear {
                w: tensor("critic.w2", hidden)?,
                b: tensor("critic.b2", 1)?,
                in_dim: hidden,
                out_dim: 1,
            },
        };
        Ok(ActorCriticParams { actor, critic, hidden })
    }

    pub fn save(&self, path: &std::path::Path) -> Result<(), FairserveError> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<ActorCriticParams, FairserveError> {
        ActorCriticParams::from_text(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rand_input(rng: &mut ChaCha8Rng) -> Vec<f64> {
        (0..STATE_DIM).map(|_| rng.gen_range(0.0..1.0)).collect()
    }

    /// Direct re-evaluation of the two-layer arithmetic, loop by loop.
    fn naive_forward(net: &Mlp, x: &[f64]) -> Vec<f64> {
        let mut h = vec![0.0; net.l1.out_dim];
        for j in 0..net.l1.out_dim {
            let mut acc = net.l1.b[j];
            for i in 0..net.l1.in_dim {
                acc += net.l1.w[j * net.l1.in_dim + i] * x[i];
            }
            h[j] = acc.tanh();
        }
        let mut out = vec![0.0; net.l2.out_dim];
        for j in 0..net.l2.out_dim {
            let mut acc = net.l2.b[j];
            for i in 0..net.l2.in_dim {
                acc += net.l2.w[j * net.l2.in_dim + i] * h[i];
            }
            out[j] = acc;
        }
        out
    }

    #[test]
    fn zero_head_gives_uniform_policy() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = ActorCriticParams::init(DEFAULT_HIDDEN, &mut rng);
        let x = rand_input(&mut rng);
        let (probs, _) = p.actor_forward(&x);
        assert_eq!(probs, vec![0.5, 0.5]);
    }

    #[test]
    fn probabilities_sum_to_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut p = ActorCriticParams::init(DEFAULT_HIDDEN, &mut rng);
        p.actor = Mlp::init(STATE_DIM, DEFAULT_HIDDEN, ACTION_DIM, &mut rng, false);
        for _ in 0..50 {
            let x = rand_input(&mut rng);
            let (probs, _) = p.actor_forward(&x);
            assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(probs.iter().all(|p| *p > 0.0));
        }
    }

    #[test]
    fn forward_matches_naive_arithmetic() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let net = Mlp::init(STATE_DIM, 8, 2, &mut rng, false);
        let x = rand_input(&mut rng);
        let cache = net.forward(&x);
        let naive = naive_forward(&net, &x);
        for (a, b) in cache.output.iter().zip(&naive) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_critic_outputs_zero() {
        let net = Mlp { l1: Linear::zeros(STATE_DIM, 4), l2: Linear::zeros(4, 1) };
        let x = vec![0.3; STATE_DIM];
        assert_eq!(net.forward(&x).output[0], 0.0);
    }

    #[test]
    fn backward_matches_finite_differences() {
        // Scalar loss: sum of outputs weighted by fixed coefficients.
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let net = Mlp::init(6, 5, 3, &mut rng, false);
        let x: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let coeffs = [0.7, -1.3, 0.4];
        let loss = |n: &Mlp| -> f64 {
            n.forward(&x).output.iter().zip(&coeffs).map(|(o, c)| o * c).sum()
        };

        let cache = net.forward(&x);
        let mut grads = net.zero_grads();
        net.backward(&cache, &coeffs, &mut grads);

        let eps = 1e-5;
        let mut probe = net.clone();
        for field in 0..4 {
            let len = grads.field(field).len();
            for k in 0..len {
                let orig = probe.params_mut()[field].0[k];
                probe.params_mut()[field].0[k] = orig + eps;
                let up = loss(&probe);
                probe.params_mut()[field].0[k] = orig - eps;
                let down = loss(&probe);
                probe.params_mut()[field].0[k] = orig;
                let fd = (up - down) / (2.0 * eps);
                let g = grads.field(field)[k];
                let denom = fd.abs().max(g.abs()).max(1e-8);
                assert!(
                    ((fd - g) / denom).abs() < 1e-4,
                    "field {field} idx {k}: fd {fd} vs analytic {g}"
                );
            }
        }
    }

    #[test]
    fn zero_upstream_gradient_is_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let net = Mlp::init(4, 3, 2, &mut rng, false);
        let x = vec![0.1, 0.2, 0.3, 0.4];
        let cache = net.forward(&x);
        let mut grads = net.zero_grads();
        net.backward(&cache, &[0.0, 0.0], &mut grads);
        assert!(grads.all_zero());
    }

    #[test]
    fn softmax_score_identity() {
        // E_a[grad log pi(a)] = 0 for the softmax head.
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let net = Mlp::init(STATE_DIM, 8, 2, &mut rng, false);
        let x = rand_input(&mut rng);
        let cache = net.forward(&x);
        let probs = softmax(&cache.output);

        let mut weighted = net.zero_grads();
        for a in 0..2 {
            // d log pi(a) / d logits = onehot(a) - probs
            let mut d = vec![-probs[0], -probs[1]];
            d[a] += 1.0;
            d.iter_mut().for_each(|v| *v *= probs[a]);
            net.backward(&cache, &d, &mut weighted);
        }
        for field in 0..4 {
            for g in weighted.field(field) {
                assert!(g.abs() < 1e-10, "score identity violated: {g}");
            }
        }
    }

    #[test]
    fn softmax_shift_invariance() {
        let a = softmax(&[0.3, -1.2]);
        let b = softmax(&[0.3 + 100.0, -1.2 + 100.0]);
        assert!((a[0] - b[0]).abs() < 1e-12);
        assert!((a[1] - b[1]).abs() < 1e-12);
    }

    #[test]
    fn sgd_step_behaviour() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut net = Mlp::init(3, 2, 1, &mut rng, false);
        let before = net.clone();

        // zero grads: unchanged
        let grads = net.zero_grads();
        sgd_step(&mut net, &grads, 0.5).unwrap();
        assert_eq!(net, before);

        // lr=1, grads=p: parameters become 0
        let mut asgrads = net.zero_grads();
        asgrads.w1.copy_from_slice(&net.l1.w);
        asgrads.b1.copy_from_slice(&net.l1.b);
        asgrads.w2.copy_from_slice(&net.l2.w);
        asgrads.b2.copy_from_slice(&net.l2.b);
        let mut zeroed = net.clone();
        sgd_step(&mut zeroed, &asgrads, 1.0).unwrap();
        assert!(zeroed.l1.w.iter().all(|v| *v == 0.0));

        // two half steps equal one full step on constant grads
        let mut one = net.clone();
        let mut two = net.clone();
        sgd_step(&mut one, &asgrads, 0.2).unwrap();
        sgd_step(&mut two, &asgrads, 0.1).unwrap();
        sgd_step(&mut two, &asgrads, 0.1).unwrap();
        for (a, b) in one.l1.w.iter().zip(&two.l1.w) {
            assert!((a - b).abs() < 1e-15);
        }

        // non-finite gradient rejected
        let mut bad = net.zero_grads();
        bad.w1[0] = f64::NAN;
        assert!(matches!(sgd_step(&mut net, &bad, 0.1), Err(FairserveError::NonFiniteGradient)));
    }

    #[test]
    fn policy_checkpoint_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(20);
        let mut p = ActorCriticParams::init(16, &mut rng);
        p.actor = Mlp::init(STATE_DIM, 16, ACTION_DIM, &mut rng, false);
        let back = ActorCriticParams::from_text(&p.to_text()).unwrap();
        assert_eq!(p, back);
        for _ in 0..100 {
            let x = rand_input(&mut rng);
            assert_eq!(p.actor_forward(&x).0, back.actor_forward(&x).0);
            assert_eq!(p.critic_forward(&x).0, back.critic_forward(&x).0);
        }
        assert!(matches!(
            ActorCriticParams::from_text("fairserve-policy v7\n"),
            Err(FairserveError::Checkpoint(_))
        ));
    }

    #[test]
    fn deterministic_init() {
        let mut a = ChaCha8Rng::seed_from_u64(9);
        let mut b = ChaCha8Rng::seed_from_u64(9);
        let pa = ActorCriticParams::init(16, &mut a);
        let pb = ActorCriticParams::init(16, &mut b);
        assert_eq!(pa, pb);
    }

    #[test]
    fn encoding_in_unit_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let cfg = EnvConfig::default();
        let mut env = crate::env::Environment::new(cfg.clone(), Default::default());
        for _ in 0..100 {
            let s = env.reset(&mut rng);
            let x = encode_state(&s, &cfg);
            assert_eq!(x.len(), STATE_DIM);
            assert!(x.iter().all(|v| (0.0..=1.0).contains(v)));
        }
    }
}
