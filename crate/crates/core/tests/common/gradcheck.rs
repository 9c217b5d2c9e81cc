//! Central finite differences against the analytic backward passes, in f64.

use mirrormode::encoding::ACTION_ONE_HOT_LEN;
use mirrormode::engine::{ActionTriple, ActionType};
use mirrormode::neural::{Discriminator, Layers, PolicyArch, PolicyNet, PpoTerms, BRANCH_RANGES};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const OBS: usize = 6;
pub const HIDDEN: usize = 4;
pub const BATCH: usize = 5;
pub const H: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LossTerm {
    PpoPolicy,
    ValueMse,
    Entropy,
    BcCe,
    GailBce,
}

pub const ALL_TERMS: [LossTerm; 5] =
    [LossTerm::PpoPolicy, LossTerm::ValueMse, LossTerm::Entropy, LossTerm::BcCe, LossTerm::GailBce];

pub struct Fixture {
    pub obs: Array2<f64>,
    pub masks: Vec<[bool; ACTION_ONE_HOT_LEN]>,
    pub actions: Vec<ActionTriple>,
    pub old_logp: Vec<f64>,
    pub advantages: Vec<f64>,
    pub returns: Array2<f64>,
    pub labels: Vec<f64>,
    pub disc_x: Array2<f64>,
}

/// Random masks that keep every branch non-empty, and actions drawn from
/// the admitted entries.
pub fn fixture(seed: u64) -> Fixture {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut masks = Vec::new();
    let mut actions = Vec::new();
    for _ in 0..BATCH {
        let mut m = [false; ACTION_ONE_HOT_LEN];
        let mut picks = [0usize; 3];
        for (b, r) in BRANCH_RANGES.iter().enumerate() {
            for j in r.clone() {
                m[j] = rng.gen_bool(0.6);
            }
            let k = rng.gen_range(r.clone());
            m[k] = true;
            picks[b] = k - r.start;
        }
        masks.push(m);
        actions.push(ActionTriple { action_type: ActionType::ALL[picks[0]], tile: picks[1], target: picks[2] });
    }
    Fixture {
        obs: Array2::from_shape_fn((BATCH, OBS), |_| rng.gen_range(-1.0..1.0)),
        masks,
        actions,
        old_logp: (0..BATCH).map(|_| rng.gen_range(-6.0..-1.0)).collect(),
        advantages: (0..BATCH).map(|_| rng.gen_range(-2.0..2.0)).collect(),
        returns: Array2::from_shape_fn((BATCH, 2), |_| rng.gen_range(-1.0..1.0)),
        labels: (0..BATCH).map(|i| (i % 2) as f64).collect(),
        disc_x: Array2::from_shape_fn((BATCH, OBS), |_| rng.gen_range(-1.0..1.0)),
    }
}

/// Non-zero biases keep pre-activations off the ReLU kink at exactly zero,
/// which an all-dead hidden row would otherwise hit.
fn jitter_biases<N: Layers<f64>>(net: &mut N, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xb1a5);
    for (_, l) in net.layers_mut() {
        l.b.mapv_inplace(|_| rng.gen_range(-0.2..0.2));
    }
}

pub fn policy(seed: u64) -> PolicyNet<f64> {
    let mut n = PolicyNet::new(PolicyArch { obs_len: OBS, hidden: HIDDEN, value_heads: 2 }, seed).unwrap();
    jitter_biases(&mut n, seed);
    n
}

pub fn disc(seed: u64) -> Discriminator<f64> {
    let mut d = Discriminator::new(OBS, HIDDEN, seed).unwrap();
    jitter_biases(&mut d, seed);
    d
}

/// Clip wide enough that ratios near one stay off the kinks.
const CLIP: f64 = 0.9;

fn terms<'a>(f: &'a Fixture, term: LossTerm) -> PpoTerms<'a, f64> {
    let on = |t: LossTerm| if t == term { 1.0 } else { 0.0 };
    PpoTerms {
        actions: &f.actions,
        old_logp: &f.old_logp,
        advantages: &f.advantages,
        returns: f.returns.view(),
        clip_eps: CLIP,
        policy_coef: on(LossTerm::PpoPolicy),
        value_coef: on(LossTerm::ValueMse),
        entropy_coef: on(LossTerm::Entropy),
    }
}

/// Loss recomputed from the forward pass only: the oracle side.
pub fn policy_loss(net: &PolicyNet<f64>, f: &Fixture, term: LossTerm) -> f64 {
    let pass = net.forward(f.obs.view(), &f.masks);
    let n = f.actions.len() as f64;
    match term {
        LossTerm::PpoPolicy => {
            -(0..f.actions.len())
                .map(|i| {
                    let r = (pass.log_prob(i, &f.actions[i]) - f.old_logp[i]).exp();
                    let a = f.advantages[i];
                    (r * a).min(r.clamp(1.0 - CLIP, 1.0 + CLIP) * a)
                })
                .sum::<f64>()
                / n
        }
        LossTerm::ValueMse => {
            (&pass.values - &f.returns).mapv(|d| d * d).sum() / (n * f.returns.ncols() as f64)
        }
        LossTerm::Entropy => -(0..f.actions.len()).map(|i| pass.entropy(i)).sum::<f64>() / n,
        LossTerm::BcCe => -(0..f.actions.len()).map(|i| pass.log_prob(i, &f.actions[i])).sum::<f64>() / n,
        LossTerm::GailBce => unreachable!("discriminator term"),
    }
}

pub fn policy_grad(net: &PolicyNet<f64>, f: &Fixture, term: LossTerm) -> PolicyNet<f64> {
    let pass = net.forward(f.obs.view(), &f.masks);
    let mut g = net.zeros_like();
    match term {
        LossTerm::BcCe => {
            net.bc_backward(&pass, &f.actions, 1.0, &mut g);
        }
        _ => {
            net.ppo_backward(&pass, &terms(f, term), &mut g);
        }
    }
    g
}

/// Worst relative error over every parameter, with a floor on the
/// denominator so near-zero gradients compare absolutely.
pub fn max_rel_error<N: Layers<f64> + Clone>(
    net: &N,
    analytic: &N,
    loss: impl Fn(&N) -> f64,
) -> f64 {
    let mut worst: f64 = 0.0;
    let layers = net.layers().len();
    for li in 0..layers {
        for part in 0..2 {
            let len = {
                let l = net.layers()[li].1;
                if part == 0 { l.w.len() } else { l.b.len() }
            };
            for k in 0..len {
                let bump = |delta: f64| {
                    let mut n2 = net.clone();
                    let mut ls = n2.layers_mut();
                    let l = &mut ls[li].1;
                    let s = if part == 0 { l.w.as_slice_mut().unwrap() } else { l.b.as_slice_mut().unwrap() };
                    s[k] += delta;
                    drop(ls);
                    loss(&n2)
                };
                let fd = (bump(H) - bump(-H)) / (2.0 * H);
                let al = analytic.layers()[li].1;
                let a = if part == 0 { al.w.as_slice().unwrap()[k] } else { al.b.as_slice().unwrap()[k] };
                let err = (fd - a).abs() / fd.abs().max(a.abs()).max(1e-3);
                worst = worst.max(err);
            }
        }
    }
    worst
}

/// Old log-probs within ±0.5 of the current ones, so ratios sit inside the clip.
pub fn with_nearby_old_logp(net: &PolicyNet<f64>, mut f: Fixture, seed: u64) -> Fixture {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let pass = net.forward(f.obs.view(), &f.masks);
    f.old_logp = (0..f.actions.len()).map(|i| pass.log_prob(i, &f.actions[i]) + rng.gen_range(-0.5..0.5)).collect();
    f
}

/// Relative error of the analytic gradient for one loss term.
pub fn check(term: LossTerm, seed: u64) -> f64 {
    let f = fixture(seed);
    if term == LossTerm::GailBce {
        let d = disc(seed);
        let pass = d.forward(f.disc_x.view()).unwrap();
        let mut g = d.zeros_like();
        d.bce_backward(&pass, &f.labels, 1.0, &mut g);
        return max_rel_error(&d, &g, |n: &Discriminator<f64>| n.bce(f.disc_x.view(), &f.labels).unwrap());
    }
    let net = policy(seed);
    let f = with_nearby_old_logp(&net, f, seed);
    let g = policy_grad(&net, &f, term);
    max_rel_error(&net, &g, |n: &PolicyNet<f64>| policy_loss(n, &f, term))
}
