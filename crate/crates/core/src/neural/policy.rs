use std::ops::Range;

use ndarray::{Array2, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{relu, relu_back, Dense, Layers, NeuralError, Real};
use crate::encoding::{ACTION_ONE_HOT_LEN, ACTION_TYPES, OBS_LEN};
use crate::engine::{ActionTriple, ActionType, TILE_COUNT};

/// Logit columns of the action-type, tile and target heads.
pub const BRANCH_RANGES: [Range<usize>; 3] =
    [0..ACTION_TYPES, ACTION_TYPES..ACTION_TYPES + TILE_COUNT, ACTION_TYPES + TILE_COUNT..ACTION_ONE_HOT_LEN];

/// Logit columns an action selects in each branch. The target branch only
/// counts for attacks, since the engine ignores it otherwise.
pub fn branch_slots(a: &ActionTriple) -> [Option<usize>; 3] {
    [
        Some(a.action_type.index()),
        Some(BRANCH_RANGES[1].start + a.tile),
        (a.action_type == ActionType::Attack).then_some(BRANCH_RANGES[2].start + a.target),
    ]
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicyArch {
    pub obs_len: usize,
    pub hidden: usize,
    pub value_heads: usize,
}

impl PolicyArch {
    pub fn new(hidden: usize, value_heads: usize) -> Self {
        PolicyArch { obs_len: OBS_LEN, hidden, value_heads }
    }

    pub fn validate(&self) -> Result<(), NeuralError> {
        if self.obs_len == 0 || self.hidden == 0 || self.value_heads == 0 {
            return Err(NeuralError::Arch(format!("all policy dimensions must be positive: {self:?}")));
        }
        Ok(())
    }
}

/// Shared two-layer ReLU trunk feeding three categorical heads (as one
/// 55-wide logit layer) and one value output per reward signal.
#[derive(Clone, Debug, PartialEq)]
pub struct PolicyNet<T> {
    pub arch: PolicyArch,
    pub l1: Dense<T>,
    pub l2: Dense<T>,
    pub pi: Dense<T>,
    pub v: Dense<T>,
}

impl<T: Real> Layers<T> for PolicyNet<T> {
    fn layers(&self) -> Vec<(&'static str, &Dense<T>)> {
        vec![("policy.l1", &self.l1), ("policy.l2", &self.l2), ("policy.pi", &self.pi), ("policy.v", &self.v)]
    }

    fn layers_mut(&mut self) -> Vec<(&'static str, &mut Dense<T>)> {
        vec![
            ("policy.l1", &mut self.l1),
            ("policy.l2", &mut self.l2),
            ("policy.pi", &mut self.pi),
            ("policy.v", &mut self.v),
        ]
    }
}

/// Forward activations kept for the backward pass, plus the masked
/// distributions and values.
#[derive(Clone, Debug)]
pub struct PolicyPass<T> {
    x: Array2<T>,
    z1: Array2<T>,
    h1: Array2<T>,
    z2: Array2<T>,
    h2: Array2<T>,
    pub logits: Array2<T>,
    /// Masked probabilities; masked entries are exactly zero.
    pub probs: Array2<T>,
    /// Masked log-probabilities; masked entries are negative infinity.
    pub logp: Array2<T>,
    pub values: Array2<T>,
    pub masks: Vec<[bool; ACTION_ONE_HOT_LEN]>,
}

/// Terms of the PPO objective for one minibatch. Total loss is
/// `policy_coef·surrogate + value_coef·value_mse − entropy_coef·entropy`.
pub struct PpoTerms<'a, T> {
    pub actions: &'a [ActionTriple],
    pub old_logp: &'a [T],
    pub advantages: &'a [T],
    /// batch × value_heads
    pub returns: ArrayView2<'a, T>,
    pub clip_eps: T,
    pub policy_coef: T,
    pub value_coef: T,
    pub entropy_coef: T,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LossReport {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub clip_fraction: f64,
}

impl<T: Real> PolicyNet<T> {
    pub fn new(arch: PolicyArch, seed: u64) -> Result<Self, NeuralError> {
        arch.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = arch.hidden;
        Ok(PolicyNet {
            l1: Dense::glorot(arch.obs_len, h, &mut rng),
            l2: Dense::glorot(h, h, &mut rng),
            pi: Dense::glorot(h, ACTION_ONE_HOT_LEN, &mut rng),
            v: Dense::glorot(h, arch.value_heads, &mut rng),
            arch,
        })
    }

    pub fn zeros_like(&self) -> Self {
        PolicyNet {
            arch: self.arch.clone(),
            l1: self.l1.zeros_like(),
            l2: self.l2.zeros_like(),
            pi: self.pi.zeros_like(),
            v: self.v.zeros_like(),
        }
    }

    pub fn forward(&self, obs: ArrayView2<T>, masks: &[[bool; ACTION_ONE_HOT_LEN]]) -> PolicyPass<T> {
        assert_eq!(obs.ncols(), self.arch.obs_len, "observation width");
        assert_eq!(obs.nrows(), masks.len(), "one mask row per observation");
        let x = obs.to_owned();
        let z1 = self.l1.forward(&x.view());
        let h1 = relu(&z1);
        let z2 = self.l2.forward(&h1.view());
        let h2 = relu(&z2);
        let logits = self.pi.forward(&h2.view());
        let values = self.v.forward(&h2.view());
        let (probs, logp) = masked_softmax(&logits, masks);
        PolicyPass { x, z1, h1, z2, h2, logits, probs, logp, values, masks: masks.to_vec() }
    }

    /// Accumulates gradients of the PPO loss into `grad`.
    pub fn ppo_backward(&self, pass: &PolicyPass<T>, t: &PpoTerms<T>, grad: &mut Self) -> LossReport {
        let n = pass.len();
        let bn = T::of(n as f64);
        let heads = self.arch.value_heads;
        let mut g_logits = Array2::<T>::zeros((n, ACTION_ONE_HOT_LEN));
        let mut g_values = Array2::<T>::zeros((n, heads));
        let mut report = LossReport::default();
        let lo = T::one() - t.clip_eps;
        let hi = T::one() + t.clip_eps;
        for i in 0..n {
            let a = &t.actions[i];
            let ratio = (pass.log_prob(i, a) - t.old_logp[i]).exp();
            let adv = t.advantages[i];
            let s1 = ratio * adv;
            let s2 = ratio.max(lo).min(hi) * adv;
            report.policy_loss -= s1.min(s2).as_f64();
            if ratio < lo || ratio > hi {
                report.clip_fraction += 1.0;
            }
            let mut row = g_logits.row_mut(i);
            let row = row.as_slice_mut().expect("contiguous");
            if s1 <= s2 {
                let c = -t.policy_coef * ratio * adv / bn;
                add_logp_grad(row, pass, i, a, c);
            }
            // dH_b/dl_j = -p_j (log p_j + H_b)
            for r in BRANCH_RANGES {
                let h_b = branch_entropy(pass, i, r.clone());
                report.entropy += h_b.as_f64();
                let c = t.entropy_coef / bn;
                for j in r {
                    if pass.masks[i][j] {
                        row[j] += c * pass.probs[[i, j]] * (pass.logp[[i, j]] + h_b);
                    }
                }
            }
            for s in 0..heads {
                let d = pass.values[[i, s]] - t.returns[[i, s]];
                report.value_loss += (d * d).as_f64();
                g_values[[i, s]] = t.value_coef * T::of(2.0) * d / (bn * T::of(heads as f64));
            }
        }
        let nf = n as f64;
        report.policy_loss /= nf;
        report.entropy /= nf;
        report.value_loss /= nf * heads as f64;
        report.clip_fraction /= nf;
        self.backward(pass, &g_logits, Some(&g_values), grad);
        report
    }

    /// Accumulates gradients of `coef` × mean masked cross-entropy against the
    /// demonstrated actions; returns the unscaled cross-entropy.
    pub fn bc_backward(&self, pass: &PolicyPass<T>, actions: &[ActionTriple], coef: T, grad: &mut Self) -> f64 {
        let n = pass.len();
        let mut g_logits = Array2::<T>::zeros((n, ACTION_ONE_HOT_LEN));
        let mut loss = 0.0;
        for (i, a) in actions.iter().enumerate() {
            loss -= pass.log_prob(i, a).as_f64();
            let mut row = g_logits.row_mut(i);
            add_logp_grad(row.as_slice_mut().expect("contiguous"), pass, i, a, -coef / T::of(n as f64));
        }
        self.backward(pass, &g_logits, None, grad);
        loss / n as f64
    }

    fn backward(&self, pass: &PolicyPass<T>, g_logits: &Array2<T>, g_values: Option<&Array2<T>>, grad: &mut Self) {
        let mut dh2 = self.pi.backward(&pass.h2.view(), &g_logits.view(), &mut grad.pi, true).expect("dx");
        if let Some(gv) = g_values {
            dh2 += &self.v.backward(&pass.h2.view(), &gv.view(), &mut grad.v, true).expect("dx");
        }
        let dz2 = relu_back(&pass.z2, dh2);
        let dh1 = self.l2.backward(&pass.h1.view(), &dz2.view(), &mut grad.l2, true).expect("dx");
        let dz1 = relu_back(&pass.z1, dh1);
        self.l1.backward(&pass.x.view(), &dz1.view(), &mut grad.l1, false);
    }

    pub fn cast<U: Real>(&self) -> PolicyNet<U> {
        let c = |d: &Dense<T>| Dense { w: d.w.mapv(|v| U::of(v.as_f64())), b: d.b.mapv(|v| U::of(v.as_f64())) };
        PolicyNet { arch: self.arch.clone(), l1: c(&self.l1), l2: c(&self.l2), pi: c(&self.pi), v: c(&self.v) }
    }
}

/// `row += c · d(log π(a))/d(logits)`, i.e. `c·(onehot − p)` on each selected branch.
fn add_logp_grad<T: Real>(row: &mut [T], pass: &PolicyPass<T>, i: usize, a: &ActionTriple, c: T) {
    for (b, slot) in branch_slots(a).into_iter().enumerate() {
        let Some(k) = slot else { continue };
        for j in BRANCH_RANGES[b].clone() {
            if pass.masks[i][j] {
                let onehot = if j == k { T::one() } else { T::zero() };
                row[j] += c * (onehot - pass.probs[[i, j]]);
            }
        }
    }
}

fn branch_entropy<T: Real>(pass: &PolicyPass<T>, i: usize, r: Range<usize>) -> T {
    let mut h = T::zero();
    for j in r {
        if pass.masks[i][j] {
            h -= pass.probs[[i, j]] * pass.logp[[i, j]];
        }
    }
    h
}

fn masked_softmax<T: Real>(logits: &Array2<T>, masks: &[[bool; ACTION_ONE_HOT_LEN]]) -> (Array2<T>, Array2<T>) {
    let mut probs = Array2::<T>::zeros(logits.raw_dim());
    let mut logp = Array2::<T>::from_elem(logits.raw_dim(), T::neg_infinity());
    for (i, row) in logits.axis_iter(Axis(0)).enumerate() {
        for r in BRANCH_RANGES {
            let m = r
                .clone()
                .filter(|&j| masks[i][j])
                .map(|j| row[j])
                .fold(T::neg_infinity(), T::max);
            assert!(m > T::neg_infinity() || m.is_nan(), "branch {r:?} fully masked in row {i}");
            let sum = r.clone().filter(|&j| masks[i][j]).map(|j| (row[j] - m).exp()).fold(T::zero(), |a, b| a + b);
            let log_sum = sum.ln();
            for j in r {
                if masks[i][j] {
                    let lp = row[j] - m - log_sum;
                    logp[[i, j]] = lp;
                    probs[[i, j]] = lp.exp();
                }
            }
        }
    }
    (probs, logp)
}

impl<T: Real> PolicyPass<T> {
    pub fn len(&self) -> usize {
        self.logits.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Joint log-probability: sum over the branches the action reads.
    pub fn log_prob(&self, i: usize, a: &ActionTriple) -> T {
        branch_slots(a).into_iter().flatten().map(|k| self.logp[[i, k]]).fold(T::zero(), |s, v| s + v)
    }

    /// Sum of the three branch entropies.
    pub fn entropy(&self, i: usize) -> T {
        BRANCH_RANGES.into_iter().map(|r| branch_entropy(self, i, r)).fold(T::zero(), |s, v| s + v)
    }

    pub fn branch_probs(&self, i: usize, b: usize) -> Vec<T> {
        BRANCH_RANGES[b].clone().map(|j| self.probs[[i, j]]).collect()
    }

    fn pick(&self, i: usize, mut choose: impl FnMut(Range<usize>) -> usize) -> ActionTriple {
        let [t, tile, target] = BRANCH_RANGES.map(&mut choose);
        let action_type = ActionType::ALL[t - BRANCH_RANGES[0].start];
        let _ = i;
        ActionTriple { action_type, tile: tile - BRANCH_RANGES[1].start, target: target - BRANCH_RANGES[2].start }
    }

    /// Per-branch argmax over unmasked entries, lowest index on ties.
    pub fn greedy(&self, i: usize) -> ActionTriple {
        self.pick(i, |r| {
            let mut best = None::<(usize, T)>;
            for j in r {
                if self.masks[i][j] && best.is_none_or(|(_, p)| self.logits[[i, j]] > p) {
                    best = Some((j, self.logits[[i, j]]));
                }
            }
            best.expect("branch has an unmasked entry").0
        })
    }

    /// Independent categorical draw per branch.
    pub fn sample<R: Rng + ?Sized>(&self, i: usize, rng: &mut R) -> ActionTriple {
        self.pick(i, |r| {
            let u: f64 = rng.gen();
            let mut acc = 0.0;
            let mut last = None;
            for j in r {
                if !self.masks[i][j] {
                    continue;
                }
                last = Some(j);
                acc += self.probs[[i, j]].as_f64();
                if u < acc {
                    return j;
                }
            }
            last.expect("branch has an unmasked entry")
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    fn net() -> PolicyNet<f64> {
        PolicyNet::new(PolicyArch { obs_len: 5, hidden: 4, value_heads: 2 }, 3).unwrap()
    }

    fn all_mask() -> [bool; ACTION_ONE_HOT_LEN] {
        [true; ACTION_ONE_HOT_LEN]
    }

    #[test]
    fn probabilities_normalize_per_branch() {
        let n = net();
        let x = Array2::from_shape_fn((3, 5), |(i, j)| (i * 5 + j) as f64 / 10.0);
        let mut m = all_mask();
        m[1] = false;
        m[10] = false;
        let p = n.forward(x.view(), &[m, all_mask(), all_mask()]);
        for i in 0..3 {
            for b in 0..3 {
                let s: f64 = p.branch_probs(i, b).iter().sum();
                assert!((s - 1.0).abs() < 1e-12);
            }
        }
        assert_eq!(p.probs[[0, 1]], 0.0);
        assert_eq!(p.logp[[0, 10]], f64::NEG_INFINITY);
    }

    #[test]
    fn single_admitted_tile_has_probability_one() {
        let n = net();
        let mut m = all_mask();
        for j in BRANCH_RANGES[1].clone() {
            m[j] = j == BRANCH_RANGES[1].start + 17;
        }
        let p = n.forward(Array2::ones((1, 5)).view(), &[m]);
        assert_eq!(p.probs[[0, BRANCH_RANGES[1].start + 17]], 1.0);
        assert_eq!(p.greedy(0).tile, 17);
    }

    #[test]
    fn uniform_logits_give_uniform_types() {
        let mut n = net();
        n.pi.w.fill(0.0);
        let p = n.forward(Array2::ones((1, 5)).view(), &[all_mask()]);
        for v in p.branch_probs(0, 0) {
            assert!((v - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn extreme_logits_stay_finite() {
        let mut n = net().cast::<f32>();
        n.pi.b = ndarray::Array1::from_shape_fn(ACTION_ONE_HOT_LEN, |j| if j % 2 == 0 { 1e4 } else { -1e4 });
        let p = n.forward(Array2::zeros((1, 5)).view(), &[all_mask()]);
        assert!(p.probs.iter().all(|v| v.is_finite()));
        assert!(p.entropy(0).is_finite());
    }
}
