use ndarray::{Array1, Array2, ArrayView2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{relu, relu_back, Dense, Layers, NeuralError, Real};
use crate::encoding::{action_one_hot, ACTION_ONE_HOT_LEN, OBS_LEN};
use crate::engine::ActionTriple;

pub const DISC_INPUT_LEN: usize = OBS_LEN + ACTION_ONE_HOT_LEN;
/// Output clamp keeping D strictly inside (0, 1).
pub const DISC_EPS: f64 = 1e-7;

/// Observation followed by the one-hot action.
pub fn disc_input<T: Real>(obs: &[f32], action: &ActionTriple) -> [T; DISC_INPUT_LEN] {
    let mut out = [T::zero(); DISC_INPUT_LEN];
    for (o, &v) in out.iter_mut().zip(obs) {
        *o = T::of(v as f64);
    }
    for (o, v) in out[OBS_LEN..].iter_mut().zip(action_one_hot(action)) {
        *o = T::of(v as f64);
    }
    out
}

/// One ReLU hidden layer and a sigmoid output: D(s, a) is the estimated
/// probability that the pair came from a demonstration.
#[derive(Clone, Debug, PartialEq)]
pub struct Discriminator<T> {
    pub l1: Dense<T>,
    pub out: Dense<T>,
}

impl<T: Real> Layers<T> for Discriminator<T> {
    fn layers(&self) -> Vec<(&'static str, &Dense<T>)> {
        vec![("disc.l1", &self.l1), ("disc.out", &self.out)]
    }

    fn layers_mut(&mut self) -> Vec<(&'static str, &mut Dense<T>)> {
        vec![("disc.l1", &mut self.l1), ("disc.out", &mut self.out)]
    }
}

#[derive(Clone, Debug)]
pub struct DiscPass<T> {
    x: Array2<T>,
    z1: Array2<T>,
    h1: Array2<T>,
    pub logit: Array1<T>,
    pub d: Array1<T>,
}

impl<T: Real> Discriminator<T> {
    /// Glorot hidden layer and a zeroed output layer, so D starts at exactly 0.5.
    pub fn new(input: usize, hidden: usize, seed: u64) -> Result<Self, NeuralError> {
        if input == 0 || hidden == 0 {
            return Err(NeuralError::Arch(format!("discriminator dims must be positive ({input}, {hidden})")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok(Discriminator { l1: Dense::glorot(input, hidden, &mut rng), out: Dense::zeros(hidden, 1) })
    }

    pub fn hidden(&self) -> usize {
        self.l1.fan_out()
    }

    pub fn zeros_like(&self) -> Self {
        Discriminator { l1: self.l1.zeros_like(), out: self.out.zeros_like() }
    }

    pub fn forward(&self, x: ArrayView2<T>) -> Result<DiscPass<T>, NeuralError> {
        if x.ncols() != self.l1.fan_in() {
            return Err(NeuralError::Shape(format!(
                "discriminator expects {} inputs, got {}",
                self.l1.fan_in(),
                x.ncols()
            )));
        }
        let x = x.to_owned();
        let z1 = self.l1.forward(&x.view());
        let h1 = relu(&z1);
        let logit = self.out.forward(&h1.view()).column(0).to_owned();
        let eps = T::of(DISC_EPS);
        let d = logit.mapv(|z| sigmoid(z).max(eps).min(T::one() - eps));
        Ok(DiscPass { x, z1, h1, logit, d })
    }

    /// Mean binary cross-entropy for `labels` (1 = demonstration); gradients
    /// scaled by `coef` accumulate into `grad`.
    pub fn bce_backward(&self, pass: &DiscPass<T>, labels: &[T], coef: T, grad: &mut Self) -> f64 {
        let n = labels.len();
        let bn = T::of(n as f64);
        let eps = T::of(DISC_EPS);
        let mut g = Array2::<T>::zeros((n, 1));
        let mut loss = 0.0;
        for i in 0..n {
            let (d, y) = (pass.d[i], labels[i]);
            loss -= (y * d.ln() + (T::one() - y) * (T::one() - d).ln()).as_f64();
            // dBCE/dz = σ(z) − y inside the clamp, zero where the clamp binds.
            let s = sigmoid(pass.logit[i]);
            if s > eps && s < T::one() - eps {
                g[[i, 0]] = coef * (d - y) / bn;
            }
        }
        let dh1 = self.out.backward(&pass.h1.view(), &g.view(), &mut grad.out, true).expect("dx");
        let dz1 = relu_back(&pass.z1, dh1);
        self.l1.backward(&pass.x.view(), &dz1.view(), &mut grad.l1, false);
        loss / n as f64
    }

    /// BCE without touching gradients.
    pub fn bce(&self, x: ArrayView2<T>, labels: &[T]) -> Result<f64, NeuralError> {
        let pass = self.forward(x)?;
        Ok(pass
            .d
            .iter()
            .zip(labels)
            .map(|(&d, &y)| -(y * d.ln() + (T::one() - y) * (T::one() - d).ln()).as_f64())
            .sum::<f64>()
            / labels.len() as f64)
    }

    pub fn cast<U: Real>(&self) -> Discriminator<U> {
        let c = |d: &Dense<T>| Dense { w: d.w.mapv(|v| U::of(v.as_f64())), b: d.b.mapv(|v| U::of(v.as_f64())) };
        Discriminator { l1: c(&self.l1), out: c(&self.out) }
    }
}

fn sigmoid<T: Real>(z: T) -> T {
    if z >= T::zero() {
        T::one() / (T::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (T::one() + e)
    }
}
