use super::{Layers, Real};

/// Adam with bias correction; moment buffers follow the network's layer order.
#[derive(Clone, Debug)]
pub struct Adam<T> {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    t: u64,
    m: Vec<Vec<T>>,
    v: Vec<Vec<T>>,
}

impl<T: Real> Adam<T> {
    pub fn new() -> Self {
        Adam { beta1: 0.9, beta2: 0.999, eps: 1e-8, t: 0, m: Vec::new(), v: Vec::new() }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    pub fn step<N: Layers<T>>(&mut self, params: &mut N, grads: &N, lr: f64) {
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        let step = T::of(lr * bc2.sqrt() / bc1);
        let (b1, b2) = (T::of(self.beta1), T::of(self.beta2));
        let eps_hat = T::of(self.eps * bc2.sqrt());
        let grads = grads.layers();
        let mut k = 0;
        for ((_, p), (_, g)) in params.layers_mut().into_iter().zip(grads) {
            let pairs = [
                (p.w.as_slice_mut().expect("contiguous"), g.w.as_slice().expect("contiguous")),
                (p.b.as_slice_mut().expect("contiguous"), g.b.as_slice().expect("contiguous")),
            ];
            for (p, g) in pairs {
                if self.m.len() <= k {
                    self.m.push(vec![T::zero(); p.len()]);
                    self.v.push(vec![T::zero(); p.len()]);
                }
                let (m, v) = (&mut self.m[k], &mut self.v[k]);
                for i in 0..p.len() {
                    m[i] = b1 * m[i] + (T::one() - b1) * g[i];
                    v[i] = b2 * v[i] + (T::one() - b2) * g[i] * g[i];
                    p[i] -= step * m[i] / (v[i].sqrt() + eps_hat);
                }
                k += 1;
            }
        }
    }
}

impl<T: Real> Default for Adam<T> {
    fn default() -> Self {
        Adam::new()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::Dense;

    struct One(Dense<f64>);
    impl Layers<f64> for One {
        fn layers(&self) -> Vec<(&'static str, &Dense<f64>)> {
            vec![("one", &self.0)]
        }
        fn layers_mut(&mut self) -> Vec<(&'static str, &mut Dense<f64>)> {
            vec![("one", &mut self.0)]
        }
    }

    #[test]
    fn first_step_moves_by_lr_against_gradient_sign() {
        let mut p = One(Dense::zeros(1, 2));
        let mut g = One(Dense::zeros(1, 2));
        g.0.w[[0, 0]] = 3.0;
        g.0.w[[0, 1]] = -0.5;
        let mut opt = Adam::new();
        opt.step(&mut p, &g, 0.01);
        assert!((p.0.w[[0, 0]] + 0.01).abs() < 1e-9);
        assert!((p.0.w[[0, 1]] - 0.01).abs() < 1e-9);
        assert_eq!(p.0.b[0], 0.0);
    }

    #[test]
    fn minimizes_a_quadratic() {
        let mut p = One(Dense::zeros(1, 1));
        let mut opt = Adam::new();
        for _ in 0..2000 {
            let mut g = One(Dense::zeros(1, 1));
            g.0.w[[0, 0]] = 2.0 * (p.0.w[[0, 0]] - 3.0);
            opt.step(&mut p, &g, 0.05);
        }
        assert!((p.0.w[[0, 0]] - 3.0).abs() < 1e-3);
    }
}
