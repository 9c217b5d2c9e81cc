//! Feed-forward networks with hand-written backprop, generic over `f32`
//! (training and checkpoints) and `f64` (gradient checks).

mod adam;
mod checkpoint;
mod disc;
mod policy;

use std::fmt::Debug;
use std::ops::{AddAssign, MulAssign, SubAssign};

use ndarray::linalg::general_mat_mul;
use ndarray::{Array1, Array2, ArrayView2, Axis, LinalgScalar, ScalarOperand};
use num_traits::Float;
use rand::Rng;
use thiserror::Error;

pub use adam::Adam;
pub use checkpoint::{
    load_checkpoint, save_checkpoint, Checkpoint, CheckpointError, Manifest, CHECKPOINT_MAGIC, CHECKPOINT_VERSION,
};
pub use disc::{disc_input, DiscPass, Discriminator, DISC_EPS, DISC_INPUT_LEN};
pub use policy::{branch_slots, LossReport, PolicyArch, PolicyNet, PolicyPass, PpoTerms, BRANCH_RANGES};

/// Scalar type the networks run on.
pub trait Real:
    LinalgScalar + Float + ScalarOperand + AddAssign + SubAssign + MulAssign + Debug + Send + Sync + 'static
{
    fn of(v: f64) -> Self;
    fn as_f64(self) -> f64;
}

impl Real for f32 {
    fn of(v: f64) -> Self {
        v as f32
    }
    fn as_f64(self) -> f64 {
        self as f64
    }
}

impl Real for f64 {
    fn of(v: f64) -> Self {
        v
    }
    fn as_f64(self) -> f64 {
        self
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NeuralError {
    #[error("invalid architecture: {0}")]
    Arch(String),
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
}

/// Affine layer `y = x·W + b` with `W` stored fan_in × fan_out.
#[derive(Clone, Debug, PartialEq)]
pub struct Dense<T> {
    pub w: Array2<T>,
    pub b: Array1<T>,
}

impl<T: Real> Dense<T> {
    pub fn zeros(fan_in: usize, fan_out: usize) -> Self {
        Dense { w: Array2::zeros((fan_in, fan_out)), b: Array1::zeros(fan_out) }
    }

    /// Uniform in ±sqrt(6 / (fan_in + fan_out)), zero bias.
    pub fn glorot<R: Rng + ?Sized>(fan_in: usize, fan_out: usize, rng: &mut R) -> Self {
        let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
        let w = Array2::from_shape_simple_fn((fan_in, fan_out), || T::of(rng.gen_range(-limit..limit)));
        Dense { w, b: Array1::zeros(fan_out) }
    }

    pub fn fan_in(&self) -> usize {
        self.w.nrows()
    }

    pub fn fan_out(&self) -> usize {
        self.w.ncols()
    }

    pub fn forward(&self, x: &ArrayView2<T>) -> Array2<T> {
        let mut y = Array2::zeros((x.nrows(), self.fan_out()));
        y += &self.b;
        general_mat_mul(T::one(), x, &self.w, T::one(), &mut y);
        y
    }

    /// Accumulates parameter gradients for upstream `dy` into `grad`; returns dL/dx.
    pub fn backward(&self, x: &ArrayView2<T>, dy: &ArrayView2<T>, grad: &mut Dense<T>, need_dx: bool) -> Option<Array2<T>> {
        general_mat_mul(T::one(), &x.t(), dy, T::one(), &mut grad.w);
        grad.b += &dy.sum_axis(Axis(0));
        need_dx.then(|| dy.dot(&self.w.t()))
    }

    pub fn zeros_like(&self) -> Self {
        Dense::zeros(self.fan_in(), self.fan_out())
    }

    pub fn is_finite(&self) -> bool {
        self.w.iter().chain(self.b.iter()).all(|v| v.is_finite())
    }
}

/// A network as an ordered list of named layers; drives Adam and checkpoints.
pub trait Layers<T: Real> {
    fn layers(&self) -> Vec<(&'static str, &Dense<T>)>;
    fn layers_mut(&mut self) -> Vec<(&'static str, &mut Dense<T>)>;

    fn param_count(&self) -> usize {
        self.layers().iter().map(|(_, l)| l.w.len() + l.b.len()).sum()
    }

    /// Name of the first layer holding a NaN or infinity.
    fn first_non_finite(&self) -> Option<&'static str> {
        self.layers().into_iter().find(|(_, l)| !l.is_finite()).map(|(n, _)| n)
    }

    fn scale(&mut self, k: T) {
        for (_, l) in self.layers_mut() {
            l.w *= k;
            l.b *= k;
        }
    }
}

pub(crate) fn relu<T: Real>(z: &Array2<T>) -> Array2<T> {
    z.mapv(|v| if v > T::zero() { v } else { T::zero() })
}

/// dL/dz for a ReLU whose output gradient is `dh`.
pub(crate) fn relu_back<T: Real>(z: &Array2<T>, mut dh: Array2<T>) -> Array2<T> {
    ndarray::Zip::from(&mut dh).and(z).for_each(|g, &v| {
        if v <= T::zero() {
            *g = T::zero();
        }
    });
    dh
}
