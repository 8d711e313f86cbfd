//! Approximate sparsity preprocessing: magnitudes below a threshold become
//! zero, everything else passes through untouched.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor_io::Tensor;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AspConfig {
    threshold: f64,
}

impl AspConfig {
    /// `threshold` is in real (dequantized) activation units.
    pub fn new(threshold: f64) -> Result<Self> {
        if !(threshold.is_finite() && threshold >= 0.0) {
            return Err(Error::Config(format!(
                "ASP threshold must be finite and >= 0, got {threshold}"
            )));
        }
        Ok(AspConfig { threshold })
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    /// A value equal to the threshold survives, and so does NaN.
    #[inline]
    pub fn keeps<T: Scalar>(&self, v: T) -> bool {
        let a = v.to_f64_lossy().abs();
        a >= self.threshold || a.is_nan()
    }

    pub fn apply_in_place<T: Scalar>(&self, xs: &mut [T]) {
        for v in xs.iter_mut() {
            if !self.keeps(*v) {
                *v = T::zero();
            }
        }
    }
}

pub fn asp_apply<T: Scalar>(x: &Tensor<T>, cfg: AspConfig) -> Tensor<T> {
    let mut out = x.clone();
    cfg.apply_in_place(out.data_mut());
    out
}
