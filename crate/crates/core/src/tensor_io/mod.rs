//! In-memory tensor model, the FMC1 container, and the synthetic
//! feature-map generator.
//!
//! Tensors are 4-D and row-major in `(n, c, h, w)` order. Real-valued
//! activations live in [`Tensor`]; integer codes produced by quantization
//! live in [`QuantTensor`], which always carries its [`QuantParams`].

mod file;
mod synth;

pub use file::{decode_tensor, encode_tensor, read_tensor, write_tensor, TensorFile, HEADER_LEN};
pub use synth::{generate_synthetic, Spectrum, SyntheticProfile};

use crate::error::{Error, Result};
use crate::quant::QuantParams;
use crate::scalar::Scalar;

/// Tensor extents in `(n, c, h, w)` order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Dims {
    pub n: usize,
    pub c: usize,
    pub h: usize,
    pub w: usize,
}

impl Dims {
    pub fn new(n: usize, c: usize, h: usize, w: usize) -> Result<Self> {
        let dims = Dims { n, c, h, w };
        dims.validate()?;
        Ok(dims)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.c == 0 || self.h == 0 || self.w == 0 {
            return Err(Error::Shape(format!("all dims must be >= 1, got {self}")));
        }
        if self
            .n
            .checked_mul(self.c)
            .and_then(|v| v.checked_mul(self.h))
            .and_then(|v| v.checked_mul(self.w))
            .is_none_or(|v| v > u32::MAX as usize)
        {
            return Err(Error::Shape(format!(
                "element count of {self} overflows u32"
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.n * self.c * self.h * self.w
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, n: usize, c: usize, h: usize, w: usize) -> usize {
        ((n * self.c + c) * self.h + h) * self.w + w
    }

    /// Spatial positions per channel plane.
    pub fn plane(&self) -> usize {
        self.h * self.w
    }
}

impl std::fmt::Display for Dims {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {}, {}, {})", self.n, self.c, self.h, self.w)
    }
}

/// Real-valued 4-D tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<T> {
    dims: Dims,
    data: Vec<T>,
}

impl<T: Scalar> Tensor<T> {
    pub fn new(dims: Dims, data: Vec<T>) -> Result<Self> {
        dims.validate()?;
        if data.len() != dims.len() {
            return Err(Error::Shape(format!(
                "{} elements supplied for dims {dims} ({} expected)",
                data.len(),
                dims.len()
            )));
        }
        Ok(Tensor { dims, data })
    }

    pub fn zeros(dims: Dims) -> Result<Self> {
        dims.validate()?;
        Ok(Tensor {
            dims,
            data: vec![T::zero(); dims.len()],
        })
    }

    pub fn from_fn(dims: Dims, mut f: impl FnMut(usize, usize, usize, usize) -> T) -> Result<Self> {
        dims.validate()?;
        let mut data = Vec::with_capacity(dims.len());
        for n in 0..dims.n {
            for c in 0..dims.c {
                for h in 0..dims.h {
                    for w in 0..dims.w {
                        data.push(f(n, c, h, w));
                    }
                }
            }
        }
        Ok(Tensor { dims, data })
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    pub fn get(&self, n: usize, c: usize, h: usize, w: usize) -> T {
        self.data[self.dims.index(n, c, h, w)]
    }

    pub fn count_zeros(&self) -> usize {
        self.data.iter().filter(|v| v.is_zero()).count()
    }

    pub fn zero_fraction(&self) -> f64 {
        self.count_zeros() as f64 / self.data.len() as f64
    }

    /// Element-wise conversion to another scalar type.
    pub fn cast<U: Scalar>(&self) -> Tensor<U> {
        Tensor {
            dims: self.dims,
            data: self
                .data
                .iter()
                .map(|v| U::from_f64_lossy(v.to_f64_lossy()))
                .collect(),
        }
    }
}

/// Integer codes plus the quantization parameters that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantTensor {
    dims: Dims,
    codes: Vec<i32>,
    params: QuantParams,
}

impl QuantTensor {
    /// Builds a code tensor, checking every code lies in the parameter range.
    pub fn new(dims: Dims, codes: Vec<i32>, params: QuantParams) -> Result<Self> {
        dims.validate()?;
        if codes.len() != dims.len() {
            return Err(Error::Shape(format!(
                "{} codes supplied for dims {dims} ({} expected)",
                codes.len(),
                dims.len()
            )));
        }
        let (lo, hi) = params.code_range();
        if let Some((i, &c)) = codes.iter().enumerate().find(|(_, &c)| c < lo || c > hi) {
            return Err(Error::Domain(format!(
                "code {c} at index {i} outside [{lo}, {hi}] for {params:?}"
            )));
        }
        Ok(QuantTensor {
            dims,
            codes,
            params,
        })
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn codes(&self) -> &[i32] {
        &self.codes
    }

    pub fn params(&self) -> QuantParams {
        self.params
    }

    pub fn count_zeros(&self) -> usize {
        self.codes.iter().filter(|&&c| c == 0).count()
    }
}
