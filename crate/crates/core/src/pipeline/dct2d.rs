//! 8x8 spatial DCT coding for early-stage activations.
//!
//! Each channel plane is zero-padded to multiples of 8, diced into 8x8
//! patches, transformed, divided by an optional quantization matrix, then
//! quantized signed-symmetric and ZVC coded. The payload is patch-major:
//! for every `(n, c)` plane, patches in row order, 64 coefficients each.

use std::str::FromStr;

use rayon::prelude::*;

use crate::container::{CompressedActivation, Method, SPATIAL_PATCH};
use crate::dct::DctMatrix;
use crate::error::{Error, Result};
use crate::quant::{calibrate_slice, Signedness};
use crate::scalar::Scalar;
use crate::tensor_io::{Dims, Tensor};
use crate::zvc::{encode_codes, zvc_decode};

use super::dctcm::quantize_par;

const P: usize = SPATIAL_PATCH;
const PATCH_AREA: usize = P * P;

/// Elementwise divisor applied to 8x8 coefficient patches.
#[derive(Debug, Clone, PartialEq)]
pub struct QMatrix([f64; PATCH_AREA]);

impl QMatrix {
    pub fn ones() -> Self {
        QMatrix([1.0; PATCH_AREA])
    }

    pub fn new(values: [f64; PATCH_AREA]) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::Config(format!(
                "quantization matrix entry {v} is not positive"
            )));
        }
        Ok(QMatrix(values))
    }

    pub fn values(&self) -> &[f64; PATCH_AREA] {
        &self.0
    }
}

impl Default for QMatrix {
    fn default() -> Self {
        QMatrix::ones()
    }
}

impl FromStr for QMatrix {
    type Err = Error;

    /// 64 whitespace- or comma-separated positive reals, row-major.
    /// Lines starting with `#` are ignored.
    fn from_str(s: &str) -> Result<Self> {
        let vals = s
            .lines()
            .filter(|l| !l.trim_start().starts_with('#'))
            .flat_map(|l| l.split(|c: char| c.is_whitespace() || c == ','))
            .filter(|t| !t.is_empty())
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|_| Error::Config(format!("bad qmatrix entry {t:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let arr: [f64; PATCH_AREA] = vals.try_into().map_err(|v: Vec<f64>| {
            Error::Config(format!("qmatrix needs 64 entries, found {}", v.len()))
        })?;
        QMatrix::new(arr)
    }
}

/// Zero-pads `h` and `w` up to multiples of 8. Returns the input unchanged
/// when it is already aligned.
pub fn pad_spatial<T: Scalar>(x: &Tensor<T>) -> Result<Tensor<T>> {
    let d = x.dims();
    let (hp, wp) = (d.h.next_multiple_of(P), d.w.next_multiple_of(P));
    if (hp, wp) == (d.h, d.w) {
        return Ok(x.clone());
    }
    let out = Dims::new(d.n, d.c, hp, wp)?;
    Tensor::from_fn(out, |n, c, h, w| {
        if h < d.h && w < d.w {
            x.get(n, c, h, w)
        } else {
            T::zero()
        }
    })
}

pub fn dct2d_encode<T: Scalar>(
    x: &Tensor<T>,
    bits: u8,
    qmatrix: Option<&QMatrix>,
) -> Result<CompressedActivation> {
    let orig = x.dims();
    let padded = pad_spatial(x)?;
    let pd = padded.dims();
    let plane = pd.plane();
    let (rows, cols) = (pd.h / P, pd.w / P);
    let q = qmatrix.cloned().unwrap_or_default();
    let dct = DctMatrix::<f64>::new(P)?;
    let src = padded.data();
    let mut coeffs = vec![0.0f64; pd.len()];

    coeffs
        .par_chunks_mut(plane)
        .enumerate()
        .for_each(|(pi, out)| {
            let base = &src[pi * plane..(pi + 1) * plane];
            let mut patch = [0.0f64; PATCH_AREA];
            for r in 0..rows {
                for c in 0..cols {
                    for i in 0..P {
                        for j in 0..P {
                            patch[i * P + j] = base[(r * P + i) * pd.w + c * P + j].to_f64_lossy();
                        }
                    }
                    let dst = &mut out[(r * cols + c) * PATCH_AREA..][..PATCH_AREA];
                    dct.forward_2d_into(&patch, dst);
                    for (v, d) in dst.iter_mut().zip(q.values()) {
                        *v /= d;
                    }
                }
            }
        });

    let params = calibrate_slice(&coeffs, bits, Signedness::SignedSymmetric)?;
    let codes = quantize_par(&coeffs, params)?;
    let payload = encode_codes(&codes, params.bitwidth(), params.signedness())?;
    CompressedActivation::new(Method::Dct2d, 0, P, P, params, orig, payload)
}

pub fn dct2d_decode<T: Scalar>(
    a: &CompressedActivation,
    qmatrix: Option<&QMatrix>,
) -> Result<Tensor<T>> {
    if a.method() != Method::Dct2d {
        return Err(Error::Usage(format!(
            "container holds {}, not dct-2d",
            a.method()
        )));
    }
    let orig = a.dims();
    let pd = Dims::new(
        orig.n,
        orig.c,
        orig.h.next_multiple_of(P),
        orig.w.next_multiple_of(P),
    )?;
    let codes = zvc_decode(a.payload(), pd, a.quant())?;
    let params = a.quant();
    let q = qmatrix.cloned().unwrap_or_default();
    let dct = DctMatrix::<f64>::new(P)?;
    let plane = pd.plane();
    let (rows, cols) = (pd.h / P, pd.w / P);
    let mut out = vec![T::zero(); orig.len()];
    let oplane = orig.plane();

    out.par_chunks_mut(oplane)
        .enumerate()
        .for_each(|(pi, dst)| {
            let plane_codes = &codes.codes()[pi * plane..(pi + 1) * plane];
            let mut y = [0.0f64; PATCH_AREA];
            let mut x = [0.0f64; PATCH_AREA];
            for r in 0..rows {
                for c in 0..cols {
                    let patch = &plane_codes[(r * cols + c) * PATCH_AREA..][..PATCH_AREA];
                    for ((v, &k), d) in y.iter_mut().zip(patch).zip(q.values()) {
                        *v = params.dequantize_value(k) * d;
                    }
                    dct.inverse_2d_into(&y, &mut x);
                    for i in 0..P {
                        let h = r * P + i;
                        if h >= orig.h {
                            break;
                        }
                        for j in 0..P {
                            let w = c * P + j;
                            if w < orig.w {
                                dst[h * orig.w + w] = T::from_f64_lossy(x[i * P + j]);
                            }
                        }
                    }
                }
            }
        });
    Tensor::new(orig, out)
}
