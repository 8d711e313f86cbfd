//! Channel-dimension DCT with per-stage low-frequency masks.
//!
//! Every spatial position's channel vector is cut into patches of
//! `patch_len` channels (zero-padded at the end), each patch is transformed
//! with the 1-D DCT, coefficients at index `>= keep` are zeroed, and the
//! surviving coefficients are quantized signed-symmetric and ZVC coded.
//! Coefficients stay in `(n, c_padded, h, w)` layout: coefficient `i` of
//! channel group `g` sits at channel `g * patch_len + i`.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::asp::{asp_apply, AspConfig};
use crate::container::{CompressedActivation, Method};
use crate::dct::{DctMatrix, SUPPORTED_LENGTHS};
use crate::error::{Error, Result};
use crate::quant::{calibrate_slice, QuantParams, Signedness};
use crate::scalar::Scalar;
use crate::tensor_io::{Dims, Tensor};
use crate::zvc::{encode_codes, zvc_decode};

/// Per-stage count of low-frequency coefficients kept.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskSchedule {
    patch_len: usize,
    keep: Vec<usize>,
}

impl MaskSchedule {
    pub fn new(patch_len: usize, keep: Vec<usize>) -> Result<Self> {
        if !SUPPORTED_LENGTHS.contains(&patch_len) {
            return Err(Error::Config(format!(
                "mask length {patch_len} not in {SUPPORTED_LENGTHS:?}"
            )));
        }
        if keep.is_empty() {
            return Err(Error::Config("mask schedule has no stages".into()));
        }
        if let Some(k) = keep.iter().find(|&&k| k == 0 || k > patch_len) {
            return Err(Error::Config(format!(
                "keep count {k} outside 1..={patch_len}"
            )));
        }
        Ok(MaskSchedule { patch_len, keep })
    }

    /// `[4, 6, 4, 2, 1] / 8`
    pub fn m1() -> Self {
        MaskSchedule {
            patch_len: 8,
            keep: vec![4, 6, 4, 2, 1],
        }
    }

    /// `[2, 4, 3, 2, 1] / 8`
    pub fn m2() -> Self {
        MaskSchedule {
            patch_len: 8,
            keep: vec![2, 4, 3, 2, 1],
        }
    }

    /// Single-stage schedule.
    pub fn uniform(patch_len: usize, keep: usize) -> Result<Self> {
        MaskSchedule::new(patch_len, vec![keep])
    }

    pub fn patch_len(&self) -> usize {
        self.patch_len
    }

    pub fn keep(&self) -> &[usize] {
        &self.keep
    }

    /// Stages past the end of the schedule reuse its last entry.
    pub fn keep_for_stage(&self, stage: usize) -> usize {
        self.keep[stage.min(self.keep.len() - 1)]
    }
}

impl fmt::Display for MaskSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ks: Vec<String> = self.keep.iter().map(|k| k.to_string()).collect();
        write!(f, "{}/{}", ks.join(","), self.patch_len)
    }
}

impl FromStr for MaskSchedule {
    type Err = Error;

    /// `m1`, `m2`, or `k0,k1,.../n`. An entry may also be a bit-vector
    /// `b11000000` (one digit per coefficient) as long as it selects a
    /// contiguous low-frequency prefix.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s.to_ascii_lowercase().as_str() {
            "m1" => return Ok(MaskSchedule::m1()),
            "m2" => return Ok(MaskSchedule::m2()),
            _ => {}
        }
        let (list, len) = s
            .rsplit_once('/')
            .ok_or_else(|| Error::Config(format!("mask {s:?}: expected m1, m2 or k0,k1,.../n")))?;
        let patch_len: usize = len
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("mask {s:?}: bad length {len:?}")))?;
        let keep = list
            .split(',')
            .map(|entry| parse_keep_entry(entry.trim(), patch_len))
            .collect::<Result<Vec<_>>>()?;
        MaskSchedule::new(patch_len, keep)
    }
}

fn parse_keep_entry(entry: &str, patch_len: usize) -> Result<usize> {
    if let Some(bits) = entry.strip_prefix('b') {
        if bits.len() != patch_len || !bits.chars().all(|c| c == '0' || c == '1') {
            return Err(Error::Config(format!(
                "bit-vector mask {entry:?} must have {patch_len} binary digits"
            )));
        }
        let keep = bits.chars().take_while(|&c| c == '1').count();
        if bits[keep..].contains('1') {
            return Err(Error::Config(format!(
                "bit-vector mask {entry:?} is not a contiguous low-frequency prefix"
            )));
        }
        return Ok(keep);
    }
    entry
        .parse()
        .map_err(|_| Error::Config(format!("bad keep count {entry:?}")))
}

/// Channel-dimension DCT of every patch. Output dims are `(n, c_padded, h, w)`.
pub fn channel_transform<T: Scalar>(x: &Tensor<T>, dct: &DctMatrix<f64>) -> Result<Tensor<f64>> {
    let dims = x.dims();
    let len = dct.n();
    let groups = dims.c.div_ceil(len);
    let plane = dims.plane();
    let out_dims = Dims::new(dims.n, groups * len, dims.h, dims.w)?;
    let mut out = vec![0.0f64; out_dims.len()];
    let src = x.data();

    out.par_chunks_mut(len * plane)
        .enumerate()
        .for_each(|(ng, block)| {
            let (n, g) = (ng / groups, ng % groups);
            let mut patch = vec![0.0; len];
            let mut coeffs = vec![0.0; len];
            for pos in 0..plane {
                for (i, p) in patch.iter_mut().enumerate() {
                    let ch = g * len + i;
                    *p = if ch < dims.c {
                        src[(n * dims.c + ch) * plane + pos].to_f64_lossy()
                    } else {
                        0.0
                    };
                }
                dct.forward_1d_into(&patch, &mut coeffs);
                for (i, &c) in coeffs.iter().enumerate() {
                    block[i * plane + pos] = c;
                }
            }
        });
    Tensor::new(out_dims, out)
}

/// Zeroes coefficients `keep..patch_len` of every channel patch.
pub fn mask_coefficients(coeffs: &mut Tensor<f64>, patch_len: usize, keep: usize) {
    let dims = coeffs.dims();
    let plane = dims.plane();
    for (ch_block, chunk) in coeffs.data_mut().chunks_mut(plane).enumerate() {
        if (ch_block % dims.c) % patch_len >= keep {
            chunk.fill(0.0);
        }
    }
}

/// Quantizes (signed-symmetric, calibrated over the whole tensor) and
/// ZVC-codes a padded coefficient tensor.
pub fn encode_coefficients(
    coeffs: &Tensor<f64>,
    orig: Dims,
    stage: usize,
    patch_len: usize,
    keep: usize,
    bits: u8,
) -> Result<CompressedActivation> {
    let q = calibrate_slice(coeffs.data(), bits, Signedness::SignedSymmetric)?;
    let codes = quantize_par(coeffs.data(), q)?;
    let payload = encode_codes(&codes, q.bitwidth(), q.signedness())?;
    CompressedActivation::new(Method::DctCm, stage, patch_len, keep, q, orig, payload)
}

pub(crate) fn quantize_par(xs: &[f64], q: QuantParams) -> Result<Vec<i32>> {
    xs.par_iter().map(|&v| q.quantize_value(v)).collect()
}

pub fn dctcm_encode<T: Scalar>(
    x: &Tensor<T>,
    stage: usize,
    mask: &MaskSchedule,
    bits: u8,
    asp: Option<AspConfig>,
) -> Result<CompressedActivation> {
    let dct = DctMatrix::<f64>::new(mask.patch_len())?;
    let keep = mask.keep_for_stage(stage);
    let mut coeffs = match asp {
        Some(cfg) => channel_transform(&asp_apply(x, cfg), &dct)?,
        None => channel_transform(x, &dct)?,
    };
    mask_coefficients(&mut coeffs, mask.patch_len(), keep);
    encode_coefficients(&coeffs, x.dims(), stage, mask.patch_len(), keep, bits)
}

fn padded_dims(a: &CompressedActivation) -> Result<Dims> {
    let d = a.dims();
    Dims::new(d.n, d.c.next_multiple_of(a.patch_len()), d.h, d.w)
}

/// Dequantized frequency-domain coefficients, `(n, c_padded, h, w)`.
pub fn dctcm_decode_coefficients(a: &CompressedActivation) -> Result<Tensor<f64>> {
    if a.method() != Method::DctCm {
        return Err(Error::Usage(format!(
            "container holds {}, not dct-cm",
            a.method()
        )));
    }
    let dims = padded_dims(a)?;
    let codes = zvc_decode(a.payload(), dims, a.quant())?;
    let q = a.quant();
    Tensor::new(
        dims,
        codes
            .codes()
            .iter()
            .map(|&c| q.dequantize_value(c))
            .collect(),
    )
}

/// Explicit inverse-DCT decode; strips channel padding.
pub fn dctcm_decode<T: Scalar>(a: &CompressedActivation) -> Result<Tensor<T>> {
    let coeffs = dctcm_decode_coefficients(a)?;
    let dct = DctMatrix::<f64>::new(a.patch_len())?;
    let len = dct.n();
    let keep = a.keep();
    let orig = a.dims();
    let padded = coeffs.dims();
    let groups = padded.c / len;
    let plane = padded.plane();
    let src = coeffs.data();
    let mut out = vec![T::zero(); orig.len()];

    out.par_chunks_mut(orig.c * plane)
        .enumerate()
        .for_each(|(n, batch)| {
            let mut y = vec![0.0; len];
            let mut x = vec![0.0; len];
            for g in 0..groups {
                let base = (n * padded.c + g * len) * plane;
                for pos in 0..plane {
                    for (i, v) in y.iter_mut().enumerate() {
                        // masked coefficients are exact zeros and skipped
                        *v = if i < keep {
                            src[base + i * plane + pos]
                        } else {
                            0.0
                        };
                    }
                    dct.inverse_1d_into(&y, &mut x);
                    for (i, &v) in x.iter().enumerate() {
                        let ch = g * len + i;
                        if ch < orig.c {
                            batch[ch * plane + pos] = T::from_f64_lossy(v);
                        }
                    }
                }
            }
        });
    Tensor::new(orig, out)
}
