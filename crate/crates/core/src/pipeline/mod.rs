//! Compression pipelines built from the transforms, quantizer and ZVC coder.

mod baseline;
mod dct2d;
mod dctcm;
mod fusion;
mod macs;
mod strategy;

pub use baseline::{zvc_compress, zvc_compress_codes, zvc_decompress};
pub use dct2d::{dct2d_decode, dct2d_encode, pad_spatial, QMatrix};
pub use dctcm::{
    channel_transform, dctcm_decode, dctcm_decode_coefficients, dctcm_encode, encode_coefficients,
    mask_coefficients, MaskSchedule,
};
pub use fusion::{apply_fused, conv1x1, fuse_weights, fused_conv1x1, unfuse_weights, WeightBlock};
pub use macs::{count_transform_macs, ConvLayer};
pub use strategy::{strategy_compress, StageMethod, StageStrategy};

use crate::container::{CompressedActivation, Method};
use crate::error::Result;
use crate::quant::dequantize;
use crate::scalar::Scalar;
use crate::tensor_io::Tensor;

/// Decodes any container to real values using the method in its header.
/// `qmatrix` only matters for dct-2d payloads.
pub fn decode_real<T: Scalar>(
    a: &CompressedActivation,
    qmatrix: Option<&QMatrix>,
) -> Result<Tensor<T>> {
    match a.method() {
        Method::Zvc | Method::AspZvc => Ok(dequantize(&zvc_decompress(a)?)),
        Method::DctCm => dctcm_decode(a),
        Method::Dct2d => dct2d_decode(a, qmatrix),
    }
}
