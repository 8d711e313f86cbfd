use crate::asp::{asp_apply, AspConfig};
use crate::container::{CompressedActivation, Method};
use crate::error::{Error, Result};
use crate::quant::{calibrate_scale, quantize, Signedness};
use crate::scalar::Scalar;
use crate::tensor_io::{QuantTensor, Tensor};
use crate::zvc::{zvc_decode, zvc_encode};

/// Plain low-bit quantization followed by ZVC; with `asp` set the input
/// is thresholded first and the container is tagged asp+zvc.
pub fn zvc_compress<T: Scalar>(
    x: &Tensor<T>,
    bits: u8,
    asp: Option<AspConfig>,
) -> Result<CompressedActivation> {
    let (method, x) = match asp {
        Some(cfg) => (Method::AspZvc, asp_apply(x, cfg)),
        None => (Method::Zvc, x.clone()),
    };
    let q = calibrate_scale(&x, bits, Signedness::Unsigned)?;
    let codes = quantize(&x, q)?;
    CompressedActivation::new(method, 0, 0, 0, q, x.dims(), zvc_encode(&codes)?)
}

/// ZVC over codes that are already quantized; lossless.
pub fn zvc_compress_codes(codes: &QuantTensor) -> Result<CompressedActivation> {
    CompressedActivation::new(
        Method::Zvc,
        0,
        0,
        0,
        codes.params(),
        codes.dims(),
        zvc_encode(codes)?,
    )
}

pub fn zvc_decompress(a: &CompressedActivation) -> Result<QuantTensor> {
    match a.method() {
        Method::Zvc | Method::AspZvc => zvc_decode(a.payload(), a.dims(), a.quant()),
        other => Err(Error::Usage(format!(
            "container holds {other}, not a zvc payload"
        ))),
    }
}
