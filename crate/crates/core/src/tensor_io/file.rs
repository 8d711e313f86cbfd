//! FMC1 tensor container.
//!
//! ```text
//! offset  size  field
//!      0     4  magic "FMC1"
//!      4     1  dtype (0 = float32, 1 = unsigned codes, 2 = signed-symmetric codes)
//!      5     1  bitwidth (32 for float32, 1..=16 for codes)
//!      6     2  reserved, zero
//!      8    16  n, c, h, w as u32 LE
//!     24     4  scale, f32 LE (1.0 for float32 payloads)
//!     28     4  zero_point, i32 LE (always 0)
//!     32     -  payload: one element per ceil(bitwidth / 8) bytes, LE
//! ```

use std::fs;
use std::path::Path;

use super::{Dims, QuantTensor, Tensor};
use crate::error::{Error, Result};
use crate::quant::{QuantParams, Signedness};

pub const MAGIC: &[u8; 4] = b"FMC1";
pub const HEADER_LEN: usize = 32;

const DTYPE_F32: u8 = 0;
const DTYPE_UNSIGNED: u8 = 1;
const DTYPE_SIGNED: u8 = 2;

/// Contents of an FMC1 file: either raw float32 values or integer codes.
#[derive(Debug, Clone, PartialEq)]
pub enum TensorFile {
    Real(Tensor<f32>),
    Codes(QuantTensor),
}

impl TensorFile {
    pub fn dims(&self) -> Dims {
        match self {
            TensorFile::Real(t) => t.dims(),
            TensorFile::Codes(q) => q.dims(),
        }
    }

    /// Real-valued view; integer codes are dequantized.
    pub fn to_real(&self) -> Tensor<f64> {
        match self {
            TensorFile::Real(t) => t.cast(),
            TensorFile::Codes(q) => crate::quant::dequantize(q),
        }
    }
}

impl From<Tensor<f32>> for TensorFile {
    fn from(t: Tensor<f32>) -> Self {
        TensorFile::Real(t)
    }
}

impl From<QuantTensor> for TensorFile {
    fn from(q: QuantTensor) -> Self {
        TensorFile::Codes(q)
    }
}

fn code_bytes(bitwidth: u8) -> usize {
    (bitwidth as usize).div_ceil(8)
}

pub fn encode_tensor(t: &TensorFile) -> Vec<u8> {
    let dims = t.dims();
    let (dtype, bitwidth, scale) = match t {
        TensorFile::Real(_) => (DTYPE_F32, 32u8, 1.0f32),
        TensorFile::Codes(q) => {
            let p = q.params();
            let dtype = match p.signedness() {
                Signedness::Unsigned => DTYPE_UNSIGNED,
                Signedness::SignedSymmetric => DTYPE_SIGNED,
            };
            (dtype, p.bitwidth(), p.scale())
        }
    };
    let width = code_bytes(bitwidth);
    let mut out = Vec::with_capacity(HEADER_LEN + dims.len() * width);
    out.extend_from_slice(MAGIC);
    out.push(dtype);
    out.push(bitwidth);
    out.extend_from_slice(&[0, 0]);
    for d in [dims.n, dims.c, dims.h, dims.w] {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    out.extend_from_slice(&scale.to_le_bytes());
    out.extend_from_slice(&0i32.to_le_bytes());
    match t {
        TensorFile::Real(t) => {
            for v in t.data() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        TensorFile::Codes(q) => {
            for &c in q.codes() {
                out.extend_from_slice(&c.to_le_bytes()[..width]);
            }
        }
    }
    out
}

fn u32_at(bytes: &[u8], offset: usize) -> u32 {
    u32::from_le_bytes(bytes[offset..offset + 4].try_into().unwrap())
}

pub fn decode_tensor(bytes: &[u8]) -> Result<TensorFile> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Truncated {
            expected: HEADER_LEN,
            actual: bytes.len(),
        });
    }
    if &bytes[0..4] != MAGIC {
        return Err(Error::format(
            0,
            format!("bad magic {:02x?}, expected \"FMC1\"", &bytes[0..4]),
        ));
    }
    let dtype = bytes[4];
    let bitwidth = bytes[5];
    if bytes[6] != 0 || bytes[7] != 0 {
        return Err(Error::format(6, "reserved bytes must be zero"));
    }
    let dims = Dims {
        n: u32_at(bytes, 8) as usize,
        c: u32_at(bytes, 12) as usize,
        h: u32_at(bytes, 16) as usize,
        w: u32_at(bytes, 20) as usize,
    };
    dims.validate()
        .map_err(|e| Error::format(8, e.to_string()))?;
    let scale = f32::from_le_bytes(bytes[24..28].try_into().unwrap());
    let zero_point = i32::from_le_bytes(bytes[28..32].try_into().unwrap());
    if zero_point != 0 {
        return Err(Error::Unsupported(format!(
            "zero_point {zero_point}; only 0 is supported"
        )));
    }

    let signedness = match dtype {
        DTYPE_F32 => {
            if bitwidth != 32 {
                return Err(Error::Unsupported(format!(
                    "float32 payload with bitwidth {bitwidth}"
                )));
            }
            if scale != 1.0 {
                return Err(Error::format(24, "float32 payload must carry scale 1.0"));
            }
            None
        }
        DTYPE_UNSIGNED => Some(Signedness::Unsigned),
        DTYPE_SIGNED => Some(Signedness::SignedSymmetric),
        other => return Err(Error::format(4, format!("unknown dtype {other}"))),
    };
    if signedness.is_some() && !(1..=16).contains(&bitwidth) {
        return Err(Error::Unsupported(format!(
            "code bitwidth {bitwidth} (1..=16 supported)"
        )));
    }

    let width = code_bytes(bitwidth);
    let expected = HEADER_LEN + dims.len() * width;
    if bytes.len() < expected {
        return Err(Error::Truncated {
            expected,
            actual: bytes.len(),
        });
    }
    if bytes.len() > expected {
        return Err(Error::format(expected, "trailing bytes after payload"));
    }
    let payload = &bytes[HEADER_LEN..];

    match signedness {
        None => {
            let data = payload
                .chunks_exact(4)
                .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
                .collect();
            Ok(TensorFile::Real(Tensor::new(dims, data)?))
        }
        Some(signedness) => {
            let params = QuantParams::new(bitwidth, signedness, scale)
                .map_err(|e| Error::format(24, e.to_string()))?;
            let codes: Vec<i32> = payload
                .chunks_exact(width)
                .map(|b| match (signedness, width) {
                    (Signedness::Unsigned, 1) => b[0] as i32,
                    (Signedness::Unsigned, _) => u16::from_le_bytes([b[0], b[1]]) as i32,
                    (Signedness::SignedSymmetric, 1) => b[0] as i8 as i32,
                    (Signedness::SignedSymmetric, _) => i16::from_le_bytes([b[0], b[1]]) as i32,
                })
                .collect();
            let (lo, hi) = params.code_range();
            if let Some(i) = codes.iter().position(|&c| c < lo || c > hi) {
                return Err(Error::format(
                    HEADER_LEN + i * width,
                    format!("code {} outside [{lo}, {hi}]", codes[i]),
                ));
            }
            Ok(TensorFile::Codes(QuantTensor::new(dims, codes, params)?))
        }
    }
}

pub fn read_tensor(path: impl AsRef<Path>) -> Result<TensorFile> {
    decode_tensor(&fs::read(path)?)
}

pub fn write_tensor(t: &TensorFile, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_tensor(t))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_zero_float_is_header_plus_four_bytes() {
        let t = Tensor::new(Dims::new(1, 1, 1, 1).unwrap(), vec![0.0f32]).unwrap();
        let bytes = encode_tensor(&t.into());
        assert_eq!(bytes.len(), 36);
        let expected_header: [u8; 32] = [
            b'F', b'M', b'C', b'1', 0, 32, 0, 0, //
            1, 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0, //
            0x00, 0x00, 0x80, 0x3f, 0, 0, 0, 0,
        ];
        assert_eq!(&bytes[..32], &expected_header);
        assert_eq!(&bytes[32..], &[0, 0, 0, 0]);
    }

    #[test]
    fn eight_bit_codes_are_one_byte_each() {
        let q = QuantParams::new(8, Signedness::Unsigned, 0.5).unwrap();
        let t = QuantTensor::new(Dims::new(1, 1, 1, 2).unwrap(), vec![0, 255], q).unwrap();
        let bytes = encode_tensor(&t.into());
        assert_eq!(&bytes[HEADER_LEN..], &[0x00, 0xFF]);
    }

    #[test]
    fn ten_bit_signed_codes_take_two_bytes() {
        let q = QuantParams::new(10, Signedness::SignedSymmetric, 0.25).unwrap();
        let t = QuantTensor::new(Dims::new(1, 1, 1, 3).unwrap(), vec![-511, 3, 511], q).unwrap();
        let file = TensorFile::from(t);
        let bytes = encode_tensor(&file);
        assert_eq!(&bytes[HEADER_LEN..], &[0x01, 0xFE, 0x03, 0x00, 0xFF, 0x01]);
        assert_eq!(decode_tensor(&bytes).unwrap(), file);
    }

    #[test]
    fn eight_float_elements_decode() {
        let vals: Vec<f32> = (0..8).map(|i| i as f32 * 0.5).collect();
        let t = Tensor::new(Dims::new(1, 8, 1, 1).unwrap(), vals.clone()).unwrap();
        let bytes = encode_tensor(&t.into());
        match decode_tensor(&bytes).unwrap() {
            TensorFile::Real(t) => assert_eq!(t.data(), &vals[..]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn error_paths() {
        let t = Tensor::new(Dims::new(1, 2, 1, 1).unwrap(), vec![1.0f32, 2.0]).unwrap();
        let good = encode_tensor(&t.into());

        let mut bad = good.clone();
        bad[..4].copy_from_slice(b"XXXX");
        assert!(matches!(
            decode_tensor(&bad),
            Err(Error::Format { offset: 0, .. })
        ));

        assert!(matches!(
            decode_tensor(&good[..good.len() - 1]),
            Err(Error::Truncated { .. })
        ));
        assert!(matches!(
            decode_tensor(&good[..10]),
            Err(Error::Truncated { .. })
        ));

        let mut bad = good.clone();
        bad[4] = 1;
        bad[5] = 17;
        assert!(matches!(decode_tensor(&bad), Err(Error::Unsupported(_))));

        let mut bad = good.clone();
        bad[6] = 1;
        assert!(matches!(
            decode_tensor(&bad),
            Err(Error::Format { offset: 6, .. })
        ));

        let mut bad = good;
        bad.push(0);
        assert!(matches!(decode_tensor(&bad), Err(Error::Format { .. })));
    }

    #[test]
    fn out_of_range_code_is_rejected() {
        let q = QuantParams::new(4, Signedness::Unsigned, 1.0).unwrap();
        let t = QuantTensor::new(Dims::new(1, 1, 1, 1).unwrap(), vec![15], q).unwrap();
        let mut bytes = encode_tensor(&t.into());
        bytes[HEADER_LEN] = 16;
        assert!(matches!(
            decode_tensor(&bytes),
            Err(Error::Format { offset: 32, .. })
        ));
    }

    #[test]
    fn unwritable_path_is_io_error() {
        let t = Tensor::new(Dims::new(1, 1, 1, 1).unwrap(), vec![0.0f32]).unwrap();
        let err = write_tensor(&t.into(), "/nonexistent-dir/x.fmc").unwrap_err();
        assert!(matches!(err, Error::Io(_)));
    }
}
