//! DCM1: self-describing wrapper around a ZVC payload.
//!
//! ```text
//! offset  size  field
//!      0     4  magic "DCM1"
//!      4     1  method (0 = zvc, 1 = dct-cm, 2 = dct-2d, 3 = asp+zvc)
//!      5     1  stage index
//!      6     1  patch_len (dct-cm: 4/8/16, dct-2d: 8, otherwise 0)
//!      7     1  keep (dct-cm: mask keep count, dct-2d: 8, otherwise 0)
//!      8     1  quant bitwidth
//!      9     1  quant signedness (0 = unsigned, 1 = signed-symmetric)
//!     10     4  quant scale, f32 LE
//!     14    16  original n, c, h, w as u32 LE
//!     30     -  ZVC stream
//! ```
//!
//! The payload element count is the padded count: dct-cm rounds `c` up to a
//! multiple of `patch_len`, dct-2d rounds `h` and `w` up to multiples of 8.

use std::fmt;
use std::str::FromStr;

use crate::dct::SUPPORTED_LENGTHS;
use crate::error::{Error, Result};
use crate::quant::{QuantParams, Signedness};
use crate::tensor_io::Dims;
use crate::zvc::ZvcStream;

pub const MAGIC: &[u8; 4] = b"DCM1";
pub const HEADER_LEN: usize = 30;
/// Spatial patch edge used by the 2-D pipeline.
pub const SPATIAL_PATCH: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Zvc,
    DctCm,
    Dct2d,
    AspZvc,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Zvc, Method::DctCm, Method::Dct2d, Method::AspZvc];

    pub fn to_byte(self) -> u8 {
        match self {
            Method::Zvc => 0,
            Method::DctCm => 1,
            Method::Dct2d => 2,
            Method::AspZvc => 3,
        }
    }

    pub fn from_byte(b: u8) -> Option<Self> {
        Method::ALL.into_iter().find(|m| m.to_byte() == b)
    }

    pub fn name(self) -> &'static str {
        match self {
            Method::Zvc => "zvc",
            Method::DctCm => "dct-cm",
            Method::Dct2d => "dct-2d",
            Method::AspZvc => "asp",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| {
                let valid: Vec<_> = Method::ALL.iter().map(|m| m.name()).collect();
                Error::Usage(format!(
                    "unknown method {s:?}; valid methods: {}",
                    valid.join(", ")
                ))
            })
    }
}

/// Number of coded elements the payload must hold for `dims` under `method`.
pub fn payload_count(method: Method, dims: Dims, patch_len: usize) -> usize {
    match method {
        Method::Zvc | Method::AspZvc => dims.len(),
        Method::DctCm => dims.n * dims.c.next_multiple_of(patch_len) * dims.h * dims.w,
        Method::Dct2d => {
            dims.n
                * dims.c
                * dims.h.next_multiple_of(SPATIAL_PATCH)
                * dims.w.next_multiple_of(SPATIAL_PATCH)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompressedActivation {
    method: Method,
    stage: u8,
    patch_len: u8,
    keep: u8,
    quant: QuantParams,
    dims: Dims,
    payload: ZvcStream,
}

impl CompressedActivation {
    pub fn new(
        method: Method,
        stage: usize,
        patch_len: usize,
        keep: usize,
        quant: QuantParams,
        dims: Dims,
        payload: ZvcStream,
    ) -> Result<Self> {
        let stage =
            u8::try_from(stage).map_err(|_| Error::Config(format!("stage {stage} exceeds 255")))?;
        let a = CompressedActivation {
            method,
            stage,
            patch_len: patch_len as u8,
            keep: keep as u8,
            quant,
            dims,
            payload,
        };
        check_fields(method, patch_len, keep).map_err(|r| Error::Config(r.to_string()))?;
        a.check_payload().map_err(|(_, r)| Error::Config(r))?;
        Ok(a)
    }

    /// Same container tagged with a different stage index.
    pub fn with_stage(mut self, stage: usize) -> Result<Self> {
        self.stage =
            u8::try_from(stage).map_err(|_| Error::Config(format!("stage {stage} exceeds 255")))?;
        Ok(self)
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn stage(&self) -> usize {
        self.stage as usize
    }

    pub fn patch_len(&self) -> usize {
        self.patch_len as usize
    }

    pub fn keep(&self) -> usize {
        self.keep as usize
    }

    pub fn quant(&self) -> QuantParams {
        self.quant
    }

    /// Original (unpadded) tensor dims.
    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn payload(&self) -> &ZvcStream {
        &self.payload
    }

    /// Container length in bytes, header included.
    pub fn len(&self) -> usize {
        HEADER_LEN + self.payload.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&[self.method.to_byte(), self.stage, self.patch_len, self.keep]);
        out.push(self.quant.bitwidth());
        out.push(self.quant.signedness().to_byte());
        out.extend_from_slice(&self.quant.scale().to_le_bytes());
        for d in [self.dims.n, self.dims.c, self.dims.h, self.dims.w] {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        out.extend_from_slice(self.payload.as_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_LEN {
            return Err(Error::Truncated {
                expected: HEADER_LEN,
                actual: bytes.len(),
            });
        }
        if &bytes[0..4] != MAGIC {
            return Err(Error::format(
                0,
                format!("bad magic {:02x?}, expected \"DCM1\"", &bytes[0..4]),
            ));
        }
        let method = Method::from_byte(bytes[4])
            .ok_or_else(|| Error::format(4, format!("unknown method {}", bytes[4])))?;
        let (stage, patch_len, keep) = (bytes[5], bytes[6], bytes[7]);
        check_fields(method, patch_len as usize, keep as usize).map_err(|r| Error::format(6, r))?;
        let signedness = Signedness::from_byte(bytes[9])
            .ok_or_else(|| Error::format(9, format!("unknown signedness {}", bytes[9])))?;
        let scale = f32::from_le_bytes(bytes[10..14].try_into().unwrap());
        let quant = QuantParams::new(bytes[8], signedness, scale)
            .map_err(|e| Error::format(8, e.to_string()))?;
        let dim = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap()) as usize;
        let dims = Dims {
            n: dim(14),
            c: dim(18),
            h: dim(22),
            w: dim(26),
        };
        dims.validate()
            .map_err(|e| Error::format(14, e.to_string()))?;
        let payload = ZvcStream::from_bytes(bytes[HEADER_LEN..].to_vec()).map_err(|e| match e {
            Error::Format { offset, reason } => Error::Format {
                offset: offset + HEADER_LEN,
                reason: format!("payload: {reason}"),
            },
            other => other,
        })?;
        let a = CompressedActivation {
            method,
            stage,
            patch_len,
            keep,
            quant,
            dims,
            payload,
        };
        a.check_payload()
            .map_err(|(off, r)| Error::format(off, r))?;
        Ok(a)
    }

    fn check_payload(&self) -> std::result::Result<(), (usize, String)> {
        let p = &self.payload;
        if p.bitwidth() != self.quant.bitwidth() {
            return Err((
                HEADER_LEN + 4,
                format!(
                    "payload bitwidth {} != header bitwidth {}",
                    p.bitwidth(),
                    self.quant.bitwidth()
                ),
            ));
        }
        if p.is_signed() != (self.quant.signedness() == Signedness::SignedSymmetric) {
            return Err((
                HEADER_LEN + 5,
                "payload signedness disagrees with header".into(),
            ));
        }
        let expected = payload_count(self.method, self.dims, self.patch_len as usize);
        if p.count() != expected {
            return Err((
                HEADER_LEN + 6,
                format!(
                    "payload count {} but dims {} need {expected}",
                    p.count(),
                    self.dims
                ),
            ));
        }
        Ok(())
    }
}

fn check_fields(
    method: Method,
    patch_len: usize,
    keep: usize,
) -> std::result::Result<(), &'static str> {
    match method {
        Method::Zvc | Method::AspZvc if patch_len != 0 || keep != 0 => {
            Err("zvc methods carry patch_len = keep = 0")
        }
        Method::DctCm if !SUPPORTED_LENGTHS.contains(&patch_len) => {
            Err("dct-cm patch_len must be 4, 8 or 16")
        }
        Method::DctCm if keep == 0 || keep > patch_len => {
            Err("dct-cm keep must be in 1..=patch_len")
        }
        Method::Dct2d if patch_len != SPATIAL_PATCH || keep != SPATIAL_PATCH => {
            Err("dct-2d carries patch_len = keep = 8")
        }
        _ => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zvc::encode_codes;

    fn sample() -> CompressedActivation {
        let q = QuantParams::new(8, Signedness::Unsigned, 0.5).unwrap();
        let payload = encode_codes(&[0, 5, 0, 0, 7, 0, 0, 3], 8, Signedness::Unsigned).unwrap();
        CompressedActivation::new(
            Method::Zvc,
            2,
            0,
            0,
            q,
            Dims::new(1, 8, 1, 1).unwrap(),
            payload,
        )
        .unwrap()
    }

    #[test]
    fn header_layout() {
        let bytes = sample().to_bytes();
        assert_eq!(bytes.len(), 30 + 14);
        assert_eq!(&bytes[..4], b"DCM1");
        assert_eq!(&bytes[4..10], &[0, 2, 0, 0, 8, 0]);
        assert_eq!(&bytes[10..14], &0.5f32.to_le_bytes());
        assert_eq!(
            &bytes[14..30],
            &[1, 0, 0, 0, 8, 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0]
        );
        assert_eq!(&bytes[30..34], b"ZVC1");
        assert_eq!(CompressedActivation::from_bytes(&bytes).unwrap(), sample());
    }

    #[test]
    fn corrupt_headers_report_offsets() {
        let good = sample().to_bytes();

        let mut bad = good.clone();
        bad[4] = 9;
        assert!(matches!(
            CompressedActivation::from_bytes(&bad),
            Err(Error::Format { offset: 4, .. })
        ));

        let mut bad = good.clone();
        bad[18] = 9; // c = 9 no longer matches the 8-element payload
        assert!(matches!(
            CompressedActivation::from_bytes(&bad),
            Err(Error::Format { offset: 36, .. })
        ));

        let bad = &good[..good.len() - 2];
        assert!(matches!(
            CompressedActivation::from_bytes(bad),
            Err(Error::Format { .. })
        ));

        assert!(matches!(
            CompressedActivation::from_bytes(&good[..12]),
            Err(Error::Truncated { .. })
        ));
    }

    #[test]
    fn method_names_parse() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        let err = "huffman".parse::<Method>().unwrap_err().to_string();
        assert!(err.contains("dct-cm") && err.contains("zvc"));
    }

    #[test]
    fn padded_counts() {
        let d = Dims::new(1, 10, 9, 5).unwrap();
        assert_eq!(payload_count(Method::Zvc, d, 0), 450);
        assert_eq!(payload_count(Method::DctCm, d, 8), 16 * 45);
        assert_eq!(payload_count(Method::Dct2d, d, 8), 10 * 16 * 8);
    }
}
