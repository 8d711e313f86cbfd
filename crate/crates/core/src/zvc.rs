//! Zero-value compression: a one-bit-per-element nonzero bitmap followed by
//! the nonzero codes packed at a fixed width.
//!
//! ```text
//! offset  size                 field
//!      0  4                    magic "ZVC1"
//!      4  1                    value bitwidth b (1..=16 codes, 32 = raw f32 bits)
//!      5  1                    flags, bit 0 = signed codes
//!      6  4                    element count, u32 LE
//!     10  ceil(count / 8)      bitmap, element i at byte i / 8 bit i % 8, 1 = nonzero
//!      -  ceil(nnz * b / 8)    nonzero values, LSB-first, zero padded
//! ```
//!
//! Signed codes are stored as their low `b` bits in two's complement.

use crate::error::{Error, Result};
use crate::quant::{QuantParams, Signedness};
use crate::tensor_io::{Dims, QuantTensor};

pub const MAGIC: &[u8; 4] = b"ZVC1";
pub const HEADER_LEN: usize = 10;
/// Value width used for raw IEEE-754 float32 payloads.
pub const F32_BITWIDTH: u8 = 32;

const FLAG_SIGNED: u8 = 0x01;

/// `10 + ceil(count / 8) + ceil(nnz * b / 8)`.
pub fn expected_stream_len(count: usize, nnz: usize, bitwidth: u8) -> usize {
    HEADER_LEN + count.div_ceil(8) + (nnz * bitwidth as usize).div_ceil(8)
}

struct BitWriter {
    out: Vec<u8>,
    acc: u64,
    bits: u32,
}

impl BitWriter {
    fn new(capacity: usize) -> Self {
        BitWriter {
            out: Vec::with_capacity(capacity),
            acc: 0,
            bits: 0,
        }
    }

    #[inline]
    fn put(&mut self, value: u32, width: u32) {
        self.acc |= (value as u64) << self.bits;
        self.bits += width;
        while self.bits >= 8 {
            self.out.push(self.acc as u8);
            self.acc >>= 8;
            self.bits -= 8;
        }
    }

    fn finish(mut self) -> Vec<u8> {
        if self.bits > 0 {
            self.out.push(self.acc as u8);
        }
        self.out
    }
}

struct BitReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> BitReader<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        BitReader { bytes, pos: 0 }
    }

    /// Caller guarantees `pos + width` bits are available.
    #[inline]
    fn get(&mut self, width: u32) -> u32 {
        let mut value = 0u64;
        let mut got = 0u32;
        while got < width {
            let byte = self.bytes[self.pos / 8] as u64;
            let shift = (self.pos % 8) as u32;
            let take = (8 - shift).min(width - got);
            value |= ((byte >> shift) & ((1 << take) - 1)) << got;
            got += take;
            self.pos += take as usize;
        }
        value as u32
    }
}

/// An encoded, validated ZVC byte stream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ZvcStream {
    bytes: Vec<u8>,
    nnz: usize,
}

impl ZvcStream {
    /// Wraps and validates a complete stream.
    pub fn from_bytes(bytes: Vec<u8>) -> Result<Self> {
        let nnz = validate(&bytes)?;
        Ok(ZvcStream { bytes, nnz })
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.bytes
    }

    /// Total stream length in bytes, header included.
    pub fn len(&self) -> usize {
        self.bytes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bytes.is_empty()
    }

    pub fn bitwidth(&self) -> u8 {
        self.bytes[4]
    }

    pub fn is_signed(&self) -> bool {
        self.bytes[5] & FLAG_SIGNED != 0
    }

    pub fn count(&self) -> usize {
        u32::from_le_bytes(self.bytes[6..10].try_into().unwrap()) as usize
    }

    pub fn nnz(&self) -> usize {
        self.nnz
    }

    pub fn bitmap(&self) -> &[u8] {
        &self.bytes[HEADER_LEN..HEADER_LEN + self.count().div_ceil(8)]
    }

    pub fn values(&self) -> &[u8] {
        &self.bytes[HEADER_LEN + self.count().div_ceil(8)..]
    }

    /// Raw `b`-bit fields of every element, zeros included.
    fn unpack_fields(&self) -> Vec<u32> {
        unpack(self.bitmap(), self.values(), self.count(), self.bitwidth())
    }

    /// Integer codes in element order. Meaningless for 32-bit float streams.
    pub fn decode_codes(&self) -> Vec<i32> {
        let b = self.bitwidth() as u32;
        let signed = self.is_signed();
        self.unpack_fields()
            .into_iter()
            .map(|f| if signed { sign_extend(f, b) } else { f as i32 })
            .collect()
    }

    pub fn decode_f32(&self) -> Result<Vec<f32>> {
        if self.bitwidth() != F32_BITWIDTH {
            return Err(Error::Usage(format!(
                "stream holds {}-bit codes, not float32 values",
                self.bitwidth()
            )));
        }
        Ok(self
            .unpack_fields()
            .into_iter()
            .map(f32::from_bits)
            .collect())
    }
}

#[inline]
fn sign_extend(field: u32, width: u32) -> i32 {
    let shift = 32 - width;
    ((field << shift) as i32) >> shift
}

fn unpack(bitmap: &[u8], values: &[u8], count: usize, bitwidth: u8) -> Vec<u32> {
    let mut reader = BitReader::new(values);
    (0..count)
        .map(|i| {
            if bitmap[i / 8] >> (i % 8) & 1 == 1 {
                reader.get(bitwidth as u32)
            } else {
                0
            }
        })
        .collect()
}

fn validate(bytes: &[u8]) -> Result<usize> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::format(
            bytes.len(),
            "stream shorter than its 10-byte header",
        ));
    }
    if &bytes[0..4] != MAGIC {
        return Err(Error::format(
            0,
            format!("bad magic {:02x?}, expected \"ZVC1\"", &bytes[0..4]),
        ));
    }
    let bitwidth = bytes[4];
    if !(1..=16).contains(&bitwidth) && bitwidth != F32_BITWIDTH {
        return Err(Error::format(
            4,
            format!("value bitwidth {bitwidth} unsupported"),
        ));
    }
    let flags = bytes[5];
    if flags & !FLAG_SIGNED != 0 || (flags & FLAG_SIGNED != 0 && bitwidth == F32_BITWIDTH) {
        return Err(Error::format(5, format!("invalid flags {flags:#04x}")));
    }
    let signed = flags & FLAG_SIGNED != 0;
    let count = u32::from_le_bytes(bytes[6..10].try_into().unwrap()) as usize;
    let bitmap_len = count.div_ceil(8);
    if bytes.len() < HEADER_LEN + bitmap_len {
        return Err(Error::format(
            bytes.len(),
            format!("bitmap truncated, need {bitmap_len} bytes"),
        ));
    }
    let bitmap = &bytes[HEADER_LEN..HEADER_LEN + bitmap_len];
    if !count.is_multiple_of(8) && bitmap[bitmap_len - 1] >> (count % 8) != 0 {
        return Err(Error::format(
            HEADER_LEN + bitmap_len - 1,
            "bitmap padding bits set",
        ));
    }
    let nnz: usize = bitmap.iter().map(|b| b.count_ones() as usize).sum();
    let expected = expected_stream_len(count, nnz, bitwidth);
    if bytes.len() < expected {
        return Err(Error::format(
            bytes.len(),
            format!("values section truncated: popcount {nnz} needs {expected} bytes in total"),
        ));
    }
    if bytes.len() > expected {
        return Err(Error::format(
            expected,
            "trailing bytes after values section",
        ));
    }

    let values_at = HEADER_LEN + bitmap_len;
    let values = &bytes[values_at..];
    let mut reader = BitReader::new(values);
    let width = bitwidth as u32;
    let max_signed = if signed { (1i32 << (width - 1)) - 1 } else { 0 };
    for k in 0..nnz {
        let field = reader.get(width);
        let at = values_at + k * bitwidth as usize / 8;
        if field == 0 {
            return Err(Error::format(
                at,
                format!("packed value {k} is the zero code"),
            ));
        }
        if signed && sign_extend(field, width).abs() > max_signed {
            return Err(Error::format(
                at,
                format!("packed value {k} outside signed-symmetric range"),
            ));
        }
    }
    let used_bits = nnz * bitwidth as usize;
    if !used_bits.is_multiple_of(8) && values[values.len() - 1] >> (used_bits % 8) != 0 {
        return Err(Error::format(bytes.len() - 1, "value padding bits set"));
    }
    Ok(nnz)
}

fn encode_fields(
    fields: impl Iterator<Item = u32> + Clone,
    count: usize,
    bitwidth: u8,
    signed: bool,
) -> Result<ZvcStream> {
    if count > u32::MAX as usize {
        return Err(Error::Unsupported(format!(
            "{count} elements exceed the u32 count field"
        )));
    }
    let bitmap_len = count.div_ceil(8);
    let mut bytes = Vec::with_capacity(HEADER_LEN + bitmap_len);
    bytes.extend_from_slice(MAGIC);
    bytes.push(bitwidth);
    bytes.push(if signed { FLAG_SIGNED } else { 0 });
    bytes.extend_from_slice(&(count as u32).to_le_bytes());

    let mut bitmap = vec![0u8; bitmap_len];
    let mut values = BitWriter::new(count * bitwidth as usize / 8);
    let mut nnz = 0;
    for (i, f) in fields.enumerate() {
        if f != 0 {
            bitmap[i / 8] |= 1 << (i % 8);
            values.put(f, bitwidth as u32);
            nnz += 1;
        }
    }
    bytes.extend_from_slice(&bitmap);
    bytes.extend_from_slice(&values.finish());
    debug_assert_eq!(bytes.len(), expected_stream_len(count, nnz, bitwidth));
    Ok(ZvcStream { bytes, nnz })
}

/// Encodes integer codes at `bitwidth` bits (1..=16).
pub fn encode_codes(codes: &[i32], bitwidth: u8, signedness: Signedness) -> Result<ZvcStream> {
    if !(1..=16).contains(&bitwidth) {
        return Err(Error::Unsupported(format!(
            "code bitwidth {bitwidth} (1..=16 supported)"
        )));
    }
    let signed = signedness == Signedness::SignedSymmetric;
    let (lo, hi) = if signed {
        let m = (1i32 << (bitwidth - 1)) - 1;
        (-m, m)
    } else {
        (0, (1i32 << bitwidth) - 1)
    };
    if let Some(c) = codes.iter().find(|&&c| c < lo || c > hi) {
        return Err(Error::Domain(format!(
            "code {c} does not fit {bitwidth} bits"
        )));
    }
    let mask = if bitwidth == 32 {
        u32::MAX
    } else {
        (1u32 << bitwidth) - 1
    };
    encode_fields(
        codes.iter().map(move |&c| c as u32 & mask),
        codes.len(),
        bitwidth,
        signed,
    )
}

pub fn zvc_encode(codes: &QuantTensor) -> Result<ZvcStream> {
    let q = codes.params();
    if q.zero_point() != 0 {
        return Err(Error::Unsupported("nonzero zero_point".into()));
    }
    encode_codes(codes.codes(), q.bitwidth(), q.signedness())
}

/// Encodes raw float32 values by bit pattern; only `+0.0` counts as zero.
pub fn zvc_encode_f32(values: &[f32]) -> Result<ZvcStream> {
    encode_fields(
        values.iter().map(|v| v.to_bits()),
        values.len(),
        F32_BITWIDTH,
        false,
    )
}

pub fn zvc_decode(s: &ZvcStream, dims: Dims, quant: QuantParams) -> Result<QuantTensor> {
    if s.count() != dims.len() {
        return Err(Error::format(
            6,
            format!("stream count {} does not match dims {dims}", s.count()),
        ));
    }
    if s.bitwidth() != quant.bitwidth() {
        return Err(Error::format(
            4,
            format!(
                "stream bitwidth {} but quantization bitwidth {}",
                s.bitwidth(),
                quant.bitwidth()
            ),
        ));
    }
    if s.is_signed() != (quant.signedness() == Signedness::SignedSymmetric) {
        return Err(Error::format(
            5,
            "signedness flag disagrees with quantization parameters",
        ));
    }
    QuantTensor::new(dims, s.decode_codes(), quant)
}

/// `raw_elems * raw_bitwidth / (8 * stream bytes)`, header included.
pub fn compression_ratio(raw_elems: usize, raw_bitwidth: u32, s: &ZvcStream) -> f64 {
    (raw_elems as f64 * raw_bitwidth as f64) / (8.0 * s.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Naive reference packer: one bit at a time into a bool vector.
    fn naive_pack(codes: &[i32], bitwidth: u8) -> Vec<u8> {
        let mut bits = Vec::new();
        for &c in codes {
            bits.push(c != 0);
        }
        while bits.len() % 8 != 0 {
            bits.push(false);
        }
        for &c in codes.iter().filter(|&&c| c != 0) {
            let field = c as u32;
            for k in 0..bitwidth {
                bits.push(field >> k & 1 == 1);
            }
        }
        while bits.len() % 8 != 0 {
            bits.push(false);
        }
        bits.chunks(8)
            .map(|ch| {
                ch.iter()
                    .enumerate()
                    .fold(0u8, |b, (i, &on)| b | ((on as u8) << i))
            })
            .collect()
    }

    #[test]
    fn hand_packed_example() {
        let codes = [0, 5, 0, 0, 7, 0, 0, 3];
        let s = encode_codes(&codes, 8, Signedness::Unsigned).unwrap();
        assert_eq!(s.bitmap(), &[0x92]);
        assert_eq!(s.values(), &[0x05, 0x07, 0x03]);
        assert_eq!(&s.as_bytes()[HEADER_LEN..], &naive_pack(&codes, 8)[..]);
        assert_eq!(s.len(), 14);
        assert_eq!(s.decode_codes(), codes);
        // payload alone: 4 bytes against 8 raw
        assert_eq!(8.0 / (s.bitmap().len() + s.values().len()) as f64, 2.0);
    }

    #[test]
    fn all_zero_and_dense_streams() {
        let z = encode_codes(&[0; 64], 8, Signedness::Unsigned).unwrap();
        assert_eq!(z.len(), 18);
        assert!(z.bitmap().iter().all(|&b| b == 0));
        assert!(z.values().is_empty());
        assert_eq!(z.decode_codes(), vec![0; 64]);

        let dense: Vec<i32> = (1..=64).collect();
        let d = encode_codes(&dense, 8, Signedness::Unsigned).unwrap();
        assert!(d.bitmap().iter().all(|&b| b == 0xFF));
        assert_eq!(d.values().len(), 64);
        assert!(compression_ratio(64, 8, &d) < 1.0);
    }

    #[test]
    fn ratio_examples() {
        let mut codes = vec![0i32; 4096];
        for c in codes.iter_mut().take(1638) {
            *c = 9;
        }
        let s = encode_codes(&codes, 8, Signedness::Unsigned).unwrap();
        assert_eq!(s.len(), 10 + 512 + 1638);
        let r = compression_ratio(4096, 8, &s);
        assert!((r - 4096.0 * 8.0 / (8.0 * 2160.0)).abs() < 1e-12);
        assert!((r - 1.896).abs() < 1e-3);

        let z = encode_codes(&[0; 4096], 8, Signedness::Unsigned).unwrap();
        assert!((compression_ratio(4096, 8, &z) - 7.846).abs() < 1e-3);
    }

    #[test]
    fn signed_codes_round_trip_with_sign_extension() {
        let codes = [-3, 0, 3, -7, 7, 0, -1];
        let s = encode_codes(&codes, 4, Signedness::SignedSymmetric).unwrap();
        assert!(s.is_signed());
        assert_eq!(s.decode_codes(), codes);
        assert!(encode_codes(&[-8], 4, Signedness::SignedSymmetric).is_err());
    }

    #[test]
    fn float_payload_keeps_bit_patterns() {
        let vals = [0.0f32, 1.5, -0.0, f32::MIN_POSITIVE, 0.0, -2.25];
        let s = zvc_encode_f32(&vals).unwrap();
        assert_eq!(s.nnz(), 4);
        assert_eq!(s.len(), expected_stream_len(6, 4, 32));
        let back = s.decode_f32().unwrap();
        assert!(vals
            .iter()
            .zip(&back)
            .all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn decode_error_paths() {
        let codes = [0, 5, 0, 0, 7, 0, 0, 3];
        let good = encode_codes(&codes, 8, Signedness::Unsigned)
            .unwrap()
            .into_bytes();

        let mut bad = good.clone();
        bad[0] = b'X';
        assert!(matches!(
            ZvcStream::from_bytes(bad),
            Err(Error::Format { offset: 0, .. })
        ));

        assert!(matches!(
            ZvcStream::from_bytes(good[..good.len() - 1].to_vec()),
            Err(Error::Format { .. })
        ));

        let mut bad = good.clone();
        bad[10] |= 0x01; // one more flagged element than packed values
        assert!(ZvcStream::from_bytes(bad).is_err());

        let mut bad = good.clone();
        bad[11] = 0; // packed zero code
        assert!(ZvcStream::from_bytes(bad).is_err());

        let mut bad = good.clone();
        bad[4] = 20;
        assert!(ZvcStream::from_bytes(bad).is_err());

        let s = ZvcStream::from_bytes(good).unwrap();
        let q = QuantParams::new(8, Signedness::Unsigned, 1.0).unwrap();
        assert!(zvc_decode(&s, Dims::new(1, 1, 1, 9).unwrap(), q).is_err());
        let q7 = QuantParams::new(7, Signedness::Unsigned, 1.0).unwrap();
        assert!(zvc_decode(&s, Dims::new(1, 1, 1, 8).unwrap(), q7).is_err());
        let t = zvc_decode(&s, Dims::new(1, 8, 1, 1).unwrap(), q).unwrap();
        assert_eq!(t.codes(), codes);
    }

    #[test]
    fn unsupported_bitwidth() {
        assert!(matches!(
            encode_codes(&[1], 17, Signedness::Unsigned),
            Err(Error::Unsupported(_))
        ));
        assert!(matches!(
            encode_codes(&[1], 0, Signedness::Unsigned),
            Err(Error::Unsupported(_))
        ));
    }

    fn codes_strategy() -> impl Strategy<Value = (u8, Vec<i32>)> {
        (1u8..=16, 0.0f64..=1.0, 1usize..300).prop_flat_map(|(b, density, len)| {
            let hi = (1i32 << b) - 1;
            (
                Just(b),
                prop::collection::vec(
                    (prop::bool::weighted(density), 1..=hi)
                        .prop_map(|(keep, v)| if keep { v } else { 0 }),
                    len,
                ),
            )
        })
    }

    proptest! {
        #[test]
        fn round_trip_and_length_formula((b, codes) in codes_strategy()) {
            let s = encode_codes(&codes, b, Signedness::Unsigned).unwrap();
            let nnz = codes.iter().filter(|&&c| c != 0).count();
            prop_assert_eq!(s.len(), expected_stream_len(codes.len(), nnz, b));
            prop_assert_eq!(&s.as_bytes()[HEADER_LEN..], &naive_pack(&codes, b)[..]);
            let reparsed = ZvcStream::from_bytes(s.clone().into_bytes()).unwrap();
            prop_assert_eq!(reparsed.decode_codes(), codes);
        }

        #[test]
        fn more_zeros_never_lengthen((b, codes) in codes_strategy(), idx in any::<prop::sample::Index>()) {
            let s = encode_codes(&codes, b, Signedness::Unsigned).unwrap();
            let mut sparser = codes.clone();
            sparser[idx.index(codes.len())] = 0;
            let t = encode_codes(&sparser, b, Signedness::Unsigned).unwrap();
            prop_assert!(t.len() <= s.len());
        }
    }
}
