//! Fixed-point quantization with zero point pinned at 0.
//!
//! Codes are `round_half_away_from_zero(x / scale)` clamped to the code
//! range, so an exact zero always maps to code 0 and back.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor_io::{QuantTensor, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Signedness {
    /// Codes in `[0, 2^b - 1]`.
    Unsigned,
    /// Codes in `[-(2^(b-1) - 1), 2^(b-1) - 1]`.
    SignedSymmetric,
}

impl Signedness {
    pub fn to_byte(self) -> u8 {
        match self {
            Signedness::Unsigned => 0,
            Signedness::SignedSymmetric => 1,
        }
    }

    pub fn from_byte(b: u8) -> Option<Self> {
        match b {
            0 => Some(Signedness::Unsigned),
            1 => Some(Signedness::SignedSymmetric),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantParams {
    bitwidth: u8,
    signedness: Signedness,
    scale: f32,
}

impl QuantParams {
    pub fn new(bitwidth: u8, signedness: Signedness, scale: f32) -> Result<Self> {
        if !(1..=16).contains(&bitwidth) {
            return Err(Error::Unsupported(format!(
                "bitwidth {bitwidth} (1..=16 supported)"
            )));
        }
        if signedness == Signedness::SignedSymmetric && bitwidth < 2 {
            return Err(Error::Domain(
                "signed-symmetric codes need at least 2 bits".into(),
            ));
        }
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::Domain(format!(
                "scale must be positive and finite, got {scale}"
            )));
        }
        Ok(QuantParams {
            bitwidth,
            signedness,
            scale,
        })
    }

    pub fn bitwidth(&self) -> u8 {
        self.bitwidth
    }

    pub fn signedness(&self) -> Signedness {
        self.signedness
    }

    pub fn scale(&self) -> f32 {
        self.scale
    }

    pub fn zero_point(&self) -> i32 {
        0
    }

    /// Largest representable code.
    pub fn max_code(&self) -> i32 {
        match self.signedness {
            Signedness::Unsigned => (1i32 << self.bitwidth) - 1,
            Signedness::SignedSymmetric => (1i32 << (self.bitwidth - 1)) - 1,
        }
    }

    /// Inclusive `(min, max)` code range.
    pub fn code_range(&self) -> (i32, i32) {
        let hi = self.max_code();
        match self.signedness {
            Signedness::Unsigned => (0, hi),
            Signedness::SignedSymmetric => (-hi, hi),
        }
    }

    #[inline]
    pub fn quantize_value(&self, x: f64) -> Result<i32> {
        if !x.is_finite() {
            return Err(Error::Domain(format!(
                "cannot quantize non-finite value {x}"
            )));
        }
        if self.signedness == Signedness::Unsigned && x < 0.0 {
            return Err(Error::Domain(format!(
                "negative value {x} under unsigned quantization"
            )));
        }
        let (lo, hi) = self.code_range();
        // f64::round rounds half away from zero
        let code = (x / self.scale as f64).round().clamp(lo as f64, hi as f64);
        Ok(code as i32)
    }

    #[inline]
    pub fn dequantize_value(&self, code: i32) -> f64 {
        code as f64 * self.scale as f64
    }

    pub fn quantize_slice<T: Scalar>(&self, xs: &[T]) -> Result<Vec<i32>> {
        xs.iter()
            .map(|x| self.quantize_value(x.to_f64_lossy()))
            .collect()
    }
}

pub fn quantize<T: Scalar>(x: &Tensor<T>, q: QuantParams) -> Result<QuantTensor> {
    QuantTensor::new(x.dims(), q.quantize_slice(x.data())?, q)
}

pub fn dequantize<T: Scalar>(c: &QuantTensor) -> Tensor<T> {
    let q = c.params();
    let data = c
        .codes()
        .iter()
        .map(|&k| T::from_f64_lossy(q.dequantize_value(k)))
        .collect();
    Tensor::new(c.dims(), data).expect("code tensor dims are valid")
}

/// Per-tensor scale mapping the largest magnitude onto the top code.
/// An all-zero input gets scale 1.
pub fn calibrate_slice<T: Scalar>(
    xs: &[T],
    bitwidth: u8,
    signedness: Signedness,
) -> Result<QuantParams> {
    // validates bitwidth/signedness before computing
    let top = QuantParams::new(bitwidth, signedness, 1.0)?.max_code() as f64;
    let peak = match signedness {
        Signedness::Unsigned => xs.iter().fold(0.0f64, |m, v| m.max(v.to_f64_lossy())),
        Signedness::SignedSymmetric => xs.iter().fold(0.0f64, |m, v| m.max(v.to_f64_lossy().abs())),
    };
    if !peak.is_finite() {
        return Err(Error::Domain(
            "cannot calibrate over non-finite values".into(),
        ));
    }
    let scale = if peak == 0.0 {
        1.0
    } else {
        ((peak / top) as f32).max(f32::MIN_POSITIVE)
    };
    QuantParams::new(bitwidth, signedness, scale)
}

pub fn calibrate_scale<T: Scalar>(
    x: &Tensor<T>,
    bitwidth: u8,
    signedness: Signedness,
) -> Result<QuantParams> {
    calibrate_slice(x.data(), bitwidth, signedness)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor_io::Dims;
    use proptest::prelude::*;

    fn vec_tensor(v: Vec<f64>) -> Tensor<f64> {
        Tensor::new(Dims::new(1, 1, 1, v.len()).unwrap(), v).unwrap()
    }

    /// Scalar oracle: round half away from zero written out by hand.
    fn oracle_round(v: f64) -> f64 {
        let f = v.abs().floor();
        let r = if v.abs() - f >= 0.5 { f + 1.0 } else { f };
        r.copysign(v)
    }

    #[test]
    fn quantizes_with_half_away_rounding() {
        let q = QuantParams::new(8, Signedness::Unsigned, 0.5).unwrap();
        let c = quantize(&vec_tensor(vec![0.0, 0.5, 1.25]), q).unwrap();
        assert_eq!(c.codes(), &[0, 1, 3]);
        assert_eq!(oracle_round(1.25 / 0.5), 3.0);
        let s = QuantParams::new(8, Signedness::SignedSymmetric, 0.5).unwrap();
        assert_eq!(s.quantize_value(-1.25).unwrap(), -3);
    }

    #[test]
    fn clamps_to_range_top() {
        let q = QuantParams::new(8, Signedness::Unsigned, 0.1).unwrap();
        assert_eq!(q.quantize_value(300.0 * 0.1).unwrap(), 255);
        let s = QuantParams::new(8, Signedness::SignedSymmetric, 0.1).unwrap();
        assert_eq!(s.quantize_value(-1e6).unwrap(), -127);
    }

    #[test]
    fn dequantizes_by_multiplying() {
        let q = QuantParams::new(8, Signedness::Unsigned, 0.5).unwrap();
        let c = QuantTensor::new(Dims::new(1, 1, 1, 3).unwrap(), vec![0, 1, 3], q).unwrap();
        let x: Tensor<f64> = dequantize(&c);
        assert_eq!(x.data(), &[0.0, 0.5, 1.5]);
    }

    #[test]
    fn negative_input_under_unsigned_is_domain_error() {
        let q = QuantParams::new(8, Signedness::Unsigned, 1.0).unwrap();
        assert!(matches!(
            quantize(&vec_tensor(vec![-0.1]), q),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn calibration_rules() {
        let x = vec_tensor(vec![0.0, 1.0, 2.55]);
        let q = calibrate_scale(&x, 8, Signedness::Unsigned).unwrap();
        assert_eq!(q.scale(), (2.55f64 / 255.0) as f32);
        assert!((q.scale() as f64 - 0.01).abs() < 1e-9);

        let q = calibrate_scale(&vec_tensor(vec![0.0; 4]), 8, Signedness::Unsigned).unwrap();
        assert_eq!(q.scale(), 1.0);

        let q = calibrate_scale(
            &vec_tensor(vec![0.3, -1.27]),
            8,
            Signedness::SignedSymmetric,
        )
        .unwrap();
        assert!((q.scale() as f64 - 0.01).abs() < 1e-9);
    }

    #[test]
    fn parameter_validation() {
        assert!(QuantParams::new(0, Signedness::Unsigned, 1.0).is_err());
        assert!(QuantParams::new(17, Signedness::Unsigned, 1.0).is_err());
        assert!(QuantParams::new(1, Signedness::SignedSymmetric, 1.0).is_err());
        assert!(QuantParams::new(8, Signedness::Unsigned, 0.0).is_err());
        assert!(QuantParams::new(8, Signedness::Unsigned, f32::NAN).is_err());
        assert_eq!(
            QuantParams::new(1, Signedness::Unsigned, 1.0)
                .unwrap()
                .code_range(),
            (0, 1)
        );
        assert_eq!(
            QuantParams::new(16, Signedness::SignedSymmetric, 1.0)
                .unwrap()
                .code_range(),
            (-32767, 32767)
        );
    }

    proptest! {
        #[test]
        fn zero_is_preserved(bits in 2u8..=16, scale in 1e-6f32..1e3, signed in any::<bool>()) {
            let s = if signed { Signedness::SignedSymmetric } else { Signedness::Unsigned };
            let q = QuantParams::new(bits, s, scale).unwrap();
            prop_assert_eq!(q.quantize_value(0.0).unwrap(), 0);
            prop_assert_eq!(q.dequantize_value(0), 0.0);
        }

        #[test]
        fn quantize_matches_scalar_oracle(x in 0.0f64..1000.0, bits in 1u8..=16, scale in 1e-3f32..10.0) {
            let q = QuantParams::new(bits, Signedness::Unsigned, scale).unwrap();
            let expected = oracle_round(x / scale as f64).min(q.max_code() as f64) as i32;
            prop_assert_eq!(q.quantize_value(x).unwrap(), expected);
        }

        #[test]
        fn monotone(a in -100.0f64..100.0, b in -100.0f64..100.0, bits in 2u8..=16) {
            let q = QuantParams::new(bits, Signedness::SignedSymmetric, 0.37).unwrap();
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(q.quantize_value(lo).unwrap() <= q.quantize_value(hi).unwrap());
        }

        #[test]
        fn bounded_round_trip_error(frac in 0.0f64..=1.0, bits in 1u8..=16, scale in 1e-4f32..10.0) {
            let q = QuantParams::new(bits, Signedness::Unsigned, scale).unwrap();
            let x = frac * q.max_code() as f64 * scale as f64;
            let back = q.dequantize_value(q.quantize_value(x).unwrap());
            prop_assert!((back - x).abs() <= scale as f64 / 2.0);
        }
    }
}
