//! Folding the inverse channel DCT into the following 1x1 convolution.
//!
//! For a weight block `W` (`c_out x n`) acting on one channel patch,
//! `W * (Aᵀ y) == (W Aᵀ) y`, so storing `W* = W Aᵀ` lets the convolution
//! consume frequency-domain coefficients directly.

use crate::container::CompressedActivation;
use crate::dct::DctMatrix;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor_io::{Dims, Tensor};

use super::dctcm::dctcm_decode_coefficients;

/// A `c_out x n` slice of 1x1-convolution weights over one channel patch,
/// row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightBlock<T> {
    c_out: usize,
    n: usize,
    w: Vec<T>,
}

impl<T: Scalar> WeightBlock<T> {
    pub fn new(c_out: usize, n: usize, w: Vec<T>) -> Result<Self> {
        if c_out == 0 || n == 0 || w.len() != c_out * n {
            return Err(Error::Shape(format!(
                "weight block {c_out} x {n} cannot hold {} values",
                w.len()
            )));
        }
        Ok(WeightBlock { c_out, n, w })
    }

    pub fn identity(n: usize) -> Self {
        let mut w = vec![T::zero(); n * n];
        for i in 0..n {
            w[i * n + i] = T::one();
        }
        WeightBlock { c_out: n, n, w }
    }

    pub fn c_out(&self) -> usize {
        self.c_out
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, o: usize, j: usize) -> T {
        self.w[o * self.n + j]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.w
    }

    pub fn row(&self, o: usize) -> &[T] {
        &self.w[o * self.n..(o + 1) * self.n]
    }

    /// `W x`.
    pub fn apply(&self, x: &[T]) -> Result<Vec<T>> {
        if x.len() != self.n {
            return Err(Error::Shape(format!(
                "vector of {} against {}-wide weights",
                x.len(),
                self.n
            )));
        }
        Ok((0..self.c_out)
            .map(|o| {
                self.row(o)
                    .iter()
                    .zip(x)
                    .fold(T::zero(), |acc, (&w, &v)| acc + w * v)
            })
            .collect())
    }

    fn check_dct(&self, m: &DctMatrix<T>) -> Result<()> {
        if self.n != m.n() {
            return Err(Error::Shape(format!(
                "weights are {} wide, DCT length is {}",
                self.n,
                m.n()
            )));
        }
        Ok(())
    }
}

/// `W* = W Aᵀ`.
pub fn fuse_weights<T: Scalar>(w: &WeightBlock<T>, m: &DctMatrix<T>) -> Result<WeightBlock<T>> {
    w.check_dct(m)?;
    let n = w.n;
    let mut out = Vec::with_capacity(w.w.len());
    for o in 0..w.c_out {
        let row = w.row(o);
        for i in 0..n {
            // (W Aᵀ)[o][i] = sum_j W[o][j] A[i][j]
            out.push(
                row.iter()
                    .zip(m.row(i))
                    .fold(T::zero(), |acc, (&a, &b)| acc + a * b),
            );
        }
    }
    WeightBlock::new(w.c_out, n, out)
}

/// Inverse of [`fuse_weights`]: `W = W* A`.
pub fn unfuse_weights<T: Scalar>(
    wstar: &WeightBlock<T>,
    m: &DctMatrix<T>,
) -> Result<WeightBlock<T>> {
    wstar.check_dct(m)?;
    let n = wstar.n;
    let mut out = vec![T::zero(); wstar.w.len()];
    for o in 0..wstar.c_out {
        for (i, &ws) in wstar.row(o).iter().enumerate() {
            for (j, &a) in m.row(i).iter().enumerate() {
                out[o * n + j] = out[o * n + j] + ws * a;
            }
        }
    }
    WeightBlock::new(wstar.c_out, n, out)
}

/// Convolution output straight from frequency-domain coefficients: `W* y`.
pub fn apply_fused<T: Scalar>(wstar: &WeightBlock<T>, y_freq: &[T]) -> Result<Vec<T>> {
    wstar.apply(y_freq)
}

fn check_blocks<T: Scalar>(blocks: &[WeightBlock<T>], groups: usize, len: usize) -> Result<usize> {
    let first = blocks
        .first()
        .ok_or_else(|| Error::Shape("no weight blocks supplied".into()))?;
    if blocks.len() != groups {
        return Err(Error::Shape(format!(
            "{} weight blocks for {groups} channel patches",
            blocks.len()
        )));
    }
    if blocks.iter().any(|b| b.n != len || b.c_out != first.c_out) {
        return Err(Error::Shape(format!(
            "every block must be {} x {len}",
            first.c_out
        )));
    }
    Ok(first.c_out)
}

/// Reference 1x1 convolution: one weight block per channel patch of `len`
/// channels, input channels past `c` treated as zero.
pub fn conv1x1<T: Scalar>(x: &Tensor<T>, blocks: &[WeightBlock<T>]) -> Result<Tensor<T>> {
    let dims = x.dims();
    let len = blocks.first().map_or(0, |b| b.n);
    if len == 0 {
        return Err(Error::Shape("no weight blocks supplied".into()));
    }
    let groups = dims.c.div_ceil(len);
    let c_out = check_blocks(blocks, groups, len)?;
    let plane = dims.plane();
    let out_dims = Dims::new(dims.n, c_out, dims.h, dims.w)?;
    let mut out = vec![T::zero(); out_dims.len()];
    for n in 0..dims.n {
        for (g, b) in blocks.iter().enumerate() {
            for j in 0..len {
                let ch = g * len + j;
                if ch >= dims.c {
                    break;
                }
                let src = &x.data()[(n * dims.c + ch) * plane..][..plane];
                for o in 0..c_out {
                    let w = b.get(o, j);
                    let dst = &mut out[(n * c_out + o) * plane..][..plane];
                    for (d, &s) in dst.iter_mut().zip(src) {
                        *d = *d + w * s;
                    }
                }
            }
        }
    }
    Tensor::new(out_dims, out)
}

/// 1x1 convolution applied to a dct-cm container without an inverse DCT.
/// `fused` holds `W* = W Aᵀ` per channel patch; masked coefficients are
/// skipped. Columns of `W` for padding channels past the original `c` must
/// be zero for the result to match [`conv1x1`] on the decoded tensor.
pub fn fused_conv1x1(a: &CompressedActivation, fused: &[WeightBlock<f64>]) -> Result<Tensor<f64>> {
    let coeffs = dctcm_decode_coefficients(a)?;
    let dims = coeffs.dims();
    let len = a.patch_len();
    let groups = dims.c / len;
    let c_out = check_blocks(fused, groups, len)?;
    let keep = a.keep();
    let plane = dims.plane();
    let out_dims = Dims::new(dims.n, c_out, dims.h, dims.w)?;
    let mut out = vec![0.0; out_dims.len()];
    for n in 0..dims.n {
        for (g, b) in fused.iter().enumerate() {
            for i in 0..keep {
                let src = &coeffs.data()[(n * dims.c + g * len + i) * plane..][..plane];
                for o in 0..c_out {
                    let w = b.get(o, i);
                    let dst = &mut out[(n * c_out + o) * plane..][..plane];
                    for (d, &s) in dst.iter_mut().zip(src) {
                        *d += w * s;
                    }
                }
            }
        }
    }
    Tensor::new(out_dims, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::{dctcm_decode, dctcm_encode, MaskSchedule};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_fuses_to_transpose() {
        let m = DctMatrix::<f64>::new(8).unwrap();
        let f = fuse_weights(&WeightBlock::identity(8), &m).unwrap();
        for o in 0..8 {
            for i in 0..8 {
                assert!((f.get(o, i) - m.get(i, o)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn dc_row_fuses_to_unit_vector() {
        let m = DctMatrix::<f64>::new(8).unwrap();
        let w = WeightBlock::new(1, 8, m.row(0).to_vec()).unwrap();
        let f = fuse_weights(&w, &m).unwrap();
        assert!((f.get(0, 0) - 1.0).abs() < 1e-12);
        assert!((1..8).all(|i| f.get(0, i).abs() < 1e-12));
    }

    #[test]
    fn unfuse_recovers_weights() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = DctMatrix::<f64>::new(16).unwrap();
        let w =
            WeightBlock::new(3, 16, (0..48).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        let back = unfuse_weights(&fuse_weights(&w, &m).unwrap(), &m).unwrap();
        for (a, b) in back.as_slice().iter().zip(w.as_slice()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn identity_fused_recovers_patch() {
        let m = DctMatrix::<f64>::new(8).unwrap();
        let x = [0.5, 1.0, 0.0, 2.0, 0.25, 0.0, 3.0, 1.5];
        let y = m.forward_1d(&x).unwrap();
        let out = apply_fused(&fuse_weights(&WeightBlock::identity(8), &m).unwrap(), &y).unwrap();
        for (a, b) in out.iter().zip(x) {
            assert!((a - b).abs() < 1e-10);
        }
        assert!(apply_fused(&WeightBlock::<f64>::identity(8), &[0.0; 8])
            .unwrap()
            .iter()
            .all(|&v| v == 0.0));
    }

    #[test]
    fn shape_mismatches() {
        let m = DctMatrix::<f64>::new(8).unwrap();
        assert!(matches!(
            fuse_weights(&WeightBlock::<f64>::identity(4), &m),
            Err(Error::Shape(_))
        ));
        assert!(WeightBlock::<f64>::new(2, 8, vec![0.0; 15]).is_err());
        assert!(apply_fused(&WeightBlock::<f64>::identity(8), &[0.0; 4]).is_err());
    }

    #[test]
    fn fused_convolution_matches_decode_then_convolve() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let dims = Dims::new(2, 12, 3, 3).unwrap();
        let x = Tensor::<f64>::from_fn(dims, |_, _, _, _| rng.gen_range(0.0..2.0)).unwrap();
        let a = dctcm_encode(&x, 0, &MaskSchedule::uniform(8, 3).unwrap(), 12, None).unwrap();
        let m = DctMatrix::<f64>::new(8).unwrap();
        // channels 12..16 are padding, so block 1 has zero weights there
        let blocks: Vec<WeightBlock<f64>> = (0..2)
            .map(|g| {
                let w = (0..40)
                    .map(|k| {
                        if g == 1 && k % 8 >= 4 {
                            0.0
                        } else {
                            rng.gen_range(-1.0..1.0)
                        }
                    })
                    .collect();
                WeightBlock::new(5, 8, w).unwrap()
            })
            .collect();
        let fused: Vec<_> = blocks
            .iter()
            .map(|b| fuse_weights(b, &m).unwrap())
            .collect();

        let decoded: Tensor<f64> = dctcm_decode(&a).unwrap();
        let explicit = conv1x1(&decoded, &blocks).unwrap();
        let direct = fused_conv1x1(&a, &fused).unwrap();
        assert_eq!(explicit.dims(), direct.dims());
        for (p, q) in explicit.data().iter().zip(direct.data()) {
            assert!((p - q).abs() < 1e-9, "{p} vs {q}");
        }
    }
}
