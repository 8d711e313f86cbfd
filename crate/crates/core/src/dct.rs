//! Orthonormal DCT-II basis and the 1-D / 2-D transforms built on it.
//!
//! `A[i][j] = c(i) * cos((j + 0.5) * pi * i / n)` with `c(0) = sqrt(1/n)`
//! and `c(i) = sqrt(2/n)` otherwise. Rows of `A` are the basis vectors, so
//! the 1-D forward transform is `y = A x` and its inverse is `x = Aᵀ y`.
//! The 2-D transform of an `n x n` patch is the separable `Y = A X Aᵀ`,
//! inverted by `X = Aᵀ Y A`.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Patch lengths the basis can be built for.
pub const SUPPORTED_LENGTHS: [usize; 3] = [4, 8, 16];

#[derive(Debug, Clone, PartialEq)]
pub struct DctMatrix<T> {
    n: usize,
    // row-major n x n
    a: Vec<T>,
}

impl<T: Scalar> DctMatrix<T> {
    pub fn new(n: usize) -> Result<Self> {
        if !SUPPORTED_LENGTHS.contains(&n) {
            return Err(Error::Domain(format!(
                "DCT length {n} not in {SUPPORTED_LENGTHS:?}"
            )));
        }
        let nf = n as f64;
        let mut a = Vec::with_capacity(n * n);
        for i in 0..n {
            let c = if i == 0 {
                (1.0 / nf).sqrt()
            } else {
                (2.0 / nf).sqrt()
            };
            for j in 0..n {
                let v = c * ((j as f64 + 0.5) * std::f64::consts::PI * i as f64 / nf).cos();
                a.push(T::from_f64_lossy(v));
            }
        }
        Ok(DctMatrix { n, a })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.a[i * self.n + j]
    }

    /// Basis row `i` (the `i`-th frequency).
    pub fn row(&self, i: usize) -> &[T] {
        &self.a[i * self.n..(i + 1) * self.n]
    }

    /// `max |AᵀA - I|` over all entries.
    pub fn orthonormality_error(&self) -> T {
        let n = self.n;
        let mut worst = T::zero();
        for p in 0..n {
            for q in 0..n {
                let mut dot = T::zero();
                for i in 0..n {
                    dot = dot + self.get(i, p) * self.get(i, q);
                }
                let target = if p == q { T::one() } else { T::zero() };
                worst = worst.max((dot - target).abs());
            }
        }
        worst
    }

    fn check_len(&self, len: usize, what: &str) -> Result<()> {
        if len != self.n {
            return Err(Error::Shape(format!(
                "{what} has length {len}, DCT length is {}",
                self.n
            )));
        }
        Ok(())
    }

    /// `out = A x`. Both slices must have length `n`.
    #[inline]
    pub fn forward_1d_into(&self, x: &[T], out: &mut [T]) {
        debug_assert!(x.len() == self.n && out.len() == self.n);
        for (i, o) in out.iter_mut().enumerate() {
            *o = self
                .row(i)
                .iter()
                .zip(x)
                .fold(T::zero(), |acc, (&a, &v)| acc + a * v);
        }
    }

    /// `out = Aᵀ y`. Both slices must have length `n`.
    #[inline]
    pub fn inverse_1d_into(&self, y: &[T], out: &mut [T]) {
        debug_assert!(y.len() == self.n && out.len() == self.n);
        out.fill(T::zero());
        for (i, &yi) in y.iter().enumerate() {
            if yi.is_zero() {
                continue;
            }
            for (o, &a) in out.iter_mut().zip(self.row(i)) {
                *o = *o + a * yi;
            }
        }
    }

    pub fn forward_1d(&self, x: &[T]) -> Result<Vec<T>> {
        self.check_len(x.len(), "input")?;
        let mut out = vec![T::zero(); self.n];
        self.forward_1d_into(x, &mut out);
        Ok(out)
    }

    pub fn inverse_1d(&self, y: &[T]) -> Result<Vec<T>> {
        self.check_len(y.len(), "input")?;
        let mut out = vec![T::zero(); self.n];
        self.inverse_1d_into(y, &mut out);
        Ok(out)
    }

    /// `Y = A X Aᵀ` on a row-major `n x n` patch.
    pub fn forward_2d(&self, x: &[T]) -> Result<Vec<T>> {
        self.check_len_2d(x.len())?;
        let mut out = vec![T::zero(); self.n * self.n];
        self.forward_2d_into(x, &mut out);
        Ok(out)
    }

    /// `X = Aᵀ Y A` on a row-major `n x n` patch.
    pub fn inverse_2d(&self, y: &[T]) -> Result<Vec<T>> {
        self.check_len_2d(y.len())?;
        let mut out = vec![T::zero(); self.n * self.n];
        self.inverse_2d_into(y, &mut out);
        Ok(out)
    }

    pub fn forward_2d_into(&self, x: &[T], out: &mut [T]) {
        self.separable(x, out, false);
    }

    pub fn inverse_2d_into(&self, y: &[T], out: &mut [T]) {
        self.separable(y, out, true);
    }

    fn check_len_2d(&self, len: usize) -> Result<()> {
        if len != self.n * self.n {
            return Err(Error::Shape(format!(
                "patch has {len} elements, expected {} x {}",
                self.n, self.n
            )));
        }
        Ok(())
    }

    // Columns first, then rows. `inverse` selects Aᵀ in place of A.
    fn separable(&self, src: &[T], out: &mut [T], inverse: bool) {
        let n = self.n;
        let mut tmp = vec![T::zero(); n * n];
        let mut col = vec![T::zero(); n];
        let mut res = vec![T::zero(); n];
        for j in 0..n {
            for i in 0..n {
                col[i] = src[i * n + j];
            }
            if inverse {
                self.inverse_1d_into(&col, &mut res);
            } else {
                self.forward_1d_into(&col, &mut res);
            }
            for i in 0..n {
                tmp[i * n + j] = res[i];
            }
        }
        for i in 0..n {
            let row = &tmp[i * n..(i + 1) * n];
            let dst = &mut out[i * n..(i + 1) * n];
            if inverse {
                self.inverse_1d_into(row, dst);
            } else {
                self.forward_1d_into(row, dst);
            }
        }
    }
}
