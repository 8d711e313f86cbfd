//! Test-only oracles, written independently of the library code paths.
#![allow(dead_code)]

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// DCT-II coefficient `k` of `x` straight from the cosine sum.
pub fn naive_dct_coeff(x: &[f64], k: usize) -> f64 {
    let n = x.len() as f64;
    let c = if k == 0 {
        (1.0 / n).sqrt()
    } else {
        (2.0 / n).sqrt()
    };
    c * x
        .iter()
        .enumerate()
        .map(|(j, v)| v * ((j as f64 + 0.5) * PI * k as f64 / n).cos())
        .sum::<f64>()
}

pub fn naive_dct(x: &[f64]) -> Vec<f64> {
    (0..x.len()).map(|k| naive_dct_coeff(x, k)).collect()
}

/// Inverse via the cosine sum (DCT-III with orthonormal scaling).
pub fn naive_idct(y: &[f64]) -> Vec<f64> {
    let n = y.len() as f64;
    (0..y.len())
        .map(|j| {
            y.iter()
                .enumerate()
                .map(|(k, v)| {
                    let c = if k == 0 {
                        (1.0 / n).sqrt()
                    } else {
                        (2.0 / n).sqrt()
                    };
                    c * v * ((j as f64 + 0.5) * PI * k as f64 / n).cos()
                })
                .sum()
        })
        .collect()
}

/// 2-D DCT by the quadruple cosine sum over an `n x n` row-major patch.
pub fn naive_dct2d(x: &[f64], n: usize) -> Vec<f64> {
    let c = |k: usize| {
        if k == 0 {
            (1.0 / n as f64).sqrt()
        } else {
            (2.0 / n as f64).sqrt()
        }
    };
    let nf = n as f64;
    let mut out = vec![0.0; n * n];
    for u in 0..n {
        for v in 0..n {
            let mut s = 0.0;
            for i in 0..n {
                for j in 0..n {
                    s += x[i * n + j]
                        * ((i as f64 + 0.5) * PI * u as f64 / nf).cos()
                        * ((j as f64 + 0.5) * PI * v as f64 / nf).cos();
                }
            }
            out[u * n + v] = c(u) * c(v) * s;
        }
    }
    out
}

/// Row-major `rows x cols` matrix times vector.
pub fn matvec(m: &[f64], rows: usize, cols: usize, x: &[f64]) -> Vec<f64> {
    (0..rows)
        .map(|r| (0..cols).map(|c| m[r * cols + c] * x[c]).sum())
        .collect()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

pub fn l2(a: &[f64]) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn random_vec(rng: &mut ChaCha8Rng, len: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..len).map(|_| rng.gen_range(lo..hi)).collect()
}

/// Fraction of squared energy of each 8-long channel patch in coefficients
/// `0..k`, minimum over all nonzero patches of a `(1, c, h, w)` tensor.
pub fn min_inband_energy(data: &[f64], c: usize, plane: usize, k: usize) -> f64 {
    let mut worst = 1.0f64;
    for g in 0..c / 8 {
        for pos in 0..plane {
            let patch: Vec<f64> = (0..8).map(|i| data[(g * 8 + i) * plane + pos]).collect();
            let y = naive_dct(&patch);
            let total: f64 = y.iter().map(|v| v * v).sum();
            if total == 0.0 {
                continue;
            }
            let inband: f64 = y[..k].iter().map(|v| v * v).sum();
            worst = worst.min(inband / total);
        }
    }
    worst
}

/// Squared-error of keeping only coefficients `0..keep` of every channel
/// patch (zero padded to `len`), summed over a `(n, c, h, w)` tensor.
pub fn truncation_error_sq(
    data: &[f64],
    n: usize,
    c: usize,
    plane: usize,
    len: usize,
    keep: usize,
) -> f64 {
    let groups = c.div_ceil(len);
    let mut err = 0.0;
    for b in 0..n {
        for g in 0..groups {
            for pos in 0..plane {
                let patch: Vec<f64> = (0..len)
                    .map(|i| {
                        let ch = g * len + i;
                        if ch < c {
                            data[(b * c + ch) * plane + pos]
                        } else {
                            0.0
                        }
                    })
                    .collect();
                let mut y = naive_dct(&patch);
                y[keep..].iter_mut().for_each(|v| *v = 0.0);
                let rec = naive_idct(&y);
                // only channels that exist in the original tensor count
                for i in 0..len {
                    if g * len + i < c {
                        let d = rec[i] - patch[i];
                        err += d * d;
                    }
                }
            }
        }
    }
    err
}
