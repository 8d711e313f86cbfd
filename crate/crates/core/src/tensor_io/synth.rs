//! Deterministic synthetic feature maps with a configurable per-stage
//! sparsity and channel spectrum.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Dims, Tensor};
use crate::dct::DctMatrix;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Channel patch length the low-pass spectrum is defined over.
const SPECTRUM_PATCH: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spectrum {
    /// I.i.d. values, no channel structure.
    Flat,
    /// Every 8-long channel patch has energy only in DCT coefficients `0..k`.
    LowPass(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticProfile {
    /// `(c, h, w)` per stage, in stage order.
    pub stage_shapes: Vec<(usize, usize, usize)>,
    /// Target zero fraction per stage, each in `[0, 1)`.
    pub stage_sparsity: Vec<f64>,
    pub spectrum: Spectrum,
    pub seed: u64,
}

impl SyntheticProfile {
    pub fn validate(&self) -> Result<()> {
        if self.stage_shapes.is_empty() {
            return Err(Error::Config("profile has no stages".into()));
        }
        if self.stage_shapes.len() != self.stage_sparsity.len() {
            return Err(Error::Config(format!(
                "{} stage shapes but {} sparsity targets",
                self.stage_shapes.len(),
                self.stage_sparsity.len()
            )));
        }
        for &(c, h, w) in &self.stage_shapes {
            Dims::new(1, c, h, w)?;
        }
        if let Some(s) = self
            .stage_sparsity
            .iter()
            .find(|s| !(0.0..1.0).contains(*s))
        {
            return Err(Error::Config(format!("sparsity {s} outside [0, 1)")));
        }
        if let Spectrum::LowPass(k) = self.spectrum {
            if !(1..=SPECTRUM_PATCH).contains(&k) {
                return Err(Error::Config(format!("lowpass({k}) needs 1 <= k <= 8")));
            }
        }
        Ok(())
    }
}

/// Generates one nonnegative `(1, c, h, w)` tensor per stage.
///
/// Output depends only on the profile, seed included.
pub fn generate_synthetic<T: Scalar>(p: &SyntheticProfile) -> Result<Vec<(usize, Tensor<T>)>> {
    p.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let dct = DctMatrix::<f64>::new(SPECTRUM_PATCH)?;
    p.stage_shapes
        .iter()
        .zip(&p.stage_sparsity)
        .enumerate()
        .map(|(stage, (&(c, h, w), &sparsity))| {
            let dims = Dims::new(1, c, h, w)?;
            let data = match p.spectrum {
                Spectrum::Flat => flat_stage(dims, sparsity, &mut rng),
                Spectrum::LowPass(k) => lowpass_stage(dims, sparsity, k, &dct, &mut rng),
            };
            let data = data.into_iter().map(T::from_f64_lossy).collect();
            Ok((stage, Tensor::new(dims, data)?))
        })
        .collect()
}

fn flat_stage(dims: Dims, sparsity: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let len = dims.len();
    // (0, 1]: a drawn value is never an accidental zero
    let mut data: Vec<f64> = (0..len).map(|_| 1.0 - rng.gen::<f64>()).collect();
    let zeros = (sparsity * len as f64).round() as usize;
    for i in index::sample(rng, len, zeros) {
        data[i] = 0.0;
    }
    data
}

fn lowpass_stage(
    dims: Dims,
    sparsity: f64,
    k: usize,
    dct: &DctMatrix<f64>,
    rng: &mut ChaCha8Rng,
) -> Vec<f64> {
    let groups = dims.c.div_ceil(SPECTRUM_PATCH);
    let plane = dims.plane();
    let patches = groups * plane;
    let mut data = vec![0.0; dims.len()];
    let mut coeffs = [0.0; SPECTRUM_PATCH];
    let mut patch = [0.0; SPECTRUM_PATCH];

    for p in 0..patches {
        let (g, pos) = (p / plane, p % plane);
        coeffs.fill(0.0);
        let mut ac_sum = 0.0;
        for c in coeffs.iter_mut().take(k).skip(1) {
            *c = rng.gen::<f64>();
            ac_sum += *c;
        }
        // DC >= sqrt(2) * sum(AC) keeps every sample strictly positive for n = 8
        coeffs[0] = std::f64::consts::SQRT_2 * ac_sum + (1.0 - rng.gen::<f64>());
        dct.inverse_1d_into(&coeffs, &mut patch);
        for (i, v) in patch.iter().enumerate() {
            let ch = g * SPECTRUM_PATCH + i;
            if ch < dims.c {
                data[ch * plane + pos] = v.max(0.0);
            }
        }
    }

    let zeros = (sparsity * patches as f64).round() as usize;
    for p in index::sample(rng, patches, zeros) {
        let (g, pos) = (p / plane, p % plane);
        for i in 0..SPECTRUM_PATCH {
            let ch = g * SPECTRUM_PATCH + i;
            if ch < dims.c {
                data[ch * plane + pos] = 0.0;
            }
        }
    }
    data
}

#[cfg(test)]
mod tests {
    use super::*;

    fn profile(
        shape: (usize, usize, usize),
        sparsity: f64,
        spectrum: Spectrum,
        seed: u64,
    ) -> SyntheticProfile {
        SyntheticProfile {
            stage_shapes: vec![shape],
            stage_sparsity: vec![sparsity],
            spectrum,
            seed,
        }
    }

    #[test]
    fn zero_sparsity_flat_has_no_zeros() {
        let out = generate_synthetic::<f32>(&profile((8, 2, 2), 0.0, Spectrum::Flat, 1)).unwrap();
        assert_eq!(out[0].1.count_zeros(), 0);
    }

    #[test]
    fn same_seed_same_tensors() {
        let p = profile((16, 8, 8), 0.4, Spectrum::LowPass(3), 42);
        let a = generate_synthetic::<f32>(&p).unwrap();
        let b = generate_synthetic::<f32>(&p).unwrap();
        assert_eq!(a, b);
        let c = generate_synthetic::<f32>(&SyntheticProfile { seed: 43, ..p }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn sparsity_is_calibrated() {
        for spectrum in [Spectrum::Flat, Spectrum::LowPass(2)] {
            for target in [0.0, 0.3, 0.6, 0.95] {
                let out =
                    generate_synthetic::<f32>(&profile((32, 16, 16), target, spectrum, 9)).unwrap();
                let frac = out[0].1.zero_fraction();
                assert!(
                    (frac - target).abs() <= 0.02,
                    "{spectrum:?} {target} -> {frac}"
                );
            }
        }
    }

    #[test]
    fn values_are_nonnegative() {
        let out =
            generate_synthetic::<f64>(&profile((24, 4, 4), 0.2, Spectrum::LowPass(8), 3)).unwrap();
        assert!(out[0].1.data().iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn invalid_profiles_are_rejected() {
        assert!(generate_synthetic::<f32>(&profile((8, 1, 1), 1.0, Spectrum::Flat, 0)).is_err());
        assert!(
            generate_synthetic::<f32>(&profile((8, 1, 1), 0.1, Spectrum::LowPass(0), 0)).is_err()
        );
        assert!(
            generate_synthetic::<f32>(&profile((8, 1, 1), 0.1, Spectrum::LowPass(9), 0)).is_err()
        );
        let mut p = profile((8, 1, 1), 0.1, Spectrum::Flat, 0);
        p.stage_sparsity.push(0.2);
        assert!(generate_synthetic::<f32>(&p).is_err());
    }
}
