//! Multiply-accumulate counts for the channel inverse transform and for
//! plain convolutions.

use super::dctcm::MaskSchedule;

/// MACs of the inverse channel DCT over a `(c, h, w)` activation.
///
/// Each patch costs `n * n` MACs, or `keep * n` when multiplications by
/// masked (always-zero) coefficients are skipped. `c` is rounded up to a
/// multiple of the patch length.
pub fn count_transform_macs(
    c: usize,
    h: usize,
    w: usize,
    mask: &MaskSchedule,
    stage: usize,
    zero_skip: bool,
) -> u64 {
    let n = mask.patch_len() as u64;
    let patches = c.div_ceil(mask.patch_len()) as u64 * h as u64 * w as u64;
    let per_patch = if zero_skip {
        mask.keep_for_stage(stage) as u64 * n
    } else {
        n * n
    };
    patches * per_patch
}

/// A dense 2-D convolution (stride folded into the output size).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvLayer {
    pub c_in: usize,
    pub c_out: usize,
    pub kernel: usize,
    pub out_h: usize,
    pub out_w: usize,
}

impl ConvLayer {
    pub fn macs(&self) -> u64 {
        (self.c_in * self.c_out * self.kernel * self.kernel) as u64
            * (self.out_h * self.out_w) as u64
    }
}
