//! Transform-based compression of CNN feature maps.
//!
//! The crate provides:
//!
//! * [`zvc`]: zero-value compression (bitmap + packed nonzero codes),
//! * [`dct`]: the orthonormal DCT-II basis with 1-D and 2-D transforms,
//! * [`quant`]: fixed-point quantization with zero point 0,
//! * [`asp`]: threshold sparsification,
//! * [`pipeline`]: the channel-DCT-with-masks codec, the 8x8 spatial DCT
//!   codec, per-stage strategies, weight fusion and MAC accounting,
//! * [`tensor_io`] and [`container`]: the FMC1 tensor and DCM1 compressed
//!   file formats, plus a synthetic feature-map generator,
//! * [`methods`] and [`stats`]: sweep configurations and per-block reports.
//!
//! Math is generic over [`Scalar`] (`f32` or `f64`); pipelines transform in
//! `f64` regardless of the tensor type.

pub mod asp;
pub mod container;
pub mod dct;
pub mod error;
pub mod methods;
pub mod pipeline;
pub mod quant;
pub mod scalar;
pub mod stats;
pub mod tensor_io;
pub mod zvc;

pub use asp::{asp_apply, AspConfig};
pub use container::{CompressedActivation, Method};
pub use dct::DctMatrix;
pub use error::{Error, Result};
pub use pipeline::{MaskSchedule, QMatrix, StageMethod, StageStrategy, WeightBlock};
pub use quant::{calibrate_scale, dequantize, quantize, QuantParams, Signedness};
pub use scalar::Scalar;
pub use tensor_io::{Dims, QuantTensor, Tensor, TensorFile};
pub use zvc::ZvcStream;

pub type Tensor32 = Tensor<f32>;
pub type Tensor64 = Tensor<f64>;
pub type DctMatrix32 = DctMatrix<f32>;
pub type DctMatrix64 = DctMatrix<f64>;
pub type WeightBlock32 = WeightBlock<f32>;
pub type WeightBlock64 = WeightBlock<f64>;
