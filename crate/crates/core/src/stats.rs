//! Per-block NNZ / ratio reports over a corpus of tensors.

use crate::error::{Error, Result};
use crate::methods::LabeledMethod;
use crate::pipeline::decode_real;
use crate::tensor_io::{Tensor, TensorFile};

/// One input tensor of the corpus.
#[derive(Debug, Clone)]
pub struct Block {
    pub stage: usize,
    pub block_id: usize,
    pub tensor: TensorFile,
    /// Reference for reconstruction error, when supplied.
    pub reference: Option<Tensor<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reconstruction {
    pub max_abs_err: f64,
    pub rel_l2_err: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockRow {
    pub method: String,
    pub stage: usize,
    pub block_id: usize,
    /// Coded elements (padded count for transform methods).
    pub elements: usize,
    pub nnz: usize,
    pub sparsity: f64,
    pub raw_bits: u64,
    pub compressed_bits: u64,
    pub ratio: f64,
    pub reconstruction: Option<Reconstruction>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodSummary {
    pub method: String,
    pub raw_bits: u64,
    pub compressed_bits: u64,
    /// `sum(raw_bits) / sum(compressed_bits)`.
    pub ratio: f64,
    pub mean_sparsity: f64,
    pub reconstruction: Option<Reconstruction>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StatsReport {
    pub rows: Vec<BlockRow>,
    pub summaries: Vec<MethodSummary>,
}

fn reconstruction(decoded: &Tensor<f64>, reference: &Tensor<f64>) -> (f64, f64, f64) {
    let mut max_abs: f64 = 0.0;
    let (mut err2, mut ref2) = (0.0, 0.0);
    for (d, r) in decoded.data().iter().zip(reference.data()) {
        let e = d - r;
        max_abs = max_abs.max(e.abs());
        err2 += e * e;
        ref2 += r * r;
    }
    (max_abs, err2, ref2)
}

fn rel_l2(err2: f64, ref2: f64) -> f64 {
    if ref2 > 0.0 {
        (err2 / ref2).sqrt()
    } else {
        err2.sqrt()
    }
}

/// Runs every method over every block. `raw_bitwidth` is the width the
/// uncompressed activations are charged at.
pub fn compute_stats(
    blocks: &[Block],
    methods: &[LabeledMethod],
    raw_bitwidth: u32,
) -> Result<StatsReport> {
    for b in blocks {
        if let Some(r) = &b.reference {
            if r.dims() != b.tensor.dims() {
                return Err(Error::Usage(format!(
                    "reference dims {} do not match block {} dims {}",
                    r.dims(),
                    b.block_id,
                    b.tensor.dims()
                )));
            }
        }
    }
    let mut rows = Vec::new();
    let mut summaries = Vec::new();
    for m in methods {
        let mut raw_total = 0u64;
        let mut comp_total = 0u64;
        let mut sparsity_sum = 0.0;
        let mut recon_acc: Option<(f64, f64, f64)> = None;
        for b in blocks {
            let a = m.spec.compress(b.stage, &b.tensor)?;
            let payload = a.payload();
            let elements = payload.count();
            let raw_bits = b.tensor.dims().len() as u64 * raw_bitwidth as u64;
            let compressed_bits = 8 * payload.len() as u64;
            let recon = match &b.reference {
                Some(r) => {
                    let decoded: Tensor<f64> = decode_real(&a, None)?;
                    let (max_abs, err2, ref2) = reconstruction(&decoded, r);
                    let acc = recon_acc.get_or_insert((0.0, 0.0, 0.0));
                    acc.0 = acc.0.max(max_abs);
                    acc.1 += err2;
                    acc.2 += ref2;
                    Some(Reconstruction {
                        max_abs_err: max_abs,
                        rel_l2_err: rel_l2(err2, ref2),
                    })
                }
                None => None,
            };
            let sparsity = 1.0 - payload.nnz() as f64 / elements as f64;
            raw_total += raw_bits;
            comp_total += compressed_bits;
            sparsity_sum += sparsity;
            rows.push(BlockRow {
                method: m.label.clone(),
                stage: b.stage,
                block_id: b.block_id,
                elements,
                nnz: payload.nnz(),
                sparsity,
                raw_bits,
                compressed_bits,
                ratio: raw_bits as f64 / compressed_bits as f64,
                reconstruction: recon,
            });
        }
        summaries.push(MethodSummary {
            method: m.label.clone(),
            raw_bits: raw_total,
            compressed_bits: comp_total,
            ratio: if comp_total > 0 {
                raw_total as f64 / comp_total as f64
            } else {
                0.0
            },
            mean_sparsity: if blocks.is_empty() {
                0.0
            } else {
                sparsity_sum / blocks.len() as f64
            },
            reconstruction: recon_acc.map(|(max_abs, err2, ref2)| Reconstruction {
                max_abs_err: max_abs,
                rel_l2_err: rel_l2(err2, ref2),
            }),
        });
    }
    Ok(StatsReport { rows, summaries })
}
