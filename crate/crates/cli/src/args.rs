use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "fmc", version, about = "Feature-map compression toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a synthetic multi-stage activation corpus.
    Gen(GenArgs),
    /// Compress one FMC1 tensor into a DCM1 file.
    Compress(CompressArgs),
    /// Reconstruct an FMC1 tensor from a DCM1 file.
    Decompress(DecompressArgs),
    /// Per-block NNZ and ratio report, optionally sweeping several methods.
    Stats(StatsArgs),
    /// Fold the inverse channel DCT into a 1x1 weight block.
    FuseWeights(FuseArgs),
}

#[derive(Args, Debug)]
pub struct GenArgs {
    /// Stage shape `CxHxW`, or a `;` separated list with one shape per stage.
    #[arg(long)]
    pub shape: Option<String>,
    /// Number of stages. Defaults to the length of --shape or --sparsity lists, else 5.
    #[arg(long)]
    pub stages: Option<usize>,
    /// Target zero fraction: one value for all stages or a comma list.
    #[arg(long, default_value = "0.5")]
    pub sparsity: String,
    /// `flat` or `lowpass:<k>`.
    #[arg(long, default_value = "flat")]
    pub spectrum: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Args, Debug)]
pub struct CompressArgs {
    pub input: PathBuf,
    /// zvc, dct-cm, dct-2d or asp.
    #[arg(long, default_value = "zvc")]
    pub method: String,
    /// Per-stage strategy file; overrides --method.
    #[arg(long)]
    pub strategy: Option<PathBuf>,
    /// Mask schedule for dct-cm: m1, m2 or `k0,k1,.../n`.
    #[arg(long, default_value = "m1")]
    pub mask: String,
    #[arg(long, default_value_t = 0)]
    pub stage: usize,
    #[arg(long, default_value_t = 8)]
    pub bits: u8,
    /// ASP threshold. Required for `asp`, optional for the transform methods.
    #[arg(long)]
    pub asp_threshold: Option<f64>,
    /// 8x8 quantization matrix file for dct-2d.
    #[arg(long)]
    pub qmatrix: Option<PathBuf>,
    /// Width the uncompressed input is charged at. Defaults to the input's own width.
    #[arg(long)]
    pub raw_bits: Option<u32>,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Args, Debug)]
pub struct DecompressArgs {
    pub input: PathBuf,
    /// Quantization matrix used when the file was compressed with dct-2d.
    #[arg(long)]
    pub qmatrix: Option<PathBuf>,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Args, Debug)]
pub struct StatsArgs {
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// Method specs such as `zvc:8`, `asp:0.25:8`, `dct-cm:m1:8`. Repeatable.
    #[arg(long, num_args = 1..)]
    pub methods: Vec<String>,
    /// Named method list (`table1`); appended after --methods.
    #[arg(long)]
    pub preset: Option<String>,
    /// Reference tensors, one per input in order, for reconstruction error.
    #[arg(long = "ref")]
    pub refs: Vec<PathBuf>,
    #[arg(long, default_value_t = 8)]
    pub raw_bits: u32,
}

#[derive(Args, Debug)]
pub struct FuseArgs {
    /// FMC1 float tensor of shape (C_out, n, 1, 1).
    pub input: PathBuf,
    /// Seed for the random probe vector.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(short, long)]
    pub output: PathBuf,
}
