//! Named compression configurations for sweeps, and the fixed preset list
//! used by `stats --preset table1`.
//!
//! Grammar (colon separated):
//!
//! | form                          | meaning                                   |
//! |-------------------------------|-------------------------------------------|
//! | `zvc:<bits>` / `lowbit:<bits>`| unsigned low-bit quantization + ZVC       |
//! | `asp:<threshold>:<bits>`      | threshold, then low-bit + ZVC             |
//! | `dct-cm:<mask>:<bits>[:<t>]`  | channel DCT with mask, optional threshold |
//! | `dct-2d:<bits>[:<t>]`         | 8x8 DCT on every block                    |
//! | `strategy:<assignments>`      | per-stage strategy, `;` separated         |

use std::fmt;
use std::str::FromStr;

use crate::asp::AspConfig;
use crate::container::CompressedActivation;
use crate::error::{Error, Result};
use crate::pipeline::{
    dct2d_encode, dctcm_encode, strategy_compress, zvc_compress, zvc_compress_codes, MaskSchedule,
    StageMethod, StageStrategy,
};
use crate::tensor_io::TensorFile;

#[derive(Debug, Clone, PartialEq)]
pub enum MethodSpec {
    Zvc {
        bits: u8,
    },
    Asp {
        asp: AspConfig,
        bits: u8,
    },
    DctCm {
        mask: MaskSchedule,
        bits: u8,
        asp: Option<AspConfig>,
    },
    Dct2d {
        bits: u8,
        asp: Option<AspConfig>,
    },
    Strategy {
        strategy: StageStrategy,
        mask: Option<MaskSchedule>,
    },
}

fn parse_bits(s: &str) -> Result<u8> {
    s.trim()
        .parse::<u8>()
        .ok()
        .filter(|b| (1..=16).contains(b))
        .ok_or_else(|| Error::Config(format!("bits {s:?} must be 1..=16")))
}

fn parse_asp(s: &str) -> Result<AspConfig> {
    let t = s
        .trim()
        .parse::<f64>()
        .map_err(|_| Error::Config(format!("bad threshold {s:?}")))?;
    AspConfig::new(t)
}

impl FromStr for MethodSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(body) = s.strip_prefix("strategy:") {
            let strategy: StageStrategy = body.parse()?;
            return Ok(MethodSpec::Strategy {
                strategy,
                mask: None,
            });
        }
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            ["zvc" | "lowbit", bits] => Ok(MethodSpec::Zvc { bits: parse_bits(bits)? }),
            ["asp", t, bits] => Ok(MethodSpec::Asp {
                asp: parse_asp(t)?,
                bits: parse_bits(bits)?,
            }),
            ["dct-cm", mask, bits, rest @ ..] if rest.len() <= 1 => Ok(MethodSpec::DctCm {
                mask: mask.parse()?,
                bits: parse_bits(bits)?,
                asp: rest.first().map(|t| parse_asp(t)).transpose()?,
            }),
            ["dct-2d", bits, rest @ ..] if rest.len() <= 1 => Ok(MethodSpec::Dct2d {
                bits: parse_bits(bits)?,
                asp: rest.first().map(|t| parse_asp(t)).transpose()?,
            }),
            _ => Err(Error::Usage(format!(
                "method spec {s:?}; expected zvc:<bits>, asp:<t>:<bits>, dct-cm:<mask>:<bits>[:<t>], \
                 dct-2d:<bits>[:<t>] or strategy:<assignments>"
            ))),
        }
    }
}

impl fmt::Display for MethodSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MethodSpec::Zvc { bits } => write!(f, "zvc:{bits}"),
            MethodSpec::Asp { asp, bits } => write!(f, "asp:{}:{bits}", asp.threshold()),
            MethodSpec::DctCm { mask, bits, asp } => {
                write!(f, "dct-cm:{mask}:{bits}")?;
                asp.map_or(Ok(()), |a| write!(f, ":{}", a.threshold()))
            }
            MethodSpec::Dct2d { bits, asp } => {
                write!(f, "dct-2d:{bits}")?;
                asp.map_or(Ok(()), |a| write!(f, ":{}", a.threshold()))
            }
            MethodSpec::Strategy { strategy, .. } => write!(f, "strategy:{strategy}"),
        }
    }
}

impl MethodSpec {
    /// Compresses one block. Integer-code inputs under plain `zvc` are coded
    /// as-is; every other combination works on real values.
    pub fn compress(&self, stage: usize, input: &TensorFile) -> Result<CompressedActivation> {
        if let (MethodSpec::Zvc { .. }, TensorFile::Codes(q)) = (self, input) {
            return zvc_compress_codes(q)?.with_stage(stage);
        }
        let x = input.to_real();
        let a = match self {
            MethodSpec::Zvc { bits } => zvc_compress(&x, *bits, None)?,
            MethodSpec::Asp { asp, bits } => zvc_compress(&x, *bits, Some(*asp))?,
            MethodSpec::DctCm { mask, bits, asp } => dctcm_encode(&x, stage, mask, *bits, *asp)?,
            MethodSpec::Dct2d { bits, asp } => match asp {
                Some(cfg) => dct2d_encode(&crate::asp::asp_apply(&x, *cfg), *bits, None)?,
                None => dct2d_encode(&x, *bits, None)?,
            },
            MethodSpec::Strategy { strategy, mask } => {
                let mut out = strategy_compress(&[(stage, x)], strategy, mask.as_ref())?;
                out.pop().expect("one input, one output")
            }
        };
        a.with_stage(stage)
    }
}

/// A method spec with a display label.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledMethod {
    pub label: String,
    pub spec: MethodSpec,
}

impl LabeledMethod {
    pub fn new(label: impl Into<String>, spec: MethodSpec) -> Self {
        LabeledMethod {
            label: label.into(),
            spec,
        }
    }

    /// Labels a parsed spec with its own canonical text.
    pub fn parse(s: &str) -> Result<Self> {
        let spec: MethodSpec = s.parse()?;
        Ok(LabeledMethod::new(spec.to_string(), spec))
    }
}

/// Fixed sweep: low-bit baselines, 2-D DCT on the first one or two stages,
/// ASP thresholds, and DCT-CM masks. 2-D DCT rows use 5-bit low-bit
/// quantization on the non-DCT stages.
pub fn preset_table1() -> Vec<LabeledMethod> {
    let asp = |t: f64| AspConfig::new(t).expect("preset thresholds are valid");
    let dct_split =
        |split: usize| StageStrategy::split(split, StageMethod::Dct2d(8), StageMethod::LowBit(5));
    vec![
        LabeledMethod::new("low-bit 8-bit", MethodSpec::Zvc { bits: 8 }),
        LabeledMethod::new("low-bit 5-bit", MethodSpec::Zvc { bits: 5 }),
        LabeledMethod::new(
            "dct-2d 1",
            MethodSpec::Strategy {
                strategy: dct_split(1),
                mask: None,
            },
        ),
        LabeledMethod::new(
            "dct-2d 1 0.5asp",
            MethodSpec::Strategy {
                strategy: dct_split(1).with_asp(asp(0.5)),
                mask: None,
            },
        ),
        LabeledMethod::new(
            "dct-2d 1&2 blocks",
            MethodSpec::Strategy {
                strategy: dct_split(2),
                mask: None,
            },
        ),
        LabeledMethod::new(
            "asp 0.25",
            MethodSpec::Asp {
                asp: asp(0.25),
                bits: 8,
            },
        ),
        LabeledMethod::new(
            "asp 0.5",
            MethodSpec::Asp {
                asp: asp(0.5),
                bits: 8,
            },
        ),
        LabeledMethod::new(
            "dct-cm 10-bit m1",
            MethodSpec::DctCm {
                mask: MaskSchedule::m1(),
                bits: 10,
                asp: None,
            },
        ),
        LabeledMethod::new(
            "dct-cm 10-bit m1 0.125",
            MethodSpec::DctCm {
                mask: MaskSchedule::m1(),
                bits: 10,
                asp: Some(asp(0.125)),
            },
        ),
        LabeledMethod::new(
            "dct-cm 8-bit m1",
            MethodSpec::DctCm {
                mask: MaskSchedule::m1(),
                bits: 8,
                asp: None,
            },
        ),
        LabeledMethod::new(
            "dct-cm 6-bit m2",
            MethodSpec::DctCm {
                mask: MaskSchedule::m2(),
                bits: 6,
                asp: None,
            },
        ),
    ]
}
