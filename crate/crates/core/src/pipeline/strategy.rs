//! Per-stage method selection: 2-D DCT on early stages, low-bit
//! quantization (or channel DCT) on the rest.
//!
//! Text form, one assignment per line (`;` also separates):
//!
//! ```text
//! # stage = method(bits)
//! 0 = dct2d(8)
//! 1-2 = dctcm(8)
//! rest = lowbit(5)
//! asp = 0.5
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::asp::AspConfig;
use crate::container::CompressedActivation;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor_io::Tensor;

use super::baseline::zvc_compress;
use super::dct2d::dct2d_encode;
use super::dctcm::{dctcm_encode, MaskSchedule};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StageMethod {
    Dct2d(u8),
    LowBit(u8),
    Passthrough(u8),
    DctCm(u8),
}

impl StageMethod {
    pub fn bits(&self) -> u8 {
        match *self {
            StageMethod::Dct2d(b)
            | StageMethod::LowBit(b)
            | StageMethod::Passthrough(b)
            | StageMethod::DctCm(b) => b,
        }
    }
}

impl fmt::Display for StageMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            StageMethod::Dct2d(_) => "dct2d",
            StageMethod::LowBit(_) => "lowbit",
            StageMethod::Passthrough(_) => "passthrough",
            StageMethod::DctCm(_) => "dctcm",
        };
        write!(f, "{name}({})", self.bits())
    }
}

impl FromStr for StageMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, rest) = s
            .split_once('(')
            .ok_or_else(|| Error::Config(format!("stage method {s:?}: expected name(bits)")))?;
        let bits: u8 = rest
            .strip_suffix(')')
            .and_then(|b| b.trim().parse().ok())
            .filter(|b| (1..=16).contains(b))
            .ok_or_else(|| Error::Config(format!("stage method {s:?}: bits must be 1..=16")))?;
        match name.trim() {
            "dct2d" | "dct-2d" => Ok(StageMethod::Dct2d(bits)),
            "lowbit" => Ok(StageMethod::LowBit(bits)),
            "passthrough" => Ok(StageMethod::Passthrough(bits)),
            "dctcm" | "dct-cm" => Ok(StageMethod::DctCm(bits)),
            other => Err(Error::Config(format!(
                "unknown stage method {other:?}; expected dct2d, lowbit, passthrough or dctcm"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct StageStrategy {
    stages: BTreeMap<usize, StageMethod>,
    rest: Option<StageMethod>,
    asp: Option<AspConfig>,
}

impl StageStrategy {
    pub fn new() -> Self {
        Self::default()
    }

    /// Stages `0..split_stage` use `early`, everything after uses `late`.
    pub fn split(split_stage: usize, early: StageMethod, late: StageMethod) -> Self {
        StageStrategy {
            stages: (0..split_stage).map(|s| (s, early)).collect(),
            rest: Some(late),
            asp: None,
        }
    }

    pub fn with_stage(mut self, stage: usize, method: StageMethod) -> Self {
        self.stages.insert(stage, method);
        self
    }

    pub fn with_rest(mut self, method: StageMethod) -> Self {
        self.rest = Some(method);
        self
    }

    pub fn with_asp(mut self, asp: AspConfig) -> Self {
        self.asp = Some(asp);
        self
    }

    pub fn asp(&self) -> Option<AspConfig> {
        self.asp
    }

    pub fn method_for(&self, stage: usize) -> Result<StageMethod> {
        self.stages
            .get(&stage)
            .copied()
            .or(self.rest)
            .ok_or_else(|| Error::Config(format!("strategy has no method for stage {stage}")))
    }

    /// First stage index that uses low-bit quantization.
    pub fn split_stage(&self) -> Option<usize> {
        let upper = self.stages.keys().next_back().map_or(0, |s| s + 1);
        (0..=upper).find(|&s| matches!(self.method_for(s), Ok(StageMethod::LowBit(_))))
    }
}

impl fmt::Display for StageStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> = self
            .stages
            .iter()
            .map(|(s, m)| format!("{s}={m}"))
            .collect();
        if let Some(r) = self.rest {
            parts.push(format!("rest={r}"));
        }
        if let Some(a) = self.asp {
            parts.push(format!("asp={}", a.threshold()));
        }
        f.write_str(&parts.join(";"))
    }
}

impl FromStr for StageStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut out = StageStrategy::new();
        for raw in s.split(['\n', ';']) {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("strategy line {line:?}: expected key = value"))
            })?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "rest" | "*" => out.rest = Some(value.parse()?),
                "asp" => {
                    let t: f64 = value
                        .parse()
                        .map_err(|_| Error::Config(format!("bad asp threshold {value:?}")))?;
                    out.asp = Some(AspConfig::new(t)?);
                }
                _ => {
                    let method: StageMethod = value.parse()?;
                    let parse = |t: &str| {
                        t.trim()
                            .parse::<usize>()
                            .map_err(|_| Error::Config(format!("bad stage index {t:?}")))
                    };
                    let (lo, hi) = match key.split_once('-') {
                        Some((a, b)) => (parse(a)?, parse(b)?),
                        None => (parse(key)?, parse(key)?),
                    };
                    if lo > hi {
                        return Err(Error::Config(format!("empty stage range {key:?}")));
                    }
                    for st in lo..=hi {
                        out.stages.insert(st, method);
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Compresses each `(stage, tensor)` with the method its stage selects.
/// Output order follows input order.
pub fn strategy_compress<T: Scalar>(
    stages: &[(usize, Tensor<T>)],
    s: &StageStrategy,
    mask: Option<&MaskSchedule>,
) -> Result<Vec<CompressedActivation>> {
    // resolve every stage first so config errors surface before any work
    let plan = stages
        .iter()
        .map(|(stage, _)| s.method_for(*stage))
        .collect::<Result<Vec<_>>>()?;
    if plan.iter().any(|m| matches!(m, StageMethod::DctCm(_))) && mask.is_none() {
        return Err(Error::Config(
            "strategy uses dctcm but no mask schedule was given".into(),
        ));
    }
    stages
        .par_iter()
        .zip(plan)
        .map(|((stage, x), method)| {
            let a = match method {
                StageMethod::Dct2d(bits) => dct2d_encode(
                    &match s.asp {
                        Some(cfg) => crate::asp::asp_apply(x, cfg),
                        None => x.clone(),
                    },
                    bits,
                    None,
                )?,
                StageMethod::LowBit(bits) | StageMethod::Passthrough(bits) => {
                    zvc_compress(x, bits, s.asp)?
                }
                StageMethod::DctCm(bits) => {
                    dctcm_encode(x, *stage, mask.expect("checked above"), bits, s.asp)?
                }
            };
            a.with_stage(*stage)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::container::Method;
    use crate::tensor_io::Dims;

    fn table1_row1() -> StageStrategy {
        StageStrategy::split(1, StageMethod::Dct2d(8), StageMethod::LowBit(5))
    }

    #[test]
    fn parse_and_display() {
        let s: StageStrategy =
            "0 = dct2d(8)\n# comment\n1-2 = dctcm(6)\nrest = lowbit(5)\nasp = 0.5"
                .parse()
                .unwrap();
        assert_eq!(s.method_for(0).unwrap(), StageMethod::Dct2d(8));
        assert_eq!(s.method_for(2).unwrap(), StageMethod::DctCm(6));
        assert_eq!(s.method_for(7).unwrap(), StageMethod::LowBit(5));
        assert_eq!(s.asp().unwrap().threshold(), 0.5);
        assert_eq!(s.to_string().parse::<StageStrategy>().unwrap(), s);
        assert_eq!(s.split_stage(), Some(3));
        assert_eq!(table1_row1().split_stage(), Some(1));
    }

    #[test]
    fn parse_errors() {
        assert!("0 = huffman(8)".parse::<StageStrategy>().is_err());
        assert!("0 = lowbit(0)".parse::<StageStrategy>().is_err());
        assert!("x = lowbit(8)".parse::<StageStrategy>().is_err());
        assert!("0 lowbit(8)".parse::<StageStrategy>().is_err());
        assert!("3-1 = lowbit(8)".parse::<StageStrategy>().is_err());
    }

    fn corpus() -> Vec<(usize, Tensor<f32>)> {
        (0..3)
            .map(|s| {
                let d = Dims::new(1, 8, 8, 8).unwrap();
                (
                    s,
                    Tensor::from_fn(d, |_, c, h, w| ((c + h + w + s) % 5) as f32 * 0.25).unwrap(),
                )
            })
            .collect()
    }

    #[test]
    fn dispatches_by_stage() {
        let out = strategy_compress(&corpus(), &table1_row1(), None).unwrap();
        let methods: Vec<_> = out.iter().map(|a| a.method()).collect();
        assert_eq!(methods, [Method::Dct2d, Method::Zvc, Method::Zvc]);
        assert_eq!(out.iter().map(|a| a.stage()).collect::<Vec<_>>(), [0, 1, 2]);
        assert_eq!(out[1].quant().bitwidth(), 5);
    }

    #[test]
    fn passthrough_matches_zvc_baseline() {
        let c = corpus();
        let s = StageStrategy::new().with_stage(0, StageMethod::Passthrough(8));
        let out = strategy_compress(&c[..1], &s, None).unwrap();
        assert_eq!(out[0], zvc_compress(&c[0].1, 8, None).unwrap());
    }

    #[test]
    fn uncovered_stage_and_missing_mask() {
        let s = StageStrategy::new().with_stage(0, StageMethod::LowBit(8));
        assert!(matches!(
            strategy_compress(&corpus(), &s, None),
            Err(Error::Config(_))
        ));
        let s = StageStrategy::new().with_rest(StageMethod::DctCm(8));
        assert!(strategy_compress(&corpus(), &s, None).is_err());
        let out = strategy_compress(&corpus(), &s, Some(&MaskSchedule::m1())).unwrap();
        assert_eq!(out.iter().map(|a| a.keep()).collect::<Vec<_>>(), [4, 6, 4]);
    }
}
