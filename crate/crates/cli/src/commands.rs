use std::fmt;
use std::fs;
use std::path::Path;

use fmc_core::container::Method;
use fmc_core::methods::{preset_table1, LabeledMethod};
use fmc_core::pipeline::{
    self, apply_fused, dct2d_encode, dctcm_encode, decode_real, strategy_compress, zvc_compress,
    zvc_compress_codes, zvc_decompress,
};
use fmc_core::stats::{compute_stats, Block, StatsReport};
use fmc_core::tensor_io::{
    generate_synthetic, read_tensor, write_tensor, Spectrum, SyntheticProfile,
};
use fmc_core::{
    asp_apply, AspConfig, CompressedActivation, DctMatrix, Dims, Error, MaskSchedule, QMatrix,
    StageStrategy, Tensor, TensorFile, WeightBlock,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::args::{CompressArgs, DecompressArgs, FuseArgs, GenArgs, StatsArgs};
use crate::table::Table;

/// A failed command: the message shown to the user and the exit status.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

fn code_for(e: &Error) -> u8 {
    match e {
        Error::Usage(_) | Error::Config(_) => 1,
        Error::Format { .. }
        | Error::Truncated { .. }
        | Error::Unsupported(_)
        | Error::Domain(_)
        | Error::Shape(_)
        | Error::Io(_) => 2,
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            code: code_for(&e),
            message: e.to_string(),
        }
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure {
        code: 1,
        message: msg.into(),
    }
}

/// Prefixes an error with the file it came from, keeping its exit status.
fn in_file(path: &Path) -> impl Fn(Error) -> Failure + '_ {
    move |e| Failure {
        code: code_for(&e),
        message: format!("{}: {e}", path.display()),
    }
}

type CmdResult = Result<(), Failure>;

fn read_text(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| in_file(path)(e.into()))
}

fn read_qmatrix(path: Option<&Path>) -> Result<Option<QMatrix>, Failure> {
    path.map(|p| read_text(p)?.parse::<QMatrix>().map_err(in_file(p)))
        .transpose()
}

fn parse_shape(s: &str) -> Result<(usize, usize, usize), Failure> {
    let parts: Vec<usize> = s
        .trim()
        .split(['x', 'X'])
        .map(|p| p.trim().parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|_| usage(format!("shape {s:?}: expected CxHxW")))?;
    match parts.as_slice() {
        &[c, h, w] if c > 0 && h > 0 && w > 0 => Ok((c, h, w)),
        _ => Err(usage(format!(
            "shape {s:?}: expected three positive sizes CxHxW"
        ))),
    }
}

fn parse_spectrum(s: &str) -> Result<Spectrum, Failure> {
    let s = s.trim();
    if s == "flat" {
        return Ok(Spectrum::Flat);
    }
    s.strip_prefix("lowpass:")
        .or_else(|| s.strip_prefix("lowpass(").and_then(|r| r.strip_suffix(')')))
        .and_then(|k| k.trim().parse::<usize>().ok())
        .map(Spectrum::LowPass)
        .ok_or_else(|| usage(format!("spectrum {s:?}: expected flat or lowpass:<k>")))
}

/// Default stage ladder when --shape is absent: channels double while the
/// plane shrinks, so element counts stay in the thousands.
const DEFAULT_LADDER: [(usize, usize, usize); 5] = [
    (32, 16, 16),
    (64, 8, 8),
    (128, 8, 8),
    (256, 4, 4),
    (512, 2, 2),
];

/// Broadcasts a one-element list or checks a full one.
fn per_stage<T: Clone>(what: &str, v: Vec<T>, stages: usize) -> Result<Vec<T>, Failure> {
    match v.len() {
        1 => Ok(vec![v[0].clone(); stages]),
        n if n == stages => Ok(v),
        n => Err(usage(format!(
            "{what} lists {n} values but there are {stages} stages"
        ))),
    }
}

pub fn gen(a: GenArgs) -> CmdResult {
    let shapes = a
        .shape
        .as_deref()
        .map(|s| {
            s.split(';')
                .filter(|p| !p.trim().is_empty())
                .map(parse_shape)
                .collect::<Result<Vec<_>, _>>()
        })
        .transpose()?;
    let sparsity = a
        .sparsity
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| usage(format!("bad sparsity {t:?}")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let stages = a
        .stages
        .or_else(|| shapes.as_ref().map(Vec::len).filter(|&n| n > 1))
        .or_else(|| Some(sparsity.len()).filter(|&n| n > 1))
        .unwrap_or(DEFAULT_LADDER.len());
    if stages == 0 {
        return Err(usage("--stages must be at least 1"));
    }
    let stage_shapes = match shapes {
        Some(s) => per_stage("--shape", s, stages)?,
        None => (0..stages)
            .map(|i| DEFAULT_LADDER[i.min(DEFAULT_LADDER.len() - 1)])
            .collect(),
    };
    let profile = SyntheticProfile {
        stage_shapes,
        stage_sparsity: per_stage("--sparsity", sparsity, stages)?,
        spectrum: parse_spectrum(&a.spectrum)?,
        seed: a.seed,
    };
    profile.validate().map_err(|e| usage(e.to_string()))?;
    let corpus = generate_synthetic::<f32>(&profile)?;
    fs::create_dir_all(&a.out_dir).map_err(|e| in_file(&a.out_dir)(e.into()))?;

    let mut table = Table::new(["file", "stage", "shape", "target", "sparsity"]);
    let mut lines = Vec::new();
    for (stage, t) in corpus {
        let name = format!("stage_{stage}.fmc");
        let path = a.out_dir.join(&name);
        let d = t.dims();
        let zf = t.zero_fraction();
        let target = profile.stage_sparsity[stage];
        write_tensor(&TensorFile::Real(t), &path).map_err(in_file(&path))?;
        let shape = format!("{}x{}x{}x{}", d.n, d.c, d.h, d.w);
        table.push(vec![
            name.clone(),
            stage.to_string(),
            shape.clone(),
            format!("{target:.3}"),
            format!("{zf:.4}"),
        ]);
        lines.push(format!(
            "file={} stage={stage} shape={shape} target_sparsity={target} sparsity={zf:.6}",
            path.display()
        ));
    }
    println!("{}", table.render());
    for l in lines {
        println!("{l}");
    }
    println!(
        "seed={} stages={stages} spectrum={}",
        a.seed,
        a.spectrum.trim()
    );
    Ok(())
}

fn raw_width(t: &TensorFile) -> u32 {
    match t {
        TensorFile::Real(_) => 32,
        TensorFile::Codes(q) => q.params().bitwidth() as u32,
    }
}

fn encode(a: &CompressArgs, input: &TensorFile) -> Result<CompressedActivation, Failure> {
    let asp = a
        .asp_threshold
        .map(AspConfig::new)
        .transpose()
        .map_err(|e| usage(e.to_string()))?;
    let needs_mask = a.strategy.is_some() || a.method == "dct-cm";
    let mask = if needs_mask {
        Some(
            a.mask
                .parse::<MaskSchedule>()
                .map_err(|e| usage(e.to_string()))?,
        )
    } else {
        None
    };
    if let Some(path) = &a.strategy {
        let mut strategy: StageStrategy = read_text(path)?.parse().map_err(in_file(path))?;
        if let Some(cfg) = asp {
            strategy = strategy.with_asp(cfg);
        }
        let mut out = strategy_compress(&[(a.stage, input.to_real())], &strategy, mask.as_ref())?;
        return Ok(out.pop().expect("one input, one output"));
    }
    let method: Method = a.method.parse().map_err(|e: Error| usage(e.to_string()))?;
    let x = input.to_real();
    let act = match method {
        Method::Zvc => match (input, asp) {
            (TensorFile::Codes(q), None) => zvc_compress_codes(q)?,
            _ => zvc_compress(&x, a.bits, asp)?,
        },
        Method::AspZvc => {
            let cfg = asp.ok_or_else(|| usage("--method asp needs --asp-threshold"))?;
            zvc_compress(&x, a.bits, Some(cfg))?
        }
        Method::DctCm => dctcm_encode(
            &x,
            a.stage,
            mask.as_ref().expect("parsed above"),
            a.bits,
            asp,
        )?,
        Method::Dct2d => {
            let qm = read_qmatrix(a.qmatrix.as_deref())?;
            let x = match asp {
                Some(cfg) => asp_apply(&x, cfg),
                None => x,
            };
            dct2d_encode(&x, a.bits, qm.as_ref())?
        }
    };
    Ok(act.with_stage(a.stage)?)
}

pub fn compress(a: CompressArgs) -> CmdResult {
    let input = read_tensor(&a.input).map_err(in_file(&a.input))?;
    let act = encode(&a, &input)?;
    let bytes = act.to_bytes();
    fs::write(&a.output, &bytes).map_err(|e| in_file(&a.output)(e.into()))?;

    let payload = act.payload();
    let elements = input.dims().len();
    let raw_bits = elements as u64 * a.raw_bits.unwrap_or_else(|| raw_width(&input)) as u64;
    let compressed_bits = 8 * payload.len() as u64;
    let ratio = raw_bits as f64 / compressed_bits as f64;
    let sparsity = 1.0 - payload.nnz() as f64 / payload.count() as f64;

    let mut table = Table::new([
        "method", "stage", "elements", "coded", "nnz", "sparsity", "raw_bits", "bits", "ratio",
    ]);
    table.push(vec![
        act.method().name().into(),
        act.stage().to_string(),
        elements.to_string(),
        payload.count().to_string(),
        payload.nnz().to_string(),
        format!("{sparsity:.4}"),
        raw_bits.to_string(),
        compressed_bits.to_string(),
        format!("{ratio:.3}"),
    ]);
    println!("{}", table.render());
    println!("method={}", act.method().name());
    println!("stage={}", act.stage());
    println!("elements={elements}");
    println!("coded_elements={}", payload.count());
    println!("nnz={}", payload.nnz());
    println!("sparsity={sparsity:.6}");
    println!("raw_bits={raw_bits}");
    println!("compressed_bits={compressed_bits}");
    println!("ratio={ratio:.6}");
    println!("file_bytes={}", bytes.len());
    println!("output={}", a.output.display());
    Ok(())
}

pub fn decompress(a: DecompressArgs) -> CmdResult {
    let bytes = fs::read(&a.input).map_err(|e| in_file(&a.input)(e.into()))?;
    let act = CompressedActivation::from_bytes(&bytes).map_err(in_file(&a.input))?;
    let qm = read_qmatrix(a.qmatrix.as_deref())?;
    let out = match act.method() {
        Method::Zvc | Method::AspZvc => TensorFile::Codes(zvc_decompress(&act)?),
        Method::DctCm | Method::Dct2d => TensorFile::Real(decode_real::<f32>(&act, qm.as_ref())?),
    };
    write_tensor(&out, &a.output).map_err(in_file(&a.output))?;
    let d = out.dims();
    println!("method={}", act.method().name());
    println!("shape={}x{}x{}x{}", d.n, d.c, d.h, d.w);
    println!("output={}", a.output.display());
    Ok(())
}

/// `stage_<i>.fmc` names carry their stage; anything else uses its position.
fn stage_of(path: &Path, position: usize) -> usize {
    path.file_stem()
        .and_then(|s| s.to_str())
        .and_then(|s| s.strip_prefix("stage_"))
        .and_then(|s| s.parse().ok())
        .unwrap_or(position)
}

fn fmt_recon(r: Option<&fmc_core::stats::Reconstruction>) -> (String, String) {
    match r {
        Some(r) => (
            format!("{:.3e}", r.max_abs_err),
            format!("{:.3e}", r.rel_l2_err),
        ),
        None => ("-".into(), "-".into()),
    }
}

fn print_report(report: &StatsReport) {
    let with_ref = report.rows.iter().any(|r| r.reconstruction.is_some());
    let mut header = vec![
        "method", "stage", "block", "elements", "nnz", "sparsity", "raw_bits", "bits", "ratio",
    ];
    if with_ref {
        header.extend(["max_abs_err", "rel_l2_err"]);
    }
    let mut rows = Table::new(header);
    for r in &report.rows {
        let mut cells = vec![
            r.method.clone(),
            r.stage.to_string(),
            r.block_id.to_string(),
            r.elements.to_string(),
            r.nnz.to_string(),
            format!("{:.4}", r.sparsity),
            r.raw_bits.to_string(),
            r.compressed_bits.to_string(),
            format!("{:.3}", r.ratio),
        ];
        if with_ref {
            let (m, l) = fmt_recon(r.reconstruction.as_ref());
            cells.extend([m, l]);
        }
        rows.push(cells);
    }
    println!("{}\n", rows.render());

    let mut header = vec!["method", "raw_bits", "bits", "ratio", "mean_sparsity"];
    if with_ref {
        header.extend(["max_abs_err", "rel_l2_err"]);
    }
    let mut sums = Table::new(header);
    for s in &report.summaries {
        let mut cells = vec![
            s.method.clone(),
            s.raw_bits.to_string(),
            s.compressed_bits.to_string(),
            format!("{:.3}", s.ratio),
            format!("{:.4}", s.mean_sparsity),
        ];
        if with_ref {
            let (m, l) = fmt_recon(s.reconstruction.as_ref());
            cells.extend([m, l]);
        }
        sums.push(cells);
    }
    println!("{}\n", sums.render());

    for r in &report.rows {
        let mut line = format!(
            "row method={:?} stage={} block={} elements={} nnz={} sparsity={:.6} raw_bits={} compressed_bits={} ratio={:.6}",
            r.method, r.stage, r.block_id, r.elements, r.nnz, r.sparsity, r.raw_bits, r.compressed_bits, r.ratio
        );
        if let Some(rec) = &r.reconstruction {
            line.push_str(&format!(
                " max_abs_err={:e} rel_l2_err={:e}",
                rec.max_abs_err, rec.rel_l2_err
            ));
        }
        println!("{line}");
    }
    for s in &report.summaries {
        let mut line = format!(
            "summary method={:?} raw_bits={} compressed_bits={} ratio={:.6} mean_sparsity={:.6}",
            s.method, s.raw_bits, s.compressed_bits, s.ratio, s.mean_sparsity
        );
        if let Some(rec) = &s.reconstruction {
            line.push_str(&format!(
                " max_abs_err={:e} rel_l2_err={:e}",
                rec.max_abs_err, rec.rel_l2_err
            ));
        }
        println!("{line}");
    }
}

pub fn stats(a: StatsArgs) -> CmdResult {
    let mut methods = a
        .methods
        .iter()
        .map(|m| {
            m.parse()
                .map(|spec| LabeledMethod::new(m.trim(), spec))
                .map_err(|e: Error| usage(e.to_string()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    match a.preset.as_deref() {
        None => {}
        Some("table1") => methods.extend(preset_table1()),
        Some(other) => {
            return Err(usage(format!(
                "unknown preset {other:?}; available: table1"
            )))
        }
    }
    if methods.is_empty() {
        methods.push(LabeledMethod::parse("zvc:8").expect("literal spec"));
    }
    if !a.refs.is_empty() && a.refs.len() != a.inputs.len() {
        return Err(usage(format!(
            "{} --ref files for {} inputs",
            a.refs.len(),
            a.inputs.len()
        )));
    }
    let mut blocks = Vec::with_capacity(a.inputs.len());
    for (i, path) in a.inputs.iter().enumerate() {
        let tensor = read_tensor(path).map_err(in_file(path))?;
        let reference = match a.refs.get(i) {
            Some(r) => Some(read_tensor(r).map_err(in_file(r))?.to_real()),
            None => None,
        };
        blocks.push(Block {
            stage: stage_of(path, i),
            block_id: i,
            tensor,
            reference,
        });
    }
    let report = compute_stats(&blocks, &methods, a.raw_bits)?;
    print_report(&report);
    Ok(())
}

fn weight_block(t: &TensorFile) -> Result<WeightBlock<f64>, Failure> {
    let d: Dims = t.dims();
    if d.h != 1 || d.w != 1 {
        return Err(
            Error::Domain(format!("weight tensor must be (C_out, n, 1, 1), found {d}")).into(),
        );
    }
    DctMatrix::<f64>::new(d.c)?;
    let w: Tensor<f64> = t.to_real();
    Ok(WeightBlock::new(d.n, d.c, w.into_data())?)
}

pub fn fuse_weights(a: FuseArgs) -> CmdResult {
    let input = read_tensor(&a.input).map_err(in_file(&a.input))?;
    let w = weight_block(&input)?;
    let n = w.n();
    let m = DctMatrix::<f64>::new(n)?;
    let fused = pipeline::fuse_weights(&w, &m)?;

    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let probe: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let direct = w.apply(&probe)?;
    let via_freq = apply_fused(&fused, &m.forward_1d(&probe)?)?;
    let residual = direct
        .iter()
        .zip(&via_freq)
        .map(|(p, q)| (p - q).abs())
        .fold(0.0, f64::max);

    let dims = input.dims();
    let out = Tensor::new(dims, fused.as_slice().iter().map(|&v| v as f32).collect())?;
    write_tensor(&TensorFile::Real(out), &a.output).map_err(in_file(&a.output))?;
    println!("c_out={}", w.c_out());
    println!("n={n}");
    println!("probe_seed={}", a.seed);
    println!("residual={residual:e}");
    println!("output={}", a.output.display());
    Ok(())
}
