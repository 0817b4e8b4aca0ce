//! The `zkimg` command line: plan, prove, verify, hash, apply and bench.
//!
//! Exit codes: 0 success, 1 verification rejected, 2 invalid input,
//! 3 infeasible memory limit, 4 internal constraint failure.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use zkimg::cost::{CommitModes, CostConfig, SegmentShape};
use zkimg::gadgets::SynthConfig;
use zkimg::image::{load_ppm, save_ppm};
use zkimg::ir::check_constraints;
use zkimg::pipeline::{plan_segments, run_pipeline_with, synthesize_segment, ChainBundle, MemoryLimit, PipelineSpec};
use zkimg::poseidon::hash_image;
use zkimg::{verify_chain, Fe, Image, PipelineError, TransformSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_REJECTED: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;
pub const EXIT_INTERNAL: i32 = 4;

#[derive(Parser, Debug)]
#[command(name = "zkimg", version, about = "Compile image-editing pipelines to Plonkish circuits and check hash-linked proofs")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// Peak-memory budget per segment (suffixes K, M, G, T; binary multiples).
    #[arg(long, global = true, default_value = "8GiB")]
    pub mem_limit: MemoryLimit,
    /// Blinding rows reserved below every lookup table.
    #[arg(long, global = true, default_value_t = 6, value_parser = clap::value_parser!(u32).range(1..))]
    pub blinding_rows: u32,
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "ZKIMG_THREADS", value_parser = clap::value_parser!(u32).range(1..))]
    pub threads: Option<u32>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Split a pipeline into segments and print their cost estimates.
    Plan {
        pipeline: PathBuf,
        /// Print JSON instead of text.
        #[arg(long)]
        json: bool,
    },
    /// Build and check every segment circuit and write a chain bundle.
    Prove {
        pipeline: PathBuf,
        image: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
        /// Also write a JSON summary of the bundle.
        #[arg(long)]
        json_dump: Option<PathBuf>,
    },
    /// Check a chain bundle.
    Verify {
        bundle: PathBuf,
        /// Require this source digest (64 hex characters).
        #[arg(long)]
        source_digest: Option<String>,
        /// Print the bundle summary as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Print the Poseidon digest of a PPM image.
    Hash { image: PathBuf },
    /// Apply a pipeline natively, without circuits.
    Apply {
        pipeline: PathBuf,
        image: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Build and check a single-transform segment and report its size as CSV.
    Bench {
        transform: String,
        /// Input size, `WxH`.
        size: String,
        /// Transform parameters, e.g. `f=2.0`; defaults depend on the size.
        #[arg(long)]
        params: Option<String>,
    },
}

struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Failure {
        Failure { code: EXIT_INPUT, message: message.into() }
    }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Failure {
        let code = match &e {
            PipelineError::InfeasibleLimit { .. } => EXIT_INFEASIBLE,
            PipelineError::Unsatisfied { .. } | PipelineError::Circuit(_) | PipelineError::Gadget(_) => EXIT_INTERNAL,
            PipelineError::Transform(zkimg::TransformError::Gadget(_)) => EXIT_INTERNAL,
            _ => EXIT_INPUT,
        };
        Failure { code, message: e.to_string() }
    }
}

type Out<'a> = &'a mut dyn Write;

/// Runs the CLI on `args` (including the program name) and returns the exit code.
pub fn run<I, T>(args: I, out: Out, err: Out) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { write!(err, "{text}") } else { write!(out, "{text}") };
            return code;
        }
    };
    if let Some(n) = cli.global.threads {
        // Only the first call in a process can size the global pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n as usize).build_global();
    }
    match dispatch(&cli, out) {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn dispatch(cli: &Cli, out: Out) -> Result<i32, Failure> {
    let g = &cli.global;
    let cost = CostConfig { blinding_rows: g.blinding_rows, ..CostConfig::default() };
    let synth = SynthConfig { blinding_rows: g.blinding_rows, ..SynthConfig::default() };
    match &cli.command {
        Command::Plan { pipeline, json } => plan(out, &read_pipeline(pipeline)?, g.mem_limit, &cost, *json),
        Command::Prove { pipeline, image, out: path, json_dump } => {
            let p = read_pipeline(pipeline)?;
            let img = read_image(image)?;
            prove(out, &p, &img, g.mem_limit, &cost, synth, path, json_dump.as_deref())
        }
        Command::Verify { bundle, source_digest, json } => verify(out, bundle, source_digest.as_deref(), *json),
        Command::Hash { image } => {
            let img = read_image(image)?;
            emit(out, format_args!("{}\n", hash_image(&img).to_hex()))?;
            Ok(EXIT_OK)
        }
        Command::Apply { pipeline, image, out: path } => {
            let p = read_pipeline(pipeline)?;
            let img = read_image(image)?;
            let result = p.apply_native(&img)?;
            write_file(path, &save_ppm(&result))?;
            emit(out, format_args!("wrote {}x{} image to {}\n", result.width(), result.height(), path.display()))?;
            Ok(EXIT_OK)
        }
        Command::Bench { transform, size, params } => bench(out, transform, size, params.as_deref(), &cost, synth),
    }
}

fn emit(out: Out, args: std::fmt::Arguments) -> Result<(), Failure> {
    out.write_fmt(args).and_then(|_| out.flush()).map_err(|e| Failure::input(format!("write failed: {e}")))
}

fn read_file(path: &Path) -> Result<Vec<u8>, Failure> {
    std::fs::read(path).map_err(|e| Failure::input(format!("cannot read {}: {e}", path.display())))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    std::fs::write(path, bytes).map_err(|e| Failure::input(format!("cannot write {}: {e}", path.display())))
}

fn read_pipeline(path: &Path) -> Result<PipelineSpec, Failure> {
    let bytes = read_file(path)?;
    let text = String::from_utf8(bytes).map_err(|_| Failure::input(format!("{} is not UTF-8", path.display())))?;
    PipelineSpec::parse(&text).map_err(|e| Failure { message: format!("{}: {e}", path.display()), ..e.into() })
}

fn read_image(path: &Path) -> Result<Image, Failure> {
    load_ppm(&read_file(path)?).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn mib(bytes: u64) -> f64 {
    bytes as f64 / (1u64 << 20) as f64
}

fn plan(out: Out, p: &PipelineSpec, limit: MemoryLimit, cost: &CostConfig, json: bool) -> Result<i32, Failure> {
    let segments = plan_segments(p, limit, cost)?;
    if json {
        #[derive(Serialize)]
        struct Plan<'a> {
            mem_limit: u64,
            segments: &'a [zkimg::Segment],
        }
        let v = serde_json::to_string(&Plan { mem_limit: limit.bytes(), segments: &segments }).expect("serializable");
        emit(out, format_args!("{v}\n"))?;
        return Ok(EXIT_OK);
    }
    emit(out, format_args!("{} segment(s) under a limit of {:.1} MiB\n", segments.len(), mib(limit.bytes())))?;
    for s in &segments {
        let e = &s.estimate;
        let names: Vec<String> = s.transforms.iter().map(|t| t.to_string()).collect();
        emit(
            out,
            format_args!(
                "segment {}: transforms {}..{} [{}], {}x{} -> {}x{}\n  rows {} (useful {}, hash {}, transforms {}), columns {} advice + {} fixed + {} instance, cells {}, est. memory {:.1} MiB\n",
                s.index,
                s.first,
                s.first + s.transforms.len(),
                names.join("; "),
                s.in_dims.0,
                s.in_dims.1,
                s.out_dims.0,
                s.out_dims.1,
                e.padded_rows,
                e.useful_rows,
                e.hash_rows,
                e.transform_rows,
                e.advice_columns,
                e.fixed_columns,
                e.instance_columns,
                e.estimated_cells,
                mib(e.estimated_peak_memory),
            ),
        )?;
    }
    Ok(EXIT_OK)
}

/// Peak resident set size of this process, where the platform reports it.
pub fn peak_rss_bytes() -> Option<u64> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    let line = status.lines().find(|l| l.starts_with("VmHWM:"))?;
    let kb: u64 = line.split_whitespace().nth(1)?.parse().ok()?;
    Some(kb * 1024)
}

#[allow(clippy::too_many_arguments)]
fn prove(
    out: Out,
    p: &PipelineSpec,
    img: &Image,
    limit: MemoryLimit,
    cost: &CostConfig,
    synth: SynthConfig,
    path: &Path,
    json_dump: Option<&Path>,
) -> Result<i32, Failure> {
    let start = Instant::now();
    let mut lines = Vec::new();
    let bundle = run_pipeline_with(img, p, limit, cost, synth, |s| {
        log::info!("segment {} checked", s.index);
        lines.push(format!(
            "segment {}: {} transform(s), rows {} (used {}), synth {} ms, check {} ms\n  h_in  {}\n  h_out {}\n",
            s.index,
            s.transforms.len(),
            s.rows,
            s.used_rows,
            s.synth_ms,
            s.check_ms,
            s.h_in,
            s.h_out
        ));
    })?;
    for l in &lines {
        emit(out, format_args!("{l}"))?;
    }
    write_file(path, &bundle.to_bytes())?;
    if let Some(j) = json_dump {
        write_file(j, serde_json::to_string_pretty(&bundle.to_json()).expect("serializable").as_bytes())?;
    }
    emit(out, format_args!("source {}\n", bundle.source_digest.to_hex()))?;
    emit(out, format_args!("wrote {} segment(s) to {}\n", bundle.segments.len(), path.display()))?;
    emit(out, format_args!("wall_ms {}\n", start.elapsed().as_millis()))?;
    if let Some(rss) = peak_rss_bytes() {
        emit(out, format_args!("peak_rss_bytes {rss}\n"))?;
    }
    Ok(EXIT_OK)
}

fn verify(out: Out, path: &Path, source: Option<&str>, json: bool) -> Result<i32, Failure> {
    let bytes = read_file(path)?;
    let bundle = ChainBundle::from_bytes(&bytes).map_err(|e| Failure::input(format!("malformed bundle: {e}")))?;
    let expected = source
        .map(|s| Fe::from_hex(s).map_err(|e| Failure::input(format!("--source-digest: {e}"))))
        .transpose()?;
    if json {
        emit(out, format_args!("{}\n", serde_json::to_string(&bundle.to_json()).expect("serializable")))?;
    }
    let report = verify_chain(&bundle);
    let mut reasons: Vec<String> = report.violations.iter().map(|v| v.to_string()).collect();
    if let Some(d) = expected {
        if d != bundle.source_digest {
            reasons.push(format!("source digest {} differs from the expected {}", bundle.source_digest.to_hex(), d.to_hex()));
        }
    }
    if reasons.is_empty() {
        emit(out, format_args!("accepted: {} segment(s), final digest {}\n", bundle.segments.len(), last_digest(&bundle)))?;
        Ok(EXIT_OK)
    } else {
        for r in &reasons {
            emit(out, format_args!("rejected: {r}\n"))?;
        }
        Ok(EXIT_REJECTED)
    }
}

fn last_digest(b: &ChainBundle) -> String {
    b.segments.last().and_then(|s| s.h_out()).map(|d| d.to_hex()).unwrap_or_default()
}

/// Parameters used by `bench` when none are given.
pub fn default_params(name: &str, (w, h): (u32, u32)) -> Option<String> {
    let (hw, hh) = ((w / 2).max(1), (h / 2).max(1));
    Some(match name {
        "crop" => format!("x={} y={} w={hw} h={hh}", w / 4, h / 4),
        "rotate" => "deg=90".into(),
        "flip" => "axis=horizontal".into(),
        "translate" => format!("dx={} dy={}", w / 4, h / 4),
        "resize" => format!("w={hw} h={hh}"),
        "censor" => format!("rect x={} y={} w={hw} h={hh}", w / 4, h / 4),
        "whitebalance" => "r=1.1 g=1.0 b=0.9".into(),
        "contrast" => "f=2.0".into(),
        "rgb2ycbcr" | "ycbcr2rgb" | "sharpen" | "blur" => String::new(),
        _ => return None,
    })
}

/// Deterministic test pattern.
pub fn bench_image(w: u32, h: u32) -> Image {
    Image::from_fn(w, h, |x, y, c| {
        let v = (x as u64 * 7919 + y as u64 * 104_729 + c as u64 * 31).wrapping_mul(2_654_435_761);
        (v >> 13) as u8
    })
}

fn parse_size(s: &str) -> Option<(u32, u32)> {
    let (w, h) = s.split_once('x')?;
    let (w, h): (u32, u32) = (w.parse().ok()?, h.parse().ok()?);
    (w > 0 && h > 0).then_some((w, h))
}

fn bench(out: Out, name: &str, size: &str, params: Option<&str>, cost: &CostConfig, synth: SynthConfig) -> Result<i32, Failure> {
    let dims = parse_size(size).ok_or_else(|| Failure::input(format!("invalid size `{size}`, expected WxH")))?;
    let defaults = default_params(name, dims).ok_or_else(|| {
        Failure::input(format!("unknown transform `{name}` (expected one of {})", TransformSpec::NAMES.join(", ")))
    })?;
    let text = format!("{name} {}", params.unwrap_or(&defaults));
    let t: TransformSpec = text.parse().map_err(|e| Failure::input(format!("`{text}`: {e}")))?;
    t.output_dims(dims).map_err(|e| Failure::input(e.to_string()))?;
    let img = bench_image(dims.0, dims.1);
    let ts = [t];
    let shape = SegmentShape::new(&ts, dims, CommitModes::BOTH).map_err(|e| Failure::input(e.to_string()))?;
    let (ks, est) = shape.optimize(cost);

    let t0 = Instant::now();
    let built = synthesize_segment(&ts, &img, &ks, CommitModes::BOTH, synth)?;
    let synth_ms = t0.elapsed().as_secs_f64() * 1e3;
    let c = &built.circuit;
    let t1 = Instant::now();
    let report = check_constraints(&c.layout, &c.witness, &c.instance).map_err(PipelineError::from)?;
    let check_ms = t1.elapsed().as_secs_f64() * 1e3;
    let st = c.layout.stats();
    let ratio = if est.transform_rows == 0 { f64::INFINITY } else { est.hash_rows as f64 / est.transform_rows as f64 };

    emit(
        out,
        format_args!(
            "transform,width,height,padded_rows,useful_rows,hash_rows,transform_rows,hash_ratio,advice_columns,fixed_columns,instance_columns,cells,gates,lookups,transform_gates,transform_lookups,est_memory_bytes,synth_ms,check_ms,satisfied\n"
        ),
    )?;
    emit(
        out,
        format_args!(
            "{},{},{},{},{},{},{},{:.3},{},{},{},{},{},{},{},{},{},{:.1},{:.1},{}\n",
            name,
            dims.0,
            dims.1,
            st.rows,
            est.useful_rows,
            est.hash_rows,
            est.transform_rows,
            ratio,
            st.advice_columns,
            st.fixed_with_selectors(),
            st.instance_columns,
            st.cells(),
            st.gates,
            st.lookups,
            est.transform_gates,
            est.transform_lookups,
            est.estimated_peak_memory,
            synth_ms,
            check_ms,
            report.satisfied,
        ),
    )?;
    Ok(if report.satisfied { EXIT_OK } else { EXIT_INTERNAL })
}
