//! Pipeline files, segment planning under a memory limit, segment circuits
//! with in-circuit hash commitments, and hash-linked chain bundles.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::codec::{Reader, Writer};
use crate::cost::{entry_shape, exit_shape, CommitModes, CostConfig, CostEstimate, SegmentShape};
use crate::error::{CodecError, PipelineError, TransformError};
use crate::field::Fe;
use crate::gadgets::{SynthConfig, Synthesized, Synthesizer, PACK_BYTES};
use crate::image::Image;
use crate::ir::{check_constraints, CircuitLayout, LayoutStats, SatisfactionReport, Violation, ViolationKind};
use crate::poseidon::{hash_gadget, hash_image};
use crate::transforms::{parse::tokens, PixelGrid, TransformSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Reveal {
    /// The final image ships in the bundle.
    Image,
    /// Only the final digest is published.
    Hash,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineSpec {
    pub source: (u32, u32),
    pub transforms: Vec<TransformSpec>,
    pub reveal: Reveal,
}

fn parse_err(line: usize, column: usize, message: impl Into<String>) -> PipelineError {
    PipelineError::Parse { line, column, message: message.into() }
}

fn parse_dims(s: &str) -> Option<(u32, u32)> {
    let (w, h) = s.split_once('x')?;
    let (w, h) = (w.parse().ok()?, h.parse().ok()?);
    (w > 0 && h > 0).then_some((w, h))
}

impl PipelineSpec {
    pub fn new(source: (u32, u32), transforms: Vec<TransformSpec>, reveal: Reveal) -> Result<PipelineSpec, PipelineError> {
        let p = PipelineSpec { source, transforms, reveal };
        p.dims_flow()?;
        Ok(p)
    }

    /// Parses a pipeline file: `source WxH`, one transform per line, then an
    /// optional `reveal image|hash` (default `image`). `#` starts a comment.
    pub fn parse(text: &str) -> Result<PipelineSpec, PipelineError> {
        let mut source = None;
        let mut reveal = None;
        let mut transforms = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("");
            let toks = tokens(line);
            let Some(&(col, head)) = toks.first() else { continue };
            if reveal.is_some() {
                return Err(parse_err(line_no, col, "nothing may follow the `reveal` line"));
            }
            match head {
                "source" => {
                    if source.is_some() || !transforms.is_empty() {
                        return Err(parse_err(line_no, col, "`source` must appear once, before any transform"));
                    }
                    let [_, (c, d)] = toks[..] else {
                        return Err(parse_err(line_no, col, "expected `source WxH`"));
                    };
                    source = Some(parse_dims(d).ok_or_else(|| parse_err(line_no, c, format!("invalid dimensions `{d}`")))?);
                }
                "reveal" => {
                    let [_, (c, v)] = toks[..] else {
                        return Err(parse_err(line_no, col, "expected `reveal image` or `reveal hash`"));
                    };
                    reveal = Some(match v {
                        "image" => Reveal::Image,
                        "hash" => Reveal::Hash,
                        _ => return Err(parse_err(line_no, c, format!("reveal must be `image` or `hash`, not `{v}`"))),
                    });
                }
                _ => {
                    if source.is_none() {
                        return Err(parse_err(line_no, col, "missing `source WxH` header"));
                    }
                    let t: TransformSpec = line.parse().map_err(|e: crate::transforms::ParseError| {
                        parse_err(line_no, e.column, e.message)
                    })?;
                    transforms.push(t);
                }
            }
        }
        let source = source.ok_or_else(|| parse_err(1, 1, "missing `source WxH` header"))?;
        PipelineSpec::new(source, transforms, reveal.unwrap_or(Reveal::Image))
    }

    /// Dimensions before each transform followed by the output dimensions.
    pub fn dims_flow(&self) -> Result<Vec<(u32, u32)>, PipelineError> {
        if self.transforms.is_empty() {
            return Err(PipelineError::EmptyPipeline);
        }
        let mut dims = vec![self.source];
        for (index, t) in self.transforms.iter().enumerate() {
            let d = t.output_dims(*dims.last().expect("nonempty")).map_err(|e| PipelineError::DimensionMismatch {
                index,
                name: t.name().into(),
                detail: e.to_string(),
            })?;
            dims.push(d);
        }
        Ok(dims)
    }

    pub fn output_dims(&self) -> Result<(u32, u32), PipelineError> {
        Ok(*self.dims_flow()?.last().expect("nonempty"))
    }

    /// Composition of the native transforms.
    pub fn apply_native(&self, img: &Image) -> Result<Image, PipelineError> {
        check_dims(img, self.source)?;
        let mut cur = img.clone();
        for t in &self.transforms {
            cur = t.apply_native(&cur)?;
        }
        Ok(cur)
    }
}

impl fmt::Display for PipelineSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "source {}x{}", self.source.0, self.source.1)?;
        for t in &self.transforms {
            writeln!(f, "{t}")?;
        }
        match self.reveal {
            Reveal::Image => writeln!(f, "reveal image"),
            Reveal::Hash => writeln!(f, "reveal hash"),
        }
    }
}

impl FromStr for PipelineSpec {
    type Err = PipelineError;

    fn from_str(s: &str) -> Result<PipelineSpec, PipelineError> {
        PipelineSpec::parse(s)
    }
}

fn check_dims(img: &Image, (w, h): (u32, u32)) -> Result<(), TransformError> {
    if img.dims() != (w, h) {
        return Err(TransformError::DimensionMismatch { got_w: img.width(), got_h: img.height(), want_w: w, want_h: h });
    }
    Ok(())
}

/// Peak-memory budget for one segment, in bytes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct MemoryLimit(u64);

impl MemoryLimit {
    pub fn new(bytes: u64) -> Result<MemoryLimit, PipelineError> {
        if bytes == 0 {
            return Err(PipelineError::ZeroLimit);
        }
        Ok(MemoryLimit(bytes))
    }

    pub fn bytes(self) -> u64 {
        self.0
    }
}

impl FromStr for MemoryLimit {
    type Err = String;

    /// Accepts a byte count with an optional `K`, `M`, `G` or `T` suffix
    /// (binary multiples; `KiB`, `KB` and `k` spellings are equivalent).
    fn from_str(s: &str) -> Result<MemoryLimit, String> {
        let s = s.trim();
        let split = s.find(|c: char| !c.is_ascii_digit()).unwrap_or(s.len());
        let (num, unit) = s.split_at(split);
        let n: u64 = num.parse().map_err(|_| format!("invalid memory size `{s}`"))?;
        let shift = match unit.trim().to_ascii_lowercase().as_str() {
            "" | "b" => 0,
            "k" | "kb" | "kib" => 10,
            "m" | "mb" | "mib" => 20,
            "g" | "gb" | "gib" => 30,
            "t" | "tb" | "tib" => 40,
            u => return Err(format!("unknown size suffix `{u}`")),
        };
        let bytes = n.checked_mul(1u64 << shift).ok_or_else(|| format!("memory size `{s}` overflows"))?;
        MemoryLimit::new(bytes).map_err(|e| e.to_string())
    }
}

/// A contiguous run of pipeline transforms proven by one circuit.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Segment {
    pub index: usize,
    /// Position of the first transform in the pipeline.
    pub first: usize,
    #[serde(serialize_with = "texts")]
    pub transforms: Vec<TransformSpec>,
    pub in_dims: (u32, u32),
    pub out_dims: (u32, u32),
    /// Packing factor per region.
    pub ks: Vec<usize>,
    pub estimate: CostEstimate,
}

fn texts<S: serde::Serializer>(ts: &[TransformSpec], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(ts.iter().map(|t| t.to_string()))
}

/// Greedy left-to-right packing: each segment grows while its optimized
/// estimate stays within `limit`.
pub fn plan_segments(p: &PipelineSpec, limit: MemoryLimit, cfg: &CostConfig) -> Result<Vec<Segment>, PipelineError> {
    let dims = p.dims_flow()?;
    let n = p.transforms.len();
    let mut out: Vec<Segment> = Vec::new();
    let mut i = 0;
    while i < n {
        let mut best = None;
        for j in i + 1..=n {
            let shape = SegmentShape::new(&p.transforms[i..j], dims[i], CommitModes::BOTH)?;
            let (ks, estimate) = shape.optimize(cfg);
            if estimate.estimated_peak_memory > limit.bytes() {
                if j == i + 1 {
                    return Err(PipelineError::InfeasibleLimit {
                        index: i,
                        name: p.transforms[i].name().into(),
                        needed: estimate.estimated_peak_memory,
                        limit: limit.bytes(),
                    });
                }
                break;
            }
            best = Some((j, ks, estimate));
        }
        let (j, ks, estimate) = best.expect("at least one transform fits");
        out.push(Segment {
            index: out.len(),
            first: i,
            transforms: p.transforms[i..j].to_vec(),
            in_dims: dims[i],
            out_dims: dims[j],
            ks,
            estimate,
        });
        i = j;
    }
    Ok(out)
}

/// A synthesized segment circuit and the image its witness produces.
pub struct BuiltSegment {
    pub circuit: Synthesized,
    pub output: Image,
}

/// Synthesizes `transforms` over `input`. With both commitments enabled the
/// instance is `[h_in, h_out]`.
pub fn synthesize_segment(
    transforms: &[TransformSpec],
    input: &Image,
    ks: &[usize],
    modes: CommitModes,
    cfg: SynthConfig,
) -> Result<BuiltSegment, PipelineError> {
    let shape = SegmentShape::new(transforms, input.dims(), modes)?;
    let k = |i: usize| ks.get(i).copied().unwrap_or(1);
    let mut sx = Synthesizer::new(cfg)?;

    sx.open_region(&entry_shape(input.dims()), k(0))?;
    let mut cells = Vec::with_capacity(input.data().len());
    let mut packed = Vec::with_capacity(input.data().len().div_ceil(PACK_BYTES));
    for chunk in input.data().chunks(PACK_BYTES) {
        let (c, e) = sx.op_pack_entry(0, chunk)?;
        cells.extend(c);
        packed.push(e);
    }
    sx.close_region()?;
    if modes.hash_input {
        let h = hash_gadget(&mut sx, &packed)?;
        sx.expose(h)?;
    }

    let mut grid = PixelGrid { width: input.width(), height: input.height(), cells };
    for (j, t) in transforms.iter().enumerate() {
        let (a, b) = (shape.transform_regions[j], shape.transform_regions[j + 1]);
        let tks: Vec<usize> = (a..b).map(k).collect();
        grid = t.synthesize(&mut sx, &grid, &tks)?;
    }

    if modes.hash_output {
        let exit = shape.regions.len() - 2;
        sx.open_region(&exit_shape(grid.dims()), k(exit))?;
        let mut packed = Vec::with_capacity(grid.cells.len().div_ceil(PACK_BYTES));
        for chunk in grid.cells.chunks(PACK_BYTES) {
            packed.push(sx.op_pack(0, chunk)?);
        }
        sx.close_region()?;
        let h = hash_gadget(&mut sx, &packed)?;
        sx.expose(h)?;
    }

    let data = grid
        .cells
        .iter()
        .map(|c| sx.value(*c).to_u64().filter(|v| *v < 256).map(|v| v as u8))
        .collect::<Option<Vec<u8>>>()
        .ok_or_else(|| PipelineError::Unsatisfied { segment: 0, detail: "output cell outside [0, 255]".into() })?;
    let output = Image::new(grid.width, grid.height, data)
        .map_err(|e| PipelineError::Unsatisfied { segment: 0, detail: e.to_string() })?;
    Ok(BuiltSegment { circuit: sx.finish()?, output })
}

/// Builds the circuit of a planned segment with both hash commitments.
pub fn build_segment(seg: &Segment, input: &Image, cfg: SynthConfig) -> Result<BuiltSegment, PipelineError> {
    check_dims(input, seg.in_dims)?;
    synthesize_segment(&seg.transforms, input, &seg.ks, CommitModes::BOTH, cfg)
}

/// The published record of one segment.
#[derive(Clone, Debug, PartialEq)]
pub struct SegmentRecord {
    pub transforms: Vec<TransformSpec>,
    pub layout: CircuitLayout,
    /// `[h_in, h_out]`.
    pub instance: Vec<Fe>,
    pub report: SatisfactionReport,
}

impl SegmentRecord {
    pub fn h_in(&self) -> Option<Fe> {
        self.instance.first().copied()
    }

    pub fn h_out(&self) -> Option<Fe> {
        self.instance.get(1).copied()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChainBundle {
    /// Trusted root, standing in for the capture device's signed digest.
    pub source_digest: Fe,
    pub segments: Vec<SegmentRecord>,
    pub final_image: Option<Image>,
}

const BUNDLE_MAGIC: &[u8; 4] = b"ZIMG";
pub const BUNDLE_VERSION: u16 = 1;

/// Progress of [`run_pipeline_with`], reported per segment.
#[derive(Clone, Debug, Serialize)]
pub struct SegmentSummary {
    pub index: usize,
    pub transforms: Vec<String>,
    pub rows: u32,
    pub used_rows: u64,
    pub h_in: String,
    pub h_out: String,
    pub synth_ms: u128,
    pub check_ms: u128,
}

/// Plans, builds and checks every segment of `p` on `img`.
pub fn run_pipeline(img: &Image, p: &PipelineSpec, limit: MemoryLimit) -> Result<ChainBundle, PipelineError> {
    run_pipeline_with(img, p, limit, &CostConfig::default(), SynthConfig::default(), |_| {})
}

pub fn run_pipeline_with(
    img: &Image,
    p: &PipelineSpec,
    limit: MemoryLimit,
    cost: &CostConfig,
    synth: SynthConfig,
    mut progress: impl FnMut(&SegmentSummary),
) -> Result<ChainBundle, PipelineError> {
    check_dims(img, p.source)?;
    let plan = plan_segments(p, limit, cost)?;
    let mut cur = img.clone();
    let mut segments = Vec::with_capacity(plan.len());
    for seg in &plan {
        let t0 = std::time::Instant::now();
        let built = build_segment(seg, &cur, synth).map_err(|e| match e {
            PipelineError::Unsatisfied { detail, .. } => PipelineError::Unsatisfied { segment: seg.index, detail },
            e => e,
        })?;
        let synth_ms = t0.elapsed().as_millis();
        let t1 = std::time::Instant::now();
        let c = &built.circuit;
        let report = check_constraints(&c.layout, &c.witness, &c.instance)?;
        let check_ms = t1.elapsed().as_millis();
        if !report.satisfied {
            let detail = report.violations.first().map(|v| v.to_string()).unwrap_or_default();
            return Err(PipelineError::Unsatisfied { segment: seg.index, detail });
        }
        let Synthesized { layout, instance, .. } = built.circuit;
        progress(&SegmentSummary {
            index: seg.index,
            transforms: seg.transforms.iter().map(|t| t.to_string()).collect(),
            rows: layout.rows(),
            used_rows: layout.used_rows(),
            h_in: instance[0].to_hex(),
            h_out: instance[1].to_hex(),
            synth_ms,
            check_ms,
        });
        segments.push(SegmentRecord { transforms: seg.transforms.clone(), layout, instance, report });
        cur = built.output;
    }
    Ok(ChainBundle {
        source_digest: hash_image(img),
        segments,
        final_image: (p.reveal == Reveal::Image).then_some(cur),
    })
}

fn chain_violation(kind: ViolationKind, index: usize, detail: String) -> Violation {
    Violation { kind, index, row: None, detail }
}

/// Accepts a bundle iff every segment reports satisfaction, adjacent digests
/// link, the first input digest is the source digest and a revealed image
/// hashes to the last output digest.
pub fn verify_chain(b: &ChainBundle) -> SatisfactionReport {
    let mut v = Vec::new();
    if b.segments.is_empty() {
        v.push(chain_violation(ViolationKind::Segment, 0, "bundle has no segments".into()));
    }
    for (i, s) in b.segments.iter().enumerate() {
        if !s.report.satisfied {
            v.push(chain_violation(ViolationKind::Segment, i, "segment constraint check failed".into()));
        }
        if s.instance.len() != 2 || s.layout.instance_slots().len() != 2 {
            v.push(chain_violation(ViolationKind::Segment, i, "segment must expose exactly [h_in, h_out]".into()));
        }
    }
    for (i, w) in b.segments.windows(2).enumerate() {
        if w[0].h_out() != w[1].h_in() {
            v.push(chain_violation(
                ViolationKind::Linkage,
                i + 1,
                format!("output digest of segment {i} does not match input digest of segment {}", i + 1),
            ));
        }
    }
    if let Some(first) = b.segments.first() {
        if first.h_in() != Some(b.source_digest) {
            v.push(chain_violation(ViolationKind::SourceDigest, 0, "segment 0 input digest is not the source digest".into()));
        }
    }
    if let (Some(img), Some(last)) = (&b.final_image, b.segments.last()) {
        if last.h_out() != Some(hash_image(img)) {
            v.push(chain_violation(
                ViolationKind::FinalImage,
                b.segments.len() - 1,
                "revealed image does not hash to the final output digest".into(),
            ));
        }
    }
    SatisfactionReport::from_violations(v)
}

fn write_report(w: &mut Writer, r: &SatisfactionReport) {
    w.u8(r.satisfied as u8);
    w.u32(r.violations.len() as u32);
    for v in &r.violations {
        w.u8(v.kind as u8);
        w.u64(v.index as u64);
        match v.row {
            Some(row) => {
                w.u8(1);
                w.u32(row);
            }
            None => w.u8(0),
        }
        w.str(&v.detail);
    }
}

const KINDS: [ViolationKind; 8] = [
    ViolationKind::Gate,
    ViolationKind::Lookup,
    ViolationKind::Copy,
    ViolationKind::Instance,
    ViolationKind::Segment,
    ViolationKind::Linkage,
    ViolationKind::SourceDigest,
    ViolationKind::FinalImage,
];

fn read_report(r: &mut Reader) -> Result<SatisfactionReport, CodecError> {
    let satisfied = match r.u8()? {
        0 => false,
        1 => true,
        b => return Err(CodecError::Malformed(format!("bad flag {b}"))),
    };
    let n = r.count(14)?;
    let mut violations = Vec::with_capacity(n);
    for _ in 0..n {
        let kind = *KINDS
            .get(r.u8()? as usize)
            .ok_or_else(|| CodecError::Malformed("unknown violation kind".into()))?;
        let index = r.u64()? as usize;
        let row = match r.u8()? {
            0 => None,
            1 => Some(r.u32()?),
            b => return Err(CodecError::Malformed(format!("bad flag {b}"))),
        };
        violations.push(Violation { kind, index, row, detail: r.str()? });
    }
    Ok(SatisfactionReport { satisfied, violations })
}

impl ChainBundle {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new();
        w.bytes(BUNDLE_MAGIC);
        w.u16(BUNDLE_VERSION);
        w.fe(&self.source_digest);
        w.u32(self.segments.len() as u32);
        for s in &self.segments {
            w.u32(s.transforms.len() as u32);
            for t in &s.transforms {
                w.str(&t.to_string());
            }
            w.len_prefixed(&s.layout.to_bytes());
            w.u32(s.instance.len() as u32);
            for x in &s.instance {
                w.fe(x);
            }
            write_report(&mut w, &s.report);
        }
        match &self.final_image {
            Some(img) => {
                w.u8(1);
                w.u32(img.width());
                w.u32(img.height());
                w.bytes(img.data());
            }
            None => w.u8(0),
        }
        w.into_bytes()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<ChainBundle, CodecError> {
        let mut r = Reader::new(bytes);
        if r.take(4)? != BUNDLE_MAGIC {
            return Err(CodecError::BadMagic);
        }
        let version = r.u16()?;
        if version != BUNDLE_VERSION {
            return Err(CodecError::UnsupportedVersion(version));
        }
        let source_digest = r.fe()?;
        let n = r.count(17)?;
        let mut segments = Vec::with_capacity(n);
        for _ in 0..n {
            let nt = r.count(4)?;
            let mut transforms = Vec::with_capacity(nt);
            for _ in 0..nt {
                let text = r.str()?;
                transforms.push(text.parse().map_err(|e| CodecError::Malformed(format!("transform `{text}`: {e}")))?);
            }
            let layout = CircuitLayout::from_bytes(r.len_prefixed()?)?;
            let ni = r.count(32)?;
            let instance = (0..ni).map(|_| r.fe()).collect::<Result<Vec<_>, _>>()?;
            let report = read_report(&mut r)?;
            segments.push(SegmentRecord { transforms, layout, instance, report });
        }
        let final_image = match r.u8()? {
            0 => None,
            1 => {
                let (w, h) = (r.u32()?, r.u32()?);
                let len = (w as u64 * h as u64 * 3) as usize;
                if len > r.remaining() {
                    return Err(CodecError::Truncated);
                }
                let data = r.take(len)?.to_vec();
                Some(Image::new(w, h, data).map_err(|e| CodecError::Malformed(e.to_string()))?)
            }
            b => return Err(CodecError::Malformed(format!("bad flag {b}"))),
        };
        r.finish()?;
        Ok(ChainBundle { source_digest, segments, final_image })
    }

    /// Human-readable summary; layouts appear as statistics only.
    pub fn to_json(&self) -> serde_json::Value {
        #[derive(Serialize)]
        struct Seg<'a> {
            transforms: Vec<String>,
            instance: Vec<String>,
            layout: LayoutStats,
            report: &'a SatisfactionReport,
        }
        #[derive(Serialize)]
        struct Final {
            width: u32,
            height: u32,
            digest: String,
        }
        #[derive(Serialize)]
        struct Dump<'a> {
            version: u16,
            source_digest: String,
            segments: Vec<Seg<'a>>,
            final_image: Option<Final>,
        }
        let dump = Dump {
            version: BUNDLE_VERSION,
            source_digest: self.source_digest.to_hex(),
            segments: self
                .segments
                .iter()
                .map(|s| Seg {
                    transforms: s.transforms.iter().map(|t| t.to_string()).collect(),
                    instance: s.instance.iter().map(|x| x.to_hex()).collect(),
                    layout: s.layout.stats(),
                    report: &s.report,
                })
                .collect(),
            final_image: self.final_image.as_ref().map(|img| Final {
                width: img.width(),
                height: img.height(),
                digest: hash_image(img).to_hex(),
            }),
        };
        serde_json::to_value(dump).expect("plain data serializes")
    }
}
