use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FieldError {
    #[error("attempted to invert zero")]
    ZeroInverse,
    #[error("encoding is not a canonical field element")]
    NonCanonical,
    #[error("malformed hex field element")]
    BadHex,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CircuitError {
    #[error("maximum degree {0} is below the minimum of 3")]
    DegreeTooSmall(u32),
    #[error("gate `{name}` has degree {degree} (including selector), above the limit {max}")]
    DegreeExceeded { name: String, degree: u32, max: u32 },
    #[error("cell (row {row}, column {column}) is outside the grid")]
    OutOfGrid { row: i64, column: u32 },
    #[error("column {0} is not a fixed column")]
    NotFixedColumn(u32),
    #[error("column {column} has the wrong kind for this use: {detail}")]
    WrongColumnKind { column: u32, detail: &'static str },
    #[error("invalid lookup: {0}")]
    InvalidLookup(String),
    #[error("no gate with id {0}")]
    UnknownGate(usize),
    #[error("no lookup with id {0}")]
    UnknownLookup(usize),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GadgetError {
    #[error("range checks support 8 or 16 bits, not {0}")]
    UnsupportedWidth(u32),
    #[error("inputs and coefficients differ in length ({inputs} vs {coeffs})")]
    LengthMismatch { inputs: usize, coeffs: usize },
    #[error("clamp domain [{lo}, {hi}] is wider than 2^16 entries")]
    BoundTooWide { lo: i64, hi: i64 },
    #[error("cannot pack {0} bytes into one element (max 31)")]
    TooManyBytes(usize),
    #[error("divisor must be positive")]
    ZeroDivisor,
    #[error("hash input is empty")]
    EmptyInput,
    #[error("value {value} at {what} is outside the declared range")]
    OutOfRange { what: &'static str, value: String },
    #[error("region misuse: {0}")]
    Region(String),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TransformError {
    #[error("invalid parameters for {kind}: {detail}")]
    InvalidParams { kind: &'static str, detail: String },
    #[error("image of {got_w}x{got_h} does not match expected {want_w}x{want_h}")]
    DimensionMismatch { got_w: u32, got_h: u32, want_w: u32, want_h: u32 },
    #[error(transparent)]
    Gadget(#[from] GadgetError),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ImageError {
    #[error("malformed PPM header: {0}")]
    MalformedHeader(String),
    #[error("unsupported maxval {0} (only 255 is accepted)")]
    UnsupportedMaxval(u32),
    #[error("payload truncated: expected {expected} bytes, found {found}")]
    TruncatedPayload { expected: usize, found: usize },
    #[error("invalid image: {0}")]
    Invalid(String),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CodecError {
    #[error("bad magic bytes")]
    BadMagic,
    #[error("unsupported format version {0}")]
    UnsupportedVersion(u16),
    #[error("unexpected end of input")]
    Truncated,
    #[error("malformed data: {0}")]
    Malformed(String),
    #[error(transparent)]
    Field(#[from] FieldError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PipelineError {
    #[error("line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("pipeline has no transforms")]
    EmptyPipeline,
    #[error("transform {index} ({name}) is incompatible with its input: {detail}")]
    DimensionMismatch { index: usize, name: String, detail: String },
    #[error("transform {index} ({name}) needs ~{needed} bytes alone, above the limit of {limit}")]
    InfeasibleLimit { index: usize, name: String, needed: u64, limit: u64 },
    #[error("memory limit must be positive")]
    ZeroLimit,
    #[error("segment {segment} failed its constraint check: {detail}")]
    Unsatisfied { segment: usize, detail: String },
    #[error(transparent)]
    Transform(#[from] TransformError),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Gadget(#[from] GadgetError),
}
