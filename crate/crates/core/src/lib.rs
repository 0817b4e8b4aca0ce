//! Compiles image-transformation pipelines into Plonkish circuits whose input
//! and output images are committed with in-circuit Poseidon hashes, and checks
//! hash-linked chains of such circuits.

pub mod codec;
pub mod cost;
pub mod error;
pub mod field;
pub mod gadgets;
pub mod image;
pub mod ir;
pub mod pipeline;
pub mod poseidon;
pub mod transforms;

pub use error::{CircuitError, CodecError, FieldError, GadgetError, ImageError, PipelineError, TransformError};
pub use field::Fe;
pub use ir::{check_constraints, CellRef, CircuitBuilder, CircuitLayout, SatisfactionReport, WitnessGrid};
pub use image::Image;
pub use pipeline::{plan_segments, run_pipeline, verify_chain, ChainBundle, MemoryLimit, PipelineSpec, Reveal, Segment};
pub use transforms::TransformSpec;
