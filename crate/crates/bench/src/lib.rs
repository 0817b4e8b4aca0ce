//! Criterion benchmarks for zkimg live under `benches/`.
