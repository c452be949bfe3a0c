//! Criterion benchmarks for the mining and search kernels live in `benches/`.
