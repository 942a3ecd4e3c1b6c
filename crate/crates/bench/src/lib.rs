//! Criterion benchmarks for the numerical kernels of `qrad-core`; see `benches/`.
