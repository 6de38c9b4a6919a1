//! Criterion benchmarks for the centroidkit kernels; see `benches/`.
