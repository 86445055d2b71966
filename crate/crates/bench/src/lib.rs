//! Criterion benchmarks for perpsim; see `benches/`.
