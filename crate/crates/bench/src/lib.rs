//! Criterion benchmarks for `boolgrain`; see `benches/`.
