//! Criterion benchmarks for `toroskew`; see `benches/`.
