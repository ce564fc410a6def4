//! Criterion benchmarks for the anomaly-detection engine live in `benches/`.
