//! Benchmark-only crate; see `benches/encoders.rs`.
