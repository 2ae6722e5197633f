//! Criterion benchmarks for the protocol hot paths; see `benches/protocol.rs`.
