//! Criterion benchmarks for the event engine and the exact oracle live in
//! `benches/`; this crate has no library code of its own.
