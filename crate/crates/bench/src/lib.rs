//! Benchmark support crate; the measurable surface lives in `starkshell-core`.
