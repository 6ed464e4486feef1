//! Bench-only crate; see `benches/workbench.rs`.
