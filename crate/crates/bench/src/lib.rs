//! Criterion benchmarks for the event engine, the monotone projection and
//! the bombardment recursion. Run with `cargo bench -p stickyflow-bench`.
