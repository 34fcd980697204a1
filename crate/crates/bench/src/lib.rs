//! Criterion benchmarks for the flow stepper and the soliton solver live in `benches/`.
