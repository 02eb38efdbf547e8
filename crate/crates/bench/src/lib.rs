//! Criterion benchmarks for the flow LP, decomposition and serial dictatorship; see `benches/`.
