//! Criterion benchmarks for propagation, gradients and Wigner maps; see `benches/`.
