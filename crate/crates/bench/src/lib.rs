// Shared instance builders for the benchmarks live in benches/.
