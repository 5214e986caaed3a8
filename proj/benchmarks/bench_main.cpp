#include <benchmark/benchmark.h>

// To run: ./build/benchmarks/spur_benchmarks --benchmark_filter=<regex>
BENCHMARK_MAIN();
