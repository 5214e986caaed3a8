#include <benchmark/benchmark.h>

#include "spur/graph.hpp"
#include "spur/matrix.hpp"
#include "spur/pruner.hpp"
#include "spur/regularizer.hpp"
#include "spur/rng.hpp"

namespace spur {
namespace {

Matrix random_matrix(std::size_t r, std::size_t c, std::uint64_t seed) {
  Rng rng(seed);
  Matrix m(r, c);
  for (double& v : m.values()) v = rng.uniform(-1.0, 1.0);
  return m;
}

// Shapes of the reference transformer: 384 token rows (batch 32 × len 12),
// d = 32, ffn = 128.
void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto k = static_cast<std::size_t>(state.range(1));
  const auto m = static_cast<std::size_t>(state.range(2));
  const Matrix a = random_matrix(n, k, 1), b = random_matrix(k, m, 2);
  for (auto _ : state) {
    Matrix c = matmul(a, b);
    benchmark::DoNotOptimize(c.values().data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(2 * n * k * m));
}
BENCHMARK(BM_Matmul)->Args({384, 32, 32})->Args({384, 32, 128})->Args({384, 128, 32});

void BM_MatmulTN(benchmark::State& state) {
  const Matrix a = random_matrix(384, 32, 1), g = random_matrix(384, 128, 2);
  for (auto _ : state) {
    Matrix c = matmul_tn(a, g);
    benchmark::DoNotOptimize(c.values().data());
  }
}
BENCHMARK(BM_MatmulTN);

void BM_AttentionForwardBackward(benchmark::State& state) {
  const Matrix q = random_matrix(384, 32, 1), k = random_matrix(384, 32, 2),
               v = random_matrix(384, 32, 3);
  for (auto _ : state) {
    ExprGraph g;
    const NodeId nq = g.leaf(q), nk = g.leaf(k), nv = g.leaf(v);
    const NodeId loss = g.sum(g.attention(nq, nk, nv, 12, 2));
    const std::vector<NodeId> leaves{nq, nk, nv};
    auto grads = g.backward(loss, leaves);
    benchmark::DoNotOptimize(grads.size());
  }
}
BENCHMARK(BM_AttentionForwardBackward);

void BM_DevianceNode(benchmark::State& state) {
  const Matrix w = random_matrix(32, 128, 4);
  for (auto _ : state) {
    ExprGraph g;
    const NodeId leaf = g.leaf(w);
    const NodeId loss = deviance_node(g, leaf, DevianceVariant::kSpur);
    const std::vector<NodeId> leaves{leaf};
    auto grads = g.backward(loss, leaves);
    benchmark::DoNotOptimize(grads.size());
  }
}
BENCHMARK(BM_DevianceNode);

void BM_ComputeMask(benchmark::State& state) {
  const Matrix w = random_matrix(32, 128, 5);
  for (auto _ : state) {
    Mask m = compute_mask(w, 0.05);
    benchmark::DoNotOptimize(m.bits().data());
  }
}
BENCHMARK(BM_ComputeMask);

}  // namespace
}  // namespace spur
