#include <benchmark/benchmark.h>

#include <numeric>

#include "spur/data.hpp"
#include "spur/model.hpp"
#include "spur/optimizer.hpp"
#include "spur/pruner.hpp"
#include "spur/regularizer.hpp"
#include "spur/trainer.hpp"

namespace spur {
namespace {

struct Fixture {
  ExperimentConfig config = reference_experiment();
  ParamTable params = init_model(config.model);
  PruningState masks;
  TokenGrid tokens;
  std::vector<std::size_t> labels;

  Fixture() {
    masks = initial_pruning_state(params, select_targets(params, TargetDomain::kAll));
    PruningSchedule s = config.schedule;
    masks = pruning_event(masks, params, s.t_i + s.ramp_steps / 2, s);
    const Dataset data = gen_duplicate_task(0, 32, 12, 24);
    tokens = data.tokens;
    labels = data.labels;
  }
};

void BM_TransformerForward(benchmark::State& state) {
  Fixture f;
  for (auto _ : state) {
    ExprGraph g;
    BoundParams bound(g, f.params);
    auto fwd = forward_transformer(g, f.config.model, bound, f.masks, f.tokens);
    benchmark::DoNotOptimize(g.value(fwd.logits).values().data());
  }
}
BENCHMARK(BM_TransformerForward)->Unit(benchmark::kMillisecond);

// One optimizer step of the reference experiment: forward, L_ce + λ·L_R,
// backward through everything, Adam.
void BM_TrainStep(benchmark::State& state) {
  Fixture f;
  AdamState adam = make_adam_state(f.params);
  const auto names = select_targets(f.params, TargetDomain::kAll);
  std::int64_t step = 1;
  for (auto _ : state) {
    ExprGraph g;
    BoundParams bound(g, f.params);
    auto fwd = forward_transformer(g, f.config.model, bound, f.masks, f.tokens);
    NodeId loss = g.cross_entropy_mean(fwd.logits, f.labels);
    std::vector<NodeId> targets;
    for (const auto& n : names) targets.push_back(fwd.effective.at(n));
    loss = g.add(loss, g.scale(regularization_loss_node(g, targets, DevianceVariant::kSpur), 10.0));
    auto grads = g.backward(loss, bound.nodes());
    std::vector<Matrix> list;
    for (NodeId id : bound.nodes()) list.push_back(grads.at(id));
    adam_step(f.params, list, adam, f.config.optimizer, step++, &f.masks);
  }
}
BENCHMARK(BM_TrainStep)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace spur
