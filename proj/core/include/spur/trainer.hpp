#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "spur/data.hpp"
#include "spur/model.hpp"
#include "spur/optimizer.hpp"
#include "spur/pruner.hpp"
#include "spur/regularizer.hpp"

namespace spur {

// kImp trains on cross-entropy alone; kImpSpur adds lambda(t)·L_R.
enum class Method : std::uint8_t { kImp, kImpSpur };

std::string_view to_string(Method m);
Method parse_method(std::string_view text);

struct DataConfig {
  TaskKind task = TaskKind::kDuplicate;
  std::size_t n = 4096;
  std::size_t len = 12;
  std::size_t vocab = 24;
  std::size_t dim = 2;
  std::size_t classes = 2;
  double spread = 1.0;
  double test_fraction = 0.2;
};

struct ExperimentConfig {
  ModelConfig model;
  DataConfig data;
  Method method = Method::kImpSpur;
  DevianceVariant variant = DevianceVariant::kSpur;
  // Matrices that carry the regularizer. Pruning always covers every
  // prunable matrix.
  TargetDomain domain = TargetDomain::kAll;
  PruningSchedule schedule;
  LambdaSchedule lambda_schedule;
  AdamConfig optimizer;
  std::size_t batch_size = 32;
  std::int64_t eval_every = 250;
  // Seeds data generation and batch order. model.seed seeds initialization.
  std::uint64_t seed = 0;

  void validate() const;
  // lambda_schedule with lambda_final forced to 0 for kImp.
  LambdaSchedule effective_lambda_schedule() const;
};

// The documented toy reference experiment: 2-layer d=32 transformer on the
// duplicate-token task, 6000 steps, density 1.0 → 0.05, λ_final = 10.
ExperimentConfig reference_experiment();

Dataset make_dataset(const ExperimentConfig& config);

struct EvalRow {
  std::int64_t step = 0;
  double density = 1.0;
  double lambda = 0.0;
  double train_l_ce = 0.0;
  double train_l_r = 0.0;
  double test_accuracy = 0.0;
  std::vector<std::pair<std::string, double>> per_matrix_deviance;
};

struct RunRecord {
  std::vector<EvalRow> rows;
  ParamTable params;
  PruningState masks;
};

// Accuracy of argmax predictions (ties go to the smaller class index).
// Throws ContractError for an empty split.
double evaluate(const ModelConfig& model, const ParamTable& params, const PruningState& masks,
                const Dataset& split);

// Full training run: pruning events every `cadence` steps (plus at every
// evaluation step and a forced final one at total_steps), Adam updates that
// skip masked entries, and one evaluation row every `eval_every` steps.
// Throws TrainingAborted on a non-finite loss.
RunRecord train(const ExperimentConfig& config, const Dataset& data);

// JSON Lines, one evaluation row per line with keys in the fixed order
// step, density, lambda, train_l_ce, train_l_r, test_accuracy,
// per_matrix_deviance.
void write_jsonl(const RunRecord& record, std::ostream& out);
std::string to_jsonl(const RunRecord& record);

}  // namespace spur
