#include "spur/trainer.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "spur/error.hpp"
#include "spur/format.hpp"
#include "spur/rng.hpp"

namespace spur {
namespace {

constexpr std::uint64_t kShuffleStream = 1;
constexpr std::size_t kEvalBatch = 256;

// Input batch of the requested rows, shaped for the model kind.
struct Batch {
  TokenGrid tokens;
  Matrix features;
  std::vector<std::size_t> labels;
};

Batch gather_batch(const Dataset& data, std::span<const std::size_t> rows) {
  Dataset picked = data.select(rows);
  return Batch{std::move(picked.tokens), std::move(picked.features), std::move(picked.labels)};
}

ForwardResult run_forward(ExprGraph& g, const ModelConfig& model, const BoundParams& bound,
                          const PruningState& masks, const Batch& batch) {
  if (model.kind == ModelKind::kTransformer) {
    return forward_transformer(g, model, bound, masks, batch.tokens);
  }
  return forward_mlp(g, model, bound, masks, batch.features);
}

Matrix effective_weight(const ParamTable& params, const PruningState& masks,
                        const std::string& name) {
  const Matrix& w = params.at(name).value;
  auto it = masks.masks.find(name);
  return it == masks.masks.end() ? w : hadamard(w, it->second.to_matrix());
}

}  // namespace

std::string_view to_string(Method m) { return m == Method::kImp ? "imp" : "imp_spur"; }

Method parse_method(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "imp") return Method::kImp;
  if (lower == "imp_spur" || lower == "imp+spur") return Method::kImpSpur;
  throw ConfigError("unknown method '" + std::string(text) + "' (expected imp or imp_spur)");
}

void ExperimentConfig::validate() const {
  model.validate();
  schedule.validate();
  lambda_schedule.validate();
  optimizer.validate();
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (eval_every <= 0) throw ConfigError("eval_every must be positive");
  const bool token_task = data.task != TaskKind::kBlobs;
  if (token_task != (model.kind == ModelKind::kTransformer)) {
    throw ConfigError("task '" + std::string(to_string(data.task)) +
                      "' does not fit model kind '" + std::string(to_string(model.kind)) +
                      "' (token tasks need a transformer, blobs an mlp)");
  }
  if (token_task) {
    if (data.len > model.max_seq) {
      throw ConfigError("data.len exceeds model.max_seq");
    }
    const std::size_t vocab = data.task == TaskKind::kMajority ? 2 : data.vocab;
    if (vocab > model.vocab) throw ConfigError("data.vocab exceeds model.vocab");
  } else if (data.dim != model.input_dim) {
    throw ConfigError("data.dim must equal model.input_dim for blobs");
  }
  const std::size_t classes = data.task == TaskKind::kBlobs ? data.classes : 2;
  if (classes != model.classes) {
    throw ConfigError("model.classes (" + std::to_string(model.classes) +
                      ") does not match the task's " + std::to_string(classes) + " classes");
  }
}

LambdaSchedule ExperimentConfig::effective_lambda_schedule() const {
  LambdaSchedule s = lambda_schedule;
  if (method == Method::kImp) s.lambda_final = 0.0;
  return s;
}

ExperimentConfig reference_experiment() {
  ExperimentConfig c;
  c.model.kind = ModelKind::kTransformer;
  c.model.layers = 2;
  c.model.hidden_dim = 32;
  c.model.heads = 2;
  c.model.vocab = 24;
  c.model.max_seq = 12;
  c.model.classes = 2;
  c.data.task = TaskKind::kDuplicate;
  c.data.n = 4096;
  c.data.len = 12;
  c.data.vocab = 24;
  c.method = Method::kImpSpur;
  c.schedule = PruningSchedule{1.0, 0.05, 500, 4500, 16, 6000};
  c.lambda_schedule = LambdaSchedule{10.0, 500, 4500};
  c.eval_every = 250;
  c.batch_size = 32;
  return c;
}

Dataset make_dataset(const ExperimentConfig& config) {
  const DataConfig& d = config.data;
  switch (d.task) {
    case TaskKind::kDuplicate:
      return gen_duplicate_task(config.seed, d.n, d.len, d.vocab, d.test_fraction);
    case TaskKind::kMajority:
      return gen_majority_task(config.seed, d.n, d.len, d.test_fraction);
    case TaskKind::kBlobs:
      return gen_blobs(config.seed, d.n, d.dim, d.classes, d.spread, d.test_fraction);
  }
  throw ConfigError("unknown task");
}

double evaluate(const ModelConfig& model, const ParamTable& params, const PruningState& masks,
                const Dataset& split) {
  if (split.size() == 0) throw ContractError("evaluate: empty split");
  std::size_t correct = 0;
  std::vector<std::size_t> rows;
  for (std::size_t start = 0; start < split.size(); start += kEvalBatch) {
    const std::size_t stop = std::min(split.size(), start + kEvalBatch);
    rows.resize(stop - start);
    std::iota(rows.begin(), rows.end(), start);
    const Batch batch = gather_batch(split, rows);
    ExprGraph g;
    BoundParams bound(g, params);
    const Matrix& logits = g.value(run_forward(g, model, bound, masks, batch).logits);
    for (std::size_t r = 0; r < logits.rows(); ++r) {
      auto row = logits.row(r);
      const auto best = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
      if (best == batch.labels[r]) ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(split.size());
}

RunRecord train(const ExperimentConfig& config, const Dataset& data) {
  config.validate();
  const Dataset train_split = data.subset(Split::kTrain);
  const Dataset test_split = data.subset(Split::kTest);
  if (train_split.size() == 0) throw ConfigError("dataset has no training examples");

  RunRecord record;
  record.params = init_model(config.model);
  ParamTable& params = record.params;
  const std::vector<std::string> prune_names = select_targets(params, TargetDomain::kAll);
  const std::vector<std::string> reg_names = select_targets(params, config.domain);
  PruningState state = initial_pruning_state(params, prune_names);
  AdamState adam = make_adam_state(params);
  const LambdaSchedule lambda_schedule = config.effective_lambda_schedule();
  const PruningSchedule& schedule = config.schedule;
  const std::int64_t total = schedule.total_steps;

  std::vector<std::size_t> order(train_split.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng shuffle_rng(derive_seed(config.seed, kShuffleStream));
  shuffle_rng.shuffle(std::span<std::size_t>(order));

  std::vector<std::size_t> rows(config.batch_size);
  auto batch_at = [&](std::int64_t t) {
    const std::size_t base = static_cast<std::size_t>(t) * config.batch_size;
    for (std::size_t i = 0; i < config.batch_size; ++i) rows[i] = order[(base + i) % order.size()];
    return gather_batch(train_split, rows);
  };

  for (std::int64_t t = 0;; ++t) {
    const bool eval_due = t % config.eval_every == 0 || t == total;
    if (t % schedule.cadence == 0 || eval_due) {
      state = pruning_event(state, params, t, schedule);
    }
    const Batch batch = batch_at(t);
    const double lambda = lambda_at(t, lambda_schedule);

    if (eval_due) {
      EvalRow row;
      row.step = t;
      row.density = state.current_density;
      row.lambda = lambda;
      ExprGraph g;
      BoundParams bound(g, params);
      const ForwardResult fwd = run_forward(g, config.model, bound, state, batch);
      row.train_l_ce = g.scalar(g.cross_entropy_mean(fwd.logits, batch.labels));
      double l_r = 0.0;
      for (const std::string& name : reg_names) {
        const double dev = deviance(effective_weight(params, state, name), config.variant);
        row.per_matrix_deviance.emplace_back(name, dev);
        l_r += dev;
      }
      row.train_l_r = l_r / static_cast<double>(reg_names.size());
      row.test_accuracy =
          test_split.size() == 0 ? 0.0 : evaluate(config.model, params, state, test_split);
      record.rows.push_back(std::move(row));
    }
    if (t >= total) break;

    ExprGraph g;
    BoundParams bound(g, params);
    const ForwardResult fwd = run_forward(g, config.model, bound, state, batch);
    NodeId loss = g.cross_entropy_mean(fwd.logits, batch.labels);
    if (lambda > 0.0) {
      std::vector<NodeId> targets;
      targets.reserve(reg_names.size());
      for (const std::string& name : reg_names) targets.push_back(fwd.effective.at(name));
      loss = g.add(loss, g.scale(regularization_loss_node(g, targets, config.variant), lambda));
    }
    const double loss_value = g.scalar(loss);
    if (!std::isfinite(loss_value)) {
      throw TrainingAborted("non-finite loss " + format_double(loss_value) + " at step " +
                            std::to_string(t));
    }
    const Gradients grads = g.backward(loss, bound.nodes());
    std::vector<Matrix> grad_list;
    grad_list.reserve(params.size());
    for (NodeId id : bound.nodes()) grad_list.push_back(grads.at(id));
    adam_step(params, grad_list, adam, config.optimizer, t + 1, &state);
  }
  record.masks = std::move(state);
  return record;
}

void write_jsonl(const RunRecord& record, std::ostream& out) {
  for (const EvalRow& row : record.rows) {
    nlohmann::ordered_json j;
    j["step"] = row.step;
    j["density"] = row.density;
    j["lambda"] = row.lambda;
    j["train_l_ce"] = row.train_l_ce;
    j["train_l_r"] = row.train_l_r;
    j["test_accuracy"] = row.test_accuracy;
    nlohmann::ordered_json dev = nlohmann::ordered_json::object();
    for (const auto& [name, value] : row.per_matrix_deviance) dev[name] = value;
    j["per_matrix_deviance"] = std::move(dev);
    out << j.dump() << '\n';
  }
}

std::string to_jsonl(const RunRecord& record) {
  std::ostringstream out;
  write_jsonl(record, out);
  return out.str();
}

}  // namespace spur
