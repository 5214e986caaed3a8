#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "spur/graph.hpp"
#include "spur/params.hpp"
#include "spur/pruner.hpp"

namespace spur {

enum class ModelKind : std::uint8_t { kMlp, kTransformer };

std::string_view to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view text);

struct ModelConfig {
  ModelKind kind = ModelKind::kTransformer;
  std::size_t layers = 2;
  std::size_t hidden_dim = 32;
  std::size_t heads = 2;
  // 0 selects 4·hidden_dim.
  std::size_t ffn_dim = 0;
  std::size_t vocab = 24;
  std::size_t max_seq = 12;
  std::size_t classes = 2;
  // Feature width for the MLP.
  std::size_t input_dim = 2;
  std::uint64_t seed = 0;

  std::size_t effective_ffn_dim() const { return ffn_dim == 0 ? 4 * hidden_dim : ffn_dim; }
  void validate() const;
};

// Integer token ids, one sequence per row.
struct TokenGrid {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::size_t> ids;

  std::size_t at(std::size_t r, std::size_t c) const { return ids[r * cols + c]; }
  friend bool operator==(const TokenGrid&, const TokenGrid&) = default;
};

// Deterministic initialization from config.seed. Dense and embedding weights
// are Glorot-uniform, biases 0, norm gains 1.
ParamTable init_model(const ModelConfig& config);

// One graph leaf per parameter, aligned with the table order.
class BoundParams {
 public:
  BoundParams(ExprGraph& g, const ParamTable& params);

  NodeId node(std::string_view name) const;
  NodeId node(std::size_t index) const { return nodes_[index]; }
  const std::vector<NodeId>& nodes() const noexcept { return nodes_; }

 private:
  const ParamTable* params_;
  std::vector<NodeId> nodes_;
};

struct ForwardResult {
  NodeId logits;
  // Masked (effective) weight node of every prunable matrix, by name.
  std::map<std::string, NodeId> effective;
};

// Masked linear → relu per hidden layer, then an unmasked linear head.
ForwardResult forward_mlp(ExprGraph& g, const ModelConfig& config, const BoundParams& bound,
                          const PruningState& masks, const Matrix& batch);

// Post-norm encoder: token + positional embedding, then per layer multi-head
// attention (masked Q/K/V/O) with residual and layer norm, FFN (masked FF1/FF2,
// relu) with residual and layer norm; mean-pool over positions; linear head.
ForwardResult forward_transformer(ExprGraph& g, const ModelConfig& config,
                                  const BoundParams& bound, const PruningState& masks,
                                  const TokenGrid& tokens);

std::string layer_param_name(std::size_t layer, std::string_view suffix);

}  // namespace spur
