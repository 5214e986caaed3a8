#include "spur/model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

#include "spur/error.hpp"
#include "spur/rng.hpp"

namespace spur {
namespace {

Matrix glorot(Rng& rng, std::size_t fan_in, std::size_t fan_out) {
  const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Matrix m(fan_in, fan_out);
  for (double& v : m.values()) v = rng.uniform(-a, a);
  return m;
}

NodeId maybe_masked(ExprGraph& g, const BoundParams& bound, const PruningState& masks,
                    const std::string& name, ForwardResult& result) {
  NodeId w = bound.node(name);
  auto it = masks.masks.find(name);
  if (it != masks.masks.end()) w = apply_mask(g, w, it->second);
  result.effective.emplace(name, w);
  return w;
}

NodeId linear(ExprGraph& g, NodeId x, NodeId w, NodeId b) {
  return g.add(g.matmul(x, w), b);
}

}  // namespace

std::string_view to_string(ModelKind kind) {
  return kind == ModelKind::kMlp ? "mlp" : "transformer";
}

ModelKind parse_model_kind(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "mlp") return ModelKind::kMlp;
  if (lower == "transformer") return ModelKind::kTransformer;
  throw ConfigError("unknown model kind '" + std::string(text) +
                    "' (expected mlp or transformer)");
}

void ModelConfig::validate() const {
  if (layers == 0) throw ConfigError("model.layers must be >= 1");
  if (hidden_dim == 0) throw ConfigError("model.hidden_dim must be >= 1");
  if (classes == 0) throw ConfigError("model.classes must be >= 1");
  if (kind == ModelKind::kTransformer) {
    if (heads == 0 || hidden_dim % heads != 0) {
      throw ConfigError("model.heads (" + std::to_string(heads) +
                        ") must divide model.hidden_dim (" + std::to_string(hidden_dim) + ")");
    }
    if (hidden_dim < 2) throw ConfigError("model.hidden_dim must be >= 2 for layer norm");
    if (vocab == 0) throw ConfigError("model.vocab must be >= 1");
    if (max_seq == 0) throw ConfigError("model.max_seq must be >= 1");
  } else if (input_dim == 0) {
    throw ConfigError("model.input_dim must be >= 1");
  }
}

std::string layer_param_name(std::size_t layer, std::string_view suffix) {
  return "layer" + std::to_string(layer) + "." + std::string(suffix);
}

ParamTable init_model(const ModelConfig& config) {
  config.validate();
  Rng rng(config.seed);
  ParamTable table;
  const std::size_t d = config.hidden_dim;
  auto zeros_row = [](std::size_t n) { return Matrix(1, n, 0.0); };
  auto ones_row = [](std::size_t n) { return Matrix(1, n, 1.0); };

  if (config.kind == ModelKind::kMlp) {
    std::size_t in = config.input_dim;
    for (std::size_t l = 0; l < config.layers; ++l) {
      const int li = static_cast<int>(l);
      table.add(layer_param_name(l, "dense"), Role::kDense, li, glorot(rng, in, d));
      table.add(layer_param_name(l, "dense_bias"), Role::kBias, li, zeros_row(d));
      in = d;
    }
  } else {
    const std::size_t f = config.effective_ffn_dim();
    table.add("embedding", Role::kEmbedding, -1, glorot(rng, config.vocab, d));
    table.add("positional", Role::kPositional, -1, glorot(rng, config.max_seq, d));
    for (std::size_t l = 0; l < config.layers; ++l) {
      const int li = static_cast<int>(l);
      table.add(layer_param_name(l, "q"), Role::kQ, li, glorot(rng, d, d));
      table.add(layer_param_name(l, "q_bias"), Role::kBias, li, zeros_row(d));
      table.add(layer_param_name(l, "k"), Role::kK, li, glorot(rng, d, d));
      table.add(layer_param_name(l, "k_bias"), Role::kBias, li, zeros_row(d));
      table.add(layer_param_name(l, "v"), Role::kV, li, glorot(rng, d, d));
      table.add(layer_param_name(l, "v_bias"), Role::kBias, li, zeros_row(d));
      table.add(layer_param_name(l, "o"), Role::kO, li, glorot(rng, d, d));
      table.add(layer_param_name(l, "o_bias"), Role::kBias, li, zeros_row(d));
      table.add(layer_param_name(l, "ln1_gain"), Role::kNormGain, li, ones_row(d));
      table.add(layer_param_name(l, "ln1_bias"), Role::kNormBias, li, zeros_row(d));
      table.add(layer_param_name(l, "ff1"), Role::kFF1, li, glorot(rng, d, f));
      table.add(layer_param_name(l, "ff1_bias"), Role::kBias, li, zeros_row(f));
      table.add(layer_param_name(l, "ff2"), Role::kFF2, li, glorot(rng, f, d));
      table.add(layer_param_name(l, "ff2_bias"), Role::kBias, li, zeros_row(d));
      table.add(layer_param_name(l, "ln2_gain"), Role::kNormGain, li, ones_row(d));
      table.add(layer_param_name(l, "ln2_bias"), Role::kNormBias, li, zeros_row(d));
    }
  }
  table.add("head", Role::kHead, -1, glorot(rng, d, config.classes));
  table.add("head_bias", Role::kBias, -1, zeros_row(config.classes));
  return table;
}

BoundParams::BoundParams(ExprGraph& g, const ParamTable& params) : params_(&params) {
  nodes_.reserve(params.size());
  for (const Param& p : params) nodes_.push_back(g.leaf(p.value));
}

NodeId BoundParams::node(std::string_view name) const {
  if (auto i = params_->index_of(name)) return nodes_[*i];
  throw IntegrityError("no bound parameter named '" + std::string(name) + "'");
}

ForwardResult forward_mlp(ExprGraph& g, const ModelConfig& config, const BoundParams& bound,
                          const PruningState& masks, const Matrix& batch) {
  if (batch.cols() != config.input_dim) {
    throw ShapeError("forward_mlp: batch " + shape_string(batch) + " does not match input dim " +
                     std::to_string(config.input_dim));
  }
  ForwardResult result;
  NodeId x = g.constant(batch);
  for (std::size_t l = 0; l < config.layers; ++l) {
    const NodeId w = maybe_masked(g, bound, masks, layer_param_name(l, "dense"), result);
    x = g.relu(linear(g, x, w, bound.node(layer_param_name(l, "dense_bias"))));
  }
  result.logits = linear(g, x, bound.node("head"), bound.node("head_bias"));
  return result;
}

ForwardResult forward_transformer(ExprGraph& g, const ModelConfig& config,
                                  const BoundParams& bound, const PruningState& masks,
                                  const TokenGrid& tokens) {
  const std::size_t len = tokens.cols;
  if (len == 0 || len > config.max_seq) {
    throw InputError("forward_transformer: sequence length " + std::to_string(len) +
                     " outside [1, " + std::to_string(config.max_seq) + "]");
  }
  for (std::size_t id : tokens.ids) {
    if (id >= config.vocab) {
      throw InputError("forward_transformer: token id " + std::to_string(id) +
                       " outside vocabulary of " + std::to_string(config.vocab));
    }
  }
  std::vector<std::size_t> positions(tokens.ids.size());
  for (std::size_t i = 0; i < positions.size(); ++i) positions[i] = i % len;

  ForwardResult result;
  NodeId x = g.add(g.gather_rows(bound.node("embedding"), tokens.ids),
                   g.gather_rows(bound.node("positional"), positions));
  for (std::size_t l = 0; l < config.layers; ++l) {
    auto w = [&](std::string_view role) {
      return maybe_masked(g, bound, masks, layer_param_name(l, role), result);
    };
    auto b = [&](std::string_view suffix) { return bound.node(layer_param_name(l, suffix)); };

    const NodeId q = linear(g, x, w("q"), b("q_bias"));
    const NodeId k = linear(g, x, w("k"), b("k_bias"));
    const NodeId v = linear(g, x, w("v"), b("v_bias"));
    const NodeId attn = g.attention(q, k, v, len, config.heads);
    const NodeId proj = linear(g, attn, w("o"), b("o_bias"));
    x = g.layer_norm_rows(g.add(x, proj), b("ln1_gain"), b("ln1_bias"));

    const NodeId hidden = g.relu(linear(g, x, w("ff1"), b("ff1_bias")));
    const NodeId ffn = linear(g, hidden, w("ff2"), b("ff2_bias"));
    x = g.layer_norm_rows(g.add(x, ffn), b("ln2_gain"), b("ln2_bias"));
  }
  const NodeId pooled = g.mean_pool(x, len);
  result.logits = linear(g, pooled, bound.node("head"), bound.node("head_bias"));
  return result;
}

}  // namespace spur
