#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string_view>
#include <vector>

#include "spur/matrix.hpp"

namespace spur {

// Handle to a node inside an ExprGraph. Only meaningful for the graph that
// produced it.
struct NodeId {
  std::size_t index = 0;
  friend auto operator<=>(const NodeId&, const NodeId&) = default;
};

enum class OpKind : std::uint8_t {
  kLeaf,
  kConstant,
  kAdd,
  kAddRow,
  kSub,
  kMul,
  kDiv,
  kScale,
  kAddScalar,
  kAbs,
  kSquare,
  kSqrt,
  kRelu,
  kRowSums,
  kColSums,
  kSum,
  kMean,
  kDivByScalar,
  kMatMul,
  kSoftmaxRows,
  kCrossEntropyMean,
  kLayerNormRows,
  kGatherRows,
  kAttention,
  kMeanPool,
};

std::string_view to_string(OpKind kind);

inline constexpr double kLayerNormEpsilon = 1e-5;

// Partial derivatives of a scalar loss with respect to requested leaves.
class Gradients {
 public:
  const Matrix& at(NodeId leaf) const;
  bool contains(NodeId leaf) const { return grads_.contains(leaf); }
  std::size_t size() const { return grads_.size(); }

 private:
  friend class ExprGraph;
  std::map<NodeId, Matrix> grads_;
};

// Append-only computation graph with eager forward evaluation and reverse-mode
// differentiation. Inputs of a node always have smaller ids, so the node
// order is a topological order. All arithmetic is double precision and every
// reduction runs in row-major order.
class ExprGraph {
 public:
  ExprGraph() = default;

  // Differentiable parameter.
  NodeId leaf(Matrix value);
  // Value that never receives a gradient (masks, inputs).
  NodeId constant(Matrix value);

  // Elementwise a + b; b may also be a 1×c row added to every row of a.
  NodeId add(NodeId a, NodeId b);
  NodeId sub(NodeId a, NodeId b);
  NodeId mul(NodeId a, NodeId b);
  NodeId div(NodeId a, NodeId b);
  NodeId scale(NodeId a, double factor);
  NodeId add_scalar(NodeId a, double offset);
  // d|x|/dx is taken as 0 at x = 0.
  NodeId abs(NodeId a);
  NodeId square(NodeId a);
  NodeId sqrt(NodeId a);
  // Derivative 0 at 0.
  NodeId relu(NodeId a);

  // r×c -> r×1.
  NodeId row_sums(NodeId a);
  // r×c -> 1×c.
  NodeId col_sums(NodeId a);
  NodeId sum(NodeId a);
  NodeId mean(NodeId a);
  // a / s for a 1×1 node s. A zero divisor yields a zero result with zero
  // gradient to both operands.
  NodeId div_by_scalar(NodeId a, NodeId s);

  NodeId matmul(NodeId a, NodeId b);
  NodeId softmax_rows(NodeId x);
  NodeId cross_entropy_mean(NodeId logits, std::span<const std::size_t> labels);
  // Per-row normalization with population variance and epsilon 1e-5, then
  // gain/bias (both 1×c).
  NodeId layer_norm_rows(NodeId x, NodeId gain, NodeId bias);

  // Row lookup: output row i is table row ids[i].
  NodeId gather_rows(NodeId table, std::span<const std::size_t> ids);
  // Scaled dot-product self-attention over consecutive blocks of seq_len rows.
  // q, k, v are (batch·seq_len)×d; heads split the columns evenly. Scores are
  // scaled by 1/sqrt(d/heads).
  NodeId attention(NodeId q, NodeId k, NodeId v, std::size_t seq_len, std::size_t heads);
  // Averages each block of seq_len consecutive rows: (batch·seq_len)×d -> batch×d.
  NodeId mean_pool(NodeId x, std::size_t seq_len);

  const Matrix& value(NodeId id) const;
  double scalar(NodeId id) const;
  OpKind kind(NodeId id) const;
  std::span<const NodeId> inputs(NodeId id) const;
  std::size_t size() const noexcept { return nodes_.size(); }

  // Reverse traversal from a 1×1 loss. Leaves the loss does not depend on get
  // an all-zero gradient.
  Gradients backward(NodeId loss, std::span<const NodeId> leaves) const;

 private:
  struct Node {
    OpKind kind = OpKind::kLeaf;
    std::vector<NodeId> inputs;
    Matrix value;
    bool needs_grad = false;
    double scalar = 0.0;
    std::size_t p0 = 0;
    std::size_t p1 = 0;
    std::vector<std::size_t> indices;
    std::vector<Matrix> saved;
  };

  const Node& node(NodeId id) const;
  NodeId push(Node n);
  NodeId unary(OpKind kind, NodeId a, Matrix value);
  void backprop(const Node& n, const Matrix& grad, std::vector<Matrix>& adjoints) const;

  std::vector<Node> nodes_;
};

}  // namespace spur
