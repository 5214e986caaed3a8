#include "spur/graph.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "spur/error.hpp"

namespace spur {
namespace {

void accumulate(std::vector<Matrix>& adjoints, NodeId id, Matrix grad) {
  Matrix& slot = adjoints[id.index];
  if (slot.empty() && slot.rows() == 0) {
    slot = std::move(grad);
  } else {
    add_into(slot, grad);
  }
}

void require_same_shape(const char* op, const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(op) + ": shapes " + shape_string(a) + " and " +
                     shape_string(b) + " differ");
  }
}

Matrix map_values(const Matrix& a, auto fn) {
  Matrix out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = fn(a[i]);
  return out;
}

Matrix softmax_of(const Matrix& x) {
  Matrix y(x.rows(), x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto in = x.row(r);
    auto out = y.row(r);
    double mx = in.empty() ? 0.0 : in[0];
    for (double v : in) mx = std::max(mx, v);
    double total = 0.0;
    for (std::size_t c = 0; c < in.size(); ++c) {
      out[c] = std::exp(in[c] - mx);
      total += out[c];
    }
    for (double& v : out) v /= total;
  }
  return y;
}

// dx = y ⊙ (g − rowdot(g, y)) for y = softmax(x).
void softmax_backward_row(std::span<const double> y, std::span<const double> g,
                          std::span<double> dx) {
  double dot = 0.0;
  for (std::size_t c = 0; c < y.size(); ++c) dot += g[c] * y[c];
  for (std::size_t c = 0; c < y.size(); ++c) dx[c] = y[c] * (g[c] - dot);
}

}  // namespace

std::string_view to_string(OpKind kind) {
  switch (kind) {
    case OpKind::kLeaf: return "leaf";
    case OpKind::kConstant: return "constant";
    case OpKind::kAdd: return "add";
    case OpKind::kAddRow: return "add_row";
    case OpKind::kSub: return "sub";
    case OpKind::kMul: return "mul";
    case OpKind::kDiv: return "div";
    case OpKind::kScale: return "scale";
    case OpKind::kAddScalar: return "add_scalar";
    case OpKind::kAbs: return "abs";
    case OpKind::kSquare: return "square";
    case OpKind::kSqrt: return "sqrt";
    case OpKind::kRelu: return "relu";
    case OpKind::kRowSums: return "row_sums";
    case OpKind::kColSums: return "col_sums";
    case OpKind::kSum: return "sum";
    case OpKind::kMean: return "mean";
    case OpKind::kDivByScalar: return "div_by_scalar";
    case OpKind::kMatMul: return "matmul";
    case OpKind::kSoftmaxRows: return "softmax_rows";
    case OpKind::kCrossEntropyMean: return "cross_entropy_mean";
    case OpKind::kLayerNormRows: return "layer_norm_rows";
    case OpKind::kGatherRows: return "gather_rows";
    case OpKind::kAttention: return "attention";
    case OpKind::kMeanPool: return "mean_pool";
  }
  return "unknown";
}

const Matrix& Gradients::at(NodeId leaf) const {
  auto it = grads_.find(leaf);
  if (it == grads_.end()) {
    throw ContractError("no gradient recorded for node " + std::to_string(leaf.index));
  }
  return it->second;
}

const ExprGraph::Node& ExprGraph::node(NodeId id) const {
  if (id.index >= nodes_.size()) {
    throw ContractError("node id " + std::to_string(id.index) + " is not in this graph");
  }
  return nodes_[id.index];
}

NodeId ExprGraph::push(Node n) {
  for (NodeId in : n.inputs) n.needs_grad = n.needs_grad || node(in).needs_grad;
  nodes_.push_back(std::move(n));
  return NodeId{nodes_.size() - 1};
}

NodeId ExprGraph::unary(OpKind kind, NodeId a, Matrix value) {
  Node n;
  n.kind = kind;
  n.inputs = {a};
  n.value = std::move(value);
  return push(std::move(n));
}

const Matrix& ExprGraph::value(NodeId id) const { return node(id).value; }

double ExprGraph::scalar(NodeId id) const {
  const Matrix& v = node(id).value;
  if (v.rows() != 1 || v.cols() != 1) {
    throw ContractError("node " + std::to_string(id.index) + " is " + shape_string(v) +
                        ", not scalar");
  }
  return v[0];
}

OpKind ExprGraph::kind(NodeId id) const { return node(id).kind; }

std::span<const NodeId> ExprGraph::inputs(NodeId id) const { return node(id).inputs; }

NodeId ExprGraph::leaf(Matrix value) {
  Node n;
  n.kind = OpKind::kLeaf;
  n.value = std::move(value);
  n.needs_grad = true;
  return push(std::move(n));
}

NodeId ExprGraph::constant(Matrix value) {
  Node n;
  n.kind = OpKind::kConstant;
  n.value = std::move(value);
  return push(std::move(n));
}

NodeId ExprGraph::add(NodeId a, NodeId b) {
  const Matrix& x = value(a);
  const Matrix& y = value(b);
  Node n;
  n.inputs = {a, b};
  if (x.same_shape(y)) {
    n.kind = OpKind::kAdd;
    n.value = x;
    add_into(n.value, y);
  } else if (y.rows() == 1 && y.cols() == x.cols()) {
    n.kind = OpKind::kAddRow;
    n.value = x;
    for (std::size_t r = 0; r < x.rows(); ++r) {
      auto row = n.value.row(r);
      for (std::size_t c = 0; c < x.cols(); ++c) row[c] += y[c];
    }
  } else {
    throw ShapeError("add: cannot broadcast " + shape_string(y) + " onto " + shape_string(x));
  }
  return push(std::move(n));
}

NodeId ExprGraph::sub(NodeId a, NodeId b) {
  const Matrix& x = value(a);
  const Matrix& y = value(b);
  require_same_shape("sub", x, y);
  Matrix out(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] - y[i];
  Node n;
  n.kind = OpKind::kSub;
  n.inputs = {a, b};
  n.value = std::move(out);
  return push(std::move(n));
}

NodeId ExprGraph::mul(NodeId a, NodeId b) {
  const Matrix& x = value(a);
  const Matrix& y = value(b);
  require_same_shape("mul", x, y);
  Node n;
  n.kind = OpKind::kMul;
  n.inputs = {a, b};
  n.value = hadamard(x, y);
  return push(std::move(n));
}

NodeId ExprGraph::div(NodeId a, NodeId b) {
  const Matrix& x = value(a);
  const Matrix& y = value(b);
  require_same_shape("div", x, y);
  Matrix out(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] / y[i];
  Node n;
  n.kind = OpKind::kDiv;
  n.inputs = {a, b};
  n.value = std::move(out);
  return push(std::move(n));
}

NodeId ExprGraph::scale(NodeId a, double factor) {
  NodeId id = unary(OpKind::kScale, a, scaled(value(a), factor));
  nodes_[id.index].scalar = factor;
  return id;
}

NodeId ExprGraph::add_scalar(NodeId a, double offset) {
  NodeId id = unary(OpKind::kAddScalar, a,
                    map_values(value(a), [offset](double v) { return v + offset; }));
  nodes_[id.index].scalar = offset;
  return id;
}

NodeId ExprGraph::abs(NodeId a) { return unary(OpKind::kAbs, a, spur::abs(value(a))); }

NodeId ExprGraph::square(NodeId a) {
  return unary(OpKind::kSquare, a, map_values(value(a), [](double v) { return v * v; }));
}

NodeId ExprGraph::sqrt(NodeId a) {
  return unary(OpKind::kSqrt, a, map_values(value(a), [](double v) { return std::sqrt(v); }));
}

NodeId ExprGraph::relu(NodeId a) {
  return unary(OpKind::kRelu, a,
               map_values(value(a), [](double v) { return v > 0.0 ? v : 0.0; }));
}

NodeId ExprGraph::row_sums(NodeId a) {
  const Matrix& x = value(a);
  Matrix out(x.rows(), 1);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    double acc = 0.0;
    for (double v : x.row(r)) acc += v;
    out[r] = acc;
  }
  return unary(OpKind::kRowSums, a, std::move(out));
}

NodeId ExprGraph::col_sums(NodeId a) {
  const Matrix& x = value(a);
  Matrix out(1, x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto row = x.row(r);
    for (std::size_t c = 0; c < x.cols(); ++c) out[c] += row[c];
  }
  return unary(OpKind::kColSums, a, std::move(out));
}

NodeId ExprGraph::sum(NodeId a) {
  return unary(OpKind::kSum, a, Matrix(1, 1, spur::sum(value(a))));
}

NodeId ExprGraph::mean(NodeId a) {
  const Matrix& x = value(a);
  if (x.size() == 0) throw ContractError("mean of an empty matrix");
  return unary(OpKind::kMean, a, Matrix(1, 1, spur::sum(x) / static_cast<double>(x.size())));
}

NodeId ExprGraph::div_by_scalar(NodeId a, NodeId s) {
  const Matrix& x = value(a);
  const double d = scalar(s);
  Node n;
  n.kind = OpKind::kDivByScalar;
  n.inputs = {a, s};
  n.value = Matrix(x.rows(), x.cols());
  if (d != 0.0) {
    for (std::size_t i = 0; i < x.size(); ++i) n.value[i] = x[i] / d;
  }
  return push(std::move(n));
}

NodeId ExprGraph::matmul(NodeId a, NodeId b) {
  Node n;
  n.kind = OpKind::kMatMul;
  n.inputs = {a, b};
  n.value = spur::matmul(value(a), value(b));
  return push(std::move(n));
}

NodeId ExprGraph::softmax_rows(NodeId x) {
  return unary(OpKind::kSoftmaxRows, x, softmax_of(value(x)));
}

NodeId ExprGraph::cross_entropy_mean(NodeId logits, std::span<const std::size_t> labels) {
  const Matrix& x = value(logits);
  if (labels.size() != x.rows()) {
    throw ShapeError("cross_entropy_mean: " + std::to_string(labels.size()) +
                     " labels for logits " + shape_string(x));
  }
  if (x.rows() == 0) throw ContractError("cross_entropy_mean: empty batch");
  for (std::size_t label : labels) {
    if (label >= x.cols()) {
      throw InputError("cross_entropy_mean: label " + std::to_string(label) +
                       " out of range for " + std::to_string(x.cols()) + " classes");
    }
  }
  Matrix probs = softmax_of(x);
  double total = 0.0;
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto row = x.row(r);
    double mx = row[0];
    for (double v : row) mx = std::max(mx, v);
    double z = 0.0;
    for (double v : row) z += std::exp(v - mx);
    total += (mx + std::log(z)) - row[labels[r]];
  }
  Node n;
  n.kind = OpKind::kCrossEntropyMean;
  n.inputs = {logits};
  n.value = Matrix(1, 1, total / static_cast<double>(x.rows()));
  n.indices.assign(labels.begin(), labels.end());
  n.saved.push_back(std::move(probs));
  return push(std::move(n));
}

NodeId ExprGraph::layer_norm_rows(NodeId x, NodeId gain, NodeId bias) {
  const Matrix& in = value(x);
  const Matrix& g = value(gain);
  const Matrix& b = value(bias);
  if (in.cols() < 2) throw ShapeError("layer_norm_rows: needs at least 2 columns");
  if (g.rows() != 1 || g.cols() != in.cols() || !g.same_shape(b)) {
    throw ShapeError("layer_norm_rows: gain " + shape_string(g) + " / bias " +
                     shape_string(b) + " do not match input " + shape_string(in));
  }
  const std::size_t rows = in.rows(), cols = in.cols();
  Matrix xhat(rows, cols);
  Matrix inv_std(rows, 1);
  Matrix out(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    auto row = in.row(r);
    double mu = 0.0;
    for (double v : row) mu += v;
    mu /= static_cast<double>(cols);
    double var = 0.0;
    for (double v : row) var += (v - mu) * (v - mu);
    var /= static_cast<double>(cols);
    const double is = 1.0 / std::sqrt(var + kLayerNormEpsilon);
    inv_std[r] = is;
    for (std::size_t c = 0; c < cols; ++c) {
      xhat(r, c) = (row[c] - mu) * is;
      out(r, c) = xhat(r, c) * g[c] + b[c];
    }
  }
  Node n;
  n.kind = OpKind::kLayerNormRows;
  n.inputs = {x, gain, bias};
  n.value = std::move(out);
  n.saved.push_back(std::move(xhat));
  n.saved.push_back(std::move(inv_std));
  return push(std::move(n));
}

NodeId ExprGraph::gather_rows(NodeId table, std::span<const std::size_t> ids) {
  const Matrix& t = value(table);
  Matrix out(ids.size(), t.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] >= t.rows()) {
      throw InputError("gather_rows: index " + std::to_string(ids[i]) + " outside table of " +
                       std::to_string(t.rows()) + " rows");
    }
    std::copy_n(t.row(ids[i]).begin(), t.cols(), out.row(i).begin());
  }
  Node n;
  n.kind = OpKind::kGatherRows;
  n.inputs = {table};
  n.value = std::move(out);
  n.indices.assign(ids.begin(), ids.end());
  return push(std::move(n));
}

NodeId ExprGraph::attention(NodeId q, NodeId k, NodeId v, std::size_t seq_len,
                            std::size_t heads) {
  const Matrix& Q = value(q);
  const Matrix& K = value(k);
  const Matrix& V = value(v);
  if (!Q.same_shape(K) || !Q.same_shape(V)) {
    throw ShapeError("attention: q " + shape_string(Q) + ", k " + shape_string(K) + ", v " +
                     shape_string(V) + " must agree");
  }
  if (seq_len == 0 || Q.rows() % seq_len != 0) {
    throw ShapeError("attention: " + std::to_string(Q.rows()) +
                     " rows are not a multiple of sequence length " + std::to_string(seq_len));
  }
  if (heads == 0 || Q.cols() % heads != 0) {
    throw ShapeError("attention: width " + std::to_string(Q.cols()) +
                     " not divisible by heads " + std::to_string(heads));
  }
  const std::size_t d = Q.cols();
  const std::size_t dh = d / heads;
  const std::size_t batch = Q.rows() / seq_len;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  // probs holds one seq_len×seq_len block per (sequence, head), stacked.
  Matrix probs(batch * heads * seq_len, seq_len);
  Matrix out(Q.rows(), d);
  for (std::size_t s = 0; s < batch; ++s) {
    const std::size_t base = s * seq_len;
    for (std::size_t h = 0; h < heads; ++h) {
      const std::size_t off = h * dh;
      const std::size_t pbase = (s * heads + h) * seq_len;
      for (std::size_t i = 0; i < seq_len; ++i) {
        auto prow = probs.row(pbase + i);
        const double* qi = Q.ptr(base + i, off);
        for (std::size_t j = 0; j < seq_len; ++j) {
          const double* kj = K.ptr(base + j, off);
          double acc = 0.0;
          for (std::size_t c = 0; c < dh; ++c) acc += qi[c] * kj[c];
          prow[j] = acc * scale;
        }
        double mx = prow[0];
        for (double p : prow) mx = std::max(mx, p);
        double total = 0.0;
        for (double& p : prow) {
          p = std::exp(p - mx);
          total += p;
        }
        for (double& p : prow) p /= total;
        double* oi = out.ptr(base + i, off);
        for (std::size_t j = 0; j < seq_len; ++j) {
          const double w = prow[j];
          const double* vj = V.ptr(base + j, off);
          for (std::size_t c = 0; c < dh; ++c) oi[c] += w * vj[c];
        }
      }
    }
  }
  Node n;
  n.kind = OpKind::kAttention;
  n.inputs = {q, k, v};
  n.value = std::move(out);
  n.p0 = seq_len;
  n.p1 = heads;
  n.saved.push_back(std::move(probs));
  return push(std::move(n));
}

NodeId ExprGraph::mean_pool(NodeId x, std::size_t seq_len) {
  const Matrix& in = value(x);
  if (seq_len == 0 || in.rows() % seq_len != 0) {
    throw ShapeError("mean_pool: " + std::to_string(in.rows()) +
                     " rows are not a multiple of sequence length " + std::to_string(seq_len));
  }
  const std::size_t batch = in.rows() / seq_len;
  Matrix out(batch, in.cols());
  const double inv = 1.0 / static_cast<double>(seq_len);
  for (std::size_t s = 0; s < batch; ++s) {
    auto orow = out.row(s);
    for (std::size_t t = 0; t < seq_len; ++t) {
      auto irow = in.row(s * seq_len + t);
      for (std::size_t c = 0; c < in.cols(); ++c) orow[c] += irow[c];
    }
    for (double& v : orow) v *= inv;
  }
  Node n;
  n.kind = OpKind::kMeanPool;
  n.inputs = {x};
  n.value = std::move(out);
  n.p0 = seq_len;
  return push(std::move(n));
}

Gradients ExprGraph::backward(NodeId loss, std::span<const NodeId> leaves) const {
  const Node& root = node(loss);
  if (root.value.rows() != 1 || root.value.cols() != 1) {
    throw ContractError("backward: loss node is " + shape_string(root.value) +
                        ", expected a 1x1 scalar");
  }
  for (NodeId l : leaves) {
    if (node(l).kind != OpKind::kLeaf) {
      throw ContractError("backward: node " + std::to_string(l.index) + " is a " +
                          std::string(to_string(node(l).kind)) + ", not a leaf");
    }
  }

  std::vector<Matrix> adjoints(loss.index + 1);
  adjoints[loss.index] = Matrix(1, 1, 1.0);
  for (std::size_t i = loss.index + 1; i-- > 0;) {
    const Node& n = nodes_[i];
    if (!n.needs_grad || n.inputs.empty()) continue;
    const Matrix& g = adjoints[i];
    if (g.rows() == 0) continue;
    backprop(n, g, adjoints);
    // Interior adjoints are no longer needed once propagated.
    adjoints[i] = Matrix();
  }

  Gradients out;
  for (NodeId l : leaves) {
    const Matrix& leaf_value = nodes_[l.index].value;
    if (l.index <= loss.index && adjoints[l.index].rows() != 0) {
      out.grads_[l] = adjoints[l.index];
    } else {
      out.grads_[l] = Matrix(leaf_value.rows(), leaf_value.cols());
    }
  }
  return out;
}

void ExprGraph::backprop(const Node& n, const Matrix& g, std::vector<Matrix>& adj) const {
  auto wants = [&](std::size_t i) { return nodes_[n.inputs[i].index].needs_grad; };
  auto in_value = [&](std::size_t i) -> const Matrix& { return nodes_[n.inputs[i].index].value; };

  switch (n.kind) {
    case OpKind::kLeaf:
    case OpKind::kConstant:
      return;
    case OpKind::kAdd:
      if (wants(0)) accumulate(adj, n.inputs[0], g);
      if (wants(1)) accumulate(adj, n.inputs[1], g);
      return;
    case OpKind::kAddRow: {
      if (wants(0)) accumulate(adj, n.inputs[0], g);
      if (wants(1)) {
        Matrix gb(1, g.cols());
        for (std::size_t r = 0; r < g.rows(); ++r) {
          auto row = g.row(r);
          for (std::size_t c = 0; c < g.cols(); ++c) gb[c] += row[c];
        }
        accumulate(adj, n.inputs[1], std::move(gb));
      }
      return;
    }
    case OpKind::kSub:
      if (wants(0)) accumulate(adj, n.inputs[0], g);
      if (wants(1)) accumulate(adj, n.inputs[1], scaled(g, -1.0));
      return;
    case OpKind::kMul:
      if (wants(0)) accumulate(adj, n.inputs[0], hadamard(g, in_value(1)));
      if (wants(1)) accumulate(adj, n.inputs[1], hadamard(g, in_value(0)));
      return;
    case OpKind::kDiv: {
      const Matrix& a = in_value(0);
      const Matrix& b = in_value(1);
      if (wants(0)) {
        Matrix ga(g.rows(), g.cols());
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] = g[i] / b[i];
        accumulate(adj, n.inputs[0], std::move(ga));
      }
      if (wants(1)) {
        Matrix gb(g.rows(), g.cols());
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] = -g[i] * a[i] / (b[i] * b[i]);
        accumulate(adj, n.inputs[1], std::move(gb));
      }
      return;
    }
    case OpKind::kScale:
      accumulate(adj, n.inputs[0], scaled(g, n.scalar));
      return;
    case OpKind::kAddScalar:
      accumulate(adj, n.inputs[0], g);
      return;
    case OpKind::kAbs: {
      const Matrix& a = in_value(0);
      Matrix ga(g.rows(), g.cols());
      for (std::size_t i = 0; i < g.size(); ++i) {
        ga[i] = a[i] > 0.0 ? g[i] : (a[i] < 0.0 ? -g[i] : 0.0);
      }
      accumulate(adj, n.inputs[0], std::move(ga));
      return;
    }
    case OpKind::kSquare: {
      const Matrix& a = in_value(0);
      Matrix ga(g.rows(), g.cols());
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] = 2.0 * a[i] * g[i];
      accumulate(adj, n.inputs[0], std::move(ga));
      return;
    }
    case OpKind::kSqrt: {
      Matrix ga(g.rows(), g.cols());
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] = g[i] / (2.0 * n.value[i]);
      accumulate(adj, n.inputs[0], std::move(ga));
      return;
    }
    case OpKind::kRelu: {
      const Matrix& a = in_value(0);
      Matrix ga(g.rows(), g.cols());
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] = a[i] > 0.0 ? g[i] : 0.0;
      accumulate(adj, n.inputs[0], std::move(ga));
      return;
    }
    case OpKind::kRowSums: {
      const Matrix& a = in_value(0);
      Matrix ga(a.rows(), a.cols());
      for (std::size_t r = 0; r < a.rows(); ++r)
        for (double& v : ga.row(r)) v = g[r];
      accumulate(adj, n.inputs[0], std::move(ga));
      return;
    }
    case OpKind::kColSums: {
      const Matrix& a = in_value(0);
      Matrix ga(a.rows(), a.cols());
      for (std::size_t r = 0; r < a.rows(); ++r) {
        auto row = ga.row(r);
        for (std::size_t c = 0; c < a.cols(); ++c) row[c] = g[c];
      }
      accumulate(adj, n.inputs[0], std::move(ga));
      return;
    }
    case OpKind::kSum: {
      const Matrix& a = in_value(0);
      accumulate(adj, n.inputs[0], Matrix(a.rows(), a.cols(), g[0]));
      return;
    }
    case OpKind::kMean: {
      const Matrix& a = in_value(0);
      accumulate(adj, n.inputs[0],
                 Matrix(a.rows(), a.cols(), g[0] / static_cast<double>(a.size())));
      return;
    }
    case OpKind::kDivByScalar: {
      const Matrix& a = in_value(0);
      const double d = in_value(1)[0];
      if (d == 0.0) {
        if (wants(0)) accumulate(adj, n.inputs[0], Matrix(a.rows(), a.cols()));
        if (wants(1)) accumulate(adj, n.inputs[1], Matrix(1, 1));
        return;
      }
      if (wants(0)) accumulate(adj, n.inputs[0], scaled(g, 1.0 / d));
      if (wants(1)) {
        double dot = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) dot += g[i] * n.value[i];
        accumulate(adj, n.inputs[1], Matrix(1, 1, -dot / d));
      }
      return;
    }
    case OpKind::kMatMul:
      if (wants(0)) accumulate(adj, n.inputs[0], matmul_nt(g, in_value(1)));
      if (wants(1)) accumulate(adj, n.inputs[1], matmul_tn(in_value(0), g));
      return;
    case OpKind::kSoftmaxRows: {
      Matrix ga(g.rows(), g.cols());
      for (std::size_t r = 0; r < g.rows(); ++r)
        softmax_backward_row(n.value.row(r), g.row(r), ga.row(r));
      accumulate(adj, n.inputs[0], std::move(ga));
      return;
    }
    case OpKind::kCrossEntropyMean: {
      Matrix ga = n.saved[0];
      const double w = g[0] / static_cast<double>(ga.rows());
      for (std::size_t r = 0; r < ga.rows(); ++r) {
        ga(r, n.indices[r]) -= 1.0;
        for (double& v : ga.row(r)) v *= w;
      }
      accumulate(adj, n.inputs[0], std::move(ga));
      return;
    }
    case OpKind::kLayerNormRows: {
      const Matrix& xhat = n.saved[0];
      const Matrix& inv_std = n.saved[1];
      const Matrix& gain = in_value(1);
      const std::size_t rows = g.rows(), cols = g.cols();
      if (wants(1)) {
        Matrix gg(1, cols);
        for (std::size_t r = 0; r < rows; ++r)
          for (std::size_t c = 0; c < cols; ++c) gg[c] += g(r, c) * xhat(r, c);
        accumulate(adj, n.inputs[1], std::move(gg));
      }
      if (wants(2)) {
        Matrix gb(1, cols);
        for (std::size_t r = 0; r < rows; ++r)
          for (std::size_t c = 0; c < cols; ++c) gb[c] += g(r, c);
        accumulate(adj, n.inputs[2], std::move(gb));
      }
      if (wants(0)) {
        Matrix gx(rows, cols);
        const double inv_c = 1.0 / static_cast<double>(cols);
        for (std::size_t r = 0; r < rows; ++r) {
          double mean_d = 0.0, mean_dx = 0.0;
          for (std::size_t c = 0; c < cols; ++c) {
            const double d = g(r, c) * gain[c];
            mean_d += d;
            mean_dx += d * xhat(r, c);
          }
          mean_d *= inv_c;
          mean_dx *= inv_c;
          for (std::size_t c = 0; c < cols; ++c) {
            const double d = g(r, c) * gain[c];
            gx(r, c) = inv_std[r] * (d - mean_d - xhat(r, c) * mean_dx);
          }
        }
        accumulate(adj, n.inputs[0], std::move(gx));
      }
      return;
    }
    case OpKind::kGatherRows: {
      const Matrix& t = in_value(0);
      Matrix gt(t.rows(), t.cols());
      for (std::size_t i = 0; i < n.indices.size(); ++i) {
        auto dst = gt.row(n.indices[i]);
        auto src = g.row(i);
        for (std::size_t c = 0; c < t.cols(); ++c) dst[c] += src[c];
      }
      accumulate(adj, n.inputs[0], std::move(gt));
      return;
    }
    case OpKind::kAttention: {
      const Matrix& Q = in_value(0);
      const Matrix& K = in_value(1);
      const Matrix& V = in_value(2);
      const Matrix& probs = n.saved[0];
      const std::size_t seq_len = n.p0, heads = n.p1;
      const std::size_t d = Q.cols(), dh = d / heads, batch = Q.rows() / seq_len;
      const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
      Matrix gq(Q.rows(), d), gk(Q.rows(), d), gv(Q.rows(), d);
      std::vector<double> dp(seq_len), ds(seq_len);
      for (std::size_t s = 0; s < batch; ++s) {
        const std::size_t base = s * seq_len;
        for (std::size_t h = 0; h < heads; ++h) {
          const std::size_t off = h * dh;
          const std::size_t pbase = (s * heads + h) * seq_len;
          for (std::size_t i = 0; i < seq_len; ++i) {
            auto prow = probs.row(pbase + i);
            const double* gi = g.ptr(base + i, off);
            // dP = dO·Vᵀ; dV += Pᵀ·dO
            for (std::size_t j = 0; j < seq_len; ++j) {
              const double* vj = V.ptr(base + j, off);
              double* gvj = gv.ptr(base + j, off);
              double acc = 0.0;
              for (std::size_t c = 0; c < dh; ++c) {
                acc += gi[c] * vj[c];
                gvj[c] += prow[j] * gi[c];
              }
              dp[j] = acc;
            }
            softmax_backward_row(prow, dp, ds);
            const double* qi = Q.ptr(base + i, off);
            double* gqi = gq.ptr(base + i, off);
            for (std::size_t j = 0; j < seq_len; ++j) {
              const double w = ds[j] * scale;
              const double* kj = K.ptr(base + j, off);
              double* gkj = gk.ptr(base + j, off);
              for (std::size_t c = 0; c < dh; ++c) {
                gqi[c] += w * kj[c];
                gkj[c] += w * qi[c];
              }
            }
          }
        }
      }
      if (wants(0)) accumulate(adj, n.inputs[0], std::move(gq));
      if (wants(1)) accumulate(adj, n.inputs[1], std::move(gk));
      if (wants(2)) accumulate(adj, n.inputs[2], std::move(gv));
      return;
    }
    case OpKind::kMeanPool: {
      const Matrix& a = in_value(0);
      const std::size_t seq_len = n.p0;
      const double inv = 1.0 / static_cast<double>(seq_len);
      Matrix ga(a.rows(), a.cols());
      for (std::size_t r = 0; r < a.rows(); ++r) {
        auto src = g.row(r / seq_len);
        auto dst = ga.row(r);
        for (std::size_t c = 0; c < a.cols(); ++c) dst[c] = src[c] * inv;
      }
      accumulate(adj, n.inputs[0], std::move(ga));
      return;
    }
  }
}

}  // namespace spur
