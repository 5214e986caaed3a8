#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <vector>

#include "spur/error.hpp"
#include "spur/gradcheck.hpp"
#include "spur/graph.hpp"
#include "test_support.hpp"

namespace spur {
namespace {

using Builder = std::function<NodeId(ExprGraph&, NodeId)>;

double evaluate_scalar(const Builder& build, const Matrix& w) {
  ExprGraph g;
  return g.scalar(build(g, g.leaf(w)));
}

Matrix analytic_gradient(const Builder& build, const Matrix& w) {
  ExprGraph g;
  const NodeId leaf = g.leaf(w);
  const NodeId loss = build(g, leaf);
  const std::vector<NodeId> leaves{leaf};
  return g.backward(loss, leaves).at(leaf);
}

double mismatch(const Builder& build, const Matrix& w) {
  const Matrix numeric = finite_difference_gradient(
      [&](const Matrix& x) { return evaluate_scalar(build, x); }, w, 1e-6);
  return gradient_mismatch(analytic_gradient(build, w), numeric, 1e-6, 1e-8);
}

TEST(GraphTest, SoftmaxExamples) {
  ExprGraph g;
  const Matrix out =
      g.value(g.softmax_rows(g.constant(Matrix::from_rows({{0, 0}, {1000, 1000}, {0, std::log(3.0)}}))));
  EXPECT_DOUBLE_EQ(out(0, 0), 0.5);
  EXPECT_DOUBLE_EQ(out(1, 1), 0.5);
  EXPECT_NEAR(out(2, 0), 0.25, 1e-15);
  EXPECT_NEAR(out(2, 1), 0.75, 1e-15);
}

TEST(GraphTest, SoftmaxRowsSumToOneAndIgnoreShift) {
  const Matrix x = testing::random_matrix(5, 7, 3, -20, 20);
  ExprGraph g;
  const Matrix p = g.value(g.softmax_rows(g.constant(x)));
  Matrix shifted = x;
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (double& v : shifted.row(r)) v += 17.0 * static_cast<double>(r);
  const Matrix q = g.value(g.softmax_rows(g.constant(shifted)));
  for (std::size_t r = 0; r < p.rows(); ++r) {
    double total = 0.0;
    for (std::size_t c = 0; c < p.cols(); ++c) {
      EXPECT_GT(p(r, c), 0.0);
      EXPECT_NEAR(p(r, c), q(r, c), 1e-12);
      total += p(r, c);
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
}

TEST(GraphTest, CrossEntropyExamples) {
  ExprGraph g;
  const std::vector<std::size_t> zero{0};
  EXPECT_NEAR(g.scalar(g.cross_entropy_mean(g.constant(Matrix(1, 2, 0.0)), zero)), std::log(2.0),
              1e-15);
  const double confident =
      g.scalar(g.cross_entropy_mean(g.constant(Matrix::from_rows({{10, -10}})), zero));
  EXPECT_NEAR(confident, 2.0611536e-9, 1e-15);
  const std::vector<std::size_t> two{0, 1};
  EXPECT_NEAR(g.scalar(g.cross_entropy_mean(g.constant(Matrix(2, 2, 0.0)), two)), std::log(2.0),
              1e-15);
  const std::vector<std::size_t> bad{2};
  EXPECT_THROW(g.cross_entropy_mean(g.constant(Matrix(1, 2)), bad), InputError);
}

TEST(GraphTest, LayerNormExamples) {
  ExprGraph g;
  const NodeId one = g.constant(Matrix(1, 4, 1.0));
  const NodeId zero = g.constant(Matrix(1, 4, 0.0));
  EXPECT_EQ(g.value(g.layer_norm_rows(g.constant(Matrix(1, 4, 1.0)), one, zero)), Matrix(1, 4));

  const Matrix pair =
      g.value(g.layer_norm_rows(g.constant(Matrix::from_rows({{-1, 1}})),
                                g.constant(Matrix(1, 2, 1.0)), g.constant(Matrix(1, 2, 0.0))));
  // Population variance 1, so each entry is ±1/sqrt(1 + 1e-5).
  const double expected = 1.0 / std::sqrt(1.0 + 1e-5);
  EXPECT_NEAR(pair(0, 0), -expected, 1e-15);
  EXPECT_NEAR(pair(0, 1), expected, 1e-15);

  const Matrix b = Matrix::from_rows({{0.5, -2, 3, 7}});
  const Matrix shifted = g.value(g.layer_norm_rows(g.constant(testing::random_matrix(3, 4, 8)),
                                                   g.constant(Matrix(1, 4, 0.0)), g.constant(b)));
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t c = 0; c < 4; ++c) EXPECT_EQ(shifted(r, c), b(0, c));
}

TEST(GraphTest, BackwardExamples) {
  ExprGraph g;
  const NodeId w = g.leaf(Matrix::from_rows({{1, 2}, {3, 4}}));
  const NodeId other = g.leaf(Matrix(3, 1, 5.0));
  const std::vector<NodeId> leaves{w, other};
  const Gradients lin = g.backward(g.sum(w), leaves);
  EXPECT_EQ(lin.at(w), Matrix(2, 2, 1.0));
  EXPECT_EQ(lin.at(other), Matrix(3, 1, 0.0));
  const Gradients sq = g.backward(g.sum(g.square(w)), leaves);
  EXPECT_EQ(sq.at(w), Matrix::from_rows({{2, 4}, {6, 8}}));
}

TEST(GraphTest, BackwardContracts) {
  ExprGraph g;
  const NodeId w = g.leaf(Matrix(2, 2, 1.0));
  const std::vector<NodeId> leaves{w};
  EXPECT_THROW(g.backward(w, leaves), ContractError);
  const NodeId s = g.sum(w);
  const std::vector<NodeId> not_leaf{s};
  EXPECT_THROW(g.backward(s, not_leaf), ContractError);
}

TEST(GraphTest, KinksHaveZeroDerivative) {
  ExprGraph g;
  const NodeId w = g.leaf(Matrix::from_rows({{0, 2, -3}}));
  const std::vector<NodeId> leaves{w};
  EXPECT_EQ(g.backward(g.sum(g.abs(w)), leaves).at(w), Matrix::from_rows({{0, 1, -1}}));
  EXPECT_EQ(g.backward(g.sum(g.relu(w)), leaves).at(w), Matrix::from_rows({{0, 1, 0}}));
}

TEST(GraphTest, DivByZeroScalarIsZero) {
  ExprGraph g;
  const NodeId a = g.leaf(Matrix(2, 2, 3.0));
  const NodeId s = g.leaf(Matrix(1, 1, 0.0));
  const NodeId q = g.div_by_scalar(a, s);
  EXPECT_EQ(g.value(q), Matrix(2, 2, 0.0));
  const std::vector<NodeId> leaves{a, s};
  const Gradients grads = g.backward(g.sum(q), leaves);
  EXPECT_EQ(grads.at(a), Matrix(2, 2, 0.0));
  EXPECT_EQ(grads.at(s), Matrix(1, 1, 0.0));
}

TEST(GraphTest, ConstructionIsPure) {
  const Matrix x = testing::random_matrix(4, 6, 2);
  auto build = [&] {
    ExprGraph g;
    const NodeId n = g.leaf(x);
    return g.value(g.softmax_rows(g.matmul(n, g.constant(transpose(x)))));
  };
  EXPECT_EQ(build(), build());
}

TEST(GraphTest, FiniteDifferenceExamples) {
  const Matrix w = testing::random_matrix(2, 3, 9);
  const Matrix ones = finite_difference_gradient([](const Matrix& m) { return sum(m); }, w, 1e-6);
  for (double v : ones.values()) EXPECT_NEAR(v, 1.0, 1e-9);
  const Matrix six = finite_difference_gradient(
      [](const Matrix& m) { return sum(hadamard(m, m)); }, Matrix(1, 1, 3.0), 1e-6);
  EXPECT_NEAR(six(0, 0), 6.0, 1e-6);
  EXPECT_EQ(finite_difference_gradient([](const Matrix&) { return 4.0; }, w, 1e-6), Matrix(2, 3));
  EXPECT_THROW(finite_difference_gradient([](const Matrix&) { return 0.0; }, w, 0.0),
               ContractError);
}

TEST(GraphTest, GradientMismatchRatio) {
  const Matrix a = Matrix::from_rows({{1.0, 0.0}});
  EXPECT_EQ(gradient_mismatch(a, a, 1e-4, 1e-8), 0.0);
  EXPECT_NEAR(gradient_mismatch(a, Matrix::from_rows({{1.0002, 0.0}}), 1e-4, 1e-8), 2.0, 1e-3);
}

// Every differentiable op against central differences. Inputs stay away from
// the kinks of abs and relu.
TEST(GraphTest, OpGradientsMatchFiniteDifferences) {
  const Matrix w = testing::random_matrix(4, 6, 21, 0.2, 1.5);
  const Matrix signed_w = testing::random_matrix(4, 6, 22, 0.2, 1.5);
  Matrix mixed = signed_w;
  for (std::size_t i = 0; i < mixed.size(); i += 2) mixed[i] = -mixed[i];
  const Matrix other = testing::random_matrix(4, 6, 23, 0.5, 2.0);
  const Matrix row = testing::random_matrix(1, 6, 24);
  const Matrix right = testing::random_matrix(6, 3, 25);
  const std::vector<std::size_t> labels{0, 2, 1, 2};
  const std::vector<std::size_t> ids{3, 0, 0, 2, 1};

  const std::vector<std::pair<const char*, Builder>> cases{
      {"add", [&](ExprGraph& g, NodeId x) { return g.sum(g.square(g.add(x, g.constant(other)))); }},
      {"add_row", [&](ExprGraph& g, NodeId x) { return g.sum(g.square(g.add(g.constant(other), g.col_sums(x)))); }},
      {"sub", [&](ExprGraph& g, NodeId x) { return g.sum(g.square(g.sub(g.constant(other), x))); }},
      {"mul", [&](ExprGraph& g, NodeId x) { return g.sum(g.mul(x, g.mul(x, g.constant(other)))); }},
      {"div", [&](ExprGraph& g, NodeId x) { return g.sum(g.div(g.constant(other), x)); }},
      {"div_rev", [&](ExprGraph& g, NodeId x) { return g.sum(g.div(g.square(x), g.constant(other))); }},
      {"scale", [&](ExprGraph& g, NodeId x) { return g.sum(g.square(g.scale(x, -2.5))); }},
      {"add_scalar", [&](ExprGraph& g, NodeId x) { return g.sum(g.square(g.add_scalar(x, 0.3))); }},
      {"abs", [&](ExprGraph& g, NodeId x) { return g.sum(g.mul(g.abs(x), g.constant(other))); }},
      {"sqrt", [&](ExprGraph& g, NodeId x) { return g.sum(g.sqrt(x)); }},
      {"relu", [&](ExprGraph& g, NodeId x) { return g.sum(g.square(g.relu(x))); }},
      {"row_sums", [&](ExprGraph& g, NodeId x) { return g.sum(g.square(g.row_sums(x))); }},
      {"col_sums", [&](ExprGraph& g, NodeId x) { return g.sum(g.square(g.col_sums(x))); }},
      {"mean", [&](ExprGraph& g, NodeId x) { return g.square(g.mean(x)); }},
      {"div_by_scalar", [&](ExprGraph& g, NodeId x) { return g.sum(g.square(g.div_by_scalar(x, g.sum(x)))); }},
      {"matmul", [&](ExprGraph& g, NodeId x) { return g.sum(g.square(g.matmul(x, g.matmul(g.constant(right), g.constant(transpose(right)))))); }},
      {"matmul_right", [&](ExprGraph& g, NodeId x) { return g.sum(g.square(g.matmul(g.constant(transpose(other)), x))); }},
      {"softmax", [&](ExprGraph& g, NodeId x) { return g.sum(g.mul(g.softmax_rows(x), g.constant(other))); }},
      {"cross_entropy", [&](ExprGraph& g, NodeId x) { return g.cross_entropy_mean(g.matmul(x, g.constant(right)), labels); }},
      {"layer_norm", [&](ExprGraph& g, NodeId x) { return g.sum(g.mul(g.layer_norm_rows(x, g.constant(row), g.constant(Matrix(1, 6, 0.1))), g.constant(other))); }},
      {"layer_norm_gain", [&](ExprGraph& g, NodeId x) { return g.sum(g.mul(g.layer_norm_rows(g.constant(other), g.scale(g.col_sums(x), 0.25), g.constant(row)), g.constant(other))); }},
      {"gather", [&](ExprGraph& g, NodeId x) { return g.sum(g.square(g.gather_rows(x, ids))); }},
      {"attention", [&](ExprGraph& g, NodeId x) { return g.sum(g.mul(g.attention(x, g.scale(x, 0.7), g.constant(other), 2, 2), g.constant(other))); }},
      {"attention_v", [&](ExprGraph& g, NodeId x) { return g.sum(g.mul(g.attention(g.constant(other), g.constant(other), x, 4, 3), g.constant(other))); }},
      {"mean_pool", [&](ExprGraph& g, NodeId x) { return g.sum(g.square(g.mean_pool(x, 2))); }},
  };
  for (const auto& [name, build] : cases) {
    EXPECT_LE(mismatch(build, name == std::string("abs") || name == std::string("relu") ? mixed : w), 1.0)
        << name;
  }
}

TEST(GraphTest, AttentionOverOneKeyReturnsValues) {
  ExprGraph g;
  const Matrix v = testing::random_matrix(5, 4, 31);
  const NodeId out = g.attention(g.constant(testing::random_matrix(5, 4, 32)),
                                 g.constant(testing::random_matrix(5, 4, 33)), g.constant(v), 1, 2);
  EXPECT_EQ(g.value(out), v);
}

TEST(GraphTest, AttentionBlocksAreIndependent) {
  const Matrix q = testing::random_matrix(6, 4, 1), k = testing::random_matrix(6, 4, 2),
               v = testing::random_matrix(6, 4, 3);
  ExprGraph g;
  const Matrix both = g.value(g.attention(g.constant(q), g.constant(k), g.constant(v), 3, 2));
  auto first_block = [](const Matrix& m) {
    Matrix out(3, m.cols());
    for (std::size_t r = 0; r < 3; ++r)
      for (std::size_t c = 0; c < m.cols(); ++c) out(r, c) = m(r, c);
    return out;
  };
  const Matrix alone = g.value(g.attention(g.constant(first_block(q)), g.constant(first_block(k)),
                                           g.constant(first_block(v)), 3, 2));
  EXPECT_EQ(first_block(both), alone);
}

TEST(GraphTest, ShapeErrors) {
  ExprGraph g;
  const NodeId a = g.leaf(Matrix(2, 3));
  const NodeId b = g.leaf(Matrix(2, 2));
  EXPECT_THROW(g.add(a, b), ShapeError);
  EXPECT_THROW(g.matmul(a, a), ShapeError);
  EXPECT_THROW(g.mean_pool(a, 4), ShapeError);
  EXPECT_THROW(g.attention(a, a, a, 1, 2), ShapeError);
  const std::vector<std::size_t> ids{5};
  EXPECT_THROW(g.gather_rows(a, ids), InputError);
}

}  // namespace
}  // namespace spur
