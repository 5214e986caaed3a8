#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "spur/error.hpp"
#include "spur/gradcheck.hpp"
#include "spur/regularizer.hpp"
#include "spur/rng.hpp"
#include "test_support.hpp"

namespace spur {
namespace {

constexpr DevianceVariant kAllVariants[] = {DevianceVariant::kSpur, DevianceVariant::kL1S,
                                            DevianceVariant::kL1, DevianceVariant::kL2};

// Pearson's statistic of a contingency table, coded from the textbook
// definition: observed counts against row-total × column-total / n.
double pearson_chi_square(const std::vector<std::vector<double>>& table) {
  const std::size_t r = table.size(), c = table[0].size();
  std::vector<double> row_total(r, 0.0), col_total(c, 0.0);
  double n = 0.0;
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) {
      row_total[i] += table[i][j];
      col_total[j] += table[i][j];
      n += table[i][j];
    }
  double stat = 0.0;
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) {
      const double expected = row_total[i] * col_total[j] / n;
      stat += (table[i][j] - expected) * (table[i][j] - expected) / expected;
    }
  return stat;
}

Matrix outer(const std::vector<double>& u, const std::vector<double>& v) {
  Matrix m(u.size(), v.size());
  for (std::size_t i = 0; i < u.size(); ++i)
    for (std::size_t j = 0; j < v.size(); ++j) m(i, j) = u[i] * v[j];
  return m;
}

TEST(RegularizerTest, ExpectedMagnitudeExamples) {
  EXPECT_EQ(expected_magnitude(Matrix(2, 2, 1.0)), Matrix(2, 2, 1.0));
  const Matrix e = expected_magnitude(Matrix::from_rows({{1, 2}, {3, 4}}));
  const Matrix want = Matrix::from_rows({{1.2, 1.8}, {2.8, 4.2}});
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(e[i], want[i], 1e-12);
  EXPECT_EQ(expected_magnitude(Matrix::identity(2)), Matrix(2, 2, 0.5));
  EXPECT_EQ(expected_magnitude(Matrix(3, 2, 0.0)), Matrix(3, 2, 0.0));
  // Signs never matter.
  EXPECT_EQ(expected_magnitude(Matrix::from_rows({{-1, 2}, {3, -4}})),
            expected_magnitude(Matrix::from_rows({{1, 2}, {3, 4}})));
}

TEST(RegularizerTest, DevianceExamples) {
  for (DevianceVariant v : kAllVariants) EXPECT_NEAR(deviance(Matrix(2, 2, 1.0), v), 0.0, 1e-15);
  const Matrix id = Matrix::identity(2);
  EXPECT_NEAR(deviance(id, DevianceVariant::kSpur), 0.5, 1e-9);
  EXPECT_NEAR(deviance(id, DevianceVariant::kL1S), 0.7071068, 1e-7);
  EXPECT_NEAR(deviance(id, DevianceVariant::kL1), 0.5, 1e-9);
  EXPECT_NEAR(deviance(id, DevianceVariant::kL2), 0.25, 1e-9);
  EXPECT_NEAR(deviance(Matrix::from_rows({{1, 2}, {3, 4}}), DevianceVariant::kSpur), 0.01984127,
              1e-8);
  for (DevianceVariant v : kAllVariants) EXPECT_EQ(deviance(Matrix(2, 3, 0.0), v), 0.0);
}

TEST(RegularizerTest, ChiSquareOracle) {
  Rng rng(77);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t r = 1 + rng.index(12), c = 1 + rng.index(12);
    std::vector<std::vector<double>> table(r, std::vector<double>(c));
    Matrix w(r, c);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) w(i, j) = table[i][j] = rng.uniform(0.1, 10.0);
    const double ours = static_cast<double>(r * c) * deviance(w, DevianceVariant::kSpur);
    const double oracle = pearson_chi_square(table);
    EXPECT_LE(std::abs(ours - oracle), 1e-10 * std::max(oracle, 1e-300) + 1e-12)
        << r << "x" << c;
  }
}

TEST(RegularizerTest, RankOneMatricesHaveZeroDeviance) {
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> u(1 + rng.index(16)), v(1 + rng.index(16));
    for (double& x : u) x = rng.uniform(0.01, 5.0);
    for (double& x : v) x = rng.uniform(0.01, 5.0);
    const Matrix w = outer(u, v);
    for (DevianceVariant variant : kAllVariants) EXPECT_LE(deviance(w, variant), 1e-9);
  }
}

TEST(RegularizerTest, InvariantUnderSignsTransposeAndPermutation) {
  const Matrix w = testing::random_matrix(5, 7, 12, -3.0, 3.0);
  Matrix flipped = w;
  for (std::size_t i = 0; i < flipped.size(); i += 3) flipped[i] = -flipped[i];
  Matrix permuted(5, 7);
  const std::size_t rows[] = {3, 0, 4, 1, 2};
  const std::size_t cols[] = {6, 2, 0, 5, 1, 3, 4};
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 7; ++j) permuted(i, j) = w(rows[i], cols[j]);
  for (DevianceVariant v : kAllVariants) {
    const double base = deviance(w, v);
    EXPECT_EQ(deviance(flipped, v), base);
    EXPECT_NEAR(deviance(transpose(w), v), base, 1e-12 * base);
    EXPECT_NEAR(deviance(permuted, v), base, 1e-12 * base);
  }
}

// |W| → s|W| scales E by s, so the variants scale by s, sqrt(s), s and s².
TEST(RegularizerTest, ScalingLaws) {
  const Matrix w = testing::random_matrix(4, 6, 13, 0.5, 2.0);
  const double s = 3.0;
  const Matrix ws = scaled(w, s);
  EXPECT_NEAR(deviance(ws, DevianceVariant::kSpur), s * deviance(w, DevianceVariant::kSpur), 1e-12);
  EXPECT_NEAR(deviance(ws, DevianceVariant::kL1S),
              std::sqrt(s) * deviance(w, DevianceVariant::kL1S), 1e-12);
  EXPECT_NEAR(deviance(ws, DevianceVariant::kL1), s * deviance(w, DevianceVariant::kL1), 1e-12);
  EXPECT_NEAR(deviance(ws, DevianceVariant::kL2), s * s * deviance(w, DevianceVariant::kL2),
              1e-12);
}

TEST(RegularizerTest, NonNegative) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Matrix w = testing::random_matrix(3, 4, seed, -2.0, 2.0);
    for (DevianceVariant v : kAllVariants) EXPECT_GE(deviance(w, v), 0.0);
  }
}

TEST(RegularizerTest, ZeroRowsStayFinite) {
  const Matrix w = Matrix::from_rows({{0, 0, 0}, {1, 2, 3}, {4, 0, 1}});
  for (DevianceVariant v : kAllVariants) EXPECT_TRUE(std::isfinite(deviance(w, v)));
}

TEST(RegularizerTest, RegularizationLossIsMean) {
  const std::vector<Matrix> one{Matrix::identity(2)};
  EXPECT_NEAR(regularization_loss(one, DevianceVariant::kSpur), 0.5, 1e-12);
  const std::vector<Matrix> two{Matrix::identity(2), Matrix(2, 2, 1.0)};
  EXPECT_NEAR(regularization_loss(two, DevianceVariant::kSpur), 0.25, 1e-12);
  const std::vector<Matrix> copies(4, Matrix::from_rows({{1, 2}, {3, 4}}));
  EXPECT_NEAR(regularization_loss(copies, DevianceVariant::kL1),
              deviance(copies[0], DevianceVariant::kL1), 1e-15);
  EXPECT_THROW(regularization_loss(std::vector<Matrix>{}, DevianceVariant::kSpur), ConfigError);
}

TEST(RegularizerTest, TotalLossExamples) {
  EXPECT_NEAR(total_loss(0.693147, 10, 0.25).total, 3.193147, 1e-12);
  EXPECT_EQ(total_loss(0.42, 0, 9.0).total, 0.42);
  EXPECT_EQ(total_loss(0, 100, 0.5).total, 50.0);
  EXPECT_THROW(total_loss(-1, 1, 1), ContractError);
  EXPECT_THROW(total_loss(1, -1, 1), ContractError);
}

TEST(RegularizerTest, LambdaScheduleExamples) {
  const LambdaSchedule s{100.0, 10, 20};
  EXPECT_EQ(lambda_at(0, s), 0.0);
  EXPECT_EQ(lambda_at(10, s), 0.0);
  EXPECT_EQ(lambda_at(30, s), 100.0);
  EXPECT_EQ(lambda_at(500, s), 100.0);
  EXPECT_NEAR(lambda_at(20, s), 87.5, 1e-12);
  double prev = 0.0;
  for (std::int64_t t = 0; t <= 40; ++t) {
    const double l = lambda_at(t, s);
    EXPECT_GE(l, prev);
    prev = l;
  }
  EXPECT_THROW((LambdaSchedule{-1.0, 0, 1}.validate()), ConfigError);
  EXPECT_THROW((LambdaSchedule{1.0, 0, 0}.validate()), ConfigError);
}

TEST(RegularizerTest, VariantNames) {
  for (DevianceVariant v : kAllVariants) EXPECT_EQ(parse_deviance_variant(to_string(v)), v);
  EXPECT_EQ(parse_deviance_variant("SPUR"), DevianceVariant::kSpur);
  EXPECT_THROW(parse_deviance_variant("l3"), ConfigError);
}

TEST(RegularizerTest, GraphValuesMatchPlainEvaluator) {
  const Matrix w = Matrix::from_rows({{1, 2}, {3, 4}});
  for (DevianceVariant v : kAllVariants) {
    ExprGraph g;
    EXPECT_NEAR(g.scalar(deviance_node(g, g.leaf(w), v)), deviance(w, v), 1e-15);
  }
  ExprGraph g;
  const Matrix e = g.value(expected_magnitude_node(g, g.leaf(w)));
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(e[i], expected_magnitude(w)[i], 1e-15);
  const std::vector<NodeId> targets{g.leaf(w), g.leaf(Matrix::identity(2))};
  const std::vector<Matrix> plain{w, Matrix::identity(2)};
  EXPECT_NEAR(g.scalar(regularization_loss_node(g, targets, DevianceVariant::kSpur)),
              regularization_loss(plain, DevianceVariant::kSpur), 1e-15);
}

TEST(RegularizerTest, GradientVanishesAtUniformMatrix) {
  ExprGraph g;
  const NodeId w = g.leaf(Matrix(2, 2, 1.0));
  const std::vector<NodeId> leaves{w};
  const Matrix grad = g.backward(deviance_node(g, w, DevianceVariant::kSpur), leaves).at(w);
  for (double x : grad.values()) EXPECT_NEAR(x, 0.0, 1e-15);
}

TEST(RegularizerTest, GradientsMatchFiniteDifferences) {
  Matrix w = testing::random_matrix(4, 4, 40, 0.2, 2.0);
  for (std::size_t i = 1; i < w.size(); i += 3) w[i] = -w[i];
  for (DevianceVariant v : kAllVariants) {
    ExprGraph g;
    const NodeId leaf = g.leaf(w);
    const std::vector<NodeId> leaves{leaf};
    const Matrix analytic = g.backward(deviance_node(g, leaf, v), leaves).at(leaf);
    const Matrix numeric = finite_difference_gradient(
        [v](const Matrix& x) { return deviance(x, v); }, w, 1e-6);
    EXPECT_LE(gradient_mismatch(analytic, numeric, 1e-5, 1e-10), 1.0) << to_string(v);
  }
}

}  // namespace
}  // namespace spur
