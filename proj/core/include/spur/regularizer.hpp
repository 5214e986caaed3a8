#pragma once

#include <cstdint>
#include <span>
#include <string_view>

#include "spur/graph.hpp"
#include "spur/matrix.hpp"

namespace spur {

// Deviance of |W| from its row×column independence expectation.
//   kSpur: mean of ((|W| − E)/sqrt(E))²   (standardized, squared)
//   kL1S:  mean of |(|W| − E)/sqrt(E)|    (standardized, absolute)
//   kL1:   mean of ||W| − E|
//   kL2:   mean of (|W| − E)²
enum class DevianceVariant : std::uint8_t { kSpur, kL1S, kL1, kL2 };

std::string_view to_string(DevianceVariant v);
// Accepts "spur", "l1s", "l1", "l2" in any case. Throws ConfigError.
DevianceVariant parse_deviance_variant(std::string_view text);

// Added under the square root of the standardized variants so that zero
// rows/columns (E = 0) stay finite.
inline constexpr double kDevianceEpsilon = 1e-12;

// E_ij = (row sum_i)(col sum_j) / grand total, all over |W|. Zero matrix in,
// zero matrix out.
Matrix expected_magnitude(const Matrix& w);

double deviance(const Matrix& w, DevianceVariant variant);

// Arithmetic mean of the per-matrix deviances. Throws ConfigError when empty.
double regularization_loss(std::span<const Matrix> targets, DevianceVariant variant);

struct LossBreakdown {
  double l_ce = 0.0;
  double l_r = 0.0;
  double lambda = 0.0;
  double total = 0.0;
};

// total = l_ce + lambda·l_r. Negative inputs throw ContractError.
LossBreakdown total_loss(double l_ce, double lambda, double l_r);

// Cubic ramp of the regularization weight from 0 at t_i up to lambda_final at
// t_i + ramp_steps, constant afterwards.
struct LambdaSchedule {
  double lambda_final = 0.0;
  std::int64_t t_i = 0;
  std::int64_t ramp_steps = 1;

  void validate() const;
};

double lambda_at(std::int64_t t, const LambdaSchedule& s);

// Differentiable counterparts. E is built from |W| inside the graph, so the
// gradient flows through the expectation as well.
NodeId expected_magnitude_node(ExprGraph& g, NodeId w);
NodeId deviance_node(ExprGraph& g, NodeId w, DevianceVariant variant);
NodeId regularization_loss_node(ExprGraph& g, std::span<const NodeId> targets,
                                DevianceVariant variant);

}  // namespace spur
