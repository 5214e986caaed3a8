#include "spur/regularizer.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

#include "spur/error.hpp"

namespace spur {

std::string_view to_string(DevianceVariant v) {
  switch (v) {
    case DevianceVariant::kSpur: return "spur";
    case DevianceVariant::kL1S: return "l1s";
    case DevianceVariant::kL1: return "l1";
    case DevianceVariant::kL2: return "l2";
  }
  return "unknown";
}

DevianceVariant parse_deviance_variant(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "spur") return DevianceVariant::kSpur;
  if (lower == "l1s") return DevianceVariant::kL1S;
  if (lower == "l1") return DevianceVariant::kL1;
  if (lower == "l2") return DevianceVariant::kL2;
  throw ConfigError("unknown deviance variant '" + std::string(text) +
                    "' (expected spur, l1s, l1 or l2)");
}

Matrix expected_magnitude(const Matrix& w) {
  const std::size_t rows = w.rows(), cols = w.cols();
  Matrix row_sum(rows, 1), col_sum(1, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    double acc = 0.0;
    for (std::size_t c = 0; c < cols; ++c) acc += std::fabs(w(r, c));
    row_sum[r] = acc;
  }
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) col_sum[c] += std::fabs(w(r, c));
  const double total = sum_abs(w);
  Matrix e(rows, cols);
  if (total == 0.0) return e;
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) e(r, c) = row_sum[r] * col_sum[c] / total;
  return e;
}

double deviance(const Matrix& w, DevianceVariant variant) {
  if (w.size() == 0) return 0.0;
  const Matrix e = expected_magnitude(w);
  double acc = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double diff = std::fabs(w[i]) - e[i];
    switch (variant) {
      case DevianceVariant::kSpur: {
        const double z = diff / std::sqrt(e[i] + kDevianceEpsilon);
        acc += z * z;
        break;
      }
      case DevianceVariant::kL1S:
        acc += std::fabs(diff / std::sqrt(e[i] + kDevianceEpsilon));
        break;
      case DevianceVariant::kL1:
        acc += std::fabs(diff);
        break;
      case DevianceVariant::kL2:
        acc += diff * diff;
        break;
    }
  }
  return acc / static_cast<double>(w.size());
}

double regularization_loss(std::span<const Matrix> targets, DevianceVariant variant) {
  if (targets.empty()) throw ConfigError("regularization_loss: no target matrices");
  double acc = 0.0;
  for (const Matrix& w : targets) acc += deviance(w, variant);
  return acc / static_cast<double>(targets.size());
}

LossBreakdown total_loss(double l_ce, double lambda, double l_r) {
  if (l_ce < 0.0 || lambda < 0.0 || l_r < 0.0) {
    throw ContractError("total_loss: components must be non-negative (l_ce=" +
                        std::to_string(l_ce) + ", lambda=" + std::to_string(lambda) +
                        ", l_r=" + std::to_string(l_r) + ")");
  }
  return LossBreakdown{l_ce, l_r, lambda, l_ce + lambda * l_r};
}

void LambdaSchedule::validate() const {
  if (!(lambda_final >= 0.0) || !std::isfinite(lambda_final)) {
    throw ConfigError("lambda_schedule.lambda_final must be a finite value >= 0");
  }
  if (ramp_steps <= 0) throw ConfigError("lambda_schedule.ramp_steps must be positive");
  if (t_i < 0) throw ConfigError("lambda_schedule.t_i must be >= 0");
}

double lambda_at(std::int64_t t, const LambdaSchedule& s) {
  if (t <= s.t_i) return 0.0;
  if (t >= s.t_i + s.ramp_steps) return s.lambda_final;
  const double p = static_cast<double>(t - s.t_i) / static_cast<double>(s.ramp_steps);
  const double rest = 1.0 - p;
  return s.lambda_final * (1.0 - rest * rest * rest);
}

NodeId expected_magnitude_node(ExprGraph& g, NodeId w) {
  const NodeId a = g.abs(w);
  const NodeId outer = g.matmul(g.row_sums(a), g.col_sums(a));
  return g.div_by_scalar(outer, g.sum(a));
}

NodeId deviance_node(ExprGraph& g, NodeId w, DevianceVariant variant) {
  const NodeId a = g.abs(w);
  const NodeId e = g.div_by_scalar(g.matmul(g.row_sums(a), g.col_sums(a)), g.sum(a));
  const NodeId diff = g.sub(a, e);
  NodeId terms{};
  switch (variant) {
    case DevianceVariant::kSpur:
      terms = g.square(g.div(diff, g.sqrt(g.add_scalar(e, kDevianceEpsilon))));
      break;
    case DevianceVariant::kL1S:
      terms = g.abs(g.div(diff, g.sqrt(g.add_scalar(e, kDevianceEpsilon))));
      break;
    case DevianceVariant::kL1:
      terms = g.abs(diff);
      break;
    case DevianceVariant::kL2:
      terms = g.square(diff);
      break;
  }
  const std::size_t n = g.value(w).size();
  return g.scale(g.sum(terms), 1.0 / static_cast<double>(n));
}

NodeId regularization_loss_node(ExprGraph& g, std::span<const NodeId> targets,
                                DevianceVariant variant) {
  if (targets.empty()) throw ConfigError("regularization_loss: no target matrices");
  NodeId acc = deviance_node(g, targets[0], variant);
  for (std::size_t i = 1; i < targets.size(); ++i) {
    acc = g.add(acc, deviance_node(g, targets[i], variant));
  }
  return g.scale(acc, 1.0 / static_cast<double>(targets.size()));
}

}  // namespace spur
