#include "spur/pruner.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>

#include "spur/error.hpp"

namespace spur {

void PruningSchedule::validate() const {
  auto in_unit = [](double v) { return v > 0.0 && v <= 1.0; };
  if (!in_unit(v_initial)) throw ConfigError("schedule.v_initial must lie in (0, 1]");
  if (!in_unit(v_final)) throw ConfigError("schedule.v_final must lie in (0, 1]");
  if (v_final > v_initial) throw ConfigError("schedule.v_final must not exceed v_initial");
  if (t_i < 0) throw ConfigError("schedule.t_i must be >= 0");
  if (ramp_steps <= 0) throw ConfigError("schedule.ramp_steps must be positive");
  if (cadence <= 0) throw ConfigError("schedule.cadence must be positive");
  if (total_steps < 0) throw ConfigError("schedule.total_steps must be >= 0");
  // total_steps = 0 runs no training at all, so the ramp never starts.
  if (total_steps > 0 && t_i + ramp_steps > total_steps) {
    throw ConfigError("schedule.t_i + schedule.ramp_steps (" + std::to_string(t_i + ramp_steps) +
                      ") exceeds schedule.total_steps (" + std::to_string(total_steps) + ")");
  }
}

double density_at(std::int64_t t, const PruningSchedule& s) {
  if (t <= s.t_i) return s.v_initial;
  if (t >= s.t_i + s.ramp_steps) return s.v_final;
  const double p = static_cast<double>(t - s.t_i) / static_cast<double>(s.ramp_steps);
  const double rest = 1.0 - p;
  return s.v_final + (s.v_initial - s.v_final) * rest * rest * rest;
}

std::size_t survivor_count(double v, std::size_t n) {
  const double k = std::floor(v * static_cast<double>(n) + 0.5);
  if (k <= 0.0) return 0;
  return std::min(n, static_cast<std::size_t>(k));
}

Mask::Mask(std::size_t rows, std::size_t cols, bool keep)
    : rows_(rows), cols_(cols), bits_(rows * cols, keep ? 1 : 0) {}

Mask::Mask(std::size_t rows, std::size_t cols, std::vector<std::uint8_t> bits)
    : rows_(rows), cols_(cols), bits_(std::move(bits)) {
  if (bits_.size() != rows * cols) {
    throw ShapeError("mask data length " + std::to_string(bits_.size()) +
                     " does not match shape " + shape_string(rows, cols));
  }
  for (auto& b : bits_) b = b ? 1 : 0;
}

std::size_t Mask::popcount() const noexcept {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

Matrix Mask::to_matrix() const {
  Matrix m(rows_, cols_);
  for (std::size_t i = 0; i < bits_.size(); ++i) m[i] = bits_[i] ? 1.0 : 0.0;
  return m;
}

Mask compute_mask(const Matrix& w, double v) {
  if (!(v >= 0.0 && v <= 1.0)) throw ContractError("compute_mask: density outside [0, 1]");
  const std::size_t n = w.size();
  const std::size_t k = survivor_count(v, n);
  Mask mask(w.rows(), w.cols(), false);
  if (k == 0) return mask;
  if (k == n) return Mask(w.rows(), w.cols(), true);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto ranks_before = [&w](std::size_t a, std::size_t b) {
    const double ma = std::fabs(w[a]), mb = std::fabs(w[b]);
    return ma > mb || (ma == mb && a < b);
  };
  std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k - 1),
                   order.end(), ranks_before);
  // Everything left of the k-th element ranks before it.
  std::vector<std::uint8_t> bits(n, 0);
  for (std::size_t i = 0; i < k; ++i) bits[order[i]] = 1;
  return Mask(w.rows(), w.cols(), std::move(bits));
}

std::string_view to_string(TargetDomain d) {
  switch (d) {
    case TargetDomain::kAll: return "all";
    case TargetDomain::kQPlusK: return "q+k";
    case TargetDomain::kQOnly: return "q";
    case TargetDomain::kKOnly: return "k";
  }
  return "unknown";
}

TargetDomain parse_target_domain(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "all") return TargetDomain::kAll;
  if (lower == "q+k" || lower == "qk" || lower == "q_plus_k") return TargetDomain::kQPlusK;
  if (lower == "q" || lower == "q_only") return TargetDomain::kQOnly;
  if (lower == "k" || lower == "k_only") return TargetDomain::kKOnly;
  throw ConfigError("unknown target domain '" + std::string(text) +
                    "' (expected all, q+k, q or k)");
}

std::vector<std::string> select_targets(const ParamTable& params, TargetDomain domain) {
  std::vector<Role> wanted;
  switch (domain) {
    case TargetDomain::kAll:
      wanted = {Role::kQ, Role::kK, Role::kV, Role::kO, Role::kFF1, Role::kFF2, Role::kDense};
      break;
    case TargetDomain::kQPlusK:
      wanted = {Role::kQ, Role::kK};
      break;
    case TargetDomain::kQOnly:
      wanted = {Role::kQ};
      break;
    case TargetDomain::kKOnly:
      wanted = {Role::kK};
      break;
  }

  struct Entry {
    int layer;
    std::size_t role_rank;
    const std::string* name;
  };
  std::vector<Entry> picked;
  std::vector<bool> seen(wanted.size(), false);
  for (const Param& p : params) {
    if (!is_prunable(p.role)) continue;
    auto it = std::find(wanted.begin(), wanted.end(), p.role);
    if (it == wanted.end()) continue;
    const auto rank = static_cast<std::size_t>(it - wanted.begin());
    seen[rank] = true;
    picked.push_back({p.layer, rank, &p.name});
  }
  if (domain != TargetDomain::kAll) {
    for (std::size_t i = 0; i < wanted.size(); ++i) {
      if (!seen[i]) {
        throw ConfigError("target domain '" + std::string(to_string(domain)) +
                          "' needs role '" + std::string(to_string(wanted[i])) +
                          "', which the model does not have");
      }
    }
  } else if (picked.empty()) {
    throw ConfigError("model has no prunable matrices");
  }
  std::sort(picked.begin(), picked.end(), [](const Entry& a, const Entry& b) {
    if (a.layer != b.layer) return a.layer < b.layer;
    if (a.role_rank != b.role_rank) return a.role_rank < b.role_rank;
    return *a.name < *b.name;
  });
  std::vector<std::string> names;
  names.reserve(picked.size());
  for (const Entry& e : picked) names.push_back(*e.name);
  return names;
}

PruningState initial_pruning_state(const ParamTable& params,
                                   const std::vector<std::string>& names) {
  PruningState state;
  for (const std::string& name : names) {
    const Matrix& w = params.at(name).value;
    state.masks.emplace(name, Mask(w.rows(), w.cols(), true));
  }
  return state;
}

PruningState pruning_event(const PruningState& state, const ParamTable& weights,
                           std::int64_t t, const PruningSchedule& s) {
  const double v = density_at(t, s);
  PruningState next;
  next.current_density = v;
  next.last_event_step = t;
  for (const auto& [name, old_mask] : state.masks) {
    const Param* p = weights.find(name);
    if (p == nullptr) {
      throw IntegrityError("pruning_event: mask '" + name + "' has no matching weight");
    }
    if (p->value.rows() != old_mask.rows() || p->value.cols() != old_mask.cols()) {
      throw IntegrityError("pruning_event: weight '" + name + "' is " +
                           shape_string(p->value) + " but its mask is " +
                           shape_string(old_mask.rows(), old_mask.cols()));
    }
    next.masks.emplace(name, compute_mask(p->value, v));
  }
  return next;
}

NodeId apply_mask(ExprGraph& g, NodeId w, const Mask& m) {
  const Matrix& value = g.value(w);
  if (value.rows() != m.rows() || value.cols() != m.cols()) {
    throw ShapeError("apply_mask: weight " + shape_string(value) + " vs mask " +
                     shape_string(m.rows(), m.cols()));
  }
  return g.mul(w, g.constant(m.to_matrix()));
}

}  // namespace spur
