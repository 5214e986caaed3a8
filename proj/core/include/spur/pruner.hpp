#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "spur/graph.hpp"
#include "spur/matrix.hpp"
#include "spur/params.hpp"

namespace spur {

// Cubic density schedule. v is the fraction of weights that SURVIVE:
//   v(t) = v_final + (v_initial − v_final)·(1 − p)³,  p = clamp((t − t_i)/ramp_steps, 0, 1)
struct PruningSchedule {
  double v_initial = 1.0;
  double v_final = 1.0;
  std::int64_t t_i = 0;
  std::int64_t ramp_steps = 1;
  std::int64_t cadence = 16;
  std::int64_t total_steps = 1;

  void validate() const;
};

double density_at(std::int64_t t, const PruningSchedule& s);

// Number of survivors for density v over n entries, round half up.
std::size_t survivor_count(double v, std::size_t n);

// Binary keep/remove pattern for one weight matrix; 1 = surviving.
class Mask {
 public:
  Mask() = default;
  Mask(std::size_t rows, std::size_t cols, bool keep = true);
  Mask(std::size_t rows, std::size_t cols, std::vector<std::uint8_t> bits);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return bits_.size(); }
  bool operator()(std::size_t r, std::size_t c) const noexcept {
    return bits_[r * cols_ + c] != 0;
  }
  bool test(std::size_t i) const noexcept { return bits_[i] != 0; }
  void set(std::size_t r, std::size_t c, bool keep) noexcept {
    bits_[r * cols_ + c] = keep ? 1 : 0;
  }
  std::size_t popcount() const noexcept;
  const std::vector<std::uint8_t>& bits() const noexcept { return bits_; }

  // 0/1 as a Matrix.
  Matrix to_matrix() const;

  friend bool operator==(const Mask&, const Mask&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::uint8_t> bits_;
};

// Keeps the round(v·r·c) entries of largest magnitude; among equal
// magnitudes the smaller row-major index survives.
Mask compute_mask(const Matrix& w, double v);

enum class TargetDomain : std::uint8_t { kAll, kQPlusK, kQOnly, kKOnly };

std::string_view to_string(TargetDomain d);
// "all", "q+k" (or "qk", "q_plus_k"), "q", "k". Throws ConfigError.
TargetDomain parse_target_domain(std::string_view text);

// Prunable matrix names covered by the domain, ordered by layer then by role
// (Q, K, V, O, FF1, FF2, Dense). Throws ConfigError when the domain asks for
// a role the model does not have.
std::vector<std::string> select_targets(const ParamTable& params, TargetDomain domain);

struct PruningState {
  std::map<std::string, Mask> masks;
  double current_density = 1.0;
  std::int64_t last_event_step = 0;
};

// All-ones masks for the named weights.
PruningState initial_pruning_state(const ParamTable& params,
                                   const std::vector<std::string>& names);

// Recomputes every mask from the current underlying weights at density_at(t).
// Previously removed weights may re-enter if their magnitude now ranks.
PruningState pruning_event(const PruningState& state, const ParamTable& weights,
                           std::int64_t t, const PruningSchedule& s);

// w ⊙ mask with the mask held constant.
NodeId apply_mask(ExprGraph& g, NodeId w, const Mask& m);

}  // namespace spur
