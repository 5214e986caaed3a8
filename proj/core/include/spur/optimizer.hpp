#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "spur/matrix.hpp"
#include "spur/params.hpp"
#include "spur/pruner.hpp"

namespace spur {

struct AdamConfig {
  double learning_rate = 3e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  void validate() const;
};

// First/second moment estimates, aligned with the parameter table order.
struct AdamState {
  std::vector<Matrix> m;
  std::vector<Matrix> v;
};

AdamState make_adam_state(const ParamTable& params);

// One bias-corrected Adam update at 1-based `step`. `grads` is aligned with
// the table. Entries whose mask bit is 0 are skipped entirely: value and both
// moments stay untouched.
void adam_step(ParamTable& params, std::span<const Matrix> grads, AdamState& state,
               const AdamConfig& config, std::int64_t step, const PruningState* masks = nullptr);

}  // namespace spur
