#include "spur/optimizer.hpp"

#include <cmath>
#include <string>

#include "spur/error.hpp"

namespace spur {

void AdamConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("optimizer.learning_rate must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) throw ConfigError("optimizer.beta1 must lie in [0, 1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("optimizer.beta2 must lie in [0, 1)");
  if (!(eps > 0.0)) throw ConfigError("optimizer.eps must be positive");
}

AdamState make_adam_state(const ParamTable& params) {
  AdamState s;
  for (const Param& p : params) {
    s.m.emplace_back(p.value.rows(), p.value.cols());
    s.v.emplace_back(p.value.rows(), p.value.cols());
  }
  return s;
}

void adam_step(ParamTable& params, std::span<const Matrix> grads, AdamState& state,
               const AdamConfig& config, std::int64_t step, const PruningState* masks) {
  if (grads.size() != params.size() || state.m.size() != params.size()) {
    throw ShapeError("adam_step: " + std::to_string(grads.size()) + " gradients and " +
                     std::to_string(state.m.size()) + " moment slots for " +
                     std::to_string(params.size()) + " parameters");
  }
  if (step < 1) throw ContractError("adam_step: step is 1-based");
  const double t = static_cast<double>(step);
  const double c1 = 1.0 - std::pow(config.beta1, t);
  const double c2 = 1.0 - std::pow(config.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Matrix& w = params[i].value;
    const Matrix& g = grads[i];
    if (!w.same_shape(g)) {
      throw ShapeError("adam_step: gradient for '" + params[i].name + "' is " + shape_string(g) +
                       ", parameter is " + shape_string(w));
    }
    const Mask* mask = nullptr;
    if (masks != nullptr) {
      auto it = masks->masks.find(params[i].name);
      if (it != masks->masks.end()) mask = &it->second;
    }
    Matrix& m = state.m[i];
    Matrix& v = state.v[i];
    for (std::size_t j = 0; j < w.size(); ++j) {
      if (mask != nullptr && !mask->test(j)) continue;
      m[j] = config.beta1 * m[j] + (1.0 - config.beta1) * g[j];
      v[j] = config.beta2 * v[j] + (1.0 - config.beta2) * g[j] * g[j];
      const double m_hat = m[j] / c1;
      const double v_hat = v[j] / c2;
      w[j] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + config.eps);
    }
  }
}

}  // namespace spur
