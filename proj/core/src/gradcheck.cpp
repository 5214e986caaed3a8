#include "spur/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "spur/error.hpp"

namespace spur {

Matrix finite_difference_gradient(const ScalarFunction& f, const Matrix& w, double h) {
  if (!(h > 0.0)) throw ContractError("finite_difference_gradient: step must be positive");
  Matrix probe = w;
  Matrix out(w.rows(), w.cols());
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double original = probe[i];
    probe[i] = original + h;
    const double up = f(probe);
    probe[i] = original - h;
    const double down = f(probe);
    probe[i] = original;
    out[i] = (up - down) / (2.0 * h);
  }
  return out;
}

double gradient_mismatch(const Matrix& analytic, const Matrix& numeric, double rel,
                         double abs_floor) {
  if (!analytic.same_shape(numeric)) {
    throw ShapeError("gradient_mismatch: " + shape_string(analytic) + " vs " +
                     shape_string(numeric));
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double a = analytic[i], b = numeric[i];
    const double allowance = std::max(rel * std::max(std::fabs(a), std::fabs(b)), abs_floor);
    worst = std::max(worst, std::fabs(a - b) / allowance);
  }
  return worst;
}

}  // namespace spur
