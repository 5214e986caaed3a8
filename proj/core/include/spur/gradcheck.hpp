#pragma once

#include <functional>

#include "spur/matrix.hpp"

namespace spur {

using ScalarFunction = std::function<double(const Matrix&)>;

// Central differences (f(w + h·e_ij) − f(w − h·e_ij)) / 2h for every entry.
Matrix finite_difference_gradient(const ScalarFunction& f, const Matrix& w, double h);

// Largest entrywise violation of |a − b| ≤ max(rel·max(|a|,|b|), abs_floor),
// reported as the ratio |a − b| / allowance. Values ≤ 1 pass.
double gradient_mismatch(const Matrix& analytic, const Matrix& numeric, double rel,
                         double abs_floor);

}  // namespace spur
