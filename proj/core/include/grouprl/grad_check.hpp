#pragma once

#include <functional>

#include "grouprl/policy.hpp"

namespace grouprl {

struct GradCheckResult {
  std::size_t parameters_checked = 0;
  double max_relative_error = 0.0;
  double max_abs_error = 0.0;
};

// Elementwise error |a - n| / max(|a|, |n|, floor) between an analytic
// gradient and central differences of `loss` over every stored row of
// `params`. `floor` keeps entries that are zero on both sides from dividing
// by zero and absorbs the ~1e-11 rounding noise of central differences.
double relative_error(double analytic, double numeric, double floor = 1e-6);

GradCheckResult check_gradient(const std::function<double(const PolicyParams&)>& loss,
                               const Gradient& analytic, const PolicyParams& params,
                               double step = 1e-5);

}  // namespace grouprl
