#include "grouprl/grad_check.hpp"

#include <algorithm>
#include <cmath>

namespace grouprl {

double relative_error(double analytic, double numeric, double floor) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / scale;
}

GradCheckResult check_gradient(const std::function<double(const PolicyParams&)>& loss,
                               const Gradient& analytic, const PolicyParams& params,
                               double step) {
  GradCheckResult result;
  PolicyParams probe = params;
  for (const auto& [key, logits] : params.rows()) {
    auto git = analytic.rows.find(key);
    for (std::size_t b = 0; b < logits.size(); ++b) {
      std::span<double> row = probe.mutable_row(key);
      const double original = row[b];
      row[b] = original + step;
      const double up = loss(probe);
      row[b] = original - step;
      const double down = loss(probe);
      row[b] = original;
      const double numeric = (up - down) / (2.0 * step);
      const double exact = git == analytic.rows.end() ? 0.0 : git->second[b];
      result.max_abs_error = std::max(result.max_abs_error, std::abs(exact - numeric));
      result.max_relative_error =
          std::max(result.max_relative_error, relative_error(exact, numeric));
      ++result.parameters_checked;
    }
  }
  return result;
}

}  // namespace grouprl
