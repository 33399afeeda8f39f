#pragma once

// Test-only reference computations. Nothing here calls into the library's
// advantage, loss or gradient code paths.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "grouprl/policy.hpp"

namespace grouprl::oracle {

// Straight-line advantage recomputations in long double.
inline std::vector<double> group_relative(const std::vector<double>& r, double sigma_floor,
                                          bool unit_scale = false) {
  long double mean = 0;
  for (double x : r) mean += x;
  mean /= static_cast<long double>(r.size());
  long double var = 0;
  for (double x : r) var += (x - mean) * (x - mean);
  var /= static_cast<long double>(r.size());
  long double sd = std::sqrt(var);
  if (sd < sigma_floor) sd = sigma_floor;
  if (unit_scale) sd = 1;
  std::vector<double> out;
  for (double x : r) out.push_back(static_cast<double>((x - mean) / sd));
  return out;
}

inline std::vector<double> augmented(const std::vector<double>& pol, const std::vector<double>& ref,
                                     double sigma_floor, double lo, double hi) {
  std::vector<double> out = group_relative(pol, sigma_floor);
  for (std::size_t i = 0; i < out.size(); ++i) {
    double m = pol[i] - ref[i];
    if (m < lo) m = lo;
    if (m > hi) m = hi;
    out[i] += m;
  }
  return out;
}

// Central differences of f over every stored logit of params.
inline std::vector<double> central_differences(const std::function<double(const PolicyParams&)>& f,
                                               const PolicyParams& params, double h) {
  std::vector<double> out;
  PolicyParams work = params;
  for (const auto& [key, logits] : params.rows()) {
    for (std::size_t b = 0; b < logits.size(); ++b) {
      const double x = logits[b];
      work.mutable_row(key)[b] = x + h;
      const double up = f(work);
      work.mutable_row(key)[b] = x - h;
      const double down = f(work);
      work.mutable_row(key)[b] = x;
      out.push_back((up - down) / (2 * h));
    }
  }
  return out;
}

// Flattens a sparse gradient in the same row order as central_differences.
inline std::vector<double> flatten(const Gradient& g, const PolicyParams& params) {
  std::vector<double> out;
  for (const auto& [key, logits] : params.rows()) {
    auto it = g.rows.find(key);
    for (std::size_t b = 0; b < logits.size(); ++b) {
      out.push_back(it == g.rows.end() ? 0.0 : it->second[b]);
    }
  }
  return out;
}

// Largest |a - n| / max(|a|, |n|, floor).
inline double max_relative_error(const std::vector<double>& a, const std::vector<double>& n,
                                 double floor = 1e-6) {
  double worst = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double scale = std::max({std::abs(a[i]), std::abs(n[i]), floor});
    worst = std::max(worst, std::abs(a[i] - n[i]) / scale);
  }
  return worst;
}

}  // namespace grouprl::oracle
