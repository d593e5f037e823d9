#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <string>

#include "vcpcfg/params.hpp"

namespace vcpcfg {

struct GradCheckResult {
  double max_rel_err = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  std::size_t coords_checked = 0;
};

inline double relative_error(double a, double b) {
  const double diff = std::fabs(a - b);
  return diff / std::max(1e-6, std::fabs(a) + std::fabs(b));
}

// Central finite differences against the analytic gradient returned by f.
// f must be deterministic (fix all noise). When a parameter has more than
// max_coords coordinates, a seeded subset of that size is checked.
inline GradCheckResult grad_check(
    const std::function<std::pair<double, GradientMap>(const ParamStore&)>& f,
    const ParamStore& point, double step,
    std::size_t max_coords = std::size_t(-1), std::uint64_t seed = 0) {
  require(step > 0.0, "grad_check: step must be positive");
  auto [value, analytic] = f(point);
  if (!std::isfinite(value))
    throw NumericError("grad_check: non-finite function value at the base point");

  GradCheckResult res;
  ParamStore work = point;
  std::mt19937_64 rng(seed);
  for (auto& [name, arr] : work.arrays()) {
    // A parameter the loss never touches has an implicit zero gradient.
    static const std::vector<double> kEmpty;
    const auto git = analytic.find(name);
    const auto& g = git != analytic.end() ? git->second : kEmpty;
    auto analytic_at = [&](std::size_t i) {
      return i < g.size() ? g[i] : 0.0;
    };
    std::vector<std::size_t> coords;
    if (arr.size() <= max_coords) {
      coords.resize(arr.size());
      for (std::size_t i = 0; i < coords.size(); ++i) coords[i] = i;
    } else {
      std::uniform_int_distribution<std::size_t> pick(0, arr.size() - 1);
      coords.resize(max_coords);
      for (auto& c : coords) c = pick(rng);
    }
    for (std::size_t i : coords) {
      const double saved = arr.data[i];
      arr.data[i] = saved + step;
      const double fp = f(work).first;
      arr.data[i] = saved - step;
      const double fm = f(work).first;
      arr.data[i] = saved;
      if (!std::isfinite(fp) || !std::isfinite(fm))
        throw NumericError("grad_check: non-finite value perturbing " + name +
                           "[" + std::to_string(i) + "]");
      const double fd = (fp - fm) / (2.0 * step);
      const double rel = relative_error(analytic_at(i), fd);
      ++res.coords_checked;
      if (rel > res.max_rel_err) {
        res.max_rel_err = rel;
        res.worst_param = name;
        res.worst_index = i;
      }
    }
  }
  return res;
}

}  // namespace vcpcfg
