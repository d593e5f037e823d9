#pragma once

#include <cmath>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "vcpcfg/common.hpp"

namespace vcpcfg {

// Named dense parameter arrays. std::map keeps iteration order stable so
// gradient merging and checkpointing are deterministic.
struct Array {
  std::vector<double> data;
  int rows = 0;
  int cols = 1;

  std::size_t size() const { return data.size(); }
};

class ParamStore {
 public:
  Array& add(const std::string& name, int rows, int cols = 1) {
    auto [it, fresh] = arrays_.try_emplace(name);
    require(fresh, "duplicate parameter: " + name);
    it->second.rows = rows;
    it->second.cols = cols;
    it->second.data.assign(static_cast<std::size_t>(rows) * cols, 0.0);
    return it->second;
  }
  Array& at(const std::string& name) {
    auto it = arrays_.find(name);
    require(it != arrays_.end(), "unknown parameter: " + name);
    return it->second;
  }
  const Array& at(const std::string& name) const {
    auto it = arrays_.find(name);
    require(it != arrays_.end(), "unknown parameter: " + name);
    return it->second;
  }
  bool has(const std::string& name) const { return arrays_.count(name) != 0; }
  void erase(const std::string& name) { arrays_.erase(name); }

  std::map<std::string, Array>& arrays() { return arrays_; }
  const std::map<std::string, Array>& arrays() const { return arrays_; }

  std::size_t total_size() const {
    std::size_t n = 0;
    for (const auto& [_, a] : arrays_) n += a.size();
    return n;
  }

 private:
  std::map<std::string, Array> arrays_;
};

using GradientMap = std::map<std::string, std::vector<double>>;

inline void accumulate(GradientMap& into, const GradientMap& g, double w = 1.0) {
  for (const auto& [name, v] : g) {
    auto& dst = into[name];
    if (dst.empty()) dst.assign(v.size(), 0.0);
    for (std::size_t i = 0; i < v.size(); ++i) dst[i] += w * v[i];
  }
}

// Xavier uniform: U[-a, a] with a = sqrt(6 / (fan_in + fan_out)).
inline void xavier_init(Array& a, std::mt19937_64& rng) {
  const double bound = std::sqrt(6.0 / (a.rows + a.cols));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (double& x : a.data) x = dist(rng);
}

inline double xavier_bound(int rows, int cols) {
  return std::sqrt(6.0 / (rows + cols));
}

}  // namespace vcpcfg
