#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "vcpcfg/chart.hpp"
#include "vcpcfg/tape.hpp"

namespace vcpcfg::matching {

struct MatchingConfig {
  double margin = 0.2;
  // Negative-example handling: single rotated negative (default) or the
  // average over every other example in the batch.
  bool average_all_negatives = false;
  // Pick the negative example uniformly at random instead of rotating.
  bool random_negatives = false;
  double alpha = 0.001;
};

// The ceil(n(n-1)/4) shortest width>=2 spans, ordered by (width, start).
inline std::vector<Span> select_spans(int n) {
  require(n >= 2, "select_spans: n must be >= 2");
  std::vector<Span> all;
  for (int w = 2; w <= n; ++w)
    for (int i = 0; i + w <= n; ++i) all.push_back({i, i + w});
  const int budget = (n * (n - 1) + 3) / 4;  // ceil(n(n-1)/4)
  if (static_cast<int>(all.size()) > budget) all.resize(budget);
  return all;
}

// Deterministic batch rotation; the same index supplies both the negative
// constituent and the negative image.
inline int negative_index(int batch_size, int i) {
  require(batch_size >= 2,
          "contrastive term requires a batch of at least 2 examples");
  return (i + 1) % batch_size;
}

inline double cosine(const std::vector<double>& a,
                     const std::vector<double>& b) {
  require(a.size() == b.size(), "cosine: dimension mismatch");
  double aa = 0, bb = 0, ab = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    aa += a[i] * a[i];
    bb += b[i] * b[i];
    ab += a[i] * b[i];
  }
  const double na = std::sqrt(aa), nb = std::sqrt(bb);
  if (na < 1e-12 || nb < 1e-12) return 0.0;
  return ab / (na * nb);
}

inline double hinge_loss(double m_pos, double m_cneg, double m_vneg,
                         double margin) {
  require(margin > 0.0, "hinge_loss: margin must be positive");
  return std::max(0.0, m_cneg - m_pos + margin) +
         std::max(0.0, m_vneg - m_pos + margin);
}

// Tape version: [m(c',v) - m(c,v) + eps]_+ + [m(c,v') - m(c,v) + eps]_+.
template <class S>
typename Tape<S>::Var hinge(Tape<S>& tp, typename Tape<S>::Var c,
                            typename Tape<S>::Var v,
                            typename Tape<S>::Var c_neg,
                            typename Tape<S>::Var v_neg, double margin) {
  require(margin > 0.0, "hinge: margin must be positive");
  auto m_pos = tp.cosine(c, v);
  auto h1 = tp.relu_(tp.add_const(tp.sub(tp.cosine(c_neg, v), m_pos), margin));
  auto h2 = tp.relu_(tp.add_const(tp.sub(tp.cosine(c, v_neg), m_pos), margin));
  return tp.add(h1, h2);
}

}  // namespace vcpcfg::matching
