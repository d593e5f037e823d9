#pragma once

#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "vcpcfg/common.hpp"
#include "vcpcfg/dual.hpp"
#include "vcpcfg/kernels.hpp"
#include "vcpcfg/params.hpp"

namespace vcpcfg {

// Reverse-mode tape over a closed operation library. Templated on the scalar
// type: S = double for ordinary gradients, S = Dual for forward-over-reverse
// (seed tangents on leaves, read tangent_grads() after backward).
//
// A tape is confined to one thread. backward() may be called repeatedly;
// adjoints are re-zeroed each time.
template <class S>
class Tape {
 public:
  Tape() = default;
  // Backward closures capture `this`; pin the tape in place.
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  Tape(Tape&&) = delete;
  Tape& operator=(Tape&&) = delete;

  struct Var {
    std::int32_t id = -1;
    bool valid() const { return id >= 0; }
  };

  // ----- leaves ---------------------------------------------------------

  Var leaf(std::vector<S> values, int rows, int cols = 1) {
    require(static_cast<std::size_t>(rows) * cols == values.size(),
            "leaf shape mismatch");
    const Var v = alloc(rows, cols);
    node(v).val = std::move(values);
    back_.emplace_back([] {});
    return v;
  }

  Var leaf_zero(int rows, int cols = 1) {
    return leaf(std::vector<S>(static_cast<std::size_t>(rows) * cols, S(0.0)),
                rows, cols);
  }

  Var scalar(S value) { return leaf({value}, 1, 1); }

  Var constant(std::span<const double> values, int rows, int cols = 1) {
    std::vector<S> v(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) v[i] = S(values[i]);
    return leaf(std::move(v), rows, cols);
  }

  // Registers a named parameter leaf; its adjoint lands in grads().
  Var param(const std::string& name, const Array& a) {
    Var v = constant(a.data, a.rows, a.cols);
    params_.emplace_back(name, v.id);
    return v;
  }

  // ----- elementwise arithmetic ------------------------------------------

  Var add(Var a, Var b) {
    same_shape(a, b, "add");
    Var o = alloc_like(a);
    auto& ov = node(o).val;
    const auto& av = node(a).val;
    const auto& bv = node(b).val;
    if constexpr (std::is_same_v<S, double>) {
      kernels::active().add(av.data(), bv.data(), ov.data(), ov.size());
    } else {
      for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = av[i] + bv[i];
    }
    back_.emplace_back([this, a, b, o] {
      axpy_adj(a, o, 1.0);
      axpy_adj(b, o, 1.0);
    });
    return o;
  }

  Var sub(Var a, Var b) {
    same_shape(a, b, "sub");
    Var o = alloc_like(a);
    auto& ov = node(o).val;
    const auto& av = node(a).val;
    const auto& bv = node(b).val;
    if constexpr (std::is_same_v<S, double>) {
      kernels::active().sub(av.data(), bv.data(), ov.data(), ov.size());
    } else {
      for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = av[i] - bv[i];
    }
    back_.emplace_back([this, a, b, o] {
      axpy_adj(a, o, 1.0);
      axpy_adj(b, o, -1.0);
    });
    return o;
  }

  Var mul(Var a, Var b) {
    same_shape(a, b, "mul");
    Var o = alloc_like(a);
    auto& ov = node(o).val;
    const auto& av = node(a).val;
    const auto& bv = node(b).val;
    if constexpr (std::is_same_v<S, double>) {
      kernels::active().mul(av.data(), bv.data(), ov.data(), ov.size());
    } else {
      for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = av[i] * bv[i];
    }
    back_.emplace_back([this, a, b, o] {
      auto& aa = node(a).adj;
      auto& ba = node(b).adj;
      const auto& oa = node(o).adj;
      const auto& av2 = node(a).val;
      const auto& bv2 = node(b).val;
      for (std::size_t i = 0; i < oa.size(); ++i) {
        aa[i] += oa[i] * bv2[i];
        ba[i] += oa[i] * av2[i];
      }
    });
    return o;
  }

  Var neg(Var a) { return scale_const(a, -1.0); }

  Var scale_const(Var a, double c) {
    Var o = alloc_like(a);
    auto& ov = node(o).val;
    const auto& av = node(a).val;
    for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = av[i] * S(c);
    back_.emplace_back([this, a, o, c] { axpy_adj(a, o, c); });
    return o;
  }

  Var add_const(Var a, double c) {
    Var o = alloc_like(a);
    auto& ov = node(o).val;
    const auto& av = node(a).val;
    for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = av[i] + S(c);
    back_.emplace_back([this, a, o] { axpy_adj(a, o, 1.0); });
    return o;
  }

  // out_k = a_k + s (s scalar var)
  Var add_bcast(Var a, Var s) {
    check_scalar(s, "add_bcast");
    Var o = alloc_like(a);
    auto& ov = node(o).val;
    const auto& av = node(a).val;
    const S sv = node(s).val[0];
    for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = av[i] + sv;
    back_.emplace_back([this, a, s, o] {
      axpy_adj(a, o, 1.0);
      S acc(0.0);
      for (const S& g : node(o).adj) acc += g;
      node(s).adj[0] += acc;
    });
    return o;
  }

  Var sub_bcast(Var a, Var s) {
    check_scalar(s, "sub_bcast");
    Var o = alloc_like(a);
    auto& ov = node(o).val;
    const auto& av = node(a).val;
    const S sv = node(s).val[0];
    for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = av[i] - sv;
    back_.emplace_back([this, a, s, o] {
      axpy_adj(a, o, 1.0);
      S acc(0.0);
      for (const S& g : node(o).adj) acc += g;
      node(s).adj[0] -= acc;
    });
    return o;
  }

  // out_k = a_k * s (s scalar var)
  Var mul_bcast(Var a, Var s) {
    check_scalar(s, "mul_bcast");
    Var o = alloc_like(a);
    auto& ov = node(o).val;
    const auto& av = node(a).val;
    const S sv = node(s).val[0];
    for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = av[i] * sv;
    back_.emplace_back([this, a, s, o] {
      auto& aa = node(a).adj;
      const auto& oa = node(o).adj;
      const auto& av2 = node(a).val;
      const S sv2 = node(s).val[0];
      S acc(0.0);
      for (std::size_t i = 0; i < oa.size(); ++i) {
        aa[i] += oa[i] * sv2;
        acc += oa[i] * av2[i];
      }
      node(s).adj[0] += acc;
    });
    return o;
  }

  // out_k = a_k / s
  Var div_bcast(Var a, Var s) {
    check_scalar(s, "div_bcast");
    Var o = alloc_like(a);
    auto& ov = node(o).val;
    const auto& av = node(a).val;
    const S sv = node(s).val[0];
    for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = av[i] / sv;
    back_.emplace_back([this, a, s, o] {
      auto& aa = node(a).adj;
      const auto& oa = node(o).adj;
      const auto& ov2 = node(o).val;
      const S sv2 = node(s).val[0];
      S acc(0.0);
      for (std::size_t i = 0; i < oa.size(); ++i) {
        aa[i] += oa[i] / sv2;
        acc += oa[i] * ov2[i];
      }
      node(s).adj[0] -= acc / sv2;
    });
    return o;
  }

  // ----- linear algebra ---------------------------------------------------

  Var matvec(Var w, Var x) {
    const auto& wn = node(w);
    const auto& xn = node(x);
    require(wn.cols == xn.rows && xn.cols == 1, "matvec shape mismatch");
    Var o = alloc(wn.rows, 1);
    auto& ov = node(o).val;
    if constexpr (std::is_same_v<S, double>) {
      kernels::matvec(kernels::active(), wn.val.data(), xn.val.data(),
                      ov.data(), wn.rows, wn.cols);
    } else {
      for (int r = 0; r < wn.rows; ++r) {
        S acc(0.0);
        for (int c = 0; c < wn.cols; ++c) acc += wn.val[r * wn.cols + c] * xn.val[c];
        ov[r] = acc;
      }
    }
    back_.emplace_back([this, w, x, o] {
      auto& wa = node(w).adj;
      auto& xa = node(x).adj;
      const auto& oa = node(o).adj;
      const auto& wv = node(w).val;
      const auto& xv = node(x).val;
      const int rows = node(w).rows, cols = node(w).cols;
      if constexpr (std::is_same_v<S, double>) {
        const auto& k = kernels::active();
        for (int r = 0; r < rows; ++r) {
          k.axpy(oa[r], xv.data(), wa.data() + r * cols, cols);
          k.axpy(oa[r], wv.data() + r * cols, xa.data(), cols);
        }
      } else {
        for (int r = 0; r < rows; ++r) {
          for (int c = 0; c < cols; ++c) {
            wa[r * cols + c] += oa[r] * xv[c];
            xa[c] += oa[r] * wv[r * cols + c];
          }
        }
      }
    });
    return o;
  }

  Var affine(Var w, Var x, Var b) { return add(matvec(w, x), b); }

  Var dot(Var a, Var b) {
    same_shape(a, b, "dot");
    const auto& av = node(a).val;
    const auto& bv = node(b).val;
    S acc(0.0);
    if constexpr (std::is_same_v<S, double>) {
      acc = kernels::active().dot(av.data(), bv.data(), av.size());
    } else {
      for (std::size_t i = 0; i < av.size(); ++i) acc += av[i] * bv[i];
    }
    Var o = alloc(1, 1);
    node(o).val[0] = acc;
    back_.emplace_back([this, a, b, o] {
      const S g = node(o).adj[0];
      auto& aa = node(a).adj;
      auto& ba = node(b).adj;
      const auto& av2 = node(a).val;
      const auto& bv2 = node(b).val;
      if constexpr (std::is_same_v<S, double>) {
        const auto& k = kernels::active();
        k.axpy(g, bv2.data(), aa.data(), aa.size());
        k.axpy(g, av2.data(), ba.data(), ba.size());
      } else {
        for (std::size_t i = 0; i < aa.size(); ++i) {
          aa[i] += g * bv2[i];
          ba[i] += g * av2[i];
        }
      }
    });
    return o;
  }

  Var sum(Var a) {
    const auto& av = node(a).val;
    S acc(0.0);
    if constexpr (std::is_same_v<S, double>) {
      acc = kernels::active().sum(av.data(), av.size());
    } else {
      for (const S& x : av) acc += x;
    }
    Var o = alloc(1, 1);
    node(o).val[0] = acc;
    back_.emplace_back([this, a, o] {
      const S g = node(o).adj[0];
      for (S& x : node(a).adj) x += g;
    });
    return o;
  }

  Var mean(Var a) {
    return scale_const(sum(a), 1.0 / static_cast<double>(node(a).val.size()));
  }

  // ----- structural ops ---------------------------------------------------

  Var concat(Var a, Var b) {
    const auto& av = node(a).val;
    const auto& bv = node(b).val;
    Var o = alloc(static_cast<int>(av.size() + bv.size()), 1);
    auto& ov = node(o).val;
    std::copy(av.begin(), av.end(), ov.begin());
    std::copy(bv.begin(), bv.end(), ov.begin() + av.size());
    back_.emplace_back([this, a, b, o] {
      const auto& oa = node(o).adj;
      auto& aa = node(a).adj;
      auto& ba = node(b).adj;
      for (std::size_t i = 0; i < aa.size(); ++i) aa[i] += oa[i];
      for (std::size_t i = 0; i < ba.size(); ++i) ba[i] += oa[aa.size() + i];
    });
    return o;
  }

  Var slice(Var a, int offset, int len) {
    require(offset >= 0 && offset + len <= static_cast<int>(node(a).val.size()),
            "slice out of range");
    Var o = alloc(len, 1);
    auto& ov = node(o).val;
    const auto& av = node(a).val;
    std::copy(av.begin() + offset, av.begin() + offset + len, ov.begin());
    back_.emplace_back([this, a, o, offset, len] {
      const auto& oa = node(o).adj;
      auto& aa = node(a).adj;
      for (int i = 0; i < len; ++i) aa[offset + i] += oa[i];
    });
    return o;
  }

  // Row i of a matrix var (embedding lookup).
  Var row(Var m, int i) {
    const auto& mn = node(m);
    require(i >= 0 && i < mn.rows, "row index out of range");
    return slice(m, i * mn.cols, mn.cols);
  }

  Var at(Var v, int i) { return slice(v, i, 1); }

  Var pack(const std::vector<Var>& scalars) {
    Var o = alloc(static_cast<int>(scalars.size()), 1);
    auto& ov = node(o).val;
    for (std::size_t i = 0; i < scalars.size(); ++i) {
      check_scalar(scalars[i], "pack");
      ov[i] = node(scalars[i]).val[0];
    }
    back_.emplace_back([this, scalars, o] {
      const auto& oa = node(o).adj;
      for (std::size_t i = 0; i < scalars.size(); ++i)
        node(scalars[i]).adj[0] += oa[i];
    });
    return o;
  }

  Var gather(Var a, std::vector<int> idx) {
    Var o = alloc(static_cast<int>(idx.size()), 1);
    auto& ov = node(o).val;
    const auto& av = node(a).val;
    for (std::size_t i = 0; i < idx.size(); ++i) {
      require(idx[i] >= 0 && idx[i] < static_cast<int>(av.size()),
              "gather index out of range");
      ov[i] = av[idx[i]];
    }
    back_.emplace_back([this, a, o, idx = std::move(idx)] {
      const auto& oa = node(o).adj;
      auto& aa = node(a).adj;
      for (std::size_t i = 0; i < idx.size(); ++i) aa[idx[i]] += oa[i];
    });
    return o;
  }

  // out[i*|b| + j] = a_i + b_j
  Var outer_sum(Var a, Var b) {
    const auto& av = node(a).val;
    const auto& bv = node(b).val;
    const int na = static_cast<int>(av.size()), nb = static_cast<int>(bv.size());
    Var o = alloc(na * nb, 1);
    auto& ov = node(o).val;
    for (int i = 0; i < na; ++i)
      for (int j = 0; j < nb; ++j) ov[i * nb + j] = av[i] + bv[j];
    back_.emplace_back([this, a, b, o, na, nb] {
      const auto& oa = node(o).adj;
      auto& aa = node(a).adj;
      auto& ba = node(b).adj;
      for (int i = 0; i < na; ++i) {
        S acc(0.0);
        for (int j = 0; j < nb; ++j) {
          acc += oa[i * nb + j];
          ba[j] += oa[i * nb + j];
        }
        aa[i] += acc;
      }
    });
    return o;
  }

  // ----- nonlinearities ----------------------------------------------------

  Var tanh_(Var a) {
    Var o = alloc_like(a);
    auto& ov = node(o).val;
    const auto& av = node(a).val;
    using std::tanh;
    for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = tanh(av[i]);
    back_.emplace_back([this, a, o] {
      auto& aa = node(a).adj;
      const auto& oa = node(o).adj;
      const auto& ov2 = node(o).val;
      for (std::size_t i = 0; i < oa.size(); ++i)
        aa[i] += oa[i] * (S(1.0) - ov2[i] * ov2[i]);
    });
    return o;
  }

  Var sigmoid_(Var a) {
    Var o = alloc_like(a);
    auto& ov = node(o).val;
    const auto& av = node(a).val;
    using std::exp;
    for (std::size_t i = 0; i < ov.size(); ++i)
      ov[i] = S(1.0) / (S(1.0) + exp(-av[i]));
    back_.emplace_back([this, a, o] {
      auto& aa = node(a).adj;
      const auto& oa = node(o).adj;
      const auto& ov2 = node(o).val;
      for (std::size_t i = 0; i < oa.size(); ++i)
        aa[i] += oa[i] * ov2[i] * (S(1.0) - ov2[i]);
    });
    return o;
  }

  Var exp_(Var a) {
    Var o = alloc_like(a);
    auto& ov = node(o).val;
    const auto& av = node(a).val;
    using std::exp;
    for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = exp(av[i]);
    back_.emplace_back([this, a, o] {
      auto& aa = node(a).adj;
      const auto& oa = node(o).adj;
      const auto& ov2 = node(o).val;
      for (std::size_t i = 0; i < oa.size(); ++i) aa[i] += oa[i] * ov2[i];
    });
    return o;
  }

  Var log_(Var a) {
    Var o = alloc_like(a);
    auto& ov = node(o).val;
    const auto& av = node(a).val;
    using std::log;
    for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = log(av[i]);
    back_.emplace_back([this, a, o] {
      auto& aa = node(a).adj;
      const auto& oa = node(o).adj;
      const auto& av2 = node(a).val;
      for (std::size_t i = 0; i < oa.size(); ++i) aa[i] += oa[i] / av2[i];
    });
    return o;
  }

  Var relu_(Var a) {
    Var o = alloc_like(a);
    auto& ov = node(o).val;
    const auto& av = node(a).val;
    for (std::size_t i = 0; i < ov.size(); ++i)
      ov[i] = num::value_of(av[i]) > 0.0 ? av[i] : S(0.0);
    back_.emplace_back([this, a, o] {
      auto& aa = node(a).adj;
      const auto& oa = node(o).adj;
      const auto& av2 = node(a).val;
      for (std::size_t i = 0; i < oa.size(); ++i)
        if (num::value_of(av2[i]) > 0.0) aa[i] += oa[i];
    });
    return o;
  }

  // ----- reductions in log space -------------------------------------------

  Var logsumexp(Var a) {
    const auto& av = node(a).val;
    double m = -std::numeric_limits<double>::infinity();
    for (const S& x : av) m = std::max(m, num::value_of(x));
    Var o = alloc(1, 1);
    if (!std::isfinite(m)) {
      node(o).val[0] = S(m);
      back_.emplace_back([] {});
      return o;
    }
    using std::exp;
    using std::log;
    S acc(0.0);
    for (const S& x : av) acc += exp(x - S(m));
    node(o).val[0] = S(m) + log(acc);
    back_.emplace_back([this, a, o] {
      const S g = node(o).adj[0];
      const S out = node(o).val[0];
      auto& aa = node(a).adj;
      const auto& av2 = node(a).val;
      using std::exp;
      for (std::size_t i = 0; i < aa.size(); ++i) {
        if (num::value_of(av2[i]) == -std::numeric_limits<double>::infinity())
          continue;
        aa[i] += g * exp(av2[i] - out);
      }
    });
    return o;
  }

  Var log_softmax(Var a) { return sub_bcast(a, logsumexp(a)); }

  // Elementwise max across equal-length vectors; ties go to the earliest input.
  Var maxpool(const std::vector<Var>& xs) {
    require(!xs.empty(), "maxpool of nothing");
    const std::size_t n = node(xs[0]).val.size();
    Var o = alloc(static_cast<int>(n), 1);
    auto& ov = node(o).val;
    std::vector<std::int32_t> winner(n, 0);
    for (std::size_t i = 0; i < n; ++i) ov[i] = node(xs[0]).val[i];
    for (std::size_t k = 1; k < xs.size(); ++k) {
      const auto& xv = node(xs[k]).val;
      require(xv.size() == n, "maxpool length mismatch");
      for (std::size_t i = 0; i < n; ++i) {
        if (num::value_of(xv[i]) > num::value_of(ov[i])) {
          ov[i] = xv[i];
          winner[i] = static_cast<std::int32_t>(k);
        }
      }
    }
    back_.emplace_back([this, xs, o, winner = std::move(winner)] {
      const auto& oa = node(o).adj;
      for (std::size_t i = 0; i < oa.size(); ++i)
        node(xs[winner[i]]).adj[i] += oa[i];
    });
    return o;
  }

  // cos(a, b); zero-norm inputs yield 0 with zero gradients.
  Var cosine(Var a, Var b) {
    same_shape(a, b, "cosine");
    const auto& av = node(a).val;
    const auto& bv = node(b).val;
    using std::sqrt;
    S aa(0.0), bb(0.0), ab(0.0);
    for (std::size_t i = 0; i < av.size(); ++i) {
      aa += av[i] * av[i];
      bb += bv[i] * bv[i];
      ab += av[i] * bv[i];
    }
    const S na = sqrt(aa), nb = sqrt(bb);
    Var o = alloc(1, 1);
    if (num::value_of(na) < 1e-12 || num::value_of(nb) < 1e-12) {
      node(o).val[0] = S(0.0);
      back_.emplace_back([] {});
      return o;
    }
    const S c = ab / (na * nb);
    node(o).val[0] = c;
    back_.emplace_back([this, a, b, o, na, nb, c] {
      const S g = node(o).adj[0];
      auto& ga = node(a).adj;
      auto& gb = node(b).adj;
      const auto& av2 = node(a).val;
      const auto& bv2 = node(b).val;
      const S inv_ab = S(1.0) / (na * nb);
      const S ca = c / (na * na);
      const S cb = c / (nb * nb);
      for (std::size_t i = 0; i < ga.size(); ++i) {
        ga[i] += g * (bv2[i] * inv_ab - av2[i] * ca);
        gb[i] += g * (av2[i] * inv_ab - bv2[i] * cb);
      }
    });
    return o;
  }

  // ----- backward -----------------------------------------------------------

  void backward(Var out) {
    require(out.valid() && out.id < static_cast<std::int32_t>(nodes_.size()),
            "backward: node not on tape");
    require(node(out).val.size() == 1, "backward: output is not a scalar");
    for (auto& n : nodes_) n.adj.assign(n.val.size(), S(0.0));
    node(out).adj[0] = S(1.0);
    for (std::int32_t i = out.id; i >= 0; --i) back_[i]();
  }

  const std::vector<S>& val(Var v) const { return node(v).val; }
  const std::vector<S>& adj(Var v) const { return node(v).adj; }
  double value(Var v) const {
    check_scalar(v, "value");
    return num::value_of(node(v).val[0]);
  }
  double tangent(Var v) const {
    check_scalar(v, "tangent");
    return num::tangent_of(node(v).val[0]);
  }

  GradientMap grads() const {
    GradientMap g;
    for (const auto& [name, id] : params_) {
      const auto& a = nodes_[id].adj;
      auto& dst = g[name];
      dst.resize(a.size());
      for (std::size_t i = 0; i < a.size(); ++i) dst[i] = num::value_of(a[i]);
    }
    return g;
  }

  GradientMap tangent_grads() const {
    GradientMap g;
    for (const auto& [name, id] : params_) {
      const auto& a = nodes_[id].adj;
      auto& dst = g[name];
      dst.resize(a.size());
      for (std::size_t i = 0; i < a.size(); ++i) dst[i] = num::tangent_of(a[i]);
    }
    return g;
  }

  std::size_t num_nodes() const { return nodes_.size(); }

 private:
  struct Node {
    std::vector<S> val;
    std::vector<S> adj;
    int rows = 0;
    int cols = 1;
  };

  Node& node(Var v) { return nodes_[v.id]; }
  const Node& node(Var v) const { return nodes_[v.id]; }

  Var alloc(int rows, int cols) {
    Var v{static_cast<std::int32_t>(nodes_.size())};
    nodes_.emplace_back();
    nodes_.back().rows = rows;
    nodes_.back().cols = cols;
    nodes_.back().val.resize(static_cast<std::size_t>(rows) * cols);
    return v;
  }

  Var alloc_like(Var a) { return alloc(node(a).rows, node(a).cols); }

  void same_shape(Var a, Var b, const char* op) const {
    require(node(a).val.size() == node(b).val.size(),
            std::string(op) + ": shape mismatch");
  }

  void check_scalar(Var v, const char* op) const {
    require(node(v).val.size() == 1, std::string(op) + ": expected scalar");
  }

  // adj(a) += c * adj(o)
  void axpy_adj(Var a, Var o, double c) {
    auto& aa = node(a).adj;
    const auto& oa = node(o).adj;
    if constexpr (std::is_same_v<S, double>) {
      kernels::active().axpy(c, oa.data(), aa.data(), aa.size());
    } else {
      for (std::size_t i = 0; i < aa.size(); ++i) aa[i] += S(c) * oa[i];
    }
  }

  // A deque keeps Node references stable across alloc(); several ops hold
  // references to input nodes while allocating their output.
  std::deque<Node> nodes_;
  std::vector<std::function<void()>> back_;
  std::vector<std::pair<std::string, std::int32_t>> params_;
};

using DTape = Tape<double>;
using DualTape = Tape<Dual>;

// Reads off the directional-derivative scalar (tangent of the output) and its
// parameter gradient after a dual-tape backward pass.
inline std::pair<double, GradientMap> directional_grad(DualTape& tape,
                                                       DualTape::Var out) {
  tape.backward(out);
  return {tape.tangent(out), tape.tangent_grads()};
}

}  // namespace vcpcfg
