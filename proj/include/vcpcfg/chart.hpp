#pragma once

#include <map>
#include <utility>
#include <vector>

#include "vcpcfg/grammar.hpp"
#include "vcpcfg/tape.hpp"
#include "vcpcfg/trees.hpp"

namespace vcpcfg {

using Span = std::pair<int, int>;

// Per-span (and per-label) posterior probabilities over the tree
// distribution. Spans are 0-based with exclusive end; width >= 2 only.
struct SpanMarginals {
  int n = 0;
  int num_nt = 0;
  double log_likelihood = 0.0;
  std::map<Span, std::vector<double>> labeled;  // joint p(span, label)

  double mu(int i, int j) const {
    auto it = labeled.find({i, j});
    require(it != labeled.end(), "mu: invalid span");
    double s = 0.0;
    for (double x : it->second) s += x;
    return s;
  }

  // p(label | span in tree); uniform when the span marginal is ~0.
  std::vector<double> label_posterior(int i, int j) const {
    require(j - i >= 2 && i >= 0 && j <= n, "label_posterior: invalid span");
    auto it = labeled.find({i, j});
    require(it != labeled.end(), "label_posterior: invalid span");
    const double m = mu(i, j);
    std::vector<double> out(it->second.size());
    if (m < 1e-12) {
      std::fill(out.begin(), out.end(), 1.0 / out.size());
    } else {
      for (std::size_t k = 0; k < out.size(); ++k) out[k] = it->second[k] / m;
    }
    return out;
  }
};

namespace chart {

// Tape-resident inside chart. pot[i][j] (width >= 2) are zero-valued leaf
// vectors over N added into each cell; their adjoints after backward(log_z)
// are the labeled span marginals. Tangent seeds on those leaves drive
// forward-over-reverse directional derivatives.
template <class S>
struct InsideResult {
  typename Tape<S>::Var log_z;
  std::vector<std::vector<typename Tape<S>::Var>> cell;  // [i][j]
  std::vector<std::vector<typename Tape<S>::Var>> pot;   // [i][j], width >= 2
  int n = 0;
};

// span_tangent, if given, supplies forward-mode seeds for span (i,j): either
// one value per label, or a single value broadcast across labels.
template <class S>
InsideResult<S> inside(
    Tape<S>& tp, const grammar::RuleProbVars<S>& rules,
    const std::vector<int>& tokens, bool with_potentials = false,
    const std::map<Span, std::vector<double>>* span_tangent = nullptr) {
  using Var = typename Tape<S>::Var;
  const int n = static_cast<int>(tokens.size());
  if (n < 2) throw DataError("no parse: CNF admits no single-word sentence");
  const int num_nt = static_cast<int>(rules.binary.size());
  const int num_pt = static_cast<int>(rules.emission.size());
  const int m = num_nt + num_pt;

  InsideResult<S> res;
  res.n = n;
  res.cell.assign(n + 1, std::vector<Var>(n + 1));
  res.pot.assign(n + 1, std::vector<Var>(n + 1));

  // Pair-index lists for the four child-category combinations, and the
  // gathered binary-rule subvectors per nonterminal (shared across spans).
  auto pair_indices = [&](bool left_pt, bool right_pt) {
    const int lo_b = left_pt ? num_nt : 0, hi_b = left_pt ? m : num_nt;
    const int lo_c = right_pt ? num_nt : 0, hi_c = right_pt ? m : num_nt;
    std::vector<int> idx;
    idx.reserve((hi_b - lo_b) * (hi_c - lo_c));
    for (int b = lo_b; b < hi_b; ++b)
      for (int c = lo_c; c < hi_c; ++c) idx.push_back(b * m + c);
    return idx;
  };
  std::vector<std::vector<Var>> gathered(4, std::vector<Var>(num_nt));
  std::vector<bool> have(4, false);
  auto rules_for = [&](bool left_pt, bool right_pt) -> std::vector<Var>& {
    const int key = (left_pt ? 2 : 0) + (right_pt ? 1 : 0);
    if (!have[key]) {
      auto idx = pair_indices(left_pt, right_pt);
      for (int a = 0; a < num_nt; ++a)
        gathered[key][a] = tp.gather(rules.binary[a], idx);
      have[key] = true;
    }
    return gathered[key];
  };

  for (int i = 0; i < n; ++i) {
    std::vector<Var> scores;
    scores.reserve(num_pt);
    for (int t = 0; t < num_pt; ++t)
      scores.push_back(tp.at(rules.emission[t], tokens[i]));
    res.cell[i][i + 1] = tp.pack(scores);
  }

  for (int width = 2; width <= n; ++width) {
    for (int i = 0; i + width <= n; ++i) {
      const int j = i + width;
      std::vector<std::vector<Var>> per_a(num_nt);
      for (int s = i + 1; s < j; ++s) {
        const bool lp = (s - i == 1), rp = (j - s == 1);
        auto pair = tp.outer_sum(res.cell[i][s], res.cell[s][j]);
        auto& sub = rules_for(lp, rp);
        for (int a = 0; a < num_nt; ++a)
          per_a[a].push_back(tp.logsumexp(tp.add(sub[a], pair)));
      }
      std::vector<Var> cell_scores;
      cell_scores.reserve(num_nt);
      for (int a = 0; a < num_nt; ++a)
        cell_scores.push_back(per_a[a].size() == 1
                                  ? per_a[a][0]
                                  : tp.logsumexp(tp.pack(per_a[a])));
      Var cell = tp.pack(cell_scores);
      if (with_potentials) {
        std::vector<double> seeds(num_nt, 0.0);
        if (span_tangent) {
          auto it = span_tangent->find({i, j});
          if (it != span_tangent->end()) {
            const auto& u = it->second;
            require(u.size() == 1 ||
                        u.size() == static_cast<std::size_t>(num_nt),
                    "inside: tangent seed size mismatch");
            for (int a = 0; a < num_nt; ++a)
              seeds[a] = u.size() == 1 ? u[0] : u[a];
          }
        }
        std::vector<S> init(num_nt);
        for (int a = 0; a < num_nt; ++a)
          init[a] = num::from_parts<S>(0.0, seeds[a]);
        Var pot = tp.leaf(init, num_nt);
        res.pot[i][j] = pot;
        cell = tp.add(cell, pot);
      }
      res.cell[i][j] = cell;
    }
  }

  res.log_z = tp.logsumexp(tp.add(rules.root, res.cell[0][n]));
  return res;
}

// Log-likelihood and exact span marginals via backward through the inside
// pass, for plain rule tables.
SpanMarginals span_marginals(const RuleProbs& rules,
                             const std::vector<int>& tokens);

double log_likelihood(const RuleProbs& rules, const std::vector<int>& tokens);

// Reads the labeled marginals out of an already-backpropagated inside result.
template <class S>
SpanMarginals read_marginals(const Tape<S>& tp, const InsideResult<S>& ir,
                             int num_nt) {
  SpanMarginals sm;
  sm.n = ir.n;
  sm.num_nt = num_nt;
  sm.log_likelihood = tp.value(ir.log_z);
  for (int i = 0; i < ir.n; ++i) {
    for (int j = i + 2; j <= ir.n; ++j) {
      const auto& adj = tp.adj(ir.pot[i][j]);
      std::vector<double> lab(adj.size());
      for (std::size_t k = 0; k < adj.size(); ++k)
        lab[k] = num::value_of(adj[k]);
      sm.labeled[{i, j}] = std::move(lab);
    }
  }
  return sm;
}

// Max-product CYK with backpointers. Ties broken by the smallest split point,
// then the smallest label indices, scanning in that order with strict
// improvement.
ParseTree map_parse(const RuleProbs& rules, const std::vector<int>& tokens);

// Sum over keyed spans of mu(c) * h(c). Value only; the differentiable path
// lives in the model assembly (tape + directional seeds).
double expected_span_loss(const SpanMarginals& marginals,
                          const std::map<Span, double>& span_losses);

}  // namespace chart

}  // namespace vcpcfg
