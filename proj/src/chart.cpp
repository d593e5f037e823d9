#include "vcpcfg/chart.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

namespace vcpcfg::chart {

SpanMarginals span_marginals(const RuleProbs& rules,
                             const std::vector<int>& tokens) {
  DTape tp;
  auto rv = grammar::lift(tp, rules);
  auto ir = inside(tp, rv, tokens, /*with_potentials=*/true);
  tp.backward(ir.log_z);
  return read_marginals(tp, ir, rules.num_nt);
}

double log_likelihood(const RuleProbs& rules, const std::vector<int>& tokens) {
  DTape tp;
  auto rv = grammar::lift(tp, rules);
  auto ir = inside(tp, rv, tokens);
  return tp.value(ir.log_z);
}

ParseTree map_parse(const RuleProbs& rules, const std::vector<int>& tokens) {
  const int n = static_cast<int>(tokens.size());
  if (n < 2) throw DataError("no parse: CNF admits no single-word sentence");
  const int num_nt = rules.num_nt, num_pt = rules.num_pt;
  const int m = num_nt + num_pt;
  const double ninf = -std::numeric_limits<double>::infinity();

  // score[i][j][sym]; width-1 cells over preterminals (global ids), width>=2
  // over nonterminals. Backpointers: (split, left sym, right sym).
  struct Back {
    int split = -1, left = -1, right = -1;
  };
  auto idx = [n](int i, int j) { return i * (n + 1) + j; };
  std::vector<std::vector<double>> score(static_cast<std::size_t>(n + 1) * (n + 1));
  std::vector<std::vector<Back>> back(score.size());

  for (int i = 0; i < n; ++i) {
    auto& cell = score[idx(i, i + 1)];
    cell.resize(num_pt);
    for (int t = 0; t < num_pt; ++t) cell[t] = rules.emission[t][tokens[i]];
  }

  auto sym_base = [&](int width) { return width == 1 ? num_nt : 0; };
  for (int width = 2; width <= n; ++width) {
    for (int i = 0; i + width <= n; ++i) {
      const int j = i + width;
      auto& cell = score[idx(i, j)];
      auto& bp = back[idx(i, j)];
      cell.assign(num_nt, ninf);
      bp.assign(num_nt, Back{});
      for (int s = i + 1; s < j; ++s) {
        const auto& left = score[idx(i, s)];
        const auto& right = score[idx(s, j)];
        const int lb = sym_base(s - i), rb = sym_base(j - s);
        for (std::size_t bi = 0; bi < left.size(); ++bi) {
          if (left[bi] == ninf) continue;
          const int bsym = lb + static_cast<int>(bi);
          for (std::size_t ci = 0; ci < right.size(); ++ci) {
            if (right[ci] == ninf) continue;
            const int csym = rb + static_cast<int>(ci);
            const double child = left[bi] + right[ci];
            for (int a = 0; a < num_nt; ++a) {
              const double cand =
                  rules.binary[a][rules.pair(bsym, csym)] + child;
              if (cand > cell[a]) {
                cell[a] = cand;
                bp[a] = {s, bsym, csym};
              }
            }
          }
        }
      }
    }
  }

  int best_a = -1;
  double best = ninf;
  const auto& root_cell = score[idx(0, n)];
  for (int a = 0; a < num_nt; ++a) {
    const double cand = rules.root[a] + root_cell[a];
    if (cand > best) {
      best = cand;
      best_a = a;
    }
  }
  require(best_a >= 0, "map_parse: no viable parse");

  ParseTree tree;
  tree.n = n;
  tree.log_score = best;
  std::function<void(int, int, int)> walk = [&](int i, int j, int sym) {
    if (j - i == 1) {
      tree.spans.push_back({i, j, "T" + std::to_string(sym - num_nt)});
      return;
    }
    tree.spans.push_back({i, j, "NT" + std::to_string(sym)});
    const Back& b = back[idx(i, j)][sym];
    walk(i, b.split, b.left);
    walk(b.split, j, b.right);
  };
  walk(0, n, best_a);
  std::sort(tree.spans.begin(), tree.spans.end(),
            [](const LabeledSpan& a, const LabeledSpan& b) {
              return std::tie(a.start, a.end) < std::tie(b.start, b.end);
            });
  return tree;
}

double expected_span_loss(const SpanMarginals& marginals,
                          const std::map<Span, double>& span_losses) {
  double total = 0.0;
  for (const auto& [span, h] : span_losses)
    total += marginals.mu(span.first, span.second) * h;
  return total;
}

}  // namespace vcpcfg::chart
