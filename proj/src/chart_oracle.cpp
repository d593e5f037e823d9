#include "vcpcfg/chart_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>

namespace vcpcfg::chart {

namespace {

struct BNode {
  int i, j;
  std::shared_ptr<BNode> l, r;  // null for leaves
  bool leaf() const { return j - i == 1; }
};
using NodePtr = std::shared_ptr<BNode>;

// Linear-space rule tables.
struct LinRules {
  int num_nt, num_pt, m;
  std::vector<double> root;
  std::vector<std::vector<double>> binary;
  std::vector<std::vector<double>> emission;

  explicit LinRules(const RuleProbs& r)
      : num_nt(r.num_nt), num_pt(r.num_pt), m(r.num_symbols()) {
    auto lin = [](const std::vector<double>& logp) {
      std::vector<double> out(logp.size());
      for (std::size_t i = 0; i < logp.size(); ++i) out[i] = std::exp(logp[i]);
      return out;
    };
    root = lin(r.root);
    for (const auto& b : r.binary) binary.push_back(lin(b));
    for (const auto& e : r.emission) emission.push_back(lin(e));
  }
  int pair(int b, int c) const { return b * m + c; }
};

std::vector<NodePtr> bracketings(int i, int j,
                                 std::map<std::pair<int, int>,
                                          std::vector<NodePtr>>& memo) {
  auto it = memo.find({i, j});
  if (it != memo.end()) return it->second;
  std::vector<NodePtr> out;
  if (j - i == 1) {
    out.push_back(std::make_shared<BNode>(BNode{i, j, nullptr, nullptr}));
  } else {
    for (int s = i + 1; s < j; ++s) {
      for (const auto& l : bracketings(i, s, memo))
        for (const auto& r : bracketings(s, j, memo))
          out.push_back(std::make_shared<BNode>(BNode{i, j, l, r}));
    }
  }
  memo[{i, j}] = out;
  return out;
}

// Symbol-marginal inside vector within a fixed tree. Leaves are over P
// (local ids), internal nodes over N.
std::vector<double> tree_inside(const BNode& node, const LinRules& R,
                                const std::vector<int>& tokens,
                                std::map<const BNode*, std::vector<double>>& memo) {
  auto it = memo.find(&node);
  if (it != memo.end()) return it->second;
  std::vector<double> in;
  if (node.leaf()) {
    in.resize(R.num_pt);
    for (int t = 0; t < R.num_pt; ++t) in[t] = R.emission[t][tokens[node.i]];
  } else {
    const auto lin = tree_inside(*node.l, R, tokens, memo);
    const auto rin = tree_inside(*node.r, R, tokens, memo);
    const int lb = node.l->leaf() ? R.num_nt : 0;
    const int rb = node.r->leaf() ? R.num_nt : 0;
    in.assign(R.num_nt, 0.0);
    for (int a = 0; a < R.num_nt; ++a) {
      double acc = 0.0;
      for (std::size_t b = 0; b < lin.size(); ++b)
        for (std::size_t c = 0; c < rin.size(); ++c)
          acc += R.binary[a][R.pair(lb + static_cast<int>(b),
                                    rb + static_cast<int>(c))] *
                 lin[b] * rin[c];
      in[a] = acc;
    }
  }
  memo[&node] = in;
  return in;
}

// Max over labelings, with backpointers for the best labeling.
struct MaxCell {
  std::vector<double> score;
  std::vector<std::pair<int, int>> argmax;  // local (b, c) child labels
};

MaxCell tree_max(const BNode& node, const LinRules& R,
                 const std::vector<int>& tokens,
                 std::map<const BNode*, MaxCell>& memo) {
  auto it = memo.find(&node);
  if (it != memo.end()) return it->second;
  MaxCell out;
  if (node.leaf()) {
    out.score.resize(R.num_pt);
    for (int t = 0; t < R.num_pt; ++t)
      out.score[t] = R.emission[t][tokens[node.i]];
  } else {
    const auto lm = tree_max(*node.l, R, tokens, memo);
    const auto rm = tree_max(*node.r, R, tokens, memo);
    const int lb = node.l->leaf() ? R.num_nt : 0;
    const int rb = node.r->leaf() ? R.num_nt : 0;
    out.score.assign(R.num_nt, -1.0);
    out.argmax.assign(R.num_nt, {-1, -1});
    for (int a = 0; a < R.num_nt; ++a) {
      for (std::size_t b = 0; b < lm.score.size(); ++b) {
        for (std::size_t c = 0; c < rm.score.size(); ++c) {
          const double cand =
              R.binary[a][R.pair(lb + static_cast<int>(b),
                                 rb + static_cast<int>(c))] *
              lm.score[b] * rm.score[c];
          if (cand > out.score[a]) {
            out.score[a] = cand;
            out.argmax[a] = {static_cast<int>(b), static_cast<int>(c)};
          }
        }
      }
    }
  }
  memo[&node] = out;
  return out;
}

void collect_spans(const BNode& node, std::vector<Span>& spans) {
  if (node.leaf()) return;
  spans.push_back({node.i, node.j});
  collect_spans(*node.l, spans);
  collect_spans(*node.r, spans);
}

}  // namespace

std::vector<EnumTree> enumerate_trees(const RuleProbs& rules,
                                      const std::vector<int>& tokens) {
  const int n = static_cast<int>(tokens.size());
  if (n > 8) throw ContractError("enumerate_trees: refusing n > 8");
  if (n < 2) throw DataError("enumerate_trees: need n >= 2");
  LinRules R(rules);

  std::map<std::pair<int, int>, std::vector<NodePtr>> structs;
  auto trees = bracketings(0, n, structs);

  std::map<const BNode*, std::vector<double>> in_memo;
  std::map<const BNode*, MaxCell> max_memo;

  std::vector<EnumTree> out;
  out.reserve(trees.size());
  for (const auto& t : trees) {
    EnumTree et;
    collect_spans(*t, et.spans);
    std::sort(et.spans.begin(), et.spans.end());

    const auto in = tree_inside(*t, R, tokens, in_memo);
    double prob = 0.0;
    for (int a = 0; a < R.num_nt; ++a) prob += R.root[a] * in[a];
    et.prob = prob;

    const auto mx = tree_max(*t, R, tokens, max_memo);
    double best = -1.0;
    int best_a = -1;
    for (int a = 0; a < R.num_nt; ++a) {
      if (R.root[a] * mx.score[a] > best) {
        best = R.root[a] * mx.score[a];
        best_a = a;
      }
    }
    et.best_log_score = std::log(best);
    et.best_tree.n = n;
    et.best_tree.log_score = et.best_log_score;
    std::function<void(const BNode&, int)> walk = [&](const BNode& node,
                                                      int sym_local) {
      if (node.leaf()) {
        et.best_tree.spans.push_back(
            {node.i, node.j, "T" + std::to_string(sym_local)});
        return;
      }
      et.best_tree.spans.push_back(
          {node.i, node.j, "NT" + std::to_string(sym_local)});
      const auto [b, c] = max_memo.at(&node).argmax[sym_local];
      walk(*node.l, b);
      walk(*node.r, c);
    };
    walk(*t, best_a);
    out.push_back(std::move(et));
  }
  return out;
}

OracleStats oracle_stats(const RuleProbs& rules,
                         const std::vector<int>& tokens) {
  const int n = static_cast<int>(tokens.size());
  if (n > 8) throw ContractError("oracle_stats: refusing n > 8");
  LinRules R(rules);

  std::map<std::pair<int, int>, std::vector<NodePtr>> structs;
  auto trees = bracketings(0, n, structs);
  std::map<const BNode*, std::vector<double>> in_memo;

  OracleStats st;
  for (int i = 0; i < n; ++i)
    for (int j = i + 2; j <= n; ++j) {
      st.mu[{i, j}] = 0.0;
      st.labeled[{i, j}].assign(R.num_nt, 0.0);
    }

  double best = -1.0;
  const EnumTree* best_et = nullptr;
  auto enumerated = enumerate_trees(rules, tokens);

  for (std::size_t ti = 0; ti < trees.size(); ++ti) {
    const auto& t = trees[ti];
    const auto in = tree_inside(*t, R, tokens, in_memo);
    double prob = 0.0;
    for (int a = 0; a < R.num_nt; ++a) prob += R.root[a] * in[a];
    st.z += prob;

    // Within-tree outside pass for labeled marginal contributions.
    std::function<void(const BNode&, const std::vector<double>&)> down =
        [&](const BNode& node, const std::vector<double>& out_vec) {
          if (node.leaf()) return;
          const auto& node_in = in_memo.at(&node);
          auto& lab = st.labeled[{node.i, node.j}];
          for (int a = 0; a < R.num_nt; ++a)
            lab[a] += out_vec[a] * node_in[a];
          st.mu[{node.i, node.j}] += prob;

          const auto lin = in_memo.at(node.l.get());
          const auto rin = in_memo.at(node.r.get());
          const int lb = node.l->leaf() ? R.num_nt : 0;
          const int rb = node.r->leaf() ? R.num_nt : 0;
          std::vector<double> lout(lin.size(), 0.0), rout(rin.size(), 0.0);
          for (int a = 0; a < R.num_nt; ++a) {
            if (out_vec[a] == 0.0) continue;
            for (std::size_t b = 0; b < lin.size(); ++b)
              for (std::size_t c = 0; c < rin.size(); ++c) {
                const double pi =
                    R.binary[a][R.pair(lb + static_cast<int>(b),
                                       rb + static_cast<int>(c))];
                lout[b] += out_vec[a] * pi * rin[c];
                rout[c] += out_vec[a] * pi * lin[b];
              }
          }
          down(*node.l, lout);
          down(*node.r, rout);
        };
    down(*t, R.root);

    if (enumerated[ti].prob > 0 && std::exp(enumerated[ti].best_log_score) > best) {
      best = std::exp(enumerated[ti].best_log_score);
      best_et = &enumerated[ti];
    }
  }

  st.log_z = std::log(st.z);
  for (auto& [span, v] : st.mu) v /= st.z;
  for (auto& [span, v] : st.labeled)
    for (double& x : v) x /= st.z;
  require(best_et != nullptr, "oracle_stats: no viable tree");
  st.best_log_score = best_et->best_log_score;
  st.best_tree = best_et->best_tree;
  return st;
}

}  // namespace vcpcfg::chart
