#pragma once

#include <map>
#include <vector>

#include "vcpcfg/chart.hpp"
#include "vcpcfg/grammar.hpp"
#include "vcpcfg/trees.hpp"

namespace vcpcfg::chart {

// Brute-force enumeration over all binary bracketings (Catalan growth, so
// n <= 8). Per bracketing, label assignments are handled exactly by small
// sum/max dynamic programs inside the fixed tree, so `prob` sums over every
// labeling and `best_log_score` maximizes over them.
struct EnumTree {
  std::vector<Span> spans;  // width >= 2 spans, includes (0, n)
  double prob = 0.0;        // summed over labelings
  double best_log_score = 0.0;
  ParseTree best_tree;      // argmax labeling of this bracketing
};

std::vector<EnumTree> enumerate_trees(const RuleProbs& rules,
                                      const std::vector<int>& tokens);

// Everything the exact-inference tests compare against, computed from the
// enumeration alone.
struct OracleStats {
  double z = 0.0;  // total probability mass
  double log_z = 0.0;
  std::map<Span, double> mu;                    // span marginals
  std::map<Span, std::vector<double>> labeled;  // joint span-label marginals
  double best_log_score = 0.0;
  ParseTree best_tree;
};

OracleStats oracle_stats(const RuleProbs& rules,
                         const std::vector<int>& tokens);

}  // namespace vcpcfg::chart
