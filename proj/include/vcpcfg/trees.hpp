#pragma once

#include <set>
#include <string>
#include <utility>
#include <vector>

#include "vcpcfg/common.hpp"

namespace vcpcfg {

struct LabeledSpan {
  int start = 0;
  int end = 0;  // exclusive
  std::string label;
};

// A bracketing as a span set. Predicted trees are binary; ingested gold trees
// may be n-ary. Width-1 spans may carry preterminal labels; evaluation
// ignores them.
struct ParseTree {
  int n = 0;
  std::vector<LabeledSpan> spans;
  double log_score = 0.0;

  std::set<std::pair<int, int>> span_set() const {
    std::set<std::pair<int, int>> s;
    for (const auto& sp : spans) s.emplace(sp.start, sp.end);
    return s;
  }
};

// Reads one bracketed tree. Records spans of all phrasal nodes (nodes with at
// least one subtree child); pure preterminal nodes are kept as width-1
// labeled spans. Unary chains over the same span keep the topmost label.
// Throws DataError on malformed input.
ParseTree parse_bracketed(const std::string& line);

std::vector<ParseTree> load_trees(const std::string& path);

// Tokens of the tree's yield, in order.
std::vector<std::string> tree_tokens(const std::string& line);

// Serializes the span set back to bracketed text over the given tokens.
// Spans must be properly nested. A root bracket is always emitted.
std::string serialize_tree(const ParseTree& tree,
                           const std::vector<std::string>& tokens);

}  // namespace vcpcfg
