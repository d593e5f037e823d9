#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "vcpcfg/common.hpp"
#include "vcpcfg/trees.hpp"

namespace vcpcfg::evaluation {

// Deduplicated evaluable spans of one sentence: width-1 spans and the
// whole-sentence span are excluded as trivial.
struct SpanSet {
  int n = 0;
  std::set<std::pair<int, int>> spans;
};

SpanSet make_span_set(const ParseTree& tree);

double sentence_f1(const SpanSet& pred, const SpanSet& gold);

double corpus_f1(const std::vector<SpanSet>& preds,
                 const std::vector<SpanSet>& golds);

// Recall on gold spans carrying `label` (trivial spans excluded from gold
// too). Empty optional when the label never occurs.
std::optional<double> label_recall(const std::vector<SpanSet>& preds,
                                   const std::vector<ParseTree>& golds,
                                   const std::string& label);

// Recall restricted to gold spans of each width >= 2; lengths with no gold
// spans are absent.
std::map<int, double> recall_by_length(const std::vector<SpanSet>& preds,
                                       const std::vector<ParseTree>& golds);

// Mean over unordered run pairs of the mean per-sentence F1 between the two
// runs' predictions.
double self_f1(const std::vector<std::vector<SpanSet>>& runs);

enum class BaselineMode { Left, Right, Random };

ParseTree baseline_tree(int n, BaselineMode mode, std::uint64_t seed = 0);

struct EvalReport {
  double corpus = 0.0;
  double sentence = 0.0;
  long sentences = 0;
  std::map<std::string, double> by_label;
  std::map<int, double> by_length;
};

EvalReport evaluate(const std::vector<ParseTree>& preds,
                    const std::vector<ParseTree>& golds,
                    const std::vector<std::string>& labels);

// Human-readable table and plot-ready CSV renderings.
std::string report_table(const EvalReport& r);
std::string report_csv(const EvalReport& r);

}  // namespace vcpcfg::evaluation
