#include "vcpcfg/evaluation.hpp"

#include <cmath>
#include <random>
#include <sstream>

namespace vcpcfg::evaluation {

SpanSet make_span_set(const ParseTree& tree) {
  SpanSet s;
  s.n = tree.n;
  for (const auto& sp : tree.spans) {
    const int width = sp.end - sp.start;
    if (width < 2) continue;
    if (sp.start == 0 && sp.end == tree.n) continue;
    s.spans.emplace(sp.start, sp.end);
  }
  return s;
}

namespace {

long intersection_size(const SpanSet& a, const SpanSet& b) {
  long hits = 0;
  for (const auto& sp : a.spans) hits += b.spans.count(sp);
  return hits;
}

double f1_from_counts(long hits, long pred, long gold) {
  if (pred == 0 && gold == 0) return 1.0;
  if (pred == 0 || gold == 0) return 0.0;
  const double p = static_cast<double>(hits) / pred;
  const double r = static_cast<double>(hits) / gold;
  if (p + r == 0.0) return 0.0;
  return 2.0 * p * r / (p + r);
}

}  // namespace

double sentence_f1(const SpanSet& pred, const SpanSet& gold) {
  require(pred.n == gold.n, "sentence_f1: length mismatch");
  return f1_from_counts(intersection_size(pred, gold),
                        static_cast<long>(pred.spans.size()),
                        static_cast<long>(gold.spans.size()));
}

double corpus_f1(const std::vector<SpanSet>& preds,
                 const std::vector<SpanSet>& golds) {
  require(preds.size() == golds.size(), "corpus_f1: corpus size mismatch");
  long hits = 0, pred = 0, gold = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    require(preds[i].n == golds[i].n, "corpus_f1: length mismatch");
    hits += intersection_size(preds[i], golds[i]);
    pred += static_cast<long>(preds[i].spans.size());
    gold += static_cast<long>(golds[i].spans.size());
  }
  return f1_from_counts(hits, pred, gold);
}

std::optional<double> label_recall(const std::vector<SpanSet>& preds,
                                   const std::vector<ParseTree>& golds,
                                   const std::string& label) {
  require(preds.size() == golds.size(), "label_recall: corpus size mismatch");
  long total = 0, hit = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    for (const auto& sp : golds[i].spans) {
      if (sp.label != label) continue;
      if (sp.end - sp.start < 2) continue;
      if (sp.start == 0 && sp.end == golds[i].n) continue;
      ++total;
      hit += preds[i].spans.count({sp.start, sp.end});
    }
  }
  if (total == 0) return std::nullopt;
  return static_cast<double>(hit) / total;
}

std::map<int, double> recall_by_length(const std::vector<SpanSet>& preds,
                                       const std::vector<ParseTree>& golds) {
  require(preds.size() == golds.size(),
          "recall_by_length: corpus size mismatch");
  std::map<int, std::pair<long, long>> counts;  // width -> (hit, total)
  for (std::size_t i = 0; i < preds.size(); ++i) {
    for (const auto& sp : golds[i].spans) {
      const int width = sp.end - sp.start;
      if (width < 2) continue;
      if (sp.start == 0 && sp.end == golds[i].n) continue;
      auto& [hit, total] = counts[width];
      ++total;
      hit += preds[i].spans.count({sp.start, sp.end});
    }
  }
  std::map<int, double> out;
  for (const auto& [width, c] : counts)
    out[width] = static_cast<double>(c.first) / c.second;
  return out;
}

double self_f1(const std::vector<std::vector<SpanSet>>& runs) {
  require(runs.size() >= 2, "self_f1 needs at least two runs");
  for (const auto& run : runs)
    require(run.size() == runs[0].size(), "self_f1: runs are misaligned");
  double pair_sum = 0.0;
  long pairs = 0;
  for (std::size_t a = 0; a < runs.size(); ++a) {
    for (std::size_t b = a + 1; b < runs.size(); ++b) {
      double sent_sum = 0.0;
      for (std::size_t i = 0; i < runs[a].size(); ++i)
        sent_sum += sentence_f1(runs[a][i], runs[b][i]);
      pair_sum += sent_sum / runs[a].size();
      ++pairs;
    }
  }
  return pair_sum / pairs;
}

namespace {

// Catalan numbers as doubles (plenty of precision for sampling weights).
double catalan(int k) {
  static std::vector<double> memo{1.0};
  while (static_cast<int>(memo.size()) <= k) {
    const int n = static_cast<int>(memo.size());
    double c = 0.0;
    for (int i = 0; i < n; ++i) c += memo[i] * memo[n - 1 - i];
    memo.push_back(c);
  }
  return memo[k];
}

void random_splits(int i, int j, std::mt19937_64& rng, ParseTree& tree) {
  const int width = j - i;
  if (width < 2) return;
  tree.spans.push_back({i, j, "X"});
  if (width == 2) return;
  // Choose the root split with probability proportional to the number of
  // bracketings of each side, giving a uniform draw over bracketings.
  std::vector<double> w;
  for (int s = i + 1; s < j; ++s)
    w.push_back(catalan(s - i - 1) * catalan(j - s - 1));
  std::discrete_distribution<int> pick(w.begin(), w.end());
  const int s = i + 1 + pick(rng);
  random_splits(i, s, rng, tree);
  random_splits(s, j, rng, tree);
}

}  // namespace

ParseTree baseline_tree(int n, BaselineMode mode, std::uint64_t seed) {
  require(n >= 2, "baseline_tree: n must be >= 2");
  ParseTree t;
  t.n = n;
  switch (mode) {
    case BaselineMode::Left:
      for (int j = n; j >= 2; --j) t.spans.push_back({0, j, "X"});
      break;
    case BaselineMode::Right:
      for (int i = 0; i + 2 <= n; ++i) t.spans.push_back({i, n, "X"});
      break;
    case BaselineMode::Random: {
      std::mt19937_64 rng(seed);
      random_splits(0, n, rng, t);
      break;
    }
  }
  return t;
}

EvalReport evaluate(const std::vector<ParseTree>& preds,
                    const std::vector<ParseTree>& golds,
                    const std::vector<std::string>& labels) {
  if (preds.size() != golds.size())
    throw DataError("prediction/gold tree count mismatch: " +
                    std::to_string(preds.size()) + " vs " +
                    std::to_string(golds.size()));
  std::vector<SpanSet> ps, gs;
  ps.reserve(preds.size());
  gs.reserve(golds.size());
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (preds[i].n != golds[i].n)
      throw DataError("sentence " + std::to_string(i) +
                      ": prediction has " + std::to_string(preds[i].n) +
                      " tokens, gold has " + std::to_string(golds[i].n));
    ps.push_back(make_span_set(preds[i]));
    gs.push_back(make_span_set(golds[i]));
  }
  EvalReport r;
  r.sentences = static_cast<long>(preds.size());
  r.corpus = corpus_f1(ps, gs);
  double sum = 0.0;
  for (std::size_t i = 0; i < ps.size(); ++i) sum += sentence_f1(ps[i], gs[i]);
  r.sentence = ps.empty() ? 0.0 : sum / ps.size();
  for (const auto& label : labels)
    if (auto rec = label_recall(ps, golds, label)) r.by_label[label] = *rec;
  r.by_length = recall_by_length(ps, golds);
  return r;
}

std::string report_table(const EvalReport& r) {
  std::ostringstream out;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", r.corpus);
  out << "sentences:   " << r.sentences << "\n";
  out << "corpus F1:   " << buf << "\n";
  std::snprintf(buf, sizeof buf, "%.3f", r.sentence);
  out << "sentence F1: " << buf << "\n";
  for (const auto& [label, rec] : r.by_label) {
    std::snprintf(buf, sizeof buf, "%.3f", rec);
    out << "recall[" << label << "]: " << buf << "\n";
  }
  return out.str();
}

std::string report_csv(const EvalReport& r) {
  std::ostringstream out;
  char buf[64];
  out << "metric,key,value\n";
  std::snprintf(buf, sizeof buf, "%.6f", r.corpus);
  out << "corpus_f1,," << buf << "\n";
  std::snprintf(buf, sizeof buf, "%.6f", r.sentence);
  out << "sentence_f1,," << buf << "\n";
  for (const auto& [label, rec] : r.by_label) {
    std::snprintf(buf, sizeof buf, "%.6f", rec);
    out << "label_recall," << label << "," << buf << "\n";
  }
  for (const auto& [width, rec] : r.by_length) {
    std::snprintf(buf, sizeof buf, "%.6f", rec);
    out << "recall_by_length," << width << "," << buf << "\n";
  }
  return out.str();
}

}  // namespace vcpcfg::evaluation
