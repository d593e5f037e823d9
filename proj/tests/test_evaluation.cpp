#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <vector>

#include "vcpcfg/evaluation.hpp"
#include "vcpcfg/trees.hpp"

using namespace vcpcfg;
using namespace vcpcfg::evaluation;

namespace {

SpanSet spans(int n, std::vector<std::pair<int, int>> v) {
  SpanSet s;
  s.n = n;
  for (auto p : v) s.spans.insert(p);
  return s;
}

ParseTree tree(int n, std::vector<LabeledSpan> v) {
  ParseTree t;
  t.n = n;
  t.spans = std::move(v);
  return t;
}

}  // namespace

TEST_CASE("make_span_set drops trivial spans") {
  auto t = tree(4, {{0, 4, "S"}, {0, 2, "NP"}, {2, 4, "VP"}, {2, 3, "V"}});
  auto s = make_span_set(t);
  CHECK(s.n == 4);
  CHECK(s.spans == std::set<std::pair<int, int>>{{0, 2}, {2, 4}});
}

TEST_CASE("sentence F1 fixtures") {
  // pred {(0,2),(1,3)} vs gold {(0,2),(2,4)}: P = R = 1/2 -> F1 = 0.5.
  auto pred = spans(4, {{0, 2}, {1, 3}});
  auto gold = spans(4, {{0, 2}, {2, 4}});
  CHECK(sentence_f1(pred, gold) == doctest::Approx(0.5).epsilon(1e-12));
  // Disjoint sets score zero.
  CHECK(sentence_f1(spans(4, {{1, 3}}), gold) == 0.0);
  // Both empty is perfect (e.g. length-2 sentences have no evaluable spans).
  CHECK(sentence_f1(spans(2, {}), spans(2, {})) == 1.0);
  // One-sided empty scores zero.
  CHECK(sentence_f1(spans(4, {}), gold) == 0.0);
  CHECK_THROWS_AS(sentence_f1(spans(3, {}), gold), ContractError);
}

TEST_CASE("corpus F1 pools counts across sentences") {
  // Sentence 1: 1 hit of pred 2 / gold 2. Sentence 2: 0 hits of pred 1 /
  // gold 2. Pooled: P = 1/3, R = 1/4 -> F1 = 2*(1/3)*(1/4)/(7/12) = 2/7.
  std::vector<SpanSet> preds = {spans(4, {{0, 2}, {1, 3}}),
                                spans(5, {{1, 4}})};
  std::vector<SpanSet> golds = {spans(4, {{0, 2}, {2, 4}}),
                                spans(5, {{0, 2}, {2, 5}})};
  CHECK(corpus_f1(preds, golds) ==
        doctest::Approx(2.0 / 7.0).epsilon(1e-12));
  // Differs from the sentence-mean (0.5 + 0)/2 = 0.25 on the same input.
  double mean = (sentence_f1(preds[0], golds[0]) +
                 sentence_f1(preds[1], golds[1])) / 2.0;
  CHECK(mean == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("label recall fixture") {
  // 4 non-trivial gold NP spans, 1 recovered -> 0.25.
  std::vector<ParseTree> golds = {
      tree(5, {{0, 5, "S"}, {0, 2, "NP"}, {2, 4, "NP"}}),
      tree(5, {{0, 5, "S"}, {1, 3, "NP"}, {3, 5, "NP"}, {0, 5, "NP"}})};
  std::vector<SpanSet> preds = {spans(5, {{0, 2}}), spans(5, {{0, 3}})};
  auto r = label_recall(preds, golds, "NP");
  REQUIRE(r.has_value());
  CHECK(*r == doctest::Approx(0.25).epsilon(1e-12));
  CHECK_FALSE(label_recall(preds, golds, "PP").has_value());
}

TEST_CASE("recall by span width") {
  std::vector<ParseTree> golds = {
      tree(5, {{0, 5, "S"}, {0, 2, "NP"}, {2, 4, "NP"}, {1, 4, "VP"}})};
  std::vector<SpanSet> preds = {spans(5, {{0, 2}, {1, 4}})};
  auto by_len = recall_by_length(preds, golds);
  REQUIRE(by_len.size() == 2);
  CHECK(by_len.at(2) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(by_len.at(3) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("self F1 over runs") {
  auto a = spans(5, {{0, 2}, {2, 4}});
  auto b = spans(5, {{0, 2}, {1, 3}});
  // Identical runs score 1.
  CHECK(self_f1({{a}, {a}}) == doctest::Approx(1.0).epsilon(1e-12));
  // Half-overlapping runs score 0.5.
  CHECK(self_f1({{a}, {b}}) == doctest::Approx(0.5).epsilon(1e-12));
  // Four runs -> six unordered pairs, all averaged.
  double v = self_f1({{a}, {a}, {b}, {b}});
  // Pairs: (a,a)=1, (a,b)=.5 x4, (b,b)=1 -> (2 + 2)/6.
  CHECK(v == doctest::Approx(4.0 / 6.0).epsilon(1e-12));
  CHECK_THROWS_AS(self_f1({{a}}), ContractError);
}

TEST_CASE("left and right branching baselines") {
  auto left = make_span_set(baseline_tree(4, BaselineMode::Left));
  CHECK(left.spans == std::set<std::pair<int, int>>{{0, 2}, {0, 3}});
  auto right = make_span_set(baseline_tree(4, BaselineMode::Right));
  CHECK(right.spans == std::set<std::pair<int, int>>{{1, 4}, {2, 4}});
  CHECK_THROWS_AS(baseline_tree(1, BaselineMode::Left), ContractError);
}

TEST_CASE("random baseline is uniform over bracketings") {
  // n = 4 has 5 bracketings; each non-trivial span pair identifies one.
  // 50k draws: each bracketing expected 10000, sd = sqrt(50000*0.2*0.8).
  std::map<std::set<std::pair<int, int>>, int> counts;
  const int draws = 50000;
  for (int i = 0; i < draws; ++i) {
    auto t = baseline_tree(4, BaselineMode::Random,
                           static_cast<std::uint64_t>(i) * 2654435761u + 1);
    counts[make_span_set(t).spans]++;
  }
  REQUIRE(counts.size() == 5);
  const double expect = draws / 5.0;
  const double sd = std::sqrt(draws * 0.2 * 0.8);
  for (const auto& [shape, c] : counts) {
    CHECK(std::fabs(c - expect) < 3.0 * sd);
  }
  // Same seed, same tree.
  auto t1 = baseline_tree(7, BaselineMode::Random, 42);
  auto t2 = baseline_tree(7, BaselineMode::Random, 42);
  CHECK(t1.span_set() == t2.span_set());
}

TEST_CASE("evaluate produces a full report and validates alignment") {
  std::vector<ParseTree> golds = {
      tree(4, {{0, 4, "S"}, {0, 2, "NP"}, {2, 4, "VP"}}),
      tree(3, {{0, 3, "S"}, {1, 3, "VP"}})};
  std::vector<ParseTree> preds = {
      tree(4, {{0, 4, "X"}, {0, 2, "X"}, {1, 3, "X"}}),
      tree(3, {{0, 3, "X"}, {1, 3, "X"}})};
  auto r = evaluate(preds, golds, {"NP", "VP", "PP"});
  CHECK(r.sentences == 2);
  // Pooled: hits 2, pred 3, gold 3 -> 2/3. Sentence mean: (0.5 + 1)/2.
  CHECK(r.corpus == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(r.sentence == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(r.by_label.at("NP") == doctest::Approx(1.0));
  CHECK(r.by_label.at("VP") == doctest::Approx(0.5));
  CHECK(r.by_label.count("PP") == 0);
  CHECK(r.by_length.at(2) == doctest::Approx(2.0 / 3.0));

  auto table = report_table(r);
  CHECK(table.find("corpus F1") != std::string::npos);
  auto csv = report_csv(r);
  CHECK(csv.rfind("metric,key,value\n", 0) == 0);
  CHECK(csv.find("label_recall,NP,") != std::string::npos);

  preds.pop_back();
  CHECK_THROWS_AS(evaluate(preds, golds, {}), DataError);
  preds.push_back(tree(5, {}));
  CHECK_THROWS_AS(evaluate(preds, golds, {}), DataError);
}
