#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "vcpcfg/chart.hpp"
#include "vcpcfg/chart_oracle.hpp"
#include "vcpcfg/corpus.hpp"
#include "vcpcfg/trees.hpp"

using namespace vcpcfg;
using namespace vcpcfg::corpus;

namespace {

std::string temp_path(const std::string& stem) {
  return "/tmp/vcpcfg_corpus_test_" + stem;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
}

}  // namespace

TEST_CASE("vocabulary basics") {
  Vocabulary v;
  CHECK(v.size() == 1);
  CHECK(v.decode(Vocabulary::kUnk) == std::string(Vocabulary::kUnkSurface));
  const int a = v.add("alpha");
  CHECK(a == 1);
  CHECK(v.add("alpha") == 1);
  CHECK(v.add("beta") == 2);
  CHECK(v.encode("alpha") == 1);
  CHECK(v.encode("gamma") == Vocabulary::kUnk);
  CHECK(v.decode(2) == "beta");
}

TEST_CASE("vocab cap and frequency ordering with first-occurrence ties") {
  std::vector<std::vector<std::string>> sents = {
      {"a", "a", "b"}, {"c", "b", "d"}, {"d"}};
  // Frequencies: a=2, b=2, c=1, d=2. Ties by first occurrence: a, b, d, c.
  auto v = build_vocab(sents, 10);
  CHECK(v.size() == 5);
  CHECK(v.encode("a") == 1);
  CHECK(v.encode("b") == 2);
  CHECK(v.encode("d") == 3);
  CHECK(v.encode("c") == 4);

  // The cap excludes the reserved unknown slot: cap 1 keeps one real token.
  auto capped = build_vocab(sents, 1);
  CHECK(capped.size() == 2);
  CHECK(capped.encode("a") == 1);
  CHECK(capped.encode("b") == Vocabulary::kUnk);

  auto encoded = encode(capped, {"a", "b", "a"});
  CHECK(encoded == std::vector<int>{1, Vocabulary::kUnk, 1});
}

TEST_CASE("punctuation filtering") {
  CHECK(is_punctuation("."));
  CHECK(is_punctuation("..."));
  CHECK(is_punctuation(",!?"));
  CHECK(is_punctuation("\xE2\x80\x94"));  // em-dash
  CHECK_FALSE(is_punctuation("dog"));
  CHECK_FALSE(is_punctuation("dog."));
  CHECK_FALSE(is_punctuation(""));

  auto toks = split_tokens("  a  dog . ");
  CHECK(toks == std::vector<std::string>{"a", "dog"});
  CHECK(split_tokens(". , !").empty());
}

TEST_CASE("load_captions keeps empty lines for alignment") {
  const auto path = temp_path("caps.txt");
  write_file(path, "a dog runs .\n. . .\nthe cat\n");
  auto caps = load_captions(path);
  REQUIRE(caps.size() == 3);
  CHECK(caps[0] == std::vector<std::string>{"a", "dog", "runs"});
  CHECK(caps[1].empty());
  CHECK(caps[2] == std::vector<std::string>{"the", "cat"});
  std::remove(path.c_str());
  CHECK_THROWS_AS(load_captions(path), DataError);
}

TEST_CASE("feature table binary round-trip and error reporting") {
  FeatureTable t;
  t.rows = 2;
  t.dim = 3;
  t.data = {1.0f, 2.0f, 3.0f, -0.5f, 0.25f, 4.0f};
  const auto path = temp_path("feat.bin");
  save_features(path, t);
  auto back = load_features(path);
  CHECK(back.rows == 2);
  CHECK(back.dim == 3);
  CHECK(back.data == t.data);
  CHECK(back.row(1) == std::vector<double>{-0.5, 0.25, 4.0});

  // Truncated file: error names the byte offset.
  {
    std::ifstream in(path, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
    write_file(path, bytes.substr(0, bytes.size() - 2));
  }
  CHECK_THROWS_WITH_AS(load_features(path),
                       doctest::Contains("byte offset"), DataError);
  std::remove(path.c_str());
}

TEST_CASE("feature table JSONL loading") {
  const auto path = temp_path("feat.jsonl");
  write_file(path, "[1.0, 2.0]\n[3.5, -1.0]\n");
  auto t = load_features(path);
  CHECK(t.rows == 2);
  CHECK(t.dim == 2);
  CHECK(t.row(1) == std::vector<double>{3.5, -1.0});

  write_file(path, "[1.0, 2.0]\n[3.5]\n");
  CHECK_THROWS_AS(load_features(path), DataError);
  std::remove(path.c_str());
}

TEST_CASE("blocked alignment and index files") {
  auto a = blocked_alignment(10, 5, 2);
  REQUIRE(a.size() == 10);
  for (int i = 0; i < 10; ++i) CHECK(a[i] == i / 5);
  CHECK_THROWS_AS(blocked_alignment(10, 5, 3), DataError);
  CHECK_THROWS_AS(blocked_alignment(11, 5, 2), DataError);

  const auto path = temp_path("align.txt");
  write_file(path, "0\n0\n0\n0\n0\n1\n1\n1\n1\n1\n");
  CHECK(load_alignment_index(path, 10, 2) == a);
  write_file(path, "0\n2\n");
  CHECK_THROWS_AS(load_alignment_index(path, 2, 2), DataError);
  std::remove(path.c_str());
}

TEST_CASE("assemble ties captions to rows and drops nothing") {
  Vocabulary v;
  v.add("the");
  v.add("dog");
  auto ex = assemble(v, {{"the", "dog"}, {"dog", "runs"}}, {0, 1});
  REQUIRE(ex.size() == 2);
  CHECK(ex[0].tokens == std::vector<int>{1, 2});
  CHECK(ex[0].image_row == 0);
  CHECK(ex[1].tokens == std::vector<int>{2, Vocabulary::kUnk});
  CHECK(ex[1].image_row == 1);
}

TEST_CASE("gold tree ingestion fixture") {
  auto t = parse_bracketed("(S (NP (DT the) (NN dog)) (VP (VB ran)))");
  CHECK(t.n == 3);
  std::map<std::pair<int, int>, std::string> phrasal;
  for (const auto& sp : t.spans)
    if (sp.end - sp.start >= 2) phrasal[{sp.start, sp.end}] = sp.label;
  REQUIRE(phrasal.size() == 2);
  CHECK(phrasal.at({0, 2}) == "NP");
  CHECK(phrasal.at({0, 3}) == "S");
  // (VP (VB ran)) is a unary chain over one token: width-1, topmost label.
  bool saw_vp = false;
  for (const auto& sp : t.spans)
    if (sp.start == 2 && sp.end == 3 && sp.label == "VP") saw_vp = true;
  CHECK(saw_vp);
}

TEST_CASE("serialize/parse round-trip preserves the span set") {
  const std::string line = "(S (NP (DT a) (NN cat)) (VP (VB sat) (RB down)))";
  auto t = parse_bracketed(line);
  auto toks = tree_tokens(line);
  REQUIRE(toks.size() == 4);
  auto back = parse_bracketed(serialize_tree(t, toks));
  CHECK(back.n == t.n);
  CHECK(back.span_set() == t.span_set());
}

TEST_CASE("builtin toy grammar is normalized and indexable") {
  const auto& g = builtin_toy_grammar();
  CHECK_NOTHROW(g.validate());
  CHECK(g.nt_names[0] == "S");
  CHECK(g.noun_tag == g.pt_index("NOUN"));
  CHECK(toy_word_list(g).size() == 50);

  ToyGrammar broken = g;
  broken.rules[0].prob += 0.5;
  CHECK_THROWS_AS(broken.validate(), DataError);

  ToyGrammar bad_words = g;
  bad_words.word_probs[0][0] += 0.1;
  CHECK_THROWS_AS(bad_words.validate(), DataError);
}

TEST_CASE("synthetic corpus is deterministic in the seed") {
  SyntheticConfig cfg;
  cfg.size = 20;
  cfg.seed = 7;
  cfg.max_length = 12;
  auto a = generate_synthetic(cfg);
  auto b = generate_synthetic(cfg);
  CHECK(a.sentences == b.sentences);
  CHECK(a.tree_lines == b.tree_lines);
  CHECK(a.features.data == b.features.data);
  REQUIRE(a.sentences.size() == 20);
  REQUIRE(a.trees.size() == 20);
  REQUIRE(a.features.rows == 20);
  CHECK(a.features.dim == cfg.feature_dim);

  cfg.seed = 8;
  auto c = generate_synthetic(cfg);
  CHECK(a.sentences != c.sentences);
}

TEST_CASE("synthetic sentences respect the length window and align") {
  SyntheticConfig cfg;
  cfg.size = 50;
  cfg.seed = 3;
  cfg.min_length = 3;
  cfg.max_length = 9;
  auto c = generate_synthetic(cfg);
  for (std::size_t i = 0; i < c.sentences.size(); ++i) {
    const int n = static_cast<int>(c.sentences[i].size());
    CHECK(n >= cfg.min_length);
    CHECK(n <= cfg.max_length);
    CHECK(c.trees[i].n == n);
    CHECK(tree_tokens(c.tree_lines[i]) == c.sentences[i]);
    // Feature rows are normalized concepts plus noise: finite, roughly unit.
    double sq = 0.0;
    for (double x : c.features.row(static_cast<int>(i))) {
      CHECK(std::isfinite(x));
      sq += x * x;
    }
    CHECK(sq > 0.1);
  }
}

TEST_CASE("zero noise makes features a pure function of the nouns") {
  SyntheticConfig cfg;
  cfg.size = 40;
  cfg.seed = 11;
  cfg.noise_scale = 0.0;
  cfg.max_length = 10;
  auto c = generate_synthetic(cfg);
  const auto& g = builtin_toy_grammar();
  std::set<std::string> nouns(g.words[g.noun_tag].begin(),
                              g.words[g.noun_tag].end());
  auto noun_multiset = [&](const std::vector<std::string>& sent) {
    std::multiset<std::string> m;
    for (const auto& w : sent)
      if (nouns.count(w)) m.insert(w);
    return m;
  };
  int compared = 0;
  for (std::size_t i = 0; i < c.sentences.size(); ++i) {
    for (std::size_t j = i + 1; j < c.sentences.size(); ++j) {
      if (noun_multiset(c.sentences[i]) != noun_multiset(c.sentences[j]))
        continue;
      CHECK(c.features.row(static_cast<int>(i)) ==
            c.features.row(static_cast<int>(j)));
      ++compared;
    }
  }
  // With 40 draws some noun multisets repeat; if not, the check is vacuous,
  // so at least assert every sentence has a noun at all.
  for (const auto& s : c.sentences) CHECK(!noun_multiset(s).empty());
  (void)compared;
}

TEST_CASE("sampled trees agree with chart inference on the toy tables") {
  SyntheticConfig cfg;
  cfg.size = 30;
  cfg.seed = 5;
  cfg.min_length = 3;
  cfg.max_length = 7;
  auto c = generate_synthetic(cfg);
  const auto& g = builtin_toy_grammar();
  auto words = toy_word_list(g);
  auto rules = toy_rule_probs(g, words);
  CHECK(rules.num_nt == 6);
  CHECK(rules.num_pt == 6);
  CHECK(rules.vocab == 50);

  Vocabulary v;
  for (const auto& w : words) v.add(w);

  int checked = 0;
  for (std::size_t i = 0; i < c.sentences.size() && checked < 10; ++i) {
    std::vector<int> ids;
    for (const auto& w : c.sentences[i]) {
      const int id = v.encode(w);
      REQUIRE(id != Vocabulary::kUnk);
      ids.push_back(id - 1);  // rule tables index words without the unk slot
    }
    // Inside log-likelihood matches brute-force enumeration, and the sampled
    // tree's bracketing carries nonzero mass in the enumeration.
    const double ll = chart::log_likelihood(rules, ids);
    auto oracle = chart::oracle_stats(rules, ids);
    CHECK(std::isfinite(ll));
    CHECK(ll == doctest::Approx(oracle.log_z).epsilon(1e-9));

    std::set<std::pair<int, int>> sampled;
    for (const auto& sp : c.trees[i].spans)
      if (sp.end - sp.start >= 2) sampled.emplace(sp.start, sp.end);
    bool found = false;
    for (const auto& et : chart::enumerate_trees(rules, ids)) {
      std::set<std::pair<int, int>> spans;
      for (const auto& sp : et.spans) spans.emplace(sp.first, sp.second);
      if (spans == sampled) {
        found = et.prob > 0.0;
        break;
      }
    }
    CHECK(found);
    ++checked;
  }
  CHECK(checked == 10);
}
