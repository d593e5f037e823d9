#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "vcpcfg/common.hpp"
#include "vcpcfg/grammar.hpp"
#include "vcpcfg/trees.hpp"

namespace vcpcfg::corpus {

// Token ids with id 0 reserved for the unknown word.
class Vocabulary {
 public:
  static constexpr int kUnk = 0;
  static constexpr const char* kUnkSurface = "<unk>";

  Vocabulary() : id_to_token_{kUnkSurface} {}

  int add(const std::string& token);
  int encode(const std::string& token) const;
  const std::string& decode(int id) const;
  int size() const { return static_cast<int>(id_to_token_.size()); }

 private:
  std::unordered_map<std::string, int> token_to_id_;
  std::vector<std::string> id_to_token_;
};

// True when the token consists solely of punctuation characters (the fixed
// removal set: . , ! ? ; : ' " ( ) [ ] - / em-dash and backticks).
bool is_punctuation(const std::string& token);

// Whitespace-splits one line and drops punctuation-only tokens.
std::vector<std::string> split_tokens(const std::string& line);

// One tokenized caption per line; punctuation removed. Keeps empty token
// lists so line alignment with features and gold trees is preserved.
std::vector<std::vector<std::string>> load_captions(const std::string& path);

// Frequency-descending vocabulary, ties broken by first occurrence, capped.
Vocabulary build_vocab(const std::vector<std::vector<std::string>>& sentences,
                       int cap = 10000);

std::vector<int> encode(const Vocabulary& vocab,
                        const std::vector<std::string>& tokens);

struct FeatureTable {
  int rows = 0;
  int dim = 0;
  std::vector<float> data;  // row-major

  std::vector<double> row(int i) const;
};

// Binary ("VCFEAT1") or JSON-lines (one array per line), sniffed by magic.
FeatureTable load_features(const std::string& path);
void save_features(const std::string& path, const FeatureTable& table);

// Caption line -> feature row. Blocked mode: line i -> floor(i / k).
std::vector<int> blocked_alignment(int num_captions, int captions_per_image,
                                   int num_rows);
// Index file: one 0-based feature-row index per caption line.
std::vector<int> load_alignment_index(const std::string& path,
                                      int num_captions, int num_rows);

struct GroundedExample {
  std::vector<int> tokens;
  int image_row = -1;
};

std::vector<GroundedExample> assemble(
    const Vocabulary& vocab,
    const std::vector<std::vector<std::string>>& sentences,
    const std::vector<int>& alignment);

// ----- synthetic grounded corpus (desk-scale fixture) ----------------------

// A tiny CNF grammar: one start symbol, binary rules over named phrase
// labels, and per-tag word lists with emission probabilities.
struct ToyGrammar {
  std::vector<std::string> nt_names;  // index 0 is the start symbol
  std::vector<std::string> pt_names;
  // (parent nt, left symbol name, right symbol name, probability)
  struct Rule {
    int parent;
    std::string left, right;
    double prob;
  };
  std::vector<Rule> rules;
  std::vector<std::vector<std::string>> words;    // per preterminal
  std::vector<std::vector<double>> word_probs;    // per preterminal
  int noun_tag = -1;  // preterminal whose words carry concept vectors

  int nt_index(const std::string& name) const;
  int pt_index(const std::string& name) const;
  void validate() const;  // rule and emission rows must sum to 1
};

// The built-in 6-nonterminal / 6-tag / 50-word grammar used by the synthetic
// corpus generator. Nouns are the grounded concepts.
const ToyGrammar& builtin_toy_grammar();

// The toy grammar as dense log-probability rule tables over the given word
// order (for cross-checks against chart inference).
RuleProbs toy_rule_probs(const ToyGrammar& g,
                         const std::vector<std::string>& word_order);

// Flat list of every toy-grammar word, preterminal-major, for indexing.
std::vector<std::string> toy_word_list(const ToyGrammar& g);

struct SyntheticConfig {
  int size = 2000;
  std::uint64_t seed = 0;
  double noise_scale = 0.1;
  int feature_dim = 16;
  int min_length = 3;
  int max_length = 20;
};

struct SyntheticCorpus {
  std::vector<std::vector<std::string>> sentences;
  std::vector<ParseTree> trees;          // true trees, aligned
  std::vector<std::string> tree_lines;   // bracketed serialization
  FeatureTable features;                 // one row per sentence
};

// Samples sentences with their true trees from the built-in toy grammar;
// each feature row is the normalized sum of the sentence's noun-concept unit
// vectors plus seeded Gaussian noise. Deterministic in the seed.
SyntheticCorpus generate_synthetic(const SyntheticConfig& cfg);

}  // namespace vcpcfg::corpus
