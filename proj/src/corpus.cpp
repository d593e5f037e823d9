#include "vcpcfg/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include <json.hpp>

namespace vcpcfg::corpus {

int Vocabulary::add(const std::string& token) {
  auto it = token_to_id_.find(token);
  if (it != token_to_id_.end()) return it->second;
  const int id = size();
  token_to_id_.emplace(token, id);
  id_to_token_.push_back(token);
  return id;
}

int Vocabulary::encode(const std::string& token) const {
  auto it = token_to_id_.find(token);
  return it == token_to_id_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::decode(int id) const {
  require(id >= 0 && id < size(), "vocabulary id out of range");
  return id_to_token_[id];
}

bool is_punctuation(const std::string& token) {
  if (token.empty()) return false;
  static const std::string ascii = ".,!?;:'\"()[]-/`";
  for (std::size_t i = 0; i < token.size();) {
    if (ascii.find(token[i]) != std::string::npos) {
      ++i;
    } else if (token.compare(i, 3, "\xE2\x80\x94") == 0) {  // em-dash
      i += 3;
    } else {
      return false;
    }
  }
  return true;
}

std::vector<std::string> split_tokens(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream in(line);
  std::string tok;
  while (in >> tok)
    if (!is_punctuation(tok)) out.push_back(tok);
  return out;
}

std::vector<std::vector<std::string>> load_captions(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open captions file: " + path);
  std::vector<std::vector<std::string>> out;
  std::string line;
  while (std::getline(in, line)) out.push_back(split_tokens(line));
  return out;
}

Vocabulary build_vocab(const std::vector<std::vector<std::string>>& sentences,
                       int cap) {
  require(cap >= 1, "vocabulary cap must be >= 1");
  struct Entry {
    long count = 0;
    std::size_t first_seen = 0;
  };
  std::unordered_map<std::string, Entry> counts;
  std::vector<const std::string*> order;
  std::size_t seen = 0;
  for (const auto& sent : sentences) {
    for (const auto& tok : sent) {
      auto [it, fresh] = counts.try_emplace(tok);
      if (fresh) {
        it->second.first_seen = seen++;
        order.push_back(&it->first);
      }
      ++it->second.count;
    }
  }
  if (order.empty()) throw DataError("cannot build a vocabulary: no tokens");
  std::sort(order.begin(), order.end(),
            [&](const std::string* a, const std::string* b) {
              const auto& ea = counts.at(*a);
              const auto& eb = counts.at(*b);
              if (ea.count != eb.count) return ea.count > eb.count;
              return ea.first_seen < eb.first_seen;
            });
  Vocabulary v;
  for (const std::string* tok : order) {
    if (v.size() > cap) break;  // cap excludes the reserved UNK slot
    v.add(*tok);
  }
  return v;
}

std::vector<int> encode(const Vocabulary& vocab,
                        const std::vector<std::string>& tokens) {
  std::vector<int> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(vocab.encode(t));
  return out;
}

std::vector<double> FeatureTable::row(int i) const {
  require(i >= 0 && i < rows, "feature row out of range");
  std::vector<double> out(dim);
  for (int j = 0; j < dim; ++j)
    out[j] = static_cast<double>(data[static_cast<std::size_t>(i) * dim + j]);
  return out;
}

namespace {

constexpr char kFeatureMagic[7] = {'V', 'C', 'F', 'E', 'A', 'T', '1'};

std::uint32_t read_u32le(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) |
         (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

void write_u32le(std::ostream& out, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

float read_f32le(const unsigned char* p) {
  const std::uint32_t bits = read_u32le(p);
  float f;
  std::memcpy(&f, &bits, 4);
  return f;
}

FeatureTable load_features_binary(const std::vector<unsigned char>& bytes,
                                  const std::string& path) {
  auto fail = [&](std::size_t offset, const std::string& what) {
    throw DataError("malformed feature file " + path + " at byte offset " +
                    std::to_string(offset) + ": " + what);
  };
  if (bytes.size() < 15) fail(bytes.size(), "truncated header");
  FeatureTable t;
  t.rows = static_cast<int>(read_u32le(bytes.data() + 7));
  t.dim = static_cast<int>(read_u32le(bytes.data() + 11));
  if (t.dim <= 0) fail(11, "dimension must be positive");
  const std::size_t expect =
      15 + 4ull * static_cast<std::size_t>(t.rows) * t.dim;
  if (bytes.size() != expect)
    fail(std::min(bytes.size(), expect),
         "expected " + std::to_string(expect) + " bytes, found " +
             std::to_string(bytes.size()));
  t.data.resize(static_cast<std::size_t>(t.rows) * t.dim);
  for (std::size_t i = 0; i < t.data.size(); ++i) {
    t.data[i] = read_f32le(bytes.data() + 15 + 4 * i);
    if (!std::isfinite(t.data[i])) fail(15 + 4 * i, "non-finite value");
  }
  return t;
}

FeatureTable load_features_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open feature file: " + path);
  FeatureTable t;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw DataError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
    if (!j.is_array())
      throw DataError(path + ":" + std::to_string(lineno) +
                      ": expected a JSON array per line");
    if (t.dim == 0) t.dim = static_cast<int>(j.size());
    if (static_cast<int>(j.size()) != t.dim)
      throw DataError(path + ":" + std::to_string(lineno) +
                      ": row has dimension " + std::to_string(j.size()) +
                      ", expected " + std::to_string(t.dim));
    for (const auto& x : j) {
      if (!x.is_number())
        throw DataError(path + ":" + std::to_string(lineno) +
                        ": non-numeric feature value");
      const double v = x.get<double>();
      if (!std::isfinite(v))
        throw DataError(path + ":" + std::to_string(lineno) +
                        ": non-finite feature value");
      t.data.push_back(static_cast<float>(v));
    }
    ++t.rows;
  }
  if (t.rows == 0) throw DataError("feature file is empty: " + path);
  return t;
}

}  // namespace

FeatureTable load_features(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open feature file: " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  if (bytes.size() >= 7 &&
      std::memcmp(bytes.data(), kFeatureMagic, 7) == 0)
    return load_features_binary(bytes, path);
  return load_features_jsonl(path);
}

void save_features(const std::string& path, const FeatureTable& table) {
  require(static_cast<std::size_t>(table.rows) * table.dim ==
              table.data.size(),
          "feature table shape mismatch");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write feature file: " + path);
  out.write(kFeatureMagic, 7);
  write_u32le(out, static_cast<std::uint32_t>(table.rows));
  write_u32le(out, static_cast<std::uint32_t>(table.dim));
  for (float f : table.data) {
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    write_u32le(out, bits);
  }
  if (!out) throw DataError("failed writing feature file: " + path);
}

std::vector<int> blocked_alignment(int num_captions, int captions_per_image,
                                   int num_rows) {
  require(captions_per_image >= 1, "captions-per-image must be >= 1");
  if (num_captions != captions_per_image * num_rows)
    throw DataError("caption/feature mismatch: " +
                    std::to_string(num_captions) + " captions vs " +
                    std::to_string(num_rows) + " feature rows at " +
                    std::to_string(captions_per_image) + " captions per image");
  std::vector<int> out(num_captions);
  for (int i = 0; i < num_captions; ++i) out[i] = i / captions_per_image;
  return out;
}

std::vector<int> load_alignment_index(const std::string& path,
                                      int num_captions, int num_rows) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open alignment index: " + path);
  std::vector<int> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    int idx = 0;
    try {
      idx = std::stoi(line);
    } catch (const std::exception&) {
      throw DataError(path + ":" + std::to_string(lineno) +
                      ": expected a feature-row index");
    }
    if (idx < 0 || idx >= num_rows)
      throw DataError(path + ":" + std::to_string(lineno) + ": row index " +
                      std::to_string(idx) + " outside [0, " +
                      std::to_string(num_rows) + ")");
    out.push_back(idx);
  }
  if (static_cast<int>(out.size()) != num_captions)
    throw DataError("alignment index has " + std::to_string(out.size()) +
                    " entries for " + std::to_string(num_captions) +
                    " captions");
  return out;
}

std::vector<GroundedExample> assemble(
    const Vocabulary& vocab,
    const std::vector<std::vector<std::string>>& sentences,
    const std::vector<int>& alignment) {
  require(alignment.empty() || alignment.size() == sentences.size(),
          "alignment/caption count mismatch");
  std::vector<GroundedExample> out;
  out.reserve(sentences.size());
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    GroundedExample ex;
    ex.tokens = encode(vocab, sentences[i]);
    ex.image_row = alignment.empty() ? -1 : alignment[i];
    out.push_back(std::move(ex));
  }
  return out;
}

// ----- toy grammar ---------------------------------------------------------

int ToyGrammar::nt_index(const std::string& name) const {
  for (std::size_t i = 0; i < nt_names.size(); ++i)
    if (nt_names[i] == name) return static_cast<int>(i);
  return -1;
}

int ToyGrammar::pt_index(const std::string& name) const {
  for (std::size_t i = 0; i < pt_names.size(); ++i)
    if (pt_names[i] == name) return static_cast<int>(i);
  return -1;
}

void ToyGrammar::validate() const {
  require(!nt_names.empty() && !pt_names.empty(), "toy grammar: no symbols");
  std::vector<double> totals(nt_names.size(), 0.0);
  for (const auto& r : rules) {
    require(r.parent >= 0 && r.parent < static_cast<int>(nt_names.size()),
            "toy grammar: bad rule parent");
    require(nt_index(r.left) >= 0 || pt_index(r.left) >= 0,
            "toy grammar: unknown symbol " + r.left);
    require(nt_index(r.right) >= 0 || pt_index(r.right) >= 0,
            "toy grammar: unknown symbol " + r.right);
    totals[r.parent] += r.prob;
  }
  for (std::size_t a = 0; a < totals.size(); ++a)
    if (std::fabs(totals[a] - 1.0) > 1e-9)
      throw DataError("toy grammar not normalized: rules for " + nt_names[a] +
                      " sum to " + std::to_string(totals[a]));
  require(words.size() == pt_names.size() &&
              word_probs.size() == pt_names.size(),
          "toy grammar: emission table shape mismatch");
  for (std::size_t t = 0; t < words.size(); ++t) {
    require(words[t].size() == word_probs[t].size(),
            "toy grammar: emission row shape mismatch");
    double s = 0.0;
    for (double p : word_probs[t]) s += p;
    if (std::fabs(s - 1.0) > 1e-9)
      throw DataError("toy grammar not normalized: emissions for " +
                      pt_names[t] + " sum to " + std::to_string(s));
  }
}

const ToyGrammar& builtin_toy_grammar() {
  static const ToyGrammar g = [] {
    ToyGrammar t;
    t.nt_names = {"S", "NP", "VP", "PP", "NBAR", "ADVP"};
    t.pt_names = {"DET", "NOUN", "ADJ", "VERB", "PREP", "ADV"};
    auto rule = [&](const char* parent, const char* l, const char* r,
                    double p) {
      t.rules.push_back({t.nt_index(parent), l, r, p});
    };
    rule("S", "NP", "VP", 1.0);
    rule("NP", "DET", "NOUN", 0.45);
    rule("NP", "DET", "NBAR", 0.25);
    rule("NP", "NP", "PP", 0.30);
    rule("NBAR", "ADJ", "NOUN", 0.80);
    rule("NBAR", "ADJ", "NBAR", 0.20);
    rule("VP", "VERB", "NP", 0.55);
    rule("VP", "VP", "PP", 0.25);
    rule("VP", "VP", "ADVP", 0.20);
    rule("PP", "PREP", "NP", 1.0);
    rule("ADVP", "ADV", "ADV", 1.0);
    t.words = {
        {"the", "a", "every", "some", "this"},
        {"dog", "cat", "bird", "fish", "horse", "cow", "fox",
         "frog", "bear", "wolf", "mouse", "rabbit", "goat", "sheep",
         "duck", "owl", "pig", "deer", "seal", "crab"},
        {"big", "small", "red", "blue", "old", "young", "happy", "furry"},
        {"sees", "likes", "chases", "finds", "eats", "holds", "follows",
         "watches"},
        {"in", "on", "near", "with", "under"},
        {"very", "quite", "so", "too"},
    };
    for (const auto& row : t.words)
      t.word_probs.emplace_back(row.size(), 1.0 / row.size());
    t.noun_tag = t.pt_index("NOUN");
    t.validate();
    return t;
  }();
  return g;
}

std::vector<std::string> toy_word_list(const ToyGrammar& g) {
  std::vector<std::string> out;
  for (const auto& row : g.words)
    out.insert(out.end(), row.begin(), row.end());
  return out;
}

RuleProbs toy_rule_probs(const ToyGrammar& g,
                         const std::vector<std::string>& word_order) {
  g.validate();
  const double ninf = -std::numeric_limits<double>::infinity();
  RuleProbs r;
  r.num_nt = static_cast<int>(g.nt_names.size());
  r.num_pt = static_cast<int>(g.pt_names.size());
  r.vocab = static_cast<int>(word_order.size());
  const int m = r.num_symbols();
  r.root.assign(r.num_nt, ninf);
  r.root[0] = 0.0;  // start symbol with probability 1
  r.binary.assign(r.num_nt, std::vector<double>(m * m, ninf));
  auto global = [&](const std::string& name) {
    const int nt = g.nt_index(name);
    if (nt >= 0) return nt;
    const int pt = g.pt_index(name);
    require(pt >= 0, "toy grammar: unknown symbol " + name);
    return r.num_nt + pt;
  };
  for (const auto& rule : g.rules)
    r.binary[rule.parent][r.pair(global(rule.left), global(rule.right))] =
        std::log(rule.prob);
  std::unordered_map<std::string, int> word_idx;
  for (std::size_t i = 0; i < word_order.size(); ++i)
    word_idx[word_order[i]] = static_cast<int>(i);
  r.emission.assign(r.num_pt, std::vector<double>(r.vocab, ninf));
  for (int t = 0; t < r.num_pt; ++t) {
    for (std::size_t w = 0; w < g.words[t].size(); ++w) {
      auto it = word_idx.find(g.words[t][w]);
      require(it != word_idx.end(),
              "toy grammar word missing from word order: " + g.words[t][w]);
      r.emission[t][it->second] = std::log(g.word_probs[t][w]);
    }
  }
  return r;
}

namespace {

struct ToySampler {
  const ToyGrammar& g;
  std::mt19937_64& rng;
  std::vector<std::string> tokens;
  std::string brackets;

  void emit_pt(int tag) {
    std::discrete_distribution<int> pick(g.word_probs[tag].begin(),
                                         g.word_probs[tag].end());
    const std::string& w = g.words[tag][pick(rng)];
    tokens.push_back(w);
    brackets += "(" + g.pt_names[tag] + " " + w + ")";
  }

  void expand_symbol(const std::string& name) {
    const int nt = g.nt_index(name);
    if (nt >= 0) {
      expand_nt(nt);
    } else {
      emit_pt(g.pt_index(name));
    }
  }

  void expand_nt(int a) {
    std::vector<const ToyGrammar::Rule*> options;
    std::vector<double> probs;
    for (const auto& r : g.rules) {
      if (r.parent != a) continue;
      options.push_back(&r);
      probs.push_back(r.prob);
    }
    std::discrete_distribution<int> pick(probs.begin(), probs.end());
    const auto* r = options[pick(rng)];
    brackets += "(" + g.nt_names[a] + " ";
    expand_symbol(r->left);
    brackets += " ";
    expand_symbol(r->right);
    brackets += ")";
  }
};

}  // namespace

SyntheticCorpus generate_synthetic(const SyntheticConfig& cfg) {
  require(cfg.size >= 1, "synthetic corpus size must be >= 1");
  require(cfg.feature_dim >= 1, "synthetic feature dimension must be >= 1");
  require(cfg.min_length >= 2 && cfg.max_length >= cfg.min_length,
          "synthetic length bounds invalid");
  const ToyGrammar& g = builtin_toy_grammar();
  g.validate();

  // Fixed random unit vector per noun concepts, drawn before any sentence so
  // the concepts map is independent of the corpus size.
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const auto& nouns = g.words[g.noun_tag];
  std::vector<std::vector<double>> concepts(nouns.size());
  for (auto& v : concepts) {
    v.resize(cfg.feature_dim);
    double norm = 0.0;
    for (double& x : v) {
      x = gauss(rng);
      norm += x * x;
    }
    norm = std::sqrt(norm);
    for (double& x : v) x /= norm;
  }
  std::unordered_map<std::string, int> noun_idx;
  for (std::size_t i = 0; i < nouns.size(); ++i)
    noun_idx[nouns[i]] = static_cast<int>(i);

  SyntheticCorpus out;
  out.features.rows = cfg.size;
  out.features.dim = cfg.feature_dim;
  out.features.data.reserve(static_cast<std::size_t>(cfg.size) *
                            cfg.feature_dim);
  for (int i = 0; i < cfg.size; ++i) {
    ToySampler sampler{g, rng, {}, {}};
    for (;;) {
      sampler.tokens.clear();
      sampler.brackets.clear();
      sampler.expand_nt(0);
      const int n = static_cast<int>(sampler.tokens.size());
      if (n >= cfg.min_length && n <= cfg.max_length) break;
    }
    out.sentences.push_back(sampler.tokens);
    out.tree_lines.push_back(sampler.brackets);
    out.trees.push_back(parse_bracketed(sampler.brackets));

    std::vector<double> feat(cfg.feature_dim, 0.0);
    for (const auto& tok : sampler.tokens) {
      auto it = noun_idx.find(tok);
      if (it == noun_idx.end()) continue;
      const auto& v = concepts[it->second];
      for (int j = 0; j < cfg.feature_dim; ++j) feat[j] += v[j];
    }
    double norm = 0.0;
    for (double x : feat) norm += x * x;
    norm = std::sqrt(norm);
    require(norm > 1e-12, "synthetic sentence has no grounded concepts");
    for (double& x : feat) x /= norm;
    for (double& x : feat) x += cfg.noise_scale * gauss(rng);
    for (double x : feat) out.features.data.push_back(static_cast<float>(x));
  }
  return out;
}

}  // namespace vcpcfg::corpus
