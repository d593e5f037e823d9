#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "vcpcfg/params.hpp"
#include "vcpcfg/tape.hpp"

namespace vcpcfg {

// CNF symbol inventory. Global symbol ids: nonterminals 0..num_nt-1,
// preterminals num_nt..num_symbols-1. Binary rule pairs (B,C) are flattened
// as B * num_symbols + C.
struct GrammarTopology {
  int num_nt = 30;
  int num_pt = 60;
  int vocab_size = 0;
  int sym_dim = 256;
  int z_dim = 64;

  int num_symbols() const { return num_nt + num_pt; }
  int pair_count() const { return num_symbols() * num_symbols(); }
  int enc_dim() const { return sym_dim + z_dim; }

  void validate() const {
    require(num_nt >= 1 && num_pt >= 1 && vocab_size >= 1 && sym_dim >= 1 &&
                z_dim >= 1,
            "invalid grammar topology");
  }
};

// Plain-number rule tables (log space), used by CYK and the enumeration
// oracle, and as hand-built fixtures in tests.
struct RuleProbs {
  int num_nt = 0;
  int num_pt = 0;
  int vocab = 0;
  std::vector<double> root;                 // [num_nt]
  std::vector<std::vector<double>> binary;  // [num_nt][(B,C) pairs]
  std::vector<std::vector<double>> emission;  // [num_pt][vocab]

  int num_symbols() const { return num_nt + num_pt; }
  int pair(int b, int c) const { return b * num_symbols() + c; }
};

// Lazily mirrors ParamStore entries onto a tape, one leaf per parameter.
template <class S>
class TapeParams {
 public:
  TapeParams(Tape<S>& tape, const ParamStore& store)
      : tape_(&tape), store_(&store) {}

  typename Tape<S>::Var operator()(const std::string& name) {
    auto it = vars_.find(name);
    if (it != vars_.end()) return it->second;
    auto v = tape_->param(name, store_->at(name));
    vars_.emplace(name, v);
    return v;
  }

 private:
  Tape<S>* tape_;
  const ParamStore* store_;
  std::map<std::string, typename Tape<S>::Var> vars_;
};

namespace grammar {

inline const char* kPrefix = "grammar.";

// Adds all grammar parameters to the store with Xavier-uniform weights and
// zero biases; deterministic in the seed.
inline void init_params(ParamStore& ps, const GrammarTopology& topo,
                        std::uint64_t seed) {
  topo.validate();
  std::mt19937_64 rng(seed);
  auto mat = [&](const std::string& name, int rows, int cols) {
    xavier_init(ps.add("grammar." + name, rows, cols), rng);
  };
  auto bias = [&](const std::string& name, int rows) {
    ps.add("grammar." + name, rows, 1);
  };
  const int d = topo.enc_dim();
  mat("w_root", 1, topo.sym_dim);
  mat("w_nt", topo.num_nt, topo.sym_dim);
  mat("w_pt", topo.num_pt, topo.sym_dim);
  mat("u_root", topo.num_nt, d);
  mat("u_pairs", topo.pair_count(), d);
  mat("u_vocab", topo.vocab_size, d);
  for (const char* enc : {"fs", "ft"}) {
    mat(std::string(enc) + ".w1", d, d);
    bias(std::string(enc) + ".b1", d);
    mat(std::string(enc) + ".w2", d, d);
    bias(std::string(enc) + ".b2", d);
  }
}

// Tape-resident rule tables for one sentence's latent z.
template <class S>
struct RuleProbVars {
  typename Tape<S>::Var root;                  // log probs over N
  std::vector<typename Tape<S>::Var> binary;   // per A in N, over (B,C) pairs
  std::vector<typename Tape<S>::Var> emission;  // per T in P, over vocab
};

template <class S>
typename Tape<S>::Var residual_encoder(Tape<S>& tp, TapeParams<S>& P,
                                       const std::string& enc,
                                       typename Tape<S>::Var x) {
  auto h = tp.tanh_(tp.affine(P(kPrefix + enc + ".w1"), x, P(kPrefix + enc + ".b1")));
  return tp.add(tp.add(x, tp.matvec(P(kPrefix + enc + ".w2"), h)),
                P(kPrefix + enc + ".b2"));
}

template <class S>
void check_finite_family(const Tape<S>& tp, typename Tape<S>::Var v,
                         const char* family) {
  for (const S& x : tp.val(v))
    if (!std::isfinite(num::value_of(x)))
      throw NumericError(std::string("non-finite logits in rule family: ") +
                         family);
}

template <class S>
RuleProbVars<S> compute_rule_probs(Tape<S>& tp, TapeParams<S>& P,
                                   const GrammarTopology& topo,
                                   typename Tape<S>::Var z) {
  require(tp.val(z).size() == static_cast<std::size_t>(topo.z_dim),
          "z dimension mismatch");
  RuleProbVars<S> out;

  auto root_in = tp.concat(P(std::string(kPrefix) + "w_root"), z);
  auto root_logits =
      tp.matvec(P(std::string(kPrefix) + "u_root"),
                residual_encoder(tp, P, "fs", root_in));
  check_finite_family(tp, root_logits, "root");
  out.root = tp.log_softmax(root_logits);

  auto w_nt = P(std::string(kPrefix) + "w_nt");
  auto u_pairs = P(std::string(kPrefix) + "u_pairs");
  out.binary.reserve(topo.num_nt);
  for (int a = 0; a < topo.num_nt; ++a) {
    auto logits = tp.matvec(u_pairs, tp.concat(tp.row(w_nt, a), z));
    check_finite_family(tp, logits, "binary");
    out.binary.push_back(tp.log_softmax(logits));
  }

  auto w_pt = P(std::string(kPrefix) + "w_pt");
  auto u_vocab = P(std::string(kPrefix) + "u_vocab");
  out.emission.reserve(topo.num_pt);
  for (int t = 0; t < topo.num_pt; ++t) {
    auto enc = residual_encoder(tp, P, "ft", tp.concat(tp.row(w_pt, t), z));
    auto logits = tp.matvec(u_vocab, enc);
    check_finite_family(tp, logits, "emission");
    out.emission.push_back(tp.log_softmax(logits));
  }
  return out;
}

// Copies tape-resident rule tables into plain numbers (for CYK / oracle).
template <class S>
RuleProbs extract(const Tape<S>& tp, const RuleProbVars<S>& rv,
                  const GrammarTopology& topo) {
  RuleProbs r;
  r.num_nt = topo.num_nt;
  r.num_pt = topo.num_pt;
  r.vocab = topo.vocab_size;
  auto to_d = [](const std::vector<S>& v) {
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = num::value_of(v[i]);
    return out;
  };
  r.root = to_d(tp.val(rv.root));
  for (auto v : rv.binary) r.binary.push_back(to_d(tp.val(v)));
  for (auto v : rv.emission) r.emission.push_back(to_d(tp.val(v)));
  return r;
}

// Lifts plain rule tables onto a tape as non-parameter leaves.
template <class S>
RuleProbVars<S> lift(Tape<S>& tp, const RuleProbs& r) {
  RuleProbVars<S> out;
  out.root = tp.constant(r.root, static_cast<int>(r.root.size()));
  for (const auto& b : r.binary)
    out.binary.push_back(tp.constant(b, static_cast<int>(b.size())));
  for (const auto& e : r.emission)
    out.emission.push_back(tp.constant(e, static_cast<int>(e.size())));
  return out;
}

// Max abs deviation of any row sum from 1 (linear space), for tests.
inline double worst_row_norm_error(const RuleProbs& r) {
  auto row_err = [](const std::vector<double>& logp) {
    double s = 0.0;
    for (double x : logp) s += std::exp(x);
    return std::fabs(s - 1.0);
  };
  double worst = row_err(r.root);
  for (const auto& b : r.binary) worst = std::max(worst, row_err(b));
  for (const auto& e : r.emission) worst = std::max(worst, row_err(e));
  return worst;
}

}  // namespace grammar

}  // namespace vcpcfg
