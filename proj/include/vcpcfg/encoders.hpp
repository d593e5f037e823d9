#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "vcpcfg/chart.hpp"
#include "vcpcfg/grammar.hpp"
#include "vcpcfg/tape.hpp"

namespace vcpcfg::encoders {

// Shared shape description for both BiLSTM encoders. `out_dim` is the
// posterior dimension (z) for the variational encoder and the joint-space
// dimension for the span encoder.
struct EncoderDims {
  int vocab = 0;
  int embed = 512;
  int hidden = 512;
  int out_dim = 64;
  int num_labels = 0;  // span encoder only (K = |N|)
};

// Parameter names under `prefix` ("qenc." / "spanenc."):
//   emb, fw.wx, fw.wh, fw.b, bw.wx, bw.wh, bw.b
//   qenc adds out.w/out.b (affine to [mu; log_var]);
//   spanenc adds f<k>.w/f<k>.b per label.
inline void init_params(ParamStore& ps, const std::string& prefix,
                        const EncoderDims& d, bool variational,
                        std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto mat = [&](const std::string& name, int rows, int cols) {
    xavier_init(ps.add(prefix + name, rows, cols), rng);
  };
  auto bias = [&](const std::string& name, int rows) {
    ps.add(prefix + name, rows, 1);
  };
  mat("emb", d.vocab, d.embed);
  for (const char* dir : {"fw", "bw"}) {
    mat(std::string(dir) + ".wx", 4 * d.hidden, d.embed);
    mat(std::string(dir) + ".wh", 4 * d.hidden, d.hidden);
    bias(std::string(dir) + ".b", 4 * d.hidden);
  }
  if (variational) {
    mat("out.w", 2 * d.out_dim, 2 * d.hidden);
    bias("out.b", 2 * d.out_dim);
  } else {
    for (int k = 0; k < d.num_labels; ++k) {
      mat("f" + std::to_string(k) + ".w", d.out_dim, 2 * d.hidden);
      bias("f" + std::to_string(k) + ".b", d.out_dim);
    }
  }
}

// Standard LSTM cell (input/forget/candidate/output gate order), zero initial
// states. Returns hidden states in input order.
template <class S>
std::vector<typename Tape<S>::Var> lstm_run(
    Tape<S>& tp, TapeParams<S>& P, const std::string& prefix,
    const std::string& dir, const std::vector<typename Tape<S>::Var>& inputs,
    int hidden, bool reversed) {
  using Var = typename Tape<S>::Var;
  auto wx = P(prefix + dir + ".wx");
  auto wh = P(prefix + dir + ".wh");
  auto b = P(prefix + dir + ".b");
  const int n = static_cast<int>(inputs.size());
  std::vector<Var> states(n);
  Var h = tp.leaf_zero(hidden);
  Var c = tp.leaf_zero(hidden);
  for (int step = 0; step < n; ++step) {
    const int t = reversed ? n - 1 - step : step;
    auto gates = tp.add(tp.add(tp.matvec(wx, inputs[t]), tp.matvec(wh, h)), b);
    auto gi = tp.sigmoid_(tp.slice(gates, 0, hidden));
    auto gf = tp.sigmoid_(tp.slice(gates, hidden, hidden));
    auto gg = tp.tanh_(tp.slice(gates, 2 * hidden, hidden));
    auto go = tp.sigmoid_(tp.slice(gates, 3 * hidden, hidden));
    c = tp.add(tp.mul(gf, c), tp.mul(gi, gg));
    h = tp.mul(go, tp.tanh_(c));
    states[t] = h;
  }
  return states;
}

// Per-position [forward; backward] hidden states.
template <class S>
std::vector<typename Tape<S>::Var> bilstm_states(
    Tape<S>& tp, TapeParams<S>& P, const std::string& prefix,
    const EncoderDims& d, const std::vector<int>& tokens,
    const std::string& emb_name = "") {
  using Var = typename Tape<S>::Var;
  auto emb = P(emb_name.empty() ? prefix + "emb" : emb_name);
  std::vector<Var> inputs;
  inputs.reserve(tokens.size());
  for (int w : tokens) inputs.push_back(tp.row(emb, w));
  auto fw = lstm_run(tp, P, prefix, "fw", inputs, d.hidden, false);
  auto bw = lstm_run(tp, P, prefix, "bw", inputs, d.hidden, true);
  std::vector<Var> out(tokens.size());
  for (std::size_t i = 0; i < tokens.size(); ++i)
    out[i] = tp.concat(fw[i], bw[i]);
  return out;
}

template <class S>
struct PosteriorVars {
  typename Tape<S>::Var mu;
  typename Tape<S>::Var log_var;
};

template <class S>
PosteriorVars<S> encode_posterior(Tape<S>& tp, TapeParams<S>& P,
                                  const EncoderDims& d,
                                  const std::vector<int>& tokens) {
  require(!tokens.empty(), "encode_posterior: empty sentence");
  auto states = bilstm_states(tp, P, "qenc.", d, tokens);
  auto pooled = tp.maxpool(states);
  auto out = tp.affine(P("qenc.out.w"), pooled, P("qenc.out.b"));
  return {tp.slice(out, 0, d.out_dim), tp.slice(out, d.out_dim, d.out_dim)};
}

// Reparameterized sample z = mu + exp(0.5 log_var) * noise.
template <class S>
typename Tape<S>::Var sample_z(Tape<S>& tp, const PosteriorVars<S>& post,
                               const std::vector<double>& noise) {
  auto eps = tp.constant(noise, static_cast<int>(noise.size()));
  auto std = tp.exp_(tp.scale_const(post.log_var, 0.5));
  return tp.add(post.mu, tp.mul(std, eps));
}

// KL[q || N(0, I)] = 0.5 * sum(mu^2 + exp(lv) - 1 - lv).
template <class S>
typename Tape<S>::Var kl_gaussian(Tape<S>& tp, const PosteriorVars<S>& post) {
  auto term = tp.sub(tp.add(tp.mul(post.mu, post.mu), tp.exp_(post.log_var)),
                     tp.add_const(post.log_var, 1.0));
  return tp.scale_const(tp.sum(term), 0.5);
}

// Span vectors: a fresh BiLSTM run restricted to each span's tokens (so
// nothing outside the span leaks in), mean-pooled, mapped through every
// label-specific affine, then averaged under the given label posterior.
template <class S>
std::vector<typename Tape<S>::Var> encode_spans(
    Tape<S>& tp, TapeParams<S>& P, const EncoderDims& d,
    const std::vector<int>& tokens, const std::vector<Span>& spans,
    const std::vector<typename Tape<S>::Var>& label_posteriors,
    const std::string& emb_name = "") {
  using Var = typename Tape<S>::Var;
  require(label_posteriors.size() == spans.size(),
          "encode_spans: posterior count mismatch");
  std::vector<Var> out;
  out.reserve(spans.size());
  for (std::size_t si = 0; si < spans.size(); ++si) {
    const auto [i, j] = spans[si];
    require(i >= 0 && j <= static_cast<int>(tokens.size()) && i < j,
            "encode_spans: invalid span");
    std::vector<int> span_tokens(tokens.begin() + i, tokens.begin() + j);
    auto states = bilstm_states(tp, P, "spanenc.", d, span_tokens, emb_name);
    Var pooled = states[0];
    for (std::size_t k = 1; k < states.size(); ++k)
      pooled = tp.add(pooled, states[k]);
    pooled = tp.scale_const(pooled, 1.0 / static_cast<double>(states.size()));

    const auto& q = label_posteriors[si];
    require(tp.val(q).size() == static_cast<std::size_t>(d.num_labels),
            "encode_spans: label posterior size mismatch");
    Var acc;
    for (int k = 0; k < d.num_labels; ++k) {
      auto ck = tp.affine(P("spanenc.f" + std::to_string(k) + ".w"), pooled,
                          P("spanenc.f" + std::to_string(k) + ".b"));
      auto weighted = tp.mul_bcast(ck, tp.at(q, k));
      acc = k == 0 ? weighted : tp.add(acc, weighted);
    }
    out.push_back(acc);
  }
  return out;
}

}  // namespace vcpcfg::encoders
