#include "vcpcfg/model.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <functional>
#include <memory>
#include <mutex>
#include <random>
#include <thread>

namespace vcpcfg {

Mode mode_from_string(const std::string& s) {
  if (s == "text-only") return Mode::TextOnly;
  if (s == "grounded") return Mode::Grounded;
  if (s == "grounded-no-lm") return Mode::GroundedNoLm;
  throw ConfigError("unknown mode '" + s +
                    "' (expected text-only, grounded or grounded-no-lm)");
}

std::string mode_to_string(Mode m) {
  switch (m) {
    case Mode::TextOnly:
      return "text-only";
    case Mode::Grounded:
      return "grounded";
    case Mode::GroundedNoLm:
      return "grounded-no-lm";
  }
  throw ContractError("mode_to_string: invalid mode");
}

namespace {

void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
  if (threads <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::mutex mu;
  std::exception_ptr err;
  auto worker = [&] {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= n) break;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lk(mu);
        if (!err) err = std::current_exception();
        break;
      }
    }
  };
  std::vector<std::thread> pool;
  const int t = std::min(threads, n);
  pool.reserve(t);
  for (int k = 0; k < t; ++k) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

// One sentence's full computation graph: posterior -> z -> rules -> inside.
template <class S>
struct SentenceGraph {
  std::unique_ptr<Tape<S>> tape;
  std::unique_ptr<TapeParams<S>> P;
  typename Tape<S>::Var kl;
  typename Tape<S>::Var log_z;
  typename Tape<S>::Var loss;  // -(log_z - kl)
  chart::InsideResult<S> ir;
};

template <class S>
SentenceGraph<S> build_sentence(
    const ModelConfig& cfg, const ParamStore& ps, const encoders::EncoderDims& qd,
    const std::vector<int>& tokens, const std::vector<double>& noise,
    bool with_potentials,
    const std::map<Span, std::vector<double>>* span_tangent = nullptr) {
  require(noise.size() == static_cast<std::size_t>(cfg.topo.z_dim),
          "noise dimension mismatch");
  SentenceGraph<S> g;
  g.tape = std::make_unique<Tape<S>>();
  g.P = std::make_unique<TapeParams<S>>(*g.tape, ps);
  auto& tp = *g.tape;
  auto post = encoders::encode_posterior(tp, *g.P, qd, tokens);
  auto z = encoders::sample_z(tp, post, noise);
  g.kl = encoders::kl_gaussian(tp, post);
  auto rules = grammar::compute_rule_probs(tp, *g.P, cfg.topo, z);
  g.ir = chart::inside(tp, rules, tokens, with_potentials, span_tangent);
  g.log_z = g.ir.log_z;
  g.loss = tp.neg(tp.sub(g.log_z, g.kl));
  return g;
}

// Negative example index per batch position, honoring the config's choice of
// rotation vs. seeded uniform sampling.
std::vector<int> negative_assignment(const matching::MatchingConfig& mc, int b,
                                     std::uint64_t seed) {
  require(b >= 2, "contrastive term requires a batch of at least 2 examples");
  std::vector<int> out(b);
  if (mc.random_negatives) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> dist(0, b - 2);
    for (int i = 0; i < b; ++i) {
      int j = dist(rng);
      if (j >= i) ++j;
      out[i] = j;
    }
  } else {
    for (int i = 0; i < b; ++i) out[i] = matching::negative_index(b, i);
  }
  return out;
}

// Index (into the selected-span list) of the span with the highest marginal;
// ties resolved by list order (shortest first, then leftmost).
int best_span_index(const std::vector<Span>& spans, const SpanMarginals& m) {
  int best = 0;
  double best_mu = -1.0;
  for (std::size_t s = 0; s < spans.size(); ++s) {
    const double mu = m.mu(spans[s].first, spans[s].second);
    if (mu > best_mu) {
      best_mu = mu;
      best = static_cast<int>(s);
    }
  }
  return best;
}

struct BatchTapeResult {
  double match_value = 0.0;
  GradientMap grads;
  // Directional seeds u for each example: d(match loss)/d(labeled marginal).
  std::vector<std::map<Span, std::vector<double>>> seeds;
};

}  // namespace

Model::Model(ModelConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.topo.validate();
  require(cfg_.q_embed >= 1 && cfg_.q_hidden >= 1 && cfg_.span_embed >= 1 &&
              cfg_.span_hidden >= 1 && cfg_.joint_dim >= 1 &&
              cfg_.feature_dim >= 1,
          "model dimensions must be positive");
  if (cfg_.share_word_embeddings)
    require(cfg_.q_embed == cfg_.span_embed,
            "shared word embeddings require matching embedding sizes");
}

encoders::EncoderDims Model::q_dims() const {
  return {cfg_.topo.vocab_size, cfg_.q_embed, cfg_.q_hidden, cfg_.topo.z_dim, 0};
}

encoders::EncoderDims Model::span_dims() const {
  return {cfg_.topo.vocab_size, cfg_.span_embed, cfg_.span_hidden,
          cfg_.joint_dim, cfg_.topo.num_nt};
}

void Model::init(std::uint64_t seed) {
  params_ = ParamStore{};
  std::mt19937_64 master(seed);
  const std::uint64_t s_grammar = master();
  const std::uint64_t s_qenc = master();
  const std::uint64_t s_span = master();
  const std::uint64_t s_proj = master();
  grammar::init_params(params_, cfg_.topo, s_grammar);
  encoders::init_params(params_, "qenc.", q_dims(), /*variational=*/true,
                        s_qenc);
  encoders::init_params(params_, "spanenc.", span_dims(), /*variational=*/false,
                        s_span);
  if (cfg_.share_word_embeddings) params_.erase("spanenc.emb");
  std::mt19937_64 rng(s_proj);
  xavier_init(params_.add("imgproj.w", cfg_.joint_dim, cfg_.feature_dim), rng);
  params_.add("imgproj.b", cfg_.joint_dim, 1);
}

BatchResult Model::evaluate_batch(const std::vector<ModelExample>& batch,
                                  Mode mode, bool with_grads, int threads,
                                  std::uint64_t negative_seed) const {
  require(!batch.empty(), "evaluate_batch: empty batch");
  const int b = static_cast<int>(batch.size());
  const bool grounded = mode != Mode::TextOnly;
  if (grounded) {
    if (b < 2)
      throw ConfigError(
          "grounded modes need a batch of at least 2 examples for negatives");
    for (const auto& ex : batch)
      if (ex.feature.size() != static_cast<std::size_t>(cfg_.feature_dim))
        throw ConfigError("grounded mode requires an image feature of size " +
                          std::to_string(cfg_.feature_dim) +
                          " for every example");
  }
  const auto qd = q_dims();
  const std::string span_emb =
      cfg_.share_word_embeddings ? std::string("qenc.emb") : std::string();

  BatchResult res;

  // Phase 1: per-sentence graphs. Text-only backpropagates the ELBO loss
  // directly; grounded modes backpropagate log Z to read span marginals.
  std::vector<double> log_zs(b), kls(b);
  std::vector<SpanMarginals> margs(b);
  std::vector<GradientMap> sent_grads(b);
  parallel_for(b, threads, [&](int i) {
    auto g = build_sentence<double>(cfg_, params_, qd, batch[i].tokens,
                                    batch[i].noise, grounded);
    log_zs[i] = g.tape->value(g.log_z);
    kls[i] = g.tape->value(g.kl);
    if (grounded) {
      g.tape->backward(g.log_z);
      margs[i] = chart::read_marginals(*g.tape, g.ir, cfg_.topo.num_nt);
    } else if (with_grads) {
      g.tape->backward(g.loss);
      sent_grads[i] = g.tape->grads();
    }
  });
  for (int i = 0; i < b; ++i) {
    res.elbo_loss += -(log_zs[i] - kls[i]);
    res.total_log_z += log_zs[i];
    res.total_tokens += static_cast<long>(batch[i].tokens.size());
  }

  BatchTapeResult bt;
  if (grounded) {
    // Phase 2: one tape over the whole batch with the labeled marginals as
    // leaves. Its gradient yields (a) direct encoder/projection gradients and
    // (b) the sensitivities u = dF/d(marginal) used as phase-3 seeds.
    DTape tp;
    TapeParams<double> P(tp, params_);
    const auto sd = span_dims();
    const auto neg = negative_assignment(cfg_.match, b, negative_seed);

    std::vector<std::vector<Span>> spans(b);
    std::vector<std::vector<DTape::Var>> lam(b), cvec(b);
    std::vector<std::vector<DTape::Var>> mu_var(b);
    std::vector<DTape::Var> v(b);
    std::vector<int> best(b);
    for (int i = 0; i < b; ++i) {
      const int n = static_cast<int>(batch[i].tokens.size());
      spans[i] = matching::select_spans(n);
      best[i] = best_span_index(spans[i], margs[i]);
      std::vector<DTape::Var> qvars;
      qvars.reserve(spans[i].size());
      for (const auto& sp : spans[i]) {
        const auto& labeled = margs[i].labeled.at(sp);
        auto l = tp.leaf(labeled, static_cast<int>(labeled.size()));
        lam[i].push_back(l);
        auto m = tp.sum(l);
        mu_var[i].push_back(m);
        double mval = 0.0;
        for (double x : labeled) mval += x;
        if (mval < 1e-12) {
          // Degenerate span marginal: fall back to a uniform (constant) label
          // posterior; the hinge term is weighted by mu ~ 0 anyway.
          std::vector<double> u(labeled.size(), 1.0 / labeled.size());
          qvars.push_back(tp.constant(u, static_cast<int>(u.size())));
        } else {
          qvars.push_back(tp.div_bcast(l, m));
        }
      }
      cvec[i] = encoders::encode_spans(tp, P, sd, batch[i].tokens, spans[i],
                                       qvars, span_emb);
      auto feat = tp.constant(batch[i].feature, cfg_.feature_dim);
      v[i] = tp.affine(P("imgproj.w"), feat, P("imgproj.b"));
    }

    std::vector<DTape::Var> terms;
    for (int i = 0; i < b; ++i) {
      for (std::size_t s = 0; s < spans[i].size(); ++s) {
        DTape::Var h;
        if (cfg_.match.average_all_negatives) {
          std::vector<DTape::Var> hs;
          hs.reserve(b - 1);
          for (int j = 0; j < b; ++j) {
            if (j == i) continue;
            hs.push_back(matching::hinge(tp, cvec[i][s], v[i],
                                         cvec[j][best[j]], v[j],
                                         cfg_.match.margin));
          }
          h = tp.scale_const(tp.sum(tp.pack(hs)), 1.0 / (b - 1));
        } else {
          const int j = neg[i];
          h = matching::hinge(tp, cvec[i][s], v[i], cvec[j][best[j]], v[j],
                              cfg_.match.margin);
        }
        terms.push_back(tp.mul(mu_var[i][s], h));
      }
    }
    auto match = tp.sum(tp.pack(terms));
    bt.match_value = tp.value(match);
    res.match_loss = bt.match_value;
    if (with_grads) {
      tp.backward(match);
      bt.grads = tp.grads();
      bt.seeds.resize(b);
      for (int i = 0; i < b; ++i)
        for (std::size_t s = 0; s < spans[i].size(); ++s)
          bt.seeds[i][spans[i][s]] = tp.adj(lam[i][s]);
    }
  }

  switch (mode) {
    case Mode::TextOnly:
      res.joint = res.elbo_loss;
      break;
    case Mode::Grounded:
      res.joint = res.elbo_loss + cfg_.match.alpha * res.match_loss;
      break;
    case Mode::GroundedNoLm:
      res.joint = res.match_loss;
      break;
  }

  if (!with_grads) return res;

  if (!grounded) {
    for (int i = 0; i < b; ++i) accumulate(res.grads, sent_grads[i]);
    return res;
  }

  // Phase 3: rebuild each sentence on a dual-number tape with the phase-2
  // sensitivities as tangent seeds on the span potentials. The tangent part
  // of the parameter adjoints is then the gradient of sum_k u_k * marginal_k
  // with respect to the parameters (the marginal-sensitivity term that routes through log Z).
  const double alpha = cfg_.match.alpha;
  std::vector<GradientMap> per_sentence(b);
  parallel_for(b, threads, [&](int i) {
    auto g = build_sentence<Dual>(cfg_, params_, qd, batch[i].tokens,
                                  batch[i].noise, true, &bt.seeds[i]);
    GradientMap total;
    if (mode == Mode::Grounded) {
      g.tape->backward(g.loss);
      accumulate(total, g.tape->grads());
      // backward(loss) tangents carry -d/dtheta of <u, marginals>.
      accumulate(total, g.tape->tangent_grads(), -alpha);
    } else {
      g.tape->backward(g.log_z);
      accumulate(total, g.tape->tangent_grads());
    }
    per_sentence[i] = std::move(total);
  });
  for (int i = 0; i < b; ++i) accumulate(res.grads, per_sentence[i]);
  accumulate(res.grads, bt.grads, mode == Mode::Grounded ? alpha : 1.0);
  return res;
}

double Model::point_estimate_loss(const std::vector<ModelExample>& batch,
                                  const std::vector<ParseTree>& trees) const {
  require(batch.size() == trees.size(),
          "point_estimate_loss: batch/tree count mismatch");
  const int b = static_cast<int>(batch.size());
  if (b < 2)
    throw ConfigError(
        "contrastive term requires a batch of at least 2 examples");
  const auto qd = q_dims();
  const std::string span_emb =
      cfg_.share_word_embeddings ? std::string("qenc.emb") : std::string();

  std::vector<SpanMarginals> margs(b);
  for (int i = 0; i < b; ++i) {
    auto g = build_sentence<double>(cfg_, params_, qd, batch[i].tokens,
                                    batch[i].noise, true);
    g.tape->backward(g.log_z);
    margs[i] = chart::read_marginals(*g.tape, g.ir, cfg_.topo.num_nt);
  }

  DTape tp;
  TapeParams<double> P(tp, params_);
  const auto sd = span_dims();
  std::vector<std::vector<Span>> spans(b);
  std::vector<std::vector<DTape::Var>> cvec(b);
  std::vector<DTape::Var> v(b);
  std::vector<int> best(b);
  for (int i = 0; i < b; ++i) {
    if (batch[i].feature.size() != static_cast<std::size_t>(cfg_.feature_dim))
      throw ConfigError("point estimate requires an image feature of size " +
                        std::to_string(cfg_.feature_dim));
    const int n = static_cast<int>(batch[i].tokens.size());
    spans[i] = matching::select_spans(n);
    best[i] = best_span_index(spans[i], margs[i]);
    std::vector<DTape::Var> qvars;
    for (const auto& sp : spans[i]) {
      auto q = margs[i].label_posterior(sp.first, sp.second);
      qvars.push_back(tp.constant(q, static_cast<int>(q.size())));
    }
    cvec[i] = encoders::encode_spans(tp, P, sd, batch[i].tokens, spans[i],
                                     qvars, span_emb);
    auto feat = tp.constant(batch[i].feature, cfg_.feature_dim);
    v[i] = tp.affine(P("imgproj.w"), feat, P("imgproj.b"));
  }

  double total = 0.0;
  for (int i = 0; i < b; ++i) {
    const int j = matching::negative_index(b, i);
    const auto tree_spans = trees[i].span_set();
    for (std::size_t s = 0; s < spans[i].size(); ++s) {
      if (!tree_spans.count(spans[i][s])) continue;
      auto h = matching::hinge(tp, cvec[i][s], v[i], cvec[j][best[j]], v[j],
                               cfg_.match.margin);
      total += tp.value(h);
    }
  }
  return total;
}

RuleProbs Model::rules_at_posterior_mean(const std::vector<int>& tokens) const {
  DTape tp;
  TapeParams<double> P(tp, params_);
  auto post = encoders::encode_posterior(tp, P, q_dims(), tokens);
  auto rv = grammar::compute_rule_probs(tp, P, cfg_.topo, post.mu);
  return grammar::extract(tp, rv, cfg_.topo);
}

ParseTree Model::parse(const std::vector<int>& tokens) const {
  return chart::map_parse(rules_at_posterior_mean(tokens), tokens);
}

std::pair<double, double> Model::sentence_elbo_terms(
    const std::vector<int>& tokens, const std::vector<double>& noise) const {
  auto g = build_sentence<double>(cfg_, params_, q_dims(), tokens, noise, false);
  return {g.tape->value(g.log_z), g.tape->value(g.kl)};
}

}  // namespace vcpcfg
