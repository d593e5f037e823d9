#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "vcpcfg/encoders.hpp"
#include "vcpcfg/gradcheck.hpp"

using namespace vcpcfg;

namespace {

encoders::EncoderDims tiny_dims(bool variational) {
  encoders::EncoderDims d;
  d.vocab = 7;
  d.embed = 4;
  d.hidden = 3;
  d.out_dim = variational ? 2 : 5;
  d.num_labels = variational ? 0 : 3;
  return d;
}

}  // namespace

TEST_CASE("KL closed forms") {
  SUBCASE("standard normal posterior has zero KL") {
    DTape tp;
    encoders::PosteriorVars<double> post{tp.leaf({0.0, 0.0}, 2),
                                         tp.leaf({0.0, 0.0}, 2)};
    CHECK(tp.value(encoders::kl_gaussian(tp, post)) == doctest::Approx(0.0));
  }
  SUBCASE("unit mean shift costs 0.5 per dimension") {
    DTape tp;
    encoders::PosteriorVars<double> post{tp.leaf({1.0}, 1), tp.leaf({0.0}, 1)};
    CHECK(tp.value(encoders::kl_gaussian(tp, post)) == doctest::Approx(0.5));
  }
  SUBCASE("log-variance 1 costs (e - 2) / 2") {
    DTape tp;
    encoders::PosteriorVars<double> post{tp.leaf({0.0}, 1), tp.leaf({1.0}, 1)};
    CHECK(tp.value(encoders::kl_gaussian(tp, post)) ==
          doctest::Approx(0.5 * (std::exp(1.0) - 2.0)).epsilon(1e-10));
  }
}

TEST_CASE("KL agrees with a Monte Carlo estimate") {
  const double mu = 0.7, lv = -0.4;
  DTape tp;
  encoders::PosteriorVars<double> post{tp.leaf({mu}, 1), tp.leaf({lv}, 1)};
  const double analytic = tp.value(encoders::kl_gaussian(tp, post));

  // E_q[log q(z) - log p(z)] with z = mu + sigma * eps.
  std::mt19937_64 rng(17);
  std::normal_distribution<double> dist(0.0, 1.0);
  const double sigma = std::exp(0.5 * lv);
  double acc = 0.0;
  const int draws = 200000;
  for (int i = 0; i < draws; ++i) {
    const double eps = dist(rng);
    const double z = mu + sigma * eps;
    const double log_q = -0.5 * (std::log(2 * M_PI) + lv) - 0.5 * eps * eps;
    const double log_p = -0.5 * std::log(2 * M_PI) - 0.5 * z * z;
    acc += log_q - log_p;
  }
  CHECK(std::fabs(acc / draws - analytic) < 5e-3);
}

TEST_CASE("reparameterized sample: mu=1, sigma=2, eps=0.5 gives z=2") {
  DTape tp;
  encoders::PosteriorVars<double> post{tp.leaf({1.0}, 1),
                                       tp.leaf({2.0 * std::log(2.0)}, 1)};
  auto z = encoders::sample_z(tp, post, {0.5});
  CHECK(tp.val(z)[0] == doctest::Approx(2.0));
}

TEST_CASE("zero noise makes the sample equal the posterior mean") {
  DTape tp;
  encoders::PosteriorVars<double> post{tp.leaf({0.3, -1.2}, 2),
                                       tp.leaf({0.7, 0.1}, 2)};
  auto z = encoders::sample_z(tp, post, {0.0, 0.0});
  CHECK(tp.val(z)[0] == doctest::Approx(0.3));
  CHECK(tp.val(z)[1] == doctest::Approx(-1.2));
}

TEST_CASE("single-token sentence: pooling passes the one state through") {
  auto d = tiny_dims(true);
  ParamStore ps;
  encoders::init_params(ps, "qenc.", d, true, 3);
  DTape tp;
  TapeParams<double> P(tp, ps);
  auto states = encoders::bilstm_states(tp, P, "qenc.", d, {2});
  auto pooled = tp.maxpool(states);
  REQUIRE(states.size() == 1);
  for (std::size_t i = 0; i < tp.val(pooled).size(); ++i)
    CHECK(tp.val(pooled)[i] == tp.val(states[0])[i]);
}

TEST_CASE("the posterior encoder is order-sensitive") {
  auto d = tiny_dims(true);
  ParamStore ps;
  encoders::init_params(ps, "qenc.", d, true, 4);
  auto mu_of = [&](const std::vector<int>& toks) {
    DTape tp;
    TapeParams<double> P(tp, ps);
    auto post = encoders::encode_posterior(tp, P, d, toks);
    return tp.val(post.mu);
  };
  CHECK(mu_of({1, 2, 3}) != mu_of({3, 2, 1}));
}

TEST_CASE("span vectors never see tokens outside the span") {
  auto d = tiny_dims(false);
  ParamStore ps;
  encoders::init_params(ps, "spanenc.", d, false, 5);
  auto span_vec = [&](const std::vector<int>& toks, Span sp) {
    DTape tp;
    TapeParams<double> P(tp, ps);
    std::vector<double> q(d.num_labels, 1.0 / d.num_labels);
    auto qv = tp.constant(q, d.num_labels);
    auto vecs =
        encoders::encode_spans(tp, P, d, toks, {sp}, {qv});
    return tp.val(vecs[0]);
  };
  // Same span content (tokens 2,4), different surroundings: bitwise equal.
  auto a = span_vec({1, 2, 4, 3}, {1, 3});
  auto b = span_vec({6, 2, 4, 0}, {1, 3});
  CHECK(a == b);
}

TEST_CASE("label posterior weights the per-label maps") {
  auto d = tiny_dims(false);
  ParamStore ps;
  encoders::init_params(ps, "spanenc.", d, false, 6);
  DTape tp;
  TapeParams<double> P(tp, ps);
  // One-hot posterior on label 1 must equal the label-1 affine alone.
  std::vector<double> onehot{0.0, 1.0, 0.0};
  auto qv = tp.constant(onehot, 3);
  auto vecs = encoders::encode_spans(tp, P, d, {1, 2, 3}, {{0, 2}}, {qv});

  auto states = encoders::bilstm_states(tp, P, "spanenc.", d, {1, 2});
  auto pooled = tp.scale_const(tp.add(states[0], states[1]), 0.5);
  auto direct = tp.affine(P("spanenc.f1.w"), pooled, P("spanenc.f1.b"));
  for (std::size_t i = 0; i < tp.val(direct).size(); ++i)
    CHECK(tp.val(vecs[0])[i] == doctest::Approx(tp.val(direct)[i]));
}

TEST_CASE("posterior encoder gradients match finite differences") {
  auto d = tiny_dims(true);
  ParamStore ps;
  encoders::init_params(ps, "qenc.", d, true, 8);
  const std::vector<int> toks{1, 5, 2};
  const std::vector<double> noise{0.3, -0.8};
  auto f = [&](const ParamStore& p) {
    DTape tp;
    TapeParams<double> P(tp, p);
    auto post = encoders::encode_posterior(tp, P, d, toks);
    auto z = encoders::sample_z(tp, post, noise);
    auto kl = encoders::kl_gaussian(tp, post);
    auto out = tp.add(tp.sum(tp.tanh_(z)), kl);
    tp.backward(out);
    return std::make_pair(tp.value(out), tp.grads());
  };
  auto res = grad_check(f, ps, 1e-5, 25, 99);
  CHECK(res.max_rel_err < 1e-5);
}

TEST_CASE("span encoder gradients match finite differences") {
  auto d = tiny_dims(false);
  ParamStore ps;
  encoders::init_params(ps, "spanenc.", d, false, 9);
  const std::vector<int> toks{1, 5, 2, 6};
  auto f = [&](const ParamStore& p) {
    DTape tp;
    TapeParams<double> P(tp, p);
    std::vector<double> q{0.2, 0.5, 0.3};
    auto qv = tp.constant(q, 3);
    auto vecs = encoders::encode_spans(tp, P, d, toks, {{0, 3}}, {qv});
    auto out = tp.sum(tp.tanh_(vecs[0]));
    tp.backward(out);
    return std::make_pair(tp.value(out), tp.grads());
  };
  auto res = grad_check(f, ps, 1e-5, 25, 100);
  CHECK(res.max_rel_err < 1e-5);
}
