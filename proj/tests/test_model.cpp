#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "vcpcfg/gradcheck.hpp"
#include "vcpcfg/model.hpp"

using namespace vcpcfg;

namespace {

ModelConfig micro_config() {
  ModelConfig cfg;
  cfg.topo.num_nt = 3;
  cfg.topo.num_pt = 3;
  cfg.topo.vocab_size = 8;
  cfg.topo.sym_dim = 6;
  cfg.topo.z_dim = 3;
  cfg.q_embed = 5;
  cfg.q_hidden = 4;
  cfg.span_embed = 5;
  cfg.span_hidden = 4;
  cfg.joint_dim = 6;
  cfg.feature_dim = 7;
  return cfg;
}

std::vector<ModelExample> micro_batch(const ModelConfig& cfg,
                                      std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, 1.0);
  std::vector<ModelExample> batch;
  for (int len : {3, 4, 5}) {
    ModelExample ex;
    for (int i = 0; i < len; ++i)
      ex.tokens.push_back(static_cast<int>(rng() % cfg.topo.vocab_size));
    ex.feature.resize(cfg.feature_dim);
    for (double& x : ex.feature) x = dist(rng);
    ex.noise.resize(cfg.topo.z_dim);
    for (double& x : ex.noise) x = dist(rng);
    batch.push_back(std::move(ex));
  }
  return batch;
}

GradCheckResult check_mode(Mode mode, bool average_negatives = false) {
  auto cfg = micro_config();
  cfg.match.alpha = 0.5;  // make the matching term visible in the joint
  cfg.match.average_all_negatives = average_negatives;
  Model model(cfg);
  model.init(1234);
  auto batch = micro_batch(cfg, 77);
  auto f = [&](const ParamStore& p) {
    Model m(cfg);
    m.params() = p;
    auto r = m.evaluate_batch(batch, mode, /*with_grads=*/true);
    return std::make_pair(r.joint, r.grads);
  };
  // Step 1e-4: smaller steps lose digits to cancellation in the long
  // inside-pass computation before the analytic error is even visible.
  return grad_check(f, model.params(), 1e-4, 10, 5);
}

}  // namespace

TEST_CASE("text-only loss gradients match finite differences") {
  auto res = check_mode(Mode::TextOnly);
  INFO("worst ", res.worst_param, "[", res.worst_index, "]");
  CHECK(res.max_rel_err < 1e-4);
}

TEST_CASE("matching-only loss gradients match finite differences") {
  // Gradients must flow through the span marginals and label posteriors.
  auto res = check_mode(Mode::GroundedNoLm);
  INFO("worst ", res.worst_param, "[", res.worst_index, "]");
  CHECK(res.max_rel_err < 1e-4);
}

TEST_CASE("joint grounded loss gradients match finite differences") {
  auto res = check_mode(Mode::Grounded);
  INFO("worst ", res.worst_param, "[", res.worst_index, "]");
  CHECK(res.max_rel_err < 1e-4);
}

TEST_CASE("averaged-negatives gradients match finite differences") {
  auto res = check_mode(Mode::Grounded, /*average_negatives=*/true);
  CHECK(res.max_rel_err < 1e-4);
}

TEST_CASE("alpha = 0 grounded equals text-only on the same batch and noise") {
  auto cfg = micro_config();
  cfg.match.alpha = 0.0;
  Model model(cfg);
  model.init(42);
  auto batch = micro_batch(cfg, 5);
  auto g = model.evaluate_batch(batch, Mode::Grounded, true);
  auto t = model.evaluate_batch(batch, Mode::TextOnly, true);
  CHECK(g.joint == doctest::Approx(t.joint).epsilon(1e-12));
  for (const auto& [name, gv] : t.grads) {
    REQUIRE(g.grads.count(name) == 1);
    const auto& other = g.grads.at(name);
    for (std::size_t i = 0; i < gv.size(); ++i)
      CHECK(gv[i] == doctest::Approx(other[i]).epsilon(1e-9));
  }
}

TEST_CASE("grounded-no-lm joint is exactly the matching loss") {
  auto cfg = micro_config();
  Model model(cfg);
  model.init(9);
  auto batch = micro_batch(cfg, 6);
  auto r = model.evaluate_batch(batch, Mode::GroundedNoLm, false);
  CHECK(r.joint == r.match_loss);
  auto rg = model.evaluate_batch(batch, Mode::Grounded, false);
  CHECK(rg.joint ==
        doctest::Approx(rg.elbo_loss + cfg.match.alpha * rg.match_loss));
  CHECK(rg.match_loss == doctest::Approx(r.match_loss));
}

TEST_CASE("evaluation is deterministic and thread-count invariant") {
  auto cfg = micro_config();
  Model model(cfg);
  model.init(31);
  auto batch = micro_batch(cfg, 8);
  auto a = model.evaluate_batch(batch, Mode::Grounded, true, 1);
  auto b = model.evaluate_batch(batch, Mode::Grounded, true, 1);
  auto c = model.evaluate_batch(batch, Mode::Grounded, true, 3);
  CHECK(a.joint == b.joint);
  CHECK(a.grads == b.grads);
  CHECK(a.joint == c.joint);
  CHECK(a.grads == c.grads);
}

TEST_CASE("grounded modes require image features and batch >= 2") {
  auto cfg = micro_config();
  Model model(cfg);
  model.init(3);
  auto batch = micro_batch(cfg, 4);
  batch[1].feature.clear();
  CHECK_THROWS_AS(model.evaluate_batch(batch, Mode::Grounded, false),
                  ConfigError);
  auto one = micro_batch(cfg, 4);
  one.resize(1);
  CHECK_THROWS_AS(model.evaluate_batch(one, Mode::Grounded, false),
                  ConfigError);
  // Text-only mode ignores features entirely.
  auto r = model.evaluate_batch(batch, Mode::TextOnly, false);
  CHECK(std::isfinite(r.joint));
}

TEST_CASE("parse at the posterior mean yields a full binary tree") {
  auto cfg = micro_config();
  Model model(cfg);
  model.init(12);
  const std::vector<int> toks{1, 4, 2, 7, 3};
  auto tree = model.parse(toks);
  CHECK(tree.n == 5);
  // Binary tree over 5 words: 5 leaves + 4 internal nodes.
  CHECK(tree.spans.size() == 9);
  CHECK(tree.span_set().count({0, 5}) == 1);
  auto again = model.parse(toks);
  CHECK(tree.span_set() == again.span_set());
}

TEST_CASE("rules at the posterior mean are normalized") {
  auto cfg = micro_config();
  Model model(cfg);
  model.init(21);
  auto r = model.rules_at_posterior_mean({1, 2, 3});
  CHECK(grammar::worst_row_norm_error(r) < 1e-10);
}

TEST_CASE("sentence ELBO terms are finite and reproducible") {
  auto cfg = micro_config();
  Model model(cfg);
  model.init(8);
  std::vector<double> noise(cfg.topo.z_dim, 0.3);
  auto [lz, kl] = model.sentence_elbo_terms({2, 5, 1, 6}, noise);
  CHECK(std::isfinite(lz));
  CHECK(lz < 0.0);
  CHECK(kl >= 0.0);
  auto [lz2, kl2] = model.sentence_elbo_terms({2, 5, 1, 6}, noise);
  CHECK(lz == lz2);
  CHECK(kl == kl2);
}

TEST_CASE("point-estimate diagnostic on a hand-checkable configuration") {
  auto cfg = micro_config();
  Model model(cfg);
  model.init(14);
  auto batch = micro_batch(cfg, 15);
  std::vector<ParseTree> trees;
  for (const auto& ex : batch)
    trees.push_back(model.parse(ex.tokens));
  const double loss = model.point_estimate_loss(batch, trees);
  CHECK(std::isfinite(loss));
  CHECK(loss >= 0.0);
  // Empty trees contribute nothing.
  std::vector<ParseTree> empties(batch.size());
  for (std::size_t i = 0; i < empties.size(); ++i)
    empties[i].n = static_cast<int>(batch[i].tokens.size());
  CHECK(model.point_estimate_loss(batch, empties) == 0.0);
}

TEST_CASE("shared word embeddings drop the span-encoder embedding table") {
  auto cfg = micro_config();
  cfg.share_word_embeddings = true;
  Model model(cfg);
  model.init(77);
  CHECK(!model.params().has("spanenc.emb"));
  CHECK(model.params().has("qenc.emb"));
  auto batch = micro_batch(cfg, 16);
  auto r = model.evaluate_batch(batch, Mode::Grounded, true);
  CHECK(std::isfinite(r.joint));
  // The shared table now receives gradient from both encoders.
  CHECK(r.grads.count("qenc.emb") == 1);
  CHECK(r.grads.count("spanenc.emb") == 0);
}
