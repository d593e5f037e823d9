#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vcpcfg/chart.hpp"
#include "vcpcfg/encoders.hpp"
#include "vcpcfg/grammar.hpp"
#include "vcpcfg/matching.hpp"
#include "vcpcfg/params.hpp"
#include "vcpcfg/trees.hpp"

namespace vcpcfg {

enum class Mode { TextOnly, Grounded, GroundedNoLm };

Mode mode_from_string(const std::string& s);
std::string mode_to_string(Mode m);

struct ModelConfig {
  GrammarTopology topo;
  int q_embed = 512;
  int q_hidden = 512;
  int span_embed = 512;
  int span_hidden = 512;
  int joint_dim = 512;
  int feature_dim = 2048;
  bool share_word_embeddings = false;
  matching::MatchingConfig match;
};

// One training example as seen by the model: token ids, an optional image
// feature row, and the fixed reparameterization noise for this evaluation.
struct ModelExample {
  std::vector<int> tokens;
  std::vector<double> feature;  // empty in text-only mode
  std::vector<double> noise;    // z_dim standard-normal draw
};

struct BatchResult {
  double elbo_loss = 0.0;   // sum over batch of -(log_z - kl)
  double match_loss = 0.0;  // expected image-text matching loss
  double joint = 0.0;
  double total_log_z = 0.0;  // for perplexity
  long total_tokens = 0;
  GradientMap grads;
};

// Ties grammar, encoders, chart inference and the matching loss together.
// All loss evaluations are pure functions of (params, batch) — noise is part
// of the batch — so gradient checks and determinism tests can replay them.
class Model {
 public:
  explicit Model(ModelConfig cfg);

  void init(std::uint64_t seed);

  ModelConfig& config() { return cfg_; }
  const ModelConfig& config() const { return cfg_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }

  encoders::EncoderDims q_dims() const;
  encoders::EncoderDims span_dims() const;

  BatchResult evaluate_batch(const std::vector<ModelExample>& batch, Mode mode,
                             bool with_grads, int threads = 1,
                             std::uint64_t negative_seed = 0) const;

  // Fixed-tree diagnostic: sum of hinge losses over the given trees' spans
  // (restricted to the selected-span budget). Value only.
  double point_estimate_loss(const std::vector<ModelExample>& batch,
                             const std::vector<ParseTree>& trees) const;

  // MAP parse with z fixed to the posterior mean; images never touched.
  ParseTree parse(const std::vector<int>& tokens) const;

  // Rule tables and marginals for a fixed z path (posterior mean).
  RuleProbs rules_at_posterior_mean(const std::vector<int>& tokens) const;

  // (log_z, kl) for one sentence at the given noise.
  std::pair<double, double> sentence_elbo_terms(
      const std::vector<int>& tokens, const std::vector<double>& noise) const;

 private:
  ModelConfig cfg_;
  ParamStore params_;
};

}  // namespace vcpcfg
