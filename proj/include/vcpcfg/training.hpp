#pragma once

#include <cstdint>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "vcpcfg/corpus.hpp"
#include "vcpcfg/model.hpp"

namespace vcpcfg::training {

struct TrainConfig {
  double alpha = 0.001;
  double learning_rate = 0.01;
  double beta1 = 0.75;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  int max_epochs = 15;
  int batch_size = 16;
  std::uint64_t seed = 0;
  int max_sentence_length = 40;
  Mode mode = Mode::TextOnly;
  int patience = 1;
  int threads = 1;
  double grad_clip = 0.0;  // 0 disables clipping

  void validate() const;
};

struct AdamState {
  long t = 0;
  std::map<std::string, std::vector<double>> m;
  std::map<std::string, std::vector<double>> v;
};

// Standard bias-corrected Adam update, in place. Throws NumericError naming
// the parameter on a non-finite gradient.
void adam_step(ParamStore& params, const GradientMap& grads, AdamState& state,
               const TrainConfig& cfg);

// Image features are optional; text-only training never reads them.
struct Dataset {
  std::vector<corpus::GroundedExample> examples;
  const corpus::FeatureTable* features = nullptr;
};

struct EpochStats {
  int epoch = 0;  // 0 is the pre-training validation entry
  double train_elbo = 0.0;
  double train_match = 0.0;
  double train_joint = 0.0;
  double val_criterion = 0.0;
  long sentences = 0;
  long batches = 0;
  long skipped_short = 0;
  long skipped_long = 0;
  double wall_seconds = 0.0;
};

// One JSON object per epoch entry.
std::string epoch_json(const EpochStats& s);

struct TrainResult {
  int best_epoch = 0;
  double best_criterion = 0.0;
  AdamState opt;
  std::vector<EpochStats> log;
};

// Epoch loop with seeded shuffling, per-sentence reparameterization noise,
// patience-based early stopping on the validation criterion (perplexity in
// text-only mode, matching loss otherwise). The model is left holding the
// best parameters. Epoch entries stream to `log_out` when given.
TrainResult train(Model& model, const Dataset& train_set,
                  const Dataset& val_set, const TrainConfig& cfg,
                  std::ostream* log_out = nullptr);

// Validation criterion of the current model parameters (exposed for tests).
double validation_criterion(const Model& model, const Dataset& val_set,
                            const TrainConfig& cfg);

// ----- checkpointing -------------------------------------------------------

struct Checkpoint {
  ParamStore params;
  AdamState opt;
  int epoch = 0;
  std::vector<double> val_history;
  std::string config_snapshot;  // key=value lines
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace vcpcfg::training
