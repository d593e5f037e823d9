#include "vcpcfg/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace vcpcfg::training {

void TrainConfig::validate() const {
  if (alpha < 0.0) throw ConfigError("alpha must be >= 0");
  if (learning_rate <= 0.0) throw ConfigError("learning_rate must be > 0");
  if (beta1 < 0.0 || beta1 >= 1.0) throw ConfigError("beta1 must be in [0,1)");
  if (beta2 < 0.0 || beta2 >= 1.0) throw ConfigError("beta2 must be in [0,1)");
  if (adam_epsilon <= 0.0) throw ConfigError("adam_epsilon must be > 0");
  if (max_epochs < 0) throw ConfigError("max_epochs must be >= 0");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (mode != Mode::TextOnly && batch_size < 2)
    throw ConfigError("grounded modes need batch_size >= 2 for negatives");
  if (max_sentence_length < 2)
    throw ConfigError("max_sentence_length must be >= 2");
  if (patience < 1) throw ConfigError("patience must be >= 1");
  if (threads < 1) throw ConfigError("threads must be >= 1");
  if (grad_clip < 0.0) throw ConfigError("grad_clip must be >= 0");
}

void adam_step(ParamStore& params, const GradientMap& grads, AdamState& state,
               const TrainConfig& cfg) {
  ++state.t;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
  for (auto& [name, arr] : params.arrays()) {
    auto git = grads.find(name);
    auto& m = state.m[name];
    auto& v = state.v[name];
    if (m.empty()) m.assign(arr.size(), 0.0);
    if (v.empty()) v.assign(arr.size(), 0.0);
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const double g =
          git != grads.end() && i < git->second.size() ? git->second[i] : 0.0;
      if (!std::isfinite(g))
        throw NumericError("non-finite gradient for parameter " + name + "[" +
                           std::to_string(i) + "]");
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      arr.data[i] -=
          cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.adam_epsilon);
    }
  }
}

namespace {

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  std::uint64_t x = a + 0x9E3779B97F4A7C15ull * (b + 1);
  x ^= x >> 30;
  x *= 0xBF58476D1CE4E5B9ull;
  x ^= x >> 27;
  x *= 0x94D049BB133111EBull;
  x ^= x >> 31;
  return x;
}

std::vector<double> sentence_noise(std::uint64_t seed, std::uint64_t epoch,
                                   std::uint64_t index, int z_dim) {
  std::mt19937_64 rng(mix(mix(seed, epoch), index));
  std::normal_distribution<double> dist(0.0, 1.0);
  std::vector<double> out(z_dim);
  for (double& x : out) x = dist(rng);
  return out;
}

ModelExample make_example(const Model& model, const Dataset& ds,
                          std::size_t idx, const std::vector<double>& noise,
                          bool grounded) {
  const auto& ex = ds.examples[idx];
  ModelExample out;
  out.tokens = ex.tokens;
  out.noise = noise;
  if (grounded) {
    require(ds.features != nullptr,
            "grounded mode requires an image feature table");
    if (ex.image_row < 0 || ex.image_row >= ds.features->rows)
      throw DataError("caption " + std::to_string(idx) +
                      " has no valid image row");
    out.feature = ds.features->row(ex.image_row);
    require(static_cast<int>(out.feature.size()) ==
                model.config().feature_dim,
            "feature dimension does not match the model");
  }
  return out;
}

void clip_gradients(GradientMap& grads, double max_norm) {
  if (max_norm <= 0.0) return;
  double sq = 0.0;
  for (const auto& [name, g] : grads)
    for (double x : g) sq += x * x;
  const double norm = std::sqrt(sq);
  if (norm <= max_norm) return;
  const double scale = max_norm / norm;
  for (auto& [name, g] : grads)
    for (double& x : g) x *= scale;
}

// Indices of usable sentences, plus skip counts.
std::vector<std::size_t> usable_indices(const Dataset& ds,
                                        const TrainConfig& cfg,
                                        long* skipped_short,
                                        long* skipped_long) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < ds.examples.size(); ++i) {
    const int n = static_cast<int>(ds.examples[i].tokens.size());
    if (n < 2) {
      if (skipped_short) ++*skipped_short;
    } else if (n > cfg.max_sentence_length) {
      if (skipped_long) ++*skipped_long;
    } else {
      idx.push_back(i);
    }
  }
  return idx;
}

}  // namespace

double validation_criterion(const Model& model, const Dataset& val_set,
                            const TrainConfig& cfg) {
  const bool grounded = cfg.mode != Mode::TextOnly;
  auto idx = usable_indices(val_set, cfg, nullptr, nullptr);
  if (idx.empty()) throw DataError("validation split has no usable sentences");
  const int z_dim = model.config().topo.z_dim;

  if (!grounded) {
    // Perplexity from the single-sample ELBO bound, with noise fixed per
    // sentence (epoch-independent) so epochs are comparable.
    double log_p = 0.0;
    long tokens = 0;
    for (std::size_t i : idx) {
      auto [lz, kl] = model.sentence_elbo_terms(
          val_set.examples[i].tokens, sentence_noise(cfg.seed, 0, i, z_dim));
      log_p += lz - kl;
      tokens += static_cast<long>(val_set.examples[i].tokens.size());
    }
    return std::exp(-log_p / static_cast<double>(tokens));
  }

  // Matching loss per sentence over deterministic, in-order batches.
  double total = 0.0;
  long counted = 0;
  for (std::size_t start = 0; start + 1 < idx.size() || start == 0;
       start += cfg.batch_size) {
    std::vector<ModelExample> batch;
    for (std::size_t k = start;
         k < std::min(idx.size(), start + cfg.batch_size); ++k)
      batch.push_back(make_example(model, val_set, idx[k],
                                   sentence_noise(cfg.seed, 0, idx[k], z_dim),
                                   true));
    if (batch.size() < 2) break;  // a final singleton has no negative
    auto r = model.evaluate_batch(batch, cfg.mode, /*with_grads=*/false,
                                  cfg.threads);
    total += r.match_loss;
    counted += static_cast<long>(batch.size());
    if (start + cfg.batch_size >= idx.size()) break;
  }
  if (counted == 0) throw DataError("validation split has no usable batches");
  return total / static_cast<double>(counted);
}

std::string epoch_json(const EpochStats& s) {
  std::ostringstream out;
  out.precision(17);
  out << "{\"epoch\":" << s.epoch << ",\"train_elbo\":" << s.train_elbo
      << ",\"train_match\":" << s.train_match
      << ",\"train_joint\":" << s.train_joint
      << ",\"val_criterion\":" << s.val_criterion
      << ",\"sentences\":" << s.sentences << ",\"batches\":" << s.batches
      << ",\"skipped_short\":" << s.skipped_short
      << ",\"skipped_long\":" << s.skipped_long
      << ",\"wall_seconds\":" << s.wall_seconds << "}";
  return out.str();
}

TrainResult train(Model& model, const Dataset& train_set,
                  const Dataset& val_set, const TrainConfig& cfg,
                  std::ostream* log_out) {
  cfg.validate();
  if (train_set.examples.empty()) throw DataError("training corpus is empty");
  if (val_set.examples.empty()) throw DataError("validation split is empty");
  const bool grounded = cfg.mode != Mode::TextOnly;
  model.config().match.alpha = cfg.alpha;
  const int z_dim = model.config().topo.z_dim;

  TrainResult res;
  AdamState& opt = res.opt;

  long skipped_short = 0, skipped_long = 0;
  auto idx = usable_indices(train_set, cfg, &skipped_short, &skipped_long);
  if (idx.empty())
    throw DataError("training corpus has no usable sentences after the "
                    "length filter");

  auto emit = [&](const EpochStats& s) {
    res.log.push_back(s);
    if (log_out) *log_out << epoch_json(s) << "\n";
  };

  ParamStore best_params = model.params();
  double best = validation_criterion(model, val_set, cfg);
  int best_epoch = 0;
  {
    EpochStats s;
    s.epoch = 0;
    s.val_criterion = best;
    s.skipped_short = skipped_short;
    s.skipped_long = skipped_long;
    emit(s);
  }

  int since_best = 0;
  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    EpochStats s;
    s.epoch = epoch;
    s.skipped_short = skipped_short;
    s.skipped_long = skipped_long;

    auto order = idx;
    std::mt19937_64 shuffle_rng(mix(cfg.seed, 0xE70C * epoch));
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    for (std::size_t start = 0; start < order.size();
         start += cfg.batch_size) {
      std::vector<ModelExample> batch;
      for (std::size_t k = start;
           k < std::min(order.size(), start + cfg.batch_size); ++k)
        batch.push_back(make_example(
            model, train_set, order[k],
            sentence_noise(cfg.seed, epoch, order[k], z_dim), grounded));
      if (grounded && batch.size() < 2) break;  // no negative available
      const std::uint64_t neg_seed =
          mix(cfg.seed, mix(epoch, start / cfg.batch_size));
      auto r = model.evaluate_batch(batch, cfg.mode, /*with_grads=*/true,
                                    cfg.threads, neg_seed);
      clip_gradients(r.grads, cfg.grad_clip);
      adam_step(model.params(), r.grads, opt, cfg);
      s.train_elbo += r.elbo_loss;
      s.train_match += r.match_loss;
      s.train_joint += r.joint;
      s.sentences += static_cast<long>(batch.size());
      ++s.batches;
    }

    s.val_criterion = validation_criterion(model, val_set, cfg);
    s.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    emit(s);

    if (s.val_criterion < best) {
      best = s.val_criterion;
      best_epoch = epoch;
      best_params = model.params();
      since_best = 0;
    } else {
      ++since_best;
      if (since_best >= cfg.patience) break;
    }
  }

  model.params() = best_params;
  res.best_epoch = best_epoch;
  res.best_criterion = best;
  return res;
}

}  // namespace vcpcfg::training
