// Command-line entry point: train, parse, evaluate, gradcheck and synth
// subcommands over a flat key=value config file with flag overrides.
#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "vcpcfg/corpus.hpp"
#include "vcpcfg/evaluation.hpp"
#include "vcpcfg/model.hpp"
#include "vcpcfg/training.hpp"
#include "vcpcfg/trees.hpp"

namespace fs = std::filesystem;
using namespace vcpcfg;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

struct RunConfig {
  training::TrainConfig train;
  double margin = 0.2;
  bool average_all_negatives = false;
  bool random_negatives = false;
  std::string mode = "text-only";

  int num_nt = 30;
  int num_pt = 60;
  int sym_dim = 256;
  int z_dim = 64;
  int q_embed = 512;
  int q_hidden = 512;
  int span_embed = 512;
  int span_hidden = 512;
  int joint_dim = 512;
  int feature_dim = 2048;
  bool share_word_embeddings = false;
  int vocab_cap = 10000;

  std::string captions;
  std::string val_captions;
  std::string features;
  std::string alignment_index;
  std::string val_alignment_index;
  int captions_per_image = 1;
  double val_fraction = 0.1;
  std::string output_dir = ".";
};

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

// Flat key = value lines; # starts a comment; unknown keys rejected.
void load_config_file(const std::string& path, RunConfig& cfg) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);

  std::map<std::string, std::function<void(const std::string&)>> setters;
  auto num = [](const std::string& v, const char* key) {
    try {
      std::size_t used = 0;
      const double d = std::stod(v, &used);
      if (trim(v.substr(used)).empty()) return d;
    } catch (const std::exception&) {
    }
    throw ConfigError(std::string("config key ") + key +
                      " expects a number, got '" + v + "'");
  };
  auto set_d = [&](const char* key, double* dst) {
    setters[key] = [=](const std::string& v) { *dst = num(v, key); };
  };
  auto set_i = [&](const char* key, int* dst) {
    setters[key] = [=](const std::string& v) {
      *dst = static_cast<int>(num(v, key));
    };
  };
  auto set_b = [&](const char* key, bool* dst) {
    setters[key] = [=](const std::string& v) {
      if (v == "true" || v == "1")
        *dst = true;
      else if (v == "false" || v == "0")
        *dst = false;
      else
        throw ConfigError(std::string("config key ") + key +
                          " expects true/false, got '" + v + "'");
    };
  };
  auto set_s = [&](const char* key, std::string* dst) {
    setters[key] = [=](const std::string& v) { *dst = v; };
  };

  set_d("alpha", &cfg.train.alpha);
  set_d("learning_rate", &cfg.train.learning_rate);
  set_d("beta1", &cfg.train.beta1);
  set_d("beta2", &cfg.train.beta2);
  set_d("adam_epsilon", &cfg.train.adam_epsilon);
  set_i("max_epochs", &cfg.train.max_epochs);
  set_i("batch_size", &cfg.train.batch_size);
  setters["seed"] = [&](const std::string& v) {
    cfg.train.seed = static_cast<std::uint64_t>(num(v, "seed"));
  };
  set_i("max_sentence_length", &cfg.train.max_sentence_length);
  set_i("patience", &cfg.train.patience);
  set_i("threads", &cfg.train.threads);
  set_d("grad_clip", &cfg.train.grad_clip);
  set_d("margin", &cfg.margin);
  set_b("average_all_negatives", &cfg.average_all_negatives);
  set_b("random_negatives", &cfg.random_negatives);
  set_s("mode", &cfg.mode);

  set_i("num_nt", &cfg.num_nt);
  set_i("num_pt", &cfg.num_pt);
  set_i("sym_dim", &cfg.sym_dim);
  set_i("z_dim", &cfg.z_dim);
  set_i("q_embed", &cfg.q_embed);
  set_i("q_hidden", &cfg.q_hidden);
  set_i("span_embed", &cfg.span_embed);
  set_i("span_hidden", &cfg.span_hidden);
  set_i("joint_dim", &cfg.joint_dim);
  set_i("feature_dim", &cfg.feature_dim);
  set_b("share_word_embeddings", &cfg.share_word_embeddings);
  set_i("vocab_cap", &cfg.vocab_cap);

  set_s("captions", &cfg.captions);
  set_s("val_captions", &cfg.val_captions);
  set_s("features", &cfg.features);
  set_s("alignment_index", &cfg.alignment_index);
  set_s("val_alignment_index", &cfg.val_alignment_index);
  set_i("captions_per_image", &cfg.captions_per_image);
  set_d("val_fraction", &cfg.val_fraction);
  set_s("output_dir", &cfg.output_dir);

  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(lineno) +
                        ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    auto it = setters.find(key);
    if (it == setters.end())
      throw ConfigError(path + ":" + std::to_string(lineno) +
                        ": unknown config key '" + key + "'");
    it->second(value);
  }
}

ModelConfig model_config(const RunConfig& cfg, int vocab_size) {
  ModelConfig m;
  m.topo.num_nt = cfg.num_nt;
  m.topo.num_pt = cfg.num_pt;
  m.topo.vocab_size = vocab_size;
  m.topo.sym_dim = cfg.sym_dim;
  m.topo.z_dim = cfg.z_dim;
  m.q_embed = cfg.q_embed;
  m.q_hidden = cfg.q_hidden;
  m.span_embed = cfg.span_embed;
  m.span_hidden = cfg.span_hidden;
  m.joint_dim = cfg.joint_dim;
  m.feature_dim = cfg.feature_dim;
  m.share_word_embeddings = cfg.share_word_embeddings;
  m.match.margin = cfg.margin;
  m.match.average_all_negatives = cfg.average_all_negatives;
  m.match.random_negatives = cfg.random_negatives;
  m.match.alpha = cfg.train.alpha;
  return m;
}

// The checkpoint's config snapshot: enough to rebuild the model and encode
// raw text (the vocabulary rides along as one space-joined line).
std::string snapshot(const RunConfig& cfg, const corpus::Vocabulary& vocab) {
  std::ostringstream out;
  out << "mode=" << cfg.mode << "\n";
  out << "num_nt=" << cfg.num_nt << "\nnum_pt=" << cfg.num_pt << "\n";
  out << "sym_dim=" << cfg.sym_dim << "\nz_dim=" << cfg.z_dim << "\n";
  out << "q_embed=" << cfg.q_embed << "\nq_hidden=" << cfg.q_hidden << "\n";
  out << "span_embed=" << cfg.span_embed << "\nspan_hidden="
      << cfg.span_hidden << "\n";
  out << "joint_dim=" << cfg.joint_dim << "\nfeature_dim=" << cfg.feature_dim
      << "\n";
  out << "share_word_embeddings="
      << (cfg.share_word_embeddings ? "true" : "false") << "\n";
  out << "vocab=";
  for (int i = 1; i < vocab.size(); ++i) {
    if (i > 1) out << ' ';
    out << vocab.decode(i);
  }
  out << "\n";
  return out.str();
}

std::map<std::string, std::string> parse_snapshot(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return kv;
}

int snap_int(const std::map<std::string, std::string>& kv,
             const std::string& key) {
  auto it = kv.find(key);
  if (it == kv.end())
    throw DataError("checkpoint snapshot is missing key '" + key + "'");
  return std::stoi(it->second);
}

void require_readable(const std::string& path, const std::string& key) {
  if (path.empty()) throw ConfigError("missing required path: " + key);
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + key + " file: " + path);
}

struct LoadedData {
  corpus::Vocabulary vocab;
  corpus::FeatureTable features;
  training::Dataset train;
  training::Dataset val;
};

LoadedData load_training_data(const RunConfig& cfg, Mode mode) {
  const bool grounded = mode != Mode::TextOnly;
  require_readable(cfg.captions, "captions");
  if (grounded) require_readable(cfg.features, "features");
  if (!cfg.alignment_index.empty())
    require_readable(cfg.alignment_index, "alignment_index");
  if (!cfg.val_captions.empty())
    require_readable(cfg.val_captions, "val_captions");

  LoadedData d;
  auto sentences = corpus::load_captions(cfg.captions);
  d.vocab = corpus::build_vocab(sentences, cfg.vocab_cap);

  std::vector<int> alignment;
  if (grounded) {
    d.features = corpus::load_features(cfg.features);
    if (cfg.feature_dim != d.features.dim)
      throw ConfigError("feature_dim " + std::to_string(cfg.feature_dim) +
                        " does not match the feature file's dim " +
                        std::to_string(d.features.dim));
    alignment =
        cfg.alignment_index.empty()
            ? corpus::blocked_alignment(static_cast<int>(sentences.size()),
                                        cfg.captions_per_image,
                                        d.features.rows)
            : corpus::load_alignment_index(cfg.alignment_index,
                                           static_cast<int>(sentences.size()),
                                           d.features.rows);
  } else {
    alignment.assign(sentences.size(), -1);
  }
  auto examples = corpus::assemble(d.vocab, sentences, alignment);

  if (!cfg.val_captions.empty()) {
    auto val_sents = corpus::load_captions(cfg.val_captions);
    std::vector<int> val_align;
    if (grounded) {
      require_readable(cfg.val_alignment_index, "val_alignment_index");
      val_align = corpus::load_alignment_index(
          cfg.val_alignment_index, static_cast<int>(val_sents.size()),
          d.features.rows);
    } else {
      val_align.assign(val_sents.size(), -1);
    }
    d.train.examples = std::move(examples);
    d.val.examples = corpus::assemble(d.vocab, val_sents, val_align);
  } else {
    if (cfg.val_fraction <= 0.0 || cfg.val_fraction >= 1.0)
      throw ConfigError("val_fraction must be in (0, 1)");
    std::size_t held =
        static_cast<std::size_t>(examples.size() * cfg.val_fraction);
    held = std::max<std::size_t>(held, 1);
    if (held >= examples.size())
      throw DataError("corpus too small to hold out a validation split");
    const std::size_t split = examples.size() - held;
    d.train.examples.assign(examples.begin(), examples.begin() + split);
    d.val.examples.assign(examples.begin() + split, examples.end());
  }
  d.train.features = &d.features;
  d.val.features = &d.features;
  return d;
}

int cmd_train(RunConfig cfg) {
  const Mode mode = mode_from_string(cfg.mode);
  cfg.train.mode = mode;
  cfg.train.validate();
  auto data = load_training_data(cfg, mode);
  fs::create_directories(cfg.output_dir);

  Model model(model_config(cfg, data.vocab.size()));
  model.init(cfg.train.seed);

  const auto log_path = fs::path(cfg.output_dir) / "epochs.jsonl";
  std::ofstream log(log_path);
  if (!log) throw DataError("cannot open epoch log: " + log_path.string());
  auto res = training::train(model, data.train, data.val, cfg.train, &log);
  log.close();

  training::Checkpoint ckpt;
  ckpt.params = model.params();
  ckpt.opt = std::move(res.opt);
  ckpt.epoch = res.best_epoch;
  for (const auto& s : res.log) ckpt.val_history.push_back(s.val_criterion);
  ckpt.config_snapshot = snapshot(cfg, data.vocab);
  const auto ckpt_path = fs::path(cfg.output_dir) / "checkpoint.bin";
  training::save_checkpoint(ckpt_path.string(), ckpt);

  std::cout << "best_epoch=" << res.best_epoch
            << " best_criterion=" << res.best_criterion << "\n";
  std::cout << "checkpoint=" << ckpt_path.string() << "\n";
  std::cout << "epoch_log=" << log_path.string() << "\n";
  return 0;
}

int cmd_parse(const std::string& checkpoint_path, const std::string& input,
              const std::string& output) {
  require_readable(checkpoint_path, "checkpoint");
  require_readable(input, "input");
  auto ckpt = training::load_checkpoint(checkpoint_path);
  auto kv = parse_snapshot(ckpt.config_snapshot);

  corpus::Vocabulary vocab;
  {
    auto it = kv.find("vocab");
    if (it == kv.end())
      throw DataError("checkpoint snapshot carries no vocabulary");
    std::istringstream words(it->second);
    std::string w;
    while (words >> w) vocab.add(w);
  }
  RunConfig mc;
  mc.num_nt = snap_int(kv, "num_nt");
  mc.num_pt = snap_int(kv, "num_pt");
  mc.sym_dim = snap_int(kv, "sym_dim");
  mc.z_dim = snap_int(kv, "z_dim");
  mc.q_embed = snap_int(kv, "q_embed");
  mc.q_hidden = snap_int(kv, "q_hidden");
  mc.span_embed = snap_int(kv, "span_embed");
  mc.span_hidden = snap_int(kv, "span_hidden");
  mc.joint_dim = snap_int(kv, "joint_dim");
  mc.feature_dim = snap_int(kv, "feature_dim");
  mc.share_word_embeddings = kv.count("share_word_embeddings") &&
                             kv.at("share_word_embeddings") == "true";

  Model model(model_config(mc, vocab.size()));
  model.params() = std::move(ckpt.params);

  std::ifstream in(input);
  std::ofstream out(output);
  if (!out) throw DataError("cannot open output file: " + output);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto tokens = corpus::split_tokens(line);
    if (tokens.empty())
      throw DataError(input + ":" + std::to_string(lineno) +
                      ": no tokens left after punctuation removal");
    if (tokens.size() == 1) {
      out << "(X " << tokens[0] << ")\n";
      continue;
    }
    auto tree = model.parse(corpus::encode(vocab, tokens));
    out << serialize_tree(tree, tokens) << "\n";
  }
  return 0;
}

int cmd_evaluate(const std::vector<std::string>& pred_paths,
                 const std::string& gold_path,
                 const std::vector<std::string>& labels,
                 const std::string& baseline, std::uint64_t seed,
                 const std::string& csv_path) {
  require_readable(gold_path, "gold");
  auto golds = load_trees(gold_path);

  std::vector<std::vector<ParseTree>> runs;
  if (!baseline.empty()) {
    evaluation::BaselineMode bm;
    if (baseline == "left")
      bm = evaluation::BaselineMode::Left;
    else if (baseline == "right")
      bm = evaluation::BaselineMode::Right;
    else if (baseline == "random")
      bm = evaluation::BaselineMode::Random;
    else
      throw ConfigError("unknown baseline '" + baseline +
                        "' (want left, right or random)");
    std::vector<ParseTree> run;
    for (std::size_t i = 0; i < golds.size(); ++i)
      run.push_back(evaluation::baseline_tree(std::max(golds[i].n, 2), bm,
                                              seed + i));
    runs.push_back(std::move(run));
  } else {
    if (pred_paths.empty())
      throw ConfigError("need at least one --pred file or a --baseline");
    for (const auto& p : pred_paths) {
      require_readable(p, "pred");
      runs.push_back(load_trees(p));
    }
  }

  std::string csv;
  for (std::size_t r = 0; r < runs.size(); ++r) {
    auto report = evaluation::evaluate(runs[r], golds, labels);
    if (runs.size() > 1) std::cout << "run " << r << ":\n";
    std::cout << evaluation::report_table(report);
    if (r == 0) csv = evaluation::report_csv(report);
  }
  if (runs.size() > 1) {
    std::vector<std::vector<evaluation::SpanSet>> span_runs;
    for (const auto& run : runs) {
      std::vector<evaluation::SpanSet> sets;
      for (const auto& t : run) sets.push_back(evaluation::make_span_set(t));
      span_runs.push_back(std::move(sets));
    }
    const double sf1 = evaluation::self_f1(span_runs);
    std::printf("self F1:     %.3f\n", sf1);
    char buf[64];
    std::snprintf(buf, sizeof buf, "self_f1,,%.6f\n", sf1);
    csv += buf;
  }
  if (!csv_path.empty()) {
    std::ofstream out(csv_path);
    if (!out) throw DataError("cannot open csv output: " + csv_path);
    out << csv;
  }
  return 0;
}

int cmd_gradcheck(const std::string& scope, std::uint64_t seed) {
  Mode mode;
  if (scope == "elbo")
    mode = Mode::TextOnly;
  else if (scope == "matching")
    mode = Mode::GroundedNoLm;
  else if (scope == "joint")
    mode = Mode::Grounded;
  else
    throw ConfigError("unknown gradcheck scope '" + scope +
                      "' (want elbo, matching or joint)");

  // Seeded micro-fixture: small enough for central differences per
  // coordinate, large enough to touch every parameter group.
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
  cfg.match.alpha = 0.5;
  Model model(cfg);
  model.init(seed);

  std::mt19937_64 rng(seed ^ 0x5eedULL);
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

  auto value_and_grads = [&](const ParamStore& p) {
    Model m(cfg);
    m.params() = p;
    auto r = m.evaluate_batch(batch, mode, /*with_grads=*/true);
    return std::make_pair(r.joint, r.grads);
  };
  auto value_only = [&](const ParamStore& p) {
    Model m(cfg);
    m.params() = p;
    return m.evaluate_batch(batch, mode, /*with_grads=*/false).joint;
  };

  const auto [base, analytic] = value_and_grads(model.params());
  const double step = 1e-4;
  const std::size_t coords_per_param = 6;
  double worst = 0.0;
  ParamStore work = model.params();
  for (auto& [name, arr] : work.arrays()) {
    const auto git = analytic.find(name);
    double param_worst = 0.0;
    std::mt19937_64 pick_rng(seed + std::hash<std::string>{}(name));
    std::vector<std::size_t> coords;
    if (arr.size() <= coords_per_param) {
      for (std::size_t i = 0; i < arr.size(); ++i) coords.push_back(i);
    } else {
      std::uniform_int_distribution<std::size_t> pick(0, arr.size() - 1);
      for (std::size_t c = 0; c < coords_per_param; ++c)
        coords.push_back(pick(pick_rng));
    }
    for (std::size_t i : coords) {
      const double saved = arr.data[i];
      arr.data[i] = saved + step;
      const double fp = value_only(work);
      arr.data[i] = saved - step;
      const double fm = value_only(work);
      arr.data[i] = saved;
      if (!std::isfinite(fp) || !std::isfinite(fm))
        throw NumericError("non-finite loss perturbing " + name);
      const double fd = (fp - fm) / (2.0 * step);
      const double an = git != analytic.end() && i < git->second.size()
                            ? git->second[i]
                            : 0.0;
      const double rel =
          std::fabs(an - fd) / std::max(1e-6, std::fabs(an) + std::fabs(fd));
      param_worst = std::max(param_worst, rel);
    }
    std::printf("%-28s %.3e\n", name.c_str(), param_worst);
    worst = std::max(worst, param_worst);
  }
  std::printf("worst relative error: %.3e (loss %.6f, scope %s)\n", worst,
              base, scope.c_str());
  if (worst >= 1e-4) {
    std::cerr << "gradient check failed: worst relative error "
              << worst << " >= 1e-4\n";
    return kExitNumeric;
  }
  return 0;
}

int cmd_synth(const corpus::SyntheticConfig& sc,
              const std::string& output_dir) {
  auto c = corpus::generate_synthetic(sc);
  fs::create_directories(output_dir);
  const fs::path dir(output_dir);
  {
    std::ofstream caps(dir / "captions.txt");
    for (const auto& s : c.sentences) {
      for (std::size_t i = 0; i < s.size(); ++i)
        caps << (i ? " " : "") << s[i];
      caps << "\n";
    }
  }
  {
    std::ofstream trees(dir / "trees.txt");
    for (const auto& line : c.tree_lines) trees << line << "\n";
  }
  corpus::save_features((dir / "features.bin").string(), c.features);
  std::cout << "sentences=" << c.sentences.size()
            << " feature_rows=" << c.features.rows
            << " dir=" << output_dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"compound grammar induction with visual grounding"};
  app.require_subcommand(1);

  // The config file loads first; explicit flags then override it.
  std::string config_path;
  for (int i = 1; i + 1 < argc; ++i)
    if (std::string(argv[i]) == "--config") config_path = argv[i + 1];

  RunConfig cfg;
  try {
    if (!config_path.empty()) load_config_file(config_path, cfg);

    app.add_option("--config", config_path, "key=value config file");

    auto add_shared = [&](CLI::App* sub) {
      sub->add_option("--config", config_path, "key=value config file");
      sub->add_option("--threads", cfg.train.threads, "worker thread cap");
      sub->add_option("--seed", cfg.train.seed, "master random seed");
      sub->add_option("--output-dir", cfg.output_dir, "output directory");
    };

    auto* train_cmd = app.add_subcommand("train", "fit a model");
    add_shared(train_cmd);
    train_cmd->add_option("--mode", cfg.mode,
                          "text-only, grounded or grounded-no-lm");
    train_cmd->add_option("--captions", cfg.captions, "caption file");
    train_cmd->add_option("--val-captions", cfg.val_captions,
                          "validation caption file");
    train_cmd->add_option("--features", cfg.features, "image feature file");
    train_cmd->add_option("--alignment-index", cfg.alignment_index,
                          "caption-to-row index file");
    train_cmd->add_option("--val-alignment-index", cfg.val_alignment_index,
                          "validation caption-to-row index file");
    train_cmd->add_option("--captions-per-image", cfg.captions_per_image,
                          "blocked alignment factor");
    train_cmd->add_option("--alpha", cfg.train.alpha,
                          "matching loss weight");
    train_cmd->add_option("--learning-rate", cfg.train.learning_rate);
    train_cmd->add_option("--max-epochs", cfg.train.max_epochs);
    train_cmd->add_option("--batch-size", cfg.train.batch_size);
    train_cmd->add_option("--max-sentence-length",
                          cfg.train.max_sentence_length);
    train_cmd->add_option("--patience", cfg.train.patience);
    train_cmd->add_option("--grad-clip", cfg.train.grad_clip);
    train_cmd->add_option("--vocab-cap", cfg.vocab_cap);
    train_cmd->add_option("--num-nt", cfg.num_nt);
    train_cmd->add_option("--num-pt", cfg.num_pt);
    train_cmd->add_option("--sym-dim", cfg.sym_dim);
    train_cmd->add_option("--z-dim", cfg.z_dim);
    train_cmd->add_option("--q-embed", cfg.q_embed);
    train_cmd->add_option("--q-hidden", cfg.q_hidden);
    train_cmd->add_option("--span-embed", cfg.span_embed);
    train_cmd->add_option("--span-hidden", cfg.span_hidden);
    train_cmd->add_option("--joint-dim", cfg.joint_dim);
    train_cmd->add_option("--feature-dim", cfg.feature_dim);
    train_cmd->add_option("--val-fraction", cfg.val_fraction);
    train_cmd->add_flag("--share-word-embeddings",
                        cfg.share_word_embeddings);

    std::string parse_checkpoint, parse_input, parse_output;
    auto* parse_cmd = app.add_subcommand("parse", "parse raw text");
    parse_cmd->add_option("--checkpoint", parse_checkpoint)->required();
    parse_cmd->add_option("--input", parse_input)->required();
    parse_cmd->add_option("--output", parse_output)->required();

    std::vector<std::string> pred_paths, labels;
    std::string gold_path, baseline, csv_path;
    auto* eval_cmd = app.add_subcommand("evaluate", "score predictions");
    eval_cmd->add_option("--pred", pred_paths, "predicted tree files");
    eval_cmd->add_option("--gold", gold_path, "gold tree file")->required();
    eval_cmd->add_option("--label", labels, "labels for per-label recall");
    eval_cmd->add_option("--baseline", baseline, "left, right or random");
    eval_cmd->add_option("--seed", cfg.train.seed);
    eval_cmd->add_option("--csv", csv_path, "CSV report output path");

    std::string scope = "joint";
    auto* grad_cmd =
        app.add_subcommand("gradcheck", "finite-difference gradient check");
    grad_cmd->add_option("--scope", scope, "elbo, matching or joint");
    grad_cmd->add_option("--seed", cfg.train.seed);

    corpus::SyntheticConfig sc;
    auto* synth_cmd =
        app.add_subcommand("synth", "write a synthetic grounded corpus");
    synth_cmd->add_option("--size", sc.size);
    synth_cmd->add_option("--seed", sc.seed);
    synth_cmd->add_option("--noise", sc.noise_scale);
    synth_cmd->add_option("--feature-dim", sc.feature_dim);
    synth_cmd->add_option("--min-length", sc.min_length);
    synth_cmd->add_option("--max-length", sc.max_length);
    synth_cmd->add_option("--output-dir", cfg.output_dir);

    try {
      app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
      const int code = app.exit(e);
      return code == 0 ? 0 : kExitConfig;
    }

    if (train_cmd->parsed()) return cmd_train(cfg);
    if (parse_cmd->parsed())
      return cmd_parse(parse_checkpoint, parse_input, parse_output);
    if (eval_cmd->parsed())
      return cmd_evaluate(pred_paths, gold_path, labels, baseline,
                          cfg.train.seed, csv_path);
    if (grad_cmd->parsed()) return cmd_gradcheck(scope, cfg.train.seed);
    if (synth_cmd->parsed()) return cmd_synth(sc, cfg.output_dir);
    return kExitConfig;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
