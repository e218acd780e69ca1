// Copyright 2026 The Inoculation Harness Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// inoc: command-line front end.
//
//   inoc gen        synthetic original / single-label / numeric datasets
//   inoc challenge  transform an original bundle into a challenge bundle
//   inoc train      pretrain a checkpoint
//   inoc inoculate  run the fine-tuning sweep and write report + CSV
//   inoc baseline   three-rule baseline over a numeric split
//
// Exit codes: 0 ok, 2 configuration error, 3 data error, 4 runtime error.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "inoc/checkpoint.hpp"
#include "inoc/corpus.hpp"
#include "inoc/errors.hpp"
#include "inoc/inoculation.hpp"
#include "inoc/outcomes.hpp"
#include "inoc/perturb.hpp"
#include "inoc/report.hpp"
#include "inoc/synthgen.hpp"
#include "inoc/trainer.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitRuntime = 4;

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw inoc::ConfigError("cannot open config '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw inoc::ConfigError("config '" + path + "' is not valid JSON: " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw inoc::RuntimeError("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw inoc::RuntimeError("write to '" + path.string() + "' failed");
}

std::string read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw inoc::DataError("cannot open '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// INOC_SEED, when set, replaces every seed read from a config file.
std::optional<std::uint64_t> env_seed() {
  const char* v = std::getenv("INOC_SEED");
  if (v == nullptr || *v == '\0') return std::nullopt;
  char* end = nullptr;
  const unsigned long long s = std::strtoull(v, &end, 10);
  if (*end != '\0') throw inoc::ConfigError("INOC_SEED must be a nonnegative integer");
  return s;
}

std::uint64_t resolve_seed(std::uint64_t from_config, const std::optional<std::uint64_t>& flag) {
  if (flag) return *flag;
  if (auto e = env_seed()) return *e;
  return from_config;
}

inoc::DatasetBundle load_bundle(const fs::path& dir, bool need_train) {
  auto load = [&](const char* name, bool required) {
    const fs::path p = dir / (std::string(name) + ".jsonl");
    if (!fs::exists(p)) {
      if (required) throw inoc::DataError("missing split file '" + p.string() + "'");
      inoc::DatasetSplit empty;
      empty.name = name;
      return empty;
    }
    inoc::DatasetSplit s = inoc::load_jsonl(p.string());
    s.name = name;
    return s;
  };
  inoc::DatasetBundle b;
  b.train = load("train", need_train);
  b.dev = load("dev", true);
  b.test = load("test", true);
  inoc::validate_bundle(b);
  return b;
}

void write_bundle(const inoc::DatasetBundle& b, const fs::path& dir) {
  fs::create_directories(dir);
  inoc::write_jsonl(b.train, (dir / "train.jsonl").string());
  inoc::write_jsonl(b.dev, (dir / "dev.jsonl").string());
  inoc::write_jsonl(b.test, (dir / "test.jsonl").string());
}

std::string split_digest(const inoc::DatasetSplit& s) {
  std::ostringstream out;
  inoc::write_jsonl(s, out);
  return inoc::digest(std::string_view(out.str()));
}

// ---------------------------------------------------------------- gen

struct GenArgs {
  std::string kind = "original";
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> train, dev, test;
  std::string label = "contradiction";
  std::size_t split_train = 1000;
  std::size_t split_dev = 0;
};

int cmd_gen(const GenArgs& a) {
  const fs::path out(a.out);
  if (a.kind == "numeric") {
    inoc::NumericCategoryCounts counts;
    std::uint64_t seed = 17;
    if (!a.config.empty()) {
      json j = read_json_file(a.config);
      if (j.is_object() && j.contains("seed")) {
        seed = inoc::detail::json_get<std::uint64_t>(j["seed"], "seed");
        j.erase("seed");
      }
      counts = inoc::numeric_counts_from_json(j);
    }
    seed = resolve_seed(seed, a.seed);
    const inoc::DatasetSplit pool = inoc::gen_numeric(counts, seed);
    fs::create_directories(out);
    inoc::write_jsonl(pool, (out / "numeric.jsonl").string());
    if (a.split_train + a.split_dev <= pool.size()) {
      write_bundle(inoc::split_challenge_pool(pool, a.split_train, a.split_dev, seed), out);
    } else {
      throw inoc::ConfigError("numeric pool too small for --split-train/--split-dev");
    }
    std::cout << "numeric: " << pool.size() << " examples written to " << out.string() << '\n';
    return 0;
  }

  inoc::SynthConfig cfg;
  if (!a.config.empty()) cfg = inoc::synth_config_from_json(read_json_file(a.config));
  cfg.seed = resolve_seed(cfg.seed, a.seed);
  if (a.train) cfg.counts.train = *a.train;
  if (a.dev) cfg.counts.dev = *a.dev;
  if (a.test) cfg.counts.test = *a.test;
  cfg.validate();

  inoc::DatasetBundle bundle;
  if (a.kind == "original") {
    bundle = inoc::gen_original(cfg);
  } else if (a.kind == "single_label") {
    const auto label = inoc::parse_label(a.label);
    if (!label) throw inoc::ConfigError("unknown label '" + a.label + "'");
    bundle = inoc::gen_single_label(cfg, *label);
  } else {
    throw inoc::ConfigError("unknown --kind '" + a.kind + "'");
  }
  write_bundle(bundle, out);
  write_text(out / "synth_config.json", inoc::synth_config_to_json(cfg).dump(2) + "\n");
  std::cout << a.kind << ": " << bundle.train.size() << "/" << bundle.dev.size() << "/"
            << bundle.test.size() << " examples written to " << out.string() << '\n';
  return 0;
}

// ---------------------------------------------------------- challenge

struct ChallengeArgs {
  std::string source;
  std::string transform;
  std::string out;
  std::size_t train_size = 1000;
  std::optional<std::uint64_t> seed;
  std::size_t vocab_size = 5000;
};

int cmd_challenge(const ChallengeArgs& a) {
  const auto kind = inoc::parse_transform(a.transform);
  if (!kind) throw inoc::ConfigError("unknown transform '" + a.transform + "'");
  const std::uint64_t seed = resolve_seed(5, a.seed);
  const inoc::DatasetBundle source = load_bundle(a.source, true);
  const inoc::Transformation t{*kind, seed, a.vocab_size};
  const inoc::DatasetBundle bundle = inoc::make_challenge_bundle(source, t, a.train_size, seed);
  write_bundle(bundle, a.out);
  std::cout << a.transform << ": " << bundle.train.size() << "/" << bundle.dev.size() << "/"
            << bundle.test.size() << " examples written to " << a.out << '\n';
  return 0;
}

// -------------------------------------------------------------- train

struct TrainArgs {
  std::string data;
  std::string config;
  std::string out;
  std::string history;
  std::optional<std::uint64_t> seed;
  std::optional<double> lr;
  std::optional<double> l2;
  std::optional<std::size_t> epochs;
  std::optional<std::size_t> batch_size;
  std::optional<std::size_t> patience;
  std::optional<std::size_t> hidden;
  std::optional<std::size_t> hash_dim;
  std::optional<bool> char_ngrams;
};

// Train config file: {"train": {...TrainConfig}, "features": {...FeatureConfig}}.
std::pair<inoc::TrainConfig, inoc::FeatureConfig> load_train_config(const TrainArgs& a) {
  inoc::TrainConfig tc;
  inoc::FeatureConfig fc;
  if (!a.config.empty()) {
    const json j = read_json_file(a.config);
    inoc::detail::for_each_key(j, "train run config", [&](const std::string& k, const json& v) {
      if (k == "train") tc = inoc::train_config_from_json(v);
      else if (k == "features") fc = inoc::feature_config_from_json(v);
      else return false;
      return true;
    });
  }
  tc.seed = resolve_seed(tc.seed, a.seed);
  if (a.lr) tc.initial_lr = *a.lr;
  if (a.l2) tc.l2 = *a.l2;
  if (a.epochs) tc.max_epochs = *a.epochs;
  if (a.batch_size) tc.batch_size = *a.batch_size;
  if (a.patience) tc.patience = *a.patience;
  if (a.hidden) tc.hidden_units = *a.hidden;
  if (a.hash_dim) fc.hash_dim = *a.hash_dim;
  if (a.char_ngrams) fc.use_char_ngrams = *a.char_ngrams;
  tc.validate();
  fc.validate();
  return {tc, fc};
}

int cmd_train(const TrainArgs& a) {
  const auto [tc, fc] = load_train_config(a);
  const inoc::DatasetBundle data = load_bundle(a.data, true);
  const inoc::Checkpoint ckpt = inoc::train(tc, fc, data.train, data.dev, [](const inoc::EpochRecord& r) {
    std::cerr << "epoch " << r.epoch << " lr " << r.learning_rate << " loss " << r.train_loss
              << " dev_acc " << r.dev_accuracy << '\n';
  });
  inoc::save_checkpoint(ckpt, a.out);
  if (!a.history.empty()) {
    std::ofstream h(a.history, std::ios::trunc);
    if (!h) throw inoc::RuntimeError("cannot open '" + a.history + "' for writing");
    inoc::write_history_jsonl(ckpt.history, h);
  }
  std::printf("test accuracy %.6f (%zu epochs, checkpoint %s)\n",
              inoc::evaluate(ckpt, data.test), ckpt.history.size(), a.out.c_str());
  return 0;
}

// ---------------------------------------------------------- inoculate

struct InoculateArgs {
  std::string checkpoint;
  std::string original;
  std::string challenge;
  std::string config;
  std::string out;
  std::string name;
  std::optional<std::uint64_t> seed;
  std::vector<std::size_t> sizes;
  std::vector<double> lrs;
  std::optional<std::size_t> epochs;
  std::size_t jobs = 0;
};

// Inoculate config file: {"plan": {...FineTunePlan}, "thresholds": {...}}.
int cmd_inoculate(const InoculateArgs& a) {
  inoc::FineTunePlan plan;
  inoc::OutcomeThresholds th;
  if (!a.config.empty()) {
    const json j = read_json_file(a.config);
    inoc::detail::for_each_key(j, "inoculate config", [&](const std::string& k, const json& v) {
      if (k == "plan") plan = inoc::fine_tune_plan_from_json(v);
      else if (k == "thresholds") th = inoc::thresholds_from_json(v);
      else return false;
      return true;
    });
  }
  plan.seed = resolve_seed(plan.seed, a.seed);
  if (!a.sizes.empty()) plan.sizes = a.sizes;
  if (!a.lrs.empty()) plan.lr_grid = a.lrs;
  if (a.epochs) plan.max_epochs = *a.epochs;
  plan.validate();
  th.validate();

  const std::string ckpt_bytes = read_bytes(a.checkpoint);
  const inoc::Checkpoint base = inoc::deserialize_checkpoint(ckpt_bytes);
  const inoc::DatasetBundle original = load_bundle(a.original, false);
  const inoc::DatasetBundle challenge = load_bundle(a.challenge, true);
  const std::string name =
      a.name.empty() ? fs::path(a.challenge).lexically_normal().filename().string() : a.name;

  ordered_json metadata;
  metadata["challenge_name"] = name;
  metadata["model_digest"] = inoc::digest(std::string_view(ckpt_bytes));
  metadata["plan_digest"] = inoc::digest(inoc::fine_tune_plan_to_json(plan));
  metadata["datasets"] = {{"original_dev", split_digest(original.dev)},
                          {"original_test", split_digest(original.test)},
                          {"challenge_train", split_digest(challenge.train)},
                          {"challenge_dev", split_digest(challenge.dev)},
                          {"challenge_test", split_digest(challenge.test)}};
  metadata["plan"] = inoc::fine_tune_plan_to_json(plan);
  metadata["thresholds"] = inoc::thresholds_to_json(th);
  const std::string run_id = inoc::digest(metadata);
  metadata["run_id"] = run_id;

  const fs::path run_dir = fs::path(a.out) / run_id;
  fs::create_directories(run_dir);
  inoc::SweepOptions opts;
  opts.jobs = a.jobs == 0 ? std::max(1u, std::thread::hardware_concurrency()) : a.jobs;
  opts.run_dir = run_dir;
  opts.thresholds = th;
  opts.challenge_name = name;
  const inoc::InoculationReport report =
      inoc::run_protocol(base, original, challenge, plan, opts);

  write_text(run_dir / "report.json", inoc::report_to_json(report, metadata).dump(2) + "\n");
  inoc::emit_csv(report, (run_dir / "curve.csv").string());
  const std::string table = inoc::summarize({report});
  write_text(run_dir / "summary.txt", table);
  std::cout << table << "run directory: " << run_dir.string() << '\n';
  return 0;
}

// ----------------------------------------------------------- baseline

int cmd_baseline(const std::string& path) {
  const inoc::DatasetSplit split = inoc::load_jsonl(path);
  if (split.empty()) throw inoc::DataError("split '" + path + "' is empty");
  const inoc::BaselineStats s = inoc::run_baseline(split);
  // Percentages are truncated, not rounded, to two decimals: 6233/7596 is
  // reported as 82.05%.
  const std::size_t basis_points =
      s.total() == 0 ? 0 : s.total_correct() * 10000 / s.total();
  std::printf("%zu correct / %zu (%zu.%02zu%%)\n", s.total_correct(), s.total(),
              basis_points / 100, basis_points % 100);
  static constexpr const char* kRules[] = {
      "rule 1 (no comparative -> contradiction)",
      "rule 2 (comparative in hypothesis -> neutral)",
      "rule 3 (comparative in premise -> entailment)"};
  for (std::size_t r = 0; r < 3; ++r) {
    std::printf("%s: %zu correct, %zu wrong\n", kRules[r], s.correct[r], s.wrong[r]);
  }
  return 0;
}

int guarded(const char* stage, const std::function<int()>& body) {
  try {
    return body();
  } catch (const inoc::ConfigError& e) {
    std::cerr << "inoc " << stage << ": configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const inoc::DataError& e) {
    std::cerr << "inoc " << stage << ": data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "inoc " << stage << ": runtime error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Inoculation-by-fine-tuning harness"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* g = app.add_subcommand("gen", "Generate synthetic datasets");
  g->add_option("--kind", gen.kind, "original | single_label | numeric")
      ->check(CLI::IsMember({"original", "single_label", "numeric"}))
      ->capture_default_str();
  g->add_option("--config", gen.config,
                "JSON config (SynthConfig keys; numeric: NumericCategoryCounts keys + seed)");
  g->add_option("--out", gen.out, "Output directory")->required();
  g->add_option("--seed", gen.seed, "Seed (overrides config and INOC_SEED)");
  g->add_option("--train", gen.train, "Train split size");
  g->add_option("--dev", gen.dev, "Dev split size");
  g->add_option("--test", gen.test, "Test split size");
  g->add_option("--label", gen.label, "Label for --kind single_label")->capture_default_str();
  g->add_option("--split-train", gen.split_train, "Numeric: fine-tuning examples")
      ->capture_default_str();
  g->add_option("--split-dev", gen.split_dev, "Numeric: dev examples carved from the rest")
      ->capture_default_str();

  ChallengeArgs ch;
  auto* c = app.add_subcommand("challenge", "Build a challenge bundle from an original bundle");
  c->add_option("--source", ch.source, "Original bundle directory")->required();
  c->add_option("--transform", ch.transform,
                "word_overlap | negation | spelling_error | length_mismatch | distractor")
      ->required();
  c->add_option("--out", ch.out, "Output directory")->required();
  c->add_option("--train-size", ch.train_size, "Challenge train pool size")
      ->capture_default_str();
  c->add_option("--seed", ch.seed, "Seed (overrides INOC_SEED)");
  c->add_option("--vocab-size", ch.vocab_size, "Distractor replacement vocabulary")
      ->capture_default_str();

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Pretrain a model on an original bundle");
  t->add_option("--data", tr.data, "Bundle directory with train/dev/test.jsonl")->required();
  t->add_option("--config", tr.config, "JSON {\"train\": {...}, \"features\": {...}}");
  t->add_option("--out", tr.out, "Checkpoint path")->required();
  t->add_option("--history", tr.history, "Write the epoch history as JSON Lines");
  t->add_option("--seed", tr.seed, "Seed (overrides config and INOC_SEED)");
  t->add_option("--lr", tr.lr, "Initial learning rate");
  t->add_option("--l2", tr.l2, "L2 strength");
  t->add_option("--epochs", tr.epochs, "Maximum epochs");
  t->add_option("--batch-size", tr.batch_size, "Minibatch size");
  t->add_option("--patience", tr.patience, "Early-stopping patience");
  t->add_option("--hidden", tr.hidden, "Hidden tanh units (0 = linear)");
  t->add_option("--hash-dim", tr.hash_dim, "Feature hash dimension");
  t->add_option("--char-ngrams", tr.char_ngrams, "Enable character n-gram features (true/false)");

  InoculateArgs in;
  auto* i = app.add_subcommand("inoculate", "Run the fine-tuning sweep and classify the outcome");
  i->add_option("--checkpoint", in.checkpoint, "Pretrained checkpoint")->required();
  i->add_option("--original", in.original, "Original bundle directory (dev/test)")->required();
  i->add_option("--challenge", in.challenge, "Challenge bundle directory")->required();
  i->add_option("--config", in.config, "JSON {\"plan\": {...}, \"thresholds\": {...}}");
  i->add_option("--out", in.out, "Root for run directories")->required();
  i->add_option("--name", in.name, "Challenge name (default: challenge directory name)");
  i->add_option("--seed", in.seed, "Plan seed (overrides config and INOC_SEED)");
  i->add_option("--sizes", in.sizes, "Fine-tuning sizes, ascending")->delimiter(',');
  i->add_option("--lrs", in.lrs, "Learning-rate grid")->delimiter(',');
  i->add_option("--epochs", in.epochs, "Maximum epochs per run");
  i->add_option("--jobs", in.jobs, "Worker threads (0 = logical cores)")->capture_default_str();

  std::string baseline_path;
  auto* b = app.add_subcommand("baseline", "Three-rule baseline over a numeric split");
  b->add_option("--data", baseline_path, "JSONL split")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  if (g->parsed()) return guarded("gen", [&] { return cmd_gen(gen); });
  if (c->parsed()) return guarded("challenge", [&] { return cmd_challenge(ch); });
  if (t->parsed()) return guarded("train", [&] { return cmd_train(tr); });
  if (i->parsed()) return guarded("inoculate", [&] { return cmd_inoculate(in); });
  if (b->parsed()) return guarded("baseline", [&] { return cmd_baseline(baseline_path); });
  return kExitConfig;
}
