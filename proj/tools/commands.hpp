// Copyright 2026 The photonvae Authors
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

#pragma once

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "photonvae/checkpoint.hpp"
#include "photonvae/dataset_io.hpp"
#include "photonvae/errors.hpp"
#include "photonvae/sampling.hpp"
#include "photonvae/training.hpp"
#include "photonvae/workflows.hpp"

namespace photonvae::cli {

namespace fs = std::filesystem;
using nlohmann::json;

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kPhysics = 2,
  kCheckpointMismatch = 3,
  kDimensionMismatch = 4,
};

/// A required argument is missing; the caller prints usage.
class UsageError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

/// Values given on the command line; unset members fall back to the config.
struct Overrides {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::vector<int>> bin_sizes;
  std::optional<std::vector<double>> efficiencies;
  std::optional<std::string> base_checkpoint;
  bool verbose = false;
};

/// A command's merged configuration together with the output directory.
struct RunContext {
  std::string command;
  json config;
  fs::path out;
  std::uint64_t seed = 0;
  bool verbose = false;

  void log(const std::string& message) const {
    if (verbose) std::cerr << "[" << command << "] " << message << '\n';
  }
};

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path + " is not valid JSON: " + e.what());
  }
}

inline std::optional<std::uint64_t> seed_from_environment() {
  const char* raw = std::getenv("PHOTONVAE_SEED");
  if (raw == nullptr || *raw == '\0') return std::nullopt;
  try {
    std::size_t used = 0;
    const auto value = std::stoull(raw, &used);
    if (used != std::string(raw).size()) throw std::invalid_argument(raw);
    return value;
  } catch (const std::exception&) {
    throw ConfigError(std::string("PHOTONVAE_SEED is not an unsigned integer: ") + raw);
  }
}

/// Seed precedence: flag, then PHOTONVAE_SEED, then the config, then 0.
/// The merged config is written to <out>/<command>.config.json.
inline RunContext prepare(const std::string& command, const Overrides& o) {
  RunContext ctx;
  ctx.command = command;
  ctx.verbose = o.verbose;
  ctx.config = read_json_file(o.config_path);
  if (!ctx.config.is_object()) throw ConfigError("config root must be a JSON object");

  if (o.seed) {
    ctx.config["seed"] = *o.seed;
  } else if (const auto env = seed_from_environment()) {
    ctx.config["seed"] = *env;
  }
  if (o.out) ctx.config["out"] = *o.out;
  if (o.bin_sizes) ctx.config["bin_sizes"] = *o.bin_sizes;
  if (o.efficiencies) ctx.config["efficiencies"] = *o.efficiencies;
  if (o.base_checkpoint) ctx.config["base_checkpoint"] = *o.base_checkpoint;

  try {
    ctx.seed = ctx.config.value("seed", std::uint64_t{0});
    ctx.out = ctx.config.value("out", std::string("out"));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad seed or out: ") + e.what());
  }
  fs::create_directories(ctx.out);
  std::ofstream echo(ctx.out / (command + ".config.json"));
  echo << ctx.config.dump(2) << '\n';
  return ctx;
}

/// Reads a typed value, reporting JSON type errors as configuration errors.
template <typename T>
T config_value(const json& config, const std::string& key, const T& fallback) {
  try {
    return config.contains(key) ? config.at(key).get<T>() : fallback;
  } catch (const json::exception& e) {
    throw ConfigError("config key '" + key + "': " + e.what());
  }
}

inline std::string required_string(const json& config, const std::string& key) {
  if (!config.contains(key)) throw ConfigError("config needs '" + key + "'");
  return config_value<std::string>(config, key, {});
}

inline void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
}

template <typename Writer>
void write_file(const fs::path& path, Writer&& writer) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  writer(out);
}

inline void write_report(const fs::path& path, const ReportTable& table) {
  write_file(path, [&](std::ostream& out) { table.write_csv(out); });
}

/// Dataset plus the feature width recorded in its sidecar, when present.
struct LoadedDataset {
  Dataset data;
  std::optional<int> input_dim;
  json sidecar;
};

inline fs::path sidecar_path(const fs::path& csv) {
  auto p = csv;
  return p.replace_extension(".json");
}

inline LoadedDataset load_dataset(const std::string& path) {
  LoadedDataset out;
  out.data = load_dataset_csv(path);
  const auto side = sidecar_path(path);
  if (fs::exists(side)) {
    out.sidecar = read_json_file(side.string());
    if (out.sidecar.contains("input_dim")) out.input_dim = out.sidecar["input_dim"].get<int>();
  }
  return out;
}

inline void save_dataset(const fs::path& csv, const Dataset& ds, json sidecar) {
  save_dataset_csv(csv.string(), ds);
  write_text(sidecar_path(csv), sidecar.dump(2) + "\n");
}

inline void require_matching_width(int network, std::optional<int> data,
                                   const std::string& what) {
  if (data && *data != network)
    throw DimensionError(what + " has input_dim " + std::to_string(*data) +
                         " but the network expects " + std::to_string(network));
}

inline void emit_summary(json summary) {
  std::cout << summary.dump() << std::endl;
}

// ---------------------------------------------------------------------------

/// gen: one dataset part per (bin size, efficiency) combination, concatenated.
inline int cmd_gen(const Overrides& o) {
  auto ctx = prepare("gen", o);
  DatasetMeta base;
  try {
    base = ctx.config.at("dataset").get<DatasetMeta>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config needs a valid 'dataset' section: ") + e.what());
  }
  base.workers = config_value<unsigned>(ctx.config, "workers", 1);
  const auto bins = config_value(ctx.config, "bin_sizes", std::vector<int>{base.bin_size});
  const auto etas =
      config_value(ctx.config, "efficiencies", std::vector<double>{base.detector.efficiency});
  const int input_dim = config_value(ctx.config, "input_dim", 5);
  if (input_dim != 5 && input_dim != 6) throw ConfigError("input_dim must be 5 or 6");

  Dataset all;
  std::vector<DatasetMeta> parts;
  std::uint64_t index = 0;
  for (int bin : bins) {
    for (double eta : etas) {
      auto meta = base;
      meta.bin_size = bin;
      meta.detector.efficiency = eta;
      meta.seed = derive_seed(ctx.seed, 0x9e4, index++);
      ctx.log("bin " + std::to_string(bin) + " eta " + format_real(eta));
      all.append(generate_dataset(meta));
      parts.push_back(meta);
    }
  }
  auto sidecar = dataset_sidecar(parts, all.size());
  sidecar["input_dim"] = input_dim;
  const auto csv = ctx.out / config_value<std::string>(ctx.config, "name", "dataset.csv");
  save_dataset(csv, all, sidecar);
  emit_summary({{"command", "gen"}, {"rows", all.size()}, {"parts", parts.size()},
                {"dataset", csv.string()}});
  return kOk;
}

namespace detail {

struct TrainingRun {
  VaeModel model;
  TrainResult result;
  Evaluation test;
  std::size_t test_rows = 0;
};

inline TrainingRun fit(const RunContext& ctx, VaeModel model, const LoadedDataset& ds,
                       const TrainConfig& cfg) {
  const double train_fraction = config_value(ctx.config, "train_fraction", 0.8);
  const double val_fraction = config_value(ctx.config, "validation_fraction", 0.1);
  const auto split =
      split_stratified(ds.data, derive_seed(ctx.seed, streams::kSplit, 0), train_fraction,
                       val_fraction);
  const int width = model.spec().input_dim;
  const auto train = make_features(split.train, width);
  const auto val = make_features(split.validation, width);
  const auto test = make_features(split.test, width);
  ctx.log("training on " + std::to_string(train.size()) + " rows");
  auto result = train_model(model, train, val, cfg, derive_seed(ctx.seed, streams::kTrain, 0));
  auto ev = evaluate(model, test);

  json side = ds.sidecar.is_object() ? ds.sidecar : json::object();
  side["rows"] = split.test.size();
  side["input_dim"] = width;
  side["split"] = {{"role", "test"}, {"seed", ctx.seed}};
  save_dataset(ctx.out / "test.csv", split.test, side);
  return {std::move(model), std::move(result), std::move(ev), split.test.size()};
}

inline json training_record(const RunContext& ctx, const TrainConfig& cfg,
                            const TrainResult& r) {
  json j = r;
  j["seed"] = ctx.seed;
  j["config"] = cfg;
  j["command"] = ctx.command;
  return j;
}

inline json summarize(const RunContext& ctx, const TrainingRun& run,
                      const fs::path& checkpoint) {
  json s = {{"command", ctx.command},
            {"checkpoint", checkpoint.string()},
            {"epochs_run", run.result.epochs_run},
            {"best_epoch", run.result.best_epoch},
            {"final_train_loss", run.result.final_train_loss()},
            {"test_rows", run.test_rows},
            {"accuracy", run.test.accuracy}};
  if (std::isfinite(run.result.best_validation_loss))
    s["best_validation_loss"] = run.result.best_validation_loss;
  return s;
}

}  // namespace detail

/// train: split a dataset file, train a fresh model, save checkpoint and test split.
inline int cmd_train(const Overrides& o) {
  auto ctx = prepare("train", o);
  const auto ds = load_dataset(required_string(ctx.config, "dataset"));
  NetworkSpec spec = config_value(ctx.config, "network", NetworkSpec{});
  if (!ctx.config.contains("network") || !ctx.config["network"].contains("input_dim")) {
    if (ds.input_dim) spec.input_dim = *ds.input_dim;
  }
  require_matching_width(spec.input_dim, ds.input_dim, "dataset");
  const auto cfg = config_value(ctx.config, "train", TrainConfig{});
  auto run = detail::fit(ctx, VaeModel(spec, derive_seed(ctx.seed, streams::kInit, 0)), ds,
                         cfg);
  const auto ckpt = ctx.out / "model.ckpt";
  save_checkpoint(ckpt.string(), run.model, detail::training_record(ctx, cfg, run.result));
  emit_summary(detail::summarize(ctx, run, ckpt));
  return kOk;
}

/// finetune: continue training a checkpoint on another dataset.
inline int cmd_finetune(const Overrides& o) {
  auto ctx = prepare("finetune", o);
  if (!ctx.config.contains("base_checkpoint"))
    throw UsageError("finetune requires --base-checkpoint PATH");
  auto base = load_checkpoint(required_string(ctx.config, "base_checkpoint"));
  const auto ds = load_dataset(required_string(ctx.config, "dataset"));
  require_matching_width(base.model.spec().input_dim, ds.input_dim, "dataset");
  const auto cfg = config_value(ctx.config, "train", TrainConfig{50});
  auto run = detail::fit(ctx, std::move(base.model), ds, cfg);
  const auto ckpt = ctx.out / "model.ckpt";
  auto record = detail::training_record(ctx, cfg, run.result);
  record["base"] = base.training;
  save_checkpoint(ckpt.string(), run.model, record);
  emit_summary(detail::summarize(ctx, run, ckpt));
  return kOk;
}

/// eval: score a checkpoint on a dataset file, or on freshly generated data
/// for every (bin size, efficiency) combination when either list is given.
inline int cmd_eval(const Overrides& o) {
  auto ctx = prepare("eval", o);
  const auto ckpt = load_checkpoint(required_string(ctx.config, "checkpoint"));
  const auto& model = ckpt.model;
  const int width = model.spec().input_dim;

  ReportTable report;
  report.columns = {"bin_size", "efficiency", "accuracy", "rows"};
  auto confusion = confusion_table({"bin_size", "efficiency"});
  ConfusionMatrix pooled(model.spec().binary() ? 2 : model.spec().num_classes);
  auto record = [&](int bin, double eta, const Evaluation& ev) {
    report.add_row({static_cast<double>(bin), eta, ev.accuracy,
                    static_cast<double>(ev.confusion.total())});
    append_confusion(confusion, {static_cast<double>(bin), eta}, ev.confusion);
    pooled += ev.confusion;
  };

  const bool sweep = ctx.config.contains("bin_sizes") || ctx.config.contains("efficiencies");
  if (!sweep) {
    const auto ds = load_dataset(required_string(ctx.config, "dataset"));
    require_matching_width(width, ds.input_dim, "dataset");
    const auto ev = evaluate(model, make_features(ds.data, width));
    const Sample first = ds.data.rows.empty() ? Sample{} : ds.data.rows.front();
    record(first.obs.bin_size, first.detector.efficiency, ev);
  } else {
    DatasetMeta base;
    if (ctx.config.contains("generate")) {
      base = config_value(ctx.config, "generate", DatasetMeta{});
    } else {
      const auto ds = load_dataset(required_string(ctx.config, "dataset"));
      require_matching_width(width, ds.input_dim, "dataset");
      if (!ds.sidecar.contains("parts") || ds.sidecar["parts"].empty())
        throw ConfigError("eval sweep needs a 'generate' section or a dataset sidecar");
      base = ds.sidecar["parts"][0].get<DatasetMeta>();
    }
    if (ctx.config.contains("input_dim"))
      require_matching_width(width, config_value(ctx.config, "input_dim", width), "config");
    base.bins_per_class = config_value(ctx.config, "bins_per_class", base.bins_per_class);
    base.workers = config_value<unsigned>(ctx.config, "workers", 1);
    const auto bins = config_value(ctx.config, "bin_sizes", std::vector<int>{base.bin_size});
    const auto etas = config_value(ctx.config, "efficiencies",
                                   std::vector<double>{base.detector.efficiency});
    std::uint64_t index = 0;
    for (int bin : bins) {
      for (double eta : etas) {
        auto meta = base;
        meta.bin_size = bin;
        meta.detector.efficiency = eta;
        meta.seed = derive_seed(ctx.seed, streams::kEvalData, index++);
        ctx.log("bin " + std::to_string(bin) + " eta " + format_real(eta));
        record(bin, eta, evaluate(model, make_features(generate_dataset(meta), width)));
      }
    }
  }

  write_report(ctx.out / "report.csv", report);
  write_report(ctx.out / "confusion.csv", confusion);
  emit_summary({{"command", "eval"},
                {"report", (ctx.out / "report.csv").string()},
                {"report_rows", report.rows.size()},
                {"rows", pooled.total()},
                {"accuracy", pooled.accuracy()}});
  return kOk;
}

/// export-latent: latent means of every dataset row as z1,z2,z3,label.
inline int cmd_export_latent(const Overrides& o) {
  auto ctx = prepare("export-latent", o);
  const auto ckpt = load_checkpoint(required_string(ctx.config, "checkpoint"));
  const auto ds = load_dataset(required_string(ctx.config, "dataset"));
  require_matching_width(ckpt.model.spec().input_dim, ds.input_dim, "dataset");
  const auto table = export_latent(ckpt.model, ds.data);
  const auto path = ctx.out / "latent.csv";
  write_file(path, [&](std::ostream& out) { write_latent_csv(out, table); });
  emit_summary({{"command", "export-latent"},
                {"latent", path.string()},
                {"rows", table.labels.size()},
                {"silhouette", silhouette(table.mu, table.labels)}});
  return kOk;
}

/// sweep: run one of the named workflows end to end.
inline int cmd_sweep(const Overrides& o) {
  auto ctx = prepare("sweep", o);
  const auto workflow = required_string(ctx.config, "workflow");
  json plan_json = ctx.config.value("plan", json::object());
  plan_json["seed"] = ctx.seed;
  if (ctx.config.contains("workers")) plan_json["workers"] = ctx.config["workers"];
  json summary = {{"command", "sweep"}, {"workflow", workflow}};

  try {
    if (workflow == "algorithm1") {
      auto plan = plan_json.get<Algorithm1Plan>();
      if (ctx.config.contains("bin_sizes")) plan.bin_sizes = ctx.config["bin_sizes"].get<std::vector<int>>();
      const auto result = run_algorithm1(plan);
      write_report(ctx.out / "report.csv", result.report);
      write_report(ctx.out / "confusion.csv", result.confusion);
      for (const auto& stage : result.stages) {
        const auto name = "model_bin" + std::to_string(stage.bin_size) + ".ckpt";
        save_checkpoint((ctx.out / name).string(), stage.model,
                        {{"seed", ctx.seed}, {"workflow", workflow},
                         {"bin_size", stage.bin_size}, {"fine_tuned", stage.fine_tuned},
                         {"epochs_run", stage.training.epochs_run},
                         {"best_epoch", stage.training.best_epoch}});
      }
      const auto latent = export_latent(result.base_model(), result.base_test);
      write_file(ctx.out / "latent.csv",
                 [&](std::ostream& out) { write_latent_csv(out, latent); });
      json acc = json::object();
      for (const auto& e : result.evaluations)
        acc[std::to_string(e.bin_size)] = e.evaluation.accuracy;
      summary["accuracy"] = acc;
      summary["silhouette"] = silhouette(latent.mu, latent.labels);
    } else if (workflow == "algorithm2") {
      auto plan = plan_json.get<Algorithm2Plan>();
      if (ctx.config.contains("efficiencies")) plan.efficiencies = ctx.config["efficiencies"].get<std::vector<double>>();
      if (ctx.config.contains("bin_sizes")) plan.sweep_bin_sizes = ctx.config["bin_sizes"].get<std::vector<int>>();
      const auto result = run_algorithm2(plan);
      write_report(ctx.out / "report.csv", result.report);
      write_report(ctx.out / "confusion.csv", result.confusion);
      save_checkpoint((ctx.out / "model.ckpt").string(), result.model,
                      {{"seed", ctx.seed}, {"workflow", workflow},
                       {"epochs_run", result.training.epochs_run},
                       {"best_epoch", result.training.best_epoch}});
      json acc = json::object();
      for (const auto& e : result.per_eta) acc[format_real(e.efficiency)] = e.evaluation.accuracy;
      summary["accuracy"] = acc;
    } else if (workflow == "mixed_grid") {
      auto plan = plan_json.get<MixedGridPlan>();
      const auto result = run_mixed_grid(plan);
      write_report(ctx.out / "report.csv", result.report);
      write_report(ctx.out / "confusion.csv", result.confusion);
      save_checkpoint((ctx.out / "model.ckpt").string(), result.model,
                      {{"seed", ctx.seed}, {"workflow", workflow},
                       {"epochs_run", result.training.epochs_run},
                       {"best_epoch", result.training.best_epoch}});
      double lowest = 1.0;
      for (const auto& c : result.cells) lowest = std::min(lowest, c.evaluation.accuracy);
      summary["cells"] = result.cells.size();
      summary["min_accuracy"] = lowest;
    } else {
      throw ConfigError("unknown workflow '" + workflow +
                        "' (expected algorithm1, algorithm2 or mixed_grid)");
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad plan: ") + e.what());
  }
  summary["report"] = (ctx.out / "report.csv").string();
  emit_summary(summary);
  return kOk;
}

}  // namespace photonvae::cli
