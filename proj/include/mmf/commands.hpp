#pragma once

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <span>
#include <string>
#include <vector>

#include "mmf/checkpoint.hpp"
#include "mmf/config.hpp"
#include "mmf/data.hpp"
#include "mmf/metrics.hpp"
#include "mmf/model.hpp"
#include "mmf/sweep.hpp"
#include "mmf/synthetic.hpp"
#include "mmf/train.hpp"

// Command implementations shared by the CLI binary and the test suites.
// Every artifact they write is deterministic in (config, seeds).

namespace mmf::cmd {

namespace fs = std::filesystem;

inline void write_out(const fs::path& out_dir, const std::string& name,
                      const std::string& content) {
  fs::create_directories(out_dir);
  write_text_file((out_dir / name).string(), content);
}

inline void gen_data(const SyntheticSpec& spec, std::size_t n, std::uint64_t seed,
                     std::size_t groups, const fs::path& out_dir) {
  const Dataset ds = generate_synthetic(spec, n, seed, groups);
  save_dataset(ds, out_dir.string());
}

struct SplitSet {
  Dataset train, val, test;
};

inline SplitSet load_splits(const ExperimentConfig& cfg) {
  const Dataset full = load_experiment_dataset(cfg);
  auto parts = split(full, cfg.split_ratios, cfg.split_seed);
  return {std::move(parts[0]), std::move(parts[1]), std::move(parts[2])};
}

struct TrainOutputs {
  fs::path checkpoint;
  fs::path log_csv;
  TrainResult result;
};

inline TrainOutputs run_train(const ExperimentConfig& cfg, const fs::path& out_dir) {
  const SplitSet splits = load_splits(cfg);
  Model model = build_model(cfg, splits.train.manifest);
  const TrainResult result = train(model, splits.train, splits.val, cfg.train);

  write_out(out_dir, "train_log.csv", train_log_csv(result));
  const std::vector<Parameter*> params = model.parameters();
  std::vector<const Parameter*> cparams(params.begin(), params.end());
  fs::create_directories(out_dir);
  const fs::path ckpt = out_dir / "model.ckpt";
  save_checkpoint(ckpt.string(),
                  std::span<const Parameter* const>(cparams.data(), cparams.size()));
  return {ckpt, out_dir / "train_log.csv", result};
}

inline Dataset pick_split(const SplitSet& splits, const Dataset& full,
                          const std::string& which) {
  if (which == "train") return splits.train;
  if (which == "val") return splits.val;
  if (which == "test") return splits.test;
  if (which == "all") return full;
  throw std::invalid_argument("unknown split '" + which + "' (train|val|test|all)");
}

inline MetricReport run_eval(const ExperimentConfig& cfg, const fs::path& checkpoint,
                             const std::string& which_split, const fs::path& out_dir) {
  const Dataset full = load_experiment_dataset(cfg);
  auto parts = split(full, cfg.split_ratios, cfg.split_seed);
  const SplitSet splits{std::move(parts[0]), std::move(parts[1]), std::move(parts[2])};
  Model model = build_model(cfg, full.manifest);
  const std::vector<Parameter*> params = model.parameters();
  load_checkpoint(checkpoint.string(),
                  std::span<Parameter* const>(params.data(), params.size()));
  const Dataset target = pick_split(splits, full, which_split);
  const MetricReport report = evaluate(model, target);
  write_out(out_dir, "metrics.csv", metric_report_csv(report));
  return report;
}

inline SweepResult run_sweep(const ExperimentConfig& cfg, std::size_t modality_index,
                             std::span<const std::size_t> ranks,
                             std::span<const std::uint64_t> seeds,
                             const fs::path& out_dir) {
  const SplitSet splits = load_splits(cfg);
  const SweepResult result = sweep_modality(cfg, splits.train, splits.val, splits.test,
                                            modality_index, ranks, seeds);
  write_out(out_dir, "sweep.csv", sweep_csv(result));
  write_out(out_dir, "sweep_summary.csv", sweep_summary_csv(result));
  return result;
}

inline GridSpec parse_grid_file(const std::string& path) {
  GridSpec grid;
  const std::vector<std::string> lines = read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string where = path + ":" + std::to_string(i + 1);
    std::string line = lines[i];
    if (auto pos = line.find('#'); pos != std::string::npos) line.resize(pos);
    const std::vector<std::string> toks = tokenize(line);
    if (toks.empty()) continue;
    if (toks.size() < 2) throw ConfigError(where + ": expected 'key value'");
    try {
      if (toks[0] == "lrs") {
        grid.learning_rates = parse_double_list(toks[1], where);
      } else if (toks[0] == "encoder_sizes") {
        grid.encoder_sizes = parse_size_list(toks[1], where);
      } else if (toks[0] == "rank_sets") {
        // semicolon-separated rank vectors: "1,1,1;3,3,3"
        std::string cur;
        auto flush = [&]() {
          if (!cur.empty()) grid.rank_sets.push_back(parse_size_list(cur, where));
          cur.clear();
        };
        for (char c : toks[1]) {
          if (c == ';') flush();
          else cur += c;
        }
        flush();
      } else {
        throw ConfigError(where + ": unknown grid key '" + toks[0] + "'");
      }
    } catch (const DataError& e) {
      throw ConfigError(e.what());
    }
  }
  if (grid.learning_rates.empty()) grid.learning_rates = {1e-3};
  if (grid.encoder_sizes.empty()) grid.encoder_sizes = {4};
  if (grid.rank_sets.empty()) grid.rank_sets = {{}};
  return grid;
}

inline GridSearchResult run_grid(const ExperimentConfig& cfg, const GridSpec& grid,
                                 const fs::path& out_dir) {
  const SplitSet splits = load_splits(cfg);
  const DatasetManifest manifest = splits.train.manifest;
  ModelFactory factory = [&cfg, manifest](const GridPoint& point,
                                          std::uint64_t model_seed) {
    ExperimentConfig point_cfg = cfg;
    point_cfg.encoder_default.embedding = point.encoder_size;
    for (auto& [idx, spec] : point_cfg.encoder_overrides)
      spec.embedding = point.encoder_size;
    point_cfg.ranks = point.ranks;
    point_cfg.model_seed = model_seed;
    return build_model(point_cfg, manifest);
  };
  const GridSearchResult result =
      grid_search(grid, factory, splits.train, splits.val, cfg.train);
  write_out(out_dir, "leaderboard.csv", leaderboard_csv(result));
  return result;
}

inline GradCheckReport run_gradcheck(const ExperimentConfig& cfg, double eps, double tol,
                                     const std::string& corrupt) {
  const SplitSet splits = load_splits(cfg);
  Model model = build_model(cfg, splits.train.manifest);
  if (splits.train.samples.empty())
    throw std::invalid_argument("gradcheck: empty training split");
  return grad_check(model, splits.train.samples.front(), eps, tol, corrupt);
}

}  // namespace mmf::cmd
