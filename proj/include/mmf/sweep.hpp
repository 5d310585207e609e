#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mmf/config.hpp"
#include "mmf/data.hpp"
#include "mmf/metrics.hpp"
#include "mmf/model.hpp"
#include "mmf/textio.hpp"
#include "mmf/train.hpp"

namespace mmf {

/// One trained point of the per-modality compression sweep.
struct SweepRow {
  std::string modality;
  std::size_t rank = 0;
  std::size_t embedding_size = 0;  // rank + 1: the padded size actually fused
  std::uint64_t seed = 0;
  bool ok = false;
  MetricReport metrics;
  std::size_t param_count = 0;
  std::string error;
};

struct SweepResult {
  std::vector<SweepRow> rows;
};

/// Compresses one modality at a time: for each rank r in the grid and each
/// seed, modality k gets rank r while every other modality keeps its full
/// padded dimension, the model trains from scratch, and test metrics are
/// recorded. Rank is the only varying factor besides seed (no warm starts).
inline SweepResult sweep_modality(const ExperimentConfig& base_cfg,
                                  const Dataset& train_split, const Dataset& val_split,
                                  const Dataset& test_split, std::size_t modality_index,
                                  std::span<const std::size_t> rank_grid,
                                  std::span<const std::uint64_t> seeds) {
  if (base_cfg.fusion != FusionKind::Mrrf)
    throw std::invalid_argument("sweep_modality: fusion kind must be mrrf");
  if (modality_index >= train_split.manifest.modalities.size())
    throw std::invalid_argument("sweep_modality: modality index out of range");
  if (rank_grid.empty()) throw std::invalid_argument("sweep_modality: empty rank grid");
  for (std::size_t r : rank_grid)
    if (r < 1) throw std::invalid_argument("sweep_modality: ranks must be >= 1");
  if (seeds.empty()) throw std::invalid_argument("sweep_modality: no seeds");

  const std::string modality_name =
      train_split.manifest.modalities[modality_index].name;

  SweepResult result;
  for (std::size_t rank : rank_grid) {
    for (std::uint64_t seed : seeds) {
      ExperimentConfig cfg = base_cfg;
      cfg.model_seed = mix_seed({seed, 0xA11CE});
      cfg.train.seed = seed;
      // Full padded dims everywhere except the swept modality.
      cfg.ranks.clear();
      for (std::size_t m = 0; m < train_split.manifest.modalities.size(); ++m) {
        const EncoderSpec spec = encoder_spec_for(cfg, m);
        cfg.ranks.push_back(m == modality_index ? rank : spec.embedding + 1);
      }
      SweepRow row;
      row.modality = modality_name;
      row.rank = rank;
      row.embedding_size = rank + 1;
      row.seed = seed;
      try {
        Model model = build_model(cfg, train_split.manifest);
        row.param_count = model.fusion().param_count();
        train(model, train_split, val_split, cfg.train);
        row.metrics = evaluate(model, test_split);
        row.ok = true;
      } catch (const std::exception& e) {
        row.ok = false;
        row.error = e.what();
      }
      result.rows.push_back(std::move(row));
    }
  }

  std::stable_sort(result.rows.begin(), result.rows.end(),
                   [](const SweepRow& a, const SweepRow& b) {
                     if (a.modality != b.modality) return a.modality < b.modality;
                     if (a.rank != b.rank) return a.rank < b.rank;
                     return a.seed < b.seed;
                   });
  return result;
}

inline std::string sweep_csv(const SweepResult& r) {
  std::string s =
      "modality,rank,embedding_size,seed,status,mae,pearson_corr,acc2,acc7,accuracy,"
      "param_count,error\n";
  for (const SweepRow& row : r.rows) {
    std::string err = row.error;
    for (char& c : err)
      if (c == ',' || c == '\n') c = ';';
    s += row.modality + "," + std::to_string(row.rank) + "," +
         std::to_string(row.embedding_size) + "," + std::to_string(row.seed) + "," +
         (row.ok ? "ok" : "failed") + ",";
    if (row.ok) {
      s += format_double(row.metrics.mae) + ",";
      s += row.metrics.pearson_corr ? format_double(*row.metrics.pearson_corr)
                                    : std::string("undefined");
      s += "," + format_double(row.metrics.acc2) + "," +
           format_double(row.metrics.acc7) + "," +
           format_double(row.metrics.accuracy);
    } else {
      s += ",,,,";
    }
    s += "," + std::to_string(row.param_count) + "," + err + "\n";
  }
  return s;
}

/// Mean ± sample standard deviation over seeds, one row per (modality, rank).
inline std::string sweep_summary_csv(const SweepResult& r) {
  struct Acc {
    std::size_t embedding_size = 0;
    std::vector<double> mae, accuracy;
    std::size_t param_count = 0;
  };
  std::map<std::pair<std::string, std::size_t>, Acc> buckets;
  for (const SweepRow& row : r.rows) {
    if (!row.ok) continue;
    Acc& acc = buckets[{row.modality, row.rank}];
    acc.embedding_size = row.embedding_size;
    acc.param_count = row.param_count;
    acc.mae.push_back(row.metrics.mae);
    acc.accuracy.push_back(row.metrics.accuracy);
  }
  auto mean_of = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
  };
  auto std_of = [&](const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
  };
  std::string s =
      "modality,rank,embedding_size,seeds,mae_mean,mae_std,accuracy_mean,accuracy_std,"
      "param_count\n";
  for (const auto& [key, acc] : buckets) {
    s += key.first + "," + std::to_string(key.second) + "," +
         std::to_string(acc.embedding_size) + "," + std::to_string(acc.mae.size()) +
         "," + format_double(mean_of(acc.mae)) + "," + format_double(std_of(acc.mae)) +
         "," + format_double(mean_of(acc.accuracy)) + "," +
         format_double(std_of(acc.accuracy)) + "," + std::to_string(acc.param_count) +
         "\n";
  }
  return s;
}

}  // namespace mmf
