#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "mmf/autodiff.hpp"
#include "mmf/data.hpp"
#include "mmf/errors.hpp"
#include "mmf/metrics.hpp"
#include "mmf/model.hpp"
#include "mmf/optim.hpp"
#include "mmf/rng.hpp"
#include "mmf/textio.hpp"

namespace mmf {

enum class SelectionMetric { ValidationMae, ValidationAccuracy };

inline const char* selection_metric_name(SelectionMetric m) {
  return m == SelectionMetric::ValidationMae ? "mae" : "accuracy";
}
inline SelectionMetric parse_selection_metric(const std::string& s) {
  if (s == "mae") return SelectionMetric::ValidationMae;
  if (s == "accuracy") return SelectionMetric::ValidationAccuracy;
  throw std::invalid_argument("unknown selection metric '" + s + "' (mae|accuracy)");
}

struct TrainConfig {
  std::size_t epochs = 50;
  std::size_t batch_size = 32;
  double lr = 1e-3;
  std::uint64_t seed = 1;
  std::size_t patience = 10;
  SelectionMetric selection = SelectionMetric::ValidationMae;
  double clip_norm = 5.0;  // applied only to models with a recurrent encoder

  void validate() const {
    if (epochs < 1) throw std::invalid_argument("train: epochs must be >= 1");
    if (batch_size < 1) throw std::invalid_argument("train: batch size must be >= 1");
    if (!(lr > 0.0)) throw std::invalid_argument("train: lr must be > 0");
  }
};

struct EpochLog {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_metric = 0.0;
};

struct TrainResult {
  std::vector<EpochLog> log;
  std::size_t best_epoch = 0;
  double best_val_metric = 0.0;
};

inline std::string train_log_csv(const TrainResult& r) {
  std::string s = "epoch,train_loss,val_metric\n";
  for (const EpochLog& e : r.log)
    s += std::to_string(e.epoch) + "," + format_double(e.train_loss) + "," +
         format_double(e.val_metric) + "\n";
  return s;
}

namespace detail {

inline bool metric_improved(SelectionMetric sel, double candidate, double best) {
  return sel == SelectionMetric::ValidationMae ? candidate < best : candidate > best;
}

inline double selection_value(SelectionMetric sel, const MetricReport& rep) {
  return sel == SelectionMetric::ValidationMae ? rep.mae : rep.accuracy;
}

inline void fisher_yates(std::vector<std::size_t>& idx, Rng& rng) {
  for (std::size_t i = idx.size(); i-- > 1;) {
    const std::size_t j = static_cast<std::size_t>(rng.next_below(i + 1));
    std::swap(idx[i], idx[j]);
  }
}

}  // namespace detail

/// Epochs of shuffled minibatches with Adam; after each epoch the selection
/// metric is evaluated on the validation split and the best epoch's
/// parameters are retained. Stops early after `patience` epochs without
/// improvement. Batch gradients are means over samples. Fully determined by
/// (seed, config, data): the shuffle stream is keyed by (seed, epoch).
inline TrainResult train(Model& model, const Dataset& train_split,
                         const Dataset& val_split, const TrainConfig& cfg) {
  cfg.validate();
  if (train_split.samples.empty() || val_split.samples.empty())
    throw std::invalid_argument("train: train and validation splits must be non-empty");

  const std::vector<Parameter*> params = model.parameters();
  Adam adam(params, AdamConfig{cfg.lr, 0.9, 0.999, 1e-8});
  const bool clip = model.has_recurrent_encoder();

  TrainResult result;
  std::vector<Tensor> best_values;
  double best = cfg.selection == SelectionMetric::ValidationMae
                    ? std::numeric_limits<double>::infinity()
                    : -std::numeric_limits<double>::infinity();
  std::size_t epochs_without_improvement = 0;

  std::vector<std::size_t> order(train_split.samples.size());
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    Rng shuffle_rng(cfg.seed, 0xE90C, epoch);
    detail::fisher_yates(order, shuffle_rng);

    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      const double inv_batch = 1.0 / static_cast<double>(end - start);
      adam.zero_grads();
      double batch_loss = 0.0;
      for (std::size_t i = start; i < end; ++i) {
        const MultimodalSample& sample = train_split.samples[order[i]];
        Tape tape;
        const Tape::ValueId out = model.forward(tape, sample);
        Tensor seed;
        const double loss =
            loss_and_seed(model.task(), tape.value(out), sample.label, seed);
        batch_loss += loss;
        for (std::size_t k = 0; k < seed.size(); ++k) seed[k] *= inv_batch;
        tape.backward(out, seed);
      }
      epoch_loss += batch_loss;
      batch_loss *= inv_batch;
      if (!std::isfinite(batch_loss))
        throw NumericError("train: non-finite loss at epoch " + std::to_string(epoch) +
                           " (last finite log has " + std::to_string(result.log.size()) +
                           " epochs)");
      if (clip) {
        double sq = 0.0;
        for (Parameter* p : params)
          for (std::size_t k = 0; k < p->grad.size(); ++k) sq += p->grad[k] * p->grad[k];
        const double norm = std::sqrt(sq);
        if (norm > cfg.clip_norm && norm > 0.0) {
          const double s = cfg.clip_norm / norm;
          for (Parameter* p : params)
            for (std::size_t k = 0; k < p->grad.size(); ++k) p->grad[k] *= s;
        }
      }
      adam.step();
    }
    epoch_loss /= static_cast<double>(order.size());

    const MetricReport val_report = evaluate(model, val_split);
    const double val_metric = detail::selection_value(cfg.selection, val_report);
    result.log.push_back({epoch, epoch_loss, val_metric});

    if (detail::metric_improved(cfg.selection, val_metric, best)) {
      best = val_metric;
      result.best_epoch = epoch;
      best_values.clear();
      for (Parameter* p : params) best_values.push_back(p->value);
      epochs_without_improvement = 0;
    } else {
      ++epochs_without_improvement;
      if (epochs_without_improvement > cfg.patience) break;
    }
  }

  if (best_values.size() == params.size())
    for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = best_values[i];
  result.best_val_metric = best;
  return result;
}

// ---------------------------------------------------------------------------
// Hyperparameter grid search
// ---------------------------------------------------------------------------

struct GridSpec {
  std::vector<double> learning_rates;
  std::vector<std::size_t> encoder_sizes;
  std::vector<std::vector<std::size_t>> rank_sets;  // {} entries mean "layer default"

  bool empty() const {
    return learning_rates.empty() || encoder_sizes.empty() || rank_sets.empty();
  }
  std::size_t cardinality() const {
    return learning_rates.size() * encoder_sizes.size() * rank_sets.size();
  }
};

struct GridPoint {
  std::size_t index = 0;  // enumeration order; the deterministic tie-break
  double lr = 0.0;
  std::size_t encoder_size = 0;
  std::vector<std::size_t> ranks;
};

struct LeaderboardEntry {
  GridPoint point;
  bool ok = false;
  double val_metric = 0.0;
  std::size_t best_epoch = 0;
  std::string error;
};

struct GridSearchResult {
  std::vector<LeaderboardEntry> leaderboard;  // ranked best-first; failures last
};

using ModelFactory = std::function<Model(const GridPoint&, std::uint64_t model_seed)>;

/// Trains one model per grid point (enumeration order: lr, then encoder size,
/// then rank set) and ranks by the validation selection metric. Per-point
/// failures become failed leaderboard entries; the search continues.
inline GridSearchResult grid_search(const GridSpec& grid, const ModelFactory& factory,
                                    const Dataset& train_split, const Dataset& val_split,
                                    const TrainConfig& base) {
  if (grid.empty()) throw std::invalid_argument("grid_search: empty grid");
  GridSearchResult result;
  std::size_t index = 0;
  for (double lr : grid.learning_rates)
    for (std::size_t enc : grid.encoder_sizes)
      for (const std::vector<std::size_t>& ranks : grid.rank_sets) {
        GridPoint point{index, lr, enc, ranks};
        LeaderboardEntry entry;
        entry.point = point;
        TrainConfig cfg = base;
        cfg.lr = lr;
        cfg.seed = mix_seed({base.seed, 0x6A1D, index});
        try {
          Model model = factory(point, mix_seed({base.seed, 0x40DE1, index}));
          const TrainResult r = train(model, train_split, val_split, cfg);
          entry.ok = true;
          entry.val_metric = r.best_val_metric;
          entry.best_epoch = r.best_epoch;
        } catch (const std::exception& e) {
          entry.ok = false;
          entry.error = e.what();
          entry.val_metric = base.selection == SelectionMetric::ValidationMae
                                 ? std::numeric_limits<double>::infinity()
                                 : -std::numeric_limits<double>::infinity();
        }
        result.leaderboard.push_back(std::move(entry));
        ++index;
      }

  std::stable_sort(result.leaderboard.begin(), result.leaderboard.end(),
                   [&](const LeaderboardEntry& a, const LeaderboardEntry& b) {
                     if (a.ok != b.ok) return a.ok;
                     if (!a.ok) return false;  // failed entries keep enumeration order
                     return detail::metric_improved(base.selection, a.val_metric,
                                                    b.val_metric);
                   });
  return result;
}

inline std::string leaderboard_csv(const GridSearchResult& r) {
  std::string s = "rank,grid_index,lr,encoder_size,ranks,status,val_metric,best_epoch,error\n";
  for (std::size_t i = 0; i < r.leaderboard.size(); ++i) {
    const LeaderboardEntry& e = r.leaderboard[i];
    std::string ranks;
    for (std::size_t k = 0; k < e.point.ranks.size(); ++k) {
      if (k) ranks += ' ';
      ranks += std::to_string(e.point.ranks[k]);
    }
    std::string err = e.error;
    for (char& c : err)
      if (c == ',' || c == '\n') c = ';';
    s += std::to_string(i + 1) + "," + std::to_string(e.point.index) + "," +
         format_double(e.point.lr) + "," + std::to_string(e.point.encoder_size) + "," +
         ranks + "," + (e.ok ? "ok" : "failed") + "," +
         (e.ok ? format_double(e.val_metric) : std::string("")) + "," +
         std::to_string(e.best_epoch) + "," + err + "\n";
  }
  return s;
}

}  // namespace mmf
