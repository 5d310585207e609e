#pragma once

#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mmf/data.hpp"
#include "mmf/errors.hpp"
#include "mmf/model.hpp"
#include "mmf/textio.hpp"

namespace mmf {

inline void require_same_length(std::span<const double> a, std::span<const double> b,
                                const char* what) {
  if (a.size() != b.size())
    throw ShapeError(std::string(what) + ": lengths " + std::to_string(a.size()) +
                     " vs " + std::to_string(b.size()));
}

inline double mae(std::span<const double> pred, std::span<const double> truth) {
  require_same_length(pred, truth, "mae");
  if (pred.empty()) throw std::invalid_argument("mae: empty input");
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) sum += std::fabs(pred[i] - truth[i]);
  return sum / static_cast<double>(pred.size());
}

/// Sample Pearson correlation; nullopt (never NaN) when either side has zero
/// variance.
inline std::optional<double> pearson_corr(std::span<const double> pred,
                                          std::span<const double> truth) {
  require_same_length(pred, truth, "pearson_corr");
  if (pred.size() < 2)
    throw std::invalid_argument("pearson_corr: need at least 2 points");
  const double n = static_cast<double>(pred.size());
  double mp = 0.0, mt = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    mp += pred[i];
    mt += truth[i];
  }
  mp /= n;
  mt /= n;
  double spt = 0.0, spp = 0.0, stt = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double dp = pred[i] - mp;
    const double dt = truth[i] - mt;
    spt += dp * dt;
    spp += dp * dp;
    stt += dt * dt;
  }
  if (spp == 0.0 || stt == 0.0) return std::nullopt;
  return spt / std::sqrt(spp * stt);
}

/// Sign-agreement accuracy. sign(0) counts as positive for predictions;
/// zero truth labels are excluded from the denominator. Empty denominator
/// yields 0.
inline double acc2(std::span<const double> pred, std::span<const double> truth) {
  require_same_length(pred, truth, "acc2");
  std::size_t hits = 0, total = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (truth[i] == 0.0) continue;
    ++total;
    const bool p_pos = pred[i] >= 0.0;
    const bool t_pos = truth[i] > 0.0;
    if (p_pos == t_pos) ++hits;
  }
  return total == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(total);
}

/// 7-bin accuracy on the [−3,3] scale: predictions are rounded half away
/// from zero, clamped, and compared to the integer truth.
inline double acc7(std::span<const double> pred, std::span<const double> truth) {
  require_same_length(pred, truth, "acc7");
  if (pred.empty()) return 0.0;
  auto bin = [](double v) {
    double r = std::round(v);  // round halves away from zero
    if (r > 3.0) r = 3.0;
    if (r < -3.0) r = -3.0;
    return static_cast<long>(r);
  };
  std::size_t hits = 0;
  for (std::size_t i = 0; i < pred.size(); ++i)
    if (bin(pred[i]) == bin(truth[i])) ++hits;
  return static_cast<double>(hits) / static_cast<double>(pred.size());
}

/// 2·P·R/(P+R); 0 when the denominator is 0.
inline double f1(std::span<const int> pred, std::span<const int> truth,
                 int positive_class) {
  if (pred.size() != truth.size())
    throw ShapeError("f1: lengths " + std::to_string(pred.size()) + " vs " +
                     std::to_string(truth.size()));
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool p = pred[i] == positive_class;
    const bool t = truth[i] == positive_class;
    if (p && t) ++tp;
    else if (p && !t) ++fp;
    else if (!p && t) ++fn;
  }
  const double denom = static_cast<double>(2 * tp + fp + fn);
  return denom == 0.0 ? 0.0 : 2.0 * static_cast<double>(tp) / denom;
}

inline double multiclass_accuracy(std::span<const int> pred, std::span<const int> truth) {
  if (pred.size() != truth.size())
    throw ShapeError("accuracy: lengths " + std::to_string(pred.size()) + " vs " +
                     std::to_string(truth.size()));
  if (pred.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < pred.size(); ++i)
    if (pred[i] == truth[i]) ++hits;
  return static_cast<double>(hits) / static_cast<double>(pred.size());
}

struct MetricReport {
  double mae = 0.0;
  std::optional<double> pearson_corr;
  double acc2 = 0.0;
  double acc7 = 0.0;
  double accuracy = 0.0;  // k-class accuracy; equals acc2 for regression tasks
  std::map<int, double> f1_per_class;
};

/// Evaluates a model over a dataset.
///
/// Regression: predictions are the scalar outputs; acc2/acc7/f1 use the
/// sentiment-scale conventions, f1 classes are {0: negative, 1: positive}.
/// Classification: predictions are argmax classes; mae/corr are computed on
/// class indices (ordinal reading) and acc2/acc7 repeat multi-class accuracy.
inline MetricReport evaluate(const Model& model, const Dataset& ds) {
  if (ds.samples.empty()) throw std::invalid_argument("evaluate: empty dataset");
  MetricReport rep;
  if (model.task() == LabelKind::Regression) {
    std::vector<double> pred, truth;
    pred.reserve(ds.size());
    truth.reserve(ds.size());
    for (const MultimodalSample& s : ds.samples) {
      pred.push_back(model.forward(s)[0]);
      truth.push_back(s.label);
    }
    rep.mae = mae(pred, truth);
    rep.pearson_corr = pred.size() >= 2 ? pearson_corr(pred, truth) : std::nullopt;
    rep.acc2 = acc2(pred, truth);
    rep.acc7 = acc7(pred, truth);
    rep.accuracy = rep.acc2;
    std::vector<int> pc, tc;
    for (std::size_t i = 0; i < pred.size(); ++i) {
      if (truth[i] == 0.0) continue;
      pc.push_back(pred[i] >= 0.0 ? 1 : 0);
      tc.push_back(truth[i] > 0.0 ? 1 : 0);
    }
    rep.f1_per_class[0] = f1(pc, tc, 0);
    rep.f1_per_class[1] = f1(pc, tc, 1);
    return rep;
  }

  std::vector<int> pred, truth;
  std::vector<double> predd, truthd;
  pred.reserve(ds.size());
  truth.reserve(ds.size());
  for (const MultimodalSample& s : ds.samples) {
    const Tensor logits = model.forward(s);
    std::size_t best = 0;
    for (std::size_t i = 1; i < logits.size(); ++i)
      if (logits[i] > logits[best]) best = i;
    pred.push_back(static_cast<int>(best));
    truth.push_back(static_cast<int>(s.label + 0.5));
    predd.push_back(static_cast<double>(best));
    truthd.push_back(s.label);
  }
  rep.accuracy = multiclass_accuracy(pred, truth);
  rep.mae = mae(predd, truthd);
  rep.pearson_corr = predd.size() >= 2 ? pearson_corr(predd, truthd) : std::nullopt;
  rep.acc2 = rep.accuracy;
  rep.acc7 = rep.accuracy;
  for (std::size_t c = 0; c < ds.manifest.class_count; ++c)
    rep.f1_per_class[static_cast<int>(c)] = f1(pred, truth, static_cast<int>(c));
  return rep;
}

/// Long-form CSV: header "metric,value", fixed row order. An undefined
/// correlation is written as the literal "undefined".
inline std::string metric_report_csv(const MetricReport& rep) {
  std::string s = "metric,value\n";
  s += "mae," + format_double(rep.mae) + "\n";
  s += "pearson_corr,";
  s += rep.pearson_corr ? format_double(*rep.pearson_corr) : std::string("undefined");
  s += "\n";
  s += "acc2," + format_double(rep.acc2) + "\n";
  s += "acc7," + format_double(rep.acc7) + "\n";
  s += "accuracy," + format_double(rep.accuracy) + "\n";
  for (const auto& [cls, score] : rep.f1_per_class)
    s += "f1_" + std::to_string(cls) + "," + format_double(score) + "\n";
  return s;
}

}  // namespace mmf
