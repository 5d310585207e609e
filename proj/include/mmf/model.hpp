#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "mmf/autodiff.hpp"
#include "mmf/data.hpp"
#include "mmf/encoders.hpp"
#include "mmf/fusion.hpp"
#include "mmf/init.hpp"

namespace mmf {

/// Modality encoders + one fusion layer + linear head. Regression models have
/// output_dim 1; classification models emit one logit per class.
class Model {
 public:
  Model(std::vector<std::string> modality_names,
        std::vector<std::unique_ptr<Encoder>> encoders,
        std::unique_ptr<FusionLayer> fusion, std::size_t output_dim, LabelKind task,
        std::uint64_t head_seed)
      : modality_names_(std::move(modality_names)),
        encoders_(std::move(encoders)),
        fusion_(std::move(fusion)),
        head_weight_("head.weight", Tensor()),
        head_bias_("head.bias", Tensor(Shape({output_dim}))),
        task_(task) {
    if (encoders_.size() != modality_names_.size())
      throw std::invalid_argument("model: one encoder per modality name required");
    if (fusion_->arity() != encoders_.size())
      throw std::invalid_argument("model: fusion arity " +
                                  std::to_string(fusion_->arity()) +
                                  " does not match modality count " +
                                  std::to_string(encoders_.size()));
    for (std::size_t m = 0; m < encoders_.size(); ++m)
      if (encoders_[m]->output_dim() + 1 != fusion_->padded_dims()[m])
        throw std::invalid_argument("model: encoder " + modality_names_[m] +
                                    " emits " +
                                    std::to_string(encoders_[m]->output_dim()) +
                                    " dims but fusion expects padded dim " +
                                    std::to_string(fusion_->padded_dims()[m]));
    if (output_dim < 1) throw std::invalid_argument("model: output_dim must be >= 1");
    Rng rng(head_seed, 0);
    head_weight_.value = uniform_init(Shape({output_dim, fusion_->output_dim()}),
                                      fusion_->output_dim(), output_dim, rng);
    head_weight_.grad = Tensor(head_weight_.value.shape());
  }

  Tensor forward(const MultimodalSample& sample) const {
    std::vector<Tensor> padded;
    padded.reserve(encoders_.size());
    for (std::size_t m = 0; m < encoders_.size(); ++m)
      padded.push_back(pad_one(encoders_[m]->forward(modality(sample, m))));
    const Tensor fused = fusion_->forward(std::span<const Tensor>(padded));
    return add(matvec(head_weight_.value, fused), head_bias_.value);
  }

  Tape::ValueId forward(Tape& tape, const MultimodalSample& sample) {
    std::vector<Tape::ValueId> padded;
    padded.reserve(encoders_.size());
    for (std::size_t m = 0; m < encoders_.size(); ++m)
      padded.push_back(tape.pad_one(encoders_[m]->forward(tape, modality(sample, m))));
    const Tape::ValueId fused =
        fusion_->forward(tape, std::span<const Tape::ValueId>(padded));
    return tape.add(tape.matvec(tape.param(head_weight_), fused),
                    tape.param(head_bias_));
  }

  std::vector<Parameter*> parameters() {
    std::vector<Parameter*> ps;
    for (auto& enc : encoders_)
      for (Parameter* p : enc->parameters()) ps.push_back(p);
    for (Parameter* p : fusion_->parameters()) ps.push_back(p);
    ps.push_back(&head_weight_);
    ps.push_back(&head_bias_);
    return ps;
  }

  bool has_recurrent_encoder() const {
    for (const auto& enc : encoders_)
      if (enc->recurrent()) return true;
    return false;
  }

  LabelKind task() const { return task_; }
  std::size_t output_dim() const { return head_bias_.value.size(); }
  std::size_t modality_count() const { return encoders_.size(); }
  const std::vector<std::string>& modality_names() const { return modality_names_; }
  const FusionLayer& fusion() const { return *fusion_; }
  FusionLayer& fusion() { return *fusion_; }
  const Encoder& encoder(std::size_t m) const { return *encoders_[m]; }

 private:
  const ModalityValue& modality(const MultimodalSample& sample, std::size_t m) const {
    if (m >= sample.modalities.size())
      throw DataError("sample '" + sample.id + "' is missing modality '" +
                      modality_names_[m] + "'");
    return sample.modalities[m];
  }

  std::vector<std::string> modality_names_;
  std::vector<std::unique_ptr<Encoder>> encoders_;
  std::unique_ptr<FusionLayer> fusion_;
  Parameter head_weight_, head_bias_;
  LabelKind task_;
};

/// Training loss at one sample: L1 for regression, softmax cross-entropy for
/// classification. Fills d(loss)/d(prediction) for the backward seed.
inline double loss_and_seed(LabelKind task, const Tensor& pred, double label,
                            Tensor& seed) {
  seed = Tensor(pred.shape());
  if (task == LabelKind::Regression) {
    if (pred.size() != 1)
      throw ShapeError("regression model must emit one output, got " +
                       pred.shape().str());
    const double diff = pred[0] - label;
    seed[0] = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
    return std::fabs(diff);
  }
  const auto cls = static_cast<std::size_t>(label >= 0.0 ? label + 0.5 : 0.0);
  if (cls >= pred.size())
    throw DataError("class label " + std::to_string(cls) +
                    " out of range for model with " + std::to_string(pred.size()) +
                    " outputs");
  double maxv = pred[0];
  for (std::size_t i = 1; i < pred.size(); ++i) maxv = std::max(maxv, pred[i]);
  double denom = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) denom += std::exp(pred[i] - maxv);
  for (std::size_t i = 0; i < pred.size(); ++i)
    seed[i] = std::exp(pred[i] - maxv) / denom;
  const double loss = -std::log(seed[cls] > 0.0 ? seed[cls] : 1e-300);
  seed[cls] -= 1.0;
  return loss;
}

/// Finite-difference check of every model parameter against the taped
/// adjoints, on a smooth quadratic functional of the prediction
/// (0.5·Σ wᵢ(predᵢ − yᵢ)², wᵢ = 1 + i/4). `corrupt` flips one analytic
/// gradient's sign as a negative control.
inline GradCheckReport grad_check(Model& model, const MultimodalSample& sample,
                                  double eps, double tol,
                                  std::string_view corrupt = {}) {
  const std::size_t out_dim = model.output_dim();
  Tensor target(Shape({out_dim}));
  if (model.task() == LabelKind::Regression) {
    target[0] = sample.label;
  } else {
    const auto cls = static_cast<std::size_t>(sample.label + 0.5);
    if (cls < out_dim) target[cls] = 1.0;
  }
  auto weight = [](std::size_t i) { return 1.0 + 0.25 * static_cast<double>(i); };

  auto loss = [&]() {
    const Tensor pred = model.forward(sample);
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
      const double d = pred[i] - target[i];
      acc += 0.5 * weight(i) * d * d;
    }
    return acc;
  };
  auto backward_pass = [&]() {
    Tape tape;
    const Tape::ValueId out = model.forward(tape, sample);
    const Tensor& pred = tape.value(out);
    Tensor seed(pred.shape());
    for (std::size_t i = 0; i < pred.size(); ++i)
      seed[i] = weight(i) * (pred[i] - target[i]);
    tape.backward(out, seed);
  };

  const std::vector<Parameter*> params = model.parameters();
  return mmf::grad_check(std::span<Parameter* const>(params.data(), params.size()),
                         loss, backward_pass, eps, tol, corrupt);
}

}  // namespace mmf
