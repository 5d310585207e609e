#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "mmf/autodiff.hpp"
#include "mmf/data.hpp"
#include "mmf/init.hpp"
#include "mmf/tensor.hpp"

namespace mmf {

/// Per-modality sub-embedding network. Like the fusion layers, forward has a
/// pure route and a taped route that run the same kernels in the same order.
class Encoder {
 public:
  virtual ~Encoder() = default;
  virtual std::size_t output_dim() const = 0;
  virtual Tensor forward(const ModalityValue& input) const = 0;
  virtual Tape::ValueId forward(Tape& tape, const ModalityValue& input) = 0;
  virtual std::vector<Parameter*> parameters() = 0;
  virtual bool recurrent() const { return false; }
  virtual const char* kind() const = 0;
};

inline const Tensor& expect_vector_input(const ModalityValue& input, const char* enc) {
  const Tensor* v = std::get_if<Tensor>(&input);
  if (v == nullptr)
    throw std::invalid_argument(std::string(enc) +
                                " expects a fixed-length vector modality");
  return *v;
}

inline const std::vector<Tensor>& expect_sequence_input(const ModalityValue& input,
                                                        const char* enc) {
  const auto* seq = std::get_if<std::vector<Tensor>>(&input);
  if (seq == nullptr)
    throw std::invalid_argument(std::string(enc) + " expects a sequence modality");
  if (seq->empty())
    throw std::invalid_argument(std::string(enc) + ": empty sequence");
  for (const Tensor& step : *seq)
    if (step.order() != 1 || step.size() != seq->front().size())
      throw ShapeError(std::string(enc) + ": ragged or non-vector sequence steps");
  return *seq;
}

/// Two linear maps with a ReLU between them.
class MlpEncoder : public Encoder {
 public:
  MlpEncoder(const std::string& prefix, std::size_t in_dim, std::size_t hidden_dim,
             std::size_t out_dim, std::uint64_t seed)
      : w1_(prefix + ".layer1.weight", Tensor()),
        b1_(prefix + ".layer1.bias", Tensor(Shape({hidden_dim}))),
        w2_(prefix + ".layer2.weight", Tensor()),
        b2_(prefix + ".layer2.bias", Tensor(Shape({out_dim}))) {
    Rng r1(seed, 0), r2(seed, 1);
    w1_.value = uniform_init(Shape({hidden_dim, in_dim}), in_dim, hidden_dim, r1);
    w1_.grad = Tensor(w1_.value.shape());
    w2_.value = uniform_init(Shape({out_dim, hidden_dim}), hidden_dim, out_dim, r2);
    w2_.grad = Tensor(w2_.value.shape());
  }

  std::size_t output_dim() const override { return b2_.value.size(); }
  const char* kind() const override { return "mlp"; }

  Tensor forward(const ModalityValue& input) const override {
    const Tensor& x = expect_vector_input(input, "mlp encoder");
    const Tensor hidden = relu_map(add(matvec(w1_.value, x), b1_.value));
    return add(matvec(w2_.value, hidden), b2_.value);
  }

  Tape::ValueId forward(Tape& tape, const ModalityValue& input) override {
    const Tensor& x = expect_vector_input(input, "mlp encoder");
    const Tape::ValueId xid = tape.input(x);
    const Tape::ValueId hidden =
        tape.relu(tape.add(tape.matvec(tape.param(w1_), xid), tape.param(b1_)));
    return tape.add(tape.matvec(tape.param(w2_), hidden), tape.param(b2_));
  }

  std::vector<Parameter*> parameters() override { return {&w1_, &b1_, &w2_, &b2_}; }

 private:
  Parameter w1_, b1_, w2_, b2_;
};

/// Single-layer unidirectional LSTM; the embedding is the final hidden state.
/// Gate order: input, forget, output, candidate.
class LstmEncoder : public Encoder {
 public:
  LstmEncoder(const std::string& prefix, std::size_t in_dim, std::size_t hidden_dim,
              std::uint64_t seed)
      : hidden_dim_(hidden_dim) {
    static constexpr const char* gate_names[4] = {"i", "f", "o", "g"};
    for (std::size_t g = 0; g < 4; ++g) {
      Rng rw(seed, 2 * g), ru(seed, 2 * g + 1);
      w_.emplace_back(prefix + ".lstm.w" + gate_names[g],
                      uniform_init(Shape({hidden_dim, in_dim}), in_dim, hidden_dim, rw));
      u_.emplace_back(prefix + ".lstm.u" + gate_names[g],
                      uniform_init(Shape({hidden_dim, hidden_dim}), hidden_dim,
                                   hidden_dim, ru));
      b_.emplace_back(prefix + ".lstm.b" + gate_names[g], Tensor(Shape({hidden_dim})));
    }
  }

  std::size_t output_dim() const override { return hidden_dim_; }
  const char* kind() const override { return "lstm"; }
  bool recurrent() const override { return true; }

  Tensor forward(const ModalityValue& input) const override {
    const auto& seq = expect_sequence_input(input, "lstm encoder");
    Tensor h(Shape({hidden_dim_})), c(Shape({hidden_dim_}));
    for (const Tensor& x : seq) {
      const Tensor ig = sigmoid_map(gate(0, x, h));
      const Tensor fg = sigmoid_map(gate(1, x, h));
      const Tensor og = sigmoid_map(gate(2, x, h));
      const Tensor cand = tanh_map(gate(3, x, h));
      c = add(hadamard(fg, c), hadamard(ig, cand));
      h = hadamard(og, tanh_map(c));
    }
    return h;
  }

  Tape::ValueId forward(Tape& tape, const ModalityValue& input) override {
    const auto& seq = expect_sequence_input(input, "lstm encoder");
    Tape::ValueId h = tape.input(Tensor(Shape({hidden_dim_})));
    Tape::ValueId c = tape.input(Tensor(Shape({hidden_dim_})));
    for (const Tensor& x : seq) {
      const Tape::ValueId xid = tape.input(x);
      const Tape::ValueId ig = tape.sigmoid(gate(tape, 0, xid, h));
      const Tape::ValueId fg = tape.sigmoid(gate(tape, 1, xid, h));
      const Tape::ValueId og = tape.sigmoid(gate(tape, 2, xid, h));
      const Tape::ValueId cand = tape.tanh(gate(tape, 3, xid, h));
      c = tape.add(tape.hadamard(fg, c), tape.hadamard(ig, cand));
      h = tape.hadamard(og, tape.tanh(c));
    }
    return h;
  }

  std::vector<Parameter*> parameters() override {
    std::vector<Parameter*> ps;
    for (std::size_t g = 0; g < 4; ++g) {
      ps.push_back(&w_[g]);
      ps.push_back(&u_[g]);
      ps.push_back(&b_[g]);
    }
    return ps;
  }

 private:
  Tensor gate(std::size_t g, const Tensor& x, const Tensor& h) const {
    return add(add(matvec(w_[g].value, x), matvec(u_[g].value, h)), b_[g].value);
  }
  Tape::ValueId gate(Tape& tape, std::size_t g, Tape::ValueId x, Tape::ValueId h) {
    return tape.add(tape.add(tape.matvec(tape.param(w_[g]), x),
                             tape.matvec(tape.param(u_[g]), h)),
                    tape.param(b_[g]));
  }

  std::size_t hidden_dim_;
  std::vector<Parameter> w_, u_, b_;
};

/// Mean over sequence steps followed by one linear map. The per-coordinate
/// sums run in sorted-value order, so the output is bitwise invariant under
/// any permutation of the steps. Pooling happens before the tape (no
/// parameters upstream of it).
class MeanPoolEncoder : public Encoder {
 public:
  MeanPoolEncoder(const std::string& prefix, std::size_t in_dim, std::size_t out_dim,
                  std::uint64_t seed)
      : proj_(prefix + ".pool.weight", Tensor()),
        bias_(prefix + ".pool.bias", Tensor(Shape({out_dim}))) {
    Rng rng(seed, 0);
    proj_.value = uniform_init(Shape({out_dim, in_dim}), in_dim, out_dim, rng);
    proj_.grad = Tensor(proj_.value.shape());
  }

  std::size_t output_dim() const override { return bias_.value.size(); }
  const char* kind() const override { return "meanpool"; }

  Tensor forward(const ModalityValue& input) const override {
    return add(matvec(proj_.value, pooled(input)), bias_.value);
  }

  Tape::ValueId forward(Tape& tape, const ModalityValue& input) override {
    const Tape::ValueId p = tape.input(pooled(input));
    return tape.add(tape.matvec(tape.param(proj_), p), tape.param(bias_));
  }

  std::vector<Parameter*> parameters() override { return {&proj_, &bias_}; }

 private:
  Tensor pooled(const ModalityValue& input) const {
    const auto& seq = expect_sequence_input(input, "meanpool encoder");
    const std::size_t width = seq.front().size();
    Tensor mean(Shape({width}));
    std::vector<double> column(seq.size());
    for (std::size_t c = 0; c < width; ++c) {
      for (std::size_t t = 0; t < seq.size(); ++t) column[t] = seq[t][c];
      std::sort(column.begin(), column.end());
      double sum = 0.0;
      for (double v : column) sum += v;
      mean[c] = sum / static_cast<double>(seq.size());
    }
    return mean;
  }

  Parameter proj_, bias_;
};

}  // namespace mmf
