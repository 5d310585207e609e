#pragma once

#include <cstddef>
#include <iostream>
#include <memory>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mmf/autodiff.hpp"
#include "mmf/init.hpp"
#include "mmf/tensor.hpp"

namespace mmf {

enum class FusionKind { Concat, TensorProduct, LowRank, Mrrf };

inline const char* fusion_kind_name(FusionKind k) {
  switch (k) {
    case FusionKind::Concat: return "cf";
    case FusionKind::TensorProduct: return "tf";
    case FusionKind::LowRank: return "lmf";
    case FusionKind::Mrrf: return "mrrf";
  }
  return "?";
}

inline FusionKind parse_fusion_kind(const std::string& s) {
  if (s == "cf") return FusionKind::Concat;
  if (s == "tf") return FusionKind::TensorProduct;
  if (s == "lmf") return FusionKind::LowRank;
  if (s == "mrrf") return FusionKind::Mrrf;
  throw std::invalid_argument("unknown fusion kind '" + s + "' (expected cf|tf|lmf|mrrf)");
}

/// Common contract of the four fusion layers: M padded modality vectors in,
/// one h-vector out. Forward exists twice — a pure route for evaluation and
/// oracles, and a taped route for training. Both call the same kernels in the
/// same order, so their outputs are bitwise equal.
class FusionLayer {
 public:
  virtual ~FusionLayer() = default;

  virtual FusionKind kind() const = 0;
  virtual Tensor forward(std::span<const Tensor> padded_inputs) const = 0;
  virtual Tape::ValueId forward(Tape& tape,
                                std::span<const Tape::ValueId> padded_inputs) = 0;
  virtual std::vector<Parameter*> parameters() = 0;
  virtual std::size_t param_count() const = 0;

  std::size_t arity() const { return padded_dims_.size(); }
  const std::vector<std::size_t>& padded_dims() const { return padded_dims_; }
  std::size_t output_dim() const { return output_dim_; }

 protected:
  FusionLayer(std::vector<std::size_t> padded_dims, std::size_t h)
      : padded_dims_(std::move(padded_dims)), output_dim_(h) {
    if (padded_dims_.empty()) throw std::invalid_argument("fusion layer: no modalities");
    for (std::size_t d : padded_dims_)
      if (d < 1) throw std::invalid_argument("fusion layer: padded dim must be >= 1");
    if (output_dim_ < 1) throw std::invalid_argument("fusion layer: h must be >= 1");
  }

  void check_inputs(std::span<const Tensor> inputs) const {
    if (inputs.size() != padded_dims_.size())
      throw ShapeError("fusion: expected " + std::to_string(padded_dims_.size()) +
                       " modalities, got " + std::to_string(inputs.size()));
    for (std::size_t m = 0; m < inputs.size(); ++m) {
      if (inputs[m].order() != 1 || inputs[m].size() != padded_dims_[m])
        throw ShapeError("fusion: modality " + std::to_string(m) + " has shape " +
                         inputs[m].shape().str() + ", expected (" +
                         std::to_string(padded_dims_[m]) + ")");
    }
  }

  void check_inputs(Tape& tape, std::span<const Tape::ValueId> inputs) const {
    std::vector<Tensor> vals;
    vals.reserve(inputs.size());
    for (Tape::ValueId id : inputs) vals.push_back(tape.value(id));
    check_inputs(std::span<const Tensor>(vals));
  }

  std::vector<std::size_t> padded_dims_;
  std::size_t output_dim_;
};

/// Concatenation followed by one linear map; the padded constant slots supply
/// the bias.
class ConcatFusion : public FusionLayer {
 public:
  ConcatFusion(std::vector<std::size_t> padded_dims, std::size_t h, std::uint64_t seed)
      : FusionLayer(std::move(padded_dims), h),
        weight_("fusion.weight", Tensor()) {
    const std::size_t total =
        std::accumulate(padded_dims_.begin(), padded_dims_.end(), std::size_t{0});
    Rng rng(seed, 0);
    weight_ = Parameter("fusion.weight",
                        uniform_init(Shape({output_dim_, total}), total, output_dim_, rng));
  }

  FusionKind kind() const override { return FusionKind::Concat; }

  Tensor forward(std::span<const Tensor> inputs) const override {
    check_inputs(inputs);
    return matvec(weight_.value, concat(inputs));
  }

  Tape::ValueId forward(Tape& tape, std::span<const Tape::ValueId> inputs) override {
    check_inputs(tape, inputs);
    return tape.matvec(tape.param(weight_), tape.concat(inputs));
  }

  std::vector<Parameter*> parameters() override { return {&weight_}; }

  std::size_t param_count() const override { return weight_.value.size(); }

  const Parameter& weight() const { return weight_; }
  Parameter& weight() { return weight_; }

 private:
  Parameter weight_;
};

/// Full outer-product fusion: the weight tensor W of shape (h, D_1, ..., D_M)
/// contracted against the fused rank-1 data tensor.
class TensorFusion : public FusionLayer {
 public:
  TensorFusion(std::vector<std::size_t> padded_dims, std::size_t h, std::uint64_t seed)
      : FusionLayer(std::move(padded_dims), h), weight_("fusion.weight", Tensor()) {
    std::vector<std::size_t> wdims;
    wdims.push_back(output_dim_);
    wdims.insert(wdims.end(), padded_dims_.begin(), padded_dims_.end());
    const std::size_t fused = Shape(wdims).numel() / output_dim_;
    Rng rng(seed, 0);
    weight_ = Parameter("fusion.weight",
                        uniform_init(Shape(wdims), fused, output_dim_, rng));
  }

  /// Adopts an explicit weight tensor of shape (h, D_1, ..., D_M).
  explicit TensorFusion(Tensor weight)
      : FusionLayer(modality_dims_of(weight), weight.dim(0)),
        weight_("fusion.weight", std::move(weight)) {}

  FusionKind kind() const override { return FusionKind::TensorProduct; }

  Tensor forward(std::span<const Tensor> inputs) const override {
    check_inputs(inputs);
    const Tensor fused = flatten(outer_product(inputs));
    const Tensor wmat =
        weight_.value.reshaped(Shape({output_dim_, fused.size()}));
    return matvec(wmat, fused);
  }

  Tape::ValueId forward(Tape& tape, std::span<const Tape::ValueId> inputs) override {
    check_inputs(tape, inputs);
    const Tape::ValueId fused = tape.flatten(tape.outer(inputs));
    const Tape::ValueId wmat = tape.param_view(
        weight_, Shape({output_dim_, weight_.value.size() / output_dim_}));
    return tape.matvec(wmat, fused);
  }

  std::vector<Parameter*> parameters() override { return {&weight_}; }

  std::size_t param_count() const override { return weight_.value.size(); }

  const Tensor& weight() const { return weight_.value; }

 private:
  static std::vector<std::size_t> modality_dims_of(const Tensor& w) {
    if (w.order() < 2)
      throw std::invalid_argument("tensor fusion weight must have order >= 2, got " +
                                  w.shape().str());
    return {w.shape().dims().begin() + 1, w.shape().dims().end()};
  }

  Parameter weight_;
};

/// CP-factorized fusion with one shared rank: per-modality factor stacks plus
/// an output factor that absorbs the combination weights.
class LmfFusion : public FusionLayer {
 public:
  LmfFusion(std::vector<std::size_t> padded_dims, std::size_t rank, std::size_t h,
            std::uint64_t seed)
      : FusionLayer(std::move(padded_dims), h),
        rank_(rank),
        output_factor_("fusion.output_factor", Tensor()) {
    if (rank_ < 1) throw std::invalid_argument("lmf: rank must be >= 1");
    for (std::size_t m = 0; m < padded_dims_.size(); ++m) {
      Rng rng(seed, m);
      factors_.emplace_back(
          "fusion.factor" + std::to_string(m),
          uniform_init(Shape({rank_, padded_dims_[m]}), padded_dims_[m], rank_, rng));
    }
    Rng rng(seed, padded_dims_.size());
    output_factor_ = Parameter("fusion.output_factor",
                               uniform_init(Shape({rank_, output_dim_}), rank_,
                                            output_dim_, rng));
  }

  FusionKind kind() const override { return FusionKind::LowRank; }

  Tensor forward(std::span<const Tensor> inputs) const override {
    check_inputs(inputs);
    Tensor prod = matvec(factors_[0].value, inputs[0]);
    for (std::size_t m = 1; m < inputs.size(); ++m)
      prod = hadamard(prod, matvec(factors_[m].value, inputs[m]));
    return matvec_t(output_factor_.value, prod);
  }

  Tape::ValueId forward(Tape& tape, std::span<const Tape::ValueId> inputs) override {
    check_inputs(tape, inputs);
    Tape::ValueId prod = tape.matvec(tape.param(factors_[0]), inputs[0]);
    for (std::size_t m = 1; m < inputs.size(); ++m)
      prod = tape.hadamard(prod, tape.matvec(tape.param(factors_[m]), inputs[m]));
    return tape.matvec_t(tape.param(output_factor_), prod);
  }

  std::vector<Parameter*> parameters() override {
    std::vector<Parameter*> ps;
    for (Parameter& f : factors_) ps.push_back(&f);
    ps.push_back(&output_factor_);
    return ps;
  }

  std::size_t param_count() const override {
    std::size_t n = output_factor_.value.size();
    for (const Parameter& f : factors_) n += f.value.size();
    return n;
  }

  std::size_t rank() const { return rank_; }
  const Tensor& factor(std::size_t m) const { return factors_[m].value; }
  const Tensor& output_factor() const { return output_factor_.value; }

  /// Dense weight by the CP sum: W[a,i_1..i_M] = Σ_j outF(j,a)·∏_m w_m(j,i_m).
  Tensor reconstruct_dense() const {
    std::vector<std::size_t> wdims;
    wdims.push_back(output_dim_);
    wdims.insert(wdims.end(), padded_dims_.begin(), padded_dims_.end());
    Tensor w((Shape(wdims)));
    const std::size_t fused = w.size() / output_dim_;
    for (std::size_t j = 0; j < rank_; ++j) {
      std::vector<Tensor> cols;
      cols.reserve(padded_dims_.size());
      for (std::size_t m = 0; m < padded_dims_.size(); ++m) {
        Tensor col(Shape({padded_dims_[m]}));
        for (std::size_t i = 0; i < padded_dims_[m]; ++i)
          col[i] = factors_[m].value.m(j, i);
        cols.push_back(std::move(col));
      }
      const Tensor rank1 = flatten(outer_product(std::span<const Tensor>(cols)));
      for (std::size_t a = 0; a < output_dim_; ++a) {
        const double lam = output_factor_.value.m(j, a);
        double* dst = w.data() + a * fused;
        for (std::size_t i = 0; i < fused; ++i) dst[i] += lam * rank1[i];
      }
    }
    return w;
  }

 private:
  std::size_t rank_;
  std::vector<Parameter> factors_;
  Parameter output_factor_;
};

/// Tucker-factorized fusion with one rank per modality: factor matrices
/// W_m (D_m × r_m) and a dense non-diagonal core of shape (r_1,...,r_M, h).
/// The forward pass never materializes the (D_1×...×D_M) tensor — each mode
/// contraction against the rank-1 data tensor collapses to a vector
/// projection z_m = W_mᵀ·x_m, and the core is applied as one matrix multiply
/// on the flattened Z.
class MrrfFusion : public FusionLayer {
 public:
  MrrfFusion(std::vector<std::size_t> padded_dims, std::vector<std::size_t> ranks,
             std::size_t h, std::uint64_t seed)
      : FusionLayer(std::move(padded_dims), h), core_("fusion.core", Tensor()) {
    if (ranks.size() != padded_dims_.size())
      throw std::invalid_argument("mrrf: expected " +
                                  std::to_string(padded_dims_.size()) + " ranks, got " +
                                  std::to_string(ranks.size()));
    ranks_ = std::move(ranks);
    for (std::size_t m = 0; m < ranks_.size(); ++m) {
      if (ranks_[m] < 1) throw std::invalid_argument("mrrf: rank must be >= 1");
      if (ranks_[m] > padded_dims_[m]) {
        std::cerr << "mrrf: rank " << ranks_[m] << " for modality " << m
                  << " exceeds padded dim " << padded_dims_[m] << ", clamping\n";
        ranks_[m] = padded_dims_[m];
      }
    }
    for (std::size_t m = 0; m < ranks_.size(); ++m) {
      Rng rng(seed, m);
      factors_.emplace_back("fusion.factor" + std::to_string(m),
                            uniform_init(Shape({padded_dims_[m], ranks_[m]}),
                                         padded_dims_[m], ranks_[m], rng));
    }
    std::vector<std::size_t> cdims = ranks_;
    cdims.push_back(output_dim_);
    const std::size_t rank_prod = Shape(cdims).numel() / output_dim_;
    Rng rng(seed, ranks_.size());
    core_ = Parameter("fusion.core",
                      uniform_init(Shape(cdims), rank_prod, output_dim_, rng));
  }

  /// Builds a layer from explicit factors (D_m × r_m) and core (r_1..r_M, h).
  static MrrfFusion from_parts(std::vector<Tensor> factors, Tensor core) {
    if (factors.empty() || core.order() != factors.size() + 1)
      throw std::invalid_argument("mrrf: core order must be #modalities + 1");
    std::vector<std::size_t> dims, ranks;
    for (std::size_t m = 0; m < factors.size(); ++m) {
      detail::require_matrix(factors[m], "mrrf factor");
      if (factors[m].cols() != core.dim(m))
        throw ShapeError("mrrf: factor " + std::to_string(m) + " has shape " +
                         factors[m].shape().str() + " but core is " +
                         core.shape().str());
      dims.push_back(factors[m].rows());
      ranks.push_back(factors[m].cols());
    }
    MrrfFusion layer(dims, ranks, core.dim(core.order() - 1));
    for (std::size_t m = 0; m < factors.size(); ++m)
      layer.factors_[m].value = std::move(factors[m]);
    layer.core_.value = std::move(core);
    return layer;
  }

  FusionKind kind() const override { return FusionKind::Mrrf; }

  Tensor forward(std::span<const Tensor> inputs) const override {
    check_inputs(inputs);
    std::vector<Tensor> z;
    z.reserve(inputs.size());
    for (std::size_t m = 0; m < inputs.size(); ++m)
      z.push_back(matvec_t(factors_[m].value, inputs[m]));
    const Tensor fused = flatten(outer_product(std::span<const Tensor>(z)));
    const Tensor core_mat =
        core_.value.reshaped(Shape({fused.size(), output_dim_}));
    return matvec_t(core_mat, fused);
  }

  Tape::ValueId forward(Tape& tape, std::span<const Tape::ValueId> inputs) override {
    check_inputs(tape, inputs);
    std::vector<Tape::ValueId> z;
    z.reserve(inputs.size());
    for (std::size_t m = 0; m < inputs.size(); ++m)
      z.push_back(tape.matvec_t(tape.param(factors_[m]), inputs[m]));
    const Tape::ValueId fused =
        tape.flatten(tape.outer(std::span<const Tape::ValueId>(z)));
    const std::size_t rank_prod = core_.value.size() / output_dim_;
    const Tape::ValueId core_mat =
        tape.param_view(core_, Shape({rank_prod, output_dim_}));
    return tape.matvec_t(core_mat, fused);
  }

  std::vector<Parameter*> parameters() override {
    std::vector<Parameter*> ps;
    for (Parameter& f : factors_) ps.push_back(&f);
    ps.push_back(&core_);
    return ps;
  }

  std::size_t param_count() const override {
    std::size_t n = core_.value.size();
    for (const Parameter& f : factors_) n += f.value.size();
    return n;
  }

  const std::vector<std::size_t>& ranks() const { return ranks_; }
  const Tensor& factor(std::size_t m) const { return factors_[m].value; }
  const Tensor& core() const { return core_.value; }

  /// Expands back to the dense weight of shape (h, D_1, ..., D_M): every
  /// modality mode of the core is expanded by its factor; the output mode
  /// passes through unexpanded and is moved to the front.
  Tensor reconstruct_dense() const {
    Tensor t = core_.value;
    for (std::size_t m = 0; m < factors_.size(); ++m)
      t = kmode_product(t, factors_[m].value, m);
    std::vector<std::size_t> wdims;
    wdims.push_back(output_dim_);
    wdims.insert(wdims.end(), padded_dims_.begin(), padded_dims_.end());
    return fold(unfold(t, t.order() - 1), 0, Shape(wdims));
  }

 private:
  MrrfFusion(std::vector<std::size_t> padded_dims, std::vector<std::size_t> ranks,
             std::size_t h)
      : FusionLayer(std::move(padded_dims), h),
        ranks_(std::move(ranks)),
        core_("fusion.core", Tensor()) {
    for (std::size_t m = 0; m < ranks_.size(); ++m)
      factors_.emplace_back("fusion.factor" + std::to_string(m),
                            Tensor(Shape({padded_dims_[m], ranks_[m]})));
    std::vector<std::size_t> cdims = ranks_;
    cdims.push_back(output_dim_);
    core_.value = Tensor(Shape(cdims));
    core_.grad = Tensor(core_.value.shape());
  }

  std::vector<std::size_t> ranks_;
  std::vector<Parameter> factors_;
  Parameter core_;
};

/// Re-expresses a shared-rank CP layer as a Tucker layer whose core is zero
/// off the superdiagonal: core(j,...,j,·) carries the output factor's row j.
/// Forward outputs agree with the source layer.
inline MrrfFusion as_superdiagonal_mrrf(const LmfFusion& lmf) {
  const std::size_t m_count = lmf.padded_dims().size();
  const std::size_t r = lmf.rank();
  const std::size_t h = lmf.output_dim();
  std::vector<Tensor> factors;
  factors.reserve(m_count);
  for (std::size_t m = 0; m < m_count; ++m) factors.push_back(transpose(lmf.factor(m)));
  std::vector<std::size_t> cdims(m_count, r);
  cdims.push_back(h);
  Tensor core((Shape(cdims)));
  for (std::size_t j = 0; j < r; ++j) {
    std::size_t off = 0;
    for (std::size_t m = 0; m < m_count; ++m) off = off * r + j;
    for (std::size_t a = 0; a < h; ++a)
      core[off * h + a] = lmf.output_factor().m(j, a);
  }
  return MrrfFusion::from_parts(std::move(factors), std::move(core));
}

// Closed-form trainable-scalar counts (the complexity analysis the layers
// must realize exactly).
inline std::size_t cf_param_count(std::span<const std::size_t> padded_dims,
                                  std::size_t h) {
  std::size_t s = 0;
  for (std::size_t d : padded_dims) s += d;
  return h * s;
}
inline std::size_t tf_param_count(std::span<const std::size_t> padded_dims,
                                  std::size_t h) {
  std::size_t p = 1;
  for (std::size_t d : padded_dims) p *= d;
  return h * p;
}
inline std::size_t lmf_param_count(std::span<const std::size_t> padded_dims,
                                   std::size_t rank, std::size_t h) {
  std::size_t s = 0;
  for (std::size_t d : padded_dims) s += rank * d;
  return s + rank * h;
}
inline std::size_t mrrf_param_count(std::span<const std::size_t> padded_dims,
                                    std::span<const std::size_t> ranks,
                                    std::size_t h) {
  std::size_t s = 0, p = 1;
  for (std::size_t m = 0; m < padded_dims.size(); ++m) {
    s += padded_dims[m] * ranks[m];
    p *= ranks[m];
  }
  return s + p * h;
}

}  // namespace mmf
