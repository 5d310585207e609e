#include <cmath>
#include <memory>
#include <vector>

#include <gtest/gtest.h>

#include "mmf/config.hpp"
#include "mmf/encoders.hpp"
#include "mmf/model.hpp"
#include "mmf/rng.hpp"
#include "mmf/synthetic.hpp"

using namespace mmf;

namespace {

Tensor random_vector(std::size_t n, Rng& rng) {
  Tensor v(Shape({n}));
  for (std::size_t i = 0; i < n; ++i) v[i] = rng.gaussian();
  return v;
}

std::vector<Tensor> random_sequence(std::size_t steps, std::size_t width, Rng& rng) {
  std::vector<Tensor> seq;
  for (std::size_t t = 0; t < steps; ++t) seq.push_back(random_vector(width, rng));
  return seq;
}

double sigmoid_scalar(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

// ---------------- MlpEncoder ----------------

TEST(MlpEncoder, ZeroWeightsGiveZeroEmbedding) {
  MlpEncoder enc("m", 3, 4, 2, 1);
  for (Parameter* p : enc.parameters()) p->value.fill(0.0);
  Rng rng(1);
  const Tensor out = enc.forward(ModalityValue(random_vector(3, rng)));
  for (std::size_t i = 0; i < out.size(); ++i) EXPECT_EQ(out[i], 0.0);
}

TEST(MlpEncoder, IdentityPassThroughInLinearRegime) {
  MlpEncoder enc("m", 2, 2, 2, 1);
  auto params = enc.parameters();
  params[0]->value = identity_matrix(2);  // layer1
  params[1]->value.fill(0.0);
  params[2]->value = identity_matrix(2);  // layer2
  params[3]->value.fill(0.0);
  const Tensor x = Tensor::vector({0.5, 2.0});  // non-negative: ReLU inactive
  const Tensor out = enc.forward(ModalityValue(x));
  EXPECT_DOUBLE_EQ(out[0], 0.5);
  EXPECT_DOUBLE_EQ(out[1], 2.0);
}

TEST(MlpEncoder, MatchesTwoStepLoopOracle) {
  Rng rng(2);
  MlpEncoder enc("m", 4, 5, 3, 7);
  auto params = enc.parameters();
  const Tensor x = random_vector(4, rng);
  const Tensor out = enc.forward(ModalityValue(x));
  std::vector<double> hidden(5);
  for (std::size_t i = 0; i < 5; ++i) {
    double s = params[1]->value[i];
    for (std::size_t j = 0; j < 4; ++j) s += params[0]->value.m(i, j) * x[j];
    hidden[i] = s > 0.0 ? s : 0.0;
  }
  for (std::size_t i = 0; i < 3; ++i) {
    double s = params[3]->value[i];
    for (std::size_t j = 0; j < 5; ++j) s += params[2]->value.m(i, j) * hidden[j];
    EXPECT_NEAR(out[i], s, 1e-12);
  }
}

TEST(MlpEncoder, RejectsWrongInputs) {
  MlpEncoder enc("m", 3, 4, 2, 1);
  Rng rng(3);
  EXPECT_THROW(enc.forward(ModalityValue(random_sequence(2, 3, rng))),
               std::invalid_argument);
  EXPECT_THROW(enc.forward(ModalityValue(random_vector(5, rng))), ShapeError);
}

// ---------------- LstmEncoder ----------------

TEST(LstmEncoder, ZeroWeightClosedForm) {
  // All weights zero: every gate is 0.5 and the candidate is 0, so the
  // hidden state stays exactly 0 for any input sequence.
  LstmEncoder enc("m", 3, 4, 1);
  for (Parameter* p : enc.parameters()) p->value.fill(0.0);
  Rng rng(4);
  const Tensor out = enc.forward(ModalityValue(random_sequence(6, 3, rng)));
  for (std::size_t i = 0; i < out.size(); ++i) EXPECT_EQ(out[i], 0.0);
}

TEST(LstmEncoder, SingleStepMatchesHandComputedCell) {
  LstmEncoder enc("m", 2, 2, 1);
  auto params = enc.parameters();  // wi,ui,bi, wf,uf,bf, wo,uo,bo, wg,ug,bg
  const double fills[12] = {0.1, 0.2, 0.05, -0.1, 0.15, 0.0,
                            0.2, -0.05, 0.1, 0.3, 0.1, -0.2};
  for (std::size_t k = 0; k < 12; ++k) params[k]->value.fill(fills[k]);
  const Tensor x = Tensor::vector({0.5, -1.0});
  const Tensor out = enc.forward(ModalityValue(std::vector<Tensor>{x}));

  const double xs = 0.5 + (-1.0);   // all-equal weights reduce to sums
  const double ig = sigmoid_scalar(0.1 * xs + 0.05);
  const double fg = sigmoid_scalar(-0.1 * xs + 0.0);
  const double og = sigmoid_scalar(0.2 * xs + 0.1);
  const double cand = std::tanh(0.3 * xs + (-0.2));
  const double c1 = fg * 0.0 + ig * cand;
  const double h1 = og * std::tanh(c1);
  for (std::size_t i = 0; i < 2; ++i) EXPECT_NEAR(out[i], h1, 1e-12);
}

TEST(LstmEncoder, GradCheckThroughLengthFiveSequence) {
  Rng rng(5);
  LstmEncoder enc("m", 3, 3, 11);
  const std::vector<Tensor> seq = random_sequence(5, 3, rng);
  const Tensor probe = [&] {
    Tensor w(Shape({3}));
    for (std::size_t i = 0; i < 3; ++i) w[i] = 0.5 + 0.25 * static_cast<double>(i);
    return w;
  }();
  auto loss = [&]() { return dot(enc.forward(ModalityValue(seq)), probe); };
  auto backward_pass = [&]() {
    Tape tape;
    const Tape::ValueId out = enc.forward(tape, ModalityValue(seq));
    tape.backward(out, probe);
  };
  auto params = enc.parameters();
  const GradCheckReport report =
      grad_check(std::span<Parameter* const>(params.data(), params.size()), loss,
                 backward_pass, 1e-5, 1e-4);
  EXPECT_TRUE(report.pass) << report.str();
}

TEST(LstmEncoder, StateNormsStayBounded) {
  // Mirror the cell recurrence (validated against the encoder by the
  // single-step oracle) and check |c_t| <= t and |h_t| < 1.
  Rng rng(6);
  LstmEncoder enc("m", 3, 4, 13);
  auto params = enc.parameters();
  const std::vector<Tensor> seq = random_sequence(8, 3, rng);
  Tensor h(Shape({4})), c(Shape({4}));
  for (std::size_t t = 0; t < seq.size(); ++t) {
    auto gate = [&](std::size_t g) {
      return add(add(matvec(params[3 * g]->value, seq[t]),
                     matvec(params[3 * g + 1]->value, h)),
                 params[3 * g + 2]->value);
    };
    const Tensor ig = sigmoid_map(gate(0));
    const Tensor fg = sigmoid_map(gate(1));
    const Tensor og = sigmoid_map(gate(2));
    const Tensor cand = tanh_map(gate(3));
    c = add(hadamard(fg, c), hadamard(ig, cand));
    h = hadamard(og, tanh_map(c));
    for (std::size_t i = 0; i < 4; ++i) {
      EXPECT_LE(std::fabs(c[i]), static_cast<double>(t + 1));
      EXPECT_LT(std::fabs(h[i]), 1.0);
    }
    // prefix forward agrees with the mirror
    const std::vector<Tensor> prefix(seq.begin(), seq.begin() + t + 1);
    const Tensor enc_h = enc.forward(ModalityValue(prefix));
    for (std::size_t i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(enc_h[i], h[i]);
  }
}

TEST(LstmEncoder, EmptySequenceRejected) {
  LstmEncoder enc("m", 3, 4, 1);
  EXPECT_THROW(enc.forward(ModalityValue(std::vector<Tensor>{})), std::invalid_argument);
}

// ---------------- MeanPoolEncoder ----------------

TEST(MeanPoolEncoder, PermutationLeavesOutputUnchanged) {
  Rng rng(7);
  MeanPoolEncoder enc("m", 3, 2, 17);
  std::vector<Tensor> seq = random_sequence(5, 3, rng);
  const Tensor base = enc.forward(ModalityValue(seq));
  std::reverse(seq.begin(), seq.end());
  const Tensor reversed = enc.forward(ModalityValue(seq));
  std::swap(seq[0], seq[2]);
  const Tensor swapped = enc.forward(ModalityValue(seq));
  for (std::size_t i = 0; i < base.size(); ++i) {
    EXPECT_EQ(base[i], reversed[i]);  // bitwise
    EXPECT_EQ(base[i], swapped[i]);
  }
}

// ---------------- Model ----------------

namespace {

Model small_cf_model(std::uint64_t seed) {
  std::vector<std::unique_ptr<Encoder>> encoders;
  encoders.push_back(std::make_unique<MlpEncoder>("a", 3, 4, 2, seed + 1));
  encoders.push_back(std::make_unique<MlpEncoder>("b", 4, 4, 2, seed + 2));
  auto fusion = std::make_unique<ConcatFusion>(std::vector<std::size_t>{3, 3}, 4,
                                               seed + 3);
  return Model({"a", "b"}, std::move(encoders), std::move(fusion), 1,
               LabelKind::Regression, seed + 4);
}

MultimodalSample two_vector_sample(Rng& rng) {
  MultimodalSample s;
  s.id = "t0";
  s.group_id = "g0";
  s.modalities = {ModalityValue(random_vector(3, rng)),
                  ModalityValue(random_vector(4, rng))};
  s.label = 0.5;
  return s;
}

}  // namespace

TEST(Model, ConstantPathWhenFusionIsZeroed) {
  SyntheticSpec spec;
  const Dataset ds = generate_synthetic(spec, 3, 1);
  ExperimentConfig cfg;
  cfg.use_synthetic = true;
  Model model = build_model(cfg, ds.manifest);
  for (Parameter* p : model.fusion().parameters()) p->value.fill(0.0);
  Parameter* head_bias = model.parameters().back();
  head_bias->value[0] = -1.25;
  for (const MultimodalSample& s : ds.samples)
    EXPECT_DOUBLE_EQ(model.forward(s)[0], -1.25);
}

TEST(Model, CfModelMatchesHandComposedPipeline) {
  Rng rng(8);
  Model model = small_cf_model(31);
  const MultimodalSample s = two_vector_sample(rng);
  const Tensor pred = model.forward(s);

  const Tensor e0 = model.encoder(0).forward(s.modalities[0]);
  const Tensor e1 = model.encoder(1).forward(s.modalities[1]);
  std::vector<Tensor> padded{pad_one(e0), pad_one(e1)};
  const Tensor fused = model.fusion().forward(std::span<const Tensor>(padded));
  auto params = model.parameters();
  Parameter* head_w = params[params.size() - 2];
  Parameter* head_b = params[params.size() - 1];
  const Tensor expected = add(matvec(head_w->value, fused), head_b->value);
  ASSERT_EQ(pred.shape(), expected.shape());
  for (std::size_t i = 0; i < pred.size(); ++i) EXPECT_EQ(pred[i], expected[i]);
}

TEST(Model, TapedForwardMatchesPureBitwise) {
  Rng rng(9);
  Model model = small_cf_model(33);
  const MultimodalSample s = two_vector_sample(rng);
  const Tensor pure = model.forward(s);
  Tape tape;
  const Tape::ValueId out = model.forward(tape, s);
  for (std::size_t i = 0; i < pure.size(); ++i) EXPECT_EQ(pure[i], tape.value(out)[i]);
}

TEST(Model, MissingModalityNamesTheModality) {
  Rng rng(10);
  Model model = small_cf_model(35);
  MultimodalSample s = two_vector_sample(rng);
  s.modalities.pop_back();
  try {
    model.forward(s);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("'b'"), std::string::npos);
  }
}

TEST(Model, MeanPoolStepOrderInvariance) {
  SyntheticSpec spec;
  spec.kinds = {ModalityKind::Vector, ModalityKind::Vector, ModalityKind::Sequence};
  const Dataset ds = generate_synthetic(spec, 2, 3);
  ExperimentConfig cfg;
  cfg.use_synthetic = true;
  Model model = build_model(cfg, ds.manifest);
  MultimodalSample s = ds.samples[0];
  const Tensor before = model.forward(s);
  auto& seq = std::get<std::vector<Tensor>>(s.modalities[2]);
  std::reverse(seq.begin(), seq.end());
  const Tensor after = model.forward(s);
  for (std::size_t i = 0; i < before.size(); ++i) EXPECT_EQ(before[i], after[i]);
}

TEST(Model, FullRankMrrfEqualsDenseTensorFusionModel) {
  // Same encoders and head; fusion B is the dense reconstruction of A.
  Rng rng(11);
  auto make_encoders = [] {
    std::vector<std::unique_ptr<Encoder>> encoders;
    encoders.push_back(std::make_unique<MlpEncoder>("a", 3, 4, 2, 101));
    encoders.push_back(std::make_unique<MlpEncoder>("b", 4, 4, 3, 102));
    return encoders;
  };
  auto mrrf = std::make_unique<MrrfFusion>(std::vector<std::size_t>{3, 4},
                                           std::vector<std::size_t>{3, 4}, 4, 55);
  auto dense = std::make_unique<TensorFusion>(mrrf->reconstruct_dense());
  Model model_a({"a", "b"}, make_encoders(), std::move(mrrf), 1, LabelKind::Regression,
                77);
  Model model_b({"a", "b"}, make_encoders(), std::move(dense), 1, LabelKind::Regression,
                77);
  for (int round = 0; round < 20; ++round) {
    MultimodalSample s = two_vector_sample(rng);
    const Tensor pa = model_a.forward(s);
    const Tensor pb = model_b.forward(s);
    EXPECT_NEAR(pa[0], pb[0], 1e-9);
  }
}

TEST(Model, GradCheckAcrossEncoderKinds) {
  SyntheticSpec spec;
  spec.kinds = {ModalityKind::Vector, ModalityKind::Sequence, ModalityKind::Sequence};
  spec.widths = {4, 3, 3};
  const Dataset ds = generate_synthetic(spec, 2, 7);
  ExperimentConfig cfg;
  cfg.use_synthetic = true;
  cfg.encoder_default.hidden = 3;
  cfg.encoder_default.embedding = 2;
  cfg.fusion_output = 3;
  cfg.encoder_overrides.emplace_back(1, EncoderSpec{"lstm", 3, 2});
  Model model = build_model(cfg, ds.manifest);
  EXPECT_TRUE(model.has_recurrent_encoder());
  const GradCheckReport report = grad_check(model, ds.samples[0], 1e-5, 1e-4);
  EXPECT_TRUE(report.pass) << report.str();
}

TEST(Model, GradCheckNegativeControlFlagsCorruptedParameter) {
  SyntheticSpec spec;
  const Dataset ds = generate_synthetic(spec, 2, 7);
  ExperimentConfig cfg;
  cfg.use_synthetic = true;
  Model model = build_model(cfg, ds.manifest);
  const GradCheckReport report =
      grad_check(model, ds.samples[0], 1e-5, 1e-4, "fusion.core");
  EXPECT_FALSE(report.pass);
  bool flagged = false;
  for (const GradCheckEntry& e : report.entries)
    if (e.param == "fusion.core") flagged = !e.pass;
  EXPECT_TRUE(flagged);
}

// ---------------- losses ----------------

TEST(Losses, RegressionL1) {
  Tensor seed;
  EXPECT_DOUBLE_EQ(loss_and_seed(LabelKind::Regression, Tensor::vector({2.0}), 0.5, seed),
                   1.5);
  EXPECT_EQ(seed[0], 1.0);
  EXPECT_DOUBLE_EQ(loss_and_seed(LabelKind::Regression, Tensor::vector({-1.0}), 0.5, seed),
                   1.5);
  EXPECT_EQ(seed[0], -1.0);
  EXPECT_DOUBLE_EQ(loss_and_seed(LabelKind::Regression, Tensor::vector({0.5}), 0.5, seed),
                   0.0);
  EXPECT_EQ(seed[0], 0.0);
}

TEST(Losses, ClassificationCrossEntropy) {
  const Tensor logits = Tensor::vector({1.0, 2.0, 0.5});
  Tensor seed;
  const double loss = loss_and_seed(LabelKind::Classification, logits, 1.0, seed);
  double denom = 0.0;
  for (std::size_t i = 0; i < 3; ++i) denom += std::exp(logits[i] - 2.0);
  const double p1 = std::exp(0.0) / denom;
  EXPECT_NEAR(loss, -std::log(p1), 1e-12);
  EXPECT_NEAR(seed[1], p1 - 1.0, 1e-12);
  double sum = 0.0;
  for (std::size_t i = 0; i < 3; ++i) sum += seed[i];
  EXPECT_NEAR(sum, -0.0, 1e-12);  // softmax minus one-hot sums to zero
  EXPECT_THROW(loss_and_seed(LabelKind::Classification, logits, 7.0, seed), DataError);
}
