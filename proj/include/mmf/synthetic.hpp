#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "mmf/data.hpp"
#include "mmf/rng.hpp"
#include "mmf/tensor.hpp"

namespace mmf {

/// Generator for multimodal data with controllable cross-modal redundancy.
///
/// Each sample draws a common latent z and one unique latent u_m per
/// modality. Modality m observes A_m·(ρ_m·z ⊕ (1−ρ_m)·u_m) + σ·ε: at ρ_m = 1
/// its signal is entirely the shared latent (fully redundant given another
/// ρ=1 modality), at ρ_m = 0 it is entirely private. The label combines the
/// shared latent, the (1−ρ_m)-attenuated private latents, and γ-gated
/// bilinear interactions: a shared-shared term (q1·z)(q2·z) that no purely
/// linear (concat) fusion can express, plus shared-private terms
/// (q1·z)(v_m·u_m) that make a private latent's contribution two-channel —
/// compressing a ρ<1 modality to rank 1 must surrender either its additive
/// or its interactive signal.
struct SyntheticSpec {
  std::size_t latent_dim = 4;
  std::vector<std::string> names = {"acoustic", "visual", "language"};
  std::vector<std::size_t> widths = {6, 6, 6};
  std::vector<ModalityKind> kinds = {ModalityKind::Vector, ModalityKind::Vector,
                                     ModalityKind::Vector};
  std::size_t seq_len = 4;  // steps for sequence modalities
  std::vector<double> rho = {1.0, 1.0, 1.0};
  double gamma = 0.0;        // shared-shared interaction strength (q1·z)(q2·z)
  double gamma_cross = 0.0;  // shared-private interaction strength (q1·z)(v_m·u_m)
  double noise = 0.05;  // σ for features, sequence jitter and label
  LabelKind label_kind = LabelKind::Regression;
  std::size_t class_count = 0;
  std::uint64_t structure_seed = 1;  // loading matrices and label weights

  void validate() const {
    if (latent_dim < 1) throw std::invalid_argument("synthetic: latent_dim must be >= 1");
    const std::size_t m = names.size();
    if (m == 0 || widths.size() != m || kinds.size() != m || rho.size() != m)
      throw std::invalid_argument(
          "synthetic: names/widths/kinds/rho must have the same non-zero length");
    for (double r : rho)
      if (r < 0.0 || r > 1.0)
        throw std::invalid_argument("synthetic: rho must be in [0,1]");
    for (std::size_t w : widths)
      if (w < 1) throw std::invalid_argument("synthetic: widths must be >= 1");
    if (noise < 0.0) throw std::invalid_argument("synthetic: noise must be >= 0");
    if (label_kind == LabelKind::Classification && class_count < 2)
      throw std::invalid_argument("synthetic: classification needs class_count >= 2");
    if (seq_len < 1) throw std::invalid_argument("synthetic: seq_len must be >= 1");
  }
};

namespace detail {

// Fixed magnitudes of the label components; ρ/γ/σ are the experiment knobs.
inline constexpr double kSharedWeightNorm = 0.7;
inline constexpr double kUniqueWeightNorm = 0.8;

inline Tensor unit_gaussian_vector(std::size_t n, Rng& rng, double norm) {
  Tensor v(Shape({n}));
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    v[i] = rng.gaussian();
    s += v[i] * v[i];
  }
  s = std::sqrt(s);
  if (s == 0.0) s = 1.0;
  for (std::size_t i = 0; i < n; ++i) v[i] *= norm / s;
  return v;
}

struct SyntheticStructure {
  std::vector<Tensor> loadings;   // A_m: width × 2L
  Tensor shared_weights;          // w_z, ‖·‖ = kSharedWeightNorm
  std::vector<Tensor> unique_weights;  // w_{u,m}, ‖·‖ = kUniqueWeightNorm
  std::vector<Tensor> cross_weights;   // v_m of the shared-private terms, unit norm
  Tensor q1, q2;                  // unit vectors of the shared-shared term
};

inline SyntheticStructure make_structure(const SyntheticSpec& spec) {
  SyntheticStructure st;
  const std::size_t l = spec.latent_dim;
  for (std::size_t m = 0; m < spec.names.size(); ++m) {
    Rng rng(spec.structure_seed, 10 + m);
    Tensor a(Shape({spec.widths[m], 2 * l}));
    const double scale = 1.0 / std::sqrt(static_cast<double>(2 * l));
    for (std::size_t i = 0; i < a.size(); ++i) a[i] = rng.gaussian() * scale;
    st.loadings.push_back(std::move(a));
  }
  {
    Rng rng(spec.structure_seed, 1);
    st.shared_weights = unit_gaussian_vector(l, rng, kSharedWeightNorm);
  }
  for (std::size_t m = 0; m < spec.names.size(); ++m) {
    Rng rng(spec.structure_seed, 100 + m);
    st.unique_weights.push_back(unit_gaussian_vector(l, rng, kUniqueWeightNorm));
  }
  for (std::size_t m = 0; m < spec.names.size(); ++m) {
    Rng rng(spec.structure_seed, 200 + m);
    st.cross_weights.push_back(unit_gaussian_vector(l, rng, 1.0));
  }
  Rng rng(spec.structure_seed, 2);
  st.q1 = unit_gaussian_vector(l, rng, 1.0);
  st.q2 = unit_gaussian_vector(l, rng, 1.0);
  return st;
}

}  // namespace detail

/// Pure function of (spec, n, seed); per-sample streams are keyed by
/// (seed, sample index) so prefixes are stable when n changes.
inline Dataset generate_synthetic(const SyntheticSpec& spec, std::size_t n,
                                  std::uint64_t seed, std::size_t groups = 20) {
  spec.validate();
  if (n < 1) throw std::invalid_argument("generate_synthetic: n must be >= 1");
  if (groups < 3) groups = 3;

  const detail::SyntheticStructure st = detail::make_structure(spec);
  const std::size_t l = spec.latent_dim;
  const std::size_t m_count = spec.names.size();

  Dataset ds;
  ds.manifest.version = 1;
  for (std::size_t m = 0; m < m_count; ++m)
    ds.manifest.modalities.push_back({spec.names[m], spec.kinds[m], spec.widths[m]});
  ds.manifest.label_kind = spec.label_kind;
  ds.manifest.class_count = spec.class_count;
  ds.manifest.sample_count = n;

  std::vector<double> noiseless_scores(n), scores(n);
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng(seed, i);
    MultimodalSample s;
    char idbuf[24];
    std::snprintf(idbuf, sizeof(idbuf), "s%06zu", i);
    s.id = idbuf;
    std::snprintf(idbuf, sizeof(idbuf), "g%04zu", i % groups);
    s.group_id = idbuf;

    Tensor z(Shape({l}));
    for (std::size_t j = 0; j < l; ++j) z[j] = rng.gaussian();
    std::vector<Tensor> u;
    u.reserve(m_count);
    for (std::size_t m = 0; m < m_count; ++m) {
      Tensor um(Shape({l}));
      for (std::size_t j = 0; j < l; ++j) um[j] = rng.gaussian();
      u.push_back(std::move(um));
    }

    for (std::size_t m = 0; m < m_count; ++m) {
      Tensor signal(Shape({2 * l}));
      for (std::size_t j = 0; j < l; ++j) {
        signal[j] = spec.rho[m] * z[j];
        signal[l + j] = (1.0 - spec.rho[m]) * u[m][j];
      }
      Tensor features = matvec(st.loadings[m], signal);
      for (std::size_t c = 0; c < features.size(); ++c)
        features[c] += spec.noise * rng.gaussian();
      if (spec.kinds[m] == ModalityKind::Vector) {
        s.modalities.push_back(std::move(features));
      } else {
        std::vector<Tensor> seq;
        seq.reserve(spec.seq_len);
        for (std::size_t t = 0; t < spec.seq_len; ++t) {
          Tensor step = features;
          for (std::size_t c = 0; c < step.size(); ++c)
            step[c] += spec.noise * rng.gaussian();
          seq.push_back(std::move(step));
        }
        s.modalities.push_back(std::move(seq));
      }
    }

    double score = dot(st.shared_weights, z);
    const double shared_probe = dot(st.q1, z);
    for (std::size_t m = 0; m < m_count; ++m)
      score += (1.0 - spec.rho[m]) *
               (dot(st.unique_weights[m], u[m]) +
                spec.gamma_cross * shared_probe * dot(st.cross_weights[m], u[m]));
    score += spec.gamma * shared_probe * dot(st.q2, z);
    noiseless_scores[i] = score;
    scores[i] = score + spec.noise * rng.gaussian();
    s.label = scores[i];
    ds.samples.push_back(std::move(s));
  }

  if (spec.label_kind == LabelKind::Classification) {
    // Equal-probability bins of the noiseless score distribution.
    std::vector<double> sorted = noiseless_scores;
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> cuts;
    for (std::size_t k = 1; k < spec.class_count; ++k)
      cuts.push_back(sorted[(k * n) / spec.class_count]);
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t cls = 0;
      while (cls < cuts.size() && scores[i] >= cuts[cls]) ++cls;
      ds.samples[i].label = static_cast<double>(cls);
    }
  }
  return ds;
}

}  // namespace mmf
